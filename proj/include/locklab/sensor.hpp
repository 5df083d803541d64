#pragma once

#include <optional>
#include <vector>

#include "locklab/cryptobox.hpp"
#include "locklab/result.hpp"

namespace locklab {

// Synthetic fingerprint imagery. A "finger" is a 64-bit identity; the image
// it produces is a fixed deterministic function of that identity alone, so
// two captures of the same finger are byte-identical anywhere in the testbed.
struct FingerprintImage {
  static constexpr size_t kWidth = 160;
  static constexpr size_t kHeight = 160;
  static constexpr size_t kPixelBytes = kWidth * kHeight;  // 8-bit grayscale

  Bytes pixels;  // kPixelBytes bytes, row-major
};

FingerprintImage synth_fingerprint(uint64_t finger_id);

// Template extraction: a 32-byte digest of the raw image. Matching is exact
// digest equality (the testbed models identity, not biometric fuzziness).
Bytes fingerprint_template(const FingerprintImage& image);

// Capable-device classes, in ascending order of isolation:
//   class 1: host can read raw images and raw templates off the sensor
//   class 2: raw imagery never crosses the host interface; templates do
//   class 3: as class 2, and templates only leave wrapped under a key that
//            never leaves the sensor, so host flash holds no usable biometric
class FingerprintSensor {
 public:
  static constexpr size_t kMaxSlots = 20;

  FingerprintSensor(int device_class, crypto::Key16 wrap_key);

  int device_class() const { return class_; }

  // Power state is controlled by the host (wake-on-touch vs wake-on-button
  // is lock policy, not sensor policy).
  void set_awake(bool awake) { awake_ = awake; }
  bool awake() const { return awake_; }

  // Places a finger on the window. Fails with SensorAsleep when powered down.
  Status capture(uint64_t finger_id);

  // Raw image of the last capture. Class >= 2 refuses before any other check:
  // the isolation boundary exists whether or not a capture is pending.
  Result<Bytes> image();

  // Template of the last capture; class 3 returns it wrapped (32 bytes either
  // way, so callers cannot distinguish by length).
  Result<Bytes> current_template();

  // Stores the last capture's template in the first free slot.
  Result<int> enroll();

  // Compares the last capture against the store; slot index on success.
  Result<int> match();

  Status delete_slot(int slot);
  size_t enrolled_count() const { return slots_.size(); }

  // What the host's flash dump exposes: the slot store as the host sees it
  // (raw templates for class 1; digests-the-host-already-had for class 2;
  // wrapped blobs for class 3).
  std::vector<Bytes> exported_slots() const;

 private:
  Bytes wrap(ByteView tmpl) const;

  int class_;
  crypto::Key16 wrap_key_;
  bool awake_ = false;
  std::optional<FingerprintImage> last_;
  std::vector<Bytes> slots_;  // stored templates (wrapped for class 3)
};

}  // namespace locklab
