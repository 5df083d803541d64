#include "locklab/sensor.hpp"

namespace locklab {

namespace {

// splitmix64; fixed algorithm so fingerprint imagery is reproducible
// everywhere (including inside test oracles written against the same spec).
uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

FingerprintImage synth_fingerprint(uint64_t finger_id) {
  FingerprintImage img;
  img.pixels.reserve(FingerprintImage::kPixelBytes);
  uint64_t state = finger_id;
  while (img.pixels.size() < FingerprintImage::kPixelBytes) {
    uint64_t v = splitmix64_next(state);
    for (int b = 0; b < 8; ++b) {
      img.pixels.push_back(static_cast<uint8_t>(v >> (8 * b)));
    }
  }
  return img;
}

Bytes fingerprint_template(const FingerprintImage& image) {
  return crypto::sha256(image.pixels);
}

FingerprintSensor::FingerprintSensor(int device_class, crypto::Key16 wrap_key)
    : class_(device_class), wrap_key_(wrap_key) {}

Status FingerprintSensor::capture(uint64_t finger_id) {
  if (!awake_) return Err::SensorAsleep;
  last_ = synth_fingerprint(finger_id);
  return {};
}

Result<Bytes> FingerprintSensor::image() {
  if (class_ >= 2) return Err::IsolationViolation;
  if (!awake_) return Err::SensorAsleep;
  if (!last_) return Err::NoSuchSlot;
  return last_->pixels;
}

Bytes FingerprintSensor::wrap(ByteView tmpl) const {
  // Two raw AES blocks under the sensor-internal key; 32 bytes in, 32 out.
  Bytes out;
  out.reserve(32);
  for (size_t off = 0; off < 32; off += 16) {
    std::array<uint8_t, 16> block;
    std::memcpy(block.data(), tmpl.data() + off, 16);
    append(out, crypto::aes_block_encrypt(wrap_key_, block));
  }
  return out;
}

Result<Bytes> FingerprintSensor::current_template() {
  if (!awake_) return Err::SensorAsleep;
  if (!last_) return Err::NoSuchSlot;
  Bytes tmpl = fingerprint_template(*last_);
  if (class_ >= 3) return wrap(tmpl);
  return tmpl;
}

Result<int> FingerprintSensor::enroll() {
  if (!awake_) return Err::SensorAsleep;
  if (!last_) return Err::NoSuchSlot;
  if (slots_.size() >= kMaxSlots) return Err::StoreFull;
  Bytes tmpl = fingerprint_template(*last_);
  slots_.push_back(class_ >= 3 ? wrap(tmpl) : tmpl);
  return static_cast<int>(slots_.size() - 1);
}

Result<int> FingerprintSensor::match() {
  if (!awake_) return Err::SensorAsleep;
  if (!last_) return Err::NoSuchSlot;
  Bytes tmpl = fingerprint_template(*last_);
  Bytes probe = class_ >= 3 ? wrap(tmpl) : tmpl;
  for (size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i] == probe) return static_cast<int>(i);
  }
  return Err::AuthFailed;
}

Status FingerprintSensor::delete_slot(int slot) {
  if (slot < 0 || static_cast<size_t>(slot) >= slots_.size()) {
    return Err::NoSuchSlot;
  }
  slots_.erase(slots_.begin() + slot);
  return {};
}

std::vector<Bytes> FingerprintSensor::exported_slots() const { return slots_; }

}  // namespace locklab
