#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "locklab/channel.hpp"
#include "locklab/firmware.hpp"
#include "locklab/profile.hpp"
#include "locklab/sensor.hpp"
#include "locklab/session.hpp"
#include "locklab/wire.hpp"

namespace locklab {

enum class LockState : uint8_t { Factory, Enrolled, SessionActive, DfuMode };
std::string_view lock_state_name(LockState s);

// Commands carried inside sealed ENC_CMD payloads.
enum class LockCmd : uint8_t {
  Unlock = 0x01,
  Bolt = 0x02,
  Status = 0x03,
  EndSession = 0x04,
};

// Sub-opcodes carried inside sealed SENSOR_CMD payloads.
enum class SensorSub : uint8_t {
  Capture = 0x01,      // args: finger_id(8, LE)
  ReadImage = 0x02,    // args: offset(4, LE) -> total(4) || chunk_len(2) || chunk
  ReadTemplate = 0x03, // -> template(32)
  Enroll = 0x04,       // -> slot(1)
  Match = 0x05,        // -> slot(1)
  Delete = 0x06,       // args: slot(1)
};

constexpr size_t kChunkSize = 256;  // ReadImage / DebugDump chunk granularity

struct DeviceIdentity {
  crypto::Serial serial{};
  crypto::Key16 device_key{};
};

struct LockConfig {
  SecurityProfile profile;
  uint64_t rng_seed = 0;
  FwManifest installed_manifest;
  Bytes installed_image;
  crypto::Key16 factory_key = kFactoryKey;
  // Provisioned key material. Absent members disable the corresponding
  // feature regardless of profile (an impostor has no manufacturer keys).
  std::optional<crypto::Key32> cloud_token_key;  // verifies session tokens
  std::optional<crypto::Key32> fw_verify_key;    // verifies signed packages
  std::optional<crypto::Key32> attest_priv;      // signs attestation replies
  BroadcastChannel* broadcast = nullptr;
};

struct TouchOutcome {
  bool sensor_woke = false;
  bool captured = false;
  bool exfiltrated = false;
  bool matched = false;
  bool unlocked = false;
};

// Flash dump layout:
//   "DMP1" || factory_key(16) || has_identity(1) || serial(8) ||
//   device_key(16) || manifest || slot_count(1) || slots(32 each)
struct FlashDump {
  crypto::Key16 factory_key{};
  std::optional<DeviceIdentity> identity;
  FwManifest manifest;
  std::vector<Bytes> slots;
};

Result<FlashDump> parse_flash_dump(ByteView raw);

struct LockTransition {
  LockState from;
  std::string trigger;
  LockState to;
};

// The padlock. Single-threaded; transports serialize access. State machine:
//
//   Factory -------- SESSION_INIT ok ----------------> SessionActive
//   Enrolled ------- SESSION_INIT ok ----------------> SessionActive
//   SessionActive -- FACTORY_ENROLL ok (factory org) -> Enrolled
//   SessionActive -- ENC_CMD end-session ------------> origin state
//   SessionActive -- ENTER_DFU ok (device origin) ---> DfuMode
//   DfuMode -------- DFU_EXECUTE (accept or reject) --> Enrolled
//
// SessionCrypto exists only while state is SessionActive and is discarded on
// every transition out, which is why DFU transfer frames are plaintext.
class Lock {
 public:
  explicit Lock(LockConfig cfg);

  // Radio surface.
  wire::Frame handle_frame(const wire::Frame& request);
  Bytes handle_bytes(ByteView raw);

  // Physical surfaces.
  Result<Bytes> debug_dump();  // UART pads behind the case
  TouchOutcome touch(uint64_t finger_id, bool full_interaction);

  // Test/harness introspection; a production device would expose none of it.
  LockState state() const { return state_; }
  bool bolt_open() const { return bolt_open_; }
  bool tampered() const { return tampered_; }
  const std::optional<DeviceIdentity>& identity() const { return identity_; }
  const FwManifest& firmware() const { return installed_manifest_; }
  const Bytes& firmware_image() const { return installed_image_; }
  size_t enrolled_count() const { return sensor_.enrolled_count(); }
  const SecurityProfile& profile() const { return cfg_.profile; }
  const std::vector<std::string>& events() const { return events_; }

  // The state machine as designed, for exhaustive conformance checks.
  static std::vector<LockTransition> declared_transitions();

 private:
  Result<wire::Frame> dispatch(const wire::Frame& req);
  Result<wire::Frame> on_get_random(const wire::Frame& req);
  Result<wire::Frame> on_session_init(const wire::Frame& req);
  Result<wire::Frame> on_enc_cmd(const wire::Frame& req);
  Result<wire::Frame> on_sensor_cmd(const wire::Frame& req);
  Result<wire::Frame> on_enter_dfu(const wire::Frame& req);
  Result<wire::Frame> on_dfu_data(const wire::Frame& req);
  Result<wire::Frame> on_dfu_execute(const wire::Frame& req);
  Result<wire::Frame> on_debug_dump(const wire::Frame& req);
  Result<wire::Frame> on_factory_enroll(const wire::Frame& req);
  Result<wire::Frame> on_attest(const wire::Frame& req);

  Bytes dump_flash_bytes() const;
  void end_session(LockState next);
  void note(std::string event) { events_.push_back(std::move(event)); }

  LockConfig cfg_;
  DeterministicRng rng_;
  FingerprintSensor sensor_;
  FwManifest installed_manifest_;
  Bytes installed_image_;

  LockState state_ = LockState::Factory;
  LockState session_origin_ = LockState::Factory;
  std::optional<DeviceIdentity> identity_;
  std::optional<crypto::Nonce16> pending_nonce_;
  std::optional<SessionCrypto> session_;
  Bytes dfu_buffer_;
  bool bolt_open_ = false;
  bool tampered_ = false;
  std::vector<std::string> events_;
};

// Direct in-process transport.
class InprocPort : public LockPort {
 public:
  explicit InprocPort(Lock& lock) : lock_(lock) {}
  Result<wire::Frame> transact(const wire::Frame& request) override;

 private:
  Lock& lock_;
  std::mutex mu_;
};

// Runs a transaction and converts ERROR frames into their carried Err.
Result<wire::Frame> transact_ok(LockPort& port, const wire::Frame& request);

}  // namespace locklab
