#pragma once

#include <optional>
#include <string>

#include "locklab/cloud.hpp"
#include "locklab/lock.hpp"

namespace locklab {

// What static analysis of the shipped app binary yields. The static API key
// is present in every build (legacy); whether it decrypts anything depends on
// the API mode in force. pinning_hardened models a build whose pin cannot be
// stripped by instrumentation.
struct AppBinaryModel {
  crypto::Key16 api_static_key{};
  bool pinning_enforced = true;
  bool pinning_hardened = false;
};

// The vendor app: owns one lock, talks to the cloud for keys and firmware.
// It is a faithful client — every protocol weakness it exercises is the
// ecosystem's, not a bug of this model.
class App {
 public:
  App(std::string account, AppBinaryModel binary, SecurityProfile profile,
      CloudTransport* cloud, LockPort* lock, DeterministicRng rng);

  // Raw API access (status byte checked and stripped). The pinning gate
  // lives here: an enforced pin refuses a proxied transport.
  Result<Bytes> api_call(const std::string& route, ByteView plain_body);

  void set_transport(CloudTransport* t) { cloud_ = t; }
  CloudTransport* transport() const { return cloud_; }
  // Replaces the running build (modeling a re-signed, instrumented client).
  void set_binary(const AppBinaryModel& b) { binary_ = b; }
  const AppBinaryModel& binary() const { return binary_; }
  const std::string& account() const { return account_; }

  // Lifecycle against the owned lock.
  Status register_lock();                 // mint identity, register, enroll
  Status open_session();
  Status end_session();
  Status unlock();
  Status relock();
  Result<int> enroll_finger(uint64_t finger_id);
  Result<int> match_finger(uint64_t finger_id);
  Result<FwMetaInfo> firmware_meta(const std::string& version);
  Status update_firmware(const std::string& version);
  Status enter_dfu_mode();                // activates DFU, ends the session

  bool has_session() const { return lock_session_.has_value(); }
  const std::optional<DeviceIdentity>& lock_identity() const {
    return identity_;
  }
  void adopt_identity(const DeviceIdentity& id) { identity_ = id; }

 private:
  Result<Bytes> sealed_exchange(wire::Op op, ByteView inner);
  Result<crypto::Nonce16> fetch_nonce();
  Status init_session(const crypto::Nonce16& nonce,
                      const SessionKeyGrant& grant);
  Status ensure_api_session();
  Status stream_package(ByteView packed);

  std::string account_;
  AppBinaryModel binary_;
  SecurityProfile profile_;
  CloudTransport* cloud_;
  LockPort* lock_;
  DeterministicRng rng_;

  std::optional<DeviceIdentity> identity_;
  std::optional<SessionCrypto> lock_session_;
  uint64_t api_session_id_ = 0;
  std::optional<SessionCrypto> api_session_;
};

}  // namespace locklab
