#pragma once

#include <map>
#include <string>
#include <vector>

#include "locklab/firmware.hpp"
#include "locklab/profile.hpp"
#include "locklab/session.hpp"

namespace locklab {

// Vendor API envelope:
//   route_len(2, LE) || route || session_id(8, LE) || body_len(4, LE) || body
//
// session_id is 0 for static-key traffic and for /handshake. Bodies are
// encrypted according to the API mode (the transport below the envelope is
// out of scope; this layer models what an on-path observer sees after any
// transport protection is stripped):
//   StaticKey: body = AES-128-ECB(static key, plain)      -- every build
//              shares one key, and equal plaintexts repeat verbatim.
//   DhSession: body = counter(8) || ct || tag(16) under a per-handshake
//              GCM key; AAD is the route's id byte.
// A 1-byte response body is an envelope-level failure carrying an error id.
struct ApiEnvelope {
  std::string route;
  uint64_t session_id = 0;
  Bytes body;
};

Bytes envelope_serialize(const ApiEnvelope& env);
Result<ApiEnvelope> envelope_parse(ByteView raw);

// Route id bytes (GCM AAD binding).
uint8_t route_id(const std::string& route);  // 0xFF for unknown routes

inline constexpr const char* kRouteHandshake = "/handshake";
inline constexpr const char* kRouteRegister = "/register";
inline constexpr const char* kRouteSessionKey = "/session_key";
inline constexpr const char* kRouteFwMeta = "/firmware/meta";
inline constexpr const char* kRouteFwDownload = "/firmware/download";

// ---- Plaintext body shapes ------------------------------------------------
// Requests:
//   /register:          acct_len(2, LE) || acct || serial(8) || device_key(16)
//   /session_key:       acct_len(2, LE) || acct || serial(8) || nonce(16)
//   /firmware/meta:     ver_len(1) || version
//   /firmware/download: ver_len(1) || version
// Responses (after the status byte):
//   /session_key:       serial(8) || device_key(16) || session_key(16) || token(64)
//   /firmware/meta:     ver_len(1) || version || behavior(1) || size(4, LE) ||
//                       digest(32) || integrity(1)
//   /firmware/download: packed update package

Bytes build_register_req(const std::string& account, const crypto::Serial& serial,
                         const crypto::Key16& device_key);
Bytes build_session_key_req(const std::string& account,
                            const crypto::Serial& serial,
                            const crypto::Nonce16& nonce);
Bytes build_version_req(const std::string& version);

// What /session_key hands back: everything needed to speak to the lock. The
// breadth of this grant is deliberate; it is the API overshare under study.
struct SessionKeyGrant {
  crypto::Serial serial{};
  crypto::Key16 device_key{};
  crypto::Key16 session_key{};
  Bytes token;  // 64-byte signature over serial || nonce
};
Result<SessionKeyGrant> parse_session_key_grant(ByteView payload);

struct FwMetaInfo {
  FwManifest manifest;
  Bytes digest;
  FwIntegrity integrity = FwIntegrity::Crc16;
};
Result<FwMetaInfo> parse_fw_meta(ByteView payload);

// ---- The cloud ------------------------------------------------------------

struct CatalogEntry {
  FwManifest manifest;
  Bytes image;
};

struct CloudConfig {
  ApiMode api_mode = ApiMode::StaticKey;
  crypto::Key16 static_key{};
  crypto::Key16 factory_key = kFactoryKey;
  crypto::KeyPair token_keys;       // signs session tokens
  crypto::Key32 fw_signing_priv{};  // signs served packages in Signature mode
  FwIntegrity package_mode = FwIntegrity::Crc16;
  uint64_t rng_seed = 0;
};

class Cloud {
 public:
  Cloud(CloudConfig cfg, std::vector<CatalogEntry> catalog);

  // Total function: every failure is expressed in the response envelope.
  ApiEnvelope handle(const ApiEnvelope& request);

  size_t registry_size() const { return registry_.size(); }
  size_t request_count() const { return requests_; }
  // Digests of every firmware build the vendor publishes (scan reference).
  std::vector<Bytes> published_digests() const;

 private:
  struct Registration {
    std::string account;
    crypto::Key16 device_key{};
  };
  struct DhState {
    SessionCrypto crypto;
  };

  ApiEnvelope fail(const ApiEnvelope& req, Err e) const;
  std::pair<Err, Bytes> route_dispatch(const std::string& route, ByteView plain);
  std::pair<Err, Bytes> on_register(ByteView plain);
  std::pair<Err, Bytes> on_session_key(ByteView plain);
  std::pair<Err, Bytes> on_fw_meta(ByteView plain);
  std::pair<Err, Bytes> on_fw_download(ByteView plain);
  const CatalogEntry* find_version(const std::string& version) const;

  CloudConfig cfg_;
  DeterministicRng rng_;
  std::vector<CatalogEntry> catalog_;
  std::map<crypto::Serial, Registration> registry_;
  std::map<uint64_t, DhState> dh_sessions_;
  uint64_t next_session_id_ = 1;
  size_t requests_ = 0;
};

// Client-side path to the cloud. Pinning inspects proxied(): an enforced
// pin refuses to speak through an interposed endpoint.
class CloudTransport {
 public:
  virtual ~CloudTransport() = default;
  virtual Result<ApiEnvelope> exchange(const ApiEnvelope& request) = 0;
  virtual bool proxied() const { return false; }
};

class DirectCloudTransport : public CloudTransport {
 public:
  explicit DirectCloudTransport(Cloud& cloud) : cloud_(cloud) {}
  Result<ApiEnvelope> exchange(const ApiEnvelope& request) override {
    if (!reachable_) return Err::CloudUnreachable;
    return cloud_.handle(request);
  }
  void set_reachable(bool r) { reachable_ = r; }

 private:
  Cloud& cloud_;
  bool reachable_ = true;
};

}  // namespace locklab
