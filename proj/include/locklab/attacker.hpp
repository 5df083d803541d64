#pragma once

#include <optional>
#include <string>
#include <vector>

#include "locklab/app.hpp"
#include "locklab/cloud.hpp"
#include "locklab/lock.hpp"

namespace locklab {

// Interposed API endpoint. Records everything crossing it, forwards
// faithfully. Whether a client agrees to speak through it is the client's
// pinning policy; the proxy itself is passive.
class CaptureProxy : public CloudTransport {
 public:
  struct Exchange {
    ApiEnvelope request;
    ApiEnvelope response;
  };

  explicit CaptureProxy(CloudTransport* upstream) : upstream_(upstream) {}

  Result<ApiEnvelope> exchange(const ApiEnvelope& request) override {
    auto resp = upstream_->exchange(request);
    if (!resp.ok()) return resp;
    log_.push_back(Exchange{request, resp.value()});
    return resp;
  }
  bool proxied() const override { return true; }

  const std::vector<Exchange>& log() const { return log_; }

 private:
  CloudTransport* upstream_;
  std::vector<Exchange> log_;
};

// Harness-level wiretap: same recording position as CaptureProxy but invisible
// to pinning (it stands in for an observer who already sits behind whatever
// transport protection existed). Used to grant probe setups, never by the
// attacker's own tooling.
class EnvelopeTap : public CloudTransport {
 public:
  explicit EnvelopeTap(CloudTransport* upstream) : upstream_(upstream) {}

  Result<ApiEnvelope> exchange(const ApiEnvelope& request) override {
    auto resp = upstream_->exchange(request);
    if (!resp.ok()) return resp;
    log_.push_back(CaptureProxy::Exchange{request, resp.value()});
    return resp;
  }
  const std::vector<CaptureProxy::Exchange>& log() const { return log_; }

 private:
  CloudTransport* upstream_;
  std::vector<CaptureProxy::Exchange> log_;
};

// Result of running the static key over a captured corpus.
struct TrafficAnalysis {
  struct Transcript {
    std::string route;
    Bytes request_plain;
    Bytes response_plain;  // status byte included
  };
  struct Repeat {
    std::string first;   // "exchange#3 request block 0"
    std::string second;
    std::string block_hex;
  };
  std::vector<Transcript> transcripts;
  std::vector<Repeat> repeats;  // identical ciphertext blocks, pre-decryption
  std::optional<DeviceIdentity> harvested_identity;
  std::optional<crypto::Key16> harvested_session_key;
};

// The adversary. Holds a radio handle to the target lock and an ear on the
// exfiltration broadcast; does not hold cloud credentials (the wireless
// attack chain never touches the vendor API).
class Attacker {
 public:
  Attacker(DeterministicRng rng, LockPort* lock, BroadcastChannel* broadcast);

  // ---- app / API side ----
  // Instrumentation-based pin removal. Fails on hardened builds.
  Result<AppBinaryModel> patch_app_pinning(const AppBinaryModel& original);
  // Static analysis always finds the baked-in key; whether it is useful is a
  // different question.
  crypto::Key16 extract_static_key(const AppBinaryModel& binary) const;
  Result<TrafficAnalysis> decrypt_captured(
      const std::vector<CaptureProxy::Exchange>& corpus,
      const crypto::Key16& key) const;

  // ---- wireless takeover (all computable offline) ----
  Status fetch_nonce();
  Status takeover_session();   // factory-key session against a FACTORY lock
  Status plant_identity();     // FACTORY_ENROLL with attacker-minted identity
  Status device_session();     // session using the known device identity
  void adopt_identity(const DeviceIdentity& id) { identity_ = id; }
  Status unlock_bolt();
  Result<int> enroll_own_finger(uint64_t finger_id);
  Status enter_dfu();
  Bytes forge_droplock_package(const Bytes& image,
                               const std::string& version) const;
  Status push_package(ByteView packed);

  // ---- physical access (device in hand) ----
  Result<FlashDump> dump_flash(Lock& held_device) const;

  // ---- impostor hardware ----
  // A lookalike built for harvesting: touch-wake, class 1 sensor, trojaned
  // firmware, no manufacturer key material.
  LockConfig impostor_config(const Bytes& droplock_image,
                             BroadcastChannel* channel) const;

  // ---- harvesting ----
  std::vector<Bytes> harvest() const;  // broadcast snapshot
  // Broadcast records carry no identity; recovering one means comparing
  // against candidate prints.
  std::optional<uint64_t> identify_victim(
      ByteView image, std::span<const uint64_t> candidates) const;

  const std::optional<DeviceIdentity>& identity() const { return identity_; }
  bool has_session() const { return session_.has_value(); }

 private:
  Status run_session_init(const crypto::Key16& base_key,
                          const crypto::Serial& serial);
  Result<Bytes> sealed_exchange(wire::Op op, ByteView inner);

  mutable DeterministicRng rng_;
  LockPort* lock_;
  BroadcastChannel* broadcast_;
  std::optional<crypto::Nonce16> nonce_;
  std::optional<DeviceIdentity> identity_;
  std::optional<SessionCrypto> session_;
};

}  // namespace locklab
