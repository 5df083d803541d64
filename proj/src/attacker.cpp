#include "locklab/attacker.hpp"

#include <map>

namespace locklab {

Attacker::Attacker(DeterministicRng rng, LockPort* lock,
                   BroadcastChannel* broadcast)
    : rng_(rng), lock_(lock), broadcast_(broadcast) {}

Result<AppBinaryModel> Attacker::patch_app_pinning(
    const AppBinaryModel& original) {
  if (original.pinning_hardened) {
    // The pin validation is inlined and checksummed; hooking it breaks the
    // build rather than bypassing it.
    return Err::PinningBlocked;
  }
  AppBinaryModel patched = original;
  patched.pinning_enforced = false;
  return patched;
}

crypto::Key16 Attacker::extract_static_key(const AppBinaryModel& binary) const {
  return binary.api_static_key;  // sits in the data segment of every build
}

Result<TrafficAnalysis> Attacker::decrypt_captured(
    const std::vector<CaptureProxy::Exchange>& corpus,
    const crypto::Key16& key) const {
  TrafficAnalysis out;

  // Pass 1: ciphertext-level observation. Identical 16-byte blocks anywhere
  // in the corpus are visible without any key at all; they exist exactly
  // because the bodies are ECB.
  std::map<std::string, std::string> first_seen;
  for (size_t i = 0; i < corpus.size(); ++i) {
    auto scan = [&](const Bytes& body, const char* dir) {
      if (body.size() < 16 || body.size() % 16 != 0) return;
      for (size_t b = 0; b + 16 <= body.size(); b += 16) {
        std::string block = to_hex(ByteView(body).subspan(b, 16));
        std::string where = "exchange#" + std::to_string(i) + " " + dir +
                            " block " + std::to_string(b / 16);
        auto it = first_seen.find(block);
        if (it == first_seen.end()) {
          first_seen.emplace(block, where);
        } else {
          out.repeats.push_back({it->second, where, block});
        }
      }
    };
    scan(corpus[i].request.body, "request");
    scan(corpus[i].response.body, "response");
  }

  // Pass 2: decryption with the extracted key.
  for (const auto& exchange : corpus) {
    if (exchange.request.route == kRouteHandshake) continue;  // plaintext
    TrafficAnalysis::Transcript t;
    t.route = exchange.request.route;
    auto req = crypto::ecb_decrypt(key, exchange.request.body);
    if (!req.ok()) return Err::DecryptFailed;
    t.request_plain = req.take();
    if (exchange.response.body.size() == 1) {
      t.response_plain = exchange.response.body;  // envelope-level error
    } else {
      auto resp = crypto::ecb_decrypt(key, exchange.response.body);
      if (!resp.ok()) return Err::DecryptFailed;
      t.response_plain = resp.take();
    }
    if (t.route == kRouteSessionKey && !t.response_plain.empty() &&
        t.response_plain[0] == 0) {
      auto grant = parse_session_key_grant(
          ByteView(t.response_plain).subspan(1));
      if (grant.ok()) {
        DeviceIdentity id;
        id.serial = grant.value().serial;
        id.device_key = grant.value().device_key;
        out.harvested_identity = id;
        out.harvested_session_key = grant.value().session_key;
      }
    }
    out.transcripts.push_back(std::move(t));
  }
  return out;
}

Status Attacker::fetch_nonce() {
  auto resp = transact_ok(*lock_, wire::Frame::request(wire::Op::GetRandom));
  if (!resp.ok()) return resp.error();
  if (resp.value().payload.size() != 16) return Err::BadLength;
  nonce_ = take_array<16>(resp.value().payload.data());
  return {};
}

Status Attacker::run_session_init(const crypto::Key16& base_key,
                                  const crypto::Serial& serial) {
  if (!nonce_) return Err::NoPendingNonce;
  crypto::Nonce16 nonce = *nonce_;
  nonce_.reset();
  // Everything below is local arithmetic: key, serial and nonce are all in
  // hand, so the "authentication" is self-service.
  crypto::Key16 session_key =
      crypto::derive_session_key(base_key, serial, nonce);
  Bytes proof = crypto::ecb_encrypt(session_key, nonce);
  auto resp = transact_ok(
      *lock_, wire::Frame::request(wire::Op::SessionInit, std::move(proof)));
  if (!resp.ok()) return resp.error();
  SessionCrypto session(session_key, SessionCipher::Ecb, kClientEndpoint);
  auto ack = session.open(wire::response_op(wire::Op::SessionInit),
                          kServerEndpoint, resp.value().payload);
  if (!ack.ok()) return ack.error();
  session_ = session;
  return {};
}

Status Attacker::takeover_session() {
  return run_session_init(kFactoryKey, kFactorySerial);
}

Status Attacker::plant_identity() {
  if (!session_) return Err::WrongState;
  DeviceIdentity id;
  id.serial = rng_.array<8>();
  id.device_key = rng_.array<16>();
  Bytes inner;
  append(inner, id.serial);
  append(inner, id.device_key);
  auto resp = sealed_exchange(wire::Op::FactoryEnroll, inner);
  session_.reset();  // lock ends the session at enrollment
  if (!resp.ok()) return resp.error();
  identity_ = id;
  return {};
}

Status Attacker::device_session() {
  if (!identity_) return Err::WrongState;
  return run_session_init(identity_->device_key, identity_->serial);
}

Result<Bytes> Attacker::sealed_exchange(wire::Op op, ByteView inner) {
  if (!session_) return Err::WrongState;
  Bytes sealed = session_->seal(wire::op_byte(op), inner);
  auto resp = transact_ok(*lock_, wire::Frame::request(op, std::move(sealed)));
  if (!resp.ok()) return resp.error();
  auto plain = session_->open(wire::response_op(op), kServerEndpoint,
                              resp.value().payload);
  if (!plain.ok()) return plain.error();
  if (plain.value().empty() || plain.value()[0] != 0x00) return Err::BadRequest;
  return Bytes(plain.value().begin() + 1, plain.value().end());
}

Status Attacker::unlock_bolt() {
  auto r = sealed_exchange(wire::Op::EncCmd,
                           Bytes{static_cast<uint8_t>(LockCmd::Unlock)});
  if (!r.ok()) return r.error();
  return {};
}

Result<int> Attacker::enroll_own_finger(uint64_t finger_id) {
  Bytes capture{static_cast<uint8_t>(SensorSub::Capture)};
  put_u64le(capture, finger_id);
  auto cap = sealed_exchange(wire::Op::SensorCmd, capture);
  if (!cap.ok()) return cap.error();
  auto slot = sealed_exchange(wire::Op::SensorCmd,
                              Bytes{static_cast<uint8_t>(SensorSub::Enroll)});
  if (!slot.ok()) return slot.error();
  if (slot.value().size() != 1) return Err::BadLength;
  return static_cast<int>(slot.value()[0]);
}

Status Attacker::enter_dfu() {
  auto r = sealed_exchange(wire::Op::EnterDfu, {});
  session_.reset();
  if (!r.ok()) return r.error();
  return {};
}

Bytes Attacker::forge_droplock_package(const Bytes& image,
                                       const std::string& version) const {
  // A CRC is arithmetic, not authentication: anyone can mint a passing
  // package. Signature-mode receivers will reject this (wrong mode, no key).
  FwManifest manifest;
  manifest.version = version;
  manifest.behavior = FwBehavior::Droplock;
  return fw_pack(fw_make_crc(manifest, image));
}

Status Attacker::push_package(ByteView packed) {
  size_t offset = 0;
  while (offset < packed.size()) {
    size_t n = std::min(kChunkSize, packed.size() - offset);
    Bytes payload;
    put_u32le(payload, static_cast<uint32_t>(offset));
    append(payload, packed.subspan(offset, n));
    auto resp = transact_ok(
        *lock_, wire::Frame::request(wire::Op::DfuData, std::move(payload)));
    if (!resp.ok()) return resp.error();
    offset += n;
  }
  auto fin = transact_ok(*lock_, wire::Frame::request(wire::Op::DfuExecute));
  if (!fin.ok()) return fin.error();
  return {};
}

Result<FlashDump> Attacker::dump_flash(Lock& held_device) const {
  auto raw = held_device.debug_dump();
  if (!raw.ok()) return raw.error();
  return parse_flash_dump(raw.value());
}

LockConfig Attacker::impostor_config(const Bytes& droplock_image,
                                     BroadcastChannel* channel) const {
  LockConfig cfg;
  SecurityProfile p;  // vulnerable defaults: touch-wake, class 1, no attestation
  cfg.profile = p;
  cfg.rng_seed = rng_.next_u64();
  cfg.installed_manifest.version = "0.0.0";
  cfg.installed_manifest.behavior = FwBehavior::Droplock;
  cfg.installed_manifest.image_size =
      static_cast<uint32_t>(droplock_image.size());
  cfg.installed_image = droplock_image;
  cfg.broadcast = channel;
  // No cloud_token_key, no fw_verify_key, no attest_priv: counterfeit
  // hardware has no manufacturer secrets.
  return cfg;
}

std::vector<Bytes> Attacker::harvest() const { return broadcast_->snapshot(); }

std::optional<uint64_t> Attacker::identify_victim(
    ByteView image, std::span<const uint64_t> candidates) const {
  for (uint64_t id : candidates) {
    FingerprintImage candidate = synth_fingerprint(id);
    if (image.size() == candidate.pixels.size() &&
        std::equal(image.begin(), image.end(), candidate.pixels.begin())) {
      return id;
    }
  }
  return std::nullopt;
}

}  // namespace locklab
