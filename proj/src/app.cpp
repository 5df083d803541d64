#include "locklab/app.hpp"

namespace locklab {

App::App(std::string account, AppBinaryModel binary, SecurityProfile profile,
         CloudTransport* cloud, LockPort* lock, DeterministicRng rng)
    : account_(std::move(account)),
      binary_(binary),
      profile_(profile),
      cloud_(cloud),
      lock_(lock),
      rng_(rng) {}

Status App::ensure_api_session() {
  if (api_session_) return {};
  crypto::KeyPair client = crypto::x25519_keygen(rng_);
  ApiEnvelope req;
  req.route = kRouteHandshake;
  req.body.assign(client.pub.begin(), client.pub.end());
  auto resp = cloud_->exchange(req);
  if (!resp.ok()) return resp.error();
  const Bytes& body = resp.value().body;
  if (body.size() == 1) return err_from_wire_id(body[0]);
  if (body.size() != 32 + 8) return Err::BadRequest;
  auto shared = crypto::x25519_shared(client.priv, take_array<32>(body.data()));
  if (!shared.ok()) return shared.error();
  api_session_id_ = get_u64le(body.data() + 32);
  api_session_.emplace(crypto::shared_to_key16(shared.value()),
                       SessionCipher::Gcm, kClientEndpoint);
  return {};
}

Result<Bytes> App::api_call(const std::string& route, ByteView plain_body) {
  // Certificate pinning, reduced to its observable effect: an enforced pin
  // refuses to complete a handshake with an interposed endpoint.
  if (binary_.pinning_enforced && cloud_->proxied()) {
    return Err::PinningBlocked;
  }
  ApiEnvelope req;
  req.route = route;
  if (profile_.api_mode == ApiMode::StaticKey) {
    req.session_id = 0;
    req.body = crypto::ecb_encrypt(binary_.api_static_key, plain_body);
  } else {
    auto hs = ensure_api_session();
    if (!hs.ok()) return hs.error();
    req.session_id = api_session_id_;
    req.body = api_session_->seal(route_id(route), plain_body);
  }
  auto resp = cloud_->exchange(req);
  if (!resp.ok()) return resp.error();
  const Bytes& body = resp.value().body;
  if (body.size() == 1) return err_from_wire_id(body[0]);

  Bytes reply;
  if (profile_.api_mode == ApiMode::StaticKey) {
    auto dec = crypto::ecb_decrypt(binary_.api_static_key, body);
    if (!dec.ok()) return Err::DecryptFailed;
    reply = dec.take();
  } else {
    auto dec = api_session_->open(route_id(route), kServerEndpoint, body);
    if (!dec.ok()) return dec.error();
    reply = dec.take();
  }
  if (reply.empty()) return Err::BadRequest;
  if (reply[0] != 0) return err_from_wire_id(reply[0]);
  return Bytes(reply.begin() + 1, reply.end());
}

Result<crypto::Nonce16> App::fetch_nonce() {
  auto resp = transact_ok(*lock_, wire::Frame::request(wire::Op::GetRandom));
  if (!resp.ok()) return resp.error();
  if (resp.value().payload.size() != 16) return Err::BadLength;
  return take_array<16>(resp.value().payload.data());
}

Status App::init_session(const crypto::Nonce16& nonce,
                         const SessionKeyGrant& grant) {
  Bytes proof = crypto::ecb_encrypt(grant.session_key, nonce);
  if (profile_.session_auth == SessionAuth::MutualAuth) {
    append(proof, grant.token);
  }
  auto resp = transact_ok(
      *lock_, wire::Frame::request(wire::Op::SessionInit, std::move(proof)));
  if (!resp.ok()) return resp.error();
  lock_session_.emplace(grant.session_key,
                        profile_.session_auth == SessionAuth::MutualAuth
                            ? SessionCipher::Gcm
                            : SessionCipher::Ecb,
                        kClientEndpoint);
  auto ack = lock_session_->open(wire::response_op(wire::Op::SessionInit),
                                 kServerEndpoint, resp.value().payload);
  if (!ack.ok()) {
    lock_session_.reset();
    return ack.error();
  }
  return {};
}

Status App::register_lock() {
  // Mint the lock's identity app-side, claim it with the vendor, then stamp
  // it into the factory-fresh device.
  DeviceIdentity id;
  id.serial = rng_.array<8>();
  id.device_key = rng_.array<16>();

  auto reg = api_call(kRouteRegister,
                      build_register_req(account_, id.serial, id.device_key));
  if (!reg.ok()) return reg.error();

  auto nonce = fetch_nonce();
  if (!nonce.ok()) return nonce.error();
  auto grant_raw = api_call(
      kRouteSessionKey,
      build_session_key_req(account_, kFactorySerial, nonce.value()));
  if (!grant_raw.ok()) return grant_raw.error();
  auto grant = parse_session_key_grant(grant_raw.value());
  if (!grant.ok()) return grant.error();
  auto session = init_session(nonce.value(), grant.value());
  if (!session.ok()) return session.error();

  Bytes inner;
  append(inner, id.serial);
  append(inner, id.device_key);
  auto enroll = sealed_exchange(wire::Op::FactoryEnroll, inner);
  lock_session_.reset();  // the lock ends the session at enrollment
  if (!enroll.ok()) return enroll.error();
  identity_ = id;
  return {};
}

Status App::open_session() {
  if (!identity_) return Err::NotRegistered;
  auto nonce = fetch_nonce();
  if (!nonce.ok()) return nonce.error();
  auto grant_raw = api_call(
      kRouteSessionKey,
      build_session_key_req(account_, identity_->serial, nonce.value()));
  if (!grant_raw.ok()) return grant_raw.error();
  auto grant = parse_session_key_grant(grant_raw.value());
  if (!grant.ok()) return grant.error();
  return init_session(nonce.value(), grant.value());
}

Result<Bytes> App::sealed_exchange(wire::Op op, ByteView inner) {
  if (!lock_session_) return Err::WrongState;
  Bytes sealed = lock_session_->seal(wire::op_byte(op), inner);
  auto resp =
      transact_ok(*lock_, wire::Frame::request(op, std::move(sealed)));
  if (!resp.ok()) return resp.error();
  auto plain = lock_session_->open(wire::response_op(op), kServerEndpoint,
                                   resp.value().payload);
  if (!plain.ok()) return plain.error();
  if (plain.value().empty() || plain.value()[0] != 0x00) {
    // Lock-side replies here always start with a zero status; session-init
    // acks are the exception and never travel through this helper.
    return Err::BadRequest;
  }
  return Bytes(plain.value().begin() + 1, plain.value().end());
}

Status App::end_session() {
  auto r = sealed_exchange(wire::Op::EncCmd,
                           Bytes{static_cast<uint8_t>(LockCmd::EndSession)});
  lock_session_.reset();
  if (!r.ok()) return r.error();
  return {};
}

Status App::unlock() {
  auto r = sealed_exchange(wire::Op::EncCmd,
                           Bytes{static_cast<uint8_t>(LockCmd::Unlock)});
  if (!r.ok()) return r.error();
  return {};
}

Status App::relock() {
  auto r = sealed_exchange(wire::Op::EncCmd,
                           Bytes{static_cast<uint8_t>(LockCmd::Bolt)});
  if (!r.ok()) return r.error();
  return {};
}

Result<int> App::enroll_finger(uint64_t finger_id) {
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

Result<int> App::match_finger(uint64_t finger_id) {
  Bytes capture{static_cast<uint8_t>(SensorSub::Capture)};
  put_u64le(capture, finger_id);
  auto cap = sealed_exchange(wire::Op::SensorCmd, capture);
  if (!cap.ok()) return cap.error();
  auto slot = sealed_exchange(wire::Op::SensorCmd,
                              Bytes{static_cast<uint8_t>(SensorSub::Match)});
  if (!slot.ok()) return slot.error();
  if (slot.value().size() != 1) return Err::BadLength;
  return static_cast<int>(slot.value()[0]);
}

Result<FwMetaInfo> App::firmware_meta(const std::string& version) {
  auto payload = api_call(kRouteFwMeta, build_version_req(version));
  if (!payload.ok()) return payload.error();
  return parse_fw_meta(payload.value());
}

Status App::enter_dfu_mode() {
  auto r = sealed_exchange(wire::Op::EnterDfu, {});
  lock_session_.reset();  // session ends whether or not activation succeeded
  if (!r.ok()) return r.error();
  return {};
}

Status App::stream_package(ByteView packed) {
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

Status App::update_firmware(const std::string& version) {
  auto meta = firmware_meta(version);
  if (!meta.ok()) return meta.error();
  auto package = api_call(kRouteFwDownload, build_version_req(version));
  if (!package.ok()) return package.error();
  auto dfu = enter_dfu_mode();
  if (!dfu.ok()) return dfu.error();
  return stream_package(package.value());
}

}  // namespace locklab
