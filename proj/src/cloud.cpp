#include "locklab/cloud.hpp"

namespace locklab {

Bytes envelope_serialize(const ApiEnvelope& env) {
  Bytes out;
  put_u16le(out, static_cast<uint16_t>(env.route.size()));
  append(out, to_bytes(env.route));
  put_u64le(out, env.session_id);
  put_u32le(out, static_cast<uint32_t>(env.body.size()));
  append(out, env.body);
  return out;
}

Result<ApiEnvelope> envelope_parse(ByteView raw) {
  if (raw.size() < 2) return Err::BadRequest;
  uint16_t route_len = get_u16le(raw.data());
  size_t pos = 2;
  if (raw.size() - pos < route_len + 8u + 4u) return Err::BadRequest;
  ApiEnvelope env;
  env.route.assign(raw.begin() + pos, raw.begin() + pos + route_len);
  pos += route_len;
  env.session_id = get_u64le(raw.data() + pos);
  pos += 8;
  uint32_t body_len = get_u32le(raw.data() + pos);
  pos += 4;
  if (raw.size() - pos != body_len) return Err::BadRequest;
  env.body.assign(raw.begin() + pos, raw.end());
  return env;
}

uint8_t route_id(const std::string& route) {
  if (route == kRouteHandshake) return 0;
  if (route == kRouteRegister) return 1;
  if (route == kRouteSessionKey) return 2;
  if (route == kRouteFwMeta) return 3;
  if (route == kRouteFwDownload) return 4;
  return 0xFF;
}

Bytes build_register_req(const std::string& account, const crypto::Serial& serial,
                         const crypto::Key16& device_key) {
  Bytes out;
  put_u16le(out, static_cast<uint16_t>(account.size()));
  append(out, to_bytes(account));
  append(out, serial);
  append(out, device_key);
  return out;
}

Bytes build_session_key_req(const std::string& account,
                            const crypto::Serial& serial,
                            const crypto::Nonce16& nonce) {
  Bytes out;
  put_u16le(out, static_cast<uint16_t>(account.size()));
  append(out, to_bytes(account));
  append(out, serial);
  append(out, nonce);
  return out;
}

Bytes build_version_req(const std::string& version) {
  Bytes out;
  out.push_back(static_cast<uint8_t>(version.size()));
  append(out, to_bytes(version));
  return out;
}

Result<SessionKeyGrant> parse_session_key_grant(ByteView payload) {
  if (payload.size() != 8 + 16 + 16 + 64) return Err::BadRequest;
  SessionKeyGrant grant;
  grant.serial = take_array<8>(payload.data());
  grant.device_key = take_array<16>(payload.data() + 8);
  grant.session_key = take_array<16>(payload.data() + 24);
  grant.token.assign(payload.begin() + 40, payload.end());
  return grant;
}

Result<FwMetaInfo> parse_fw_meta(ByteView payload) {
  if (payload.size() < 1) return Err::BadRequest;
  size_t ver_len = payload[0];
  if (payload.size() != 1 + ver_len + 1 + 4 + 32 + 1) return Err::BadRequest;
  FwMetaInfo info;
  size_t pos = 1;
  info.manifest.version.assign(payload.begin() + pos,
                               payload.begin() + pos + ver_len);
  pos += ver_len;
  info.manifest.behavior = static_cast<FwBehavior>(payload[pos++]);
  info.manifest.image_size = get_u32le(payload.data() + pos);
  pos += 4;
  info.digest.assign(payload.begin() + pos, payload.begin() + pos + 32);
  pos += 32;
  info.integrity = static_cast<FwIntegrity>(payload[pos]);
  return info;
}

namespace {

// Request parsing helpers; malformed input surfaces as BadRequest.

struct AccountPrefix {
  std::string account;
  ByteView rest;
};

Result<AccountPrefix> split_account(ByteView plain) {
  if (plain.size() < 2) return Err::BadRequest;
  uint16_t len = get_u16le(plain.data());
  if (plain.size() < 2u + len) return Err::BadRequest;
  AccountPrefix out;
  out.account.assign(plain.begin() + 2, plain.begin() + 2 + len);
  out.rest = plain.subspan(2 + len);
  return out;
}

Result<std::string> parse_version_req(ByteView plain) {
  if (plain.empty()) return Err::BadRequest;
  size_t len = plain[0];
  if (plain.size() != 1 + len) return Err::BadRequest;
  return std::string(plain.begin() + 1, plain.end());
}

}  // namespace

Cloud::Cloud(CloudConfig cfg, std::vector<CatalogEntry> catalog)
    : cfg_(std::move(cfg)), rng_(cfg_.rng_seed) {
  // The vendor publishes only sanctioned builds; anything else in the input
  // is a fixture mistake, not a catalog entry.
  for (auto& entry : catalog) {
    if (entry.manifest.behavior == FwBehavior::Legitimate) {
      entry.manifest.image_size = static_cast<uint32_t>(entry.image.size());
      catalog_.push_back(std::move(entry));
    }
  }
}

const CatalogEntry* Cloud::find_version(const std::string& version) const {
  for (const auto& entry : catalog_) {
    if (entry.manifest.version == version) return &entry;
  }
  return nullptr;
}

std::vector<Bytes> Cloud::published_digests() const {
  std::vector<Bytes> out;
  out.reserve(catalog_.size());
  for (const auto& entry : catalog_) out.push_back(crypto::sha256(entry.image));
  return out;
}

ApiEnvelope Cloud::fail(const ApiEnvelope& req, Err e) const {
  // Envelope-level failure: 1-byte plaintext body (sealed bodies are never
  // this short, so clients can tell the two apart).
  return ApiEnvelope{req.route, req.session_id, Bytes{err_wire_id(e)}};
}

ApiEnvelope Cloud::handle(const ApiEnvelope& request) {
  ++requests_;
  if (request.route == kRouteHandshake) {
    if (cfg_.api_mode != ApiMode::DhSession) return fail(request, Err::BadRequest);
    if (request.body.size() != 32) return fail(request, Err::BadRequest);
    crypto::KeyPair server = crypto::x25519_keygen(rng_);
    auto shared =
        crypto::x25519_shared(server.priv, take_array<32>(request.body.data()));
    if (!shared.ok()) return fail(request, Err::InvalidPublic);
    uint64_t id = next_session_id_++;
    dh_sessions_.emplace(
        id, DhState{SessionCrypto(crypto::shared_to_key16(shared.value()),
                                  SessionCipher::Gcm, kServerEndpoint)});
    ApiEnvelope resp;
    resp.route = request.route;
    resp.session_id = id;
    resp.body.insert(resp.body.end(), server.pub.begin(), server.pub.end());
    put_u64le(resp.body, id);
    return resp;
  }

  if (route_id(request.route) == 0xFF) return fail(request, Err::BadRequest);

  // Unwrap the body according to the API mode.
  Bytes plain;
  SessionCrypto* session = nullptr;
  if (cfg_.api_mode == ApiMode::StaticKey) {
    if (request.session_id != 0) return fail(request, Err::BadRequest);
    auto dec = crypto::ecb_decrypt(cfg_.static_key, request.body);
    if (!dec.ok()) return fail(request, Err::DecryptFailed);
    plain = dec.take();
  } else {
    auto it = dh_sessions_.find(request.session_id);
    if (it == dh_sessions_.end()) return fail(request, Err::BadRequest);
    session = &it->second.crypto;
    auto dec = session->open(route_id(request.route), kClientEndpoint,
                             request.body);
    if (!dec.ok()) return fail(request, Err::DecryptFailed);
    plain = dec.take();
  }

  auto [status, payload] = route_dispatch(request.route, plain);
  Bytes reply;
  reply.push_back(status == static_cast<Err>(0) ? 0 : err_wire_id(status));
  append(reply, payload);

  ApiEnvelope resp;
  resp.route = request.route;
  resp.session_id = request.session_id;
  resp.body = session ? session->seal(route_id(request.route), reply)
                      : crypto::ecb_encrypt(cfg_.static_key, reply);
  return resp;
}

std::pair<Err, Bytes> Cloud::route_dispatch(const std::string& route,
                                            ByteView plain) {
  if (route == kRouteRegister) return on_register(plain);
  if (route == kRouteSessionKey) return on_session_key(plain);
  if (route == kRouteFwMeta) return on_fw_meta(plain);
  if (route == kRouteFwDownload) return on_fw_download(plain);
  return {Err::BadRequest, {}};
}

std::pair<Err, Bytes> Cloud::on_register(ByteView plain) {
  auto head = split_account(plain);
  if (!head.ok()) return {head.error(), {}};
  if (head.value().rest.size() != 8 + 16) return {Err::BadRequest, {}};
  crypto::Serial serial = take_array<8>(head.value().rest.data());
  crypto::Key16 key = take_array<16>(head.value().rest.data() + 8);
  if (registry_.count(serial)) return {Err::AlreadyRegistered, {}};
  registry_[serial] = Registration{head.value().account, key};
  return {static_cast<Err>(0), {}};
}

std::pair<Err, Bytes> Cloud::on_session_key(ByteView plain) {
  auto head = split_account(plain);
  if (!head.ok()) return {head.error(), {}};
  if (head.value().rest.size() != 8 + 16) return {Err::BadRequest, {}};
  crypto::Serial serial = take_array<8>(head.value().rest.data());
  crypto::Nonce16 nonce = take_array<16>(head.value().rest.data() + 8);

  crypto::Key16 device_key;
  if (serial == kFactorySerial) {
    // Factory enrollment issuance; no ownership exists yet.
    device_key = cfg_.factory_key;
  } else {
    auto it = registry_.find(serial);
    if (it == registry_.end()) return {Err::NotRegistered, {}};
    if (it->second.account != head.value().account) return {Err::NotOwner, {}};
    device_key = it->second.device_key;
  }

  crypto::Key16 session_key =
      crypto::derive_session_key(device_key, serial, nonce);
  Bytes bound;
  append(bound, serial);
  append(bound, nonce);
  Bytes token = crypto::ed25519_sign(cfg_.token_keys.priv, bound);

  // The response hands back serial, device key and session key together;
  // whoever reads this body owns the lock in every sense that matters.
  Bytes payload;
  append(payload, serial);
  append(payload, device_key);
  append(payload, session_key);
  append(payload, token);
  return {static_cast<Err>(0), payload};
}

std::pair<Err, Bytes> Cloud::on_fw_meta(ByteView plain) {
  auto version = parse_version_req(plain);
  if (!version.ok()) return {version.error(), {}};
  const CatalogEntry* entry = find_version(version.value());
  if (!entry) return {Err::NoSuchVersion, {}};
  Bytes payload;
  payload.push_back(static_cast<uint8_t>(entry->manifest.version.size()));
  append(payload, to_bytes(entry->manifest.version));
  payload.push_back(static_cast<uint8_t>(entry->manifest.behavior));
  put_u32le(payload, static_cast<uint32_t>(entry->image.size()));
  append(payload, crypto::sha256(entry->image));
  payload.push_back(static_cast<uint8_t>(cfg_.package_mode));
  return {static_cast<Err>(0), payload};
}

std::pair<Err, Bytes> Cloud::on_fw_download(ByteView plain) {
  auto version = parse_version_req(plain);
  if (!version.ok()) return {version.error(), {}};
  const CatalogEntry* entry = find_version(version.value());
  if (!entry) return {Err::NoSuchVersion, {}};
  FwPackage pkg = cfg_.package_mode == FwIntegrity::Crc16
                      ? fw_make_crc(entry->manifest, entry->image)
                      : fw_make_signed(entry->manifest, entry->image,
                                       cfg_.fw_signing_priv);
  return {static_cast<Err>(0), fw_pack(pkg)};
}

}  // namespace locklab
