#include "locklab/lock.hpp"

namespace locklab {

std::string_view lock_state_name(LockState s) {
  switch (s) {
    case LockState::Factory: return "FACTORY";
    case LockState::Enrolled: return "ENROLLED";
    case LockState::SessionActive: return "SESSION_ACTIVE";
    case LockState::DfuMode: return "DFU_MODE";
  }
  return "?";
}

Result<FlashDump> parse_flash_dump(ByteView raw) {
  size_t pos = 0;
  auto need = [&](size_t n) { return raw.size() - pos >= n; };
  if (!need(4) || std::memcmp(raw.data(), "DMP1", 4) != 0) return Err::BadLength;
  pos += 4;
  FlashDump dump;
  if (!need(16 + 1 + 8 + 16)) return Err::BadLength;
  dump.factory_key = take_array<16>(raw.data() + pos);
  pos += 16;
  bool has_id = raw[pos++] != 0;
  DeviceIdentity id;
  id.serial = take_array<8>(raw.data() + pos);
  pos += 8;
  id.device_key = take_array<16>(raw.data() + pos);
  pos += 16;
  if (has_id) dump.identity = id;
  if (!need(1)) return Err::BadLength;
  size_t ver_len = raw[pos++];
  if (!need(ver_len + 1 + 4)) return Err::BadLength;
  dump.manifest.version.assign(raw.begin() + pos, raw.begin() + pos + ver_len);
  pos += ver_len;
  dump.manifest.behavior = static_cast<FwBehavior>(raw[pos++]);
  dump.manifest.image_size = get_u32le(raw.data() + pos);
  pos += 4;
  if (!need(1)) return Err::BadLength;
  size_t slots = raw[pos++];
  for (size_t i = 0; i < slots; ++i) {
    if (!need(32)) return Err::BadLength;
    dump.slots.emplace_back(raw.begin() + pos, raw.begin() + pos + 32);
    pos += 32;
  }
  if (pos != raw.size()) return Err::BadLength;
  return dump;
}

Lock::Lock(LockConfig cfg)
    : cfg_(std::move(cfg)),
      rng_(cfg_.rng_seed),
      sensor_(cfg_.profile.sensor_class, rng_.array<16>()),
      installed_manifest_(cfg_.installed_manifest),
      installed_image_(cfg_.installed_image) {}

wire::Frame Lock::handle_frame(const wire::Frame& request) {
  auto res = dispatch(request);
  if (res.ok()) return res.take();
  return wire::Frame::error(res.error());
}

Bytes Lock::handle_bytes(ByteView raw) {
  auto decoded = wire::decode(raw);
  wire::Frame out = decoded.ok() ? handle_frame(decoded.value())
                                 : wire::Frame::error(decoded.error());
  auto encoded = wire::encode(out);
  if (!encoded.ok()) {
    encoded = wire::encode(wire::Frame::error(Err::FrameTooLarge));
  }
  return encoded.take();
}

Result<wire::Frame> Lock::dispatch(const wire::Frame& req) {
  if (!wire::is_registered_request(req.opcode)) return Err::UnknownOpcode;
  switch (static_cast<wire::Op>(req.opcode)) {
    case wire::Op::GetRandom: return on_get_random(req);
    case wire::Op::SessionInit: return on_session_init(req);
    case wire::Op::EncCmd: return on_enc_cmd(req);
    case wire::Op::SensorCmd: return on_sensor_cmd(req);
    case wire::Op::EnterDfu: return on_enter_dfu(req);
    case wire::Op::DfuData: return on_dfu_data(req);
    case wire::Op::DfuExecute: return on_dfu_execute(req);
    case wire::Op::DebugDump: return on_debug_dump(req);
    case wire::Op::FactoryEnroll: return on_factory_enroll(req);
    case wire::Op::AttestReq: return on_attest(req);
    default: return Err::UnknownOpcode;
  }
}

Result<wire::Frame> Lock::on_get_random(const wire::Frame& req) {
  if (state_ != LockState::Factory && state_ != LockState::Enrolled) {
    return Err::WrongState;
  }
  if (!req.payload.empty()) return Err::BadLength;
  crypto::Nonce16 nonce = rng_.array<16>();
  pending_nonce_ = nonce;
  Bytes payload(nonce.begin(), nonce.end());
  return wire::Frame::response(wire::Op::GetRandom, std::move(payload));
}

Result<wire::Frame> Lock::on_session_init(const wire::Frame& req) {
  if (state_ != LockState::Factory && state_ != LockState::Enrolled) {
    return Err::WrongState;
  }
  if (!pending_nonce_) return Err::NoPendingNonce;
  // One-shot nonce: consumed by this attempt whatever its outcome.
  crypto::Nonce16 nonce = *pending_nonce_;
  pending_nonce_.reset();

  const bool factory = state_ == LockState::Factory;
  const crypto::Key16& base_key =
      factory ? cfg_.factory_key : identity_->device_key;
  const crypto::Serial& serial = factory ? kFactorySerial : identity_->serial;
  crypto::Key16 session_key =
      crypto::derive_session_key(base_key, serial, nonce);

  Bytes expected = crypto::ecb_encrypt(session_key, nonce);  // 32 bytes
  if (req.payload.size() < expected.size()) return Err::BadLength;
  if (!ct_equal(ByteView(req.payload).first(expected.size()), expected)) {
    return Err::AuthFailed;
  }

  if (cfg_.profile.session_auth == SessionAuth::MutualAuth) {
    // Proof alone is insufficient: a cloud token over serial||nonce must
    // accompany it. An offline party cannot mint one.
    if (req.payload.size() != expected.size() + 64) return Err::AuthFailed;
    if (!cfg_.cloud_token_key) return Err::AuthFailed;
    Bytes bound;
    append(bound, serial);
    append(bound, nonce);
    ByteView token = ByteView(req.payload).subspan(expected.size(), 64);
    if (!crypto::ed25519_verify(*cfg_.cloud_token_key, bound, token)) {
      return Err::AuthFailed;
    }
  } else if (req.payload.size() != expected.size()) {
    return Err::BadLength;
  }

  SessionCipher cipher = cfg_.profile.session_auth == SessionAuth::MutualAuth
                             ? SessionCipher::Gcm
                             : SessionCipher::Ecb;
  session_.emplace(session_key, cipher, kServerEndpoint);
  session_origin_ = state_;
  state_ = LockState::SessionActive;
  Bytes ack{0x01};
  Bytes sealed = session_->seal(wire::response_op(wire::Op::SessionInit), ack);
  return wire::Frame::response(wire::Op::SessionInit, std::move(sealed));
}

void Lock::end_session(LockState next) {
  session_.reset();
  state_ = next;
}

Result<wire::Frame> Lock::on_enc_cmd(const wire::Frame& req) {
  if (state_ != LockState::SessionActive) return Err::WrongState;
  auto plain = session_->open(wire::op_byte(wire::Op::EncCmd), kClientEndpoint,
                              req.payload);
  if (!plain.ok()) return plain.error();
  const Bytes& inner = plain.value();
  if (inner.empty()) return Err::BadLength;
  Bytes reply;
  bool end_after = false;
  switch (static_cast<LockCmd>(inner[0])) {
    case LockCmd::Unlock:
      bolt_open_ = true;
      note("BOLT_OPENED");
      reply = {0x00};
      break;
    case LockCmd::Bolt:
      bolt_open_ = false;
      reply = {0x00};
      break;
    case LockCmd::Status: {
      reply = {0x00, static_cast<uint8_t>(bolt_open_ ? 1 : 0)};
      reply.push_back(static_cast<uint8_t>(installed_manifest_.version.size()));
      append(reply, to_bytes(installed_manifest_.version));
      break;
    }
    case LockCmd::EndSession:
      reply = {0x00};
      end_after = true;
      break;
    default:
      return Err::UnknownOpcode;
  }
  Bytes sealed = session_->seal(wire::response_op(wire::Op::EncCmd), reply);
  if (end_after) {
    end_session(identity_ ? LockState::Enrolled : LockState::Factory);
  }
  return wire::Frame::response(wire::Op::EncCmd, std::move(sealed));
}

Result<wire::Frame> Lock::on_sensor_cmd(const wire::Frame& req) {
  if (state_ != LockState::SessionActive) return Err::WrongState;
  auto plain = session_->open(wire::op_byte(wire::Op::SensorCmd),
                              kClientEndpoint, req.payload);
  if (!plain.ok()) return plain.error();
  const Bytes& inner = plain.value();
  if (inner.empty()) return Err::BadLength;

  // The host powers the sensor for the duration of the command.
  bool was_awake = sensor_.awake();
  sensor_.set_awake(true);
  struct WakeGuard {
    FingerprintSensor& s;
    bool restore;
    ~WakeGuard() { s.set_awake(restore); }
  } guard{sensor_, was_awake};

  Bytes reply;
  switch (static_cast<SensorSub>(inner[0])) {
    case SensorSub::Capture: {
      if (inner.size() != 1 + 8) return Err::BadLength;
      uint64_t finger = get_u64le(inner.data() + 1);
      auto st = sensor_.capture(finger);
      if (!st.ok()) return st.error();
      reply = {0x00};
      break;
    }
    case SensorSub::ReadImage: {
      if (inner.size() != 1 + 4) return Err::BadLength;
      uint32_t offset = get_u32le(inner.data() + 1);
      auto img = sensor_.image();
      if (!img.ok()) return img.error();
      const Bytes& pixels = img.value();
      if (offset > pixels.size()) return Err::BadLength;
      size_t n = std::min(kChunkSize, pixels.size() - offset);
      reply = {0x00};
      put_u32le(reply, static_cast<uint32_t>(pixels.size()));
      put_u16le(reply, static_cast<uint16_t>(n));
      reply.insert(reply.end(), pixels.begin() + offset,
                   pixels.begin() + offset + n);
      break;
    }
    case SensorSub::ReadTemplate: {
      auto tmpl = sensor_.current_template();
      if (!tmpl.ok()) return tmpl.error();
      reply = {0x00};
      append(reply, tmpl.value());
      break;
    }
    case SensorSub::Enroll: {
      auto slot = sensor_.enroll();
      if (!slot.ok()) return slot.error();
      reply = {0x00, static_cast<uint8_t>(slot.value())};
      break;
    }
    case SensorSub::Match: {
      auto slot = sensor_.match();
      if (!slot.ok()) return slot.error();
      reply = {0x00, static_cast<uint8_t>(slot.value())};
      break;
    }
    case SensorSub::Delete: {
      if (inner.size() != 2) return Err::BadLength;
      auto st = sensor_.delete_slot(inner[1]);
      if (!st.ok()) return st.error();
      reply = {0x00};
      break;
    }
    default:
      return Err::UnknownOpcode;
  }
  Bytes sealed = session_->seal(wire::response_op(wire::Op::SensorCmd), reply);
  return wire::Frame::response(wire::Op::SensorCmd, std::move(sealed));
}

Result<wire::Frame> Lock::on_enter_dfu(const wire::Frame& req) {
  if (state_ != LockState::SessionActive) return Err::WrongState;
  // Factory-origin sessions may not activate DFU: the post-update state is
  // ENROLLED and an unenrolled lock has no identity to return to.
  if (session_origin_ != LockState::Enrolled) return Err::WrongState;
  auto plain = session_->open(wire::op_byte(wire::Op::EnterDfu),
                              kClientEndpoint, req.payload);
  if (!plain.ok()) return plain.error();
  if (!plain.value().empty()) return Err::BadLength;
  const uint8_t ack[1] = {0x00};
  Bytes sealed = session_->seal(wire::response_op(wire::Op::EnterDfu),
                                ByteView(ack, 1));
  dfu_buffer_.clear();
  end_session(LockState::DfuMode);
  note("DFU_MODE_ENTERED");
  return wire::Frame::response(wire::Op::EnterDfu, std::move(sealed));
}

Result<wire::Frame> Lock::on_dfu_data(const wire::Frame& req) {
  if (state_ != LockState::DfuMode) return Err::WrongState;
  if (req.payload.size() < 4) return Err::BadLength;
  uint32_t offset = get_u32le(req.payload.data());
  if (offset != dfu_buffer_.size()) return Err::BadLength;  // sequential only
  dfu_buffer_.insert(dfu_buffer_.end(), req.payload.begin() + 4,
                     req.payload.end());
  Bytes reply;
  put_u32le(reply, static_cast<uint32_t>(dfu_buffer_.size()));
  return wire::Frame::response(wire::Op::DfuData, std::move(reply));
}

Result<wire::Frame> Lock::on_dfu_execute(const wire::Frame& req) {
  if (state_ != LockState::DfuMode) return Err::WrongState;
  if (!req.payload.empty()) return Err::BadLength;
  Bytes buffer = std::move(dfu_buffer_);
  dfu_buffer_.clear();
  // Accept or reject, DFU mode ends here.
  state_ = LockState::Enrolled;
  auto pkg = fw_parse(buffer);
  if (!pkg.ok()) {
    note("DFU_REJECTED");
    return Err::IntegrityFailed;
  }
  const crypto::Key32* verify_key =
      cfg_.fw_verify_key ? &*cfg_.fw_verify_key : nullptr;
  auto verdict = fw_verify(pkg.value(), cfg_.profile.dfu_integrity, verify_key);
  if (!verdict.ok()) {
    note("DFU_REJECTED");
    return verdict.error();
  }
  installed_manifest_ = pkg.value().manifest;
  installed_image_ = pkg.value().image;
  note("DFU_INSTALLED " + installed_manifest_.version);
  return wire::Frame::response(wire::Op::DfuExecute, {0x00});
}

Bytes Lock::dump_flash_bytes() const {
  Bytes out = to_bytes("DMP1");
  append(out, cfg_.factory_key);
  out.push_back(identity_ ? 1 : 0);
  DeviceIdentity id = identity_.value_or(DeviceIdentity{});
  append(out, id.serial);
  append(out, id.device_key);
  append(out, manifest_bytes(installed_manifest_));
  auto slots = sensor_.exported_slots();
  out.push_back(static_cast<uint8_t>(slots.size()));
  for (const Bytes& s : slots) append(out, s);
  return out;
}

Result<Bytes> Lock::debug_dump() {
  // Reaching the UART pads means opening the case: a tamper-evident build
  // records the attempt whether or not the port answers.
  note("DEBUG_DUMP_ATTEMPT");
  if (cfg_.profile.tamper_evident && !tampered_) {
    tampered_ = true;
    note("TAMPER_FLAG_SET");
  }
  if (!cfg_.profile.debug_port) return Err::DebugDisabled;
  return dump_flash_bytes();
}

Result<wire::Frame> Lock::on_debug_dump(const wire::Frame& req) {
  if (req.payload.size() != 4) return Err::BadLength;
  uint32_t offset = get_u32le(req.payload.data());
  auto dump = debug_dump();
  if (!dump.ok()) return dump.error();
  const Bytes& bytes = dump.value();
  if (offset > bytes.size()) return Err::BadLength;
  size_t n = std::min(kChunkSize, bytes.size() - offset);
  Bytes reply;
  put_u32le(reply, static_cast<uint32_t>(bytes.size()));
  put_u16le(reply, static_cast<uint16_t>(n));
  reply.insert(reply.end(), bytes.begin() + offset, bytes.begin() + offset + n);
  return wire::Frame::response(wire::Op::DebugDump, std::move(reply));
}

Result<wire::Frame> Lock::on_factory_enroll(const wire::Frame& req) {
  if (state_ != LockState::SessionActive) return Err::WrongState;
  if (session_origin_ != LockState::Factory) return Err::WrongState;
  auto plain = session_->open(wire::op_byte(wire::Op::FactoryEnroll),
                              kClientEndpoint, req.payload);
  if (!plain.ok()) return plain.error();
  const Bytes& inner = plain.value();
  if (inner.size() != 8 + 16) return Err::BadLength;
  DeviceIdentity id;
  id.serial = take_array<8>(inner.data());
  id.device_key = take_array<16>(inner.data() + 8);
  identity_ = id;
  const uint8_t ack[1] = {0x00};
  Bytes sealed =
      session_->seal(wire::response_op(wire::Op::FactoryEnroll), ByteView(ack, 1));
  end_session(LockState::Enrolled);
  note("IDENTITY_ASSIGNED " + to_hex(id.serial));
  return wire::Frame::response(wire::Op::FactoryEnroll, std::move(sealed));
}

Result<wire::Frame> Lock::on_attest(const wire::Frame& req) {
  if (req.payload.size() != 16) return Err::BadLength;
  if (!cfg_.profile.attestation || !cfg_.attest_priv) {
    return wire::Frame::response(wire::Op::AttestReq, {0x00});
  }
  crypto::Serial serial =
      identity_ ? identity_->serial : kFactorySerial;
  Bytes digest = crypto::sha256(installed_image_);
  Bytes bound;
  append(bound, serial);
  append(bound, req.payload);
  append(bound, digest);
  Bytes sig = crypto::ed25519_sign(*cfg_.attest_priv, bound);
  Bytes reply{0x01};
  append(reply, serial);
  append(reply, digest);
  append(reply, sig);
  return wire::Frame::response(wire::Op::AttestReq, std::move(reply));
}

TouchOutcome Lock::touch(uint64_t finger_id, bool full_interaction) {
  TouchOutcome out;
  bool wakes =
      cfg_.profile.wake_mode == WakeMode::Touch || full_interaction;
  if (!wakes) {
    // Casual touch against a button-wake device: the sensor never powers up.
    note("TOUCH_IGNORED_SENSOR_ASLEEP");
    return out;
  }
  out.sensor_woke = true;
  sensor_.set_awake(true);
  if (sensor_.capture(finger_id).ok()) out.captured = true;
  if (out.captured && installed_manifest_.behavior == FwBehavior::Droplock) {
    // The trojaned firmware pushes the raw frame off-device before doing
    // anything a user would notice.
    auto img = sensor_.image();
    if (img.ok() && cfg_.broadcast != nullptr) {
      cfg_.broadcast->publish(img.value());
      out.exfiltrated = true;
      note("IMAGE_EXFILTRATED");
    } else if (!img.ok() && img.error() == Err::IsolationViolation) {
      note("BLOCKED_BY_ISOLATION");
    }
  }
  if (out.captured && sensor_.match().ok()) {
    out.matched = true;
    bolt_open_ = true;
    out.unlocked = true;
  }
  sensor_.set_awake(false);
  return out;
}

std::vector<LockTransition> Lock::declared_transitions() {
  using S = LockState;
  return {
      {S::Factory, "SESSION_INIT accepted (factory key)", S::SessionActive},
      {S::Enrolled, "SESSION_INIT accepted (device key)", S::SessionActive},
      {S::SessionActive, "FACTORY_ENROLL accepted (factory origin)",
       S::Enrolled},
      {S::SessionActive, "ENC_CMD end-session (factory origin)", S::Factory},
      {S::SessionActive, "ENC_CMD end-session (device origin)", S::Enrolled},
      {S::SessionActive, "ENTER_DFU accepted (device origin)", S::DfuMode},
      {S::DfuMode, "DFU_EXECUTE package accepted", S::Enrolled},
      {S::DfuMode, "DFU_EXECUTE package rejected", S::Enrolled},
  };
}

Result<wire::Frame> InprocPort::transact(const wire::Frame& request) {
  std::lock_guard<std::mutex> g(mu_);
  return lock_.handle_frame(request);
}

Result<wire::Frame> transact_ok(LockPort& port, const wire::Frame& request) {
  auto resp = port.transact(request);
  if (!resp.ok()) return resp.error();
  if (resp.value().is_error()) {
    const Bytes& p = resp.value().payload;
    return p.size() == 1 ? err_from_wire_id(p[0]) : Err::TransportError;
  }
  return resp.take();
}

}  // namespace locklab
