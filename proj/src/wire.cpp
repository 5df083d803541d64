#include "locklab/wire.hpp"

namespace locklab {

std::string to_hex(ByteView data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xf]);
  }
  return out;
}

std::optional<Bytes> from_hex(std::string_view hex) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (hex.size() % 2 != 0) return std::nullopt;
  Bytes out;
  out.reserve(hex.size() / 2);
  for (size_t i = 0; i < hex.size(); i += 2) {
    int hi = nibble(hex[i]);
    int lo = nibble(hex[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out.push_back(static_cast<uint8_t>((hi << 4) | lo));
  }
  return out;
}

bool ct_equal(ByteView a, ByteView b) {
  if (a.size() != b.size()) return false;
  uint8_t acc = 0;
  for (size_t i = 0; i < a.size(); ++i) acc |= a[i] ^ b[i];
  return acc == 0;
}

std::string_view err_name(Err e) {
  switch (e) {
    case Err::BadMagic: return "BAD_MAGIC";
    case Err::LengthMismatch: return "LENGTH_MISMATCH";
    case Err::BadCrc: return "BAD_CRC";
    case Err::UnknownOpcode: return "UNKNOWN_OPCODE";
    case Err::FrameTooLarge: return "FRAME_TOO_LARGE";
    case Err::BadLength: return "BAD_LENGTH";
    case Err::BadPadding: return "BAD_PADDING";
    case Err::AuthFailed: return "AUTH_FAILED";
    case Err::InvalidPublic: return "INVALID_PUBLIC";
    case Err::WrongState: return "WRONG_STATE";
    case Err::DecryptFailed: return "DECRYPT_FAILED";
    case Err::NoPendingNonce: return "NO_PENDING_NONCE";
    case Err::IntegrityFailed: return "INTEGRITY_FAILED";
    case Err::SensorAsleep: return "SENSOR_ASLEEP";
    case Err::IsolationViolation: return "ISOLATION_VIOLATION";
    case Err::NoSuchSlot: return "NO_SUCH_SLOT";
    case Err::StoreFull: return "STORE_FULL";
    case Err::DebugDisabled: return "DEBUG_DISABLED";
    case Err::AlreadyRegistered: return "ALREADY_REGISTERED";
    case Err::NotRegistered: return "NOT_REGISTERED";
    case Err::NotOwner: return "NOT_OWNER";
    case Err::NoSuchVersion: return "NO_SUCH_VERSION";
    case Err::BadRequest: return "BAD_REQUEST";
    case Err::CloudUnreachable: return "CLOUD_UNREACHABLE";
    case Err::PinningBlocked: return "PINNING_BLOCKED";
    case Err::TamperEvident: return "TAMPER_EVIDENT";
    case Err::NothingHarvested: return "NOTHING_HARVESTED";
    case Err::RefusedByScan: return "REFUSED_BY_SCAN";
    case Err::UnknownScenario: return "UNKNOWN_SCENARIO";
    case Err::BadFixture: return "BAD_FIXTURE";
    case Err::IoError: return "IO_ERROR";
    case Err::TransportError: return "TRANSPORT_ERROR";
  }
  return "UNKNOWN_ERROR";
}

Err err_from_wire_id(uint8_t id) {
  if (id >= 1 && id <= 32) return static_cast<Err>(id);
  return Err::TransportError;
}

}  // namespace locklab

namespace locklab::wire {

namespace {

// CRC-16/CCITT-FALSE table, MSB-first.
struct CrcTable {
  uint16_t t[256];
  constexpr CrcTable() : t{} {
    for (int i = 0; i < 256; ++i) {
      uint16_t c = static_cast<uint16_t>(i << 8);
      for (int b = 0; b < 8; ++b) {
        c = (c & 0x8000) ? static_cast<uint16_t>((c << 1) ^ 0x1021)
                         : static_cast<uint16_t>(c << 1);
      }
      t[i] = c;
    }
  }
};

constexpr CrcTable kCrcTable;

}  // namespace

uint16_t crc16(ByteView data) {
  uint16_t crc = 0xFFFF;
  for (uint8_t b : data) {
    crc = static_cast<uint16_t>((crc << 8) ^ kCrcTable.t[((crc >> 8) ^ b) & 0xFF]);
  }
  return crc;
}

bool is_registered_request(uint8_t opcode) {
  return opcode >= op_byte(Op::GetRandom) && opcode <= op_byte(Op::AttestReq);
}

namespace {

Result<Bytes> encode_impl(const Frame& f, uint16_t crc_delta) {
  if (f.payload.size() > kMaxPayload) return Err::FrameTooLarge;
  Bytes out;
  out.reserve(6 + f.payload.size());
  out.push_back(kMagic);
  out.push_back(f.opcode);
  put_u16le(out, static_cast<uint16_t>(f.payload.size()));
  append(out, f.payload);
  // CRC over opcode||len||payload, i.e. everything after the magic byte.
  uint16_t crc = crc16(ByteView(out).subspan(1));
  put_u16be(out, static_cast<uint16_t>(crc + crc_delta));
  return out;
}

}  // namespace

Result<Bytes> encode(const Frame& f) { return encode_impl(f, 0); }

Result<Bytes> encode_with_bad_crc(const Frame& f, uint16_t delta) {
  return encode_impl(f, delta == 0 ? 1 : delta);
}

Result<Frame> decode(ByteView raw) {
  if (raw.size() < 6) return Err::LengthMismatch;
  if (raw[0] != kMagic) return Err::BadMagic;
  uint16_t len = get_u16le(raw.data() + 2);
  if (len > kMaxPayload) return Err::FrameTooLarge;
  if (raw.size() != static_cast<size_t>(6 + len)) return Err::LengthMismatch;
  uint16_t want = get_u16be(raw.data() + 4 + len);
  uint16_t got = crc16(raw.subspan(1, static_cast<size_t>(3 + len)));
  if (want != got) return Err::BadCrc;
  Frame f;
  f.opcode = raw[1];
  f.payload.assign(raw.begin() + 4, raw.begin() + 4 + len);
  return f;
}

}  // namespace locklab::wire
