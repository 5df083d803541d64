#pragma once

#include "locklab/bytes.hpp"
#include "locklab/result.hpp"

namespace locklab::wire {

// Frame layout (BLE GATT stand-in):
//
//   magic(1)=0xA5 | opcode(1) | len(2, LE) | payload(len) | crc16(2, BE)
//
// CRC-16/CCITT-FALSE over opcode||len||payload (magic excluded). Requests use
// the registered opcodes below; a response echoes the request opcode with the
// high bit set. Errors are reported with opcode 0xFF (Error|0x80) carrying a
// single-byte error identifier; error frames are always plaintext.
constexpr uint8_t kMagic = 0xA5;
constexpr size_t kMaxPayload = 512;
constexpr uint8_t kResponseBit = 0x80;

enum class Op : uint8_t {
  GetRandom = 0x01,     // -> nonce16
  SessionInit = 0x02,   // proof [|| cloud token] -> sealed ack
  EncCmd = 0x03,        // sealed command
  SensorCmd = 0x04,     // sealed sensor sub-command
  EnterDfu = 0x05,      // sealed, device-origin sessions only
  DfuData = 0x06,       // plaintext package chunk (DFU mode has no session)
  DfuExecute = 0x07,    // plaintext, validates and installs
  DebugDump = 0x08,     // plaintext flash dump over the debug port
  FactoryEnroll = 0x09, // sealed identity assignment, factory sessions only
  AttestReq = 0x0A,     // plaintext challenge -> identity attestation
  Error = 0x7F,
};

constexpr uint8_t op_byte(Op op) { return static_cast<uint8_t>(op); }
constexpr uint8_t response_op(Op op) { return op_byte(op) | kResponseBit; }
constexpr uint8_t kErrorOp = response_op(Op::Error);  // 0xFF

bool is_registered_request(uint8_t opcode);

struct Frame {
  uint8_t opcode = 0;
  Bytes payload;

  bool is_error() const { return opcode == kErrorOp; }
  static Frame request(Op op, Bytes payload = {}) {
    return Frame{op_byte(op), std::move(payload)};
  }
  static Frame response(Op op, Bytes payload = {}) {
    return Frame{response_op(op), std::move(payload)};
  }
  static Frame error(Err e) { return Frame{kErrorOp, Bytes{err_wire_id(e)}}; }
};

// CRC-16/CCITT-FALSE: poly 0x1021, init 0xFFFF, no reflection, no final xor.
// check("123456789") == 0x29B1.
uint16_t crc16(ByteView data);

// Serialization. encode() refuses oversized payloads via FrameTooLarge.
Result<Bytes> encode(const Frame& f);
Result<Frame> decode(ByteView raw);

// Convenience for tests and fault injection: encode with a deliberately
// corrupted CRC (valid structure, trailer off by the given delta).
Result<Bytes> encode_with_bad_crc(const Frame& f, uint16_t delta = 1);

}  // namespace locklab::wire
