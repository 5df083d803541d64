#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <variant>

namespace locklab {

// Every failure in the testbed maps to one of these. Values 1..18 are the
// lock's wire-visible error identifiers (carried in ERROR frames); the rest
// are host-side (cloud, app, attacker, harness) and never appear in a frame.
enum class Err : uint8_t {
  // wire / frame structure
  BadMagic = 1,
  LengthMismatch = 2,
  BadCrc = 3,
  UnknownOpcode = 4,
  FrameTooLarge = 5,
  // crypto surface
  BadLength = 6,
  BadPadding = 7,
  AuthFailed = 8,
  InvalidPublic = 9,
  // lock state machine / session
  WrongState = 10,
  DecryptFailed = 11,
  NoPendingNonce = 12,
  IntegrityFailed = 13,
  // sensor
  SensorAsleep = 14,
  IsolationViolation = 15,
  NoSuchSlot = 16,
  StoreFull = 17,
  // debug port
  DebugDisabled = 18,
  // cloud API
  AlreadyRegistered = 19,
  NotRegistered = 20,
  NotOwner = 21,
  NoSuchVersion = 22,
  BadRequest = 23,
  CloudUnreachable = 24,
  // app / attacker
  PinningBlocked = 25,
  TamperEvident = 26,
  NothingHarvested = 27,
  RefusedByScan = 28,
  // harness
  UnknownScenario = 29,
  BadFixture = 30,
  IoError = 31,
  TransportError = 32,
};

std::string_view err_name(Err e);

// Wire error id <-> Err. Only ids 1..18 are ever emitted by a lock; decoding
// tolerates the full table so harness-level errors can transit test fixtures.
inline uint8_t err_wire_id(Err e) { return static_cast<uint8_t>(e); }
Err err_from_wire_id(uint8_t id);  // unknown ids map to TransportError

// Minimal expected-like result. The codebase returns status codes rather than
// throwing; exceptions are reserved for programming errors.
template <typename T>
class [[nodiscard]] Result {
 public:
  Result(T value) : v_(std::move(value)) {}
  Result(Err e) : v_(e) {}

  bool ok() const { return std::holds_alternative<T>(v_); }
  explicit operator bool() const { return ok(); }

  const T& value() const& { return std::get<T>(v_); }
  T& value() & { return std::get<T>(v_); }
  T&& take() { return std::move(std::get<T>(v_)); }
  Err error() const { return std::get<Err>(v_); }

 private:
  std::variant<T, Err> v_;
};

template <>
class [[nodiscard]] Result<void> {
 public:
  Result() : err_(static_cast<Err>(0)) {}
  Result(Err e) : err_(e) {}

  bool ok() const { return err_ == static_cast<Err>(0); }
  explicit operator bool() const { return ok(); }
  Err error() const { return err_; }

  static Result<void> success() { return Result<void>(); }

 private:
  Err err_;
};

using Status = Result<void>;

}  // namespace locklab
