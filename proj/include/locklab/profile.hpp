#pragma once

#include <optional>
#include <string>
#include <vector>

#include "locklab/cryptobox.hpp"
#include "locklab/firmware.hpp"

namespace locklab {

// How a lock authenticates session establishment.
//   OfflineKdf: proof derivable by anyone holding the (fixed) key, serial and
//               nonce; the lock consults no one.
//   MutualAuth: the proof must additionally carry a cloud-issued token
//               binding serial and nonce, and the session runs GCM.
enum class SessionAuth : uint8_t { OfflineKdf = 0, MutualAuth = 1 };

// How the vendor API encrypts envelope bodies.
//   StaticKey: one AES key baked into every app build and the cloud.
//   DhSession: per-connection X25519 handshake; bodies sealed with GCM.
enum class ApiMode : uint8_t { StaticKey = 0, DhSession = 1 };

enum class WakeMode : uint8_t { Touch = 0, Button = 1 };

// One toggle per defensive control. "vulnerable" models the ecosystem as the
// field study found it; "hardened" turns every control on.
struct SecurityProfile {
  SessionAuth session_auth = SessionAuth::OfflineKdf;
  ApiMode api_mode = ApiMode::StaticKey;
  FwIntegrity dfu_integrity = FwIntegrity::Crc16;
  int sensor_class = 1;
  bool debug_port = true;
  WakeMode wake_mode = WakeMode::Touch;
  bool tamper_evident = false;
  bool attestation = false;          // lock answers attestation challenges
  bool victim_scans_first = false;   // user policy: verify device before touch
  bool pinning_hardened = false;     // app build resists pinning removal

  static SecurityProfile vulnerable();
  static SecurityProfile hardened();
};

// Threat-matrix rows. Each names one exploit probe; several rows share one
// control (F and G are both defeated by session_auth, H and C03 are the same
// control seen from attack and recommendation side respectively).
enum class MatrixRow {
  A,    // API interception via app patching        -> pinning_hardened
  B,    // static-key traffic decryption            -> api_mode
  F,    // offline factory takeover                 -> session_auth
  G,    // offline device-session takeover          -> session_auth
  H,    // forged firmware via checksum-only DFU    -> dfu_integrity
  C01,  // covert physical intrusion                -> tamper_evident
  C02,  // debug-port flash dump                    -> debug_port
  C03,  // alias of H (recommendation side)         -> dfu_integrity
  C04,  // raw biometric exfiltration from firmware -> sensor_class
  C06,  // impostor-device deception                -> attestation + scan-first
};

constexpr MatrixRow kAllRows[] = {MatrixRow::A,   MatrixRow::B,  MatrixRow::F,
                                  MatrixRow::G,   MatrixRow::H,  MatrixRow::C01,
                                  MatrixRow::C02, MatrixRow::C03, MatrixRow::C04,
                                  MatrixRow::C06};

std::string_view row_name(MatrixRow row);
std::optional<MatrixRow> parse_row(std::string_view name);

// Rows disabled by the same control as `row` (always includes `row` itself).
std::vector<MatrixRow> row_group(MatrixRow row);

// Reverts the control behind `row` to its vulnerable setting.
void ablate(SecurityProfile& profile, MatrixRow row);

// Parses "G,H" / "C01" etc.; empty string means no ablation.
Result<std::vector<MatrixRow>> parse_ablation_list(std::string_view csv);

std::string profile_label(const SecurityProfile& p);  // "vulnerable"/"hardened"/"custom"

// The enrollment key baked into every lock at the factory and recoverable
// from any app build; its value is public knowledge within the testbed.
constexpr crypto::Key16 kFactoryKey = {0x4c, 0x4f, 0x43, 0x4b, 0x4c, 0x41,
                                       0x42, 0x2d, 0x46, 0x41, 0x43, 0x54,
                                       0x4f, 0x52, 0x59, 0x30};

// Serial used for key derivation before an identity is assigned.
constexpr crypto::Serial kFactorySerial = {0, 0, 0, 0, 0, 0, 0, 0};

}  // namespace locklab
