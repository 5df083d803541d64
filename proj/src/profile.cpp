#include "locklab/profile.hpp"

#include <sstream>

namespace locklab {

SecurityProfile SecurityProfile::vulnerable() {
  return SecurityProfile{};  // field defaults model the surveyed ecosystem
}

SecurityProfile SecurityProfile::hardened() {
  SecurityProfile p;
  p.session_auth = SessionAuth::MutualAuth;
  p.api_mode = ApiMode::DhSession;
  p.dfu_integrity = FwIntegrity::Signature;
  p.sensor_class = 2;
  p.debug_port = false;
  p.wake_mode = WakeMode::Button;
  p.tamper_evident = true;
  p.attestation = true;
  p.victim_scans_first = true;
  p.pinning_hardened = true;
  return p;
}

std::string_view row_name(MatrixRow row) {
  switch (row) {
    case MatrixRow::A: return "A";
    case MatrixRow::B: return "B";
    case MatrixRow::F: return "F";
    case MatrixRow::G: return "G";
    case MatrixRow::H: return "H";
    case MatrixRow::C01: return "C01";
    case MatrixRow::C02: return "C02";
    case MatrixRow::C03: return "C03";
    case MatrixRow::C04: return "C04";
    case MatrixRow::C06: return "C06";
  }
  return "?";
}

std::optional<MatrixRow> parse_row(std::string_view name) {
  for (MatrixRow row : kAllRows) {
    if (row_name(row) == name) return row;
  }
  return std::nullopt;
}

std::vector<MatrixRow> row_group(MatrixRow row) {
  switch (row) {
    case MatrixRow::F:
    case MatrixRow::G:
      return {MatrixRow::F, MatrixRow::G};
    case MatrixRow::H:
    case MatrixRow::C03:
      return {MatrixRow::H, MatrixRow::C03};
    default:
      return {row};
  }
}

void ablate(SecurityProfile& profile, MatrixRow row) {
  switch (row) {
    case MatrixRow::A:
      profile.pinning_hardened = false;
      break;
    case MatrixRow::B:
      profile.api_mode = ApiMode::StaticKey;
      break;
    case MatrixRow::F:
    case MatrixRow::G:
      profile.session_auth = SessionAuth::OfflineKdf;
      break;
    case MatrixRow::H:
    case MatrixRow::C03:
      profile.dfu_integrity = FwIntegrity::Crc16;
      break;
    case MatrixRow::C01:
      profile.tamper_evident = false;
      break;
    case MatrixRow::C02:
      profile.debug_port = true;
      break;
    case MatrixRow::C04:
      profile.sensor_class = 1;
      break;
    case MatrixRow::C06:
      profile.attestation = false;
      profile.victim_scans_first = false;
      break;
  }
}

Result<std::vector<MatrixRow>> parse_ablation_list(std::string_view csv) {
  std::vector<MatrixRow> rows;
  if (csv.empty()) return rows;
  std::stringstream ss{std::string(csv)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto row = parse_row(item);
    if (!row) return Err::BadRequest;
    rows.push_back(*row);
  }
  return rows;
}

std::string profile_label(const SecurityProfile& p) {
  auto same = [](const SecurityProfile& a, const SecurityProfile& b) {
    return a.session_auth == b.session_auth && a.api_mode == b.api_mode &&
           a.dfu_integrity == b.dfu_integrity &&
           a.sensor_class == b.sensor_class && a.debug_port == b.debug_port &&
           a.wake_mode == b.wake_mode && a.tamper_evident == b.tamper_evident &&
           a.attestation == b.attestation &&
           a.victim_scans_first == b.victim_scans_first &&
           a.pinning_hardened == b.pinning_hardened;
  };
  if (same(p, SecurityProfile::vulnerable())) return "vulnerable";
  if (same(p, SecurityProfile::hardened())) return "hardened";
  return "custom";
}

}  // namespace locklab
