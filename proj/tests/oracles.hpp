#pragma once

// Reference implementations written independently of src/, used only to
// cross-check the library under test, plus the golden-vector fixture loader.

#include <cstdint>
#include <map>
#include <string>

#include "locklab/bytes.hpp"

namespace oracle {

// CRC-16/CCITT-FALSE two ways: bit-at-a-time and table-driven.
uint16_t crc16_bitwise(locklab::ByteView data);
uint16_t crc16_table(locklab::ByteView data);

// FIPS 180-4 SHA-256 and RFC 2104 HMAC, from scratch.
locklab::Bytes sha256_ref(locklab::ByteView msg);
locklab::Bytes hmac_sha256_ref(locklab::ByteView key, locklab::ByteView msg);

// Parses "name = hex" lines ('#' comments, value may be empty).
// Aborts the test run on an unreadable file or bad hex.
std::map<std::string, locklab::Bytes> load_golden(const std::string& path);

}  // namespace oracle
