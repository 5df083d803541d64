#pragma once

#include <string>

#include "locklab/cryptobox.hpp"
#include "locklab/result.hpp"

namespace locklab {

// Firmware behavior is a declared property of the image so the emulated lock
// can "run" it without an instruction set: legitimate firmware matches and
// unlocks; the trojaned build additionally pushes raw captures off-device.
enum class FwBehavior : uint8_t { Legitimate = 0, Droplock = 1 };

enum class FwIntegrity : uint8_t { Crc16 = 0, Signature = 1 };

struct FwManifest {
  std::string version;
  FwBehavior behavior = FwBehavior::Legitimate;
  uint32_t image_size = 0;
};

// Canonical manifest serialization (signature input, package header):
//   ver_len(1) || version || behavior(1) || image_size(4, LE)
Bytes manifest_bytes(const FwManifest& m);

// Update package:
//   "LLFW" || manifest || image || integrity(1) || check_len(2, LE) || check
//
// crc16 mode:     check = CRC-16/CCITT-FALSE over the image, 2 bytes BE.
// signature mode: check = Ed25519 over manifest || image, 64 bytes. Signing
//                 the manifest too keeps the behavior declaration inside the
//                 authenticated envelope; an image-only signature would let a
//                 forger relabel a genuine image.
struct FwPackage {
  FwManifest manifest;
  Bytes image;
  FwIntegrity integrity = FwIntegrity::Crc16;
  Bytes check;
};

Bytes fw_pack(const FwPackage& pkg);
Result<FwPackage> fw_parse(ByteView raw);

FwPackage fw_make_crc(const FwManifest& manifest, Bytes image);
FwPackage fw_make_signed(const FwManifest& manifest, Bytes image,
                         const crypto::Key32& signing_priv);

// Validation under a receiver policy. The receiver accepts only its own
// integrity mode; a crc16 package offered to a signature-mode receiver fails
// regardless of its CRC. verify_key is required for signature mode.
Status fw_verify(const FwPackage& pkg, FwIntegrity required_mode,
                 const crypto::Key32* verify_key);

}  // namespace locklab
