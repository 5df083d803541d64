#include "locklab/firmware.hpp"

#include "locklab/wire.hpp"

namespace locklab {

namespace {

constexpr char kFwMagic[4] = {'L', 'L', 'F', 'W'};

Bytes signed_input(const FwManifest& manifest, ByteView image) {
  Bytes input = manifest_bytes(manifest);
  append(input, image);
  return input;
}

}  // namespace

Bytes manifest_bytes(const FwManifest& m) {
  Bytes out;
  out.push_back(static_cast<uint8_t>(m.version.size()));
  append(out, to_bytes(m.version));
  out.push_back(static_cast<uint8_t>(m.behavior));
  put_u32le(out, m.image_size);
  return out;
}

Bytes fw_pack(const FwPackage& pkg) {
  Bytes out;
  out.insert(out.end(), kFwMagic, kFwMagic + 4);
  FwManifest m = pkg.manifest;
  m.image_size = static_cast<uint32_t>(pkg.image.size());
  append(out, manifest_bytes(m));
  append(out, pkg.image);
  out.push_back(static_cast<uint8_t>(pkg.integrity));
  put_u16le(out, static_cast<uint16_t>(pkg.check.size()));
  append(out, pkg.check);
  return out;
}

Result<FwPackage> fw_parse(ByteView raw) {
  size_t pos = 0;
  auto need = [&](size_t n) { return raw.size() - pos >= n; };
  if (!need(4) || std::memcmp(raw.data(), kFwMagic, 4) != 0) {
    return Err::IntegrityFailed;
  }
  pos += 4;
  FwPackage pkg;
  if (!need(1)) return Err::IntegrityFailed;
  size_t ver_len = raw[pos++];
  if (!need(ver_len + 1 + 4)) return Err::IntegrityFailed;
  pkg.manifest.version.assign(raw.begin() + pos, raw.begin() + pos + ver_len);
  pos += ver_len;
  uint8_t behavior = raw[pos++];
  if (behavior > static_cast<uint8_t>(FwBehavior::Droplock)) {
    return Err::IntegrityFailed;
  }
  pkg.manifest.behavior = static_cast<FwBehavior>(behavior);
  pkg.manifest.image_size = get_u32le(raw.data() + pos);
  pos += 4;
  if (!need(pkg.manifest.image_size)) return Err::IntegrityFailed;
  pkg.image.assign(raw.begin() + pos, raw.begin() + pos + pkg.manifest.image_size);
  pos += pkg.manifest.image_size;
  if (!need(1 + 2)) return Err::IntegrityFailed;
  uint8_t integ = raw[pos++];
  if (integ > static_cast<uint8_t>(FwIntegrity::Signature)) {
    return Err::IntegrityFailed;
  }
  pkg.integrity = static_cast<FwIntegrity>(integ);
  uint16_t check_len = get_u16le(raw.data() + pos);
  pos += 2;
  if (raw.size() - pos != check_len) return Err::IntegrityFailed;
  pkg.check.assign(raw.begin() + pos, raw.end());
  return pkg;
}

FwPackage fw_make_crc(const FwManifest& manifest, Bytes image) {
  FwPackage pkg;
  pkg.manifest = manifest;
  pkg.manifest.image_size = static_cast<uint32_t>(image.size());
  pkg.image = std::move(image);
  pkg.integrity = FwIntegrity::Crc16;
  put_u16be(pkg.check, wire::crc16(pkg.image));
  return pkg;
}

FwPackage fw_make_signed(const FwManifest& manifest, Bytes image,
                         const crypto::Key32& signing_priv) {
  FwPackage pkg;
  pkg.manifest = manifest;
  pkg.manifest.image_size = static_cast<uint32_t>(image.size());
  pkg.image = std::move(image);
  pkg.integrity = FwIntegrity::Signature;
  pkg.check = crypto::ed25519_sign(signing_priv,
                                   signed_input(pkg.manifest, pkg.image));
  return pkg;
}

Status fw_verify(const FwPackage& pkg, FwIntegrity required_mode,
                 const crypto::Key32* verify_key) {
  if (pkg.manifest.image_size != pkg.image.size()) return Err::IntegrityFailed;
  if (pkg.integrity != required_mode) return Err::IntegrityFailed;
  if (required_mode == FwIntegrity::Crc16) {
    if (pkg.check.size() != 2) return Err::IntegrityFailed;
    if (get_u16be(pkg.check.data()) != wire::crc16(pkg.image)) {
      return Err::IntegrityFailed;
    }
    return {};
  }
  if (verify_key == nullptr) return Err::IntegrityFailed;
  if (!crypto::ed25519_verify(*verify_key, signed_input(pkg.manifest, pkg.image),
                              pkg.check)) {
    return Err::IntegrityFailed;
  }
  return {};
}

}  // namespace locklab
