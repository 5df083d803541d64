#include <doctest.h>

#include "locklab/firmware.hpp"
#include "oracles.hpp"

using namespace locklab;

namespace {

FwManifest manifest(const std::string& version, FwBehavior b, uint32_t size) {
  FwManifest m;
  m.version = version;
  m.behavior = b;
  m.image_size = size;
  return m;
}

Bytes test_image(size_t n = 700) {
  DeterministicRng rng(0xF1F2);
  return rng.bytes(n);
}

crypto::KeyPair signer() {
  DeterministicRng rng(0x51);
  return crypto::ed25519_keygen(rng);
}

}  // namespace

TEST_SUITE("manifest") {
  TEST_CASE("canonical serialization layout") {
    Bytes m = manifest_bytes(manifest("1.0.0", FwBehavior::Droplock, 0x01020304));
    Bytes expect = {5, '1', '.', '0', '.', '0', 1, 0x04, 0x03, 0x02, 0x01};
    CHECK(m == expect);
  }
}

TEST_SUITE("package format") {
  TEST_CASE("crc package roundtrips and carries the image checksum") {
    Bytes image = test_image();
    FwPackage pkg = fw_make_crc(
        manifest("2.0.0", FwBehavior::Legitimate,
                 static_cast<uint32_t>(image.size())),
        image);
    CHECK(pkg.integrity == FwIntegrity::Crc16);
    REQUIRE(pkg.check.size() == 2);
    uint16_t stored = static_cast<uint16_t>((pkg.check[0] << 8) | pkg.check[1]);
    CHECK(stored == oracle::crc16_bitwise(image));

    Bytes packed = fw_pack(pkg);
    auto back = fw_parse(packed);
    REQUIRE(back.ok());
    CHECK(back.value().manifest.version == "2.0.0");
    CHECK(back.value().manifest.behavior == FwBehavior::Legitimate);
    CHECK(back.value().manifest.image_size == image.size());
    CHECK(back.value().image == image);
    CHECK(back.value().integrity == FwIntegrity::Crc16);
    CHECK(back.value().check == pkg.check);
  }

  TEST_CASE("signed package roundtrips") {
    Bytes image = test_image();
    auto keys = signer();
    FwPackage pkg = fw_make_signed(
        manifest("2.1.0", FwBehavior::Legitimate,
                 static_cast<uint32_t>(image.size())),
        image, keys.priv);
    CHECK(pkg.integrity == FwIntegrity::Signature);
    CHECK(pkg.check.size() == 64);
    auto back = fw_parse(fw_pack(pkg));
    REQUIRE(back.ok());
    CHECK(back.value().check == pkg.check);
    CHECK(fw_verify(back.value(), FwIntegrity::Signature, &keys.pub).ok());
  }

  TEST_CASE("parser rejects malformed packages") {
    Bytes image = test_image(40);
    Bytes packed = fw_pack(fw_make_crc(
        manifest("1.0.0", FwBehavior::Legitimate, 40), image));

    SUBCASE("bad magic") {
      Bytes bad = packed;
      bad[0] = 'X';
      CHECK(!fw_parse(bad).ok());
    }
    SUBCASE("every truncation fails") {
      for (size_t keep = 0; keep < packed.size(); ++keep) {
        Bytes bad(packed.begin(), packed.begin() + keep);
        CAPTURE(keep);
        CHECK(!fw_parse(bad).ok());
      }
    }
    SUBCASE("trailing junk fails") {
      Bytes bad = packed;
      bad.push_back(0);
      CHECK(!fw_parse(bad).ok());
    }
  }
}

TEST_SUITE("verification policy") {
  TEST_CASE("crc policy accepts a good checksum, catches corruption") {
    Bytes image = test_image();
    FwPackage pkg = fw_make_crc(
        manifest("1.0.0", FwBehavior::Legitimate,
                 static_cast<uint32_t>(image.size())),
        image);
    CHECK(fw_verify(pkg, FwIntegrity::Crc16, nullptr).ok());

    FwPackage corrupted = pkg;
    corrupted.image[10] ^= 0x40;
    auto v = fw_verify(corrupted, FwIntegrity::Crc16, nullptr);
    REQUIRE(!v.ok());
    CHECK(v.error() == Err::IntegrityFailed);
  }

  TEST_CASE("crc says nothing about origin — a forgery passes") {
    // The attack this testbed reproduces in one line: anyone can compute a
    // checksum, so crc mode accepts a trojaned image as readily as a real one.
    Bytes evil = test_image(900);
    FwPackage pkg = fw_make_crc(
        manifest("9.9.9", FwBehavior::Droplock,
                 static_cast<uint32_t>(evil.size())),
        evil);
    CHECK(fw_verify(pkg, FwIntegrity::Crc16, nullptr).ok());
  }

  TEST_CASE("signature policy rejects everything but the vendor's signature") {
    Bytes image = test_image();
    auto keys = signer();
    FwManifest m = manifest("1.1.0", FwBehavior::Legitimate,
                            static_cast<uint32_t>(image.size()));
    FwPackage good = fw_make_signed(m, image, keys.priv);
    REQUIRE(fw_verify(good, FwIntegrity::Signature, &keys.pub).ok());

    SUBCASE("a crc package is refused outright") {
      FwPackage crc_pkg = fw_make_crc(m, image);
      auto v = fw_verify(crc_pkg, FwIntegrity::Signature, &keys.pub);
      REQUIRE(!v.ok());
      CHECK(v.error() == Err::IntegrityFailed);
    }
    SUBCASE("wrong signer is refused") {
      DeterministicRng rng(0x52);
      auto other = crypto::ed25519_keygen(rng);
      auto v = fw_verify(good, FwIntegrity::Signature, &other.pub);
      REQUIRE(!v.ok());
      CHECK(v.error() == Err::IntegrityFailed);
    }
    SUBCASE("image tamper is refused") {
      FwPackage bad = good;
      bad.image[0] ^= 1;
      CHECK(!fw_verify(bad, FwIntegrity::Signature, &keys.pub).ok());
    }
    SUBCASE("manifest is inside the signed envelope: relabeling fails") {
      FwPackage relabeled = good;
      relabeled.manifest.behavior = FwBehavior::Droplock;
      CHECK(!fw_verify(relabeled, FwIntegrity::Signature, &keys.pub).ok());

      FwPackage reversioned = good;
      reversioned.manifest.version = "99.0.0";
      CHECK(!fw_verify(reversioned, FwIntegrity::Signature, &keys.pub).ok());
    }
    SUBCASE("missing verify key fails closed") {
      auto v = fw_verify(good, FwIntegrity::Signature, nullptr);
      REQUIRE(!v.ok());
      CHECK(v.error() == Err::IntegrityFailed);
    }
    SUBCASE("a signed package under crc policy is refused (mode pinning)") {
      auto v = fw_verify(good, FwIntegrity::Crc16, &keys.pub);
      REQUIRE(!v.ok());
      CHECK(v.error() == Err::IntegrityFailed);
    }
  }
}
