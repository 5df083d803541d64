#include <doctest.h>

#include "locklab/rng.hpp"
#include "locklab/wire.hpp"
#include "oracles.hpp"

using namespace locklab;

TEST_SUITE("crc16") {
  TEST_CASE("matches the frozen known-answer vectors") {
    auto g = oracle::load_golden("fixtures/golden_vectors.txt");
    for (const char* name : {"empty", "check", "header", "ascii", "bin"}) {
      const Bytes& msg = g.at(std::string("crc16.") + name + ".msg");
      const Bytes& want = g.at(std::string("crc16.") + name + ".crc");
      REQUIRE(want.size() == 2);
      uint16_t expected = static_cast<uint16_t>((want[0] << 8) | want[1]);
      CAPTURE(name);
      CHECK(wire::crc16(msg) == expected);
    }
  }

  TEST_CASE("agrees with two independent reference implementations") {
    DeterministicRng rng(0xC0FFEE);
    for (size_t len : {0u, 1u, 2u, 15u, 16u, 17u, 63u, 255u, 512u, 1000u}) {
      Bytes data = rng.bytes(len);
      CAPTURE(len);
      uint16_t ours = wire::crc16(data);
      CHECK(ours == oracle::crc16_bitwise(data));
      CHECK(ours == oracle::crc16_table(data));
    }
  }
}

TEST_SUITE("frame codec") {
  TEST_CASE("roundtrips payloads of every size class") {
    DeterministicRng rng(7);
    for (size_t len : {0u, 1u, 2u, 255u, 256u, 511u, 512u}) {
      wire::Frame f = wire::Frame::request(wire::Op::EncCmd, rng.bytes(len));
      auto raw = wire::encode(f);
      REQUIRE(raw.ok());
      CHECK(raw.value().size() == 1 + 1 + 2 + len + 2);
      auto back = wire::decode(raw.value());
      REQUIRE(back.ok());
      CHECK(back.value().opcode == f.opcode);
      CHECK(back.value().payload == f.payload);
    }
  }

  TEST_CASE("encoded layout is magic, opcode, LE length, payload, BE crc") {
    wire::Frame f = wire::Frame::request(wire::Op::GetRandom);
    auto raw = wire::encode(f);
    REQUIRE(raw.ok());
    const Bytes& b = raw.value();
    REQUIRE(b.size() == 6);
    CHECK(b[0] == 0xA5);
    CHECK(b[1] == 0x01);
    CHECK(b[2] == 0x00);  // len LE
    CHECK(b[3] == 0x00);
    // CRC over opcode || len || payload; frozen vector crc16(01 00 00).
    CHECK(b[4] == 0xFB);
    CHECK(b[5] == 0xAC);
  }

  TEST_CASE("refuses payloads over the maximum") {
    Bytes big(wire::kMaxPayload + 1, 0xAA);
    auto raw = wire::encode(wire::Frame::request(wire::Op::DfuData, big));
    REQUIRE(!raw.ok());
    CHECK(raw.error() == Err::FrameTooLarge);

    Bytes max(wire::kMaxPayload, 0xAA);
    CHECK(wire::encode(wire::Frame::request(wire::Op::DfuData, max)).ok());
  }

  TEST_CASE("rejects structural corruption with the specific error") {
    wire::Frame f = wire::Frame::request(wire::Op::SessionInit, Bytes{1, 2, 3});
    Bytes good = wire::encode(f).take();

    SUBCASE("wrong magic byte") {
      Bytes bad = good;
      bad[0] = 0x5A;
      auto r = wire::decode(bad);
      REQUIRE(!r.ok());
      CHECK(r.error() == Err::BadMagic);
    }
    SUBCASE("truncated") {
      for (size_t keep = 0; keep < good.size(); ++keep) {
        Bytes bad(good.begin(), good.begin() + keep);
        auto r = wire::decode(bad);
        CAPTURE(keep);
        REQUIRE(!r.ok());
        CHECK((r.error() == Err::LengthMismatch || r.error() == Err::BadMagic ||
               r.error() == Err::BadCrc));
      }
    }
    SUBCASE("trailing junk") {
      Bytes bad = good;
      bad.push_back(0x00);
      auto r = wire::decode(bad);
      REQUIRE(!r.ok());
      CHECK(r.error() == Err::LengthMismatch);
    }
    SUBCASE("length field lies") {
      Bytes bad = good;
      bad[2] = 2;  // claims 2, carries 3
      auto r = wire::decode(bad);
      REQUIRE(!r.ok());
      CHECK((r.error() == Err::LengthMismatch || r.error() == Err::BadCrc));
    }
    SUBCASE("corrupted crc trailer") {
      auto bad = wire::encode_with_bad_crc(f);
      REQUIRE(bad.ok());
      auto r = wire::decode(bad.value());
      REQUIRE(!r.ok());
      CHECK(r.error() == Err::BadCrc);
    }
    SUBCASE("every single-bit flip in the body is caught") {
      // CRC-16 detects all single-bit errors by construction.
      for (size_t i = 1; i < good.size(); ++i) {
        for (int bit = 0; bit < 8; ++bit) {
          Bytes bad = good;
          bad[i] ^= static_cast<uint8_t>(1 << bit);
          auto r = wire::decode(bad);
          CAPTURE(i);
          CAPTURE(bit);
          CHECK(!r.ok());
        }
      }
    }
  }

  TEST_CASE("error frames carry one wire error id") {
    wire::Frame e = wire::Frame::error(Err::AuthFailed);
    CHECK(e.is_error());
    CHECK(e.opcode == 0xFF);
    REQUIRE(e.payload.size() == 1);
    CHECK(e.payload[0] == 8);
    Bytes raw = wire::encode(e).take();
    auto back = wire::decode(raw);
    REQUIRE(back.ok());
    CHECK(back.value().is_error());
    CHECK(err_from_wire_id(back.value().payload[0]) == Err::AuthFailed);
  }

  TEST_CASE("request and response opcode spaces") {
    CHECK(wire::op_byte(wire::Op::GetRandom) == 0x01);
    CHECK(wire::op_byte(wire::Op::AttestReq) == 0x0A);
    CHECK(wire::response_op(wire::Op::GetRandom) == 0x81);
    CHECK(wire::is_registered_request(0x01));
    CHECK(wire::is_registered_request(0x0A));
    CHECK(!wire::is_registered_request(0x00));
    CHECK(!wire::is_registered_request(0x0B));
    CHECK(!wire::is_registered_request(0x81));  // responses are not requests
    CHECK(!wire::is_registered_request(0xFF));
  }
}

TEST_SUITE("error identifiers") {
  TEST_CASE("wire ids roundtrip and unknown ids degrade to TransportError") {
    for (int id = 1; id <= 18; ++id) {
      CHECK(err_from_wire_id(static_cast<uint8_t>(id)) ==
            static_cast<Err>(id));
    }
    CHECK(err_from_wire_id(0) == Err::TransportError);
    CHECK(err_from_wire_id(200) == Err::TransportError);
  }

  TEST_CASE("names are stable and distinct") {
    CHECK(err_name(Err::AuthFailed) == "AUTH_FAILED");
    CHECK(err_name(Err::IntegrityFailed) == "INTEGRITY_FAILED");
    CHECK(err_name(Err::TamperEvident) == "TAMPER_EVIDENT");
    CHECK(err_name(Err::DebugDisabled) == "DEBUG_DISABLED");
    CHECK(err_name(Err::IsolationViolation) == "ISOLATION_VIOLATION");
    CHECK(err_name(Err::RefusedByScan) == "REFUSED_BY_SCAN");
    CHECK(err_name(Err::PinningBlocked) == "PINNING_BLOCKED");
    CHECK(err_name(Err::NothingHarvested) == "NOTHING_HARVESTED");
    for (int a = 1; a <= 32; ++a) {
      for (int b = a + 1; b <= 32; ++b) {
        CHECK(err_name(static_cast<Err>(a)) != err_name(static_cast<Err>(b)));
      }
    }
  }
}

TEST_SUITE("deterministic rng") {
  TEST_CASE("equal seeds give equal streams, different seeds differ") {
    DeterministicRng a(42), b(42), c(43);
    Bytes sa = a.bytes(64), sb = b.bytes(64), sc = c.bytes(64);
    CHECK(sa == sb);
    CHECK(sa != sc);
  }

  TEST_CASE("standard-mandated engine: default seed, 10000th draw") {
    // The 64-bit Mersenne Twister's 10000th output from the default seed is
    // fixed by the language standard, giving an implementation-independent
    // anchor for the whole byte stream.
    std::mt19937_64 eng;  // default seed 5489
    uint64_t v = 0;
    for (int i = 0; i < 10000; ++i) v = eng();
    CHECK(v == 9981545732273789042ULL);
  }

  TEST_CASE("byte stream is the LE serialization of the draw stream") {
    DeterministicRng a(7), b(7);
    Bytes stream = a.bytes(24);
    Bytes manual;
    for (int i = 0; i < 3; ++i) put_u64le(manual, b.next_u64());
    CHECK(stream == manual);

    // Partial draws truncate the final word.
    DeterministicRng c(7), d(7);
    Bytes five = c.bytes(5);
    Bytes eight;
    put_u64le(eight, d.next_u64());
    CHECK(Bytes(eight.begin(), eight.begin() + 5) == five);
  }

  TEST_CASE("forked children are independent of later parent draws") {
    DeterministicRng p1(9), p2(9);
    DeterministicRng c1 = p1.fork();
    DeterministicRng c2 = p2.fork();
    (void)p1.next_u64();  // perturb one parent after forking
    CHECK(c1.bytes(32) == c2.bytes(32));
  }
}
