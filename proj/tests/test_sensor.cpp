#include <doctest.h>

#include "locklab/sensor.hpp"
#include "oracles.hpp"

using namespace locklab;

namespace {

FingerprintSensor make_sensor(int device_class, uint64_t key_seed = 1) {
  DeterministicRng rng(key_seed);
  return FingerprintSensor(device_class, rng.array<16>());
}

}  // namespace

TEST_SUITE("synthetic fingerprints") {
  TEST_CASE("images are a deterministic function of the finger alone") {
    FingerprintImage a = synth_fingerprint(7);
    FingerprintImage b = synth_fingerprint(7);
    FingerprintImage c = synth_fingerprint(8);
    CHECK(a.pixels.size() == FingerprintImage::kPixelBytes);
    CHECK(a.pixels == b.pixels);
    CHECK(a.pixels != c.pixels);
  }

  TEST_CASE("templates are 32-byte digests with exact-match semantics") {
    Bytes t7 = fingerprint_template(synth_fingerprint(7));
    Bytes t7b = fingerprint_template(synth_fingerprint(7));
    Bytes t8 = fingerprint_template(synth_fingerprint(8));
    CHECK(t7.size() == 32);
    CHECK(t7 == t7b);
    CHECK(t7 != t8);
    // The template is the image digest — check against the independent hash.
    CHECK(t7 == oracle::sha256_ref(synth_fingerprint(7).pixels));
  }
}

TEST_SUITE("sensor power") {
  TEST_CASE("everything refuses while asleep") {
    FingerprintSensor s = make_sensor(1);
    CHECK(!s.awake());
    auto cap = s.capture(7);
    REQUIRE(!cap.ok());
    CHECK(cap.error() == Err::SensorAsleep);
    CHECK(s.current_template().error() == Err::SensorAsleep);
    CHECK(s.enroll().error() == Err::SensorAsleep);
    CHECK(s.match().error() == Err::SensorAsleep);
    CHECK(s.image().error() == Err::SensorAsleep);
  }

  TEST_CASE("operations without a pending capture fail") {
    FingerprintSensor s = make_sensor(1);
    s.set_awake(true);
    CHECK(s.image().error() == Err::NoSuchSlot);
    CHECK(s.current_template().error() == Err::NoSuchSlot);
    CHECK(s.enroll().error() == Err::NoSuchSlot);
    CHECK(s.match().error() == Err::NoSuchSlot);
  }
}

TEST_SUITE("isolation classes") {
  TEST_CASE("class 1 exposes raw imagery to the host") {
    FingerprintSensor s = make_sensor(1);
    s.set_awake(true);
    REQUIRE(s.capture(7).ok());
    auto img = s.image();
    REQUIRE(img.ok());
    CHECK(img.value() == synth_fingerprint(7).pixels);
    auto tmpl = s.current_template();
    REQUIRE(tmpl.ok());
    CHECK(tmpl.value() == fingerprint_template(synth_fingerprint(7)));
  }

  TEST_CASE("class 2 refuses raw imagery before any other check") {
    FingerprintSensor s = make_sensor(2);
    // Asleep, no capture: the boundary still answers first.
    auto img0 = s.image();
    REQUIRE(!img0.ok());
    CHECK(img0.error() == Err::IsolationViolation);

    s.set_awake(true);
    REQUIRE(s.capture(7).ok());
    auto img = s.image();
    REQUIRE(!img.ok());
    CHECK(img.error() == Err::IsolationViolation);
    // Templates still cross the interface.
    auto tmpl = s.current_template();
    REQUIRE(tmpl.ok());
    CHECK(tmpl.value() == fingerprint_template(synth_fingerprint(7)));
  }

  TEST_CASE("class 3 wraps templates under a sensor-internal key") {
    FingerprintSensor s = make_sensor(3, 100);
    s.set_awake(true);
    REQUIRE(s.capture(7).ok());
    CHECK(s.image().error() == Err::IsolationViolation);

    auto wrapped = s.current_template();
    REQUIRE(wrapped.ok());
    Bytes raw = fingerprint_template(synth_fingerprint(7));
    CHECK(wrapped.value().size() == 32);  // indistinguishable by length
    CHECK(wrapped.value() != raw);

    // Deterministic per sensor, different across sensors (different keys).
    FingerprintSensor same = make_sensor(3, 100);
    same.set_awake(true);
    REQUIRE(same.capture(7).ok());
    CHECK(same.current_template().value() == wrapped.value());

    FingerprintSensor other = make_sensor(3, 101);
    other.set_awake(true);
    REQUIRE(other.capture(7).ok());
    CHECK(other.current_template().value() != wrapped.value());
  }

  TEST_CASE("exported slot store reflects the class") {
    for (int cls : {1, 2}) {
      FingerprintSensor s = make_sensor(cls);
      s.set_awake(true);
      REQUIRE(s.capture(7).ok());
      REQUIRE(s.enroll().ok());
      auto slots = s.exported_slots();
      REQUIRE(slots.size() == 1);
      CAPTURE(cls);
      CHECK(slots[0] == fingerprint_template(synth_fingerprint(7)));
    }
    FingerprintSensor s3 = make_sensor(3);
    s3.set_awake(true);
    REQUIRE(s3.capture(7).ok());
    REQUIRE(s3.enroll().ok());
    auto slots = s3.exported_slots();
    REQUIRE(slots.size() == 1);
    CHECK(slots[0] != fingerprint_template(synth_fingerprint(7)));
  }
}

TEST_SUITE("enroll and match") {
  TEST_CASE("enroll assigns sequential slots; match finds the right one") {
    for (int cls : {1, 2, 3}) {
      CAPTURE(cls);
      FingerprintSensor s = make_sensor(cls);
      s.set_awake(true);
      for (uint64_t f = 1; f <= 3; ++f) {
        REQUIRE(s.capture(f).ok());
        auto slot = s.enroll();
        REQUIRE(slot.ok());
        CHECK(slot.value() == static_cast<int>(f - 1));
      }
      CHECK(s.enrolled_count() == 3);

      REQUIRE(s.capture(2).ok());
      auto m = s.match();
      REQUIRE(m.ok());
      CHECK(m.value() == 1);

      REQUIRE(s.capture(9).ok());
      auto miss = s.match();
      REQUIRE(!miss.ok());
      CHECK(miss.error() == Err::AuthFailed);
    }
  }

  TEST_CASE("store capacity is enforced") {
    FingerprintSensor s = make_sensor(1);
    s.set_awake(true);
    for (size_t f = 0; f < FingerprintSensor::kMaxSlots; ++f) {
      REQUIRE(s.capture(f + 1000).ok());
      REQUIRE(s.enroll().ok());
    }
    REQUIRE(s.capture(5000).ok());
    auto full = s.enroll();
    REQUIRE(!full.ok());
    CHECK(full.error() == Err::StoreFull);
  }

  TEST_CASE("delete removes exactly the named slot") {
    FingerprintSensor s = make_sensor(1);
    s.set_awake(true);
    REQUIRE(s.capture(1).ok());
    REQUIRE(s.enroll().ok());
    REQUIRE(s.capture(2).ok());
    REQUIRE(s.enroll().ok());

    CHECK(s.delete_slot(5).error() == Err::NoSuchSlot);
    CHECK(s.delete_slot(-1).error() == Err::NoSuchSlot);
    REQUIRE(s.delete_slot(0).ok());
    CHECK(s.enrolled_count() == 1);

    REQUIRE(s.capture(1).ok());
    CHECK(!s.match().ok());  // finger 1's slot is gone
    REQUIRE(s.capture(2).ok());
    auto m = s.match();
    REQUIRE(m.ok());
    CHECK(m.value() == 0);  // finger 2 shifted down
  }
}
