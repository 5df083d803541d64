#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "locklab/matrix.hpp"
#include "locklab/report.hpp"
#include "locklab/scenario.hpp"
#include "locklab/world.hpp"
#include "oracles.hpp"

using namespace locklab;

TEST_SUITE("harness names") {
  TEST_CASE("transports") {
    CHECK(transport_name(Transport::Inproc) == "inproc");
    CHECK(transport_name(Transport::Loopback) == "loopback");
    for (Transport t : {Transport::Inproc, Transport::Loopback}) {
      auto back = parse_transport(transport_name(t));
      REQUIRE(back.ok());
      CHECK(back.value() == t);
    }
    CHECK(!parse_transport("carrier-pigeon").ok());
  }

  TEST_CASE("matrix rows round-trip and unknown names are refused") {
    for (MatrixRow row : kAllRows) {
      auto back = parse_row(row_name(row));
      REQUIRE(back.has_value());
      CHECK(*back == row);
    }
    CHECK(!parse_row("Z").has_value());
    CHECK(!parse_row("c01").has_value());
  }

  TEST_CASE("rows sharing a control form a group") {
    auto names = [](std::vector<MatrixRow> rows) {
      std::string out;
      for (MatrixRow r : rows) out += std::string(row_name(r)) + " ";
      return out;
    };
    CHECK(names(row_group(MatrixRow::F)) == "F G ");
    CHECK(names(row_group(MatrixRow::G)) == "F G ");
    CHECK(names(row_group(MatrixRow::H)) == "H C03 ");
    CHECK(names(row_group(MatrixRow::C03)) == "H C03 ");
    CHECK(names(row_group(MatrixRow::A)) == "A ");
    CHECK(names(row_group(MatrixRow::C06)) == "C06 ");
  }

  TEST_CASE("ablation lists parse, canonicalize and label") {
    auto rows = parse_ablation_list("H,G,G");
    REQUIRE(rows.ok());
    auto canon = canonical_ablations(rows.take());
    CHECK(ablation_string(canon) == "G,H");
    CHECK(config_label("hardened", canon) == "hardened/G,H");
    CHECK(config_label("vulnerable", {}) == "vulnerable");
    CHECK(parse_ablation_list("").value().empty());
    CHECK(!parse_ablation_list("G,Z").ok());
    CHECK(!parse_ablation_list(",").ok());
  }

  TEST_CASE("profiles by name and by label") {
    REQUIRE(profile_by_name("vulnerable").ok());
    REQUIRE(profile_by_name("hardened").ok());
    CHECK(!profile_by_name("medium").ok());
    CHECK(profile_label(SecurityProfile::vulnerable()) == "vulnerable");
    CHECK(profile_label(SecurityProfile::hardened()) == "hardened");
    auto p = SecurityProfile::hardened();
    ablate(p, MatrixRow::G);
    CHECK(profile_label(p) == "custom");
  }

  TEST_CASE("each ablation reverts exactly its own control") {
    const SecurityProfile h = SecurityProfile::hardened();
    const SecurityProfile v = SecurityProfile::vulnerable();

    auto count_diffs = [&](const SecurityProfile& p) {
      int n = 0;
      n += p.session_auth != h.session_auth;
      n += p.api_mode != h.api_mode;
      n += p.dfu_integrity != h.dfu_integrity;
      n += p.sensor_class != h.sensor_class;
      n += p.debug_port != h.debug_port;
      n += p.wake_mode != h.wake_mode;
      n += p.tamper_evident != h.tamper_evident;
      n += p.attestation != h.attestation;
      n += p.victim_scans_first != h.victim_scans_first;
      n += p.pinning_hardened != h.pinning_hardened;
      return n;
    };

    auto check_one = [&](MatrixRow row, int expected_diffs) {
      CAPTURE(row_name(row));
      SecurityProfile p = h;
      ablate(p, row);
      CHECK(count_diffs(p) == expected_diffs);
    };
    check_one(MatrixRow::A, 1);
    check_one(MatrixRow::B, 1);
    check_one(MatrixRow::F, 1);
    check_one(MatrixRow::G, 1);
    check_one(MatrixRow::H, 1);
    check_one(MatrixRow::C01, 1);
    check_one(MatrixRow::C02, 1);
    check_one(MatrixRow::C04, 1);
    check_one(MatrixRow::C06, 2);  // attestation plus the scan habit

    SUBCASE("ablating every row lands exactly on the vulnerable profile") {
      SecurityProfile p = h;
      for (MatrixRow row : kAllRows) ablate(p, row);
      // wake_mode has no matrix row; it is a usability dial, not a control
      // probed by the matrix, so align it manually for the comparison.
      p.wake_mode = v.wake_mode;
      CHECK(profile_label(p) == "vulnerable");
    }
  }
}

TEST_SUITE("harness fixtures") {
  TEST_CASE("the shipped fixture set loads and is self-consistent") {
    auto fx = load_fixtures("fixtures");
    REQUIRE(fx.ok());
    const Fixtures& f = fx.value();
    CHECK(f.factory_version == "1.0.0");
    CHECK(f.update_version == "1.1.0");
    CHECK(f.droplock_version == "9.9.9");
    CHECK(f.factory_image.size() == 1184);
    CHECK(f.update_image.size() == 1492);
    CHECK(f.droplock_image.size() == 1730);
    // Images must be pairwise distinct or the scan checks would be vacuous.
    CHECK(f.factory_image != f.update_image);
    CHECK(f.factory_image != f.droplock_image);
  }

  TEST_CASE("a missing fixture directory is reported, not crashed on") {
    auto fx = load_fixtures("no/such/dir");
    REQUIRE(!fx.ok());
    CHECK(fx.error() == Err::IoError);
  }
}

TEST_SUITE("scenario grammar") {
  static constexpr const char* kGood = R"(# demo script
scenario demo
title A demo, with punctuation

step get_random
step session_init
step get_random          # second one gets a numbered label
step bolt_check expect=closed
expect vulnerable SUCCEEDS
expect hardened FAILS_AT:session_init:AUTH_FAILED
expect hardened/G,F SUCCEEDS
)";

  TEST_CASE("a well-formed script parses completely") {
    auto r = scenario_parse(kGood);
    REQUIRE(r.ok());
    const ScenarioSpec& s = r.value();
    CHECK(s.name == "demo");
    CHECK(s.title == "A demo, with punctuation");
    REQUIRE(s.steps.size() == 4);
    CHECK(s.steps[0].label == "get_random");
    CHECK(s.steps[2].label == "get_random-2");
    CHECK(s.steps[3].args.at("expect") == "closed");
    REQUIRE(s.expectations.size() == 3);
    CHECK(s.expectations[0].profile_base == "vulnerable");
    CHECK(s.expectations[1].outcome == "FAILS_AT:session_init:AUTH_FAILED");
    // "G,F" canonicalizes to declaration order F,G.
    CHECK(ablation_string(s.expectations[2].ablations) == "F,G");
  }

  TEST_CASE("malformed scripts are rejected") {
    auto bad = [](std::string_view text) {
      auto r = scenario_parse(text);
      REQUIRE(!r.ok());
      CHECK(r.error() == Err::BadFixture);
    };
    SUBCASE("empty input") { bad(""); }
    SUBCASE("no steps") { bad("scenario x\n"); }
    SUBCASE("no name") { bad("step get_random\n"); }
    SUBCASE("two names") { bad("scenario a\nscenario b\nstep get_random\n"); }
    SUBCASE("unknown directive") { bad("scenario a\nfrobnicate\n"); }
    SUBCASE("unknown step kind") { bad("scenario a\nstep warp_drive\n"); }
    SUBCASE("malformed step argument") {
      bad("scenario a\nstep bolt_check expect\n");
    }
    SUBCASE("unknown profile in expect") {
      bad("scenario a\nstep get_random\nexpect medium SUCCEEDS\n");
    }
    SUBCASE("unknown ablation row in expect") {
      bad("scenario a\nstep get_random\nexpect hardened/Z SUCCEEDS\n");
    }
    SUBCASE("empty ablation list in expect") {
      bad("scenario a\nstep get_random\nexpect hardened/ SUCCEEDS\n");
    }
    SUBCASE("outcome that is neither form") {
      bad("scenario a\nstep get_random\nexpect vulnerable MAYBE\n");
    }
    SUBCASE("failing label that no step carries") {
      bad("scenario a\nstep get_random\n"
          "expect hardened FAILS_AT:launch:AUTH_FAILED\n");
    }
    SUBCASE("unknown error name") {
      bad("scenario a\nstep get_random\n"
          "expect hardened FAILS_AT:get_random:NOT_AN_ERROR\n");
    }
  }

  TEST_CASE("the script library loads by name") {
    auto names = scenario_names("fixtures");
    std::vector<std::string> expected = {
        "api_snoop",       "droplock_e2e", "enroll_race",       "impostor_encounter",
        "legit_lifecycle", "offline_takeover", "physical_dump",
    };
    CHECK(names == expected);
    for (const auto& n : names) {
      CAPTURE(n);
      auto spec = scenario_by_name("fixtures", n);
      REQUIRE(spec.ok());
      CHECK(spec.value().name == n);
      CHECK(!spec.value().expectations.empty());
    }
    auto missing = scenario_by_name("fixtures", "heist");
    REQUIRE(!missing.ok());
    CHECK(missing.error() == Err::UnknownScenario);
  }

  TEST_CASE("a script whose name disagrees with its file is a bad fixture") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "locklab_scn_test";
    fs::create_directories(dir / "scenarios");
    {
      std::ofstream out(dir / "scenarios" / "alpha.scn");
      out << "scenario beta\nstep get_random\n";
    }
    auto r = scenario_by_name(dir.string(), "alpha");
    REQUIRE(!r.ok());
    CHECK(r.error() == Err::BadFixture);
    fs::remove_all(dir);
  }
}

TEST_SUITE("scenario execution") {
  TEST_CASE("every scripted expectation holds on every declared config") {
    for (const auto& name : scenario_names("fixtures")) {
      auto spec = scenario_by_name("fixtures", name);
      REQUIRE(spec.ok());
      for (const auto& e : spec.value().expectations) {
        CAPTURE(name);
        CAPTURE(config_label(e.profile_base, e.ablations));
        RunOptions opt;
        opt.profile_base = e.profile_base;
        opt.ablations = e.ablations;
        opt.seed = 1;
        auto run = scenario_run(spec.value(), opt);
        REQUIRE(run.ok());
        CHECK(run.value().has_expectation);
        CHECK(run.value().expected == e.outcome);
        CHECK(run.value().outcome == e.outcome);
        CHECK(run.value().expectation_met);
      }
    }
  }

  TEST_CASE("runs are deterministic per seed and robust across seeds") {
    auto spec = scenario_by_name("fixtures", "droplock_e2e");
    REQUIRE(spec.ok());
    RunOptions opt;
    opt.profile_base = "hardened";
    opt.ablations = {MatrixRow::G};
    opt.seed = 7;

    auto a = scenario_run(spec.value(), opt);
    auto b = scenario_run(spec.value(), opt);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(scenario_run_machine(a.value()) == scenario_run_machine(b.value()));

    opt.seed = 999;
    auto c = scenario_run(spec.value(), opt);
    REQUIRE(c.ok());
    CHECK(c.value().expectation_met);
    CHECK(scenario_run_machine(a.value()) != scenario_run_machine(c.value()));
  }

  TEST_CASE("the loopback transport changes nothing but the label") {
    auto spec = scenario_by_name("fixtures", "offline_takeover");
    REQUIRE(spec.ok());
    RunOptions opt;
    opt.profile_base = "vulnerable";
    opt.seed = 3;
    auto inproc = scenario_run(spec.value(), opt);
    REQUIRE(inproc.ok());
    opt.transport = Transport::Loopback;
    auto loopback = scenario_run(spec.value(), opt);
    REQUIRE(loopback.ok());
    CHECK(loopback.value().transport == "loopback");
    CHECK(loopback.value().outcome == inproc.value().outcome);
    REQUIRE(loopback.value().steps.size() == inproc.value().steps.size());
    for (size_t i = 0; i < inproc.value().steps.size(); ++i) {
      CHECK(loopback.value().steps[i].ok == inproc.value().steps[i].ok);
    }
  }

  TEST_CASE("machine output is valid json that names the run") {
    auto spec = scenario_by_name("fixtures", "legit_lifecycle");
    REQUIRE(spec.ok());
    RunOptions opt;
    opt.profile_base = "hardened";
    auto run = scenario_run(spec.value(), opt);
    REQUIRE(run.ok());
    auto j = nlohmann::json::parse(scenario_run_machine(run.value()));
    CHECK(j["scenario"] == "legit_lifecycle");
    CHECK(j["profile"] == "hardened");
    CHECK(j["outcome"] == "SUCCEEDS");
    CHECK(j["expectation_met"] == true);
    CHECK(j["steps"].is_array());
  }
}

TEST_SUITE("control matrix") {
  TEST_CASE("designed block errors per row") {
    CHECK(expected_block_error(MatrixRow::A) == Err::PinningBlocked);
    CHECK(expected_block_error(MatrixRow::B) == Err::DecryptFailed);
    CHECK(expected_block_error(MatrixRow::F) == Err::AuthFailed);
    CHECK(expected_block_error(MatrixRow::G) == Err::AuthFailed);
    CHECK(expected_block_error(MatrixRow::H) == Err::IntegrityFailed);
    CHECK(expected_block_error(MatrixRow::C01) == Err::TamperEvident);
    CHECK(expected_block_error(MatrixRow::C02) == Err::DebugDisabled);
    CHECK(expected_block_error(MatrixRow::C03) == Err::IntegrityFailed);
    CHECK(expected_block_error(MatrixRow::C04) == Err::IsolationViolation);
    CHECK(expected_block_error(MatrixRow::C06) == Err::RefusedByScan);
  }

  TEST_CASE("single probes answer for their own row") {
    MatrixOptions opt;
    auto exploited = run_probe(MatrixRow::F, SecurityProfile::vulnerable(), opt);
    REQUIRE(exploited.ok());
    CHECK(exploited.value().exploited);

    auto blocked = run_probe(MatrixRow::F, SecurityProfile::hardened(), opt);
    REQUIRE(blocked.ok());
    CHECK(!blocked.value().exploited);
    CHECK(blocked.value().blocked_by == Err::AuthFailed);
  }

  TEST_CASE("the full matrix reproduces the designed diagonal") {
    MatrixOptions opt;
    auto run = run_matrix(opt);
    REQUIRE(run.ok());
    const MatrixRunResult& m = run.value();
    CHECK(m.ok());
    CHECK(m.violations.empty());
    REQUIRE(m.configs.size() == 2 + std::size(kAllRows));

    CHECK(m.configs[0].label == "vulnerable");
    CHECK(m.configs[1].label == "hardened");
    for (const auto& cfg : m.configs) {
      CAPTURE(cfg.label);
      REQUIRE(cfg.probes.size() == std::size(kAllRows));
    }

    // Vulnerable: everything lands. Hardened: everything blocked with the
    // designed error.
    for (const auto& probe : m.configs[0].probes) {
      CAPTURE(row_name(probe.row));
      CHECK(probe.exploited);
    }
    for (const auto& probe : m.configs[1].probes) {
      CAPTURE(row_name(probe.row));
      CHECK(!probe.exploited);
      CHECK(probe.blocked_by == expected_block_error(probe.row));
    }

    // Each ablated config re-opens exactly its row's control group.
    for (size_t i = 2; i < m.configs.size(); ++i) {
      const MatrixConfigResult& cfg = m.configs[i];
      REQUIRE(cfg.ablations.size() == 1);
      auto group = row_group(cfg.ablations[0]);
      for (const auto& probe : cfg.probes) {
        CAPTURE(cfg.label);
        CAPTURE(row_name(probe.row));
        bool in_group =
            std::find(group.begin(), group.end(), probe.row) != group.end();
        CHECK(probe.exploited == in_group);
        if (!probe.exploited) {
          CHECK(probe.blocked_by == expected_block_error(probe.row));
        }
      }
    }
  }
}

TEST_SUITE("report bundle") {
  TEST_CASE("one pass runs everything and meets every expectation") {
    BundleOptions opt;
    auto bundle = run_bundle(opt);
    REQUIRE(bundle.ok());
    CHECK(bundle.value().all_expected());
    CHECK(bundle.value().matrix.ok());

    size_t declared = 0;
    for (const auto& name : scenario_names("fixtures")) {
      declared += scenario_by_name("fixtures", name).value().expectations.size();
    }
    CHECK(bundle.value().scenarios.size() == declared);

    std::string text = report_text(bundle.value());
    CHECK(text.find("vulnerable") != std::string::npos);
    CHECK(text.find("hardened") != std::string::npos);

    auto j = nlohmann::json::parse(report_machine(bundle.value()));
    CHECK(j["schema"] == "locklab-report-v1");
    CHECK(j["verdict"] == "ALL_EXPECTATIONS_MET");

    SUBCASE("machine output is byte-stable across runs") {
      auto again = run_bundle(opt);
      REQUIRE(again.ok());
      CHECK(report_machine(bundle.value()) == report_machine(again.value()));
    }
  }
}

TEST_SUITE("world wiring") {
  static WorldConfig base_cfg(const SecurityProfile& p, const char* name) {
    WorldConfig cfg;
    cfg.profile = p;
    cfg.profile_name = name;
    cfg.seed = 5;
    return cfg;
  }

  TEST_CASE("a fresh world is factory-new, stocked and reachable") {
    auto w = World::make(base_cfg(SecurityProfile::vulnerable(), "vulnerable"));
    REQUIRE(w.ok());
    World& world = *w.value();
    CHECK(world.lock->state() == LockState::Factory);
    CHECK(world.lock->firmware().version == world.fixtures.factory_version);
    CHECK(world.cloud->registry_size() == 0);
    CHECK(world.owner_port.get() != world.attacker_port.get());
    // Both ports reach the same physical lock.
    REQUIRE(world.app->register_lock().ok());
    REQUIRE(world.attacker->fetch_nonce().ok());
    CHECK(world.lock->state() == LockState::Enrolled);
  }

  TEST_CASE("worlds from equal configs are byte-identical") {
    auto cfg = base_cfg(SecurityProfile::hardened(), "hardened");
    auto a = World::make(cfg);
    auto b = World::make(cfg);
    REQUIRE(a.ok());
    REQUIRE(b.ok());
    CHECK(a.value()->api_static_key == b.value()->api_static_key);
    CHECK(a.value()->fw_keys.pub == b.value()->fw_keys.pub);
    CHECK(a.value()->attest_keys.pub == b.value()->attest_keys.pub);
    CHECK(a.value()->token_keys.pub == b.value()->token_keys.pub);

    auto cfg2 = cfg;
    cfg2.seed = 6;
    auto c = World::make(cfg2);
    REQUIRE(c.ok());
    CHECK(a.value()->fw_keys.pub != c.value()->fw_keys.pub);
  }

  TEST_CASE("preloading the trojan starts the world post-compromise") {
    auto cfg = base_cfg(SecurityProfile::vulnerable(), "vulnerable");
    cfg.preload_droplock = true;
    auto w = World::make(cfg);
    REQUIRE(w.ok());
    CHECK(w.value()->lock->firmware().behavior == FwBehavior::Droplock);
    CHECK(w.value()->lock->firmware().version ==
          w.value()->fixtures.droplock_version);
  }

  TEST_CASE("scan verdicts separate genuine, counterfeit and trojaned") {
    auto hardened = base_cfg(SecurityProfile::hardened(), "hardened");
    auto w = World::make(hardened);
    REQUIRE(w.ok());
    World& world = *w.value();

    SUBCASE("a genuine stock device scans GENUINE") {
      ScanVerdict v = scan_device(*world.owner_port, world.attest_keys.pub,
                                  world.cloud->published_digests(),
                                  world.victim_rng);
      CHECK(v == ScanVerdict::Genuine);
    }
    SUBCASE("an impostor cannot answer the challenge") {
      REQUIRE(world.deploy_impostor().ok());
      ScanVerdict v = scan_device(*world.impostor_port, world.attest_keys.pub,
                                  world.cloud->published_digests(),
                                  world.victim_rng);
      CHECK(v == ScanVerdict::Unverified);
    }
    SUBCASE("a trojaned genuine device betrays its firmware digest") {
      auto cfg = hardened;
      cfg.preload_droplock = true;
      auto t = World::make(cfg);
      REQUIRE(t.ok());
      ScanVerdict v = scan_device(*t.value()->owner_port,
                                  t.value()->attest_keys.pub,
                                  t.value()->cloud->published_digests(),
                                  t.value()->victim_rng);
      CHECK(v == ScanVerdict::FirmwareMismatch);
    }
    SUBCASE("a device that never attests stays UNVERIFIED") {
      auto v_cfg = base_cfg(SecurityProfile::vulnerable(), "vulnerable");
      auto vw = World::make(v_cfg);
      REQUIRE(vw.ok());
      ScanVerdict v = scan_device(*vw.value()->owner_port,
                                  vw.value()->attest_keys.pub,
                                  vw.value()->cloud->published_digests(),
                                  vw.value()->victim_rng);
      CHECK(v == ScanVerdict::Unverified);
    }
  }

  TEST_CASE("encounters follow the victim's scanning habit") {
    SUBCASE("a scanning victim refuses the impostor and leaves no print") {
      auto w = World::make(base_cfg(SecurityProfile::hardened(), "hardened"));
      REQUIRE(w.ok());
      REQUIRE(w.value()->deploy_impostor().ok());
      auto e = w.value()->victim_encounter_impostor(7);
      CHECK(e.scanned);
      CHECK(e.verdict == "UNVERIFIED");
      CHECK(!e.touched);
      CHECK(w.value()->attacker->harvest().empty());
    }
    SUBCASE("a trusting victim feeds the impostor a raw print") {
      auto w = World::make(base_cfg(SecurityProfile::vulnerable(), "vulnerable"));
      REQUIRE(w.ok());
      REQUIRE(w.value()->deploy_impostor().ok());
      auto e = w.value()->victim_encounter_impostor(7);
      CHECK(!e.scanned);
      CHECK(e.touched);
      CHECK(e.touch.captured);
      CHECK(e.touch.exfiltrated);
      auto images = w.value()->attacker->harvest();
      REQUIRE(images.size() == 1);
      CHECK(images[0] == synth_fingerprint(7).pixels);
    }
    SUBCASE("a scanning victim happily uses their genuine lock") {
      auto w = World::make(base_cfg(SecurityProfile::hardened(), "hardened"));
      REQUIRE(w.ok());
      auto e = w.value()->victim_touch_lock(7, /*full_interaction=*/true);
      CHECK(e.scanned);
      CHECK(e.verdict == "GENUINE");
      CHECK(e.touched);
      CHECK(e.touch.captured);
    }
  }
}
