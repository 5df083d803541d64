// locklab: desk-scale smart-padlock security testbed.
//
// Exit codes: 0 = every declared expectation held; 1 = a run deviated from
// its expectation (or a package failed verification); 2 = usage/fixture error.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "locklab/report.hpp"

namespace {

using namespace locklab;

int fail_usage(const std::string& what, Err e) {
  std::cerr << "error: " << what << " (" << err_name(e) << ")\n";
  return 2;
}

Result<Bytes> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return Err::IoError;
  std::stringstream buf;
  buf << in.rdbuf();
  std::string s = buf.str();
  return Bytes(s.begin(), s.end());
}

int cmd_scenario(const std::string& name, const std::string& profile,
                 const std::string& ablate_csv, uint64_t seed,
                 const std::string& transport, const std::string& fixtures,
                 const std::string& format) {
  auto spec = scenario_by_name(fixtures, name);
  if (!spec.ok()) return fail_usage("cannot load scenario '" + name + "'",
                                    spec.error());
  auto rows = parse_ablation_list(ablate_csv);
  if (!rows.ok()) return fail_usage("bad --ablate list", rows.error());
  auto tr = parse_transport(transport);
  if (!tr.ok()) return fail_usage("bad --transport", tr.error());

  RunOptions opt;
  opt.profile_base = profile;
  opt.ablations = rows.take();
  opt.seed = seed;
  opt.transport = tr.value();
  opt.fixtures_dir = fixtures;
  auto run = scenario_run(spec.value(), opt);
  if (!run.ok()) return fail_usage("scenario run failed", run.error());

  std::cout << (format == "machine" ? scenario_run_machine(run.value())
                                    : scenario_run_text(run.value()));
  return run.value().expectation_met ? 0 : 1;
}

int cmd_matrix(uint64_t seed, const std::string& fixtures,
               const std::string& format) {
  MatrixOptions opt;
  opt.seed = seed;
  opt.fixtures_dir = fixtures;
  auto m = run_matrix(opt);
  if (!m.ok()) return fail_usage("matrix run failed", m.error());
  std::cout << (format == "machine" ? matrix_machine(m.value())
                                    : matrix_text(m.value()));
  return m.value().ok() ? 0 : 1;
}

int cmd_report(uint64_t seed, const std::string& transport,
               const std::string& fixtures, const std::string& format) {
  auto tr = parse_transport(transport);
  if (!tr.ok()) return fail_usage("bad --transport", tr.error());
  BundleOptions opt;
  opt.seed = seed;
  opt.transport = tr.value();
  opt.fixtures_dir = fixtures;
  auto bundle = run_bundle(opt);
  if (!bundle.ok()) return fail_usage("report run failed", bundle.error());
  std::cout << (format == "machine" ? report_machine(bundle.value())
                                    : report_text(bundle.value()));
  return bundle.value().all_expected() ? 0 : 1;
}

int cmd_scan(uint64_t seed, const std::string& fixtures) {
  struct Case {
    std::string label;
    ScanVerdict expected;
    ScanVerdict got;
  };
  std::vector<Case> cases;

  auto make_world = [&](SecurityProfile p, bool preload)
      -> Result<std::unique_ptr<World>> {
    WorldConfig wc;
    wc.profile = p;
    wc.profile_name = profile_label(p);
    wc.seed = seed;
    wc.fixtures_dir = fixtures;
    wc.preload_droplock = preload;
    return World::make(wc);
  };

  {
    auto w = make_world(SecurityProfile::hardened(), false);
    if (!w.ok()) return fail_usage("world setup failed", w.error());
    World& world = *w.value();
    cases.push_back({"hardened lock, vendor firmware", ScanVerdict::Genuine,
                     scan_device(*world.owner_port, world.attest_keys.pub,
                                 world.cloud->published_digests(),
                                 world.victim_rng)});
  }
  {
    auto w = make_world(SecurityProfile::hardened(), true);
    if (!w.ok()) return fail_usage("world setup failed", w.error());
    World& world = *w.value();
    cases.push_back({"hardened lock, trojaned firmware",
                     ScanVerdict::FirmwareMismatch,
                     scan_device(*world.owner_port, world.attest_keys.pub,
                                 world.cloud->published_digests(),
                                 world.victim_rng)});
  }
  {
    auto w = make_world(SecurityProfile::hardened(), false);
    if (!w.ok()) return fail_usage("world setup failed", w.error());
    World& world = *w.value();
    auto st = world.deploy_impostor();
    if (!st.ok()) return fail_usage("impostor setup failed", st.error());
    cases.push_back({"counterfeit lookalike device", ScanVerdict::Unverified,
                     scan_device(*world.impostor_port, world.attest_keys.pub,
                                 world.cloud->published_digests(),
                                 world.victim_rng)});
  }
  {
    auto w = make_world(SecurityProfile::vulnerable(), false);
    if (!w.ok()) return fail_usage("world setup failed", w.error());
    World& world = *w.value();
    cases.push_back({"vulnerable lock (no attestation)",
                     ScanVerdict::Unverified,
                     scan_device(*world.owner_port, world.attest_keys.pub,
                                 world.cloud->published_digests(),
                                 world.victim_rng)});
  }

  bool all_ok = true;
  std::cout << "device scan (challenge-response against the manufacturer key "
               "and published builds)\n";
  for (const Case& c : cases) {
    bool ok = c.got == c.expected;
    all_ok = all_ok && ok;
    std::cout << "  " << c.label;
    for (size_t i = c.label.size(); i < 36; ++i) std::cout << ' ';
    std::cout << scan_verdict_name(c.got) << (ok ? "" : "  (UNEXPECTED)")
              << "\n";
  }
  return all_ok ? 0 : 1;
}

int cmd_dfu_pack(const std::string& image_path, const std::string& out_path,
                 const std::string& version, const std::string& behavior,
                 const std::string& integrity, uint64_t seed) {
  auto image = read_file(image_path);
  if (!image.ok()) return fail_usage("cannot read --image", image.error());
  FwManifest manifest;
  manifest.version = version;
  manifest.behavior =
      behavior == "droplock" ? FwBehavior::Droplock : FwBehavior::Legitimate;
  FwPackage pkg;
  if (integrity == "signature") {
    DeterministicRng rng(seed);
    crypto::KeyPair keys = crypto::ed25519_keygen(rng);
    pkg = fw_make_signed(manifest, image.take(), keys.priv);
  } else {
    pkg = fw_make_crc(manifest, image.take());
  }
  Bytes packed = fw_pack(pkg);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) return fail_usage("cannot write --out", Err::IoError);
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
  std::cout << "packed " << pkg.manifest.version << " (" << behavior << ", "
            << pkg.image.size() << " image bytes, " << integrity
            << " check) -> " << out_path << " [" << packed.size()
            << " bytes]\n";
  return 0;
}

int cmd_dfu_verify(const std::string& package_path,
                   const std::string& integrity, uint64_t seed) {
  auto raw = read_file(package_path);
  if (!raw.ok()) return fail_usage("cannot read --package", raw.error());
  auto pkg = fw_parse(raw.value());
  if (!pkg.ok()) {
    std::cout << "REJECTED: " << err_name(pkg.error()) << "\n";
    return 1;
  }
  FwIntegrity required =
      integrity == "signature" ? FwIntegrity::Signature : FwIntegrity::Crc16;
  DeterministicRng rng(seed);
  crypto::KeyPair keys = crypto::ed25519_keygen(rng);
  auto verdict = fw_verify(pkg.value(), required, &keys.pub);
  std::cout << "package: version=" << pkg.value().manifest.version
            << " behavior="
            << (pkg.value().manifest.behavior == FwBehavior::Droplock
                    ? "droplock"
                    : "legitimate")
            << " image=" << pkg.value().image.size() << " bytes check="
            << (pkg.value().integrity == FwIntegrity::Signature ? "signature"
                                                                : "crc16")
            << "\n";
  if (!verdict.ok()) {
    std::cout << "REJECTED: " << err_name(verdict.error()) << "\n";
    return 1;
  }
  std::cout << "ACCEPTED under " << integrity << " policy\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{
      "locklab: emulated smart-padlock ecosystem for studying a trojan "
      "firmware conversion chain and the controls that stop it"};
  cli.require_subcommand(1);

  std::string name, ablate_csv, fixtures = "fixtures";
  std::string profile = "vulnerable", transport = "inproc", format = "text";
  uint64_t seed = 1;

  auto add_common = [&](CLI::App* sub, bool with_transport,
                        bool with_profile) {
    sub->add_option("--seed", seed, "deterministic run seed")
        ->capture_default_str();
    sub->add_option("--fixtures", fixtures, "fixtures directory")
        ->capture_default_str();
    if (with_profile) {
      sub->add_option("--profile", profile, "security configuration")
          ->check(CLI::IsMember({"vulnerable", "hardened"}))
          ->capture_default_str();
      sub->add_option(
             "--ablate", ablate_csv,
             "comma-separated matrix rows whose control to revert (e.g. G,H)");
    }
    if (with_transport) {
      sub->add_option("--transport", transport, "lock radio transport")
          ->check(CLI::IsMember({"inproc", "loopback"}))
          ->capture_default_str();
    }
  };

  CLI::App* sc = cli.add_subcommand(
      "scenario", "run one scripted attack/defense scenario");
  sc->add_option("name", name, "scenario name under <fixtures>/scenarios")
      ->required();
  add_common(sc, true, true);
  sc->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "machine"}))
      ->capture_default_str();

  CLI::App* mx = cli.add_subcommand(
      "matrix", "run every exploit probe across every configuration");
  add_common(mx, false, false);
  mx->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "machine"}))
      ->capture_default_str();

  CLI::App* rp = cli.add_subcommand(
      "report", "run all scenarios plus the matrix and render one report");
  add_common(rp, true, false);
  rp->add_option("--format", format, "output format")
      ->check(CLI::IsMember({"text", "machine"}))
      ->capture_default_str();

  CLI::App* sn =
      cli.add_subcommand("scan", "demonstrate the counterfeit-device scan");
  add_common(sn, false, false);

  CLI::App* dfu = cli.add_subcommand("dfu", "firmware package tooling");
  dfu->require_subcommand(1);
  std::string image_path, out_path, package_path;
  std::string version = "1.0.0", behavior = "legitimate", integrity = "crc16";
  CLI::App* pack = dfu->add_subcommand("pack", "build an update package");
  pack->add_option("--image", image_path, "raw firmware image file")
      ->required();
  pack->add_option("--out", out_path, "output package file")->required();
  pack->add_option("--version", version)->capture_default_str();
  pack->add_option("--behavior", behavior)
      ->check(CLI::IsMember({"legitimate", "droplock"}))
      ->capture_default_str();
  pack->add_option("--integrity", integrity, "check kind to stamp")
      ->check(CLI::IsMember({"crc16", "signature"}))
      ->capture_default_str();
  pack->add_option("--seed", seed, "signing identity seed (signature mode)")
      ->capture_default_str();
  CLI::App* verify =
      dfu->add_subcommand("verify", "validate a package under a policy");
  verify->add_option("--package", package_path, "package file")->required();
  verify->add_option("--integrity", integrity, "receiver policy")
      ->check(CLI::IsMember({"crc16", "signature"}))
      ->capture_default_str();
  verify->add_option("--seed", seed, "signing identity seed (signature mode)")
      ->capture_default_str();

  CLI11_PARSE(cli, argc, argv);

  if (*sc) {
    return cmd_scenario(name, profile, ablate_csv, seed, transport, fixtures,
                        format);
  }
  if (*mx) return cmd_matrix(seed, fixtures, format);
  if (*rp) return cmd_report(seed, transport, fixtures, format);
  if (*sn) return cmd_scan(seed, fixtures);
  if (*dfu) {
    if (*pack) {
      return cmd_dfu_pack(image_path, out_path, version, behavior, integrity,
                          seed);
    }
    if (*verify) return cmd_dfu_verify(package_path, integrity, seed);
  }
  return 2;
}
