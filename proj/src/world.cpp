#include "locklab/world.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace locklab {

std::string_view transport_name(Transport t) {
  return t == Transport::Inproc ? "inproc" : "loopback";
}

Result<Transport> parse_transport(std::string_view name) {
  if (name == "inproc") return Transport::Inproc;
  if (name == "loopback") return Transport::Loopback;
  return Err::BadRequest;
}

std::string_view scan_verdict_name(ScanVerdict v) {
  switch (v) {
    case ScanVerdict::Genuine: return "GENUINE";
    case ScanVerdict::Unverified: return "UNVERIFIED";
    case ScanVerdict::FirmwareMismatch: return "FIRMWARE_MISMATCH";
  }
  return "?";
}

ScanVerdict scan_device(LockPort& port, const crypto::Key32& attest_pub,
                        const std::vector<Bytes>& catalog_digests,
                        DeterministicRng& rng) {
  crypto::Nonce16 challenge = rng.array<16>();
  auto resp = transact_ok(
      port, wire::Frame::request(wire::Op::AttestReq,
                                 Bytes(challenge.begin(), challenge.end())));
  // Anything short of a valid signature over our fresh challenge counts as
  // unverified: silence, malformed replies and bad signatures all look the
  // same to the person holding the scanner.
  if (!resp.ok()) return ScanVerdict::Unverified;
  const Bytes& body = resp.value().payload;
  if (body.size() != 1 + 8 + 32 + 64 || body[0] != 0x01) {
    return ScanVerdict::Unverified;
  }
  const auto serial_begin = body.begin() + 1;
  const auto digest_begin = body.begin() + 9;
  const auto sig_begin = body.begin() + 41;
  Bytes bound;
  bound.reserve(8 + challenge.size() + 32);
  bound.insert(bound.end(), serial_begin, digest_begin);
  bound.insert(bound.end(), challenge.begin(), challenge.end());
  bound.insert(bound.end(), digest_begin, sig_begin);
  if (!crypto::ed25519_verify(attest_pub, bound, ByteView(&*sig_begin, 64))) {
    return ScanVerdict::Unverified;
  }
  for (const Bytes& known : catalog_digests) {
    if (known.size() == 32 &&
        std::equal(known.begin(), known.end(), digest_begin)) {
      return ScanVerdict::Genuine;
    }
  }
  // Genuine hardware, but running a build the vendor never published.
  return ScanVerdict::FirmwareMismatch;
}

namespace {

// Firmware fixtures are hex text ('#' starts a comment, whitespace ignored).
Result<Bytes> read_hex_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Err::IoError;
  std::string hex, line;
  while (std::getline(in, line)) {
    auto cut = line.find('#');
    if (cut != std::string::npos) line.resize(cut);
    for (char c : line) {
      if (!std::isspace(static_cast<unsigned char>(c))) hex.push_back(c);
    }
  }
  auto bytes = from_hex(hex);
  if (!bytes) return Err::BadFixture;
  return *bytes;
}

}  // namespace

Result<Fixtures> load_fixtures(const std::string& dir) {
  std::ifstream in(dir + "/firmware/catalog.txt");
  if (!in) return Err::IoError;
  Fixtures fx;
  std::string line;
  while (std::getline(in, line)) {
    auto cut = line.find('#');
    if (cut != std::string::npos) line.resize(cut);
    std::istringstream row(line);
    std::string role, version, file;
    if (!(row >> role >> version >> file)) continue;  // blank / comment line
    auto image = read_hex_file(dir + "/firmware/" + file);
    if (!image.ok()) return image.error();
    if (role == "factory") {
      fx.factory_version = version;
      fx.factory_image = image.take();
    } else if (role == "update") {
      fx.update_version = version;
      fx.update_image = image.take();
    } else if (role == "droplock") {
      fx.droplock_version = version;
      fx.droplock_image = image.take();
    } else {
      return Err::BadFixture;
    }
  }
  if (fx.factory_image.empty() || fx.update_image.empty() ||
      fx.droplock_image.empty()) {
    return Err::BadFixture;
  }
  return fx;
}

World::~World() {
  if (server) server->stop();
}

Result<std::unique_ptr<World>> World::make(const WorldConfig& config) {
  auto fx = load_fixtures(config.fixtures_dir);
  if (!fx.ok()) return fx.error();

  auto w = std::unique_ptr<World>(new World());
  w->cfg = config;
  w->fixtures = fx.take();

  // Fixed fork order: manufacturer, cloud, lock, app, attacker, victim.
  // Reordering any of these changes every derived key, so the order is part
  // of the reproducibility contract.
  DeterministicRng root(config.seed);
  DeterministicRng manufacturer = root.fork();
  uint64_t cloud_seed = root.next_u64();
  uint64_t lock_seed = root.next_u64();
  DeterministicRng app_rng = root.fork();
  DeterministicRng attacker_rng = root.fork();
  w->victim_rng = root.fork();

  w->api_static_key = manufacturer.array<16>();
  w->fw_keys = crypto::ed25519_keygen(manufacturer);
  w->attest_keys = crypto::ed25519_keygen(manufacturer);
  w->token_keys = crypto::ed25519_keygen(manufacturer);

  CloudConfig cc;
  cc.api_mode = config.profile.api_mode;
  cc.static_key = w->api_static_key;
  cc.factory_key = kFactoryKey;
  cc.token_keys = w->token_keys;
  cc.fw_signing_priv = w->fw_keys.priv;
  cc.package_mode = config.profile.dfu_integrity;
  cc.rng_seed = cloud_seed;
  std::vector<CatalogEntry> catalog;
  catalog.push_back(CatalogEntry{
      FwManifest{w->fixtures.factory_version, FwBehavior::Legitimate,
                 static_cast<uint32_t>(w->fixtures.factory_image.size())},
      w->fixtures.factory_image});
  catalog.push_back(CatalogEntry{
      FwManifest{w->fixtures.update_version, FwBehavior::Legitimate,
                 static_cast<uint32_t>(w->fixtures.update_image.size())},
      w->fixtures.update_image});
  w->cloud = std::make_unique<Cloud>(cc, std::move(catalog));
  w->direct = std::make_unique<DirectCloudTransport>(*w->cloud);

  LockConfig lc;
  lc.profile = config.profile;
  lc.rng_seed = lock_seed;
  if (config.preload_droplock) {
    lc.installed_manifest =
        FwManifest{w->fixtures.droplock_version, FwBehavior::Droplock,
                   static_cast<uint32_t>(w->fixtures.droplock_image.size())};
    lc.installed_image = w->fixtures.droplock_image;
  } else {
    lc.installed_manifest =
        FwManifest{w->fixtures.factory_version, FwBehavior::Legitimate,
                   static_cast<uint32_t>(w->fixtures.factory_image.size())};
    lc.installed_image = w->fixtures.factory_image;
  }
  lc.factory_key = kFactoryKey;
  lc.cloud_token_key = w->token_keys.pub;
  lc.fw_verify_key = w->fw_keys.pub;
  lc.attest_priv = w->attest_keys.priv;
  lc.broadcast = &w->broadcast;
  w->lock = std::make_unique<Lock>(std::move(lc));

  if (config.transport == Transport::Loopback) {
    w->server = std::make_unique<LoopbackServer>(*w->lock);
    auto owner = LoopbackPort::dial(w->server->port());
    if (!owner.ok()) return owner.error();
    auto attacker_dial = LoopbackPort::dial(w->server->port());
    if (!attacker_dial.ok()) return attacker_dial.error();
    w->owner_port = owner.take();
    w->attacker_port = attacker_dial.take();
  } else {
    w->owner_port = std::make_unique<InprocPort>(*w->lock);
    w->attacker_port = std::make_unique<InprocPort>(*w->lock);
  }

  w->shipped_binary.api_static_key = w->api_static_key;
  w->shipped_binary.pinning_enforced = true;
  w->shipped_binary.pinning_hardened = config.profile.pinning_hardened;
  w->app = std::make_unique<App>("owner@example.test", w->shipped_binary,
                                 config.profile, w->direct.get(),
                                 w->owner_port.get(), app_rng);

  w->attacker = std::make_unique<Attacker>(attacker_rng, w->attacker_port.get(),
                                           &w->broadcast);
  return w;
}

Status World::deploy_impostor() {
  // The impostor is the attacker's own hardware standing where a genuine
  // device would; people reach it in person, so its port is always direct.
  LockConfig c = attacker->impostor_config(fixtures.droplock_image, &broadcast);
  impostor = std::make_unique<Lock>(std::move(c));
  impostor_port = std::make_unique<InprocPort>(*impostor);
  events.push_back("IMPOSTOR_DEPLOYED");
  return {};
}

World::Encounter World::encounter(Lock& device, LockPort& port,
                                  uint64_t finger_id, bool full_interaction) {
  Encounter e;
  if (cfg.profile.victim_scans_first) {
    e.scanned = true;
    ScanVerdict v = scan_device(port, attest_keys.pub,
                                cloud->published_digests(), victim_rng);
    e.verdict = scan_verdict_name(v);
    events.push_back("VICTIM_SCAN " + e.verdict);
    if (v != ScanVerdict::Genuine) {
      events.push_back("VICTIM_REFUSED_DEVICE");
      return e;
    }
  }
  e.touched = true;
  e.touch = device.touch(finger_id, full_interaction);
  events.push_back(full_interaction ? "VICTIM_USED_DEVICE"
                                    : "VICTIM_BRUSHED_DEVICE");
  return e;
}

World::Encounter World::victim_touch_lock(uint64_t finger_id,
                                          bool full_interaction) {
  return encounter(*lock, *owner_port, finger_id, full_interaction);
}

World::Encounter World::victim_encounter_impostor(uint64_t finger_id) {
  Encounter e;
  if (!impostor || !impostor_port) return e;
  return encounter(*impostor, *impostor_port, finger_id,
                   /*full_interaction=*/true);
}

}  // namespace locklab
