#pragma once

#include <memory>
#include <string>

#include "locklab/app.hpp"
#include "locklab/attacker.hpp"
#include "locklab/cloud.hpp"
#include "locklab/lock.hpp"
#include "locklab/loopback.hpp"

namespace locklab {

enum class Transport { Inproc, Loopback };
std::string_view transport_name(Transport t);
Result<Transport> parse_transport(std::string_view name);

// Verdicts of the counterfeit-detection scan.
enum class ScanVerdict { Genuine, Unverified, FirmwareMismatch };
std::string_view scan_verdict_name(ScanVerdict v);

// Challenges a device over its radio interface and checks the reply against
// the manufacturer key and the published firmware catalog.
ScanVerdict scan_device(LockPort& port, const crypto::Key32& attest_pub,
                        const std::vector<Bytes>& catalog_digests,
                        DeterministicRng& rng);

struct WorldConfig {
  SecurityProfile profile;
  std::string profile_name = "vulnerable";  // declared base, for reporting
  std::vector<MatrixRow> ablations;         // applied to `profile` already
  uint64_t seed = 1;
  Transport transport = Transport::Inproc;
  bool preload_droplock = false;  // start with the trojan already installed
  std::string fixtures_dir = "fixtures";
};

struct Fixtures {
  std::string factory_version;   // ships on new locks
  std::string update_version;    // offered by the vendor cloud
  std::string droplock_version;  // the attacker's build
  Bytes factory_image;
  Bytes update_image;
  Bytes droplock_image;
};

Result<Fixtures> load_fixtures(const std::string& dir);

// One closed ecosystem: manufacturer secrets, vendor cloud, one lock, the
// owner's app, one attacker, and the broadcast medium they share.
//
// Seed discipline: every stream forks from the root seed in the fixed order
// below; two worlds built from equal configs are byte-identical forever.
class World {
 public:
  static Result<std::unique_ptr<World>> make(const WorldConfig& config);
  ~World();

  World(const World&) = delete;
  World& operator=(const World&) = delete;

  WorldConfig cfg;
  Fixtures fixtures;

  // Manufacturer / vendor key material (fork order 1).
  crypto::Key16 api_static_key{};
  crypto::KeyPair fw_keys;      // signs firmware packages
  crypto::KeyPair attest_keys;  // provisioned into genuine devices
  crypto::KeyPair token_keys;   // cloud session tokens

  // The client build as the vendor ships it (pin intact). The App may later
  // run a patched copy; analysis steps always start from this one.
  AppBinaryModel shipped_binary;

  BroadcastChannel broadcast;
  std::unique_ptr<Cloud> cloud;                  // rng fork order 2
  std::unique_ptr<DirectCloudTransport> direct;
  std::unique_ptr<Lock> lock;                    // rng fork order 3
  std::unique_ptr<App> app;                      // rng fork order 4
  std::unique_ptr<Attacker> attacker;            // rng fork order 5
  DeterministicRng victim_rng{0};                // fork order 6 (scan challenges)

  std::unique_ptr<LoopbackServer> server;  // loopback transport only
  std::unique_ptr<LockPort> owner_port;
  std::unique_ptr<LockPort> attacker_port;

  // Attacker-built lookalike, once deployed.
  std::unique_ptr<Lock> impostor;
  std::unique_ptr<LockPort> impostor_port;
  Status deploy_impostor();

  std::vector<std::string> events;

  // A person interacting with a device. Scan-first users challenge it and
  // walk away from anything that does not come back GENUINE; everyone else
  // just uses it (a full interaction: grasp, button, finger on window).
  struct Encounter {
    bool scanned = false;
    std::string verdict;
    bool touched = false;
    TouchOutcome touch;
  };
  Encounter victim_touch_lock(uint64_t finger_id, bool full_interaction);
  Encounter victim_encounter_impostor(uint64_t finger_id);

 private:
  World() = default;
  Encounter encounter(Lock& device, LockPort& port, uint64_t finger_id,
                      bool full_interaction);
};

}  // namespace locklab
