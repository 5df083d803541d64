#include "locklab/scenario.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "locklab/attacker.hpp"

namespace locklab {

std::vector<MatrixRow> canonical_ablations(std::vector<MatrixRow> rows) {
  std::sort(rows.begin(), rows.end(), [](MatrixRow a, MatrixRow b) {
    return static_cast<int>(a) < static_cast<int>(b);
  });
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

std::string ablation_string(const std::vector<MatrixRow>& rows) {
  std::string out;
  for (MatrixRow r : rows) {
    if (!out.empty()) out.push_back(',');
    out += row_name(r);
  }
  return out;
}

std::string config_label(const std::string& base,
                         const std::vector<MatrixRow>& ablations) {
  if (ablations.empty()) return base;
  return base + "/" + ablation_string(ablations);
}

Result<SecurityProfile> profile_by_name(const std::string& base) {
  if (base == "vulnerable") return SecurityProfile::vulnerable();
  if (base == "hardened") return SecurityProfile::hardened();
  return Err::BadRequest;
}

namespace {

bool known_err_name(std::string_view name) {
  for (int id = 1; id <= 32; ++id) {
    if (err_name(static_cast<Err>(id)) == name) return true;
  }
  return false;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

// ---- step execution ---------------------------------------------------

struct StepContext {
  World& w;
  std::optional<AppBinaryModel> patched;
  std::unique_ptr<CaptureProxy> proxy;
  Bytes package;
  std::optional<crypto::Key16> extracted_key;
};

std::optional<std::string> arg(const StepSpec& s, const std::string& key) {
  auto it = s.args.find(key);
  if (it == s.args.end()) return std::nullopt;
  return it->second;
}

Result<uint64_t> need_u64(const StepSpec& s, const std::string& key) {
  auto v = arg(s, key);
  if (!v) return Err::BadFixture;
  try {
    return static_cast<uint64_t>(std::stoull(*v));
  } catch (...) {
    return Err::BadFixture;
  }
}

uint64_t opt_u64(const StepSpec& s, const std::string& key, uint64_t dflt) {
  auto v = arg(s, key);
  if (!v) return dflt;
  try {
    return static_cast<uint64_t>(std::stoull(*v));
  } catch (...) {
    return dflt;
  }
}

void note(StepResult& sr, std::string text) {
  sr.notes.push_back(std::move(text));
}

// The candidate pool an attacker compares harvested prints against: a small
// population plus the finger named by the step.
std::vector<uint64_t> candidate_pool(uint64_t finger) {
  std::vector<uint64_t> pool;
  for (uint64_t f = 1; f <= 12; ++f) pool.push_back(f);
  if (std::find(pool.begin(), pool.end(), finger) == pool.end()) {
    pool.push_back(finger);
  }
  return pool;
}

using Handler =
    std::function<Status(StepContext&, const StepSpec&, StepResult&)>;

Status step_get_random(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->fetch_nonce();
  if (st.ok()) note(sr, "NONCE_FETCHED");
  return st;
}

Status step_session_init(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->takeover_session();
  if (st.ok()) note(sr, "FACTORY_KEY_SESSION_ESTABLISHED");
  return st;
}

Status step_plant_identity(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->plant_identity();
  if (st.ok()) {
    note(sr, "PLANTED_SERIAL " + to_hex(c.w.attacker->identity()->serial));
  }
  return st;
}

Status step_device_session(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->device_session();
  if (st.ok()) note(sr, "DEVICE_KEY_SESSION_ESTABLISHED");
  return st;
}

Status step_unlock_cmd(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->unlock_bolt();
  if (st.ok()) note(sr, "UNLOCK_ACCEPTED");
  return st;
}

Status step_bolt_check(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto expect = arg(s, "expect");
  if (!expect || (*expect != "open" && *expect != "closed")) {
    return Err::BadFixture;
  }
  bool open = c.w.lock->bolt_open();
  note(sr, std::string("BOLT_") + (open ? "OPEN" : "CLOSED"));
  if (open != (*expect == "open")) return Err::BadRequest;
  return {};
}

Status step_enter_dfu(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.attacker->enter_dfu();
  if (st.ok()) note(sr, "DFU_ACTIVATED");
  return st;
}

Status step_forge_package(StepContext& c, const StepSpec& s, StepResult& sr) {
  std::string version =
      arg(s, "version").value_or(c.w.fixtures.droplock_version);
  c.package =
      c.w.attacker->forge_droplock_package(c.w.fixtures.droplock_image, version);
  note(sr, "PACKAGE_FORGED " + version + " (" +
               std::to_string(c.package.size()) + " bytes, checksum only)");
  return {};
}

Status step_dfu_receive(StepContext& c, const StepSpec&, StepResult& sr) {
  if (c.package.empty()) return Err::WrongState;
  auto st = c.w.attacker->push_package(c.package);
  if (st.ok()) {
    note(sr, "INSTALLED_VERSION " + c.w.lock->firmware().version);
  }
  return st;
}

Status step_victim_touch(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto finger = need_u64(s, "finger");
  if (!finger.ok()) return finger.error();
  bool full = arg(s, "interaction").value_or("full") == "full";
  World::Encounter e = c.w.victim_touch_lock(finger.value(), full);
  // A victim behaving normally is never a step failure; what their touch
  // yielded is judged later at harvest time.
  if (e.scanned) note(sr, "VICTIM_SCANNED " + e.verdict);
  note(sr, e.touched ? "VICTIM_TOUCHED" : "VICTIM_WALKED_AWAY");
  if (e.touch.exfiltrated) note(sr, "IMAGE_PUSHED_OFF_DEVICE");
  if (e.touch.unlocked) note(sr, "VICTIM_UNLOCKED");
  return {};
}

Status step_harvest(StepContext& c, const StepSpec& s, StepResult& sr) {
  uint64_t expect_images = opt_u64(s, "expect_images", 1);
  auto images = c.w.attacker->harvest();
  note(sr, "BROADCAST_RECORDS " + std::to_string(images.size()));
  if (expect_images == 0) {
    return images.empty() ? Status{} : Status{Err::BadRequest};
  }
  if (images.size() < expect_images) return Err::NothingHarvested;
  if (auto finger = arg(s, "finger")) {
    uint64_t f = opt_u64(s, "finger", 0);
    auto pool = candidate_pool(f);
    auto who = c.w.attacker->identify_victim(images.front(), pool);
    if (!who || *who != f) return Err::NothingHarvested;
    note(sr, "VICTIM_IDENTIFIED finger=" + std::to_string(*who));
  }
  return {};
}

Status step_registry_check(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto expect = need_u64(s, "expect");
  if (!expect.ok()) return expect.error();
  size_t actual = c.w.cloud->registry_size();
  note(sr, "REGISTRY_ENTRIES " + std::to_string(actual));
  if (actual != expect.value()) return Err::BadRequest;
  return {};
}

Status step_version_check(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto expect = arg(s, "expect");
  if (!expect) return Err::BadFixture;
  note(sr, "INSTALLED_VERSION " + c.w.lock->firmware().version);
  if (c.w.lock->firmware().version != *expect) return Err::BadRequest;
  return {};
}

Status step_patch_app(StepContext& c, const StepSpec&, StepResult& sr) {
  auto patched = c.w.attacker->patch_app_pinning(c.w.shipped_binary);
  if (!patched.ok()) return patched.error();
  c.patched = patched.value();
  note(sr, "PIN_CHECK_DISABLED");
  return {};
}

Status step_install_proxy(StepContext& c, const StepSpec&, StepResult& sr) {
  if (!c.patched) return Err::WrongState;
  c.proxy = std::make_unique<CaptureProxy>(c.w.direct.get());
  c.w.app->set_binary(*c.patched);
  c.w.app->set_transport(c.proxy.get());
  note(sr, "ENDPOINT_INTERPOSED");
  return {};
}

Status step_app_register(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.app->register_lock();
  if (st.ok()) {
    note(sr, "LOCK_REGISTERED " + to_hex(c.w.app->lock_identity()->serial));
  }
  return st;
}

Status step_app_session(StepContext& c, const StepSpec&, StepResult&) {
  return c.w.app->open_session();
}

Status step_app_end(StepContext& c, const StepSpec&, StepResult&) {
  return c.w.app->end_session();
}

Status step_app_unlock(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.app->unlock();
  if (st.ok()) note(sr, "BOLT_OPENED_BY_OWNER");
  return st;
}

Status step_app_relock(StepContext& c, const StepSpec&, StepResult&) {
  return c.w.app->relock();
}

Status step_app_enroll(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto finger = need_u64(s, "finger");
  if (!finger.ok()) return finger.error();
  auto slot = c.w.app->enroll_finger(finger.value());
  if (!slot.ok()) return slot.error();
  note(sr, "ENROLLED_SLOT " + std::to_string(slot.value()));
  return {};
}

Status step_app_match(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto finger = need_u64(s, "finger");
  if (!finger.ok()) return finger.error();
  auto slot = c.w.app->match_finger(finger.value());
  if (!slot.ok()) return slot.error();
  note(sr, "MATCHED_SLOT " + std::to_string(slot.value()));
  return {};
}

Status step_app_update(StepContext& c, const StepSpec& s, StepResult& sr) {
  std::string version = arg(s, "version").value_or(c.w.fixtures.update_version);
  auto st = c.w.app->update_firmware(version);
  if (st.ok()) note(sr, "UPDATED_TO " + c.w.lock->firmware().version);
  return st;
}

Status step_extract_key(StepContext& c, const StepSpec&, StepResult& sr) {
  c.extracted_key = c.w.attacker->extract_static_key(c.w.shipped_binary);
  note(sr, "STATIC_KEY_EXTRACTED " + to_hex(*c.extracted_key));
  return {};
}

Status step_decrypt_capture(StepContext& c, const StepSpec&, StepResult& sr) {
  if (!c.proxy || !c.extracted_key) return Err::WrongState;
  auto analysis = c.w.attacker->decrypt_captured(c.proxy->log(), *c.extracted_key);
  if (!analysis.ok()) return analysis.error();
  const TrafficAnalysis& a = analysis.value();
  note(sr, "TRANSCRIPTS " + std::to_string(a.transcripts.size()));
  note(sr, "CIPHERTEXT_REPEATS " + std::to_string(a.repeats.size()));
  if (!a.repeats.empty()) {
    note(sr, "REPEAT " + a.repeats.front().first + " == " +
                 a.repeats.front().second);
  }
  if (!a.harvested_identity) return Err::NothingHarvested;
  note(sr, "HARVESTED_SERIAL " + to_hex(a.harvested_identity->serial));
  note(sr, "HARVESTED_DEVICE_KEY " + to_hex(a.harvested_identity->device_key));
  if (a.harvested_session_key) note(sr, "HARVESTED_SESSION_KEY");
  return {};
}

Status step_owner_register_rejected(StepContext& c, const StepSpec&,
                                    StepResult& sr) {
  // Success means the earlier takeover stuck: the legitimate owner can no
  // longer claim the device they bought.
  auto st = c.w.app->register_lock();
  if (st.ok()) {
    note(sr, "OWNER_REGISTRATION_UNEXPECTEDLY_SUCCEEDED");
    return Err::BadRequest;
  }
  if (st.error() != Err::AuthFailed) return st.error();
  note(sr, "OWNER_LOCKED_OUT AUTH_FAILED");
  return {};
}

Status step_flash_dump(StepContext& c, const StepSpec& s, StepResult& sr) {
  auto dump = c.w.attacker->dump_flash(*c.w.lock);
  if (!dump.ok()) return dump.error();
  const FlashDump& d = dump.value();
  if (!d.identity) return Err::BadRequest;
  note(sr, "DUMP_SERIAL " + to_hex(d.identity->serial));
  note(sr, "DUMP_SLOTS " + std::to_string(d.slots.size()));
  if (c.w.lock->identity() &&
      d.identity->device_key == c.w.lock->identity()->device_key) {
    note(sr, "DEVICE_KEY_RECOVERED");
  }
  if (auto expect = arg(s, "expect_slots")) {
    if (d.slots.size() != opt_u64(s, "expect_slots", 0)) return Err::BadRequest;
  }
  return {};
}

Status step_covert_check(StepContext& c, const StepSpec&, StepResult& sr) {
  if (c.w.lock->tampered()) return Err::TamperEvident;
  note(sr, "NO_TAMPER_EVIDENCE");
  return {};
}

Status step_build_impostor(StepContext& c, const StepSpec&, StepResult& sr) {
  auto st = c.w.deploy_impostor();
  if (st.ok()) note(sr, "IMPOSTOR_DEPLOYED");
  return st;
}

Status step_victim_encounter(StepContext& c, const StepSpec& s,
                             StepResult& sr) {
  auto finger = need_u64(s, "finger");
  if (!finger.ok()) return finger.error();
  if (!c.w.impostor) return Err::WrongState;
  World::Encounter e = c.w.victim_encounter_impostor(finger.value());
  if (e.scanned) note(sr, "VICTIM_SCANNED " + e.verdict);
  // Unlike victim_touch, luring the victim IS this step's objective; a
  // victim who challenges the device and walks away defeats it.
  if (!e.touched) return Err::RefusedByScan;
  note(sr, "VICTIM_TOUCHED_IMPOSTOR");
  if (e.touch.exfiltrated) note(sr, "IMAGE_PUSHED_OFF_DEVICE");
  return {};
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = {
      {"get_random", step_get_random},
      {"session_init", step_session_init},
      {"plant_identity", step_plant_identity},
      {"device_session", step_device_session},
      {"unlock_cmd", step_unlock_cmd},
      {"bolt_check", step_bolt_check},
      {"enter_dfu", step_enter_dfu},
      {"forge_package", step_forge_package},
      {"dfu_receive", step_dfu_receive},
      {"victim_touch", step_victim_touch},
      {"harvest", step_harvest},
      {"registry_check", step_registry_check},
      {"version_check", step_version_check},
      {"patch_app", step_patch_app},
      {"install_proxy", step_install_proxy},
      {"app_register", step_app_register},
      {"app_session", step_app_session},
      {"app_end", step_app_end},
      {"app_unlock", step_app_unlock},
      {"app_relock", step_app_relock},
      {"app_enroll", step_app_enroll},
      {"app_match", step_app_match},
      {"app_update", step_app_update},
      {"extract_key", step_extract_key},
      {"decrypt_capture", step_decrypt_capture},
      {"owner_register_rejected", step_owner_register_rejected},
      {"flash_dump", step_flash_dump},
      {"covert_check", step_covert_check},
      {"build_impostor", step_build_impostor},
      {"victim_encounter", step_victim_encounter},
  };
  return table;
}

}  // namespace

Result<ScenarioSpec> scenario_parse(std::string_view text) {
  ScenarioSpec spec;
  std::map<std::string, int> kind_count;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    auto cut = line.find('#');
    if (cut != std::string::npos) line.resize(cut);
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    const std::string& head = tokens[0];

    if (head == "scenario") {
      if (tokens.size() != 2 || !spec.name.empty()) return Err::BadFixture;
      spec.name = tokens[1];
    } else if (head == "title") {
      auto pos = line.find("title");
      std::string rest = line.substr(pos + 5);
      auto first = rest.find_first_not_of(" \t");
      auto last = rest.find_last_not_of(" \t\r");
      if (first != std::string::npos) {
        spec.title = rest.substr(first, last - first + 1);
      }
    } else if (head == "step") {
      if (tokens.size() < 2) return Err::BadFixture;
      StepSpec step;
      step.kind = tokens[1];
      if (handlers().find(step.kind) == handlers().end()) {
        return Err::BadFixture;
      }
      for (size_t i = 2; i < tokens.size(); ++i) {
        auto eq = tokens[i].find('=');
        if (eq == std::string::npos || eq == 0) return Err::BadFixture;
        step.args[tokens[i].substr(0, eq)] = tokens[i].substr(eq + 1);
      }
      int n = ++kind_count[step.kind];
      step.label = n == 1 ? step.kind : step.kind + "-" + std::to_string(n);
      spec.steps.push_back(std::move(step));
    } else if (head == "expect") {
      if (tokens.size() != 3) return Err::BadFixture;
      ScenarioExpectation e;
      std::string profile_spec = tokens[1];
      auto slash = profile_spec.find('/');
      e.profile_base = profile_spec.substr(0, slash);
      if (e.profile_base != "vulnerable" && e.profile_base != "hardened") {
        return Err::BadFixture;
      }
      if (slash != std::string::npos) {
        auto rows = parse_ablation_list(profile_spec.substr(slash + 1));
        if (!rows.ok()) return Err::BadFixture;
        e.ablations = canonical_ablations(rows.take());
        if (e.ablations.empty()) return Err::BadFixture;
      }
      e.outcome = tokens[2];
      if (e.outcome != "SUCCEEDS") {
        if (e.outcome.rfind("FAILS_AT:", 0) != 0) return Err::BadFixture;
        std::string rest = e.outcome.substr(9);
        auto colon = rest.find(':');
        if (colon == std::string::npos) return Err::BadFixture;
        std::string label = rest.substr(0, colon);
        std::string err = rest.substr(colon + 1);
        bool label_known = std::any_of(
            spec.steps.begin(), spec.steps.end(),
            [&](const StepSpec& st) { return st.label == label; });
        if (!label_known || !known_err_name(err)) return Err::BadFixture;
      }
      spec.expectations.push_back(std::move(e));
    } else {
      return Err::BadFixture;
    }
  }
  if (spec.name.empty() || spec.steps.empty()) return Err::BadFixture;
  return spec;
}

Result<ScenarioSpec> scenario_load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return Err::IoError;
  std::stringstream buffer;
  buffer << in.rdbuf();
  return scenario_parse(buffer.str());
}

Result<ScenarioSpec> scenario_by_name(const std::string& fixtures_dir,
                                      const std::string& name) {
  std::string path = fixtures_dir + "/scenarios/" + name + ".scn";
  if (!std::filesystem::exists(path)) return Err::UnknownScenario;
  auto spec = scenario_load(path);
  if (!spec.ok()) return spec.error();
  if (spec.value().name != name) return Err::BadFixture;
  return spec;
}

std::vector<std::string> scenario_names(const std::string& fixtures_dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry :
       std::filesystem::directory_iterator(fixtures_dir + "/scenarios", ec)) {
    if (entry.path().extension() == ".scn") {
      names.push_back(entry.path().stem().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

Result<ScenarioRun> scenario_run(const ScenarioSpec& spec,
                                 const RunOptions& opt) {
  auto prof = profile_by_name(opt.profile_base);
  if (!prof.ok()) return prof.error();
  SecurityProfile profile = prof.value();
  std::vector<MatrixRow> ablations = canonical_ablations(opt.ablations);
  for (MatrixRow r : ablations) ablate(profile, r);

  WorldConfig wc;
  wc.profile = profile;
  wc.profile_name = opt.profile_base;
  wc.ablations = ablations;
  wc.seed = opt.seed;
  wc.transport = opt.transport;
  wc.fixtures_dir = opt.fixtures_dir;
  auto world = World::make(wc);
  if (!world.ok()) return world.error();
  World& w = *world.value();

  ScenarioRun run;
  run.scenario = spec.name;
  run.profile = opt.profile_base;
  run.ablations = ablations;
  run.seed = opt.seed;
  run.transport = std::string(transport_name(opt.transport));

  StepContext ctx{w, {}, nullptr, {}, {}};
  bool failed = false;
  for (const StepSpec& step : spec.steps) {
    StepResult sr;
    sr.label = step.label;
    sr.kind = step.kind;
    Status st = handlers().at(step.kind)(ctx, step, sr);
    sr.ok = st.ok();
    if (!st.ok()) sr.error = st.error();
    run.steps.push_back(std::move(sr));
    if (!st.ok()) {
      run.outcome = "FAILS_AT:" + step.label + ":" +
                    std::string(err_name(st.error()));
      failed = true;
      break;
    }
  }
  if (!failed) run.outcome = "SUCCEEDS";

  run.lock_events = w.lock->events();
  run.harness_events = w.events;
  if (w.impostor) run.impostor_events = w.impostor->events();

  for (const ScenarioExpectation& e : spec.expectations) {
    if (e.profile_base == opt.profile_base && e.ablations == ablations) {
      run.has_expectation = true;
      run.expected = e.outcome;
      run.expectation_met = (run.outcome == e.outcome);
      break;
    }
  }
  return run;
}

}  // namespace locklab
