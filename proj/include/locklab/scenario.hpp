#pragma once

#include <map>
#include <string>
#include <vector>

#include "locklab/world.hpp"

namespace locklab {

// One line of a scenario script:  step <kind> [key=value ...]
// Labels are auto-derived: first occurrence of a kind is labeled by the kind
// itself, repeats get "-2", "-3", ... so outcome strings stay unambiguous.
struct StepSpec {
  std::string kind;
  std::string label;
  std::map<std::string, std::string> args;
};

// Expected outcome for one configuration:  expect <profile>[/<rows>] <outcome>
// where outcome is SUCCEEDS or FAILS_AT:<step-label>:<ERROR_NAME>.
struct ScenarioExpectation {
  std::string profile_base;          // "vulnerable" or "hardened"
  std::vector<MatrixRow> ablations;  // canonical (sorted, deduplicated)
  std::string outcome;
};

struct ScenarioSpec {
  std::string name;
  std::string title;
  std::vector<StepSpec> steps;
  std::vector<ScenarioExpectation> expectations;
};

Result<ScenarioSpec> scenario_parse(std::string_view text);
Result<ScenarioSpec> scenario_load(const std::string& path);
// Scenario scripts live at <fixtures>/scenarios/<name>.scn.
Result<ScenarioSpec> scenario_by_name(const std::string& fixtures_dir,
                                      const std::string& name);
// Names of every script in <fixtures>/scenarios, sorted.
std::vector<std::string> scenario_names(const std::string& fixtures_dir);

// Canonical "G,H" rendering (empty string for no ablations).
std::string ablation_string(const std::vector<MatrixRow>& rows);
std::vector<MatrixRow> canonical_ablations(std::vector<MatrixRow> rows);
// "hardened" / "hardened/G,H" / "vulnerable".
std::string config_label(const std::string& base,
                         const std::vector<MatrixRow>& ablations);

struct StepResult {
  std::string label;
  std::string kind;
  bool ok = false;
  Err error = Err::TransportError;      // meaningful only when !ok
  std::vector<std::string> notes;       // evidence recorded by the step
};

struct ScenarioRun {
  std::string scenario;
  std::string profile;                  // base name
  std::vector<MatrixRow> ablations;
  uint64_t seed = 0;
  std::string transport;
  std::vector<StepResult> steps;        // up to and including the failing step
  std::string outcome;                  // SUCCEEDS / FAILS_AT:<label>:<ERR>
  std::string expected;                 // empty when no expectation matches
  bool has_expectation = false;
  bool expectation_met = true;          // vacuously true without expectation
  std::vector<std::string> lock_events;
  std::vector<std::string> harness_events;
  std::vector<std::string> impostor_events;
};

struct RunOptions {
  std::string profile_base = "vulnerable";
  std::vector<MatrixRow> ablations;
  uint64_t seed = 1;
  Transport transport = Transport::Inproc;
  std::string fixtures_dir = "fixtures";
};

Result<SecurityProfile> profile_by_name(const std::string& base);

Result<ScenarioRun> scenario_run(const ScenarioSpec& spec,
                                 const RunOptions& opt);

}  // namespace locklab
