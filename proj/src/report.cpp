#include "locklab/report.hpp"

#include <sstream>

#include <json.hpp>

namespace locklab {

namespace {

using nlohmann::json;

std::string probe_outcome_string(const ProbeOutcome& p) {
  if (p.exploited) return "EXPLOITED";
  return "BLOCKED:" + std::string(err_name(p.blocked_by));
}

json scenario_run_json(const ScenarioRun& run) {
  json steps = json::array();
  for (const StepResult& s : run.steps) {
    json step;
    step["step"] = s.label;
    step["kind"] = s.kind;
    step["status"] = s.ok ? "OK" : "FAIL:" + std::string(err_name(s.error));
    step["notes"] = s.notes;
    steps.push_back(std::move(step));
  }
  json ablations = json::array();
  for (MatrixRow r : run.ablations) ablations.push_back(row_name(r));
  json out;
  out["scenario"] = run.scenario;
  out["profile"] = run.profile;
  out["ablations"] = std::move(ablations);
  out["config"] = config_label(run.profile, run.ablations);
  out["seed"] = run.seed;
  out["transport"] = run.transport;
  out["steps"] = std::move(steps);
  out["outcome"] = run.outcome;
  out["expected"] = run.has_expectation ? json(run.expected) : json(nullptr);
  out["expectation_met"] = run.expectation_met;
  out["lock_events"] = run.lock_events;
  out["harness_events"] = run.harness_events;
  out["impostor_events"] = run.impostor_events;
  return out;
}

json matrix_json(const MatrixRunResult& m) {
  json configs = json::array();
  for (const MatrixConfigResult& c : m.configs) {
    json probes;
    for (const ProbeOutcome& p : c.probes) {
      json cell;
      cell["outcome"] = probe_outcome_string(p);
      cell["detail"] = p.detail;
      probes[std::string(row_name(p.row))] = std::move(cell);
    }
    json config;
    config["config"] = c.label;
    config["probes"] = std::move(probes);
    configs.push_back(std::move(config));
  }
  json out;
  out["configs"] = std::move(configs);
  out["violations"] = m.violations;
  out["matches_design"] = m.violations.empty();
  return out;
}

}  // namespace

bool RunBundle::all_expected() const {
  if (!matrix.ok()) return false;
  for (const ScenarioRun& run : scenarios) {
    if (!run.expectation_met) return false;
  }
  return true;
}

Result<RunBundle> run_bundle(const BundleOptions& opt) {
  RunBundle bundle;
  auto names = scenario_names(opt.fixtures_dir);
  if (names.empty()) return Err::BadFixture;
  for (const std::string& name : names) {
    auto spec = scenario_by_name(opt.fixtures_dir, name);
    if (!spec.ok()) return spec.error();
    for (const ScenarioExpectation& e : spec.value().expectations) {
      RunOptions ro;
      ro.profile_base = e.profile_base;
      ro.ablations = e.ablations;
      ro.seed = opt.seed;
      ro.transport = opt.transport;
      ro.fixtures_dir = opt.fixtures_dir;
      auto run = scenario_run(spec.value(), ro);
      if (!run.ok()) return run.error();
      bundle.scenarios.push_back(run.take());
    }
  }
  MatrixOptions mo;
  mo.seed = opt.seed;
  mo.fixtures_dir = opt.fixtures_dir;
  auto matrix = run_matrix(mo);
  if (!matrix.ok()) return matrix.error();
  bundle.matrix = matrix.take();
  return bundle;
}

std::string scenario_run_text(const ScenarioRun& run) {
  std::ostringstream out;
  out << "scenario " << run.scenario << "  ["
      << config_label(run.profile, run.ablations) << " seed=" << run.seed
      << " transport=" << run.transport << "]\n";
  for (const StepResult& s : run.steps) {
    out << (s.ok ? "  ok   " : "  FAIL ") << s.label;
    if (!s.ok) out << "  " << err_name(s.error);
    for (const std::string& n : s.notes) out << "\n         - " << n;
    out << "\n";
  }
  out << "outcome:  " << run.outcome << "\n";
  if (run.has_expectation) {
    out << "expected: " << run.expected << "\n";
    out << (run.expectation_met ? "expectation met" : "EXPECTATION NOT MET")
        << "\n";
  } else {
    out << "expected: (none declared for this configuration)\n";
  }
  return out.str();
}

std::string matrix_text(const MatrixRunResult& m) {
  std::ostringstream out;
  out << "control matrix (X = exploit lands, . = blocked)\n\n";
  out << "  config";
  for (size_t i = std::string("config").size(); i < 18; ++i) out << ' ';
  for (MatrixRow row : kAllRows) {
    out << ' ' << row_name(row);
    for (size_t i = std::string(row_name(row)).size(); i < 3; ++i) out << ' ';
  }
  out << "\n";
  for (const MatrixConfigResult& c : m.configs) {
    out << "  " << c.label;
    for (size_t i = c.label.size(); i < 18; ++i) out << ' ';
    for (const ProbeOutcome& p : c.probes) {
      out << ' ' << (p.exploited ? "X" : ".") << "  ";
    }
    out << "\n";
  }
  out << "\n  hardened blocks:\n";
  for (const MatrixConfigResult& c : m.configs) {
    if (c.label != "hardened") continue;
    for (const ProbeOutcome& p : c.probes) {
      out << "    " << row_name(p.row);
      for (size_t i = std::string(row_name(p.row)).size(); i < 4; ++i)
        out << ' ';
      out << probe_outcome_string(p) << "  -- " << p.detail << "\n";
    }
  }
  if (m.violations.empty()) {
    out << "\n  matrix matches the designed control coverage\n";
  } else {
    out << "\n  VIOLATIONS:\n";
    for (const std::string& v : m.violations) out << "    " << v << "\n";
  }
  return out.str();
}

std::string report_text(const RunBundle& b) {
  std::ostringstream out;
  out << "== scenario expectations ==\n";
  for (const ScenarioRun& run : b.scenarios) {
    out << "  " << run.scenario;
    for (size_t i = run.scenario.size(); i < 22; ++i) out << ' ';
    std::string cfg = config_label(run.profile, run.ablations);
    out << cfg;
    for (size_t i = cfg.size(); i < 22; ++i) out << ' ';
    out << run.outcome
        << (run.expectation_met ? "  (as expected)" : "  (UNEXPECTED, wanted " +
                                                          run.expected + ")")
        << "\n";
  }
  out << "\n== control matrix ==\n" << matrix_text(b.matrix);
  out << "\nverdict: "
      << (b.all_expected() ? "ALL_EXPECTATIONS_MET" : "DEVIATIONS_FOUND")
      << "\n";
  return out.str();
}

std::string scenario_run_machine(const ScenarioRun& run) {
  return scenario_run_json(run).dump(2) + "\n";
}

std::string matrix_machine(const MatrixRunResult& m) {
  return matrix_json(m).dump(2) + "\n";
}

std::string report_machine(const RunBundle& b) {
  json scenarios = json::array();
  for (const ScenarioRun& run : b.scenarios) {
    scenarios.push_back(scenario_run_json(run));
  }
  json out;
  out["schema"] = "locklab-report-v1";
  out["scenarios"] = std::move(scenarios);
  out["matrix"] = matrix_json(b.matrix);
  out["verdict"] = b.all_expected() ? "ALL_EXPECTATIONS_MET" : "DEVIATIONS_FOUND";
  return out.dump(2) + "\n";
}

}  // namespace locklab
