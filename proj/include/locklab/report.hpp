#pragma once

#include <string>

#include "locklab/matrix.hpp"
#include "locklab/scenario.hpp"

namespace locklab {

struct BundleOptions {
  uint64_t seed = 1;
  Transport transport = Transport::Inproc;
  std::string fixtures_dir = "fixtures";
};

// Everything the testbed asserts, executed in one pass: every scenario
// script in each configuration it declares an expectation for, plus the
// full control matrix.
struct RunBundle {
  std::vector<ScenarioRun> scenarios;
  MatrixRunResult matrix;
  bool all_expected() const;
};

Result<RunBundle> run_bundle(const BundleOptions& opt);

// Human renderings.
std::string scenario_run_text(const ScenarioRun& run);
std::string matrix_text(const MatrixRunResult& m);
std::string report_text(const RunBundle& b);

// Machine renderings: canonical JSON -- object keys sorted, no timestamps,
// no host-specific values -- so identical runs serialize byte-identically.
std::string scenario_run_machine(const ScenarioRun& run);
std::string matrix_machine(const MatrixRunResult& m);
std::string report_machine(const RunBundle& b);

}  // namespace locklab
