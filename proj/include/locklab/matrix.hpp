#pragma once

#include <string>
#include <vector>

#include "locklab/scenario.hpp"
#include "locklab/world.hpp"

namespace locklab {

// One probe run in one configuration. A probe is an independent, minimal
// reproduction of its row's exploit: it gets whatever setup the exploit
// legitimately presumes (an observation point, an open update window, an
// already-trojaned device) and then asks only whether the step the control
// is supposed to stop still works.
struct ProbeOutcome {
  MatrixRow row;
  bool exploited = false;
  Err blocked_by = Err::TransportError;  // meaningful only when !exploited
  std::string detail;
};

// The error a hardened configuration is designed to stop each row with.
Err expected_block_error(MatrixRow row);

struct MatrixConfigResult {
  std::string label;  // "vulnerable", "hardened", "hardened/G", ...
  std::string profile_base;
  std::vector<MatrixRow> ablations;
  std::vector<ProbeOutcome> probes;  // one per kAllRows, in order
};

// vulnerable + hardened + one single-row ablation per row = 12 configs.
struct MatrixRunResult {
  std::vector<MatrixConfigResult> configs;
  std::vector<std::string> violations;  // deviations from the designed matrix
  bool ok() const { return violations.empty(); }
};

struct MatrixOptions {
  uint64_t seed = 1;
  std::string fixtures_dir = "fixtures";
};

Result<ProbeOutcome> run_probe(MatrixRow row, const SecurityProfile& profile,
                               const MatrixOptions& opt);

Result<MatrixRunResult> run_matrix(const MatrixOptions& opt);

}  // namespace locklab
