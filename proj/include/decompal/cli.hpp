#pragma once

#include <string>
#include <vector>

namespace decompal {

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitValidation = 2 };

// Entry point of the `decompal` executable:
//
//   decompal gen    --config spec.yaml --out DIR [--set k=v]...
//   decompal run    --config cfg.yaml  --out DIR [--threads N] [--set k=v]...
//   decompal sweep  --config cfg.yaml  --out DIR --axis tau|budget|dense-sparse
//   decompal report --out merged.csv RUN_DIR_OR_CSV...
//
// --threads defaults to DECOMPAL_THREADS (or 1).
int run_cli(int argc, const char* const* argv);

// Values swept on one axis, as (label, overrides) pairs.
struct SweepPoint {
  std::string label;
  std::vector<std::string> overrides;
};
std::vector<SweepPoint> sweep_points(const std::string& axis, int n_image, int n_region);

}  // namespace decompal
