#pragma once

#include <string>
#include <vector>

#include "config.hpp"

namespace flockkit {

struct CheckResult {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool passed = false;
};

struct ScenarioResult {
  std::string scenario;
  bool passed = true;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
};

// Runs cfg.scenario, writing its artifacts and summary.json into cfg.out.
// Errors are recorded in failure.json before being rethrown.
ScenarioResult run_scenario(const RunConfig& cfg);

// Initial N-particle state described by the [scenario] section.
ParticleEnsemble initial_ensemble(const RunConfig& cfg);
// i.i.d. cloud: x uniform on the torus (or [0, box)^d), v truncated Gaussian.
PointCloud sample_cloud(const RunConfig& cfg, int n, Rng& rng);
// Time step actually used: the configured one, or the documented default,
// shortened so that the horizon is a whole number of saved strides.
double scenario_time_step(const RunConfig& cfg, double T, int stride, double fallback);

}  // namespace flockkit
