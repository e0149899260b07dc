#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kinetic.hpp"

namespace flockkit {

enum class InitKind { Random, Lattice };

// Every field of the documented key-value schema. Sections: [run], [domain],
// [potential], [dynamics], [diagnostics], [scenario].
struct RunConfig {
  // [run]
  std::string scenario = "simulate";
  std::uint64_t seed = 1;
  std::string out = "out";
  int save_every = 10;
  int spectral_every = 0;  // 0 disables
  int graph_every = 1;     // 0 disables

  // [domain]
  bool torus = false;
  int dim = 2;
  double side = 10.0;

  // [potential]
  std::string family = "compact_bump";
  double range = 1.0;
  double decay = 1.0;
  double width = 1.0;
  int max_order = -1;

  // [dynamics]
  std::string mode = "plain";
  double epsilon = 0.1;
  std::string convention = "literal";
  double horizon = 10.0;  // key T
  double dt = 0.0;        // 0 = auto, written "auto"

  // [diagnostics]
  bool moments = true;
  bool entropy = true;   // entropy scenario: kNN estimate
  bool jacobian = true;  // entropy scenario: determinant columns
  double graph_threshold = 0.0;
  double flock_epsilon = 1e-3;
  double flock_window = 0.0;  // 0 = 20% of the span
  double fit_fraction = 0.8;

  // [scenario]
  int particles = 16;
  std::string init = "lattice";
  double box = 5.0;
  double speed = 1.0;
  double spacing = 0.6;
  int lattice_cols = 4;
  std::vector<double> velocity = {0.3, 0.1};
  double perturbation = 1e-2;
  std::vector<int> sizes = {100, 400, 1600};
  int reference = 6400;
  int seeds = 5;
  double t_eval = 1.0;
  double sigma_v = 0.25;
  double vmax = 0.95;
  int curve_particles = 128;
  int curve_stride = 10;
  int samples = 10000;
  std::vector<double> times = {0.0, 0.25, 0.5, 0.75, 1.0};
  int points = 20;
  double fd_step = 1e-4;
  int grid = 5;
  int iterations = 12;
  double alpha = 0.0;  // 0 = 2L
  std::string interpolation = "hermite";

  bool operator==(const RunConfig&) const = default;

  Domain make_domain() const;
  PotentialSpec make_potential_spec() const;
  DynamicsMode make_mode() const;
  RegularizedConvention make_convention() const;
  Interpolation make_interpolation() const;
  FieldSpec make_field() const;
};

// Throws a configuration error naming the line on parse failures and the
// field on validation failures.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
void validate_config(const RunConfig& cfg);
// Sets one field from its textual value, as a config line would.
void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value);
std::string serialize_config(const RunConfig& cfg);

const std::vector<std::string>& scenario_names();

// Shortest decimal that reads back to the same double.
std::string format_double(double x);

}  // namespace flockkit
