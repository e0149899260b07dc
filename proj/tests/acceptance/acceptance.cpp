// End-to-end acceptance checks. One PASS/FAIL line per criterion; the exit
// status is non-zero when any criterion fails.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "graph.hpp"
#include "scenarios.hpp"
#include "spectral.hpp"

using namespace flockkit;
namespace fs = std::filesystem;

namespace {

// Tolerances, pinned here.
constexpr double kBallTol = 1e-9;
constexpr double kStochasticTol = 1e-12;
constexpr double kResidualTol = 1e-10;
constexpr double kGalileanTol = 1e-10;
constexpr double kPerronTol = 1e-10;
constexpr double kTwoBodyTol = 1e-12;
constexpr double kFieldBound = 2.0;

const fs::path kConfigs = FLOCKKIT_CONFIG_DIR;
const fs::path kOut = FLOCKKIT_ACCEPTANCE_OUT;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Matrix uniform_matrix(Rng& rng, int n, int d, double lo, double hi) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) m(i, c) = uniform(rng, lo, hi);
  return m;
}

Matrix ball_matrix(Rng& rng, int n, int d, double r) {
  Matrix m(n, d);
  for (int i = 0; i < n; ++i) uniform_in_ball(rng, d, r, m.row(i).data());
  return m;
}

Matrix connected_cloud(Rng& rng, int n, double step) {
  Matrix q(n, 2);
  q.row(0) << 5.0, 5.0;
  for (int i = 1; i < n; ++i) {
    const int parent = static_cast<int>(uniform01(rng) * i);
    double s[2];
    uniform_in_ball(rng, 2, step, s);
    q(i, 0) = q(parent, 0) + s[0];
    q(i, 1) = q(parent, 1) + s[1];
  }
  return q;
}

// Scenario runs are cached: several criteria read the same run.
std::map<std::string, ScenarioResult> g_runs;

const ScenarioResult& scenario(const std::string& name) {
  auto it = g_runs.find(name);
  if (it != g_runs.end()) return it->second;
  RunConfig cfg = load_config((kConfigs / (name + ".ini")).string());
  cfg.out = (kOut / name).string();
  return g_runs.emplace(name, run_scenario(cfg)).first->second;
}

const CheckResult* find_check(const ScenarioResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

// Requires the named checks to be present and passing.
void require_checks(Outcome& o, const std::string& run, const std::vector<std::string>& names) {
  const ScenarioResult& r = scenario(run);
  for (const auto& n : names) {
    const CheckResult* c = find_check(r, n);
    if (!c) {
      o.pass = false;
      o.detail += run + "/" + n + " missing; ";
      continue;
    }
    o.pass = o.pass && c->passed;
    o.detail += run + "/" + n + "=" + fmt(c->value) + (c->passed ? "" : " (bound " + fmt(c->bound) + ")") + "; ";
  }
}

Outcome velocity_ball() {
  Outcome o;
  Rng rng = make_rng(101, "acceptance.ball");
  const std::vector<std::pair<PotentialSpec, Domain>> cases = {
      {CompactBump{1.0}, Domain::free_space(2)},
      {LogGradBounded{1.0}, Domain::free_space(2)},
      {GaussianPeriodized{1.0}, Domain::torus(2, 10.0)},
  };
  double worst = 0.0;
  for (const auto& [spec, dom] : cases) {
    const Potential u(spec, dom);
    for (const DynamicsMode& mode : {DynamicsMode(Plain{}), DynamicsMode(Regularized{0.1})}) {
      const double extent = dom.periodic() ? dom.side() : 5.0;
      const Matrix q = uniform_matrix(rng, 50, 2, 0.0, extent);
      const Matrix p = ball_matrix(rng, 50, 2, 1.0);
      double max_speed = 0.0;
      IntegrateOptions opt;
      opt.save_every = 1000;
      opt.observer = [&](int, double, const ParticleEnsemble& s) {
        max_speed = std::max(max_speed, s.p.rowwise().norm().maxCoeff());
      };
      integrate(ParticleEnsemble::make(dom, q, p), u, mode, 50.0, 1e-3, opt);
      worst = std::max(worst, max_speed);
      o.pass = o.pass && max_speed <= 1.0 + kBallTol;
    }
  }
  o.detail = "max speed over 6 runs " + fmt(worst) + " (bound 1 + 1e-9)";
  return o;
}

Outcome flock_stability() {
  Outcome o;
  require_checks(o, "flock", {"stability_mean_velocity", "stability_neighborhood"});
  return o;
}

Outcome flock_decay() {
  Outcome o;
  require_checks(o, "flock", {"final_dist_below_1e-6", "decay_fit_r2", "decay_slope_negative",
                              "flocking_detected", "graph_connected_every_frame"});
  return o;
}

Outcome stochastic_structure() {
  Outcome o;
  Rng rng = make_rng(104, "acceptance.stochastic");
  const Domain tor = Domain::torus(2, 8.0);
  const Domain free = Domain::free_space(2);
  const Potential fams[] = {Potential(CompactBump{1.0}, tor), Potential(GaussianPeriodized{1.0}, tor),
                            Potential(LogGradBounded{1.0}, free), Potential(CompactBump{1.5}, free)};
  double rows = 0.0, balance = 0.0, residual = 0.0, galilean = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Potential& u = fams[k % 4];
    const Domain& dom = u.domain();
    const int n = 3 + static_cast<int>(uniform01(rng) * 38);
    const Matrix q = uniform_matrix(rng, n, 2, 0.0, dom.periodic() ? dom.side() : 4.0);
    const InteractionMatrix m = interaction_matrix(q, u, Plain{});
    rows = std::max(rows, (m.row_sums.array() - 1.0).abs().maxCoeff());
    const Matrix b = m.stationary.asDiagonal() * m.a;
    balance = std::max(balance, (b - b.transpose()).cwiseAbs().maxCoeff());
    const SpectrumReport s = spectrum(m);
    residual = std::max(residual, s.max_imag_residual);
    Matrix shifted = q;
    const double sx = uniform(rng, -20.0, 20.0), sy = uniform(rng, -20.0, 20.0);
    shifted.col(0).array() += sx;
    shifted.col(1).array() += sy;
    for (int i = 0; i < n; ++i) dom.wrap(shifted.row(i).data());
    const SpectrumReport s2 = spectrum(interaction_matrix(shifted, u, Plain{}));
    galilean = std::max(galilean, (s.eigenvalues - s2.eigenvalues).cwiseAbs().maxCoeff());
  }
  o.pass = rows <= kStochasticTol && balance <= kStochasticTol && residual < kResidualTol &&
           galilean <= kGalileanTol;
  o.detail = "row sums " + fmt(rows) + ", detailed balance " + fmt(balance) + ", residual " +
             fmt(residual) + ", translation " + fmt(galilean);
  return o;
}

Outcome perron_structure() {
  Outcome o;
  Rng rng = make_rng(105, "acceptance.perron");
  const Domain free = Domain::free_space(2);
  const Domain tor = Domain::torus(2, 10.0);
  const Potential fams[] = {Potential(CompactBump{1.0}, free), Potential(LogGradBounded{1.0}, free),
                            Potential(GaussianPeriodized{1.0}, tor)};
  double lead = 0.0, second = 0.0, worst_c = -1.0;
  int configs = 0;
  for (int k = 0; k < 60; ++k) {
    const Potential& u = fams[k % 3];
    const Matrix q = connected_cloud(rng, 4 + k % 25, 0.9);
    if (!is_connected(build_graph(q, u))) continue;
    ++configs;
    const SpectrumReport s = spectrum(interaction_matrix(q, u, Plain{}));
    lead = std::max(lead, std::abs(s.eigenvalues[0] - 1.0));
    for (Eigen::Index i = 1; i < s.eigenvalues.size(); ++i) {
      second = std::max(second, std::abs(s.eigenvalues[i]));
      worst_c = std::max(worst_c, s.eigenvalues[i] - 1.0);  // nonzero spectrum of C
    }
    o.pass = o.pass && s.perron_simple;
  }
  const Potential bump(CompactBump{1.0}, free);
  double two_body = 0.0;
  for (double sep : {0.0, 0.1, 0.37, 0.5, 0.9, 0.999}) {
    Matrix q = Matrix::Zero(2, 2);
    q(1, 0) = sep;
    const double u0 = bump.at_origin(), r[] = {sep, 0.0};
    const double uu = bump.value(r);
    const SpectrumReport s = spectrum(interaction_matrix(q, bump, Plain{}));
    two_body = std::max(two_body, std::abs(s.eigenvalues[1] - (u0 - uu) / (u0 + uu)));
  }
  o.pass = o.pass && configs >= 50 && lead <= kPerronTol && second < 1.0 && worst_c < 0.0 &&
           two_body <= kTwoBodyTol;
  o.detail = std::to_string(configs) + " connected configurations: |lambda_1 - 1| " + fmt(lead) +
             ", max |lambda_k| (k>1) " + fmt(second) + ", max Re C-eigenvalue " + fmt(worst_c) +
             ", two-body error " + fmt(two_body);
  return o;
}

Outcome matrix_perturbation() {
  Outcome o;
  Rng rng = make_rng(106, "acceptance.bnorm");
  const Domain free = Domain::free_space(2);
  const Potential fams[] = {Potential(CompactBump{1.0}, free), Potential(LogGradBounded{1.0}, free)};
  double worst = 0.0;
  int frames = 0;
  for (int k = 0; k < 20; ++k) {
    const Potential& u = fams[k % 2];
    const Matrix q = connected_cloud(rng, 8 + k % 5, 0.8);
    const Matrix p = ball_matrix(rng, q.rows(), 2, 0.5);
    const Trajectory tr = integrate(ParticleEnsemble::make(free, q, p), u, Plain{}, 5.0, 0.01,
                                    {.save_every = 10});
    for (const auto& s : tr.states) {
      const BNormCheck b = b_norm_check(s.q, tr.states.front().q, u);
      ++frames;
      if (b.rhs_eta_zero > 0.0) worst = std::max(worst, b.lhs / b.rhs_eta_zero);
      o.pass = o.pass && b.lhs <= b.rhs_eta_zero;
    }
  }
  o.detail = std::to_string(frames) + " frames, max lhs/rhs " + fmt(worst);
  return o;
}

Outcome field_bounds() {
  Outcome o;
  Rng rng = make_rng(107, "acceptance.field");
  const Domain tor = Domain::torus(2, 10.0);
  const Domain free = Domain::free_space(2);
  const std::vector<FieldSpec> fields = {
      {Potential(GaussianPeriodized{1.0}, tor), Plain{}},
      {Potential(LogGradBounded{1.0}, Domain::torus(2, 6.0)), Plain{}},
      {Potential(CompactBump{1.0}, free), Regularized{0.05}},
      {Potential(CompactBump{1.0}, free), Regularized{0.05}, RegularizedConvention::Weighted},
  };
  auto cloud = [&](const Domain& dom, int n) {
    const double extent = dom.periodic() ? dom.side() : 3.0;
    return PointCloud::make(dom, uniform_matrix(rng, n, 2, 0.0, extent), ball_matrix(rng, n, 2, 1.0));
  };
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const FieldSpec& f = fields[k % fields.size()];
    const PointCloud c = cloud(f.domain(), 1 + k % 40);
    double x[2], v[2];
    x[0] = uniform(rng, 0.0, 3.0);
    x[1] = uniform(rng, 0.0, 3.0);
    uniform_in_ball(rng, 2, 1.0, v);
    worst = std::max(worst, mean_field(x, v, c.x, c.v, f).m.norm());
  }
  o.pass = worst <= kFieldBound;
  o.detail = "max |M| " + fmt(worst) + " over 1e4 probes";
  const std::vector<FieldSpec> lemmas = {
      {Potential(LogGradBounded{0.5}, Domain::torus(2, 6.0)), Plain{}},  // K = 2
      {Potential(GaussianPeriodized{1.0}, tor), Plain{}},
      {Potential(CompactBump{2.0}, free), Regularized{0.1}},
  };
  for (const auto& f : lemmas) {
    const LipschitzProbe p = lipschitz_probe(f, cloud(f.domain(), 60), 1000, rng);
    o.pass = o.pass && p.holds && p.empirical <= p.constant;
    o.detail += "; " + p.lemma + " " + fmt(p.empirical) + " <= " + fmt(p.constant);
  }
  return o;
}

Outcome convergence() {
  Outcome o;
  require_checks(o, "converge", {"median_strictly_decreasing"});
  std::ifstream in(kOut / "converge" / "convergence.csv");
  std::string line;
  std::getline(in, line);
  o.detail += "medians";
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    o.detail += " N=" + line.substr(0, comma) + ":" + fmt(std::stod(line.substr(comma + 1)));
  }
  return o;
}

Outcome measure_stability() {
  Outcome o;
  require_checks(o, "stability", {"ratio_over_gronwall_bound"});
  require_checks(o, "stability_regularized", {"ratio_over_gronwall_bound"});
  return o;
}

Outcome picard() {
  Outcome o;
  require_checks(o, "picard", {"eventual_ratio_below_bound", "fixed_point_vs_direct"});
  return o;
}

Outcome liouville() {
  Outcome o;
  require_checks(o, "jacobian", {"jacobian_rel_err"});
  require_checks(o, "jacobian_regularized", {"jacobian_rel_err"});
  return o;
}

Outcome entropy() {
  Outcome o;
  require_checks(o, "entropy", {"transport_exact", "knn_slope_rel_err"});
  require_checks(o, "entropy_regularized", {"regularized_rate_rel_err"});
  return o;
}

Outcome moments() {
  Outcome o;
  scenario("simulate");
  int count = 0;
  for (const auto& [name, run] : g_runs) {
    for (const auto& c : run.checks) {
      if (c.name.find("mean_position_identity") == std::string::npos &&
          c.name.find("second_moment_nonincreasing") == std::string::npos)
        continue;
      ++count;
      if (!c.passed) {
        o.pass = false;
        o.detail += name + "/" + c.name + "=" + fmt(c.value) + " > " + fmt(c.bound) + "; ";
      }
    }
  }
  o.pass = o.pass && count > 0;
  o.detail += std::to_string(count) + " moment checks over " + std::to_string(g_runs.size()) + " runs";
  return o;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  Outcome o;
  struct Override {
    std::string section, key, value;
  };
  const std::vector<std::pair<std::string, std::vector<Override>>> runs = {
      {"simulate", {{"dynamics", "T", "5"}}},
      {"spectrum", {}},
      {"flock", {{"dynamics", "T", "20"}}},
      {"converge", {{"scenario", "sizes", "20, 40, 80"}, {"scenario", "reference", "160"},
                    {"scenario", "seeds", "3"}}},
      {"stability", {{"scenario", "particles", "40"}}},
      {"picard", {{"scenario", "particles", "30"}}},
      {"entropy", {{"scenario", "samples", "400"}}},
      {"jacobian", {{"scenario", "points", "3"}}},
  };
  int files = 0;
  for (const auto& [name, overrides] : runs) {
    RunConfig cfg = load_config((kConfigs / (name + ".ini")).string());
    for (const auto& ov : overrides) set_config_value(cfg, ov.section, ov.key, ov.value);
    // Both runs write to the same directory so that config.ini (which records
    // the output path) is comparable too.
    const fs::path dir = kOut / "determinism" / name;
    cfg.out = dir.string();
    std::map<fs::path, std::string> snapshot[2];
    for (int rep = 0; rep < 2; ++rep) {
      fs::remove_all(dir);
      try {
        run_scenario(cfg);
      } catch (const Error& e) {
        o.pass = false;
        o.detail += name + " raised: " + e.what() + "; ";
      }
      for (const auto& entry : fs::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) snapshot[rep][fs::relative(entry.path(), dir)] = read_file(entry.path());
    }
    files += static_cast<int>(snapshot[0].size());
    if (snapshot[0] != snapshot[1]) {
      o.pass = false;
      o.detail += name + " artifacts differ; ";
    }
  }
  o.detail += std::to_string(files) + " artifacts compared across 8 scenarios";
  return o;
}

}  // namespace

int main() {
  fs::create_directories(kOut);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"velocity-ball invariance", velocity_ball},
      {"stability of the perturbed flock", flock_stability},
      {"exponential flocking", flock_decay},
      {"stochastic-matrix structure", stochastic_structure},
      {"Perron structure", perron_structure},
      {"interaction-matrix perturbation bound", matrix_perturbation},
      {"field bounds and Lipschitz constants", field_bounds},
      {"mean-field convergence", convergence},
      {"stability in measure", measure_stability},
      {"Picard contraction", picard},
      {"Liouville determinant", liouville},
      {"entropy decay", entropy},
      {"moment identities", moments},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
