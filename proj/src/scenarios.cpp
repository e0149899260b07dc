#include "scenarios.hpp"

#include <filesystem>

#include "artifacts.hpp"
#include "graph.hpp"
#include "spectral.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace flockkit {

namespace {

// Defaults used when dt = auto, for the kinetic scenarios.
constexpr double kKineticStep = 0.02;
constexpr double kJacobianStep = 1e-3;
constexpr double kConvergenceStep = 0.1;

struct Context {
  const RunConfig& cfg;
  fs::path out;
  ScenarioResult result;

  std::string file(const std::string& name) {
    const std::string p = (out / name).string();
    result.files.push_back(p);
    return p;
  }
  void check(const std::string& name, double value, double bound, bool passed) {
    result.checks.push_back(CheckResult{name, value, bound, passed});
    result.passed = result.passed && passed;
  }
  // value <= bound
  void at_most(const std::string& name, double value, double bound) {
    check(name, value, bound, value <= bound);
  }
};

Matrix centered_perturbation(int n, int d, double norm, Rng& rng) {
  Matrix delta(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) delta(i, c) = standard_normal(rng);
  if (n == 1 || norm == 0.0) return Matrix::Zero(n, d);
  delta = delta.rowwise() - mean_row(delta).transpose();
  return delta * (norm / delta.norm());
}

void add_moment_checks(Context& ctx, const MomentReport& m, const std::string& prefix) {
  ctx.at_most(prefix + "mean_position_identity", m.max_identity_residual, m.identity_tolerance);
  ctx.at_most(prefix + "second_moment_nonincreasing", m.max_increase, m.increase_tolerance);
}

void curve_moment_checks(Context& ctx, const MeasureCurve& curve, const std::string& prefix) {
  if (!ctx.cfg.moments) return;
  const MomentReport mom = moment_diagnostics(curve);
  write_moments_csv(ctx.file(prefix + "moments.csv"), mom);
  add_moment_checks(ctx, mom, prefix);
}

struct SimulationRun {
  Trajectory traj;
  double dt = 0.0;
  double max_speed = 0.0;
  double max_step_increase = 0.0;  // largest one-step growth of the mean |p|^2
};

SimulationRun simulate(Context& ctx, const Potential& pot) {
  const RunConfig& cfg = ctx.cfg;
  const ParticleEnsemble w0 = initial_ensemble(cfg);
  SimulationRun run;
  run.dt = scenario_time_step(cfg, cfg.horizon, cfg.save_every, default_time_step(pot, w0));
  IntegrateOptions opt;
  opt.save_every = cfg.save_every;
  double last_moment = -1.0;
  opt.observer = [&](int, double, const ParticleEnsemble& s) {
    run.max_speed = std::max(run.max_speed, s.p.rowwise().norm().maxCoeff());
    const double m = s.p.squaredNorm() / static_cast<double>(s.size());
    if (last_moment >= 0.0) run.max_step_increase = std::max(run.max_step_increase, m - last_moment);
    last_moment = m;
  };
  run.traj = integrate(w0, pot, cfg.make_mode(), cfg.horizon, run.dt, opt);
  for (int k = 0; k < run.traj.frames(); ++k) {
    const auto& s = run.traj.states[k];
    auto& m = run.traj.metrics[k];
    if (cfg.graph_every > 0 && k % cfg.graph_every == 0)
      m.connected = is_connected(build_graph(s.q, pot, cfg.graph_threshold));
    if (cfg.spectral_every > 0 && k % cfg.spectral_every == 0 && s.size() >= 2) {
      const auto rep = spectrum(interaction_matrix(s.q, pot, cfg.make_mode()));
      m.spectral_gap = rep.gap;
    }
  }
  return run;
}

void write_simulation(Context& ctx, const SimulationRun& run) {
  write_trajectory_jsonl(ctx.file("trajectory.jsonl"), run.traj);
  write_metrics_csv(ctx.file("metrics.csv"), run.traj);
}

void simulation_checks(Context& ctx, const SimulationRun& run) {
  const Trajectory& traj = run.traj;
  const double r0 = traj.states.front().p.rowwise().norm().maxCoeff();
  ctx.at_most("velocity_ball", run.max_speed, r0 + 1e-9);
  if (traj.metrics.front().dist_to_manifold == 0.0) {
    double worst = 0.0;
    for (const auto& m : traj.metrics) worst = std::max(worst, m.dist_to_manifold);
    ctx.at_most("manifold_invariance", worst, 1e-12);
  }
  if (ctx.cfg.moments) {
    const MomentReport mom = moment_diagnostics(traj);
    write_moments_csv(ctx.file("moments.csv"), mom);
    ctx.at_most("mean_position_identity", mom.max_identity_residual, mom.identity_tolerance);
    // Every integration step is observed, so the tolerance applies per step.
    ctx.at_most("second_moment_nonincreasing", run.max_step_increase, mom.increase_tolerance);
  }
}

void run_simulate(Context& ctx) {
  const Potential pot(ctx.cfg.make_potential_spec(), ctx.cfg.make_domain());
  const SimulationRun run = simulate(ctx, pot);
  write_simulation(ctx, run);
  simulation_checks(ctx, run);
}

void run_flock(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Potential pot(cfg.make_potential_spec(), cfg.make_domain());
  SimulationRun run = simulate(ctx, pot);
  Trajectory& traj = run.traj;
  const double eps = traj.metrics.front().dist_to_manifold;
  const FlockReport flock =
      detect_flocking(traj, pot, cfg.flock_epsilon,
                      cfg.flock_window > 0.0 ? std::optional<double>(cfg.flock_window) : std::nullopt,
                      cfg.graph_threshold);
  for (int k = 0; k < traj.frames(); ++k) {
    traj.metrics[k].flock = flock.clustered[k] && flock.connected[k];
    traj.metrics[k].connected = flock.connected[k];
  }
  write_simulation(ctx, run);
  simulation_checks(ctx, run);

  if (eps > 0.0) {
    const MeanBallReport ball = check_mean_velocity_ball(traj, eps);
    ctx.at_most("stability_mean_velocity", ball.max_deviation, eps + 1e-9);
    ctx.at_most("stability_neighborhood", ball.max_manifold_dist, 2.0 * eps + 1e-9);
  }
  // Exponential decay: fit log dist over the trailing fraction of the run.
  const double t_fit = traj.times.back() * (1.0 - cfg.fit_fraction);
  std::vector<double> ts, ls;
  {
    CsvWriter w(ctx.file("decay.csv"), {"t", "log_dist"});
    for (int k = 0; k < traj.frames(); ++k) {
      const double dist = traj.metrics[k].dist_to_manifold;
      const double l = dist > 0.0 ? std::log(dist) : -std::numeric_limits<double>::infinity();
      w.cell(traj.times[k]).cell(l);
      w.end_row();
      if (traj.times[k] >= t_fit && dist > 0.0) {
        ts.push_back(traj.times[k]);
        ls.push_back(l);
      }
    }
  }
  if (eps > 0.0 && ts.size() >= 3) {
    const LinearFit fit = fit_line(ts, ls);
    ctx.at_most("final_dist_below_1e-6", traj.metrics.back().dist_to_manifold, 1e-6);
    ctx.at_most("decay_slope_negative", fit.slope, 0.0);
    ctx.check("decay_fit_r2", fit.r2, 0.99, fit.r2 >= 0.99);
  }
  bool all_connected = true;
  for (bool c : flock.connected) all_connected = all_connected && c;
  ctx.check("flocking_detected", flock.flocking ? 1.0 : 0.0, 1.0, flock.flocking);
  if (pot.compact_support())
    ctx.check("graph_connected_every_frame", all_connected ? 1.0 : 0.0, 1.0, all_connected);

  json fj;
  fj["flocking"] = flock.flocking;
  fj["window"] = flock.window;
  fj["epsilon"] = flock.epsilon;
  fj["t_detect"] = flock.t_detect ? json(*flock.t_detect) : json(nullptr);
  if (flock.v) fj["v"] = std::vector<double>(flock.v->data(), flock.v->data() + flock.v->size());
  write_json(ctx.file("flock.json"), fj);
}

void run_spectrum(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const Potential pot(cfg.make_potential_spec(), cfg.make_domain());
  const ParticleEnsemble w0 = initial_ensemble(cfg);
  const DynamicsMode mode = cfg.make_mode();
  const InteractionMatrix m = interaction_matrix(w0.q, pot, mode);
  const SpectrumReport rep = spectrum(m);
  {
    CsvWriter w(ctx.file("spectrum.csv"), {"index", "eigenvalue"});
    for (Eigen::Index k = 0; k < rep.eigenvalues.size(); ++k) {
      w.cell(static_cast<long long>(k)).cell(rep.eigenvalues[k]);
      w.end_row();
    }
  }
  const bool plain = std::holds_alternative<Plain>(mode);
  if (plain) ctx.at_most("row_sums", (m.row_sums.array() - 1.0).abs().maxCoeff(), 1e-12);
  const Matrix balance = m.stationary.asDiagonal() * m.a;
  ctx.at_most("detailed_balance", (balance - balance.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  ctx.at_most("symmetrization_residual", rep.max_imag_residual, 1e-10);
  ctx.at_most("spectral_radius", rep.eigenvalues.cwiseAbs().maxCoeff(), 1.0 + 1e-10);
  if (plain && m.irreducible)
    ctx.at_most("perron_eigenvalue", std::abs(rep.eigenvalues[0] - 1.0), 1e-10);
  const bool connected = is_connected(build_graph(w0.q, pot, 0.0));
  const bool gap_positive = rep.gap > 1e-10;
  ctx.check("gap_iff_connected", gap_positive ? 1.0 : 0.0, connected ? 1.0 : 0.0,
            gap_positive == connected);

  json j;
  j["gap"] = rep.gap;
  j["perron_simple"] = rep.perron_simple;
  j["irreducible"] = m.irreducible;
  j["substochastic"] = m.substochastic;
  j["max_imag_residual"] = rep.max_imag_residual;
  write_json(ctx.file("spectrum.json"), j);
}

void run_converge(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const FieldSpec field = cfg.make_field();
  const double dt = cfg.dt > 0.0 ? cfg.dt : kConvergenceStep;
  const ConvergenceTable table = mean_field_convergence(
      [&](int n, Rng& rng) { return sample_cloud(cfg, n, rng); }, cfg.sizes, cfg.reference,
      cfg.t_eval, field, cfg.seeds, dt, cfg.seed);
  {
    CsvWriter w(ctx.file("convergence_table.csv"), {"N", "seed", "t", "W_hat"});
    for (const auto& r : table.rows) {
      w.cell(static_cast<long long>(r.n)).cell(static_cast<long long>(r.seed)).cell(r.t).cell(r.w_hat);
      w.end_row();
    }
  }
  {
    CsvWriter w(ctx.file("convergence.csv"), {"N", "median_W_hat"});
    for (std::size_t k = 0; k < table.sizes.size(); ++k) {
      w.cell(static_cast<long long>(table.sizes[k])).cell(table.medians[k]);
      w.end_row();
    }
  }
  ctx.check("median_strictly_decreasing", table.strictly_decreasing ? 1.0 : 0.0, 1.0,
            table.strictly_decreasing);
}

void run_stability(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const FieldSpec field = cfg.make_field();
  const double dt = scenario_time_step(cfg, cfg.horizon, cfg.save_every, kKineticStep);
  Rng rng = make_rng(cfg.seed, "stability.cloud");
  const PointCloud a = sample_cloud(cfg, cfg.particles, rng);
  Rng prng = make_rng(cfg.seed, "stability.perturbation");
  Matrix x = a.x, v = a.v;
  for (int i = 0; i < a.size(); ++i) {
    for (int c = 0; c < a.dim(); ++c) {
      x(i, c) += cfg.perturbation * standard_normal(prng);
      v(i, c) += cfg.perturbation * standard_normal(prng);
    }
    const double n = v.row(i).norm();
    if (n > 1.0) v.row(i) /= n;
  }
  const PointCloud b = PointCloud::make(a.domain, x, v);
  const StabilityReport rep = stability_bound_check(
      a, b, field, cfg.horizon, dt, cfg.save_every, stream_seed(cfg.seed, "stability.transport"));
  {
    CsvWriter w(ctx.file("stability.csv"), {"t", "W_hat", "ratio", "bound"});
    for (const auto& r : rep.rows) {
      w.cell(r.t).cell(r.w_hat).cell(r.ratio).cell(r.bound);
      w.end_row();
    }
  }
  double worst = 0.0;
  for (const auto& r : rep.rows) worst = std::max(worst, r.ratio / r.bound);
  ctx.at_most("ratio_over_gronwall_bound", worst, 1.0 + rep.tolerance);
  if (cfg.moments)
    curve_moment_checks(ctx, evolve_cloud(a, field, cfg.horizon, dt, cfg.save_every,
                                          Interpolation::ConstantLeft), "");
  json j;
  j["L"] = rep.constants.lipschitz;
  j["c0"] = rep.constants.c0;
  j["a"] = rep.constants.a;
  j["c"] = rep.constants.c;
  write_json(ctx.file("stability.json"), j);
}

void run_picard(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const FieldSpec field = cfg.make_field();
  const double dt = cfg.dt > 0.0 ? cfg.dt : kKineticStep;
  Rng rng = make_rng(cfg.seed, "picard.cloud");
  const PointCloud mu0 = sample_cloud(cfg, cfg.particles, rng);
  const PicardReport rep =
      picard_iterate(mu0, field, cfg.horizon, cfg.grid, cfg.iterations, dt, cfg.alpha,
                     cfg.make_interpolation(), stream_seed(cfg.seed, "picard.transport"));
  json j;
  j["alpha"] = rep.alpha;
  j["L"] = rep.lipschitz;
  j["bound"] = rep.bound;
  j["converged"] = rep.converged;
  j["iterations"] = json::array();
  std::optional<double> last_ratio;
  for (const auto& s : rep.steps) {
    json e;
    e["iteration"] = s.iteration;
    e["d_alpha"] = s.d_alpha;
    e["ratio"] = s.ratio ? json(*s.ratio) : json(nullptr);
    e["bound"] = rep.bound;
    j["iterations"].push_back(e);
    if (s.ratio) last_ratio = s.ratio;
  }
  write_json(ctx.file("picard.json"), j);
  double worst = 0.0;
  {
    CsvWriter w(ctx.file("picard.csv"), {"t", "W_hat"});
    for (std::size_t k = 0; k < rep.final_vs_direct.size(); ++k) {
      w.cell(rep.direct.grid[k]).cell(rep.final_vs_direct[k]);
      w.end_row();
      worst = std::max(worst, rep.final_vs_direct[k]);
    }
  }
  curve_moment_checks(ctx, rep.direct, "");
  ctx.at_most("eventual_ratio_below_bound", last_ratio.value_or(0.0), rep.bound + 0.05);
  ctx.at_most("fixed_point_vs_direct", worst, 1e-3);
  ctx.check("converged", rep.converged ? 1.0 : 0.0, 1.0, rep.converged);
}

MeasureCurve driving_curve(const RunConfig& cfg, const FieldSpec& field, double T, double dt,
                           const char* stream) {
  Rng rng = make_rng(cfg.seed, stream);
  const PointCloud c = sample_cloud(cfg, cfg.curve_particles, rng);
  return evolve_cloud(c, field, T, dt, cfg.curve_stride, cfg.make_interpolation());
}

void run_entropy(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const FieldSpec field = cfg.make_field();
  field.validate();
  const double dt = scenario_time_step(cfg, cfg.times.back(), cfg.curve_stride, kKineticStep);
  const ReferenceDensity f0 = ReferenceDensity::make(cfg.make_domain(), cfg.sigma_v, cfg.vmax);
  const MeasureCurve curve = driving_curve(cfg, field, cfg.times.back(), dt, "entropy.curve");
  curve_moment_checks(ctx, curve, "");
  EntropyTable table;
  if (cfg.entropy) {
    table = entropy_decay_check(f0, cfg.samples, curve, field, cfg.times, dt, cfg.seed);
  } else {
    for (double t : cfg.times) table.rows.push_back(EntropyRow{t, 0.0, 0.0, 1.0});
  }
  Rng brng = make_rng(cfg.seed, "entropy.base");
  const PointCloud base = f0.sample(1, brng);
  const int d = cfg.dim;
  const bool weighted = !field.plain() && field.convention == RegularizedConvention::Weighted;
  double worst_det = 0.0, worst_transport = 0.0;
  {
    CsvWriter w(ctx.file("entropy.csv"), {"t", "H_transport", "H_knn", "det_fd", "det_theory"});
    for (const auto& r : table.rows) {
      w.cell(r.t);
      if (cfg.entropy) {
        w.cell(r.h_transport).cell(r.h_knn);
        if (!weighted)
          worst_transport = std::max(worst_transport,
                                     std::abs(r.h_transport - (table.h0 - d * r.t)));
      } else {
        w.blank().blank();
      }
      if (cfg.jacobian) {
        const JacobianReport jr = flow_jacobian(
            std::span<const double>(base.x.data(), d), std::span<const double>(base.v.data(), d),
            curve, field, r.t, cfg.fd_step, dt);
        w.cell(jr.det_fd).cell(jr.det_theory);
        worst_det = std::max(worst_det, jr.rel_err);
      } else {
        w.blank().blank();
      }
      w.end_row();
    }
  }
  if (cfg.entropy) {
    if (!weighted) {
      ctx.at_most("transport_exact", worst_transport, 1e-12 * std::max(1.0, std::abs(table.h0)));
      if (table.rows.size() >= 2) {
        const double rel = std::abs(table.slope_knn / (-static_cast<double>(d)) - 1.0);
        ctx.at_most("knn_slope_rel_err", rel, 0.05);
      }
    } else {
      ctx.at_most("regularized_rate_rel_err", table.max_rate_rel_err, 1e-2);
    }
  }
  if (cfg.jacobian) ctx.at_most("jacobian_rel_err", worst_det, 1e-3);
  json j;
  j["H0"] = table.h0;
  j["slope_transport"] = table.slope_transport;
  j["slope_knn"] = table.slope_knn;
  j["max_rate_rel_err"] = table.max_rate_rel_err;
  write_json(ctx.file("entropy.json"), j);
}

void run_jacobian(Context& ctx) {
  const RunConfig& cfg = ctx.cfg;
  const FieldSpec field = cfg.make_field();
  field.validate();
  const double T = cfg.horizon;
  const double dt = scenario_time_step(cfg, T, cfg.curve_stride, kJacobianStep);
  const MeasureCurve curve = driving_curve(cfg, field, T, dt, "jacobian.curve");
  curve_moment_checks(ctx, curve, "");
  Rng rng = make_rng(cfg.seed, "jacobian.points");
  const PointCloud pts = sample_cloud(cfg, cfg.points, rng);
  const int d = cfg.dim;
  double worst = 0.0;
  CsvWriter w(ctx.file("jacobian.csv"), {"point", "t", "det_fd", "det_theory", "rel_err"});
  for (int i = 0; i < pts.size(); ++i) {
    const Vector x = pts.x.row(i).transpose(), v = pts.v.row(i).transpose();
    const JacobianReport jr =
        flow_jacobian(std::span<const double>(x.data(), d), std::span<const double>(v.data(), d),
                      curve, field, T, cfg.fd_step, dt);
    w.cell(static_cast<long long>(i)).cell(jr.t).cell(jr.det_fd).cell(jr.det_theory).cell(jr.rel_err);
    w.end_row();
    worst = std::max(worst, jr.rel_err);
  }
  ctx.at_most("jacobian_rel_err", worst, 1e-3);
}

json summary_json(const RunConfig& cfg, const ScenarioResult& r) {
  json j;
  j["scenario"] = r.scenario;
  j["seed"] = cfg.seed;
  j["passed"] = r.passed;
  j["checks"] = json::array();
  for (const auto& c : r.checks) {
    json e;
    e["name"] = c.name;
    e["value"] = c.value;
    e["bound"] = c.bound;
    e["passed"] = c.passed;
    j["checks"].push_back(e);
  }
  return j;
}

}  // namespace

double scenario_time_step(const RunConfig& cfg, double T, int stride, double fallback) {
  const double dt = cfg.dt > 0.0 ? cfg.dt : fallback;
  require(dt > 0.0, ErrorKind::Config, "dt must be positive");
  if (T == 0.0) return dt;
  long steps = static_cast<long>(std::ceil(T / dt - 1e-9));
  steps = ((steps + stride - 1) / stride) * stride;
  return T / static_cast<double>(steps);
}

ParticleEnsemble initial_ensemble(const RunConfig& cfg) {
  const Domain dom = cfg.make_domain();
  const int n = cfg.particles, d = cfg.dim;
  Matrix q(n, d), p(n, d);
  if (cfg.init == "lattice") {
    for (int i = 0; i < n; ++i) {
      int idx = i;
      for (int c = 0; c < d; ++c) {
        q(i, c) = cfg.spacing * (idx % cfg.lattice_cols);
        idx /= cfg.lattice_cols;
      }
      for (int c = 0; c < d; ++c) p(i, c) = cfg.velocity[c];
    }
    Rng rng = make_rng(cfg.seed, "init.perturbation");
    p += centered_perturbation(n, d, cfg.perturbation, rng);
  } else {
    Rng qr = make_rng(cfg.seed, "init.positions");
    Rng pr = make_rng(cfg.seed, "init.velocities");
    const double extent = cfg.torus ? cfg.side : cfg.box;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < d; ++c) q(i, c) = uniform(qr, 0.0, extent);
      uniform_in_ball(pr, d, cfg.speed, p.row(i).data());
    }
  }
  return ParticleEnsemble::make(dom, std::move(q), std::move(p));
}

PointCloud sample_cloud(const RunConfig& cfg, int n, Rng& rng) {
  const Domain dom = cfg.make_domain();
  const int d = cfg.dim;
  const double extent = cfg.torus ? cfg.side : cfg.box;
  Matrix x(n, d), v(n, d);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = uniform(rng, 0.0, extent);
    truncated_normal_in_ball(rng, d, cfg.sigma_v, cfg.vmax, v.row(i).data());
  }
  return PointCloud::make(dom, std::move(x), std::move(v));
}

ScenarioResult run_scenario(const RunConfig& cfg) {
  validate_config(cfg);
  make_directory(cfg.out);
  Context ctx{cfg, fs::path(cfg.out), {}};
  ctx.result.scenario = cfg.scenario;
  try {
    if (cfg.scenario == "simulate")
      run_simulate(ctx);
    else if (cfg.scenario == "spectrum")
      run_spectrum(ctx);
    else if (cfg.scenario == "flock-detect")
      run_flock(ctx);
    else if (cfg.scenario == "converge")
      run_converge(ctx);
    else if (cfg.scenario == "stability")
      run_stability(ctx);
    else if (cfg.scenario == "picard")
      run_picard(ctx);
    else if (cfg.scenario == "entropy")
      run_entropy(ctx);
    else
      run_jacobian(ctx);
  } catch (const Error& e) {
    json f;
    f["scenario"] = cfg.scenario;
    f["error"] = e.what();
    static const char* kinds[] = {"input", "numerical", "config", "precondition", "io"};
    f["kind"] = kinds[static_cast<int>(e.kind())];
    write_json((ctx.out / "failure.json").string(), f);
    throw;
  }
  write_json(ctx.file("summary.json"), summary_json(cfg, ctx.result));
  write_text(ctx.file("config.ini"), serialize_config(cfg));
  return ctx.result;
}

}  // namespace flockkit
