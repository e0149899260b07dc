#include "flockkit/flockkit.h"

#include <cstring>
#include <new>

#include "artifacts.hpp"
#include "scenarios.hpp"
#include "spectral.hpp"

using namespace flockkit;

struct fk_potential {
  Potential impl;
};
struct fk_ensemble {
  ParticleEnsemble impl;
};
struct fk_trajectory {
  Trajectory impl;
};
struct fk_config {
  RunConfig impl;
};

namespace {

thread_local std::string g_last_error;

fk_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Input: return FK_ERR_INPUT;
    case ErrorKind::Numerical: return FK_ERR_NUMERICAL;
    case ErrorKind::Config: return FK_ERR_CONFIG;
    case ErrorKind::Precondition: return FK_ERR_PRECONDITION;
    case ErrorKind::Io: return FK_ERR_IO;
  }
  return FK_ERR_INTERNAL;
}

template <class F>
fk_status guarded(F&& f) {
  g_last_error.clear();
  try {
    return f();
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown failure";
  }
  return FK_ERR_INTERNAL;
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::Input, std::string(what) + " must not be null");
}

Domain domain_of(int dim, double side) {
  return side > 0.0 ? Domain::torus(dim, side) : Domain::free_space(dim);
}

DynamicsMode mode_of(double epsilon) {
  if (epsilon > 0.0) return Regularized{epsilon};
  return Plain{};
}

Matrix rows(const double* data, int n, int cols) {
  Matrix m(n, cols);
  std::memcpy(m.data(), data, sizeof(double) * static_cast<std::size_t>(n) * cols);
  return m;
}

const Trajectory& checked_frame(const fk_trajectory* t, int frame) {
  need(t, "trajectory");
  require(frame >= 0 && frame < t->impl.frames(), ErrorKind::Input, "frame index out of range");
  return t->impl;
}

PointCloud cloud_of(const Domain& dom, int n, const double* data) {
  const int d = dom.dim();
  require(n >= 1, ErrorKind::Input, "transport: clouds must be non-empty");
  need(data, "cloud");
  const Matrix all = rows(data, n, 2 * d);
  return PointCloud::make(dom, all.leftCols(d), all.rightCols(d));
}

}  // namespace

extern "C" {

const char* fk_version(void) { return "0.1.0"; }

const char* fk_last_error(void) { return g_last_error.c_str(); }

const char* fk_status_name(fk_status s) {
  switch (s) {
    case FK_OK: return "ok";
    case FK_ERR_INPUT: return "input error";
    case FK_ERR_NUMERICAL: return "numerical error";
    case FK_ERR_CONFIG: return "config error";
    case FK_ERR_PRECONDITION: return "precondition error";
    case FK_ERR_IO: return "io error";
    case FK_ERR_INTERNAL: return "internal error";
    case FK_CHECK_FAILED: return "check failed";
  }
  return "unknown status";
}

fk_status fk_potential_create(fk_family family, double parameter, int dim, double side,
                              fk_potential** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    PotentialSpec spec;
    switch (family) {
      case FK_COMPACT_BUMP: spec = CompactBump{parameter}; break;
      case FK_LOG_GRAD_BOUNDED: spec = LogGradBounded{parameter}; break;
      case FK_GAUSSIAN_PERIODIZED: spec = GaussianPeriodized{parameter}; break;
      default: fail(ErrorKind::Input, "unknown potential family");
    }
    *out = new fk_potential{Potential(spec, domain_of(dim, side))};
    return FK_OK;
  });
}

void fk_potential_destroy(fk_potential* p) { delete p; }

fk_status fk_potential_eval(const fk_potential* p, const double* r, double* value) {
  return guarded([&] {
    need(p, "potential");
    need(r, "r");
    need(value, "value");
    *value = p->impl(std::span<const double>(r, static_cast<std::size_t>(p->impl.dim())));
    return FK_OK;
  });
}

fk_status fk_potential_grad(const fk_potential* p, const double* r, double* grad) {
  return guarded([&] {
    need(p, "potential");
    need(r, "r");
    need(grad, "grad");
    const Vector g =
        p->impl.gradient(std::span<const double>(r, static_cast<std::size_t>(p->impl.dim())));
    std::memcpy(grad, g.data(), sizeof(double) * g.size());
    return FK_OK;
  });
}

fk_status fk_potential_bounds(const fk_potential* p, double* sup_value, double* inf_value,
                              double* sup_gradient) {
  return guarded([&] {
    need(p, "potential");
    if (sup_value) *sup_value = p->impl.sup_value();
    if (inf_value) *inf_value = p->impl.inf_value();
    if (sup_gradient) *sup_gradient = p->impl.sup_gradient();
    return FK_OK;
  });
}

fk_status fk_displacement(int dim, double side, const double* x, const double* y, double* out) {
  return guarded([&] {
    need(x, "x");
    need(y, "y");
    need(out, "out");
    domain_of(dim, side).displacement(x, y, out);
    return FK_OK;
  });
}

fk_status fk_ensemble_create(int n, int dim, double side, const double* q, const double* p,
                             fk_ensemble** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(q, "q");
    need(p, "p");
    require(n >= 1, ErrorKind::Input, "ensemble: need at least one particle");
    const Domain dom = domain_of(dim, side);
    *out = new fk_ensemble{ParticleEnsemble::make(dom, rows(q, n, dim), rows(p, n, dim))};
    return FK_OK;
  });
}

void fk_ensemble_destroy(fk_ensemble* e) { delete e; }

fk_status fk_ensemble_dist_to_manifold(const fk_ensemble* e, double* out) {
  return guarded([&] {
    need(e, "ensemble");
    need(out, "out");
    *out = dist_to_manifold(e->impl);
    return FK_OK;
  });
}

fk_status fk_integrate(const fk_ensemble* w0, const fk_potential* p, double epsilon, double T,
                       double dt, int save_every, fk_trajectory** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(w0, "ensemble");
    need(p, "potential");
    require(w0->impl.domain == p->impl.domain(), ErrorKind::Input,
            "integrate: ensemble and potential live on different domains");
    IntegrateOptions opt;
    opt.save_every = save_every;
    const double step = dt > 0.0 ? dt : default_time_step(p->impl, w0->impl);
    *out = new fk_trajectory{integrate(w0->impl, p->impl, mode_of(epsilon), T, step, opt)};
    return FK_OK;
  });
}

void fk_trajectory_destroy(fk_trajectory* t) { delete t; }

int fk_trajectory_frames(const fk_trajectory* t) { return t ? t->impl.frames() : 0; }

fk_status fk_trajectory_time(const fk_trajectory* t, int frame, double* time) {
  return guarded([&] {
    need(time, "time");
    *time = checked_frame(t, frame).times[frame];
    return FK_OK;
  });
}

fk_status fk_trajectory_state(const fk_trajectory* t, int frame, double* q_out, double* p_out) {
  return guarded([&] {
    const ParticleEnsemble& s = checked_frame(t, frame).states[frame];
    const std::size_t bytes = sizeof(double) * static_cast<std::size_t>(s.q.size());
    if (q_out) std::memcpy(q_out, s.q.data(), bytes);
    if (p_out) std::memcpy(p_out, s.p.data(), bytes);
    return FK_OK;
  });
}

fk_status fk_trajectory_dist(const fk_trajectory* t, int frame, double* dist) {
  return guarded([&] {
    need(dist, "dist");
    *dist = checked_frame(t, frame).metrics[frame].dist_to_manifold;
    return FK_OK;
  });
}

fk_status fk_spectrum(const fk_potential* p, int n, const double* q, double epsilon,
                      double* eigenvalues, double* gap, int* irreducible) {
  return guarded([&] {
    need(p, "potential");
    need(q, "q");
    require(n >= 1, ErrorKind::Input, "spectrum: need at least one particle");
    const int d = p->impl.dim();
    Matrix pos = rows(q, n, d);
    for (int i = 0; i < n; ++i) p->impl.domain().wrap(pos.row(i).data());
    const InteractionMatrix m = interaction_matrix(pos, p->impl, mode_of(epsilon));
    const SpectrumReport rep = spectrum(m);
    if (eigenvalues) std::memcpy(eigenvalues, rep.eigenvalues.data(), sizeof(double) * n);
    if (gap) *gap = rep.gap;
    if (irreducible) *irreducible = m.irreducible ? 1 : 0;
    return FK_OK;
  });
}

fk_status fk_transport_distance(int dim, double side, int na, const double* a, int nb,
                                const double* b, uint64_t seed, double* w_hat) {
  return guarded([&] {
    need(w_hat, "w_hat");
    const Domain dom = domain_of(dim, side);
    *w_hat = transport_distance(cloud_of(dom, na, a), cloud_of(dom, nb, b), seed).w_hat;
    return FK_OK;
  });
}

fk_status fk_config_default(fk_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = new fk_config{RunConfig{}};
    return FK_OK;
  });
}

fk_status fk_config_load(const char* path, fk_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(path, "path");
    *out = new fk_config{load_config(path)};
    return FK_OK;
  });
}

fk_status fk_config_parse(const char* text, fk_config** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    need(text, "text");
    *out = new fk_config{parse_config(text)};
    return FK_OK;
  });
}

void fk_config_destroy(fk_config* c) { delete c; }

fk_status fk_config_set(fk_config* c, const char* section, const char* key, const char* value) {
  return guarded([&] {
    need(c, "config");
    need(section, "section");
    need(key, "key");
    need(value, "value");
    set_config_value(c->impl, section, key, value);
    return FK_OK;
  });
}

fk_status fk_config_serialize(const fk_config* c, char* buffer, size_t capacity, size_t* needed) {
  return guarded([&] {
    need(c, "config");
    const std::string s = serialize_config(c->impl);
    if (needed) *needed = s.size() + 1;
    if (buffer && capacity > s.size()) std::memcpy(buffer, s.c_str(), s.size() + 1);
    else if (buffer) fail(ErrorKind::Input, "serialize: buffer too small");
    return FK_OK;
  });
}

fk_status fk_run_scenario(const fk_config* c) {
  return guarded([&] {
    need(c, "config");
    const ScenarioResult r = run_scenario(c->impl);
    if (r.passed) return FK_OK;
    std::string failed;
    for (const auto& k : r.checks)
      if (!k.passed) failed += (failed.empty() ? "" : ", ") + k.name;
    g_last_error = "failed checks: " + failed;
    return FK_CHECK_FAILED;
  });
}

fk_status fk_emit_plotdata(const char* dir) {
  return guarded([&] {
    need(dir, "dir");
    emit_plotdata(dir);
    return FK_OK;
  });
}

}  // extern "C"
