#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <variant>

#include "error.hpp"

namespace flockkit {

inline constexpr int kMaxDim = 8;

// Rows are particles, columns are coordinates.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Free space R^d or the flat torus of side D.
class Domain {
 public:
  static Domain free_space(int dim);
  static Domain torus(int dim, double side);

  int dim() const { return dim_; }
  bool periodic() const { return side_ > 0.0; }
  double side() const { return side_; }

  // Minimum-image x - y on the torus; plain difference in free space.
  void displacement(const double* x, const double* y, double* out) const {
    for (int k = 0; k < dim_; ++k) out[k] = x[k] - y[k];
    if (periodic()) fold(out);
  }
  Vector displacement(std::span<const double> x, std::span<const double> y) const;

  // Maps an arbitrary lift onto its minimum image, components in [-D/2, D/2].
  void fold(double* r) const {
    for (int k = 0; k < dim_; ++k) r[k] -= side_ * std::nearbyint(r[k] / side_);
  }

  // Brings stored positions back to [0, D).
  void wrap(double* x) const {
    if (!periodic()) return;
    for (int k = 0; k < dim_; ++k) {
      x[k] -= side_ * std::floor(x[k] / side_);
      if (x[k] >= side_) x[k] -= side_;
    }
  }

  double distance(const double* x, const double* y) const {
    std::array<double, kMaxDim> r;
    displacement(x, y, r.data());
    double s = 0.0;
    for (int k = 0; k < dim_; ++k) s += r[k] * r[k];
    return std::sqrt(s);
  }

  bool operator==(const Domain&) const = default;

 private:
  Domain(int dim, double side) : dim_(dim), side_(side) {}
  int dim_ = 1;
  double side_ = 0.0;
};

// U(x) = C(d) (1 - |x|/R) on B_R.
struct CompactBump {
  double range = 1.0;
  bool operator==(const CompactBump&) const = default;
};

// U~(x) = c exp(-sqrt(1 + |x|^2) / R); |grad log U~| <= 1/R everywhere.
struct LogGradBounded {
  double decay = 1.0;
  bool operator==(const LogGradBounded&) const = default;
};

// Normalized Gaussian of width R summed over the lattice D Z^d.
// max_order < 0 selects the truncation automatically.
struct GaussianPeriodized {
  double width = 1.0;
  int max_order = -1;
  bool operator==(const GaussianPeriodized&) const = default;
};

using PotentialSpec = std::variant<CompactBump, LogGradBounded, GaussianPeriodized>;

std::string family_name(const PotentialSpec& spec);

namespace detail {

struct BumpKernel {
  int dim;
  double range;
  double height;  // C(d)

  double value(const double* r) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += r[k] * r[k];
    if (s >= range * range) return 0.0;
    return height * (1.0 - std::sqrt(s) / range);
  }
  void gradient(const double* r, double* out) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += r[k] * r[k];
    const double norm = std::sqrt(s);
    if (norm >= range || norm == 0.0) {
      for (int k = 0; k < dim; ++k) out[k] = 0.0;
      return;
    }
    const double slope = -height / (range * norm);
    for (int k = 0; k < dim; ++k) out[k] = slope * r[k];
  }
};

struct GaussKernel {
  int dim;
  double width;
  double side;
  int order;
  double axis_norm;  // (2 pi R^2)^(-1/2)
  double inv_two_var;
  std::array<double, 9> image_weight{};  // exp(-n^2 D^2 k), n <= 8

  // Even in s; evaluated at |s| so that U(r) = U(-r) holds bit for bit.
  // Image terms factor as exp(-s^2 k) * exp(-n^2 D^2 k) * q^(-/+n), q = exp(2 D s k),
  // which needs two exponentials per axis instead of 2 * order + 1.
  double axis(double s) const {
    s = std::abs(s);
    const double e0 = std::exp(-s * s * inv_two_var);
    if (order == 0) return axis_norm * e0;
    const double lq = 2.0 * side * s * inv_two_var;
    double acc = 1.0;
    if (lq * order < 600.0) {
      const double q = std::exp(lq), qi = 1.0 / q;
      double qn = 1.0, qin = 1.0;
      for (int n = 1; n <= order; ++n) {
        qn *= q;
        qin *= qi;
        acc += image_weight[n] * (qn + qin);
      }
      return axis_norm * e0 * acc;
    }
    acc = e0;
    for (int n = 1; n <= order; ++n) {
      const double a = s + n * side, b = s - n * side;
      acc += std::exp(-a * a * inv_two_var) + std::exp(-b * b * inv_two_var);
    }
    return axis_norm * acc;
  }
  double axis_derivative(double s) const {
    const double sign = s < 0.0 ? -1.0 : 1.0;
    s = std::abs(s);
    const double inv_var = 2.0 * inv_two_var;
    const double e0 = std::exp(-s * s * inv_two_var);
    double acc = -s;
    const double lq = 2.0 * side * s * inv_two_var;
    if (lq * order < 600.0) {
      const double q = std::exp(lq), qi = 1.0 / q;
      double qn = 1.0, qin = 1.0;
      for (int n = 1; n <= order; ++n) {
        qn *= q;
        qin *= qi;
        acc -= image_weight[n] * ((s + n * side) * qin + (s - n * side) * qn);
      }
      return sign * axis_norm * inv_var * e0 * acc;
    }
    acc *= e0;
    for (int n = 1; n <= order; ++n) {
      const double a = s + n * side, b = s - n * side;
      acc -= a * std::exp(-a * a * inv_two_var) + b * std::exp(-b * b * inv_two_var);
    }
    return sign * axis_norm * inv_var * acc;
  }
  double value(const double* r) const {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= axis(r[k]);
    return v;
  }
  void gradient(const double* r, double* out) const {
    std::array<double, kMaxDim> g, dg;
    for (int k = 0; k < dim; ++k) {
      g[k] = axis(r[k]);
      dg[k] = axis_derivative(r[k]);
    }
    for (int k = 0; k < dim; ++k) {
      double v = dg[k];
      for (int j = 0; j < dim; ++j)
        if (j != k) v *= g[j];
      out[k] = v;
    }
  }
};

struct LogGradKernel {
  int dim;
  double decay;
  double scale;  // normalizer c
  double side;   // 0 in free space
  int order;

  double base(const double* y) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += y[k] * y[k];
    return scale * std::exp(-std::sqrt(1.0 + s) / decay);
  }
  void base_gradient(const double* y, double* out, double weight = 1.0) const {
    double s = 0.0;
    for (int k = 0; k < dim; ++k) s += y[k] * y[k];
    const double root = std::sqrt(1.0 + s);
    const double f = -weight * scale * std::exp(-root / decay) / (decay * root);
    for (int k = 0; k < dim; ++k) out[k] += f * y[k];
  }
  template <class F>
  void for_each_image(const double* r, F&& f) const {
    std::array<int, kMaxDim> n;
    std::array<double, kMaxDim> y;
    n.fill(-order);
    while (true) {
      for (int k = 0; k < dim; ++k) y[k] = r[k] + n[k] * side;
      f(y.data());
      int k = 0;
      while (k < dim && n[k] == order) n[k++] = -order;
      if (k == dim) break;
      ++n[k];
    }
  }
  // The image sum is even in every coordinate, so it is accumulated at |r|.
  double value(const double* r) const {
    if (order == 0) return base(r);
    std::array<double, kMaxDim> a;
    for (int k = 0; k < dim; ++k) a[k] = std::abs(r[k]);
    double acc = 0.0;
    for_each_image(a.data(), [&](const double* y) { acc += base(y); });
    return acc;
  }
  void gradient(const double* r, double* out) const {
    for (int k = 0; k < dim; ++k) out[k] = 0.0;
    if (order == 0) {
      base_gradient(r, out);
      return;
    }
    std::array<double, kMaxDim> a;
    for (int k = 0; k < dim; ++k) a[k] = std::abs(r[k]);
    for_each_image(a.data(), [&](const double* y) { base_gradient(y, out); });
    for (int k = 0; k < dim; ++k) {
      if (r[k] < 0.0) out[k] = -out[k];
      if (r[k] == 0.0) out[k] = 0.0;  // odd in r[k]; the image sum only cancels to rounding
    }
  }
};

}  // namespace detail

// An interaction family bound to a domain: evaluation, gradient and the
// global constants (sup U, inf U, sup |grad U|) the bounds need.
class Potential {
 public:
  Potential(const PotentialSpec& spec, const Domain& domain);

  const PotentialSpec& spec() const { return spec_; }
  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }

  // r is a displacement already reduced to its minimum image.
  double value(const double* r) const {
    return std::visit([r](const auto& k) { return k.value(r); }, kernel_);
  }
  void gradient(const double* r, double* out) const {
    std::visit([r, out](const auto& k) { k.gradient(r, out); }, kernel_);
  }

  // Checked entry points; any lift of the displacement is accepted.
  double operator()(std::span<const double> r) const;
  Vector gradient(std::span<const double> r) const;

  template <class F>
  decltype(auto) visit(F&& f) const {
    return std::visit(std::forward<F>(f), kernel_);
  }

  double range() const;
  double at_origin() const { return at_origin_; }
  double sup_value() const { return sup_value_; }
  double inf_value() const { return inf_value_; }
  double sup_gradient() const { return sup_gradient_; }
  double log_gradient_bound() const;
  double normalizer() const { return normalizer_; }
  int lattice_order() const;
  bool compact_support() const { return std::holds_alternative<CompactBump>(spec_); }
  // Radial and non-increasing in |x| along straight segments.
  bool monotone_radial() const;
  // Periodized on the torus with a positive infimum.
  bool positive_on_torus() const;

 private:
  PotentialSpec spec_;
  Domain domain_;
  std::variant<detail::BumpKernel, detail::LogGradKernel, detail::GaussKernel> kernel_;
  double normalizer_ = 1.0;
  double at_origin_ = 0.0;
  double sup_value_ = 0.0;
  double inf_value_ = 0.0;
  double sup_gradient_ = 0.0;
};

// Smallest truncation order whose omitted lattice mass stays below 1e-13 of the peak.
int gaussian_lattice_order(double width, double side, int cap = 8);
int loggrad_lattice_order(int dim, double decay, double side, int cap = 8);

double unit_ball_volume(int dim);

}  // namespace flockkit
