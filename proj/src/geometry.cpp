#include "geometry.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <limits>
#include <numbers>

namespace flockkit {

namespace {

constexpr double kLatticeTailTol = 1e-13;

// Coarse scan followed by golden-section refinement around the best cell.
template <class F>
double maximize_on_interval(F&& f, double lo, double hi, int samples = 2001) {
  double best_x = lo, best = f(lo);
  const double h = (hi - lo) / (samples - 1);
  for (int i = 1; i < samples; ++i) {
    const double x = lo + i * h;
    const double v = f(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a)); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return std::max({best, fc, fd});
}

double sphere_area(int dim) {
  return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
}

}  // namespace

Domain Domain::free_space(int dim) {
  require(dim >= 1 && dim <= kMaxDim, ErrorKind::Input,
          "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  return Domain(dim, 0.0);
}

Domain Domain::torus(int dim, double side) {
  require(dim >= 1 && dim <= kMaxDim, ErrorKind::Input,
          "dimension must be in [1, " + std::to_string(kMaxDim) + "]");
  require(std::isfinite(side) && side > 0.0, ErrorKind::Input, "torus side must be positive");
  return Domain(dim, side);
}

Vector Domain::displacement(std::span<const double> x, std::span<const double> y) const {
  require(static_cast<int>(x.size()) == dim_ && static_cast<int>(y.size()) == dim_,
          ErrorKind::Input,
          "displacement: expected vectors of dimension " + std::to_string(dim_));
  Vector out(dim_);
  displacement(x.data(), y.data(), out.data());
  return out;
}

std::string family_name(const PotentialSpec& spec) {
  struct {
    std::string operator()(const CompactBump&) const { return "compact_bump"; }
    std::string operator()(const LogGradBounded&) const { return "log_grad_bounded"; }
    std::string operator()(const GaussianPeriodized&) const { return "gaussian_periodized"; }
  } v;
  return std::visit(v, spec);
}

double unit_ball_volume(int dim) {
  return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

int gaussian_lattice_order(double width, double side, int cap) {
  const double inv_two_var = 1.0 / (2.0 * width * width);
  for (int n = 0; n < cap; ++n) {
    double tail = 0.0;
    for (int m = n + 1; m <= n + 64; ++m) {
      const double y = (m - 0.5) * side;
      tail += 2.0 * std::exp(-y * y * inv_two_var);
    }
    if (tail < kLatticeTailTol) return n;
  }
  return cap;
}

int loggrad_lattice_order(int dim, double decay, double side, int cap) {
  for (int n = 0; n < cap; ++n) {
    double tail = 0.0;
    for (int m = n + 1; m <= n + 64; ++m) {
      const double shell = std::pow(2.0 * m + 1.0, dim) - std::pow(2.0 * m - 1.0, dim);
      tail += shell * std::exp(-((m - 0.5) * side - 1.0) / decay);
    }
    if (tail < kLatticeTailTol) return n;
  }
  return cap;
}

Potential::Potential(const PotentialSpec& spec, const Domain& domain)
    : spec_(spec), domain_(domain) {
  const int d = domain.dim();
  const bool torus = domain.periodic();
  const double side = domain.side();

  if (const auto* bump = std::get_if<CompactBump>(&spec)) {
    const double R = bump->range;
    require(std::isfinite(R) && R > 0.0, ErrorKind::Config, "compact_bump: range must be positive");
    require(!torus || R <= 0.5 * side, ErrorKind::Config,
            "compact_bump: range must not exceed half the torus side");
    const double height = (d + 1.0) / (unit_ball_volume(d) * std::pow(R, d));
    kernel_ = detail::BumpKernel{d, R, height};
    normalizer_ = height;
    at_origin_ = height;
    sup_value_ = height;
    sup_gradient_ = height / R;
    const double corner = torus ? 0.5 * side * std::sqrt(static_cast<double>(d)) : 0.0;
    inf_value_ = (torus && corner < R) ? height * (1.0 - corner / R) : 0.0;
  } else if (const auto* lg = std::get_if<LogGradBounded>(&spec)) {
    const double R = lg->decay;
    require(std::isfinite(R) && R > 0.0, ErrorKind::Config,
            "log_grad_bounded: decay must be positive");
    boost::math::quadrature::gauss_kronrod<double, 61> rule;
    const double radial = rule.integrate(
        [&](double r) { return std::pow(r, d - 1) * std::exp(-std::sqrt(1.0 + r * r) / R); }, 0.0,
        std::numeric_limits<double>::infinity(), 15, 1e-14);
    const double scale = 1.0 / (sphere_area(d) * radial);
    const int order = torus ? loggrad_lattice_order(d, R, side) : 0;
    detail::LogGradKernel k{d, R, scale, torus ? side : 0.0, order};
    kernel_ = k;
    normalizer_ = scale;
    std::array<double, kMaxDim> r{};
    at_origin_ = k.value(r.data());
    sup_value_ = at_origin_;
    if (torus) {
      r.fill(0.5 * side);
      inf_value_ = k.value(r.data());
    }
    // Maximal slope along a coordinate axis; exact for the radial profile, and the
    // lattice images perturb it only by the omitted-tail size.
    const double hi = torus ? 0.5 * side : 50.0 * R + 50.0;
    sup_gradient_ = maximize_on_interval(
        [&](double s) {
          std::array<double, kMaxDim> y{}, g{};
          y[0] = s;
          k.gradient(y.data(), g.data());
          double n2 = 0.0;
          for (int j = 0; j < d; ++j) n2 += g[j] * g[j];
          return std::sqrt(n2);
        },
        0.0, hi);
  } else {
    const auto& gp = std::get<GaussianPeriodized>(spec);
    const double R = gp.width;
    require(std::isfinite(R) && R > 0.0, ErrorKind::Config,
            "gaussian_periodized: width must be positive");
    require(torus, ErrorKind::Config, "gaussian_periodized requires a torus domain");
    const int order = gp.max_order >= 0 ? gp.max_order : gaussian_lattice_order(R, side);
    require(order <= 8, ErrorKind::Config, "gaussian_periodized: max_order must not exceed 8");
    detail::GaussKernel k{d,
                          R,
                          side,
                          order,
                          1.0 / std::sqrt(2.0 * std::numbers::pi * R * R),
                          1.0 / (2.0 * R * R)};
    for (int n = 0; n <= order && n < 9; ++n)
      k.image_weight[n] = std::exp(-static_cast<double>(n) * n * side * side * k.inv_two_var);
    kernel_ = k;
    normalizer_ = std::pow(k.axis_norm, d);
    at_origin_ = std::pow(k.axis(0.0), d);
    sup_value_ = at_origin_;
    inf_value_ = std::pow(k.axis(0.5 * side), d);
    const double peak_rest = std::pow(k.axis(0.0), d - 1);
    sup_gradient_ = maximize_on_interval(
        [&](double s) { return std::abs(k.axis_derivative(s)) * peak_rest; }, 0.0, 0.5 * side);
  }
}

double Potential::operator()(std::span<const double> r) const {
  require(static_cast<int>(r.size()) == dim(), ErrorKind::Input,
          "potential: expected a displacement of dimension " + std::to_string(dim()));
  std::array<double, kMaxDim> y{};
  std::copy(r.begin(), r.end(), y.begin());
  if (domain_.periodic()) domain_.fold(y.data());
  return value(y.data());
}

Vector Potential::gradient(std::span<const double> r) const {
  require(static_cast<int>(r.size()) == dim(), ErrorKind::Input,
          "potential gradient: expected a displacement of dimension " + std::to_string(dim()));
  std::array<double, kMaxDim> y{};
  std::copy(r.begin(), r.end(), y.begin());
  if (domain_.periodic()) domain_.fold(y.data());
  Vector out(dim());
  gradient(y.data(), out.data());
  return out;
}

double Potential::range() const {
  struct {
    double operator()(const CompactBump& s) const { return s.range; }
    double operator()(const LogGradBounded& s) const { return s.decay; }
    double operator()(const GaussianPeriodized& s) const { return s.width; }
  } v;
  return std::visit(v, spec_);
}

double Potential::log_gradient_bound() const {
  if (const auto* lg = std::get_if<LogGradBounded>(&spec_)) return 1.0 / lg->decay;
  return std::numeric_limits<double>::infinity();
}

int Potential::lattice_order() const {
  struct {
    int operator()(const detail::BumpKernel&) const { return 0; }
    int operator()(const detail::LogGradKernel& k) const { return k.order; }
    int operator()(const detail::GaussKernel& k) const { return k.order; }
  } v;
  return std::visit(v, kernel_);
}

bool Potential::monotone_radial() const {
  if (compact_support()) return true;
  return std::holds_alternative<LogGradBounded>(spec_) && !domain_.periodic();
}

bool Potential::positive_on_torus() const {
  return domain_.periodic() && !compact_support() && inf_value_ > 0.0;
}

}  // namespace flockkit
