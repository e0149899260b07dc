#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

namespace flockkit {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  double x = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(x))
    fail(ErrorKind::Config, key + ": expected a number, got '" + v + "'");
  return x;
}

long long parse_integer(const std::string& v, const std::string& key) {
  long long x = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    fail(ErrorKind::Config, key + ": expected an integer, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::Config, key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field num(const char* section, const char* key, T RunConfig::*member) {
  const std::string name = key;
  return Field{section, key,
               [member, name](RunConfig& c, const std::string& v) {
                 if constexpr (std::is_same_v<T, double>)
                   c.*member = parse_double(v, name);
                 else if constexpr (std::is_same_v<T, bool>)
                   c.*member = parse_bool(v, name);
                 else if constexpr (std::is_same_v<T, std::uint64_t>) {
                   const long long x = parse_integer(v, name);
                   if (x < 0) fail(ErrorKind::Config, name + " must be non-negative");
                   c.*member = static_cast<std::uint64_t>(x);
                 } else
                   c.*member = static_cast<T>(parse_integer(v, name));
               },
               [member](const RunConfig& c) -> std::string {
                 if constexpr (std::is_same_v<T, double>)
                   return format_double(c.*member);
                 else if constexpr (std::is_same_v<T, bool>)
                   return c.*member ? "true" : "false";
                 else
                   return std::to_string(c.*member);
               }};
}

Field text(const char* section, const char* key, std::string RunConfig::*member) {
  return Field{section, key, [member](RunConfig& c, const std::string& v) { c.*member = v; },
               [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(text("run", "scenario", &RunConfig::scenario));
    f.push_back(num("run", "seed", &RunConfig::seed));
    f.push_back(text("run", "out", &RunConfig::out));
    f.push_back(num("run", "save_every", &RunConfig::save_every));
    f.push_back(num("run", "spectral_every", &RunConfig::spectral_every));
    f.push_back(num("run", "graph_every", &RunConfig::graph_every));
    f.push_back(Field{"domain", "kind",
                      [](RunConfig& c, const std::string& v) {
                        if (v == "torus")
                          c.torus = true;
                        else if (v == "free")
                          c.torus = false;
                        else
                          fail(ErrorKind::Config, "kind: expected 'free' or 'torus', got '" + v + "'");
                      },
                      [](const RunConfig& c) { return std::string(c.torus ? "torus" : "free"); }});
    f.push_back(num("domain", "dim", &RunConfig::dim));
    f.push_back(num("domain", "side", &RunConfig::side));
    f.push_back(text("potential", "family", &RunConfig::family));
    f.push_back(num("potential", "range", &RunConfig::range));
    f.push_back(num("potential", "decay", &RunConfig::decay));
    f.push_back(num("potential", "width", &RunConfig::width));
    f.push_back(num("potential", "max_order", &RunConfig::max_order));
    f.push_back(text("dynamics", "mode", &RunConfig::mode));
    f.push_back(num("dynamics", "epsilon", &RunConfig::epsilon));
    f.push_back(text("dynamics", "convention", &RunConfig::convention));
    f.push_back(num("dynamics", "T", &RunConfig::horizon));
    f.push_back(Field{"dynamics", "dt",
                      [](RunConfig& c, const std::string& v) {
                        c.dt = v == "auto" ? 0.0 : parse_double(v, "dt");
                        if (v != "auto" && c.dt == 0.0)
                          fail(ErrorKind::Config, "dt must be positive");
                      },
                      [](const RunConfig& c) {
                        return c.dt == 0.0 ? std::string("auto") : format_double(c.dt);
                      }});
    f.push_back(num("diagnostics", "moments", &RunConfig::moments));
    f.push_back(num("diagnostics", "entropy", &RunConfig::entropy));
    f.push_back(num("diagnostics", "jacobian", &RunConfig::jacobian));
    f.push_back(num("diagnostics", "graph_threshold", &RunConfig::graph_threshold));
    f.push_back(num("diagnostics", "flock_epsilon", &RunConfig::flock_epsilon));
    f.push_back(num("diagnostics", "flock_window", &RunConfig::flock_window));
    f.push_back(num("diagnostics", "fit_fraction", &RunConfig::fit_fraction));
    f.push_back(num("scenario", "particles", &RunConfig::particles));
    f.push_back(text("scenario", "init", &RunConfig::init));
    f.push_back(num("scenario", "box", &RunConfig::box));
    f.push_back(num("scenario", "speed", &RunConfig::speed));
    f.push_back(num("scenario", "spacing", &RunConfig::spacing));
    f.push_back(num("scenario", "lattice_cols", &RunConfig::lattice_cols));
    f.push_back(Field{"scenario", "velocity",
                      [](RunConfig& c, const std::string& v) {
                        c.velocity.clear();
                        for (const auto& s : split_list(v)) c.velocity.push_back(parse_double(s, "velocity"));
                      },
                      [](const RunConfig& c) {
                        std::string s;
                        for (std::size_t i = 0; i < c.velocity.size(); ++i)
                          s += (i ? ", " : "") + format_double(c.velocity[i]);
                        return s;
                      }});
    f.push_back(num("scenario", "perturbation", &RunConfig::perturbation));
    f.push_back(Field{"scenario", "sizes",
                      [](RunConfig& c, const std::string& v) {
                        c.sizes.clear();
                        for (const auto& s : split_list(v))
                          c.sizes.push_back(static_cast<int>(parse_integer(s, "sizes")));
                      },
                      [](const RunConfig& c) {
                        std::string s;
                        for (std::size_t i = 0; i < c.sizes.size(); ++i)
                          s += (i ? ", " : "") + std::to_string(c.sizes[i]);
                        return s;
                      }});
    f.push_back(num("scenario", "reference", &RunConfig::reference));
    f.push_back(num("scenario", "seeds", &RunConfig::seeds));
    f.push_back(num("scenario", "t_eval", &RunConfig::t_eval));
    f.push_back(num("scenario", "sigma_v", &RunConfig::sigma_v));
    f.push_back(num("scenario", "vmax", &RunConfig::vmax));
    f.push_back(num("scenario", "curve_particles", &RunConfig::curve_particles));
    f.push_back(num("scenario", "curve_stride", &RunConfig::curve_stride));
    f.push_back(num("scenario", "samples", &RunConfig::samples));
    f.push_back(Field{"scenario", "times",
                      [](RunConfig& c, const std::string& v) {
                        c.times.clear();
                        for (const auto& s : split_list(v)) c.times.push_back(parse_double(s, "times"));
                      },
                      [](const RunConfig& c) {
                        std::string s;
                        for (std::size_t i = 0; i < c.times.size(); ++i)
                          s += (i ? ", " : "") + format_double(c.times[i]);
                        return s;
                      }});
    f.push_back(num("scenario", "points", &RunConfig::points));
    f.push_back(num("scenario", "fd_step", &RunConfig::fd_step));
    f.push_back(num("scenario", "grid", &RunConfig::grid));
    f.push_back(num("scenario", "iterations", &RunConfig::iterations));
    f.push_back(num("scenario", "alpha", &RunConfig::alpha));
    f.push_back(text("scenario", "interpolation", &RunConfig::interpolation));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const auto& f : fields())
    if (f.section == section && f.key == key) return &f;
  return nullptr;
}

bool known_section(const std::string& s) {
  return s == "run" || s == "domain" || s == "potential" || s == "dynamics" ||
         s == "diagnostics" || s == "scenario";
}

}  // namespace

const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"simulate", "spectrum", "flock-detect",
                                                 "converge", "stability", "picard",
                                                 "entropy",  "jacobian"};
  return names;
}

void set_config_value(RunConfig& cfg, const std::string& section, const std::string& key,
                      const std::string& value) {
  require(known_section(section), ErrorKind::Config, "unknown section [" + section + "]");
  const Field* f = find_field(section, key);
  require(f != nullptr, ErrorKind::Config, "unknown key '" + key + "' in [" + section + "]");
  f->set(cfg, trim(value));
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') fail(ErrorKind::Config, where + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) fail(ErrorKind::Config, where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, where + "expected 'key = value'");
    if (section.empty()) fail(ErrorKind::Config, where + "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, section, key, value);
    } catch (const Error& e) {
      fail(ErrorKind::Config, where + e.what());
    }
  }
  validate_config(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const RunConfig& c) {
  auto need = [](bool ok, const std::string& msg) { require(ok, ErrorKind::Config, msg); };
  const auto& names = scenario_names();
  need(std::find(names.begin(), names.end(), c.scenario) != names.end(),
       "scenario must be one of simulate, spectrum, flock-detect, converge, stability, picard, "
       "entropy, jacobian");
  need(c.save_every >= 1, "save_every must be at least 1");
  need(c.spectral_every >= 0, "spectral_every must be non-negative");
  need(c.graph_every >= 0, "graph_every must be non-negative");
  need(c.dim >= 1 && c.dim <= kMaxDim, "dim must be in [1, " + std::to_string(kMaxDim) + "]");
  need(c.side > 0.0, "side must be positive");
  need(c.family == "compact_bump" || c.family == "log_grad_bounded" ||
           c.family == "gaussian_periodized",
       "family must be compact_bump, log_grad_bounded or gaussian_periodized");
  need(c.range > 0.0, "range must be positive");
  need(c.decay > 0.0, "decay must be positive");
  need(c.width > 0.0, "width must be positive");
  need(c.max_order >= -1, "max_order must be -1 (automatic) or non-negative");
  need(c.mode == "plain" || c.mode == "regularized", "mode must be plain or regularized");
  need(c.epsilon > 0.0, "epsilon must be positive");
  need(c.convention == "literal" || c.convention == "weighted",
       "convention must be literal or weighted");
  need(c.horizon >= 0.0, "T must be non-negative");
  need(c.dt >= 0.0, "dt must be positive");
  need(c.graph_threshold >= 0.0, "graph_threshold must be non-negative");
  need(c.flock_epsilon > 0.0, "flock_epsilon must be positive");
  need(c.flock_window >= 0.0, "flock_window must be non-negative");
  need(c.fit_fraction > 0.0 && c.fit_fraction <= 1.0, "fit_fraction must be in (0, 1]");
  need(c.particles >= 1, "particles must be at least 1");
  need(c.init == "random" || c.init == "lattice", "init must be random or lattice");
  need(c.box > 0.0, "box must be positive");
  need(c.speed >= 0.0 && c.speed <= 1.0, "speed must be in [0, 1]");
  need(c.spacing > 0.0, "spacing must be positive");
  need(c.lattice_cols >= 1, "lattice_cols must be at least 1");
  need(static_cast<int>(c.velocity.size()) == c.dim, "velocity must have dim components");
  need(c.perturbation >= 0.0, "perturbation must be non-negative");
  need(!c.sizes.empty(), "sizes must list at least one size");
  for (int s : c.sizes) need(s >= 1, "sizes must be positive");
  need(c.reference >= 1, "reference must be positive");
  need(c.seeds >= 1, "seeds must be at least 1");
  need(c.t_eval >= 0.0, "t_eval must be non-negative");
  need(c.sigma_v > 0.0, "sigma_v must be positive");
  need(c.vmax > 0.0 && c.vmax <= 1.0, "vmax must be in (0, 1]");
  need(c.curve_particles >= 1, "curve_particles must be positive");
  need(c.curve_stride >= 1, "curve_stride must be at least 1");
  need(c.samples >= 1, "samples must be positive");
  need(!c.times.empty(), "times must list at least one time");
  for (std::size_t i = 0; i < c.times.size(); ++i) {
    need(c.times[i] >= 0.0, "times must be non-negative");
    if (i) need(c.times[i] > c.times[i - 1], "times must be increasing");
  }
  need(c.points >= 1, "points must be positive");
  need(c.fd_step > 0.0, "fd_step must be positive");
  need(c.grid >= 1, "grid must be at least 1");
  need(c.iterations >= 1, "iterations must be at least 1");
  need(c.alpha >= 0.0, "alpha must be non-negative");
  need(c.interpolation == "constant_left" || c.interpolation == "linear" ||
           c.interpolation == "hermite",
       "interpolation must be constant_left, linear or hermite");
}

std::string serialize_config(const RunConfig& cfg) {
  std::string out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(cfg) + "\n";
  }
  return out;
}

Domain RunConfig::make_domain() const {
  return torus ? Domain::torus(dim, side) : Domain::free_space(dim);
}

PotentialSpec RunConfig::make_potential_spec() const {
  if (family == "compact_bump") return CompactBump{range};
  if (family == "log_grad_bounded") return LogGradBounded{decay};
  return GaussianPeriodized{width, max_order};
}

DynamicsMode RunConfig::make_mode() const {
  if (mode == "plain") return Plain{};
  return Regularized{epsilon};
}

RegularizedConvention RunConfig::make_convention() const {
  return convention == "weighted" ? RegularizedConvention::Weighted
                                  : RegularizedConvention::Literal;
}

Interpolation RunConfig::make_interpolation() const {
  if (interpolation == "constant_left") return Interpolation::ConstantLeft;
  if (interpolation == "linear") return Interpolation::Linear;
  return Interpolation::CubicHermite;
}

FieldSpec RunConfig::make_field() const {
  return FieldSpec{Potential(make_potential_spec(), make_domain()), make_mode(),
                   make_convention()};
}

}  // namespace flockkit
