#include "artifacts.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <sstream>

#include "config.hpp"

namespace fs = std::filesystem;

namespace flockkit {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
  require(static_cast<bool>(out_), ErrorKind::Io, "cannot write '" + path + "'");
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
  out_ << "\n";
}

CsvWriter& CsvWriter::cell(double x) { return cell(format_double(x)); }
CsvWriter& CsvWriter::cell(long long x) { return cell(std::to_string(x)); }
CsvWriter& CsvWriter::cell(const std::string& s) {
  if (!first_) out_ << ",";
  out_ << s;
  first_ = false;
  return *this;
}
CsvWriter& CsvWriter::blank() { return cell(std::string()); }
void CsvWriter::end_row() {
  out_ << "\n";
  first_ = true;
}

void make_directory(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + path + "'");
  out << text;
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

namespace {

nlohmann::json rows_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json r = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) r.push_back(m(i, c));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace

nlohmann::json metrics_json(const MetricsRecord& m) {
  nlohmann::json j;
  j["dist_to_manifold"] = m.dist_to_manifold;
  j["mean_velocity"] = std::vector<double>(m.mean_velocity.data(),
                                           m.mean_velocity.data() + m.mean_velocity.size());
  j["second_moment"] = m.second_moment;
  if (m.connected) j["connected"] = *m.connected;
  if (m.spectral_gap) j["spectral_gap"] = *m.spectral_gap;
  if (m.flock) j["flock"] = *m.flock;
  return j;
}

void write_trajectory_jsonl(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + path + "'");
  for (int k = 0; k < traj.frames(); ++k) {
    nlohmann::json j;
    j["t"] = traj.times[k];
    j["q"] = rows_json(traj.states[k].q);
    j["p"] = rows_json(traj.states[k].p);
    j["metrics"] = metrics_json(traj.metrics[k]);
    out << j.dump() << "\n";
  }
}

void write_metrics_csv(const std::string& path, const Trajectory& traj) {
  const int d = traj.frames() ? traj.states.front().dim() : 0;
  std::vector<std::string> header = {"t", "dist_to_manifold"};
  for (int c = 0; c < d; ++c) header.push_back("mean_v" + std::to_string(c));
  header.insert(header.end(), {"second_moment", "connected", "spectral_gap", "flock"});
  CsvWriter w(path, header);
  for (const auto& m : traj.metrics) {
    w.cell(m.t).cell(m.dist_to_manifold);
    for (int c = 0; c < d; ++c) w.cell(m.mean_velocity[c]);
    w.cell(m.second_moment);
    m.connected ? w.cell(static_cast<long long>(*m.connected)) : w.blank();
    m.spectral_gap ? w.cell(*m.spectral_gap) : w.blank();
    m.flock ? w.cell(static_cast<long long>(*m.flock)) : w.blank();
    w.end_row();
  }
}

void write_moments_csv(const std::string& path, const MomentReport& rep) {
  const int d = rep.rows.empty() ? 0 : static_cast<int>(rep.rows.front().mean_x.size());
  std::vector<std::string> header = {"t"};
  for (int c = 0; c < d; ++c) header.push_back("mean_x" + std::to_string(c));
  for (int c = 0; c < d; ++c) header.push_back("mean_v" + std::to_string(c));
  header.insert(header.end(), {"second_moment", "identity_residual"});
  CsvWriter w(path, header);
  for (const auto& r : rep.rows) {
    w.cell(r.t);
    for (int c = 0; c < d; ++c) w.cell(r.mean_x[c]);
    for (int c = 0; c < d; ++c) w.cell(r.mean_v[c]);
    w.cell(r.second_moment).cell(r.identity_residual);
    w.end_row();
  }
}

namespace {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    require(it != header.end(), ErrorKind::Io, "artifact is missing column '" + name + "'");
    return static_cast<int>(it - header.begin());
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Table read_csv(const fs::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read '" + path.string() + "'");
  Table t;
  std::string line;
  if (std::getline(in, line)) t.header = split_csv(line);
  while (std::getline(in, line))
    if (!line.empty()) t.rows.push_back(split_csv(line));
  return t;
}

double to_double(const std::string& s) {
  if (s.empty()) return std::nan("");
  return std::stod(s);
}

}  // namespace

std::vector<std::string> emit_plotdata(const std::string& dir) {
  const fs::path root(dir);
  const std::vector<std::string> expected = {"metrics.csv",     "convergence_table.csv",
                                             "entropy.csv",     "stability.csv",
                                             "picard.csv",      "jacobian.csv"};
  bool any = false;
  for (const auto& e : expected) any = any || fs::exists(root / e);
  if (!any) {
    std::string list;
    for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
    fail(ErrorKind::Io, "no artifacts in '" + dir + "'; expected at least one of: " + list);
  }
  const fs::path plot = root / "plot";
  make_directory(plot.string());
  std::vector<std::string> written;

  if (fs::exists(root / "metrics.csv")) {
    const Table t = read_csv(root / "metrics.csv");
    const int ct = t.column("t"), cd = t.column("dist_to_manifold");
    CsvWriter w((plot / "decay.csv").string(), {"t", "log_dist"});
    for (const auto& r : t.rows) {
      const double dist = to_double(r[cd]);
      w.cell(to_double(r[ct])).cell(dist > 0.0 ? std::log(dist) : -std::numeric_limits<double>::infinity());
      w.end_row();
    }
    written.push_back((plot / "decay.csv").string());
  }
  if (fs::exists(root / "convergence_table.csv")) {
    const Table t = read_csv(root / "convergence_table.csv");
    const int cn = t.column("N"), cw = t.column("W_hat");
    std::map<long long, std::vector<double>> by_n;
    std::vector<long long> order;
    for (const auto& r : t.rows) {
      const long long n = std::stoll(r[cn]);
      if (!by_n.count(n)) order.push_back(n);
      by_n[n].push_back(to_double(r[cw]));
    }
    CsvWriter w((plot / "convergence.csv").string(), {"N", "median_W_hat"});
    for (long long n : order) {
      auto v = by_n[n];
      std::sort(v.begin(), v.end());
      const std::size_t h = v.size() / 2;
      w.cell(n).cell(v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]));
      w.end_row();
    }
    written.push_back((plot / "convergence.csv").string());
  }
  auto project = [&](const std::string& name, const std::vector<std::string>& cols) {
    if (!fs::exists(root / name)) return;
    const Table t = read_csv(root / name);
    std::vector<int> idx;
    for (const auto& c : cols) idx.push_back(t.column(c));
    CsvWriter w((plot / name).string(), cols);
    for (const auto& r : t.rows) {
      for (int i : idx) w.cell(i < static_cast<int>(r.size()) ? r[i] : std::string());
      w.end_row();
    }
    written.push_back((plot / name).string());
  };
  project("entropy.csv", {"t", "H_transport", "H_knn"});
  project("stability.csv", {"t", "ratio", "bound"});
  project("picard.csv", {"t", "W_hat"});
  project("jacobian.csv", {"point", "t", "det_fd", "det_theory"});
  return written;
}

}  // namespace flockkit
