#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "density.hpp"

namespace flockkit {

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  CsvWriter& cell(double x);
  CsvWriter& cell(long long x);
  CsvWriter& cell(const std::string& s);
  CsvWriter& blank();
  void end_row();

 private:
  std::ofstream out_;
  bool first_ = true;
};

void make_directory(const std::string& dir);
void write_text(const std::string& path, const std::string& text);
void write_json(const std::string& path, const nlohmann::json& j);

// One JSON record per saved frame: {t, q, p, metrics}.
void write_trajectory_jsonl(const std::string& path, const Trajectory& traj);
void write_metrics_csv(const std::string& path, const Trajectory& traj);
void write_moments_csv(const std::string& path, const MomentReport& rep);

nlohmann::json metrics_json(const MetricsRecord& m);

// Collates per-scenario artifacts of `dir` into dir/plot. Returns the files
// written; throws an I/O error listing the expected inputs when none exist.
std::vector<std::string> emit_plotdata(const std::string& dir);

}  // namespace flockkit
