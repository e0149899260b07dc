// Command-line front end. Talks to the library only through its C interface.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include "flockkit/flockkit.h"

namespace {

struct Options {
  std::string config;
  std::optional<long long> seed;
  std::optional<std::string> out;
  std::optional<int> save_every;
  std::optional<int> spectral_every;
};

int report(fk_status s) {
  if (s == FK_OK) return 0;
  std::fprintf(stderr, "flockkit: %s: %s\n", fk_status_name(s), fk_last_error());
  return s == FK_CHECK_FAILED ? 2 : 1;
}

int run(const std::string& scenario, const Options& o) {
  fk_config* cfg = nullptr;
  fk_status s = o.config.empty() ? fk_config_default(&cfg) : fk_config_load(o.config.c_str(), &cfg);
  if (s != FK_OK) return report(s);
  std::vector<std::pair<std::string, std::string>> sets = {{"scenario", scenario}};
  if (o.seed) sets.emplace_back("seed", std::to_string(*o.seed));
  if (o.out) sets.emplace_back("out", *o.out);
  if (o.save_every) sets.emplace_back("save_every", std::to_string(*o.save_every));
  if (o.spectral_every) sets.emplace_back("spectral_every", std::to_string(*o.spectral_every));
  for (const auto& [key, value] : sets) {
    s = fk_config_set(cfg, "run", key.c_str(), value.c_str());
    if (s != FK_OK) break;
  }
  if (s == FK_OK) s = fk_run_scenario(cfg);
  fk_config_destroy(cfg);
  return report(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Alignment dynamics with normalized interaction weights"};
  app.set_version_flag("--version", std::string(fk_version()));
  app.require_subcommand(1);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> scenarios = {
      {"simulate", "integrate the particle system and record metrics"},
      {"spectrum", "spectrum of the interaction matrix at the initial positions"},
      {"flock-detect", "simulate and test for asymptotic flocking"},
      {"converge", "empirical measures against a large reference cloud"},
      {"stability", "distance growth between two nearby kinetic solutions"},
      {"picard", "Picard iteration for the kinetic fixed point"},
      {"entropy", "entropy decay along the characteristic flow"},
      {"jacobian", "finite-difference flow Jacobian against the divergence formula"},
  };
  for (const auto& [name, help] : scenarios) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opt.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "global seed");
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--save-every", opt.save_every, "steps between saved frames")
        ->check(CLI::PositiveNumber);
    sub->add_option("--spectral-every", opt.spectral_every, "saved frames between spectra")
        ->check(CLI::NonNegativeNumber);
    sub->callback([&, scenario = name] { std::exit(run(scenario, opt)); });
  }

  std::string plot_dir = "out";
  CLI::App* plot = app.add_subcommand("emit-plotdata", "collate CSVs from a run directory");
  plot->add_option("--out,dir", plot_dir, "run directory");
  plot->callback([&] { std::exit(report(fk_emit_plotdata(plot_dir.c_str()))); });

  CLI11_PARSE(app, argc, argv);
  return 0;
}
