// Command-line front end for the pricing experiments: seeded batch runs,
// config validation, and re-plotting of existing CSV output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "pdp/run_config.hpp"
#include "pdp/runner.hpp"

namespace {

std::vector<std::uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  for (const auto& tok : pdp::detail::split(csv, ','))
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
  return seeds;
}

int cmd_validate(const std::string& config_path) {
  try {
    pdp::RunConfig cfg = pdp::load_run_config(config_path);
    cfg.check();
    auto settings = pdp::expand_settings(cfg);
    std::printf("config ok: experiment=%s T=%ld seeds=%zu settings=%zu\n",
                cfg.experiment.c_str(), cfg.horizon, cfg.seeds.size(), settings.size());
    for (const auto& s : settings) {
      const char* learner = s.learner == pdp::LearnerKind::ucb ? "ucb" : "pddp";
      const char* batch = s.batch.kind == pdp::BatchKind::none
                              ? "none"
                              : (s.batch.kind == pdp::BatchKind::delayed ? "delayed" : "mean");
      std::printf("  setting %-10s tau=%.4g phases=%zu batch=%s(%d) learner=%s\n",
                  s.name.c_str(), s.schedule.phases.front().tau, s.schedule.phases.size(),
                  batch, s.batch.size, learner);
    }
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "invalid config: %s\n", err.what());
    return 1;
  }
}

int cmd_run(const std::string& config_path, const pdp::ExperimentOverrides& ov) {
  try {
    pdp::RunConfig cfg = pdp::load_run_config(config_path);
    int failures = pdp::run_experiment(cfg, ov);
    if (failures > 0) {
      std::fprintf(stderr, "%d run(s) failed\n", failures);
      return 1;
    }
    std::printf("output written to %s\n", ov.out_dir.c_str());
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "run failed: %s\n", err.what());
    return 1;
  }
}

int cmd_topology(const std::string& config_path, const std::string& check_path) {
  try {
    if (!check_path.empty()) {
      std::ifstream in(check_path);
      if (!in) throw std::invalid_argument("cannot open " + check_path);
      std::string text((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>());
      auto topo = pdp::LayeredTopology::from_text(text);
      std::printf("topology ok: %d states, %d layers, %d pairs, %d edges\n",
                  topo->num_states(), topo->num_layers(), topo->num_pairs(),
                  topo->num_edges());
      return 0;
    }
    pdp::RunConfig cfg = pdp::load_run_config(config_path);
    auto topo = pdp::make_pricing_topology(int(cfg.base.prices_main.size()),
                                           int(cfg.base.prices_anc.size()));
    std::fputs(topo->to_text().c_str(), stdout);
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "topology failed: %s\n", err.what());
    return 1;
  }
}

int cmd_plot(const std::string& in_dir, double x_min) {
  try {
    // Group CSVs by experiment prefix (.../<experiment>_<setting>_seed<n>.csv).
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(in_dir)) {
      if (entry.path().extension() == ".csv" && entry.path().filename() != "summary.csv")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::fprintf(stderr, "no run CSVs found in %s\n", in_dir.c_str());
      return 1;
    }
    std::map<std::string, std::vector<std::vector<pdp::RunRecord>>> groups;
    for (const auto& f : files) {
      auto rows = pdp::read_csv(f.string());
      if (rows.empty()) continue;
      std::string stem = f.stem().string();
      auto cut = stem.find("_" + rows.front().setting + "_seed");
      std::string experiment = cut == std::string::npos ? "runs" : stem.substr(0, cut);
      groups[experiment].push_back(std::move(rows));
    }
    for (const auto& [experiment, per_run] : groups)
      pdp::emit_plots(in_dir, experiment + "_", per_run, experiment == "exp6", x_min);
    std::printf("plots written to %s\n", in_dir.c_str());
    return 0;
  } catch (const std::exception& err) {
    std::fprintf(stderr, "plot failed: %s\n", err.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained dynamic-pricing simulator and primal-dual learner"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", seeds_csv, in_dir;
  double scale = 1.0, x_min = 0.0;
  int jobs = 0;

  auto* run = app.add_subcommand("run", "run an experiment config");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--scale", scale, "horizon scale factor (e.g. 0.1 for a desk-scale run)");
  run->add_option("--seeds", seeds_csv, "comma-separated seed list override");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--jobs", jobs, "worker threads (default: hardware)");
  run->add_option("--xmin", x_min, "clip plots below this episode");

  auto* validate = app.add_subcommand("validate", "parse and check a config file");
  validate->add_option("--config", config_path, "experiment config file")->required();

  auto* plot = app.add_subcommand("plot", "rebuild SVG charts from run CSVs");
  plot->add_option("--in", in_dir, "directory containing run CSVs")->required();
  plot->add_option("--xmin", x_min, "clip plots below this episode");

  std::string topo_check;
  auto* topology = app.add_subcommand("topology", "print or check layered topologies");
  topology->add_option("--config", config_path,
                       "experiment config whose topology to print");
  topology->add_option("--check", topo_check, "topology file to parse and validate");

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) return cmd_validate(config_path);
  if (plot->parsed()) return cmd_plot(in_dir, x_min);
  if (topology->parsed()) {
    if (config_path.empty() && topo_check.empty()) {
      std::fprintf(stderr, "topology: need --config or --check\n");
      return 1;
    }
    return cmd_topology(config_path, topo_check);
  }

  pdp::ExperimentOverrides ov;
  ov.scale = scale;
  ov.out_dir = out_dir;
  ov.jobs = jobs;
  ov.x_min = x_min;
  if (!seeds_csv.empty()) ov.seeds = parse_seed_list(seeds_csv);
  return cmd_run(config_path, ov);
}
