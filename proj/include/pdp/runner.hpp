#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "pdp/learner.hpp"
#include "pdp/metrics.hpp"
#include "pdp/occupancy.hpp"
#include "pdp/pricing_env.hpp"
#include "pdp/rng.hpp"
#include "pdp/run_config.hpp"
#include "pdp/svg.hpp"
#include "pdp/ucb.hpp"

namespace pdp {

// One expanded run variant: a named schedule with its sales target, batch
// mode, and learner choice. Presets expand into several settings.
struct RunSetting {
  std::string name;
  Schedule schedule;
  BatchMode batch;
  LearnerKind learner = LearnerKind::pddp;
};

namespace detail {

inline PricingParams with_overrides(const PricingParams& base,
                                    const std::map<std::string, std::vector<double>>& ov) {
  PricingParams out = base;
  for (const auto& [key, value] : ov)
    if (!assign_param(out, key, value))
      throw std::invalid_argument("config: unknown schedule parameter " + key);
  return out;
}

inline void pin_tau(std::vector<PricingParams>& phases, double tau) {
  for (auto& p : phases) p.tau = tau;
}

inline double resolve_tau(const RunConfig& cfg, const std::string& difficulty) {
  if (cfg.tau) return *cfg.tau;
  return difficulty_tau(cfg.base, difficulty);
}

inline std::vector<PricingParams> linear_phases(const PricingParams& from,
                                                const PricingParams& to, int n_changes) {
  std::vector<PricingParams> phases;
  for (int j = 0; j <= n_changes; ++j)
    phases.push_back(lerp(from, to, n_changes > 0 ? double(j) / double(n_changes) : 0.0));
  return phases;
}

}  // namespace detail

// Expands an experiment id into its run settings. Difficulties become
// stationary settings; the non-stationary presets build abrupt or smooth
// schedules toward the "final.*" parameter overrides; exp6 pits the
// primal-dual learner against the per-state UCB baseline.
inline std::vector<RunSetting> expand_settings(const RunConfig& cfg) {
  using detail::linear_phases;
  using detail::pin_tau;
  using detail::resolve_tau;
  using detail::with_overrides;

  std::vector<RunSetting> out;
  const std::string& id = cfg.experiment;
  PricingParams final_params = with_overrides(cfg.base, cfg.schedule.final_overrides);

  auto difficulties = cfg.difficulties;
  if (cfg.tau) difficulties = {"tau"};

  if (id == "exp1" || id == "exp4" || id == "exp5") {
    BatchMode batch = cfg.batch;
    if (id == "exp4" && batch.kind == BatchKind::none) batch = {BatchKind::delayed, 20};
    if (id == "exp5" && batch.kind == BatchKind::none) batch = {BatchKind::mean, 20};
    for (const auto& d : difficulties) {
      PricingParams p = cfg.base;
      p.tau = resolve_tau(cfg, d);
      out.push_back({d, Schedule::stationary(p), batch, LearnerKind::pddp});
    }
    return out;
  }
  if (id == "exp2") {
    std::string d = difficulties.size() == 1 ? difficulties.front() : "mid";
    double tau = resolve_tau(cfg, d);
    for (int n : cfg.schedule.n_changes) {
      auto phases = linear_phases(cfg.base, final_params, n);
      pin_tau(phases, tau);
      out.push_back({"n" + std::to_string(n), Schedule::abrupt(phases), cfg.batch,
                     LearnerKind::pddp});
    }
    return out;
  }
  if (id == "exp3") {
    std::string d = difficulties.size() == 1 ? difficulties.front() : "mid";
    double tau = resolve_tau(cfg, d);
    PricingParams from = cfg.base, to = final_params;
    from.tau = tau;
    to.tau = tau;
    out.push_back({"smooth", Schedule::smooth(from, to), cfg.batch, LearnerKind::pddp});
    return out;
  }
  if (id == "exp6") {
    PricingParams p = cfg.base;
    p.tau = cfg.tau ? *cfg.tau : 0.0;
    out.push_back({"pddp", Schedule::stationary(p), cfg.batch, LearnerKind::pddp});
    out.push_back({"ucb", Schedule::stationary(p), cfg.batch, LearnerKind::ucb});
    return out;
  }
  if (id == "custom") {
    std::string d = difficulties.size() == 1 ? difficulties.front() : "mid";
    double tau = cfg.tau ? *cfg.tau : resolve_tau(cfg, d);
    Schedule sched;
    if (cfg.schedule.kind == "stationary") {
      PricingParams p = cfg.base;
      p.tau = tau;
      sched = Schedule::stationary(p);
    } else if (cfg.schedule.kind == "smooth") {
      PricingParams from = cfg.base, to = final_params;
      from.tau = tau;
      to.tau = tau;
      sched = Schedule::smooth(from, to);
    } else {
      int n = cfg.schedule.n_changes.empty() ? 1 : cfg.schedule.n_changes.front();
      std::vector<PricingParams> phases;
      if (!cfg.schedule.phase_overrides.empty()) {
        for (int j = 0; j <= n; ++j) {
          auto it = cfg.schedule.phase_overrides.find(j);
          phases.push_back(it == cfg.schedule.phase_overrides.end()
                               ? cfg.base
                               : with_overrides(cfg.base, it->second));
        }
      } else {
        phases = linear_phases(cfg.base, final_params, n);
      }
      pin_tau(phases, tau);
      sched = Schedule::abrupt(phases);
    }
    out.push_back({cfg.learner == LearnerKind::ucb ? "ucb" : "custom", sched, cfg.batch,
                   cfg.learner});
    return out;
  }
  throw std::invalid_argument("unknown experiment id: " + id);
}

struct RunResult {
  MetricsSeries series;
  bool failed = false;
  std::string error;
};

// Optional per-round hook, called after the learner consumed episode t.
using RoundObserver = std::function<void(const PdDpLearner&, long)>;

// Runs one (setting, seed) simulation for T episodes and fills the metric
// series. All expectations are computed against the true schedule-resolved
// model of each round; the regret baseline is the constrained optimum of the
// horizon-averaged model.
inline RunResult run_single(const RunSetting& setting, std::uint64_t seed,
                            const RunConfig& cfg, long T,
                            const RoundObserver& observe = {}) {
  RunResult result;
  MetricsSeries& series = result.series;
  series.seed = seed;
  series.setting = setting.name;
  series.horizon = T;
  try {
    PricingEnvironment env(setting.schedule, T);
    auto topo = env.topology();

    GroundTruth avg = env.horizon_average();
    auto opt = optimal_constrained_occupancy(avg);
    series.baseline_value = opt.value;
    series.baseline_feasible = opt.feasible;
    series.reserve(T);

    // Per-phase truth cache; smooth schedules rebuild per round.
    const bool smooth = setting.schedule.kind == Schedule::Kind::smooth;
    std::vector<GroundTruth> phase_cache;
    std::vector<long> phase_of_t;
    if (!smooth) {
      long n_phases = long(setting.schedule.phases.size());
      for (long j = 0; j < n_phases; ++j)
        phase_cache.push_back(build_pricing_mdp(topo, setting.schedule.phases[std::size_t(j)]));
    }
    auto truth_at = [&](long t) -> GroundTruth {
      if (smooth) return env.ground_truth(t);
      long n = long(setting.schedule.phases.size());
      long idx = setting.schedule.kind == Schedule::Kind::stationary
                     ? 0
                     : std::min(n - 1, ((t - 1) * n) / T);
      return phase_cache[std::size_t(idx)];
    };

    Rng rng(seed);
    LearnerConfig lcfg;
    lcfg.horizon = T;
    lcfg.eta = cfg.eta;
    lcfg.delta = cfg.delta;
    lcfg.alpha_mode = cfg.alpha_mode;
    lcfg.alpha_fixed = cfg.alpha_fixed;
    lcfg.merge = MergeSpec{env.x0(), env.x1(), env.x2()};

    std::unique_ptr<PdDpLearner> learner;
    std::unique_ptr<UcbPricingAgent> ucb;
    if (setting.learner == LearnerKind::pddp)
      learner = std::make_unique<PdDpLearner>(topo, lcfg);
    else
      ucb = std::make_unique<UcbPricingAgent>(topo, cfg.ucb_c);

    std::vector<EpisodeOutcome> batch;
    batch.reserve(std::size_t(setting.batch.size));

    for (long t = 1; t <= T; ++t) {
      Policy policy = ucb ? ucb->policy() : learner->policy();
      GroundTruth truth = truth_at(t);
      OccupancyMeasure played = occupancy_from(truth.P, policy);
      double inst_reward = expected_value(played, truth.mean_reward);
      EpisodeOutcome outcome = env.sample_episode(policy, t, rng);
      double inst_violation;
      if (cfg.violation_realized) {
        inst_violation = 0.0;
        for (double g : outcome.constraints) inst_violation += g;
      } else {
        inst_violation = expected_value(played, truth.mean_constraint);
      }

      if (ucb) {
        ucb->observe(outcome);
        // Same telemetry schema as the primal-dual learner, dual fields zeroed.
        series.push_round(inst_reward, inst_violation, 0.0, 0);
        continue;
      }
      switch (setting.batch.kind) {
        case BatchKind::none:
          learner->step(outcome);
          break;
        case BatchKind::delayed:
          batch.push_back(outcome);
          if (int(batch.size()) == setting.batch.size || t == T) {
            learner->batch_step_delayed(batch);
            batch.clear();
          }
          break;
        case BatchKind::mean:
          batch.push_back(outcome);
          if (int(batch.size()) == setting.batch.size || t == T) {
            learner->batch_step_mean(batch);
            batch.clear();
          }
          break;
      }
      LearnerTelemetry tel = learner->telemetry();
      series.push_round(inst_reward, inst_violation, tel.lambda, tel.epoch);
      if (observe) observe(*learner, t);
    }
  } catch (const std::exception& err) {
    result.failed = true;
    result.error = err.what();
  }
  return result;
}

// One logged CSV row.
struct RunRecord {
  long t = 0;
  std::uint64_t seed = 0;
  std::string setting;
  double cum_regret = 0.0;
  double cum_violation = 0.0;
  double cum_sum = 0.0;
  double mean_reward = 0.0;
  double lambda = 0.0;
  int epoch = 0;
};

inline long log_stride(const RunConfig& cfg, long T) {
  if (cfg.log_every > 0) return cfg.log_every;
  return std::max<long>(1, T / 5000);
}

inline std::vector<RunRecord> to_records(const MetricsSeries& series, long stride) {
  std::vector<RunRecord> rows;
  long T = long(series.cum_regret.size());
  for (long t = stride; t <= T; t += stride) {
    std::size_t i = std::size_t(t - 1);
    rows.push_back({t, series.seed, series.setting, series.cum_regret[i],
                    series.cum_violation[i], series.cum_regret[i] + series.cum_violation[i],
                    series.mean_reward[i], series.lambda[i], series.epoch[i]});
  }
  if (T > 0 && (T % stride) != 0) {
    std::size_t i = std::size_t(T - 1);
    rows.push_back({T, series.seed, series.setting, series.cum_regret[i],
                    series.cum_violation[i], series.cum_regret[i] + series.cum_violation[i],
                    series.mean_reward[i], series.lambda[i], series.epoch[i]});
  }
  return rows;
}

namespace detail {

inline std::string fmt_value(double v) {
  // Round-trip exact: values read back from the CSV equal the doubles that
  // were written, so identities like R + V survive the file format.
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline void write_csv(const std::string& path, const std::vector<RunRecord>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,seed,setting,cum_regret,cum_violation,cum_regret_plus_violation,mean_reward,"
         "lambda,epoch\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.seed << ',' << r.setting << ',' << detail::fmt_value(r.cum_regret)
        << ',' << detail::fmt_value(r.cum_violation) << ',' << detail::fmt_value(r.cum_sum)
        << ',' << detail::fmt_value(r.mean_reward) << ',' << detail::fmt_value(r.lambda)
        << ',' << r.epoch << '\n';
  }
}

inline std::vector<RunRecord> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::vector<RunRecord> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = detail::split(line, ',');
    if (cells.size() != 9) throw std::runtime_error("malformed record in " + path);
    RunRecord r;
    r.t = std::stol(cells[0]);
    r.seed = std::stoull(cells[1]);
    r.setting = cells[2];
    r.cum_regret = std::stod(cells[3]);
    r.cum_violation = std::stod(cells[4]);
    r.cum_sum = std::stod(cells[5]);
    r.mean_reward = std::stod(cells[6]);
    r.lambda = std::stod(cells[7]);
    r.epoch = std::stoi(cells[8]);
    rows.push_back(std::move(r));
  }
  return rows;
}

// Mean and 95% normal-approximation half-width across seeds, aligned on the
// logged episodes of each setting.
inline std::vector<SeriesBand> seed_bands(
    const std::vector<std::vector<RunRecord>>& per_run,
    double (*pick)(const RunRecord&)) {
  std::map<std::string, std::vector<const std::vector<RunRecord>*>> by_setting;
  for (const auto& rows : per_run)
    if (!rows.empty()) by_setting[rows.front().setting].push_back(&rows);
  std::vector<SeriesBand> bands;
  for (const auto& [setting, runs] : by_setting) {
    SeriesBand band;
    band.label = setting;
    std::size_t n_points = runs.front()->size();
    for (const auto* r : runs) n_points = std::min(n_points, r->size());
    for (std::size_t i = 0; i < n_points; ++i) {
      double mean = 0.0;
      for (const auto* r : runs) mean += pick((*r)[i]);
      mean /= double(runs.size());
      double var = 0.0;
      for (const auto* r : runs) {
        double d = pick((*r)[i]) - mean;
        var += d * d;
      }
      var = runs.size() > 1 ? var / double(runs.size() - 1) : 0.0;
      double half = 1.96 * std::sqrt(var / double(runs.size()));
      band.x.push_back(double((*runs.front())[i].t));
      band.mean.push_back(mean);
      band.half.push_back(half);
    }
    bands.push_back(std::move(band));
  }
  return bands;
}

inline void emit_plots(const std::string& out_dir, const std::string& prefix,
                       const std::vector<std::vector<RunRecord>>& per_run,
                       bool with_mean_reward, double x_min = 0.0) {
  if (per_run.empty()) throw std::invalid_argument("emit_plots: no records");
  struct Metric {
    const char* file;
    const char* title;
    const char* axis;
    double (*pick)(const RunRecord&);
  };
  std::vector<Metric> metrics = {
      {"cr.svg", "Cumulative regret", "CR",
       [](const RunRecord& r) { return r.cum_regret; }},
      {"ccv.svg", "Cumulative constraint violation", "CCV",
       [](const RunRecord& r) { return r.cum_violation; }},
      {"cr_plus_ccv.svg", "Cumulative regret + violation", "CR + CCV",
       [](const RunRecord& r) { return r.cum_sum; }},
  };
  if (with_mean_reward)
    metrics.push_back({"mean_reward.svg", "Mean reward", "mean reward",
                       [](const RunRecord& r) { return r.mean_reward; }});
  for (const auto& m : metrics) {
    auto bands = seed_bands(per_run, m.pick);
    std::string svg = render_line_chart(prefix + m.title, m.axis, bands, x_min);
    std::ofstream out(std::filesystem::path(out_dir) / (prefix + m.file), std::ios::binary);
    out << svg;
  }
}

struct ExperimentOverrides {
  double scale = 1.0;
  std::vector<std::uint64_t> seeds;  // replaces config seeds when nonempty
  std::string out_dir = "out";
  int jobs = 0;      // 0 = hardware concurrency
  double x_min = 0;  // plot clipping only
  bool quiet = false;
};

// Runs every (setting, seed) pair of the experiment on a worker pool, writes
// one CSV per run plus summary.csv and the SVG charts. Returns the number of
// failed runs.
inline int run_experiment(const RunConfig& cfg, const ExperimentOverrides& ov) {
  cfg.check();
  auto settings = expand_settings(cfg);
  auto seeds = ov.seeds.empty() ? cfg.seeds : ov.seeds;
  long T = std::max<long>(1, long(double(cfg.horizon) * ov.scale));

  struct Task {
    const RunSetting* setting;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (const auto& s : settings)
    for (auto seed : seeds) tasks.push_back({&s, seed});

  std::vector<RunResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  int jobs = ov.jobs > 0 ? ov.jobs : int(std::thread::hardware_concurrency());
  jobs = std::max(1, std::min<int>(jobs, int(tasks.size())));
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = run_single(*tasks[i].setting, tasks[i].seed, cfg, T);
    }
  };
  std::vector<std::thread> pool;
  for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  std::filesystem::create_directories(ov.out_dir);
  long stride = log_stride(cfg, T);
  std::vector<std::vector<RunRecord>> per_run;
  int failures = 0;

  std::ofstream summary(std::filesystem::path(ov.out_dir) / "summary.csv", std::ios::binary);
  summary << "experiment,setting,seed,T,status,cum_regret,cum_violation,"
             "cum_regret_plus_violation,mean_reward,baseline_value,baseline_feasible\n";
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto& res = results[i];
    std::string run_name = cfg.experiment + "_" + tasks[i].setting->name + "_seed" +
                           std::to_string(tasks[i].seed);
    if (res.failed) {
      ++failures;
      summary << cfg.experiment << ',' << tasks[i].setting->name << ',' << tasks[i].seed
              << ',' << T << ",failed,,,,,,\n";
      if (!ov.quiet)
        std::fprintf(stderr, "run %s failed: %s\n", run_name.c_str(), res.error.c_str());
      continue;
    }
    auto rows = to_records(res.series, stride);
    write_csv((std::filesystem::path(ov.out_dir) / (run_name + ".csv")).string(), rows);
    const auto& s = res.series;
    std::size_t last = s.cum_regret.size() - 1;
    summary << cfg.experiment << ',' << tasks[i].setting->name << ',' << tasks[i].seed << ','
            << T << ",ok," << detail::fmt_value(s.cum_regret[last]) << ','
            << detail::fmt_value(s.cum_violation[last]) << ','
            << detail::fmt_value(s.cum_regret[last] + s.cum_violation[last]) << ','
            << detail::fmt_value(s.mean_reward[last]) << ','
            << detail::fmt_value(s.baseline_value) << ','
            << (s.baseline_feasible ? "true" : "false") << '\n';
    if (!ov.quiet)
      std::printf("run %-28s R_T=%-12.5g V_T=%-12.5g mean reward=%.5g\n", run_name.c_str(),
                  s.cum_regret[last], s.cum_violation[last], s.mean_reward[last]);
    per_run.push_back(std::move(rows));
  }
  if (!per_run.empty())
    emit_plots(ov.out_dir, cfg.experiment + "_", per_run, cfg.experiment == "exp6", ov.x_min);
  return failures;
}

}  // namespace pdp
