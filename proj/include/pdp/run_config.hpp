#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pdp/learner.hpp"
#include "pdp/pricing_env.hpp"

namespace pdp {

enum class BatchKind { none, delayed, mean };

struct BatchMode {
  BatchKind kind = BatchKind::none;
  int size = 1;
};

enum class LearnerKind { pddp, ucb };

// Parsed experiment configuration: flat "key = value" lines plus one nested
// schedule block. Presets (exp1..exp6) expand into per-setting runs inside
// the runner; "custom" runs the schedule block as written.
struct RunConfig {
  std::string experiment = "custom";
  long horizon = 10000;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<std::string> difficulties;  // used when tau is not explicit
  std::optional<double> tau;
  double delta = 0.01;
  double eta = 0.0;  // 0 = auto: sqrt(ln(#pairs) / T)
  AlphaMode alpha_mode = AlphaMode::dynamic;
  double alpha_fixed = 0.5;
  BatchMode batch;
  LearnerKind learner = LearnerKind::pddp;
  bool violation_realized = false;  // expected-violation series by default
  double ucb_c = 1.0;
  long log_every = 0;  // 0 = auto: max(1, T / 5000)

  PricingParams base;

  struct ScheduleSpec {
    std::string kind = "stationary";
    std::vector<int> n_changes{1, 5};
    std::map<std::string, std::vector<double>> final_overrides;
    std::map<int, std::map<std::string, std::vector<double>>> phase_overrides;
  } schedule;

  void check() const {
    if (horizon < 1) throw std::invalid_argument("config: T must be >= 1");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (batch.kind != BatchKind::none && batch.size < 1)
      throw std::invalid_argument("config: batch size must be >= 1");
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("config: delta in (0,1)");
    if (eta < 0.0) throw std::invalid_argument("config: eta must be positive or auto");
    base.check();
    if (!tau && difficulties.empty())
      throw std::invalid_argument("config: need either tau or a difficulty list");
    for (const auto& d : difficulties)
      if (d != "low" && d != "mid" && d != "high")
        throw std::invalid_argument("config: unknown difficulty " + d);
    if (schedule.kind != "stationary" && schedule.kind != "abrupt" &&
        schedule.kind != "smooth")
      throw std::invalid_argument("config: unknown schedule kind " + schedule.kind);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

inline std::vector<double> parse_doubles(const std::string& value, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split(value, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw std::invalid_argument("config: bad number '" + tok + "' for key " + key);
    }
  }
  return out;
}

inline double parse_double(const std::string& value, const std::string& key) {
  auto v = parse_doubles(value, key);
  if (v.size() != 1) throw std::invalid_argument("config: expected one number for " + key);
  return v[0];
}

inline bool assign_param(PricingParams& par, const std::string& key,
                         const std::vector<double>& value) {
  if (key == "prices_main") par.prices_main = value;
  else if (key == "conv_main") par.conv_main = value;
  else if (key == "stay_prob") par.stay_prob = value;
  else if (key == "prices_anc") par.prices_anc = value;
  else if (key == "conv_anc") par.conv_anc = value;
  else if (key == "continue_prob") par.continue_prob = value;
  else if (key == "bonus" && value.size() == 1) par.bonus = value[0];
  else if (key == "tau" && value.size() == 1) par.tau = value[0];
  else return false;
  return true;
}

}  // namespace detail

inline RunConfig parse_run_config(std::istream& in) {
  using detail::parse_double;
  using detail::parse_doubles;
  using detail::split;
  using detail::trim;

  RunConfig cfg;
  bool in_schedule = false;
  std::string line;
  int line_no = 0;
  bool difficulties_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "schedule {") {
      in_schedule = true;
      continue;
    }
    if (line == "}") {
      if (!in_schedule)
        throw std::invalid_argument("config line " + std::to_string(line_no) + ": stray '}'");
      in_schedule = false;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (in_schedule) {
      if (key == "kind") {
        cfg.schedule.kind = value;
      } else if (key == "n_changes") {
        cfg.schedule.n_changes.clear();
        for (double v : parse_doubles(value, key)) cfg.schedule.n_changes.push_back(int(v));
      } else if (key.rfind("final.", 0) == 0) {
        cfg.schedule.final_overrides[key.substr(6)] = parse_doubles(value, key);
      } else if (key.rfind("phase", 0) == 0) {
        auto dot = key.find('.');
        if (dot == std::string::npos)
          throw std::invalid_argument("config: expected phase<i>.<param>, got " + key);
        int idx = std::stoi(key.substr(5, dot - 5));
        cfg.schedule.phase_overrides[idx][key.substr(dot + 1)] = parse_doubles(value, key);
      } else {
        throw std::invalid_argument("config: unknown schedule key " + key);
      }
      continue;
    }

    if (key == "experiment") cfg.experiment = value;
    else if (key == "T") cfg.horizon = long(parse_double(value, key));
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (double v : parse_doubles(value, key)) cfg.seeds.push_back(std::uint64_t(v));
    } else if (key == "difficulty") {
      cfg.difficulties = split(value, ',');
      difficulties_set = true;
    } else if (key == "tau") {
      cfg.tau = parse_double(value, key);
      cfg.base.tau = *cfg.tau;
    } else if (key == "delta") cfg.delta = parse_double(value, key);
    else if (key == "eta") cfg.eta = value == "auto" ? 0.0 : parse_double(value, key);
    else if (key == "alpha") {
      if (value == "dynamic") {
        cfg.alpha_mode = AlphaMode::dynamic;
      } else {
        cfg.alpha_mode = AlphaMode::fixed;
        cfg.alpha_fixed = parse_double(value, key);
      }
    } else if (key == "batch") {
      if (value == "none") {
        cfg.batch = {BatchKind::none, 1};
      } else {
        auto parts = split(value, ':');
        if (parts.size() != 2 || (parts[0] != "delayed" && parts[0] != "mean"))
          throw std::invalid_argument("config: batch must be none|delayed:<B>|mean:<B>");
        cfg.batch.kind = parts[0] == "delayed" ? BatchKind::delayed : BatchKind::mean;
        cfg.batch.size = int(parse_double(parts[1], key));
      }
    } else if (key == "learner" || key == "baseline") {
      if (value == "pddp") cfg.learner = LearnerKind::pddp;
      else if (value == "ucb") cfg.learner = LearnerKind::ucb;
      else throw std::invalid_argument("config: learner must be pddp or ucb");
    } else if (key == "violation") {
      if (value == "expected") cfg.violation_realized = false;
      else if (value == "realized") cfg.violation_realized = true;
      else throw std::invalid_argument("config: violation must be expected or realized");
    } else if (key == "ucb_c") cfg.ucb_c = parse_double(value, key);
    else if (key == "log_every") cfg.log_every = long(parse_double(value, key));
    else if (detail::assign_param(cfg.base, key, parse_doubles(value, key))) {
      // environment parameter
    } else {
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": unknown key " + key);
    }
  }
  if (in_schedule) throw std::invalid_argument("config: unterminated schedule block");
  if (!difficulties_set && !cfg.tau) cfg.difficulties = {"low", "mid", "high"};
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_run_config(in);
}

}  // namespace pdp
