#pragma once

// Grid sweeps over synthetic scenarios and their output files.
//
// sweep.csv columns, one row per cell in grid order:
//   protocol, n_agents, n_truth_holders, rounds, eta, epsilon, delta, rho,
//   sigma, lambda, mix, k_labels, n_trials, accuracy, accuracy_ci_lo,
//   accuracy_ci_hi, mean_drift_per_round, drift_ci_lo, drift_ci_hi,
//   mean_score_gap, score_gap_ci_lo, score_gap_ci_hi, mean_final_alpha_e,
//   alpha_e_ci_lo, alpha_e_ci_hi
// Numbers use the shortest round-trip form; undefined statistics print "nan"
// and unbounded interval ends "inf" / "-inf".
//
// Every cell reuses the same trial seeds, so cells differ only by their
// parameters.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acemad/analysis.hpp"
#include "acemad/config.hpp"
#include "acemad/llm_bridge.hpp"
#include "acemad/version.hpp"

namespace acemad {

struct SweepCell {
  ScenarioSpec scenario;
  ProtocolConfig protocol;
};

namespace detail {

template <class T, class Fn>
void expand_axis(std::vector<SweepCell>& cells, const std::vector<T>& values, Fn&& apply) {
  if (values.empty()) return;
  std::vector<SweepCell> out;
  out.reserve(cells.size() * values.size());
  for (const auto& cell : cells) {
    for (const auto& v : values) {
      auto c = cell;
      apply(c, v);
      out.push_back(std::move(c));
    }
  }
  cells = std::move(out);
}

}  // namespace detail

// Cartesian product in a fixed axis order; the first axis varies slowest.
inline std::vector<SweepCell> expand_grid(const ExperimentConfig& config) {
  std::vector<SweepCell> cells{{config.scenario, config.protocol}};
  const auto& g = config.sweep;
  detail::expand_axis(cells, g.protocols, [](SweepCell& c, Protocol p) { c.protocol.protocol = p; });
  detail::expand_axis(cells, g.n_agents, [](SweepCell& c, std::size_t n) { c.scenario.n_agents = n; });
  detail::expand_axis(cells, g.truth_holder_fraction, [](SweepCell& c, double f) {
    c.scenario.n_truth_holders = static_cast<std::size_t>(f * static_cast<double>(c.scenario.n_agents) + 1e-9);
  });
  detail::expand_axis(cells, g.rounds, [](SweepCell& c, std::size_t t) { c.protocol.rounds = t; });
  detail::expand_axis(cells, g.eta, [](SweepCell& c, double v) { c.protocol.eta = v; });
  detail::expand_axis(cells, g.epsilon, [](SweepCell& c, double v) { c.scenario.crowd_bias_epsilon = v; });
  detail::expand_axis(cells, g.delta, [](SweepCell& c, double v) { c.scenario.truth_holder_delta = v; });
  detail::expand_axis(cells, g.rho, [](SweepCell& c, double v) { c.scenario.error_correlation_rho = v; });
  detail::expand_axis(cells, g.sigma, [](SweepCell& c, double v) { c.scenario.belief_noise_sigma = v; });
  detail::expand_axis(cells, g.lambda, [](SweepCell& c, double v) { c.scenario.stubbornness_lambda = v; });
  detail::expand_axis(cells, g.mix, [](SweepCell& c, double v) { c.scenario.truth_holder_mix = v; });
  for (const auto& c : cells) {
    c.scenario.validate();
    c.protocol.validate(c.scenario.n_agents);
  }
  return cells;
}

// All (cell, trial) pairs share one worker pool; summaries come back in cell
// order regardless of scheduling.
inline std::vector<SweepSummary> run_sweep(const ExperimentConfig& config, std::size_t workers = 1) {
  if (config.agent_mode != AgentMode::Synthetic) {
    throw Error(Errc::ConfigMismatch, "sweeps run on synthetic agents only");
  }
  const auto cells = expand_grid(config);
  for (const auto& c : cells) belief_profile(c.scenario);
  const std::size_t trials = config.trials;
  auto reports = parallel_trials(cells.size() * trials, workers, [&](std::size_t job) {
    const auto& cell = cells[job / trials];
    return run_trial(cell.scenario, cell.protocol, job % trials, config.seed);
  });
  std::vector<SweepSummary> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    SweepAccumulator acc;
    for (std::size_t i = 0; i < trials; ++i) acc.add(reports[c * trials + i]);
    out.push_back(summarize(make_sweep_key(cells[c].scenario, cells[c].protocol), acc));
  }
  return out;
}

inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "protocol",       "n_agents",        "n_truth_holders",      "rounds",          "eta",
      "epsilon",        "delta",           "rho",                  "sigma",           "lambda",
      "mix",            "k_labels",        "n_trials",             "accuracy",        "accuracy_ci_lo",
      "accuracy_ci_hi", "mean_drift_per_round", "drift_ci_lo",     "drift_ci_hi",     "mean_score_gap",
      "score_gap_ci_lo", "score_gap_ci_hi", "mean_final_alpha_e",  "alpha_e_ci_lo",   "alpha_e_ci_hi"};
  return cols;
}

inline std::vector<std::string> summary_row(const SweepSummary& s) {
  const auto& k = s.key;
  auto n = [](double x) { return format_number(x); };
  return {std::string(to_string(k.protocol)),
          std::to_string(k.n_agents),
          std::to_string(k.n_truth_holders),
          std::to_string(k.rounds),
          n(k.eta),
          n(k.epsilon),
          n(k.delta),
          n(k.rho),
          n(k.sigma),
          n(k.lambda),
          n(k.mix),
          std::to_string(k.k_labels),
          std::to_string(s.n_trials),
          n(s.accuracy),
          n(s.accuracy_ci95.lo),
          n(s.accuracy_ci95.hi),
          n(s.mean_drift_per_round),
          n(s.drift_ci95.lo),
          n(s.drift_ci95.hi),
          n(s.mean_score_gap),
          n(s.score_gap_ci95.lo),
          n(s.score_gap_ci95.hi),
          n(s.mean_final_alpha_e),
          n(s.alpha_e_ci95.lo),
          n(s.alpha_e_ci95.hi)};
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepSummary>& summaries) {
  auto write_line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i];
    out << '\n';
  };
  write_line(sweep_columns());
  for (const auto& s : summaries) write_line(summary_row(s));
}

inline nlohmann::ordered_json sweep_json(const std::vector<SweepSummary>& summaries) {
  auto rows = nlohmann::ordered_json::array();
  const auto& cols = sweep_columns();
  for (const auto& s : summaries) {
    const auto fields = summary_row(s);
    nlohmann::ordered_json row;
    for (std::size_t i = 0; i < cols.size(); ++i) row[cols[i]] = fields[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::ordered_json sweep_manifest(const ExperimentConfig& config, std::size_t n_cells) {
  nlohmann::ordered_json m;
  m["tool"] = "acemad";
  m["version"] = kVersion;
  m["config_sha256"] = sha256_hex(config.canonical);
  m["seed"] = config.seed;
  m["trials_per_cell"] = config.trials;
  m["cells"] = n_cells;
  m["columns"] = sweep_columns();
  return m;
}

// Writes sweep.csv, summary.json and manifest.json under `dir`.
inline void write_sweep_outputs(const std::filesystem::path& dir, const ExperimentConfig& config,
                                const std::vector<SweepSummary>& summaries) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::InvalidArgument, "cannot write " + (dir / name).string());
    return out;
  };
  {
    auto out = open("sweep.csv");
    write_sweep_csv(out, summaries);
  }
  {
    auto out = open("summary.json");
    out << sweep_json(summaries).dump(2) << '\n';
  }
  {
    auto out = open("manifest.json");
    out << sweep_manifest(config, summaries.size()).dump(2) << '\n';
  }
}

}  // namespace acemad
