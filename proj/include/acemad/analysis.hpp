#pragma once

// Monte Carlo trials over synthetic scenarios and the estimators behind each
// property check: per-round drift of mu_t, truth-holder score separation,
// the decision-risk comparison between full and projected transcripts,
// weight-share convergence, and grouped sweep summaries.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <utility>
#include <vector>

#include "acemad/agents.hpp"
#include "acemad/engine.hpp"
#include "acemad/rng.hpp"
#include "acemad/stats.hpp"

namespace acemad {

// Per-path increments at or below this magnitude are exact invariance up to
// floating-point rounding and are counted as zero.
inline constexpr double kExactTolerance = 1e-12;

struct TrialReport {
  std::uint64_t scenario_seed = 0;
  Protocol protocol = Protocol::AceMAD;
  std::size_t n_agents = 0;
  std::vector<std::size_t> truth_holders;
  std::vector<double> mu_series;
  std::vector<ScoreVector> per_round_scores;
  std::vector<double> final_weights;
  std::size_t decision = 0;
  bool correct = false;
  // Combined normalized weight of the truth-holders, alpha_E^(t), t = 0..T.
  std::vector<double> truth_holder_share_series;

  std::size_t rounds() const noexcept { return per_round_scores.size(); }
};

inline TrialReport make_trial_report(const Transcript& transcript, const std::vector<std::size_t>& truth_holders,
                                     std::uint64_t scenario_seed) {
  const auto truth = transcript.answer_space.truth_index();
  if (!truth || !transcript.mu_series) throw Error(Errc::InvalidArgument, "trial reports need a known truth");
  TrialReport r;
  r.scenario_seed = scenario_seed;
  r.protocol = transcript.protocol;
  r.truth_holders = truth_holders;
  r.mu_series = *transcript.mu_series;
  r.decision = transcript.final_decision;
  r.correct = transcript.final_decision == *truth;

  std::size_t n = transcript.rounds.empty() ? 0 : transcript.rounds.front().agent_count();
  if (n == 0) {
    // Majority vote carries no rounds; weights are implicitly uniform.
    n = truth_holders.empty() ? 1 : *std::max_element(truth_holders.begin(), truth_holders.end()) + 1;
  }
  auto share = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (auto i : truth_holders) s += w.at(i);
    return s;
  };
  r.truth_holder_share_series.push_back(static_cast<double>(truth_holders.size()) / static_cast<double>(n));
  for (const auto& round : transcript.rounds) {
    r.per_round_scores.push_back({round.scores, round.round});
    r.truth_holder_share_series.push_back(share(round.weights_after));
  }
  r.final_weights = transcript.rounds.empty() ? std::vector<double>(n, 1.0 / static_cast<double>(n))
                                              : transcript.rounds.back().weights_after;
  r.n_agents = n;
  return r;
}

// Runs fn(0..n-1) on `workers` threads and returns results in index order.
template <class Fn>
auto parallel_trials(std::size_t n, std::size_t workers, Fn&& fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<std::optional<Result>> slots(n);
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) slots[i].emplace(fn(i));
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            slots[i].emplace(fn(i));
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  std::vector<Result> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

struct TrialRun {
  std::uint64_t scenario_seed = 0;
  std::vector<std::size_t> truth_holders;
  Transcript transcript;
};

inline std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t trial) { return derive_seed(base_seed, trial); }

inline TrialRun run_trial_transcript(ScenarioSpec spec, const ProtocolConfig& config, std::size_t trial,
                                     std::uint64_t base_seed) {
  spec.seed = trial_seed(base_seed, trial);
  auto scenario = generate_scenario(spec);
  auto transcript = run_debate(scenario.agents, scenario.space, config, derive_seed(spec.seed, 1));
  return {spec.seed, std::move(scenario.truth_holders), std::move(transcript)};
}

inline TrialReport run_trial(const ScenarioSpec& spec, const ProtocolConfig& config, std::size_t trial,
                             std::uint64_t base_seed) {
  auto run = run_trial_transcript(spec, config, trial, base_seed);
  return make_trial_report(run.transcript, run.truth_holders, run.scenario_seed);
}

// Trial i always uses seed derive_seed(base_seed, i), whatever the worker count.
inline std::vector<TrialReport> run_trials(const ScenarioSpec& spec, const ProtocolConfig& config,
                                           std::size_t n_trials, std::uint64_t base_seed, std::size_t workers = 1) {
  spec.validate();
  belief_profile(spec);  // warm the cache before fanning out
  return parallel_trials(n_trials, workers,
                         [&](std::size_t i) { return run_trial(spec, config, i, base_seed); });
}

struct DriftEstimate {
  std::size_t round = 0;  // estimates mu_round - mu_{round-1}
  double mean = 0.0;
  Interval ci;
  std::size_t n = 0;
  double mean_share_product = 0.0;  // trial mean of alpha_E * alpha_C entering the round
};

inline std::vector<DriftEstimate> estimate_drift(const std::vector<TrialReport>& reports) {
  if (reports.empty()) throw Error(Errc::EmptyInput, "no trial reports");
  const auto& first = reports.front();
  for (const auto& r : reports) {
    if (r.protocol != first.protocol || r.mu_series.size() != first.mu_series.size()) {
      throw Error(Errc::MixedShapes, "reports differ in protocol or round count");
    }
  }
  const std::size_t rounds = first.mu_series.size() - 1;
  std::vector<DriftEstimate> out;
  for (std::size_t t = 0; t < rounds; ++t) {
    RunningStats drift;
    RunningStats product;
    for (const auto& r : reports) {
      double d = r.mu_series[t + 1] - r.mu_series[t];
      if (std::abs(d) <= kExactTolerance) d = 0.0;
      drift.add(d);
      const double a = r.truth_holder_share_series.at(t);
      product.add(a * (1.0 - a));
    }
    out.push_back({t + 1, drift.mean(), drift.t_interval(), drift.count(), product.mean()});
  }
  return out;
}

struct GapEstimate {
  double mean = 0.0;
  Interval ci;
  std::size_t n = 0;
};

// Mean truth-holder score minus mean crowd score, averaged over the rounds of
// each trial; the interval treats trials as the independent units.
inline GapEstimate score_separation(const std::vector<TrialReport>& reports,
                                    const std::set<std::size_t>& truth_holder_indices) {
  if (reports.empty()) throw Error(Errc::EmptyInput, "no trial reports");
  if (truth_holder_indices.empty()) throw Error(Errc::EmptyInput, "no truth-holders");
  RunningStats gaps;
  for (const auto& r : reports) {
    if (r.per_round_scores.empty()) continue;
    double trial_gap = 0.0;
    for (const auto& scores : r.per_round_scores) {
      double holder = 0.0;
      double crowd = 0.0;
      std::size_t n_holder = 0;
      std::size_t n_crowd = 0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        if (truth_holder_indices.count(i)) {
          holder += scores[i];
          ++n_holder;
        } else {
          crowd += scores[i];
          ++n_crowd;
        }
      }
      if (n_holder == 0 || n_crowd == 0) throw Error(Errc::InvalidArgument, "need both truth-holders and crowd");
      trial_gap += holder / static_cast<double>(n_holder) - crowd / static_cast<double>(n_crowd);
    }
    gaps.add(trial_gap / static_cast<double>(r.per_round_scores.size()));
  }
  if (gaps.count() == 0) throw Error(Errc::EmptyInput, "no scored rounds");
  return {gaps.mean(), gaps.t_interval(), gaps.count()};
}

struct RiskComparison {
  double risk_info = 0.0;  // follow the agent with the highest cumulative score
  double risk_std = 0.0;   // plurality over final beliefs
  Interval info_ci;
  Interval std_ci;
  double gap = 0.0;        // risk_std - risk_info, paired per trial
  Interval gap_ci;
  std::size_t n = 0;
};

// Index of the agent with the highest cumulative score; lowest index on ties.
inline std::size_t best_scoring_agent(const Transcript& t) {
  const std::size_t n = t.rounds.empty() ? 0 : t.rounds.front().agent_count();
  if (n == 0) return 0;
  std::vector<double> total(n, 0.0);
  for (const auto& r : t.rounds) {
    for (std::size_t i = 0; i < n; ++i) total[i] += r.scores[i];
  }
  return static_cast<std::size_t>(std::max_element(total.begin(), total.end()) - total.begin());
}

inline RiskComparison blackwell_risk_check(const ScenarioSpec& scenario, std::size_t n_trials,
                                           std::uint64_t base_seed = 0, ProtocolConfig config = {},
                                           std::size_t workers = 1) {
  config.protocol = Protocol::AceMAD;
  scenario.validate();
  belief_profile(scenario);
  struct Outcome {
    bool info_wrong;
    bool std_wrong;
  };
  auto outcomes = parallel_trials(n_trials, workers, [&](std::size_t i) {
    const auto run = run_trial_transcript(scenario, config, i, base_seed);
    const auto& t = run.transcript;
    const std::size_t truth = *t.answer_space.truth_index();
    const auto& finals = t.rounds.empty() ? std::vector<BeliefDistribution>{} : t.rounds.back().self_beliefs;
    if (finals.empty()) throw Error(Errc::ConfigMismatch, "risk check needs at least one round");
    const std::size_t followed = finals[best_scoring_agent(t)].argmax();
    const auto projected = project_to_standard(t.rounds.back());
    const std::size_t voted = majority_vote(projected.self_beliefs);
    return Outcome{followed != truth, voted != truth};
  });

  RiskComparison out;
  out.n = n_trials;
  std::size_t info_errors = 0;
  std::size_t std_errors = 0;
  RunningStats paired;
  for (const auto& o : outcomes) {
    info_errors += o.info_wrong;
    std_errors += o.std_wrong;
    paired.add(static_cast<double>(o.std_wrong) - static_cast<double>(o.info_wrong));
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, n_trials));
  out.risk_info = static_cast<double>(info_errors) / n;
  out.risk_std = static_cast<double>(std_errors) / n;
  out.info_ci = wilson_interval(info_errors, n_trials);
  out.std_ci = wilson_interval(std_errors, n_trials);
  out.gap = paired.count() ? paired.mean() : 0.0;
  out.gap_ci = paired.t_interval();
  return out;
}

inline constexpr double kConvergenceThreshold = 0.99;

// Fraction of trials whose final truth-holder share reaches `threshold`.
inline double convergence_check(const std::vector<TrialReport>& reports, double threshold = kConvergenceThreshold) {
  if (reports.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& r : reports) {
    if (!r.truth_holder_share_series.empty() && r.truth_holder_share_series.back() >= threshold) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(reports.size());
}

struct SweepKey {
  Protocol protocol = Protocol::AceMAD;
  std::size_t n_agents = 0;
  std::size_t n_truth_holders = 0;
  std::size_t rounds = 0;
  double eta = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double mix = 0.0;
  std::size_t k_labels = 0;
  double alpha = 0.0;

  auto operator<=>(const SweepKey&) const = default;
};

inline SweepKey make_sweep_key(const ScenarioSpec& spec, const ProtocolConfig& config) {
  return {config.protocol,          spec.n_agents,           spec.n_truth_holders,
          config.rounds,            config.eta,              spec.crowd_bias_epsilon,
          spec.truth_holder_delta,  spec.error_correlation_rho, spec.belief_noise_sigma,
          spec.stubbornness_lambda, spec.truth_holder_mix,   spec.k_labels,
          config.alpha};
}

// Sufficient statistics for one sweep cell; merge() is associative.
class SweepAccumulator {
 public:
  void add(const TrialReport& r) {
    ++n_;
    correct_ += r.correct;
    const std::size_t rounds = r.mu_series.size() - 1;
    drift_.add(rounds == 0 ? 0.0 : (r.mu_series.back() - r.mu_series.front()) / static_cast<double>(rounds));
    if (!r.truth_holder_share_series.empty()) alpha_.add(r.truth_holder_share_series.back());
    const std::set<std::size_t> holders(r.truth_holders.begin(), r.truth_holders.end());
    if (!holders.empty() && holders.size() < r.n_agents && !r.per_round_scores.empty()) {
      gap_.add(score_separation({r}, holders).mean);
    }
  }

  void merge(const SweepAccumulator& other) {
    n_ += other.n_;
    correct_ += other.correct_;
    drift_.merge(other.drift_);
    gap_.merge(other.gap_);
    alpha_.merge(other.alpha_);
  }

  std::size_t n() const noexcept { return n_; }
  std::size_t correct() const noexcept { return correct_; }
  const RunningStats& drift() const noexcept { return drift_; }
  const RunningStats& gap() const noexcept { return gap_; }
  const RunningStats& alpha() const noexcept { return alpha_; }

 private:
  std::size_t n_ = 0;
  std::size_t correct_ = 0;
  RunningStats drift_;
  RunningStats gap_;
  RunningStats alpha_;
};

struct SweepSummary {
  SweepKey key;
  std::size_t n_trials = 0;
  double accuracy = 0.0;
  Interval accuracy_ci95;
  double mean_drift_per_round = 0.0;
  Interval drift_ci95;
  double mean_score_gap = 0.0;  // NaN when the cell has no truth-holder/crowd split
  Interval score_gap_ci95;
  double mean_final_alpha_e = 0.0;
  Interval alpha_e_ci95;
};

inline SweepSummary summarize(const SweepKey& key, const SweepAccumulator& acc) {
  SweepSummary s;
  s.key = key;
  s.n_trials = acc.n();
  s.accuracy = acc.n() ? static_cast<double>(acc.correct()) / static_cast<double>(acc.n()) : 0.0;
  s.accuracy_ci95 = wilson_interval(acc.correct(), acc.n());
  s.mean_drift_per_round = acc.drift().mean();
  s.drift_ci95 = acc.drift().z_interval();
  s.mean_score_gap = acc.gap().mean();
  s.score_gap_ci95 = acc.gap().count() ? acc.gap().z_interval() : Interval{s.mean_score_gap, s.mean_score_gap};
  s.mean_final_alpha_e = acc.alpha().mean();
  s.alpha_e_ci95 = acc.alpha().z_interval();
  return s;
}

// Groups by key in order of first appearance; equal keys merge.
inline std::vector<SweepSummary> summarize_sweep(const std::vector<std::pair<SweepKey, TrialReport>>& reports) {
  std::vector<SweepKey> order;
  std::vector<SweepAccumulator> accs;
  for (const auto& [key, report] : reports) {
    auto it = std::find(order.begin(), order.end(), key);
    if (it == order.end()) {
      order.push_back(key);
      accs.emplace_back();
      it = order.end() - 1;
    }
    accs[static_cast<std::size_t>(it - order.begin())].add(report);
  }
  std::vector<SweepSummary> out;
  for (std::size_t i = 0; i < order.size(); ++i) out.push_back(summarize(order[i], accs[i]));
  return out;
}

}  // namespace acemad
