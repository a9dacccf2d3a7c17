#pragma once

// Property suites run by `acemad verify`. Statistical checks are
// three-valued: PASS when the 95% interval lies on the claimed side,
// FAIL when it lies strictly on the other side, INCONCLUSIVE otherwise.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "acemad/analysis.hpp"
#include "acemad/presets.hpp"

namespace acemad {

enum class Status { Pass, Fail, Inconclusive };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Inconclusive: return "INCONCLUSIVE";
  }
  return "FAIL";
}

struct Verdict {
  std::string check;
  Status status = Status::Fail;
  std::string detail;
};

inline bool all_pass(const std::vector<Verdict>& verdicts) {
  for (const auto& v : verdicts) {
    if (v.status != Status::Pass) return false;
  }
  return !verdicts.empty();
}

inline Status positive_verdict(const Interval& ci) {
  if (ci.lo > 0.0) return Status::Pass;
  if (ci.hi < 0.0) return Status::Fail;
  return Status::Inconclusive;
}

inline std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, a, b, c, d);
  return buf;
}

inline constexpr double kMartingaleTolerance = 1e-12;

// Largest |mu_{t+1} - mu_t| over paths and rounds of uniform-influence
// standard debate.
inline double max_martingale_step(std::size_t n_agents, double alpha, std::size_t rounds, std::size_t paths,
                                  std::uint64_t seed) {
  ScenarioSpec spec;
  spec.n_agents = n_agents;
  spec.n_truth_holders = 1;
  spec.k_labels = 3;
  spec.crowd_bias_epsilon = 0.3;
  spec.error_correlation_rho = 0.5;
  spec.belief_noise_sigma = 0.5;
  spec.stubbornness_lambda = 0.2;
  ProtocolConfig config;
  config.protocol = Protocol::StandardMAD;
  config.alpha = alpha;
  config.rounds = rounds;
  double worst = 0.0;
  for (const auto& r : run_trials(spec, config, paths, seed)) {
    for (std::size_t t = 0; t + 1 < r.mu_series.size(); ++t) {
      worst = std::max(worst, std::abs(r.mu_series[t + 1] - r.mu_series[t]));
    }
  }
  return worst;
}

inline std::vector<Verdict> verify_martingale(std::size_t paths = 100, std::uint64_t seed = 0) {
  double worst = 0.0;
  for (double alpha : {0.0, 0.3, 1.0}) {
    for (std::size_t n : {2, 5, 9}) worst = std::max(worst, max_martingale_step(n, alpha, 10, paths, seed));
  }
  return {{"martingale/standard-uniform", worst <= kMartingaleTolerance ? Status::Pass : Status::Fail,
           fmt("max |dmu| = %.3e over alpha {0,0.3,1}, N {2,5,9}, T=10", worst)}};
}

inline std::vector<Verdict> verify_separation(std::size_t trials = 10000, std::uint64_t seed = 0) {
  std::vector<Verdict> out;
  const auto spec = presets::separation();
  const std::set<std::size_t> holders{spec.n_agents - 1};
  const auto gap = score_separation(run_trials(spec, ProtocolConfig{}, trials, seed), holders);
  out.push_back({"separation/noisy", positive_verdict(gap.ci),
                 fmt("gap = %.6f, 95%% CI [%.6f, %.6f]", gap.mean, gap.ci.lo, gap.ci.hi)});

  const auto exact = score_separation(run_trials(presets::static_noiseless(), ProtocolConfig{}, 10, seed), holders);
  const double err = std::abs(exact.mean - 0.08);
  out.push_back({"separation/noiseless", err <= 1e-12 && exact.ci.width() <= 1e-12 ? Status::Pass : Status::Fail,
                 fmt("gap = %.15f, expected 0.08", exact.mean)});
  return out;
}

inline constexpr double kMinShareProduct = 0.01;

inline std::vector<Verdict> verify_drift(std::size_t trials = 10000, std::uint64_t seed = 0) {
  std::vector<Verdict> out;
  const auto spec = presets::drift();
  auto config = presets::drift_protocol();
  for (const auto& d : estimate_drift(run_trials(spec, config, trials, seed))) {
    if (d.mean_share_product < kMinShareProduct) continue;
    out.push_back({"drift/round-" + std::to_string(d.round), positive_verdict(d.ci),
                   fmt("drift = %.4e, 95%% CI [%.4e, %.4e], mean aE*aC = %.4f", d.mean, d.ci.lo, d.ci.hi,
                       d.mean_share_product)});
  }
  config.eta = 0.0;
  for (const auto& d : estimate_drift(run_trials(spec, config, trials, seed))) {
    out.push_back({"drift/eta0-round-" + std::to_string(d.round), d.ci.contains(0.0) ? Status::Pass : Status::Fail,
                   fmt("drift = %.4e, 95%% CI [%.4e, %.4e]", d.mean, d.ci.lo, d.ci.hi)});
  }
  return out;
}

inline std::vector<Verdict> verify_blackwell(std::size_t trials = 10000, std::uint64_t seed = 0) {
  std::vector<Verdict> out;
  const auto spec = presets::separation();
  const auto r = blackwell_risk_check(spec, trials, seed);
  auto status = positive_verdict(r.gap_ci);
  if (status == Status::Pass && !(r.risk_info < r.risk_std)) status = Status::Fail;
  out.push_back({"blackwell/separation", status,
                 fmt("risk_info = %.4f, risk_std = %.4f, gap 95%% CI [%.4f, %.4f]", r.risk_info, r.risk_std,
                     r.gap_ci.lo, r.gap_ci.hi)});

  auto null_spec = spec;
  null_spec.n_truth_holders = 0;
  const auto z = blackwell_risk_check(null_spec, trials, seed);
  const bool overlap = z.info_ci.lo <= z.std_ci.hi && z.std_ci.lo <= z.info_ci.hi;
  out.push_back({"blackwell/null", overlap ? Status::Pass : Status::Fail,
                 fmt("risk_info = %.4f, risk_std = %.4f with no truth-holders", z.risk_info, z.risk_std)});
  return out;
}

// Share of the truth-holder after t rounds of a constant score gap, starting
// from share a0.
inline double weight_share_closed_form(double a0, double gap, double eta, std::size_t t) {
  return 1.0 / (1.0 + (1.0 - a0) / a0 * std::exp(-eta * gap * static_cast<double>(t)));
}

inline std::vector<Verdict> verify_convergence(std::size_t trials = 100, std::uint64_t seed = 0) {
  std::vector<Verdict> out;
  const auto spec = presets::static_noiseless();
  ProtocolConfig config;
  config.eta = 2.0;
  config.rounds = 50;
  const auto reports = run_trials(spec, config, trials, seed);
  double worst = 0.0;
  for (const auto& r : reports) {
    for (std::size_t t = 0; t < r.truth_holder_share_series.size(); ++t) {
      worst = std::max(worst, std::abs(r.truth_holder_share_series[t] - weight_share_closed_form(0.2, 0.08, 2.0, t)));
    }
  }
  out.push_back({"convergence/closed-form", worst <= 1e-9 ? Status::Pass : Status::Fail,
                 fmt("max |alpha_E - 1/(1+4exp(-0.16t))| = %.3e for t <= 50", worst)});
  const double frac = convergence_check(reports);
  out.push_back({"convergence/T50", frac == 1.0 ? Status::Pass : Status::Fail,
                 fmt("fraction with final alpha_E >= 0.99: %.4f", frac)});

  config.eta = 0.0;
  const double frozen = convergence_check(run_trials(spec, config, trials, seed));
  out.push_back({"convergence/eta0", frozen == 0.0 ? Status::Pass : Status::Fail,
                 fmt("fraction with final alpha_E >= 0.99: %.4f", frozen)});
  return out;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"martingale", "separation", "drift", "blackwell", "convergence"};
  return names;
}

// `trials` overrides each suite's default count when set.
inline std::vector<Verdict> run_suite(std::string_view suite, std::optional<std::size_t> trials, std::uint64_t seed) {
  if (suite == "martingale") return verify_martingale(trials.value_or(100), seed);
  if (suite == "separation") return verify_separation(trials.value_or(10000), seed);
  if (suite == "drift") return verify_drift(trials.value_or(10000), seed);
  if (suite == "blackwell") return verify_blackwell(trials.value_or(10000), seed);
  if (suite == "convergence") return verify_convergence(trials.value_or(100), seed);
  if (suite == "all") {
    std::vector<Verdict> out;
    for (const auto& name : suite_names()) {
      auto v = run_suite(name, trials, seed);
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }
  throw Error(Errc::InvalidArgument, "unknown suite '" + std::string(suite) + "'");
}

}  // namespace acemad
