#pragma once

// Peer-prediction scoring: the realized peer average and the Brier-type score
// S = 1 - ||q - Q||^2. Scores live in [-1, 1]; nothing is clamped.

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "acemad/core_types.hpp"

namespace acemad {

struct ScoreVector {
  std::vector<double> scores;
  std::size_t round = 0;

  std::size_t size() const noexcept { return scores.size(); }
  double operator[](std::size_t i) const { return scores[i]; }
};

inline double squared_distance(const BeliefDistribution& a, const BeliefDistribution& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DimensionMismatch, "distributions over different answer spaces");
  }
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d += diff * diff;
  }
  return d;
}

// Coordinate-wise mean of every belief except the one at `agent`.
inline BeliefDistribution peer_average(std::span<const BeliefDistribution> beliefs, std::size_t agent) {
  const std::size_t n = beliefs.size();
  if (n < 2) throw Error(Errc::TooFewAgents, "peer average needs at least two agents");
  if (agent >= n) throw Error(Errc::InvalidArgument, "agent index out of range");
  const std::size_t k = beliefs[0].size();
  std::vector<double> mean(k, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (j == agent) continue;
    if (beliefs[j].size() != k) throw Error(Errc::DimensionMismatch, "ragged beliefs");
    for (std::size_t y = 0; y < k; ++y) mean[y] += beliefs[j][y];
  }
  const double peers = static_cast<double>(n - 1);
  for (double& m : mean) m /= peers;
  return BeliefDistribution::from_probs(std::move(mean));
}

inline double brier_score(const BeliefDistribution& prediction, const BeliefDistribution& realized) {
  return 1.0 - squared_distance(prediction, realized);
}

inline ScoreVector score_round(std::span<const BeliefDistribution> self_beliefs,
                               std::span<const BeliefDistribution> peer_predictions,
                               std::size_t round = 0) {
  if (self_beliefs.size() != peer_predictions.size()) {
    throw Error(Errc::DimensionMismatch, "one peer prediction per agent required");
  }
  ScoreVector out;
  out.round = round;
  out.scores.reserve(self_beliefs.size());
  for (std::size_t i = 0; i < self_beliefs.size(); ++i) {
    out.scores.push_back(brier_score(peer_predictions[i], peer_average(self_beliefs, i)));
  }
  return out;
}

struct BrierDecomposition {
  double lhs = 0.0;  // mean ||q - X||^2
  double rhs = 0.0;  // mean ||X - mean(X)||^2 + ||q - mean(X)||^2
  double variance_term = 0.0;
  double bias_term = 0.0;
};

// Finite-sample check of E||q - X||^2 = E||X - mu||^2 + ||q - mu||^2 against
// the empirical distribution of `outcome_samples`.
inline BrierDecomposition brier_decomposition_check(const BeliefDistribution& forecast,
                                                    std::span<const BeliefDistribution> outcome_samples) {
  if (outcome_samples.empty()) throw Error(Errc::EmptySamples, "no outcome samples");
  const std::size_t k = forecast.size();
  const double n = static_cast<double>(outcome_samples.size());

  std::vector<double> mean(k, 0.0);
  for (const auto& x : outcome_samples) {
    if (x.size() != k) throw Error(Errc::DimensionMismatch, "sample dimension mismatch");
    for (std::size_t y = 0; y < k; ++y) mean[y] += x[y];
  }
  for (double& m : mean) m /= n;

  BrierDecomposition out;
  for (const auto& x : outcome_samples) {
    for (std::size_t y = 0; y < k; ++y) {
      const double e = forecast[y] - x[y];
      const double v = x[y] - mean[y];
      out.lhs += e * e;
      out.variance_term += v * v;
    }
  }
  out.lhs /= n;
  out.variance_term /= n;
  for (std::size_t y = 0; y < k; ++y) {
    const double b = forecast[y] - mean[y];
    out.bias_term += b * b;
  }
  out.rhs = out.variance_term + out.bias_term;
  return out;
}

}  // namespace acemad
