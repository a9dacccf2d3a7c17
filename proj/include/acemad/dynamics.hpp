#pragma once

// Belief and weight update laws: the linear peer-influence update used by
// standard debate, the multiplicative weight update, weighted aggregation and
// the two decision rules (squared-weight argmax and plurality vote).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "acemad/core_types.hpp"
#include "acemad/scoring.hpp"

namespace acemad {

// Row-stochastic peer influence with a zero diagonal, plus the
// susceptibility alpha shared by every agent.
class InfluenceMatrix {
 public:
  InfluenceMatrix(std::vector<std::vector<double>> omega, double alpha)
      : omega_(std::move(omega)), alpha_(alpha) {
    if (!(alpha_ >= 0.0 && alpha_ <= 1.0)) throw Error(Errc::InvalidArgument, "alpha outside [0, 1]");
    const std::size_t n = omega_.size();
    if (n < 2) throw Error(Errc::TooFewAgents, "influence matrix needs at least two agents");
    std::vector<double> column(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (omega_[i].size() != n) throw Error(Errc::DimensionMismatch, "influence matrix is not square");
      if (omega_[i][i] != 0.0) throw Error(Errc::InvalidArgument, "influence diagonal must be zero");
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (!(omega_[i][j] >= 0.0)) throw Error(Errc::InvalidArgument, "negative influence weight");
        row += omega_[i][j];
        column[j] += omega_[i][j];
      }
      if (std::abs(row - 1.0) > kSimplexTolerance) {
        throw Error(Errc::InvalidArgument, "influence row " + std::to_string(i) + " does not sum to 1");
      }
    }
    doubly_stochastic_ = std::all_of(column.begin(), column.end(),
                                     [](double c) { return std::abs(c - 1.0) <= kSimplexTolerance; });
  }

  // Everyone listens to everyone else equally.
  static InfluenceMatrix uniform(std::size_t n, double alpha) {
    if (n < 2) throw Error(Errc::TooFewAgents, "influence matrix needs at least two agents");
    const double w = 1.0 / static_cast<double>(n - 1);
    std::vector<std::vector<double>> omega(n, std::vector<double>(n, w));
    for (std::size_t i = 0; i < n; ++i) omega[i][i] = 0.0;
    return InfluenceMatrix(std::move(omega), alpha);
  }

  // Star topology: every spoke listens only to the hub; the hub listens to
  // all spokes uniformly.
  static InfluenceMatrix centralized(std::size_t n, std::size_t hub, double alpha) {
    if (n < 2) throw Error(Errc::TooFewAgents, "influence matrix needs at least two agents");
    if (hub >= n) throw Error(Errc::InvalidArgument, "hub index out of range");
    std::vector<std::vector<double>> omega(n, std::vector<double>(n, 0.0));
    const double spoke = 1.0 / static_cast<double>(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (i == hub) {
        for (std::size_t j = 0; j < n; ++j) omega[i][j] = (j == hub) ? 0.0 : spoke;
      } else {
        omega[i][hub] = 1.0;
      }
    }
    return InfluenceMatrix(std::move(omega), alpha);
  }

  // Random degree-regular peer graph: agents are placed on a shuffled ring
  // and each listens to the next `degree` agents along it, so in- and
  // out-degree are both `degree` and the matrix is doubly stochastic.
  template <class Rng>
  static InfluenceMatrix sparse(std::size_t n, std::size_t degree, double alpha, Rng& rng) {
    if (n < 2) throw Error(Errc::TooFewAgents, "influence matrix needs at least two agents");
    if (degree == 0 || degree >= n) throw Error(Errc::InvalidArgument, "sparse degree must be in [1, N-1]");
    std::vector<std::size_t> ring(n);
    std::iota(ring.begin(), ring.end(), std::size_t{0});
    std::shuffle(ring.begin(), ring.end(), rng);
    const double w = 1.0 / static_cast<double>(degree);
    std::vector<std::vector<double>> omega(n, std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t step = 1; step <= degree; ++step) {
        omega[ring[k]][ring[(k + step) % n]] = w;
      }
    }
    return InfluenceMatrix(std::move(omega), alpha);
  }

  std::size_t size() const noexcept { return omega_.size(); }
  double alpha() const noexcept { return alpha_; }
  double operator()(std::size_t i, std::size_t j) const { return omega_[i][j]; }
  const std::vector<std::vector<double>>& omega() const noexcept { return omega_; }
  bool doubly_stochastic() const noexcept { return doubly_stochastic_; }

 private:
  std::vector<std::vector<double>> omega_;
  double alpha_;
  bool doubly_stochastic_ = false;
};

struct WeightVector {
  std::vector<double> weights;
  bool normalized = false;

  static WeightVector uniform(std::size_t n) {
    return {std::vector<double>(n, 1.0 / static_cast<double>(n)), true};
  }

  std::size_t size() const noexcept { return weights.size(); }
  double operator[](std::size_t i) const { return weights[i]; }
};

inline WeightVector normalized(WeightVector w) {
  const double total = std::accumulate(w.weights.begin(), w.weights.end(), 0.0);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw Error(Errc::InvalidArgument, "weights cannot be normalized");
  }
  for (double& x : w.weights) x /= total;
  w.normalized = true;
  return w;
}

// p_i <- (1 - alpha) p_i + alpha * sum_j omega_ij p_j
inline std::vector<BeliefDistribution> linear_update(std::span<const BeliefDistribution> beliefs,
                                                     const InfluenceMatrix& influence) {
  const std::size_t n = beliefs.size();
  if (influence.size() != n) throw Error(Errc::DimensionMismatch, "influence matrix does not match agents");
  const double alpha = influence.alpha();
  std::vector<BeliefDistribution> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = beliefs[i].size();
    std::vector<double> peer(k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double w = influence(i, j);
      if (w == 0.0) continue;
      if (beliefs[j].size() != k) throw Error(Errc::DimensionMismatch, "ragged beliefs");
      for (std::size_t y = 0; y < k; ++y) peer[y] += w * beliefs[j][y];
    }
    std::vector<double> next(k);
    for (std::size_t y = 0; y < k; ++y) next[y] = (1.0 - alpha) * beliefs[i][y] + alpha * peer[y];
    out.push_back(BeliefDistribution::validated(std::move(next)));
  }
  return out;
}

// w_i <- w_i * exp(eta * S_i), then renormalized to sum to one.
inline WeightVector mwu_update(const WeightVector& weights, const ScoreVector& scores, double eta) {
  if (!(eta > 0.0)) throw Error(Errc::NonPositiveEta, "eta must be positive");
  if (weights.size() != scores.size()) throw Error(Errc::DimensionMismatch, "one score per weight required");
  WeightVector next = weights;
  for (std::size_t i = 0; i < next.size(); ++i) next.weights[i] *= std::exp(eta * scores[i]);
  return normalized(std::move(next));
}

inline void require_normalized(const WeightVector& weights) {
  const double total = std::accumulate(weights.weights.begin(), weights.weights.end(), 0.0);
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw Error(Errc::InvalidArgument, "weights are not normalized");
  }
}

inline BeliefDistribution weighted_aggregate(std::span<const BeliefDistribution> beliefs,
                                             const WeightVector& weights) {
  if (beliefs.empty()) throw Error(Errc::TooFewAgents, "no beliefs to aggregate");
  if (beliefs.size() != weights.size()) throw Error(Errc::DimensionMismatch, "one weight per belief required");
  require_normalized(weights);
  const std::size_t k = beliefs[0].size();
  std::vector<double> out(k, 0.0);
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    if (beliefs[i].size() != k) throw Error(Errc::DimensionMismatch, "ragged beliefs");
    for (std::size_t y = 0; y < k; ++y) out[y] += weights[i] * beliefs[i][y];
  }
  return BeliefDistribution::validated(std::move(out));
}

inline BeliefDistribution uniform_aggregate(std::span<const BeliefDistribution> beliefs) {
  return weighted_aggregate(beliefs, WeightVector::uniform(beliefs.size()));
}

// argmax_y sum_i w_i^2 p_i(y); lowest label index wins ties.
inline std::size_t final_decision(std::span<const BeliefDistribution> beliefs, const WeightVector& weights) {
  if (beliefs.empty()) throw Error(Errc::TooFewAgents, "no beliefs to decide from");
  if (beliefs.size() != weights.size()) throw Error(Errc::DimensionMismatch, "one weight per belief required");
  const std::size_t k = beliefs[0].size();
  std::vector<double> score(k, 0.0);
  for (std::size_t i = 0; i < beliefs.size(); ++i) {
    const double w2 = weights[i] * weights[i];
    for (std::size_t y = 0; y < k; ++y) score[y] += w2 * beliefs[i][y];
  }
  return static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
}

// Plurality over per-agent argmax labels; lowest label index wins ties.
inline std::size_t majority_vote(std::span<const BeliefDistribution> beliefs) {
  if (beliefs.empty()) throw Error(Errc::TooFewAgents, "no beliefs to vote with");
  std::vector<std::size_t> votes(beliefs[0].size(), 0);
  for (const auto& b : beliefs) ++votes.at(b.argmax());
  return static_cast<std::size_t>(std::max_element(votes.begin(), votes.end()) - votes.begin());
}

// Truth-holder share after one update in the two-meta-agent reduction:
// a' = a e^{eta D} / (a e^{eta D} + 1 - a). Written through expm1 so the
// sign of a' - a follows the sign of D even for tiny eta * D.
inline double two_agent_weight_share(double alpha_e, double score_gap, double eta) {
  if (!(alpha_e > 0.0 && alpha_e < 1.0)) throw Error(Errc::InvalidArgument, "alpha_E must be in (0, 1)");
  const double growth = std::expm1(eta * score_gap);
  const double alpha_c = 1.0 - alpha_e;
  return alpha_e + alpha_e * alpha_c * growth / (1.0 + alpha_e * growth);
}

}  // namespace acemad
