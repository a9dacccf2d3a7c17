#pragma once

// Value types shared by every module: answer spaces, points on the belief
// simplex, per-round snapshots and whole-debate transcripts.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "acemad/error.hpp"

namespace acemad {

// Absolute tolerance for "sums to one" on the simplex.
inline constexpr double kSimplexTolerance = 1e-9;

class AnswerSpace {
 public:
  AnswerSpace() = default;

  explicit AnswerSpace(std::vector<std::string> labels,
                       std::optional<std::size_t> truth_index = std::nullopt)
      : labels_(std::move(labels)), truth_index_(truth_index) {
    if (labels_.size() < 2) {
      throw Error(Errc::InvalidArgument, "answer space needs at least two labels");
    }
    std::unordered_set<std::string_view> seen;
    for (const auto& label : labels_) {
      if (label.empty()) throw Error(Errc::InvalidArgument, "empty answer label");
      if (!seen.insert(label).second) {
        throw Error(Errc::InvalidArgument, "duplicate answer label '" + label + "'");
      }
    }
    if (truth_index_ && *truth_index_ >= labels_.size()) {
      throw Error(Errc::InvalidArgument, "truth index out of range");
    }
  }

  // Labels "A", "B", ... in order.
  static AnswerSpace letters(std::size_t k, std::optional<std::size_t> truth_index = std::nullopt) {
    if (k > 26) throw Error(Errc::InvalidArgument, "at most 26 lettered labels");
    std::vector<std::string> labels;
    labels.reserve(k);
    for (std::size_t i = 0; i < k; ++i) labels.emplace_back(1, static_cast<char>('A' + i));
    return AnswerSpace(std::move(labels), truth_index);
  }

  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::string& label(std::size_t i) const { return labels_.at(i); }
  std::optional<std::size_t> truth_index() const noexcept { return truth_index_; }

  std::optional<std::size_t> index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i] == label) return i;
    }
    return std::nullopt;
  }

  bool operator==(const AnswerSpace&) const = default;

 private:
  std::vector<std::string> labels_;
  std::optional<std::size_t> truth_index_;
};

// A point on the probability simplex. A default-constructed distribution is
// the empty placeholder used where a transcript drops peer predictions.
class BeliefDistribution {
 public:
  BeliefDistribution() = default;

  // Accepts vectors whose sum is within kSimplexTolerance of one and
  // renormalizes them; anything further off the simplex is rejected.
  static BeliefDistribution from_probs(std::vector<double> probs) {
    const double sum = check(probs);
    if (sum != 1.0) {
      for (double& p : probs) p /= sum;
    }
    return BeliefDistribution(std::move(probs));
  }

  // Same checks as from_probs but keeps the stored bits untouched, so parsed
  // transcripts re-serialize identically.
  static BeliefDistribution validated(std::vector<double> probs) {
    check(probs);
    return BeliefDistribution(std::move(probs));
  }

  static BeliefDistribution uniform(std::size_t k) {
    if (k == 0) throw Error(Errc::InvalidArgument, "uniform distribution over zero labels");
    return BeliefDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  static BeliefDistribution vertex(std::size_t k, std::size_t index) {
    if (index >= k) throw Error(Errc::InvalidArgument, "vertex index out of range");
    std::vector<double> probs(k, 0.0);
    probs[index] = 1.0;
    return BeliefDistribution(std::move(probs));
  }

  std::size_t size() const noexcept { return probs_.size(); }
  bool empty() const noexcept { return probs_.empty(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  double at(std::size_t i) const { return probs_.at(i); }
  std::span<const double> probs() const noexcept { return probs_; }
  const std::vector<double>& vector() const noexcept { return probs_; }

  // Lowest index wins ties.
  std::size_t argmax() const {
    if (probs_.empty()) throw Error(Errc::InvalidArgument, "argmax of empty distribution");
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
  }

  bool operator==(const BeliefDistribution&) const = default;

 private:
  explicit BeliefDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}

  static double check(const std::vector<double>& probs) {
    if (probs.empty()) throw Error(Errc::InvalidArgument, "empty probability vector");
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p)) throw Error(Errc::NonFinite, "probability is not finite");
      if (p < 0.0 || p > 1.0 + kSimplexTolerance) {
        throw Error(Errc::NotOnSimplex, "probability " + std::to_string(p) + " outside [0, 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw Error(Errc::NotOnSimplex, "probabilities sum to " + std::to_string(sum));
    }
    return sum;
  }

  std::vector<double> probs_;
};

// Scales a non-negative vector onto the simplex.
inline BeliefDistribution normalize(std::span<const double> raw) {
  if (raw.size() < 2) throw Error(Errc::InvalidArgument, "normalize needs at least two entries");
  double sum = 0.0;
  bool any_positive = false;
  for (double v : raw) {
    if (!std::isfinite(v)) throw Error(Errc::NonFinite, "entry is not finite");
    if (v > 0.0) any_positive = true;
  }
  if (!any_positive) throw Error(Errc::AllZero, "no strictly positive entry");
  for (double v : raw) {
    if (v < 0.0) throw Error(Errc::InvalidArgument, "negative entry " + std::to_string(v));
    sum += v;
  }
  std::vector<double> probs(raw.begin(), raw.end());
  for (double& p : probs) p /= sum;
  return BeliefDistribution::from_probs(std::move(probs));
}

inline BeliefDistribution normalize(std::initializer_list<double> raw) {
  return normalize(std::span<const double>(raw.begin(), raw.size()));
}

enum class Protocol { StandardMAD, CentralizedMAD, SparseMAD, AceMAD, MajorityVote };

constexpr std::string_view to_string(Protocol p) noexcept {
  switch (p) {
    case Protocol::StandardMAD: return "StandardMAD";
    case Protocol::CentralizedMAD: return "CentralizedMAD";
    case Protocol::SparseMAD: return "SparseMAD";
    case Protocol::AceMAD: return "AceMAD";
    case Protocol::MajorityVote: return "MajorityVote";
  }
  return "Unknown";
}

inline Protocol protocol_from_string(std::string_view name) {
  for (auto p : {Protocol::StandardMAD, Protocol::CentralizedMAD, Protocol::SparseMAD,
                 Protocol::AceMAD, Protocol::MajorityVote}) {
    if (to_string(p) == name) return p;
  }
  throw Error(Errc::ParseError, "unknown protocol '" + std::string(name) + "'");
}

struct RoundSnapshot {
  std::size_t round = 0;
  std::vector<std::string> arguments;
  std::vector<BeliefDistribution> self_beliefs;
  std::vector<BeliefDistribution> peer_predictions;
  std::vector<double> scores;
  std::vector<double> weights_after;

  std::size_t agent_count() const noexcept { return self_beliefs.size(); }

  void validate() const {
    const std::size_t n = self_beliefs.size();
    if (arguments.size() != n || peer_predictions.size() != n || scores.size() != n ||
        weights_after.size() != n) {
      throw Error(Errc::DimensionMismatch, "round " + std::to_string(round) + " has ragged lists");
    }
    double sum = 0.0;
    for (double w : weights_after) {
      if (!(w >= 0.0)) throw Error(Errc::NotOnSimplex, "negative weight");
      sum += w;
    }
    if (n > 0 && std::abs(sum - 1.0) > kSimplexTolerance) {
      throw Error(Errc::NotOnSimplex, "weights sum to " + std::to_string(sum));
    }
  }

  bool operator==(const RoundSnapshot&) const = default;
};

struct Transcript {
  AnswerSpace answer_space;
  Protocol protocol = Protocol::AceMAD;
  std::vector<RoundSnapshot> rounds;
  std::size_t final_decision = 0;
  std::optional<std::vector<double>> mu_series;

  void validate() const {
    for (std::size_t i = 0; i < rounds.size(); ++i) {
      rounds[i].validate();
      if (i > 0 && rounds[i].round <= rounds[i - 1].round) {
        throw Error(Errc::InvalidArgument, "rounds are not strictly increasing");
      }
    }
    if (final_decision >= answer_space.size()) {
      throw Error(Errc::InvalidArgument, "final decision out of range");
    }
    if (mu_series) {
      if (mu_series->size() != rounds.size() + 1) {
        throw Error(Errc::DimensionMismatch, "mu series length must be rounds + 1");
      }
      for (double mu : *mu_series) {
        if (!(mu >= 0.0 && mu <= 1.0)) throw Error(Errc::InvalidArgument, "mu outside [0, 1]");
      }
    }
  }

  bool operator==(const Transcript&) const = default;
};

// Drops everything a standard debate would not have observed: the peer
// forecasts and their scores. Weights fall back to uniform since they are a
// function of the dropped scores.
inline RoundSnapshot project_to_standard(const RoundSnapshot& info) {
  RoundSnapshot out = info;
  const std::size_t n = info.agent_count();
  out.peer_predictions.assign(n, BeliefDistribution{});
  out.scores.assign(n, 0.0);
  if (n > 0) out.weights_after.assign(n, 1.0 / static_cast<double>(n));
  return out;
}

}  // namespace acemad
