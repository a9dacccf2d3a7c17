#pragma once

// Agent behaviors and the synthetic challenging-interval generator.
//
// A scenario has a crowd that mostly puts its mass on a wrong answer and a
// minority of truth-holders concentrated on the truth. With probability rho
// the whole crowd shares one distractor, otherwise each crowd agent picks its
// own. Crowd agents forecast that their peers agree with them; truth-holders
// forecast the expected peer average under the generator.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "acemad/core_types.hpp"
#include "acemad/rng.hpp"
#include "acemad/scoring.hpp"

namespace acemad {

// What an agent is allowed to see when acting in round `round`.
struct AgentContext {
  std::size_t agent = 0;
  std::size_t round = 0;  // 0 while eliciting initial beliefs
  const AnswerSpace* space = nullptr;
  // Completed rounds < round only. Scores and weights are blanked unless the
  // protocol reveals them.
  std::span<const RoundSnapshot> history;
  // Set during the commit phase: this agent's own argument for `round`.
  std::optional<std::string> own_argument;
  // Belief state entering the round (after any protocol-side update).
  BeliefDistribution prior_belief;
  // Aggregate announced by the protocol after the previous round.
  BeliefDistribution public_aggregate;
  std::uint64_t stream_seed = 0;
};

struct Commitment {
  BeliefDistribution self_belief;
  BeliefDistribution peer_prediction;
};

enum class AgentKind { CrowdSynthetic, TruthHolderSynthetic, LlmBacked, Scripted };

class AgentModel {
 public:
  virtual ~AgentModel() = default;

  virtual AgentKind kind() const = 0;
  virtual BeliefDistribution initial_belief(const AgentContext& ctx) = 0;
  virtual std::string argue(const AgentContext& ctx) = 0;
  virtual Commitment commit(const AgentContext& ctx) = 0;
};

using AgentList = std::vector<std::unique_ptr<AgentModel>>;

inline BeliefDistribution mix_beliefs(const BeliefDistribution& a, const BeliefDistribution& b, double weight_b) {
  if (weight_b == 0.0) return a;
  if (a.size() != b.size()) throw Error(Errc::DimensionMismatch, "mixing beliefs of different sizes");
  std::vector<double> out(a.size());
  for (std::size_t y = 0; y < a.size(); ++y) out[y] = (1.0 - weight_b) * a[y] + weight_b * b[y];
  return BeliefDistribution::validated(std::move(out));
}

// False consensus: the forecast of the peer average is the agent's own belief.
inline BeliefDistribution crowd_peer_prediction(const BeliefDistribution& own_belief) { return own_belief; }

class CrowdAgent final : public AgentModel {
 public:
  CrowdAgent(BeliefDistribution initial, double stubbornness_lambda = 0.0)
      : initial_(std::move(initial)), lambda_(stubbornness_lambda) {}

  AgentKind kind() const override { return AgentKind::CrowdSynthetic; }
  BeliefDistribution initial_belief(const AgentContext&) override { return initial_; }
  std::string argue(const AgentContext&) override { return {}; }

  Commitment commit(const AgentContext& ctx) override {
    auto self = ctx.public_aggregate.empty() ? ctx.prior_belief
                                             : mix_beliefs(ctx.prior_belief, ctx.public_aggregate, lambda_);
    auto forecast = crowd_peer_prediction(self);
    return {std::move(self), std::move(forecast)};
  }

 private:
  BeliefDistribution initial_;
  double lambda_;
};

// Forecasts the peer average it expects this round: the generator's
// expectation before any round has been revealed, afterwards the last
// revealed peer average pushed through the same drift law the peers follow.
// `mix` interpolates the forecast toward the agent's own belief (mix = 0 is
// a false-consensus forecaster).
class TruthHolderAgent final : public AgentModel {
 public:
  TruthHolderAgent(BeliefDistribution initial, BeliefDistribution expected_peer_average,
                   double mix = 1.0, double stubbornness_lambda = 0.0)
      : initial_(std::move(initial)),
        expected_peer_average_(std::move(expected_peer_average)),
        mix_(mix),
        lambda_(stubbornness_lambda) {
    if (!(mix_ >= 0.0 && mix_ <= 1.0)) throw Error(Errc::InvalidArgument, "mix outside [0, 1]");
  }

  AgentKind kind() const override { return AgentKind::TruthHolderSynthetic; }
  BeliefDistribution initial_belief(const AgentContext&) override { return initial_; }
  std::string argue(const AgentContext&) override { return {}; }

  Commitment commit(const AgentContext& ctx) override {
    const bool drifting = !ctx.public_aggregate.empty();
    auto self = drifting ? mix_beliefs(ctx.prior_belief, ctx.public_aggregate, lambda_) : ctx.prior_belief;

    BeliefDistribution forecast = expected_peer_average_;
    if (!ctx.history.empty()) forecast = peer_average(ctx.history.back().self_beliefs, ctx.agent);
    if (drifting) forecast = mix_beliefs(forecast, ctx.public_aggregate, lambda_);

    auto prediction = mix_beliefs(self, forecast, mix_);
    return {std::move(self), std::move(prediction)};
  }

  double mix() const noexcept { return mix_; }

 private:
  BeliefDistribution initial_;
  BeliefDistribution expected_peer_average_;
  double mix_;
  double lambda_;
};

// Behavior supplied by callbacks; used for probes and hand-built fixtures.
class ScriptedAgent final : public AgentModel {
 public:
  using CommitFn = std::function<Commitment(const AgentContext&)>;
  using ArgueFn = std::function<std::string(const AgentContext&)>;

  ScriptedAgent(BeliefDistribution initial, CommitFn commit, ArgueFn argue = {})
      : initial_(std::move(initial)), commit_(std::move(commit)), argue_(std::move(argue)) {}

  AgentKind kind() const override { return AgentKind::Scripted; }
  BeliefDistribution initial_belief(const AgentContext&) override { return initial_; }
  std::string argue(const AgentContext& ctx) override { return argue_ ? argue_(ctx) : std::string{}; }
  Commitment commit(const AgentContext& ctx) override { return commit_(ctx); }

 private:
  BeliefDistribution initial_;
  CommitFn commit_;
  ArgueFn argue_;
};

// Generative model of one challenging-interval instance.
struct ScenarioSpec {
  std::size_t n_agents = 5;
  std::size_t n_truth_holders = 1;
  double crowd_bias_epsilon = 0.1;   // crowd mass on the truth
  double truth_holder_delta = 0.1;   // truth-holder mass off the truth
  double error_correlation_rho = 1.0;
  std::size_t k_labels = 2;
  double belief_noise_sigma = 0.0;   // logit-space jitter
  double stubbornness_lambda = 0.0;  // per-round pull toward the announced aggregate
  double truth_holder_mix = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& what) { throw Error(Errc::InvalidSpec, what); };
    if (n_agents < 2) fail("n_agents must be at least 2");
    if (n_truth_holders >= n_agents) fail("n_truth_holders must be below n_agents");
    if (!(crowd_bias_epsilon > 0.0 && crowd_bias_epsilon < 0.5)) fail("epsilon must be in (0, 0.5)");
    if (!(truth_holder_delta > 0.0 && truth_holder_delta < 0.5)) fail("delta must be in (0, 0.5)");
    if (!(error_correlation_rho >= 0.0 && error_correlation_rho <= 1.0)) fail("rho must be in [0, 1]");
    if (k_labels < 2 || k_labels > 26) fail("k_labels must be in [2, 26]");
    if (!(belief_noise_sigma >= 0.0) || !std::isfinite(belief_noise_sigma)) fail("sigma must be >= 0");
    if (!(stubbornness_lambda >= 0.0 && stubbornness_lambda <= 1.0)) fail("lambda must be in [0, 1]");
    if (!(truth_holder_mix >= 0.0 && truth_holder_mix <= 1.0)) fail("mix must be in [0, 1]");
  }

  // Crowd is a strict majority.
  bool challenging() const noexcept { return 2 * n_truth_holders < n_agents; }

  std::size_t n_crowd() const noexcept { return n_agents - n_truth_holders; }

  // Truth-holders occupy the last indices.
  bool is_truth_holder(std::size_t agent) const noexcept { return agent >= n_crowd() && agent < n_agents; }
};

// Expected truth mass of one jittered crowd / truth-holder belief. Exact for
// sigma = 0; otherwise a fixed-seed Monte Carlo estimate over 1e5 draws,
// cached per parameter set.
struct BeliefProfile {
  double crowd_truth_mass = 0.0;
  double truth_holder_truth_mass = 0.0;
};

inline constexpr std::size_t kProfileDraws = 100000;

namespace detail {

// Softmax of log(base) + sigma * z over the support of `base`; zero entries
// stay zero. Draws one normal per support entry, in label order.
template <class Gen>
std::vector<double> jitter(const std::vector<double>& base, double sigma, Gen& gen) {
  if (sigma == 0.0) return base;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> logits(base.size(), 0.0);
  double top = -HUGE_VAL;
  for (std::size_t y = 0; y < base.size(); ++y) {
    if (base[y] <= 0.0) continue;
    logits[y] = std::log(base[y]) + sigma * normal(gen);
    top = std::max(top, logits[y]);
  }
  std::vector<double> out(base.size(), 0.0);
  double total = 0.0;
  for (std::size_t y = 0; y < base.size(); ++y) {
    if (base[y] <= 0.0) continue;
    out[y] = std::exp(logits[y] - top);
    total += out[y];
  }
  for (double& p : out) p /= total;
  return out;
}

inline std::vector<double> crowd_base(std::size_t k, std::size_t truth, std::size_t distractor, double epsilon) {
  std::vector<double> base(k, 0.0);
  base[truth] = epsilon;
  base[distractor] = 1.0 - epsilon;
  return base;
}

inline std::vector<double> truth_holder_base(std::size_t k, std::size_t truth, double delta) {
  std::vector<double> base(k, delta / static_cast<double>(k - 1));
  base[truth] = 1.0 - delta;
  return base;
}

inline BeliefProfile compute_profile(double epsilon, double delta, std::size_t k, double sigma) {
  if (sigma == 0.0) return {epsilon, 1.0 - delta};
  Rng gen(derive_seed(0x70726f66696c65ULL, k));
  double crowd = 0.0;
  double holder = 0.0;
  const auto cbase = crowd_base(k, 0, 1, epsilon);
  const auto hbase = truth_holder_base(k, 0, delta);
  for (std::size_t d = 0; d < kProfileDraws; ++d) {
    crowd += jitter(cbase, sigma, gen)[0];
    holder += jitter(hbase, sigma, gen)[0];
  }
  const double n = static_cast<double>(kProfileDraws);
  return {crowd / n, holder / n};
}

}  // namespace detail

inline BeliefProfile belief_profile(const ScenarioSpec& spec) {
  using Key = std::tuple<double, double, std::size_t, double>;
  static std::mutex mutex;
  static std::map<Key, BeliefProfile> cache;
  const Key key{spec.crowd_bias_epsilon, spec.truth_holder_delta, spec.k_labels, spec.belief_noise_sigma};
  {
    std::lock_guard lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const auto profile = detail::compute_profile(spec.crowd_bias_epsilon, spec.truth_holder_delta,
                                               spec.k_labels, spec.belief_noise_sigma);
  std::lock_guard lock(mutex);
  cache.emplace(key, profile);
  return profile;
}

// Expected average of everyone else's initial belief, as seen by `own_index`.
// Distractor mass is symmetric across the non-truth labels because the
// crowd's distractor is uniform over them.
inline BeliefDistribution truth_holder_peer_prediction(const ScenarioSpec& spec, std::size_t own_index,
                                                       std::size_t truth_index) {
  spec.validate();
  if (own_index >= spec.n_agents) throw Error(Errc::InvalidArgument, "agent index out of range");
  if (truth_index >= spec.k_labels) throw Error(Errc::InvalidArgument, "truth index out of range");
  const auto profile = belief_profile(spec);
  double crowd_peers = static_cast<double>(spec.n_crowd());
  double holder_peers = static_cast<double>(spec.n_truth_holders);
  if (spec.is_truth_holder(own_index)) {
    holder_peers -= 1.0;
  } else {
    crowd_peers -= 1.0;
  }
  const double peers = static_cast<double>(spec.n_agents - 1);
  const double truth_mass =
      (crowd_peers * profile.crowd_truth_mass + holder_peers * profile.truth_holder_truth_mass) / peers;
  const double other = (1.0 - truth_mass) / static_cast<double>(spec.k_labels - 1);
  std::vector<double> probs(spec.k_labels, other);
  probs[truth_index] = truth_mass;
  return BeliefDistribution::from_probs(std::move(probs));
}

inline std::unique_ptr<AgentModel> imperfect_truth_holder(BeliefDistribution initial,
                                                          BeliefDistribution expected_peer_average, double mix,
                                                          double stubbornness_lambda = 0.0) {
  return std::make_unique<TruthHolderAgent>(std::move(initial), std::move(expected_peer_average), mix,
                                            stubbornness_lambda);
}

struct Scenario {
  AnswerSpace space;
  AgentList agents;
  std::vector<BeliefDistribution> initial_beliefs;
  std::vector<std::size_t> truth_holders;
  bool shared_misconception = false;
  // Per agent: the distractor a crowd agent leans toward (truth-holders hold
  // the truth index here).
  std::vector<std::size_t> leaning;
};

// Pure function of the scenario, including its seed.
inline Scenario generate_scenario(const ScenarioSpec& spec) {
  spec.validate();
  Rng gen(derive_seed(spec.seed, 0));
  const std::size_t k = spec.k_labels;

  std::uniform_int_distribution<std::size_t> pick_label(0, k - 1);
  std::uniform_int_distribution<std::size_t> pick_distractor(0, k - 2);
  std::bernoulli_distribution shared(spec.error_correlation_rho);

  const std::size_t truth = pick_label(gen);
  auto distractor_from = [&](std::size_t draw) { return draw >= truth ? draw + 1 : draw; };

  Scenario s;
  s.space = AnswerSpace::letters(k, truth);
  s.shared_misconception = shared(gen);
  const std::size_t common = distractor_from(pick_distractor(gen));

  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    if (spec.is_truth_holder(i)) {
      s.truth_holders.push_back(i);
      s.leaning.push_back(truth);
      s.initial_beliefs.push_back(BeliefDistribution::from_probs(
          detail::jitter(detail::truth_holder_base(k, truth, spec.truth_holder_delta), spec.belief_noise_sigma,
                         gen)));
    } else {
      const std::size_t own = distractor_from(pick_distractor(gen));
      const std::size_t target = s.shared_misconception ? common : own;
      s.leaning.push_back(target);
      s.initial_beliefs.push_back(BeliefDistribution::from_probs(detail::jitter(
          detail::crowd_base(k, truth, target, spec.crowd_bias_epsilon), spec.belief_noise_sigma, gen)));
    }
  }

  for (std::size_t i = 0; i < spec.n_agents; ++i) {
    if (spec.is_truth_holder(i)) {
      s.agents.push_back(imperfect_truth_holder(s.initial_beliefs[i], truth_holder_peer_prediction(spec, i, truth),
                                                spec.truth_holder_mix, spec.stubbornness_lambda));
    } else {
      s.agents.push_back(std::make_unique<CrowdAgent>(s.initial_beliefs[i], spec.stubbornness_lambda));
    }
  }
  return s;
}

}  // namespace acemad
