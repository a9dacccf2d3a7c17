#pragma once

// Round loops for every protocol. AceMAD runs argue / commit / score /
// multiplicative update each round and decides with squared weights. The
// standard, centralized and sparse debates share one loop over the linear
// influence update, differing only in the influence matrix. Majority vote is
// a plurality over initial beliefs.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "acemad/agents.hpp"
#include "acemad/core_types.hpp"
#include "acemad/dynamics.hpp"
#include "acemad/rng.hpp"
#include "acemad/scoring.hpp"

namespace acemad {

struct ProtocolConfig {
  Protocol protocol = Protocol::AceMAD;
  std::size_t rounds = 3;
  double eta = 2.0;             // AceMAD only; 0 disables the weight update
  double alpha = 0.5;           // peer susceptibility for the linear protocols
  std::size_t sparse_degree = 2;
  std::size_t centralized_hub = 0;
  bool reveal_scores = false;   // expose past scores and weights to agents
  bool parallel_agent_calls = false;

  bool is_linear() const noexcept {
    return protocol == Protocol::StandardMAD || protocol == Protocol::CentralizedMAD ||
           protocol == Protocol::SparseMAD;
  }

  void validate(std::size_t n_agents) const {
    auto fail = [](const std::string& what) { throw Error(Errc::ConfigMismatch, what); };
    if (n_agents == 0) fail("no agents");
    if (protocol == Protocol::AceMAD && !(eta >= 0.0 && std::isfinite(eta))) fail("eta must be >= 0");
    if (is_linear() && !(alpha >= 0.0 && alpha <= 1.0)) fail("alpha must be in [0, 1]");
    if (protocol != Protocol::MajorityVote && n_agents < 2) fail("debate needs at least two agents");
    if (protocol == Protocol::SparseMAD && (sparse_degree == 0 || sparse_degree >= n_agents)) {
      fail("sparse_degree must be in [1, N-1]");
    }
    if (protocol == Protocol::CentralizedMAD && centralized_hub >= n_agents) fail("hub index out of range");
  }
};

struct AgentFailureEvent {
  std::size_t agent = 0;
  std::size_t round = 0;
  std::string cause;
  bool recovered_by_retry = false;
};

struct DebateOptions {
  // Receives every failed agent call. Defaults to a line on stderr.
  std::function<void(const AgentFailureEvent&)> on_failure;
};

template <class Rng>
InfluenceMatrix influence_for(const ProtocolConfig& config, std::size_t n, Rng& rng) {
  switch (config.protocol) {
    case Protocol::CentralizedMAD: return InfluenceMatrix::centralized(n, config.centralized_hub, config.alpha);
    case Protocol::SparseMAD: return InfluenceMatrix::sparse(n, config.sparse_degree, config.alpha, rng);
    default: return InfluenceMatrix::uniform(n, config.alpha);
  }
}

// What agents may read at the start of a round: every completed round, with
// scores and weights blanked unless the protocol reveals them.
inline std::vector<RoundSnapshot> visible_history(const std::vector<RoundSnapshot>& completed, bool reveal_scores) {
  std::vector<RoundSnapshot> out = completed;
  if (reveal_scores) return out;
  for (auto& r : out) {
    const std::size_t n = r.agent_count();
    r.scores.assign(n, 0.0);
    if (n > 0) r.weights_after.assign(n, 1.0 / static_cast<double>(n));
  }
  return out;
}

namespace detail {

template <class Fn>
auto call_each(std::size_t n, bool parallel, Fn&& fn) {
  using Result = decltype(fn(std::size_t{0}));
  std::vector<Result> out;
  out.reserve(n);
  if (!parallel) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  std::vector<std::future<Result>> pending;
  pending.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pending.push_back(std::async(std::launch::async, fn, i));
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

inline void report_failure(const DebateOptions& options, const AgentFailureEvent& event) {
  if (options.on_failure) {
    options.on_failure(event);
  } else {
    std::cerr << "acemad: agent " << event.agent << " failed in round " << event.round
              << (event.recovered_by_retry ? " (retry succeeded): " : " (carried forward): ") << event.cause
              << '\n';
  }
}

// One retry, then the fallback supplied by the caller.
template <class T, class Attempt, class Fallback>
T with_retry(const DebateOptions& options, std::size_t agent, std::size_t round, Attempt&& attempt,
             Fallback&& fallback) {
  std::string first_cause;
  try {
    return attempt();
  } catch (const Error& e) {
    first_cause = e.what();
  }
  try {
    T value = attempt();
    report_failure(options, {agent, round, first_cause, true});
    return value;
  } catch (const Error& e) {
    report_failure(options, {agent, round, first_cause + "; retry: " + e.what(), false});
  }
  return fallback();
}

inline void check_commitment(const Commitment& c, const AnswerSpace& space) {
  if (c.self_belief.size() != space.size() || c.peer_prediction.size() != space.size()) {
    throw Error(Errc::DimensionMismatch, "commitment does not cover the answer space");
  }
}

}  // namespace detail

inline Transcript run_debate(const AgentList& agents, const AnswerSpace& space, const ProtocolConfig& config,
                             std::uint64_t seed, const DebateOptions& options = {}) {
  const std::size_t n = agents.size();
  config.validate(n);
  const std::size_t k = space.size();
  const auto truth = space.truth_index();
  Rng rng(derive_seed(seed, 0x656e67696e65ULL));

  auto base_context = [&](std::size_t i, std::size_t round) {
    AgentContext ctx;
    ctx.agent = i;
    ctx.round = round;
    ctx.space = &space;
    ctx.stream_seed = derive_seed(derive_seed(seed, round), i);
    return ctx;
  };

  // Initial beliefs: zero-shot, no history.
  std::vector<BeliefDistribution> current = detail::call_each(n, config.parallel_agent_calls, [&](std::size_t i) {
    auto ctx = base_context(i, 0);
    ctx.prior_belief = BeliefDistribution::uniform(k);
    ctx.public_aggregate = ctx.prior_belief;
    return detail::with_retry<BeliefDistribution>(
        options, i, 0,
        [&] {
          auto b = agents[i]->initial_belief(ctx);
          if (b.size() != k) throw Error(Errc::DimensionMismatch, "initial belief does not cover the answer space");
          return b;
        },
        [&] { return BeliefDistribution::uniform(k); });
  });

  Transcript transcript;
  transcript.answer_space = space;
  transcript.protocol = config.protocol;
  std::vector<double> mu;
  auto record_mu = [&](const BeliefDistribution& aggregate) {
    if (truth) mu.push_back(std::clamp(aggregate[*truth], 0.0, 1.0));
  };

  WeightVector weights = WeightVector::uniform(n);
  BeliefDistribution aggregate = uniform_aggregate(current);
  record_mu(aggregate);

  if (config.protocol == Protocol::MajorityVote) {
    transcript.final_decision = majority_vote(current);
    if (truth) transcript.mu_series = std::move(mu);
    return transcript;
  }

  std::optional<InfluenceMatrix> influence;
  if (config.is_linear()) influence = influence_for(config, n, rng);

  for (std::size_t t = 1; t <= config.rounds; ++t) {
    const auto history = visible_history(transcript.rounds, config.reveal_scores);
    const auto priors = influence ? linear_update(current, *influence) : current;

    auto round_context = [&](std::size_t i) {
      auto ctx = base_context(i, t);
      ctx.history = history;
      ctx.prior_belief = priors[i];
      ctx.public_aggregate = aggregate;
      return ctx;
    };

    // Phase 1: arguments, conditioned on completed rounds only.
    auto arguments = detail::call_each(n, config.parallel_agent_calls, [&](std::size_t i) {
      const auto ctx = round_context(i);
      return detail::with_retry<std::string>(
          options, i, t, [&] { return agents[i]->argue(ctx); }, [] { return std::string{}; });
    });

    // Phase 2: private commitments; each agent sees only its own argument.
    auto commitments = detail::call_each(n, config.parallel_agent_calls, [&](std::size_t i) {
      auto ctx = round_context(i);
      ctx.own_argument = arguments[i];
      return detail::with_retry<Commitment>(
          options, i, t,
          [&] {
            auto c = agents[i]->commit(ctx);
            detail::check_commitment(c, space);
            return c;
          },
          [&] { return Commitment{priors[i], priors[i]}; });
    });

    RoundSnapshot snap;
    snap.round = t;
    snap.arguments = std::move(arguments);
    for (auto& c : commitments) {
      snap.self_beliefs.push_back(std::move(c.self_belief));
      snap.peer_predictions.push_back(std::move(c.peer_prediction));
    }

    if (config.protocol == Protocol::AceMAD) {
      // Phases 3 and 4: score against the realized peer average, reweight.
      const auto scores = score_round(snap.self_beliefs, snap.peer_predictions, t);
      if (config.eta > 0.0) weights = mwu_update(weights, scores, config.eta);
      snap.scores = scores.scores;
      aggregate = weighted_aggregate(snap.self_beliefs, weights);
    } else {
      snap.peer_predictions.assign(n, BeliefDistribution{});
      snap.scores.assign(n, 0.0);
      aggregate = uniform_aggregate(snap.self_beliefs);
    }
    snap.weights_after = weights.weights;
    record_mu(aggregate);
    current = snap.self_beliefs;
    transcript.rounds.push_back(std::move(snap));
  }

  transcript.final_decision =
      config.protocol == Protocol::AceMAD ? final_decision(current, weights) : majority_vote(current);
  if (truth) transcript.mu_series = std::move(mu);
  transcript.validate();
  return transcript;
}

// Centralized and sparse debates are the standard loop over a different
// influence matrix; this just pins the protocol.
inline Transcript run_standard_variants(const AgentList& agents, const AnswerSpace& space, Protocol protocol,
                                        ProtocolConfig config, std::uint64_t seed,
                                        const DebateOptions& options = {}) {
  if (protocol != Protocol::StandardMAD && protocol != Protocol::CentralizedMAD &&
      protocol != Protocol::SparseMAD) {
    throw Error(Errc::ConfigMismatch, "not a linear-update protocol");
  }
  config.protocol = protocol;
  return run_debate(agents, space, config, seed, options);
}

}  // namespace acemad
