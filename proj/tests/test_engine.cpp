#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <mutex>

#include "acemad/analysis.hpp"
#include "acemad/engine.hpp"
#include "acemad/presets.hpp"
#include "acemad/transcript_io.hpp"

using namespace acemad;
using Catch::Matchers::WithinAbs;

namespace {

BeliefDistribution b(std::initializer_list<double> p) { return BeliefDistribution::from_probs(p); }

Scenario noiseless_scenario(std::uint64_t seed = 0) {
  auto spec = presets::static_noiseless();
  spec.seed = seed;
  return generate_scenario(spec);
}

AgentList fixed_agents(const std::vector<BeliefDistribution>& beliefs) {
  AgentList agents;
  for (const auto& p : beliefs) {
    agents.push_back(std::make_unique<ScriptedAgent>(
        p, [](const AgentContext& ctx) { return Commitment{ctx.prior_belief, ctx.prior_belief}; }));
  }
  return agents;
}

}  // namespace

TEST_CASE("static noiseless AceMAD weight trajectory") {
  const auto s = noiseless_scenario();
  ProtocolConfig config;
  config.rounds = 3;
  config.eta = 2.0;
  const auto t = run_debate(s.agents, s.space, config, 1);
  REQUIRE(t.rounds.size() == 3);

  // Independent evaluation of the weights: crowd share e^{2*0.92 t}, holder e^{2 t}.
  for (const auto& r : t.rounds) {
    for (std::size_t i = 0; i < 4; ++i) CHECK_THAT(r.scores[i], WithinAbs(0.92, 1e-15));
    CHECK_THAT(r.scores[4], WithinAbs(1.0, 1e-15));
    const double tt = static_cast<double>(r.round);
    const double holder = std::exp(2.0 * tt);
    const double crowd = std::exp(2.0 * 0.92 * tt);
    CHECK_THAT(r.weights_after[4], WithinAbs(holder / (holder + 4.0 * crowd), 1e-12));
    double sum = 0.0;
    for (double w : r.weights_after) sum += w;
    CHECK_THAT(sum, WithinAbs(1.0, 1e-9));
  }
  CHECK_THAT(t.rounds.back().weights_after[4], WithinAbs(1.0 / (1.0 + 4.0 * std::exp(-0.48)), 1e-12));
  CHECK_THAT(t.rounds.back().weights_after[4], WithinAbs(0.28776, 5e-6));

  // Squared-weight decision scores, evaluated directly.
  const double we = t.rounds.back().weights_after[4];
  const double wc = t.rounds.back().weights_after[0];
  const double truth_score = we * we * 0.9 + 4.0 * wc * wc * 0.1;
  const double distractor_score = we * we * 0.1 + 4.0 * wc * wc * 0.9;
  CHECK(truth_score < distractor_score);
  CHECK_THAT(truth_score, WithinAbs(0.0873, 1e-4));
  CHECK_THAT(distractor_score, WithinAbs(0.1224, 1e-4));
  CHECK(t.final_decision != *s.space.truth_index());

  // mu_t is the linear weighted aggregate at the truth.
  REQUIRE(t.mu_series);
  CHECK_THAT(t.mu_series->front(), WithinAbs(0.26, 1e-15));
  CHECK_THAT((*t.mu_series)[3], WithinAbs(we * 0.9 + 4.0 * wc * 0.1, 1e-12));
}

TEST_CASE("zero rounds decides from the initial beliefs") {
  const std::vector<BeliefDistribution> beliefs{b({0.6, 0.4}), b({0.3, 0.7}), b({0.45, 0.55})};
  const auto space = AnswerSpace::letters(2, 0);
  ProtocolConfig config;
  config.rounds = 0;
  const auto t = run_debate(fixed_agents(beliefs), space, config, 0);
  CHECK(t.rounds.empty());
  CHECK(t.final_decision == final_decision(beliefs, WeightVector::uniform(3)));
  CHECK(t.final_decision == uniform_aggregate(beliefs).argmax());
  CHECK(t.mu_series->size() == 1);
}

TEST_CASE("eta zero keeps weights uniform") {
  const auto s = noiseless_scenario(4);
  ProtocolConfig config;
  config.eta = 0.0;
  config.rounds = 4;
  const auto t = run_debate(s.agents, s.space, config, 2);
  for (const auto& r : t.rounds) {
    for (double w : r.weights_after) CHECK(w == 0.2);
  }
  CHECK(t.final_decision == final_decision(s.initial_beliefs, WeightVector::uniform(5)));
}

TEST_CASE("standard debate keeps mu constant") {
  auto spec = presets::drifting_challenge();
  spec.n_agents = 7;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    spec.seed = seed;
    const auto s = generate_scenario(spec);
    ProtocolConfig config;
    config.protocol = Protocol::StandardMAD;
    config.rounds = 6;
    config.alpha = 0.3;
    const auto t = run_debate(s.agents, s.space, config, seed);
    for (double mu : *t.mu_series) CHECK_THAT(mu, WithinAbs(t.mu_series->front(), 1e-12));
    for (const auto& r : t.rounds) {
      for (const auto& q : r.peer_predictions) CHECK(q.empty());
      for (double x : r.scores) CHECK(x == 0.0);
    }
  }
}

TEST_CASE("majority vote uses initial beliefs only") {
  const auto s = noiseless_scenario();
  ProtocolConfig config;
  config.protocol = Protocol::MajorityVote;
  const auto t = run_debate(s.agents, s.space, config, 0);
  CHECK(t.rounds.empty());
  CHECK(t.final_decision == majority_vote(s.initial_beliefs));
}

TEST_CASE("centralized debate absorbs the spokes into the hub") {
  const std::vector<BeliefDistribution> beliefs{b({0.2, 0.8}), b({0.7, 0.3}), b({0.9, 0.1}), b({0.4, 0.6})};
  const auto space = AnswerSpace::letters(2, 0);
  ProtocolConfig config;
  config.alpha = 1.0;
  config.rounds = 1;
  config.centralized_hub = 0;
  const auto t = run_standard_variants(fixed_agents(beliefs), space, Protocol::CentralizedMAD, config, 0);
  CHECK(t.protocol == Protocol::CentralizedMAD);
  for (std::size_t i = 1; i < 4; ++i) CHECK(t.rounds[0].self_beliefs[i] == beliefs[0]);
  // The hub cannot listen to itself: it takes the spokes' mean.
  CHECK_THAT(t.rounds[0].self_beliefs[0][0], WithinAbs((0.7 + 0.9 + 0.4) / 3.0, 1e-15));
}

TEST_CASE("full-degree sparse debate equals standard debate") {
  auto spec = presets::drifting_challenge();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    spec.seed = seed;
    ProtocolConfig config;
    config.rounds = 4;
    config.sparse_degree = spec.n_agents - 1;
    const auto a = generate_scenario(spec);
    const auto c = generate_scenario(spec);
    auto sparse = run_standard_variants(a.agents, a.space, Protocol::SparseMAD, config, seed);
    auto standard = run_standard_variants(c.agents, c.space, Protocol::StandardMAD, config, seed);
    sparse.protocol = standard.protocol;
    CHECK(sparse == standard);
  }
}

TEST_CASE("sparse influence from the engine seed") {
  ProtocolConfig config;
  config.protocol = Protocol::SparseMAD;
  config.sparse_degree = 2;
  Rng rng(77);
  const auto m = influence_for(config, 5, rng);
  for (std::size_t i = 0; i < 5; ++i) {
    double row = 0.0;
    std::size_t nonzero = 0;
    for (std::size_t j = 0; j < 5; ++j) {
      row += m(i, j);
      nonzero += m(i, j) > 0.0;
    }
    CHECK_THAT(row, WithinAbs(1.0, 1e-9));
    CHECK(nonzero == 2);
    CHECK(m(i, i) == 0.0);
  }
}

TEST_CASE("config validation") {
  auto mismatch = [](ProtocolConfig c, std::size_t n) {
    try {
      c.validate(n);
    } catch (const Error& e) {
      return e.code() == Errc::ConfigMismatch;
    }
    return false;
  };
  ProtocolConfig c;
  c.protocol = Protocol::SparseMAD;
  c.sparse_degree = 5;
  CHECK(mismatch(c, 5));
  c.protocol = Protocol::CentralizedMAD;
  c.centralized_hub = 5;
  CHECK(mismatch(c, 5));
  c.protocol = Protocol::AceMAD;
  c.eta = -1.0;
  CHECK(mismatch(c, 5));
  c.eta = 2.0;
  CHECK(mismatch(c, 1));
  CHECK_FALSE(mismatch(c, 2));
}

TEST_CASE("agents never see same-round commitments") {
  const auto space = AnswerSpace::letters(3, 1);
  const std::size_t n = 4;
  std::mutex mutex;
  std::vector<std::string> violations;
  AgentList agents;
  for (std::size_t i = 0; i < n; ++i) {
    auto check = [&, i](const AgentContext& ctx, bool committing) {
      std::lock_guard lock(mutex);
      for (const auto& r : ctx.history) {
        if (r.round >= ctx.round) violations.push_back("agent " + std::to_string(i) + " saw round " +
                                                       std::to_string(r.round) + " in round " +
                                                       std::to_string(ctx.round));
        for (double s : r.scores) {
          if (s != 0.0) violations.push_back("scores leaked");
        }
      }
      if (committing && ctx.own_argument != "argument from " + std::to_string(i) + " in round " +
                                                std::to_string(ctx.round)) {
        violations.push_back("wrong own argument");
      }
      if (!committing && ctx.own_argument) violations.push_back("argument visible while arguing");
    };
    agents.push_back(std::make_unique<ScriptedAgent>(
        BeliefDistribution::uniform(3),
        [check, i](const AgentContext& ctx) {
          check(ctx, true);
          auto p = BeliefDistribution::vertex(3, i % 3);
          return Commitment{normalize({p[0] + 0.1, p[1] + 0.1, p[2] + 0.1}), BeliefDistribution::uniform(3)};
        },
        [check, i](const AgentContext& ctx) {
          check(ctx, false);
          return "argument from " + std::to_string(i) + " in round " + std::to_string(ctx.round);
        }));
  }
  for (bool parallel : {false, true}) {
    ProtocolConfig config;
    config.rounds = 4;
    config.parallel_agent_calls = parallel;
    const auto t = run_debate(agents, space, config, 5);
    CHECK(t.rounds.back().arguments[2] == "argument from 2 in round 4");
  }
  CHECK(violations.empty());
  if (!violations.empty()) INFO(violations.front());
}

TEST_CASE("debates are deterministic and independent of call scheduling") {
  auto spec = presets::drifting_challenge();
  for (auto protocol : {Protocol::AceMAD, Protocol::StandardMAD, Protocol::SparseMAD, Protocol::CentralizedMAD}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      spec.seed = seed;
      ProtocolConfig config;
      config.protocol = protocol;
      const auto a = generate_scenario(spec);
      const auto t1 = run_debate(a.agents, a.space, config, seed);
      const auto t2 = run_debate(a.agents, a.space, config, seed);
      config.parallel_agent_calls = true;
      const auto t3 = run_debate(a.agents, a.space, config, seed);
      CHECK(serialize_transcript(t1) == serialize_transcript(t2));
      CHECK(serialize_transcript(t1) == serialize_transcript(t3));
    }
  }
}

TEST_CASE("a failing commitment is retried once, then carried forward") {
  const auto space = AnswerSpace::letters(2, 0);
  std::atomic<int> calls{0};
  AgentList agents = fixed_agents({b({0.8, 0.2}), b({0.3, 0.7})});
  agents.push_back(std::make_unique<ScriptedAgent>(b({0.6, 0.4}), [&](const AgentContext& ctx) -> Commitment {
    if (++calls % 2 == 1) throw Error(Errc::MalformedCommit, "bad json");
    return {ctx.prior_belief, ctx.prior_belief};
  }));
  agents.push_back(std::make_unique<ScriptedAgent>(
      b({0.5, 0.5}), [](const AgentContext&) -> Commitment { throw Error(Errc::NoJsonFound, "nothing"); }));

  std::vector<AgentFailureEvent> events;
  DebateOptions options;
  options.on_failure = [&](const AgentFailureEvent& e) { events.push_back(e); };
  ProtocolConfig config;
  config.rounds = 2;
  const auto t = run_debate(agents, space, config, 0, options);

  REQUIRE(events.size() == 4);
  CHECK(events[0].agent == 2);
  CHECK(events[0].recovered_by_retry);
  CHECK(events[1].agent == 3);
  CHECK_FALSE(events[1].recovered_by_retry);
  for (const auto& r : t.rounds) {
    CHECK(r.self_beliefs[3] == b({0.5, 0.5}));
    CHECK(r.peer_predictions[3] == b({0.5, 0.5}));
  }
}

TEST_CASE("commitments over the wrong answer space are rejected") {
  const auto space = AnswerSpace::letters(2, 0);
  AgentList agents = fixed_agents({b({0.8, 0.2})});
  agents.push_back(std::make_unique<ScriptedAgent>(b({0.6, 0.4}), [](const AgentContext&) {
    return Commitment{BeliefDistribution::uniform(3), BeliefDistribution::uniform(3)};
  }));
  std::size_t failures = 0;
  DebateOptions options;
  options.on_failure = [&](const AgentFailureEvent&) { ++failures; };
  const auto t = run_debate(agents, space, ProtocolConfig{}, 0, options);
  CHECK(failures == 3);
  CHECK(t.rounds[0].self_beliefs[1] == b({0.6, 0.4}));
}
