#pragma once

// Named scenario and protocol settings shared by the CLI verify suites and
// the acceptance tests.

#include <cstddef>

#include "acemad/agents.hpp"
#include "acemad/engine.hpp"

namespace acemad::presets {

// N = 5, one perfect truth-holder, every crowd agent on the same distractor.
inline ScenarioSpec static_noiseless() {
  ScenarioSpec s;
  s.n_agents = 5;
  s.n_truth_holders = 1;
  s.crowd_bias_epsilon = 0.1;
  s.truth_holder_delta = 0.1;
  s.error_correlation_rho = 1.0;
  s.k_labels = 2;
  return s;
}

inline ScenarioSpec separation() {
  auto s = static_noiseless();
  s.belief_noise_sigma = 0.05;
  return s;
}

inline ScenarioSpec drift() {
  auto s = separation();
  s.stubbornness_lambda = 0.2;
  return s;
}

inline ProtocolConfig drift_protocol() {
  ProtocolConfig c;
  c.protocol = Protocol::AceMAD;
  c.eta = 0.1;
  c.rounds = 5;
  return c;
}

// Four options, half the crowd errors correlated, noisy and drifting beliefs.
// Majority vote is usually wrong here but not always.
inline ScenarioSpec drifting_challenge() {
  ScenarioSpec s;
  s.n_agents = 5;
  s.n_truth_holders = 1;
  s.crowd_bias_epsilon = 0.3;
  s.truth_holder_delta = 0.1;
  s.error_correlation_rho = 0.5;
  s.k_labels = 4;
  s.belief_noise_sigma = 1.0;
  s.stubbornness_lambda = 0.2;
  return s;
}

inline constexpr double kTruthHolderFraction = 0.2;

// Truth-holders at a fixed fraction of the group, rounded down.
inline ScenarioSpec scaled(ScenarioSpec base, std::size_t n_agents, double fraction = kTruthHolderFraction) {
  base.n_agents = n_agents;
  base.n_truth_holders = static_cast<std::size_t>(fraction * static_cast<double>(n_agents) + 1e-9);
  return base;
}

}  // namespace acemad::presets
