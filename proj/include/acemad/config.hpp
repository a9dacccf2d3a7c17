#pragma once

// Experiment configuration: one JSON document with optional sections
// scenario, protocol, agents, sweep and llm. Every field has a default, so
// `{}` is a valid config (five agents, three AceMAD rounds, eta 2.0).
// Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "acemad/agents.hpp"
#include "acemad/engine.hpp"
#include "acemad/error.hpp"
#include "acemad/llm_bridge.hpp"

namespace acemad {

enum class AgentMode { Synthetic, Llm };

// Each non-empty list is one sweep axis; empty lists keep the base value.
struct SweepGrid {
  std::vector<Protocol> protocols;
  std::vector<std::size_t> n_agents;
  std::vector<std::size_t> rounds;
  std::vector<double> eta;
  std::vector<double> epsilon;
  std::vector<double> delta;
  std::vector<double> rho;
  std::vector<double> sigma;
  std::vector<double> lambda;
  std::vector<double> mix;
  // Overrides n_truth_holders with floor(fraction * N) in every cell.
  std::vector<double> truth_holder_fraction;
};

struct LlmSection {
  LlmAgentConfig agent;
  ClientMode mode = ClientMode::Live;
  std::string fixture_path;
  std::string questions_path;
  std::size_t max_in_flight = 4;
  HeterogeneousMix mix;
};

struct ExperimentConfig {
  ScenarioSpec scenario;
  ProtocolConfig protocol;
  AgentMode agent_mode = AgentMode::Synthetic;
  std::size_t trials = 1;
  std::uint64_t seed = 0;
  SweepGrid sweep;
  LlmSection llm;
  // Canonical dump of the parsed document, used for the manifest hash.
  std::string canonical;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw Error(Errc::ParseError, where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw Error(Errc::ParseError, "unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

template <class T>
void read_list(const json& obj, const char* key, std::vector<T>& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (v.is_array()) out = v.get<std::vector<T>>();
  else out = {v.get<T>()};
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& root) {
  using detail::read;
  using detail::read_list;
  using nlohmann::json;
  ExperimentConfig c;
  try {
    detail::reject_unknown(root, {"scenario", "protocol", "agents", "trials", "seed", "sweep", "llm"}, "config");
    read(root, "trials", c.trials);
    read(root, "seed", c.seed);

    if (root.contains("scenario")) {
      const auto& s = root.at("scenario");
      detail::reject_unknown(s, {"n_agents", "n_truth_holders", "epsilon", "delta", "rho", "k_labels", "sigma",
                                 "lambda", "mix"},
                             "scenario");
      read(s, "n_agents", c.scenario.n_agents);
      read(s, "n_truth_holders", c.scenario.n_truth_holders);
      read(s, "epsilon", c.scenario.crowd_bias_epsilon);
      read(s, "delta", c.scenario.truth_holder_delta);
      read(s, "rho", c.scenario.error_correlation_rho);
      read(s, "k_labels", c.scenario.k_labels);
      read(s, "sigma", c.scenario.belief_noise_sigma);
      read(s, "lambda", c.scenario.stubbornness_lambda);
      read(s, "mix", c.scenario.truth_holder_mix);
    }

    if (root.contains("protocol")) {
      const auto& p = root.at("protocol");
      detail::reject_unknown(p, {"name", "rounds", "eta", "alpha", "sparse_degree", "hub", "reveal_scores",
                                 "parallel_agent_calls"},
                             "protocol");
      if (p.contains("name")) c.protocol.protocol = protocol_from_string(p.at("name").get<std::string>());
      read(p, "rounds", c.protocol.rounds);
      read(p, "eta", c.protocol.eta);
      read(p, "alpha", c.protocol.alpha);
      read(p, "sparse_degree", c.protocol.sparse_degree);
      read(p, "hub", c.protocol.centralized_hub);
      read(p, "reveal_scores", c.protocol.reveal_scores);
      read(p, "parallel_agent_calls", c.protocol.parallel_agent_calls);
    }

    if (root.contains("agents")) {
      const auto& a = root.at("agents");
      detail::reject_unknown(a, {"mode", "skeptic_fraction", "generalist_temperature", "skeptic_temperature"},
                             "agents");
      if (a.contains("mode")) {
        const auto mode = a.at("mode").get<std::string>();
        if (mode == "synthetic") c.agent_mode = AgentMode::Synthetic;
        else if (mode == "llm") c.agent_mode = AgentMode::Llm;
        else throw Error(Errc::ParseError, "agents.mode must be synthetic or llm");
      }
      read(a, "skeptic_fraction", c.llm.mix.skeptic_fraction);
      read(a, "generalist_temperature", c.llm.mix.generalist_temperature);
      read(a, "skeptic_temperature", c.llm.mix.skeptic_temperature);
    }

    if (root.contains("sweep")) {
      const auto& s = root.at("sweep");
      detail::reject_unknown(s, {"protocol", "n_agents", "rounds", "eta", "epsilon", "delta", "rho", "sigma",
                                 "lambda", "mix", "truth_holder_fraction"},
                             "sweep");
      std::vector<std::string> names;
      read_list(s, "protocol", names);
      for (const auto& n : names) c.sweep.protocols.push_back(protocol_from_string(n));
      read_list(s, "n_agents", c.sweep.n_agents);
      read_list(s, "rounds", c.sweep.rounds);
      read_list(s, "eta", c.sweep.eta);
      read_list(s, "epsilon", c.sweep.epsilon);
      read_list(s, "delta", c.sweep.delta);
      read_list(s, "rho", c.sweep.rho);
      read_list(s, "sigma", c.sweep.sigma);
      read_list(s, "lambda", c.sweep.lambda);
      read_list(s, "mix", c.sweep.mix);
      read_list(s, "truth_holder_fraction", c.sweep.truth_holder_fraction);
    }

    if (root.contains("llm")) {
      const auto& l = root.at("llm");
      detail::reject_unknown(l, {"endpoint_url", "model", "api_key_env", "mode", "fixture", "questions",
                                 "max_retries", "timeout_seconds", "max_in_flight"},
                             "llm");
      read(l, "endpoint_url", c.llm.agent.endpoint_url);
      read(l, "model", c.llm.agent.model_name);
      read(l, "api_key_env", c.llm.agent.api_key_env_var_name);
      if (l.contains("mode")) c.llm.mode = client_mode_from_string(l.at("mode").get<std::string>());
      read(l, "fixture", c.llm.fixture_path);
      read(l, "questions", c.llm.questions_path);
      read(l, "max_retries", c.llm.agent.max_retries);
      if (l.contains("timeout_seconds")) {
        c.llm.agent.timeout = std::chrono::milliseconds(static_cast<long>(1000.0 * l.at("timeout_seconds").get<double>()));
      }
      read(l, "max_in_flight", c.llm.max_in_flight);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ParseError, e.what());
  }
  if (c.trials == 0) throw Error(Errc::ParseError, "trials must be at least 1");
  c.scenario.validate();
  if (c.agent_mode == AgentMode::Synthetic) c.protocol.validate(c.scenario.n_agents);
  c.llm.agent.validate();
  c.canonical = root.dump();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::ParseError, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  auto root = nlohmann::json::parse(buf.str(), nullptr, false, /*ignore_comments=*/true);
  if (root.is_discarded()) throw Error(Errc::ParseError, "config " + path + " is not valid JSON");
  ExperimentConfig c;
  try {
    c = parse_config(root);
  } catch (const Error& e) {
    throw Error(Errc::ParseError, path + ": " + e.what());
  }
  // Relative llm paths are taken from the config file's directory.
  const auto dir = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.llm.fixture_path, &c.llm.questions_path}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (dir / *p).string();
  }
  return c;
}

}  // namespace acemad
