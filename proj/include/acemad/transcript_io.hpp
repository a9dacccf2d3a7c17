#pragma once

// Line-delimited JSON records for transcripts: one debate per line with the
// stable field order answer_space, protocol, rounds, final_decision,
// mu_series.

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "acemad/core_types.hpp"

namespace acemad {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline ordered_json beliefs_to_json(const std::vector<BeliefDistribution>& beliefs) {
  ordered_json out = ordered_json::array();
  for (const auto& b : beliefs) out.push_back(b.vector());
  return out;
}

inline std::vector<BeliefDistribution> beliefs_from_json(const ordered_json& j) {
  std::vector<BeliefDistribution> out;
  out.reserve(j.size());
  for (const auto& entry : j) {
    auto probs = entry.get<std::vector<double>>();
    out.push_back(probs.empty() ? BeliefDistribution{}
                                : BeliefDistribution::validated(std::move(probs)));
  }
  return out;
}

}  // namespace detail

inline ordered_json to_json(const AnswerSpace& space) {
  ordered_json j;
  j["labels"] = space.labels();
  if (space.truth_index()) {
    j["truth_index"] = *space.truth_index();
  } else {
    j["truth_index"] = nullptr;
  }
  return j;
}

inline ordered_json to_json(const RoundSnapshot& r) {
  ordered_json j;
  j["round"] = r.round;
  j["arguments"] = r.arguments;
  j["self_beliefs"] = detail::beliefs_to_json(r.self_beliefs);
  j["peer_predictions"] = detail::beliefs_to_json(r.peer_predictions);
  j["scores"] = r.scores;
  j["weights_after"] = r.weights_after;
  return j;
}

inline ordered_json to_json(const Transcript& t) {
  ordered_json j;
  j["answer_space"] = to_json(t.answer_space);
  j["protocol"] = std::string(to_string(t.protocol));
  ordered_json rounds = ordered_json::array();
  for (const auto& r : t.rounds) rounds.push_back(to_json(r));
  j["rounds"] = std::move(rounds);
  j["final_decision"] = t.final_decision;
  if (t.mu_series) {
    j["mu_series"] = *t.mu_series;
  } else {
    j["mu_series"] = nullptr;
  }
  return j;
}

inline Transcript transcript_from_json(const ordered_json& j) {
  try {
    Transcript t;
    const auto& space = j.at("answer_space");
    std::optional<std::size_t> truth;
    if (!space.at("truth_index").is_null()) truth = space.at("truth_index").get<std::size_t>();
    t.answer_space = AnswerSpace(space.at("labels").get<std::vector<std::string>>(), truth);
    t.protocol = protocol_from_string(j.at("protocol").get<std::string>());
    for (const auto& rj : j.at("rounds")) {
      RoundSnapshot r;
      r.round = rj.at("round").get<std::size_t>();
      r.arguments = rj.at("arguments").get<std::vector<std::string>>();
      r.self_beliefs = detail::beliefs_from_json(rj.at("self_beliefs"));
      r.peer_predictions = detail::beliefs_from_json(rj.at("peer_predictions"));
      r.scores = rj.at("scores").get<std::vector<double>>();
      r.weights_after = rj.at("weights_after").get<std::vector<double>>();
      t.rounds.push_back(std::move(r));
    }
    t.final_decision = j.at("final_decision").get<std::size_t>();
    if (j.contains("mu_series") && !j.at("mu_series").is_null()) {
      t.mu_series = j.at("mu_series").get<std::vector<double>>();
    }
    t.validate();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("transcript record: ") + e.what());
  }
}

inline std::string serialize_transcript(const Transcript& t) { return to_json(t).dump(); }

inline Transcript parse_transcript(std::string_view line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::ParseError, std::string("transcript record: ") + e.what());
  }
  return transcript_from_json(j);
}

inline void write_transcripts(std::ostream& os, const std::vector<Transcript>& transcripts) {
  for (const auto& t : transcripts) os << serialize_transcript(t) << '\n';
}

inline std::vector<Transcript> read_transcripts(std::istream& is) {
  std::vector<Transcript> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(parse_transcript(line));
  }
  return out;
}

}  // namespace acemad
