#pragma once

// Prompt rendering for LLM-backed agents, commitment parsing with repair,
// and question ingestion.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <exception>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "acemad/core_types.hpp"
#include "acemad/error.hpp"

namespace acemad {

enum class PersonaKind { Generalist, Skeptic, Custom };

struct Persona {
  PersonaKind kind = PersonaKind::Generalist;
  std::string custom_text;

  static Persona generalist() { return {PersonaKind::Generalist, {}}; }
  static Persona skeptic() { return {PersonaKind::Skeptic, {}}; }
  static Persona custom(std::string text) { return {PersonaKind::Custom, std::move(text)}; }

  std::string system_line() const {
    switch (kind) {
      case PersonaKind::Generalist: return "You are a helpful assistant. You trust common knowledge and consensus.";
      case PersonaKind::Skeptic:
        return "You are a strict skeptic. You actively look for common misconceptions and logical traps. You suspect "
               "the majority might be wrong.";
      case PersonaKind::Custom: return custom_text;
    }
    return {};
  }

  std::string_view name() const noexcept {
    switch (kind) {
      case PersonaKind::Generalist: return "Generalist";
      case PersonaKind::Skeptic: return "Skeptic";
      case PersonaKind::Custom: return "Custom";
    }
    return "Custom";
  }

  bool operator==(const Persona&) const = default;
};

enum class Phase { Argue, Commit };

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> options;
  std::optional<std::size_t> answer_index;

  AnswerSpace space() const { return AnswerSpace::letters(options.size(), answer_index); }
};

// One speaker turn shown to an agent.
struct HistoryEntry {
  std::size_t round = 0;
  std::string speaker;
  std::string text;
};

inline constexpr std::string_view kNoHistory = "(no prior discussion)";

// "A. first option" per line.
inline std::string options_string(std::span<const std::string> options) {
  std::string out;
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (i) out += '\n';
    out += static_cast<char>('A' + i);
    out += ". ";
    out += options[i];
  }
  return out;
}

inline std::string format_history(std::span<const HistoryEntry> history) {
  if (history.empty()) return std::string(kNoHistory);
  std::string out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (i) out += "\n\n";
    out += "[Round " + std::to_string(history[i].round) + "] " + history[i].speaker + ":\n" + history[i].text;
  }
  return out;
}

// Template body without the persona line.
inline std::string render_body(Phase phase, std::string_view question, std::span<const std::string> options,
                               std::span<const HistoryEntry> history) {
  if (options.empty()) throw Error(Errc::InvalidArgument, "no options to render");
  const std::string opts = options_string(options);
  const std::string hist = format_history(history);
  std::string out;
  if (phase == Phase::Argue) {
    out += "Question: ";
    out += question;
    out += "\n\nOptions:\n" + opts + "\n\nConversation History:\n" + hist + "\n\n";
    out += "Please provide a concise argument for what you believe is the correct answer.\n";
    out += "Do NOT output JSON here. Just natural language debate.";
  } else {
    out += "Question: ";
    out += question;
    out += "\nOptions:\n" + opts + "\n\nConversation History:\n" + hist + "\n\n";
    out += "Task:\n\n";
    out += "1. Self_Prob: Assign probability (0.0-1.0) to options based on your belief.\n\n";
    out += "2. Peer_Prediction: Predict the AVERAGE probability distribution of the OTHER agents in this "
           "conversation.\n";
    out += "(Critically: If others are 'Generalists', they might fall for common misconceptions. Predict their "
           "likely errors.)\n\n";
    out += "Output JSON:\n{\n    \"self_prob\": {\"A\": 0.1, ...},\n    \"peer_prediction\": {\"A\": 0.3, ...}\n}";
  }
  return out;
}

inline std::string render_prompt(Phase phase, std::string_view question, std::span<const std::string> options,
                                 std::span<const HistoryEntry> history, const Persona& persona) {
  return persona.system_line() + "\n\n" + render_body(phase, question, options, history);
}

struct CommitPayload {
  // Label-ordered, normalized.
  std::vector<std::pair<std::string, double>> self_prob;
  std::vector<std::pair<std::string, double>> peer_prediction;
  std::string raw_text;
  std::vector<std::string> warnings;

  BeliefDistribution self_belief() const { return to_belief(self_prob); }
  BeliefDistribution peer_belief() const { return to_belief(peer_prediction); }

 private:
  static BeliefDistribution to_belief(const std::vector<std::pair<std::string, double>>& m) {
    std::vector<double> p;
    p.reserve(m.size());
    for (const auto& kv : m) p.push_back(kv.second);
    return BeliefDistribution::from_probs(std::move(p));
  }
};

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Balanced-brace spans of every top-level JSON-looking object, in order.
inline std::vector<std::string_view> brace_spans(std::string_view text) {
  std::vector<std::string_view> out;
  for (std::size_t start = text.find('{'); start != std::string_view::npos; start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.push_back(text.substr(start, i - start + 1));
        break;
      }
    }
  }
  return out;
}

inline const nlohmann::json* find_key(const nlohmann::json& obj, std::string_view key) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (lower(it.key()) == key) return &it.value();
  }
  return nullptr;
}

// "A", "a", "(A)", "A.", "Option A" all name label A.
inline std::string canonical_label(std::string_view key) {
  std::string k = lower(key);
  auto is_noise = [](unsigned char c) { return std::isspace(c) || c == '(' || c == ')' || c == '.' || c == ':'; };
  while (!k.empty() && is_noise(static_cast<unsigned char>(k.front()))) k.erase(k.begin());
  while (!k.empty() && is_noise(static_cast<unsigned char>(k.back()))) k.pop_back();
  if (k.rfind("option ", 0) == 0) k = k.substr(7);
  return k;
}

inline double as_number(const nlohmann::json& v, const std::string& where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      const double x = std::stod(s, &used);
      if (used == s.size()) return x;
    } catch (const std::exception&) {
    }
  }
  throw Error(Errc::MalformedCommit, "non-numeric value for " + where);
}

inline std::vector<std::pair<std::string, double>> repair_map(const nlohmann::json& obj, const AnswerSpace& space,
                                                              std::string_view field,
                                                              std::vector<std::string>& warnings) {
  if (!obj.is_object()) throw Error(Errc::MalformedCommit, std::string(field) + " is not an object");
  std::vector<double> raw(space.size(), 0.0);
  std::vector<bool> seen(space.size(), false);
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string key = canonical_label(it.key());
    std::optional<std::size_t> idx;
    for (std::size_t y = 0; y < space.size(); ++y) {
      if (lower(space.label(y)) == key) idx = y;
    }
    if (!idx) {
      warnings.push_back(std::string(field) + ": dropped unknown label '" + it.key() + "'");
      continue;
    }
    double x = as_number(it.value(), std::string(field) + "." + it.key());
    if (!std::isfinite(x)) throw Error(Errc::NonFinite, std::string(field) + "." + it.key() + " is not finite");
    if (x < 0.0) {
      warnings.push_back(std::string(field) + ": clamped negative value for '" + it.key() + "'");
      x = 0.0;
    }
    raw[*idx] += x;
    seen[*idx] = true;
  }
  for (std::size_t y = 0; y < space.size(); ++y) {
    if (!seen[y]) warnings.push_back(std::string(field) + ": missing label '" + space.label(y) + "' set to 0");
  }
  const auto belief = normalize(raw);  // AllZero when nothing positive survived
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t y = 0; y < space.size(); ++y) out.emplace_back(space.label(y), belief[y]);
  return out;
}

}  // namespace detail

// Reads the first JSON object in `raw` that carries "self_prob" and
// "peer_prediction". Labels match case-insensitively; missing labels get 0,
// unknown labels and negative values are dropped or clamped with a warning;
// both maps are then normalized.
inline CommitPayload parse_commit(std::string_view raw, const AnswerSpace& space) {
  std::optional<nlohmann::json> found;
  for (auto span : detail::brace_spans(raw)) {
    auto j = nlohmann::json::parse(span, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (detail::find_key(j, "self_prob")) {
      found = std::move(j);
      break;
    }
  }
  if (!found) throw Error(Errc::NoJsonFound, "no JSON object with self_prob in model output");

  CommitPayload out;
  out.raw_text = std::string(raw);
  const auto* self = detail::find_key(*found, "self_prob");
  const auto* peer = detail::find_key(*found, "peer_prediction");
  if (!peer) throw Error(Errc::MalformedCommit, "peer_prediction missing");
  out.self_prob = detail::repair_map(*self, space, "self_prob", out.warnings);
  out.peer_prediction = detail::repair_map(*peer, space, "peer_prediction", out.warnings);
  return out;
}

inline std::string commit_to_json(const CommitPayload& payload) {
  nlohmann::ordered_json j;
  j["self_prob"] = nlohmann::ordered_json::object();
  j["peer_prediction"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : payload.self_prob) j["self_prob"][k] = v;
  for (const auto& [k, v] : payload.peer_prediction) j["peer_prediction"][k] = v;
  return j.dump();
}

inline Question question_from_json(const nlohmann::json& j) {
  Question q;
  try {
    q.id = j.at("id").is_string() ? j.at("id").get<std::string>() : j.at("id").dump();
    q.text = j.at("question").get<std::string>();
    q.options = j.at("options").get<std::vector<std::string>>();
    if (j.contains("answer_index") && !j.at("answer_index").is_null()) {
      q.answer_index = j.at("answer_index").get<std::size_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("question record: ") + e.what());
  }
  if (q.options.size() < 2) throw Error(Errc::ParseError, "question " + q.id + " has fewer than two options");
  if (q.answer_index && *q.answer_index >= q.options.size()) {
    throw Error(Errc::ParseError, "question " + q.id + " answer_index out of range");
  }
  return q;
}

// One JSON object per line; blank lines are skipped.
inline std::vector<Question> read_questions(std::istream& in) {
  std::vector<Question> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::ParseError, "questions line " + std::to_string(line_no) + " is not JSON");
    out.push_back(question_from_json(j));
  }
  return out;
}

}  // namespace acemad
