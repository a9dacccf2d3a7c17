#pragma once

// LLM-backed agents over an OpenAI-compatible chat-completions endpoint, with
// record/replay fixtures so debates can be rerun offline bit for bit.
//
// Fixture files hold one {"hash": ..., "response": ...} object per line. The
// hash is SHA-256 over the canonical JSON of the call tag and request body;
// the bearer key travels only in the Authorization header and is never part
// of the hashed or recorded material.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "acemad/agents.hpp"
#include "acemad/engine.hpp"
#include "acemad/error.hpp"
#include "acemad/prompts.hpp"

namespace acemad {

struct LlmAgentConfig {
  std::string endpoint_url = "https://api.openai.com/v1";
  std::string model_name = "gpt-4o-mini";
  std::string api_key_env_var_name = "OPENAI_API_KEY";
  Persona persona;
  double temperature = 0.1;
  int max_retries = 2;
  std::chrono::milliseconds timeout{60000};

  void validate() const {
    if (!(temperature >= 0.0)) throw Error(Errc::InvalidArgument, "temperature must be >= 0");
    if (max_retries < 0) throw Error(Errc::InvalidArgument, "max_retries must be >= 0");
    if (endpoint_url.empty()) throw Error(Errc::InvalidArgument, "endpoint_url is empty");
  }
};

enum class ClientMode { Live, Record, Replay };

inline ClientMode client_mode_from_string(std::string_view s) {
  if (s == "live") return ClientMode::Live;
  if (s == "record") return ClientMode::Record;
  if (s == "replay") return ClientMode::Replay;
  throw Error(Errc::InvalidArgument, "unknown client mode '" + std::string(s) + "'");
}

struct ChatMessage {
  std::string role;
  std::string content;
};

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::InvalidArgument, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

inline nlohmann::json chat_request_body(const LlmAgentConfig& config, const std::vector<ChatMessage>& messages) {
  nlohmann::json body;
  body["model"] = config.model_name;
  body["temperature"] = config.temperature;
  body["n"] = 1;
  body["messages"] = nlohmann::json::array();
  for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  return body;
}

// nlohmann::json keeps object keys sorted, so dump() is canonical.
inline std::string request_hash(std::string_view tag, const nlohmann::json& body) {
  return sha256_hex(nlohmann::json{{"tag", tag}, {"request", body}}.dump());
}

// First choice's message content from a chat-completions response body.
inline std::string extract_content(std::string_view response_body) {
  auto j = nlohmann::json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::ParseError, "response is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::ParseError, "response has no choices[0].message.content");
  }
}

struct ClientOptions {
  ClientMode mode = ClientMode::Live;
  std::string fixture_path;
  std::size_t max_in_flight = 4;
};

class ChatClient {
 public:
  explicit ChatClient(ClientOptions options)
      : options_(std::move(options)), slots_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, options_.max_in_flight))) {
    if (options_.mode != ClientMode::Live) {
      if (options_.fixture_path.empty()) throw Error(Errc::InvalidArgument, "record/replay needs a fixture path");
      load_fixture();
    }
  }

  ClientMode mode() const noexcept { return options_.mode; }

  // Returns the raw response body. `tag` names the call site (agent, round,
  // phase, attempt) so identical prompts from different agents stay distinct.
  std::string complete(const LlmAgentConfig& config, const std::vector<ChatMessage>& messages,
                       std::string_view tag) {
    config.validate();
    const auto body = chat_request_body(config, messages);
    const auto hash = request_hash(tag, body);

    if (options_.mode == ClientMode::Replay) {
      std::lock_guard lock(mutex_);
      auto it = recorded_.find(hash);
      if (it == recorded_.end()) throw Error(Errc::FixtureMiss, "no recorded response for request " + hash);
      return it->second;
    }

    slots_.acquire();
    std::string response;
    try {
      response = post_with_retries(config, body.dump());
    } catch (...) {
      slots_.release();
      throw;
    }
    slots_.release();

    if (options_.mode == ClientMode::Record) append(hash, response);
    return response;
  }

  std::size_t fixture_size() const {
    std::lock_guard lock(mutex_);
    return recorded_.size();
  }

 private:
  struct Url {
    std::string scheme_host_port;
    std::string base_path;
  };

  static Url split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::InvalidArgument, "endpoint_url needs a scheme");
    const auto path_start = url.find('/', scheme_end + 3);
    Url out;
    out.scheme_host_port = url.substr(0, path_start);
    out.base_path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.base_path.empty() && out.base_path.back() == '/') out.base_path.pop_back();
    return out;
  }

  std::string post_once(const LlmAgentConfig& config, const std::string& payload) {
    const auto url = split_url(config.endpoint_url);
    httplib::Client cli(url.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (const char* key = std::getenv(config.api_key_env_var_name.c_str()); key && *key) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    auto res = cli.Post(url.base_path + "/chat/completions", headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read) {
        throw Error(Errc::Timeout, "request to " + url.scheme_host_port + " timed out");
      }
      throw HttpError(0, httplib::to_string(err));
    }
    if (res->status != 200) throw HttpError(res->status, "chat completion failed");
    return res->body;
  }

  std::string post_with_retries(const LlmAgentConfig& config, const std::string& payload) {
    for (int attempt = 0;; ++attempt) {
      try {
        return post_once(config, payload);
      } catch (const HttpError& e) {
        const bool transient = e.status() == 0 || e.status() == 429 || e.status() >= 500;
        if (!transient || attempt >= config.max_retries) throw;
      } catch (const Error& e) {
        if (e.code() != Errc::Timeout || attempt >= config.max_retries) throw;
      }
    }
  }

  void load_fixture() {
    std::ifstream in(options_.fixture_path);
    if (!in) {
      if (options_.mode == ClientMode::Replay) {
        throw Error(Errc::FixtureMiss, "fixture file not found: " + options_.fixture_path);
      }
      return;
    }
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("hash") || !j.contains("response")) {
        throw Error(Errc::ParseError, "bad fixture line in " + options_.fixture_path);
      }
      // First record wins, matching what a replay would have served.
      recorded_.emplace(j["hash"].get<std::string>(), j["response"].get<std::string>());
    }
  }

  void append(const std::string& hash, const std::string& response) {
    std::lock_guard lock(mutex_);
    if (!recorded_.emplace(hash, response).second) return;
    std::ofstream out(options_.fixture_path, std::ios::app);
    if (!out) throw Error(Errc::InvalidArgument, "cannot write fixture " + options_.fixture_path);
    out << nlohmann::json{{"hash", hash}, {"response", response}}.dump() << '\n';
  }

  ClientOptions options_;
  std::counting_semaphore<> slots_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, std::string> recorded_;
};

// Converts visible rounds into speaker blocks. Agents are numbered from 1 in
// prompts; the reader's own turns are labelled "You".
inline std::vector<HistoryEntry> history_entries(std::span<const RoundSnapshot> history, std::size_t self,
                                                 std::size_t current_round,
                                                 const std::optional<std::string>& own_argument) {
  std::vector<HistoryEntry> out;
  for (const auto& r : history) {
    for (std::size_t i = 0; i < r.arguments.size(); ++i) {
      if (r.arguments[i].empty()) continue;
      out.push_back({r.round, i == self ? "You" : "Agent " + std::to_string(i + 1), r.arguments[i]});
    }
  }
  if (own_argument && !own_argument->empty()) out.push_back({current_round, "You", *own_argument});
  return out;
}

// Receives no oracle knowledge: its peer forecast is whatever the model
// commits to.
class LlmAgent final : public AgentModel {
 public:
  LlmAgent(std::shared_ptr<ChatClient> client, LlmAgentConfig config, Question question)
      : client_(std::move(client)), config_(std::move(config)), question_(std::move(question)) {
    config_.validate();
  }

  AgentKind kind() const override { return AgentKind::LlmBacked; }
  const LlmAgentConfig& config() const noexcept { return config_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  // A commitment with no discussion yet; only the self belief is kept.
  BeliefDistribution initial_belief(const AgentContext& ctx) override {
    return commit_impl(ctx, {}, "init").self_belief;
  }

  std::string argue(const AgentContext& ctx) override {
    const auto history = history_entries(ctx.history, ctx.agent, ctx.round, std::nullopt);
    return extract_content(call(Phase::Argue, history, tag(ctx, "argue")));
  }

  Commitment commit(const AgentContext& ctx) override {
    return commit_impl(ctx, history_entries(ctx.history, ctx.agent, ctx.round, ctx.own_argument), "commit");
  }

 private:
  Commitment commit_impl(const AgentContext& ctx, const std::vector<HistoryEntry>& history, std::string_view phase) {
    const auto text = extract_content(call(Phase::Commit, history, tag(ctx, phase)));
    auto payload = parse_commit(text, *ctx.space);
    for (auto& w : payload.warnings) warnings_.push_back(std::move(w));
    return {payload.self_belief(), payload.peer_belief()};
  }

  std::string call(Phase phase, const std::vector<HistoryEntry>& history, const std::string& call_tag) {
    std::vector<ChatMessage> messages;
    messages.push_back({"system", config_.persona.system_line()});
    messages.push_back({"user", render_body(phase, question_.text, question_.options, history)});
    return client_->complete(config_, messages, call_tag);
  }

  // Retries of the same call get a fresh tag so record and replay line up.
  std::string tag(const AgentContext& ctx, std::string_view phase) {
    std::string base = "q=" + question_.id + "/a=" + std::to_string(ctx.agent) + "/r=" + std::to_string(ctx.round) +
                       "/" + std::string(phase);
    const auto attempt = attempts_[base]++;
    return base + "/" + std::to_string(attempt);
  }

  std::shared_ptr<ChatClient> client_;
  LlmAgentConfig config_;
  Question question_;
  std::unordered_map<std::string, std::size_t> attempts_;
  std::vector<std::string> warnings_;
};

struct HeterogeneousMix {
  double skeptic_fraction = 0.2;
  double generalist_temperature = 0.1;
  double skeptic_temperature = 0.6;
};

// Generalists first, skeptics in the last indices.
inline AgentList make_llm_agents(std::shared_ptr<ChatClient> client, const LlmAgentConfig& base,
                                 const Question& question, std::size_t n_agents, const HeterogeneousMix& mix = {}) {
  const auto n_skeptic = static_cast<std::size_t>(mix.skeptic_fraction * static_cast<double>(n_agents) + 0.5);
  AgentList agents;
  for (std::size_t i = 0; i < n_agents; ++i) {
    auto cfg = base;
    const bool skeptic = i >= n_agents - std::min(n_skeptic, n_agents);
    cfg.persona = skeptic ? Persona::skeptic() : Persona::generalist();
    cfg.temperature = skeptic ? mix.skeptic_temperature : mix.generalist_temperature;
    agents.push_back(std::make_unique<LlmAgent>(client, std::move(cfg), question));
  }
  return agents;
}

// One debate over `question` with a fresh panel of LLM agents.
inline Transcript run_llm_debate(const std::shared_ptr<ChatClient>& client, const LlmAgentConfig& base,
                                 const Question& question, std::size_t n_agents, const HeterogeneousMix& mix,
                                 const ProtocolConfig& protocol, std::uint64_t seed,
                                 const DebateOptions& options = {}) {
  auto agents = make_llm_agents(client, base, question, n_agents, mix);
  return run_debate(agents, question.space(), protocol, seed, options);
}

}  // namespace acemad
