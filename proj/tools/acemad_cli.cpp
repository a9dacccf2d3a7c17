// acemad: run debates, property suites and parameter sweeps.
//
//   acemad simulate CONFIG [--seed S] [--trials N] --out DIR
//   acemad verify [--suite NAME] [--trials N] [--seed S]
//   acemad sweep CONFIG [--workers W] --out-dir DIR
//
// Exit codes: 0 success, 1 a verify check did not pass, 2 bad config or
// arguments, 3 runtime failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "acemad/analysis.hpp"
#include "acemad/config.hpp"
#include "acemad/llm_bridge.hpp"
#include "acemad/sweep.hpp"
#include "acemad/transcript_io.hpp"
#include "acemad/verification.hpp"

namespace fs = std::filesystem;
using namespace acemad;

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

bool is_config_error(Errc code) {
  return code == Errc::ParseError || code == Errc::InvalidSpec || code == Errc::ConfigMismatch;
}

std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

std::string row(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? " " : "") + number(xs[i]);
  return out;
}

void write_summary(std::ostream& out, std::size_t trial, const Transcript& t,
                   const std::vector<std::size_t>& truth_holders) {
  const auto& space = t.answer_space;
  out << "trial " << trial << "  protocol " << to_string(t.protocol);
  if (space.truth_index()) out << "  truth " << space.label(*space.truth_index());
  out << "  decision " << space.label(t.final_decision);
  if (space.truth_index()) out << (t.final_decision == *space.truth_index() ? "  correct" : "  wrong");
  out << '\n';

  const std::size_t n = t.rounds.empty() ? 0 : t.rounds.front().agent_count();
  auto share = [&](const std::vector<double>& w) {
    double s = 0.0;
    for (auto i : truth_holders) s += w.at(i);
    return s;
  };
  const bool has_holders = !truth_holders.empty() && n > 0;
  if (t.mu_series) out << "  round 0  mu " << number(t.mu_series->front());
  else out << "  round 0";
  if (has_holders) out << "  alpha_E " << number(static_cast<double>(truth_holders.size()) / static_cast<double>(n));
  out << '\n';
  for (const auto& r : t.rounds) {
    out << "  round " << r.round;
    if (t.mu_series) out << "  mu " << number((*t.mu_series)[r.round]);
    if (has_holders) out << "  alpha_E " << number(share(r.weights_after));
    out << "\n    scores  " << row(r.scores) << "\n    weights " << row(r.weights_after) << '\n';
  }
}

struct Outputs {
  std::ofstream transcripts;
  std::ofstream summary;
};

Outputs open_outputs(const fs::path& dir) {
  fs::create_directories(dir);
  Outputs o{std::ofstream(dir / "transcripts.jsonl", std::ios::binary | std::ios::trunc),
            std::ofstream(dir / "summary.txt", std::ios::binary | std::ios::trunc)};
  if (!o.transcripts || !o.summary) throw Error(Errc::InvalidArgument, "cannot write to " + dir.string());
  return o;
}

void emit(Outputs& o, std::size_t trial, const Transcript& t, const std::vector<std::size_t>& truth_holders) {
  o.transcripts << serialize_transcript(t) << '\n';
  std::ostringstream text;
  write_summary(text, trial, t, truth_holders);
  o.summary << text.str();
  std::cout << text.str();
}

int cmd_simulate(const std::string& config_path, std::optional<std::uint64_t> seed,
                 std::optional<std::size_t> trials, const std::string& out_dir) {
  auto config = load_config(config_path);
  if (seed) config.seed = *seed;
  if (trials) config.trials = *trials;
  auto outputs = open_outputs(out_dir);

  if (config.agent_mode == AgentMode::Synthetic) {
    for (std::size_t i = 0; i < config.trials; ++i) {
      const auto run = run_trial_transcript(config.scenario, config.protocol, i, config.seed);
      emit(outputs, i, run.transcript, run.truth_holders);
    }
    return kOk;
  }

  if (config.llm.questions_path.empty()) throw Error(Errc::ParseError, "llm.questions is required in llm mode");
  std::ifstream qin(config.llm.questions_path);
  if (!qin) throw Error(Errc::ParseError, "cannot open questions file " + config.llm.questions_path);
  const auto questions = read_questions(qin);
  auto client = std::make_shared<ChatClient>(
      ClientOptions{config.llm.mode, config.llm.fixture_path, config.llm.max_in_flight});
  const std::size_t count = std::min(config.trials, questions.size());
  for (std::size_t i = 0; i < count; ++i) {
    const auto& q = questions[i];
    const auto transcript = run_llm_debate(client, config.llm.agent, q, config.scenario.n_agents, config.llm.mix,
                                           config.protocol, derive_seed(config.seed, i));
    emit(outputs, i, transcript, {});
  }
  return kOk;
}

int cmd_verify(const std::string& suite, std::optional<std::size_t> trials, std::uint64_t seed) {
  const auto verdicts = run_suite(suite, trials, seed);
  for (const auto& v : verdicts) std::cout << to_string(v.status) << "  " << v.check << "  " << v.detail << '\n';
  return all_pass(verdicts) ? kOk : kCheckFailed;
}

int cmd_sweep(const std::string& config_path, std::size_t workers, const std::string& out_dir) {
  const auto config = load_config(config_path);
  const auto summaries = run_sweep(config, workers);
  write_sweep_outputs(out_dir, config, summaries);
  std::cout << summaries.size() << " cells written to " << out_dir << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debate protocols with peer-prediction scoring and weight updates"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;

  auto* simulate = app.add_subcommand("simulate", "Run the configured debate and write transcripts");
  simulate->add_option("config", config_path, "Config file")->required();
  simulate->add_option("--seed", seed, "Base seed (overrides the config)");
  simulate->add_option("--trials", trials, "Number of debates (overrides the config)");
  simulate->add_option("--out", out_dir, "Output directory")->required();

  std::string suite = "all";
  std::uint64_t verify_seed = 0;
  auto* verify = app.add_subcommand("verify", "Run property suites");
  verify->add_option("--suite", suite, "Suite name")
      ->check(CLI::IsMember({"martingale", "separation", "drift", "blackwell", "convergence", "all"}));
  verify->add_option("--trials", trials, "Trials per check (defaults per suite)");
  verify->add_option("--seed", verify_seed, "Base seed");

  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Run a parameter grid and write summary tables");
  sweep->add_option("config", config_path, "Config file")->required();
  sweep->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out-dir", out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(config_path, seed, trials, out_dir);
    if (*verify) return cmd_verify(suite, trials, verify_seed);
    if (*sweep) return cmd_sweep(config_path, workers, out_dir);
  } catch (const Error& e) {
    std::cerr << "acemad: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "acemad: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kConfigError;
}
