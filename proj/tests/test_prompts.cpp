#include <catch_amalgamated.hpp>

#include <sstream>

#include "acemad/prompts.hpp"
#include "commit_corpus.hpp"

using namespace acemad;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::EndsWith;
using Catch::Matchers::StartsWith;

namespace {

const std::vector<std::string> kOptions{"Paris", "Lyon", "Marseille"};

}  // namespace

TEST_CASE("argue prompt layout") {
  const auto body = render_body(Phase::Argue, "Capital of France?", kOptions, {});
  CHECK(body ==
        "Question: Capital of France?\n\nOptions:\nA. Paris\nB. Lyon\nC. Marseille\n\nConversation History:\n"
        "(no prior discussion)\n\n"
        "Please provide a concise argument for what you believe is the correct answer.\n"
        "Do NOT output JSON here. Just natural language debate.");
  CHECK(render_body(Phase::Argue, "Capital of France?", kOptions, {}) == body);
}

TEST_CASE("commit prompt layout") {
  const std::vector<HistoryEntry> history{{1, "Agent 2", "It is Lyon."}, {1, "You", "It is Paris."}};
  const auto body = render_body(Phase::Commit, "Capital of France?", kOptions, history);
  CHECK_THAT(body, StartsWith("Question: Capital of France?\nOptions:\nA. Paris"));
  CHECK_THAT(body, ContainsSubstring("[Round 1] Agent 2:\nIt is Lyon.\n\n[Round 1] You:\nIt is Paris."));
  CHECK_THAT(body, ContainsSubstring("Predict the AVERAGE probability distribution of the OTHER agents"));
  CHECK_THAT(body, EndsWith("\"peer_prediction\": {\"A\": 0.3, ...}\n}"));
  CHECK_THAT(body, !ContainsSubstring("{{"));
  CHECK_THROWS_AS(render_body(Phase::Commit, "q", {}, {}), Error);
}

TEST_CASE("persona lines") {
  const auto skeptic = render_prompt(Phase::Argue, "q", kOptions, {}, Persona::skeptic());
  CHECK_THAT(skeptic, StartsWith("You are a strict skeptic. You actively look for common misconceptions and logical "
                                 "traps. You suspect the majority might be wrong.\n\nQuestion: q"));
  CHECK_THAT(render_prompt(Phase::Argue, "q", kOptions, {}, Persona::generalist()),
             StartsWith("You are a helpful assistant. You trust common knowledge and consensus.\n\n"));
  CHECK(Persona::custom("Be brief.").system_line() == "Be brief.");
  CHECK(Persona::skeptic().name() == "Skeptic");
}

TEST_CASE("commit corpus") {
  const auto cases = corpus::load(std::string(ACEMAD_FIXTURE_DIR) + "/commit_corpus.jsonl");
  REQUIRE(cases.size() >= 10);
  for (const auto& c : cases) {
    INFO(c.name);
    CHECK(corpus::check(c).empty());
  }
}

TEST_CASE("wrapped and bare JSON parse identically") {
  const auto space = AnswerSpace::letters(3);
  const std::string bare =
      R"({"self_prob": {"A": 0.7, "B": 0.2, "C": 0.1}, "peer_prediction": {"A": 0.2, "B": 0.7, "C": 0.1}})";
  const auto a = parse_commit(bare, space);
  const auto b = parse_commit("Sure.\n```json\n" + bare + "\n```\n", space);
  CHECK(a.self_prob == b.self_prob);
  CHECK(a.peer_prediction == b.peer_prediction);
  CHECK(a.warnings.empty());
}

TEST_CASE("renormalized commitments sum to one") {
  const auto p = parse_commit(R"({"self_prob": {"A": 0.5, "B": 0.48}, "peer_prediction": {"A": 0.3, "B": 0.7}})",
                              AnswerSpace::letters(2));
  CHECK(p.self_prob[0].second + p.self_prob[1].second == Catch::Approx(1.0).epsilon(1e-15));
  CHECK(p.self_prob[0].second == 0.5 / 0.98);
}

TEST_CASE("commit_to_json round-trips") {
  const auto space = AnswerSpace::letters(4);
  const auto p = parse_commit(
      R"({"self_prob": {"A": 0.125, "B": 0.375, "C": 0.25, "D": 0.25}, "peer_prediction": {"A": 1, "B": 0, "C": 0, "D": 0}})",
      space);
  const auto text = commit_to_json(p);
  CHECK(text ==
        R"({"self_prob":{"A":0.125,"B":0.375,"C":0.25,"D":0.25},"peer_prediction":{"A":1.0,"B":0.0,"C":0.0,"D":0.0}})");
  const auto again = parse_commit(text, space);
  CHECK(again.self_prob == p.self_prob);
  CHECK(again.peer_prediction == p.peer_prediction);
}

TEST_CASE("question ingestion") {
  std::istringstream in(
      R"({"id": "q1", "question": "2+2?", "options": ["3", "4"], "answer_index": 1})"
      "\n\n"
      R"({"id": 7, "question": "Sky?", "options": ["blue", "green", "red"]})"
      "\n");
  const auto qs = read_questions(in);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].space().truth_index() == 1u);
  CHECK(qs[1].id == "7");
  CHECK_FALSE(qs[1].answer_index);
  CHECK(qs[1].space().size() == 3);

  for (const char* bad : {R"({"id": "x", "question": "q", "options": ["only"]})",
                          R"({"id": "x", "question": "q", "options": ["a", "b"], "answer_index": 2})",
                          R"({"id": "x", "options": ["a", "b"]})", "not json"}) {
    std::istringstream one(bad);
    try {
      read_questions(one);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.code() == Errc::ParseError);
    }
  }
}
