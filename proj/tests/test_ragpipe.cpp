#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "conceptrag/metrics.hpp"
#include "conceptrag/ragpipe.hpp"
#include "support/mock_server.hpp"

using namespace conceptrag;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string worked_example_doc() {
  std::string s = slurp(FIXTURE_DIR "/worked_example.txt");
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

ConceptSet set_of(std::vector<std::pair<std::string, int>> items, bool grouped = true) {
  ConceptSet s;
  for (auto& [text, sentence] : items) s.concepts.push_back({text, Provenance::Instance, sentence, {}, text});
  s.sentence_grouped = grouped;
  return s;
}

LlmBackendSpec stub(StubPolicy policy = StubPolicy::OracleSubstring) {
  LlmBackendSpec s;
  s.stub_policy = policy;
  return s;
}

LlmBackendSpec http(const std::string& url) {
  LlmBackendSpec s;
  s.kind = BackendKind::HttpChat;
  s.endpoint_url = url;
  s.model = "mock-7b";
  s.timeout = std::chrono::milliseconds(2000);
  s.retry_backoff = std::chrono::milliseconds(1);
  return s;
}

std::string chat_reply(const std::string& text) {
  return json{{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}}.dump();
}

QadPair a1_pair() {
  QadPair p;
  p.question = "Where is Alexander Rinnooy Kan from?";
  p.gold_answers = {"Amsterdam"};
  p.documents.push_back({worked_example_doc(), true, slurp(FIXTURE_DIR "/worked_example.amr")});
  return p;
}

BackendErrorKind error_kind(const LlmBackendSpec& spec) {
  try {
    query_llm(spec, "hello");
  } catch (const BackendError& e) {
    return e.kind();
  }
  FAIL("expected a BackendError");
  return BackendErrorKind::Connection;
}

}  // namespace

TEST_CASE("fact prompt for the worked example") {
  const auto set = distill_concepts(parse_amr(slurp(FIXTURE_DIR "/worked_example.amr")), worked_example_doc(), nullptr, {});
  CHECK(build_fact_prompt({set}, "Where is Alexander Rinnooy Kan from?") ==
        "Refer to the following facts to answer the question. Facts: Alexander Rinnooy Kan, Amsterdam. "
        "worked, mathematician, Spectrum Encyclopedia, 1972, 1973. Question: Where is Alexander Rinnooy Kan from?");
}

TEST_CASE("fact prompt joining") {
  CHECK(build_fact_prompt({set_of({{"x", 1}})}, "q") ==
        "Refer to the following facts to answer the question. Facts: x. Question: q");
  CHECK(build_fact_prompt({set_of({{"a", 1}, {"b", 1}}), set_of({{"c", 1}, {"d", 2}})}, "q") ==
        "Refer to the following facts to answer the question. Facts: a, b. c. d. Question: q");
  CHECK(build_fact_prompt({set_of({}), set_of({{"y", 1}})}, "q") ==
        "Refer to the following facts to answer the question. Facts: y. Question: q");
  CHECK(render_facts(set_of({{"a", 1}, {"b", 2}}, false)) == "a, b");
  CHECK(render_facts(set_of({{"a", 1}, {"b", 2}})) == "a. b");
  CHECK_THROWS_AS(build_fact_prompt({set_of({})}, "q"), std::invalid_argument);
  CHECK_THROWS_AS(build_fact_prompt({}, "q"), std::invalid_argument);
  CHECK_THROWS_AS(build_fact_prompt({set_of({{"x", 1}})}, " "), std::invalid_argument);
}

TEST_CASE("raw contexts keep their own sentence ends") {
  CHECK(build_fact_prompt_from_texts({"First doc.", "second doc"}, "q") ==
        "Refer to the following facts to answer the question. Facts: First doc. second doc. Question: q");
}

TEST_CASE("baseline prompts") {
  CHECK(build_baseline_prompt(BaselineKind::Keywords, "abc") ==
        "Below is an instruction that describes a task, paired with an input that provides content.\n"
        "### Instruction: {Extract a few keywords from the following content.}\n"
        "### Input: {abc}\n### Response: ");
  CHECK(build_baseline_prompt(BaselineKind::Summary, "abc").find(
            "Generate a short summary of the following content.") != std::string::npos);
  CHECK_THROWS_AS(build_baseline_prompt(BaselineKind::Summary, ""), std::invalid_argument);
}

TEST_CASE("stub policies") {
  const std::string prompt = build_fact_prompt_from_texts({"Kan lived in Amsterdam"}, "Where?");
  CHECK(query_llm(stub(), prompt, {"Amsterdam"}).text == "Amsterdam");
  CHECK(query_llm(stub(), prompt, {"Rotterdam"}).text == "unknown");
  CHECK(query_llm(stub(), prompt, {"Rotterdam", "Amsterdam"}).text == "Amsterdam");
  CHECK(query_llm(stub(StubPolicy::EchoFacts), prompt).text == "Kan lived in Amsterdam");
  CHECK(query_llm(stub(StubPolicy::EchoFacts), build_baseline_prompt(BaselineKind::Keywords, "a b c")).text ==
        "a b c");
  CHECK(query_llm(stub(StubPolicy::EchoFacts), "free text").text == "free text");
  CHECK(stub().label() == "stub:oracle-substring");
}

TEST_CASE("chat-completions client against a mock server") {
  testsrv::MockServer mock;
  json seen;
  std::string auth;
  mock.server().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(chat_reply("Amsterdam"), "application/json");
  });
  mock.start();
  ::setenv("CONCEPTRAG_TEST_TOKEN", "s3cret", 1);
  auto spec = http(mock.url("/v1/chat/completions"));
  spec.token_env = "CONCEPTRAG_TEST_TOKEN";
  const LlmReply reply = query_llm(spec, "Where?");
  CHECK(reply.text == "Amsterdam");
  CHECK(reply.latency_ms > 0.0);
  CHECK(auth == "Bearer s3cret");
  CHECK(seen.at("model") == "mock-7b");
  CHECK(seen.at("messages").size() == 1);
  CHECK(seen.at("messages")[0].at("role") == "user");
  CHECK(seen.at("messages")[0].at("content") == "Where?");
  CHECK(seen.at("temperature") == 0.0);
  CHECK(seen.at("max_tokens") == 64);
  CHECK(spec.label() == "http:mock-7b");
  CHECK(backend_spec_to_json(spec).find("s3cret") == std::string::npos);
}

TEST_CASE("retryable failures are retried") {
  testsrv::MockServer mock;
  std::atomic<int> calls{0};
  mock.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
    if (calls++ < 2) {
      res.status = 503;
      return;
    }
    res.set_content(chat_reply("ok"), "application/json");
  });
  mock.start();
  auto spec = http(mock.url("/chat"));
  spec.max_retries = 2;
  CHECK(query_llm(spec, "x").text == "ok");
  CHECK(calls == 3);

  calls = 0;
  spec.max_retries = 1;
  try {
    query_llm(spec, "x");
    FAIL("expected failure");
  } catch (const BackendError& e) {
    CHECK(e.kind() == BackendErrorKind::HttpStatus);
    CHECK(e.status() == 503);
    CHECK(e.retryable());
  }
  CHECK(calls == 2);
}

TEST_CASE("client errors are distinct and not retried") {
  testsrv::MockServer mock;
  std::atomic<int> calls{0};
  mock.server().Post("/bad", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 400;
  });
  mock.server().Post("/garbled", [&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content("{\"choices\": []}", "application/json");
  });
  mock.server().Post("/slow", [&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(600));
    res.set_content(chat_reply("late"), "application/json");
  });
  mock.start();

  auto bad = http(mock.url("/bad"));
  CHECK(error_kind(bad) == BackendErrorKind::HttpStatus);
  CHECK(calls == 1);

  calls = 0;
  CHECK(error_kind(http(mock.url("/garbled"))) == BackendErrorKind::MalformedBody);
  CHECK(calls == 1);

  auto slow = http(mock.url("/slow"));
  slow.timeout = std::chrono::milliseconds(150);
  slow.max_retries = 0;
  CHECK(error_kind(slow) == BackendErrorKind::Timeout);

  mock.stop();
  auto gone = http(mock.url("/bad"));
  gone.max_retries = 0;
  CHECK(error_kind(gone) == BackendErrorKind::Connection);
}

TEST_CASE("backend spec JSON") {
  const auto spec = backend_spec_from_json(
      R"({"kind": "http", "url": "https://llm.example/v1/chat/completions", "model": "m",
          "token_env": "API_KEY", "timeout_ms": 5000, "max_parallel": 4, "max_retries": 3})");
  CHECK(spec.kind == BackendKind::HttpChat);
  CHECK(spec.max_parallel == 4);
  CHECK(spec.timeout == std::chrono::milliseconds(5000));
  const auto again = backend_spec_from_json(backend_spec_to_json(spec));
  CHECK(again.endpoint_url == spec.endpoint_url);
  CHECK(again.token_env == "API_KEY");
  CHECK(backend_spec_from_json(R"({"stub_policy": "echo-facts"})").stub_policy == StubPolicy::EchoFacts);
  CHECK_THROWS_AS(backend_spec_from_json(R"({"kind": "http"})"), std::invalid_argument);
  CHECK_THROWS_AS(backend_spec_from_json(R"({"kind": "grpc"})"), std::invalid_argument);
  CHECK_THROWS_AS(backend_spec_from_json(R"({"max_parallel": 0})"), std::invalid_argument);
  CHECK_THROWS_AS(backend_spec_from_json(R"({"stub_policy": "psychic"})"), std::invalid_argument);
}

TEST_CASE("pipeline in concepts mode answers from distilled facts") {
  auto records = run_pipeline({a1_pair()}, CompressionMode::concepts(), stub());
  REQUIRE(records.size() == 1);
  CHECK_FALSE(records[0].error.has_value());
  CHECK(records[0].raw_answer == "Amsterdam");
  CHECK(records[0].contexts ==
        std::vector<std::string>{"Alexander Rinnooy Kan, Amsterdam. worked, mathematician, Spectrum Encyclopedia, 1972, 1973"});
  score_records(records);
  CHECK(records[0].correct == true);
  CHECK(records[0].mode == "concepts");
}

TEST_CASE("vanilla prompt carries the full document") {
  const auto records = run_pipeline({a1_pair()}, CompressionMode::vanilla(), stub());
  CHECK(records[0].prompt.find(worked_example_doc()) != std::string::npos);
  CHECK(records[0].contexts == std::vector<std::string>{worked_example_doc()});
}

TEST_CASE("two-pass modes compress each document first") {
  QadPair p = a1_pair();
  p.documents.push_back({"A second document about Amsterdam.", true, std::nullopt});
  const auto records = run_pipeline({p}, CompressionMode::keywords(), stub(StubPolicy::EchoFacts));
  REQUIRE_FALSE(records[0].error.has_value());
  CHECK(records[0].contexts == std::vector<std::string>{worked_example_doc(), "A second document about Amsterdam."});
  CHECK(records[0].prompt == build_fact_prompt_from_texts(records[0].contexts, p.question));
  CHECK(records[0].mode == "keywords");
}

TEST_CASE("missing AMR is a per-pair failure unless a parse client supplies it") {
  QadPair bare = a1_pair();
  bare.documents[0].amr.reset();
  const auto records = run_pipeline({bare, a1_pair()}, CompressionMode::concepts(), stub());
  REQUIRE(records.size() == 2);
  CHECK(records[0].error.has_value());
  CHECK_FALSE(records[0].backend_failure);
  CHECK_FALSE(records[1].error.has_value());

  std::atomic<int> asked{0};
  AmrProvider provider = [&](const SupportDoc&) {
    ++asked;
    return slurp(FIXTURE_DIR "/worked_example.amr");
  };
  const auto fixed = run_pipeline({bare}, CompressionMode::concepts(), stub(), {}, provider);
  CHECK_FALSE(fixed[0].error.has_value());
  CHECK(asked == 1);
}

TEST_CASE("parse client talks to an AMR service") {
  testsrv::MockServer mock;
  std::string got;
  mock.server().Post("/parse", [&](const httplib::Request& req, httplib::Response& res) {
    got = json::parse(req.body).at("text");
    res.set_content(json{{"amr", slurp(FIXTURE_DIR "/worked_example.amr")}}.dump(), "application/json");
  });
  mock.start();
  QadPair bare = a1_pair();
  bare.documents[0].amr.reset();
  const auto records = run_pipeline({bare}, CompressionMode::concepts(), stub(), {},
                                    http_parse_client(mock.url("/parse"), std::chrono::milliseconds(2000)));
  CHECK_FALSE(records[0].error.has_value());
  CHECK(got == worked_example_doc());
  CHECK(records[0].raw_answer == "Amsterdam");
}

TEST_CASE("backend outage is recorded per pair") {
  auto spec = http("http://127.0.0.1:1/v1/chat/completions");
  spec.max_retries = 0;
  const auto records = run_pipeline({a1_pair(), a1_pair()}, CompressionMode::vanilla(), spec);
  REQUIRE(records.size() == 2);
  for (const auto& r : records) {
    CHECK(r.error.has_value());
    CHECK(r.backend_failure);
  }
}

TEST_CASE("parallel runs keep input order") {
  std::vector<QadPair> pairs;
  for (int i = 0; i < 10; ++i) {
    QadPair p;
    p.question = "Question " + std::to_string(i) + "?";
    p.gold_answers = {"answer" + std::to_string(i)};
    p.documents.push_back({"The text holds answer" + std::to_string(i) + " somewhere.", true, std::nullopt});
    pairs.push_back(std::move(p));
  }
  auto spec = stub();
  spec.max_parallel = 4;
  spec.stub_max_delay = std::chrono::milliseconds(40);
  const auto records = run_pipeline(pairs, CompressionMode::vanilla(), spec);
  REQUIRE(records.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    CHECK(records[i].pair.question == pairs[i].question);
    CHECK(records[i].raw_answer == pairs[i].gold_answers[0]);
  }
}

TEST_CASE("prompts are deterministic and independent of the backend") {
  const auto pairs = parse_dataset(slurp(FIXTURE_DIR "/synthetic_qad.jsonl"));
  const auto mode = CompressionMode::concepts(TraversalMode::local_random(5));
  const auto a = run_pipeline(pairs, mode, stub());
  const auto b = run_pipeline(pairs, mode, stub(StubPolicy::EchoFacts));
  auto par = stub();
  par.max_parallel = 3;
  const auto c = run_pipeline(pairs, mode, par);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(a[i].prompt == b[i].prompt);
    CHECK(a[i].prompt == c[i].prompt);
    CHECK(a[i].contexts.size() == pairs[i].k());
  }
}

TEST_CASE("oracle stub accuracy equals the share of prompts holding an answer") {
  const auto pairs = parse_dataset(slurp(FIXTURE_DIR "/synthetic_qad.jsonl"));
  const auto config = load_distill_config(FIXTURE_DIR "/aggressive_stoplist.json");
  auto records = run_pipeline(pairs, CompressionMode::concepts(), stub(), config);
  score_records(records);
  std::size_t correct = 0, holding = 0;
  for (const auto& r : records) {
    correct += *r.correct ? 1 : 0;
    bool has = false;
    for (const auto& g : r.pair.gold_answers) has = has || r.prompt.find(g) != std::string::npos;
    holding += has ? 1 : 0;
  }
  CHECK(correct == holding);
  CHECK(correct == 10);
}

TEST_CASE("records round-trip through JSON") {
  auto records = run_pipeline({a1_pair()}, CompressionMode::concepts(), stub());
  score_records(records);
  const PipelineRecord back = record_from_json(record_to_json(records[0]));
  CHECK(back.pair.question == records[0].pair.question);
  CHECK(back.pair.documents.size() == 1);
  CHECK(back.pair.documents[0].text == records[0].pair.documents[0].text);
  CHECK(back.contexts == records[0].contexts);
  CHECK(back.prompt == records[0].prompt);
  CHECK(back.raw_answer == records[0].raw_answer);
  CHECK(back.correct == records[0].correct);
  CHECK(back.latency_ms == records[0].latency_ms);
  CHECK_THROWS_AS(record_from_json("{}"), std::invalid_argument);
}

TEST_CASE("mode names") {
  CHECK(parse_compression_kind("summary") == CompressionMode::Kind::SummaryPrompt);
  CHECK(to_string(CompressionMode::Kind::KeywordsPrompt) == "keywords");
  CHECK_THROWS_AS(parse_compression_kind("selcon"), std::invalid_argument);
}
