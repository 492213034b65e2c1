#pragma once

// Prompt assembly, LLM backends, and the per-pair pipeline
//   question -> (supporting docs, given) -> compressed context -> answer.

#include <chrono>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conceptrag/corpus.hpp"
#include "conceptrag/distill.hpp"

namespace conceptrag {

enum class BackendKind { HttpChat, Stub };

/// EchoFacts returns the context segment of the prompt. OracleSubstring
/// returns the first gold answer that occurs verbatim in the prompt, else
/// "unknown".
enum class StubPolicy { EchoFacts, OracleSubstring };

struct LlmBackendSpec {
  BackendKind kind = BackendKind::Stub;
  std::string endpoint_url;  // full chat-completions URL
  std::string model;
  std::string token_env;  // name of the env var holding the bearer token
  StubPolicy stub_policy = StubPolicy::OracleSubstring;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel = 1;
  int max_retries = 2;
  std::chrono::milliseconds retry_backoff{200};
  int max_tokens = 64;
  double temperature = 0.0;
  /// Stub only: each call sleeps a prompt-derived pseudo-random 0..max.
  std::chrono::milliseconds stub_max_delay{0};

  /// "stub:oracle-substring", "http:<model>".
  std::string label() const;
  /// Throws std::invalid_argument.
  void validate() const;
};

LlmBackendSpec backend_spec_from_json(std::string_view json_text);
LlmBackendSpec load_backend_spec(const std::filesystem::path& path);
/// Never contains a token, only the env var name.
std::string backend_spec_to_json(const LlmBackendSpec& spec);

enum class BackendErrorKind { Timeout, Connection, HttpStatus, MalformedBody };

class BackendError : public std::runtime_error {
 public:
  BackendError(BackendErrorKind kind, const std::string& what, bool retryable, int status = 0)
      : std::runtime_error(what), kind_(kind), retryable_(retryable), status_(status) {}
  BackendErrorKind kind() const noexcept { return kind_; }
  bool retryable() const noexcept { return retryable_; }
  int status() const noexcept { return status_; }

 private:
  BackendErrorKind kind_;
  bool retryable_;
  int status_;
};

struct LlmReply {
  std::string text;
  double latency_ms = 0.0;
};

/// One fresh single-turn request. Retryable failures are retried up to
/// `max_retries` times. `gold` is only read by the OracleSubstring stub.
LlmReply query_llm(const LlmBackendSpec& backend, std::string_view prompt,
                   const std::vector<std::string>& gold = {});

struct CompressionMode {
  enum class Kind { Vanilla, Concepts, KeywordsPrompt, SummaryPrompt };
  Kind kind = Kind::Vanilla;
  TraversalMode traversal;  // Concepts only

  static CompressionMode vanilla() { return {}; }
  static CompressionMode concepts(TraversalMode t = {}) { return {Kind::Concepts, t}; }
  static CompressionMode keywords() { return {Kind::KeywordsPrompt, {}}; }
  static CompressionMode summary() { return {Kind::SummaryPrompt, {}}; }
};

/// "vanilla", "concepts", "keywords", "summary".
std::string to_string(CompressionMode::Kind k);
CompressionMode::Kind parse_compression_kind(std::string_view s);

/// Concepts of one document: ", " inside a sentence, ". " between sentences.
std::string render_facts(const ConceptSet& set);

/// "Refer to the following facts to answer the question. Facts: <C>. Question: <Q>"
/// with documents joined by a single space. Documents that distilled to
/// nothing are skipped. Throws std::invalid_argument if there are no facts
/// at all or the question is empty.
std::string build_fact_prompt(const std::vector<ConceptSet>& concepts, std::string_view question);

/// Same template over already-compressed (or raw) context strings. No extra
/// period is inserted when the context already ends a sentence.
std::string build_fact_prompt_from_texts(const std::vector<std::string>& contexts,
                                         std::string_view question);

enum class BaselineKind { Keywords, Summary };

std::string build_baseline_prompt(BaselineKind kind, std::string_view doc);

struct PipelineRecord {
  QadPair pair;
  std::string mode;
  std::string backend;
  /// Per-document context actually placed in the prompt.
  std::vector<std::string> contexts;
  std::string prompt;
  std::string raw_answer;
  double latency_ms = 0.0;           // answering call
  double compress_latency_ms = 0.0;  // keyword/summary pre-pass, if any
  std::optional<std::string> error;
  /// The error came from the LLM backend or the AMR parse client.
  bool backend_failure = false;
  /// Set by score_records.
  std::optional<bool> correct;

  std::size_t k() const { return pair.k(); }
};

/// Supplies PENMAN text for a document that has no inline AMR.
using AmrProvider = std::function<std::string(const SupportDoc&)>;

/// POSTs {"text": doc} to `url` and reads the "amr" field of the reply.
AmrProvider http_parse_client(std::string url, std::chrono::milliseconds timeout);

/// Records come back in input order. Per-pair failures land in
/// `PipelineRecord::error`. In Concepts mode document j of pair i is walked
/// with seed `traversal.seed + 1000003 * i + j` so random modes differ per
/// document yet stay reproducible. IDF statistics follow
/// `distill_config.idf_scope`: the pair's own documents or every document of
/// `pairs`.
std::vector<PipelineRecord> run_pipeline(const std::vector<QadPair>& pairs, CompressionMode mode,
                                         const LlmBackendSpec& backend,
                                         const DistillConfig& distill_config = {},
                                         const AmrProvider& amr_provider = {});

std::string record_to_json(const PipelineRecord& record);
PipelineRecord record_from_json(std::string_view json_line);

}  // namespace conceptrag
