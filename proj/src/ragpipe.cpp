#include "conceptrag/ragpipe.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include <json.hpp>

#include "conceptrag/text.hpp"

namespace conceptrag {

namespace {

using nlohmann::json;

constexpr std::string_view kFactHead = "Refer to the following facts to answer the question. Facts: ";
constexpr std::string_view kKeywordsInstruction = "Extract a few keywords from the following content.";
constexpr std::string_view kSummaryInstruction = "Generate a short summary of the following content.";

bool ends_sentence(std::string_view s) {
  const auto last = s.find_last_not_of(" \t\r\n");
  if (last == std::string_view::npos) return false;
  const char c = s[last];
  return c == '.' || c == '!' || c == '?';
}

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct PairContext {
  std::vector<std::string> contexts;
  std::string prompt;
  double compress_latency_ms = 0.0;
};

class Runner {
 public:
  Runner(const std::vector<QadPair>& pairs, CompressionMode mode, const LlmBackendSpec& backend,
         const DistillConfig& config, const AmrProvider& provider)
      : pairs_(pairs), mode_(mode), backend_(backend), config_(config), provider_(provider) {
    if (mode_.kind == CompressionMode::Kind::Concepts && config_.idf_scope == IdfScope::Corpus) {
      std::vector<std::string> docs;
      for (const auto& p : pairs_)
        for (const auto& d : p.documents) docs.push_back(d.text);
      if (!docs.empty()) corpus_idf_ = build_idf_index(docs);
    }
  }

  PipelineRecord run_one(std::size_t i) const {
    const QadPair& pair = pairs_[i];
    PipelineRecord rec;
    rec.pair = pair;
    rec.mode = to_string(mode_.kind);
    rec.backend = backend_.label();
    try {
      PairContext ctx = compress(pair, i);
      rec.contexts = std::move(ctx.contexts);
      rec.prompt = std::move(ctx.prompt);
      rec.compress_latency_ms = ctx.compress_latency_ms;
      LlmReply reply = query_llm(backend_, rec.prompt, pair.gold_answers);
      rec.raw_answer = std::move(reply.text);
      rec.latency_ms = reply.latency_ms;
    } catch (const BackendError& e) {
      rec.error = std::string("backend: ") + e.what();
      rec.backend_failure = true;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    return rec;
  }

 private:
  PairContext compress(const QadPair& pair, std::size_t pair_index) const {
    PairContext ctx;
    switch (mode_.kind) {
      case CompressionMode::Kind::Vanilla:
        for (const auto& d : pair.documents) ctx.contexts.push_back(d.text);
        ctx.prompt = build_fact_prompt_from_texts(ctx.contexts, pair.question);
        break;
      case CompressionMode::Kind::Concepts: {
        std::vector<ConceptSet> sets;
        std::optional<IdfIndex> local_idf;
        const IdfIndex* idf = nullptr;
        if (config_.idf_scope == IdfScope::Corpus && corpus_idf_) {
          idf = &*corpus_idf_;
        } else if (config_.idf_scope == IdfScope::Retrieved) {
          std::vector<std::string> docs;
          for (const auto& d : pair.documents) docs.push_back(d.text);
          local_idf = build_idf_index(docs);
          idf = &*local_idf;
        }
        for (std::size_t j = 0; j < pair.documents.size(); ++j) {
          const SupportDoc& doc = pair.documents[j];
          std::string amr;
          if (doc.amr) amr = *doc.amr;
          else if (provider_) amr = provider_(doc);
          else throw std::runtime_error("document " + std::to_string(j + 1) + " has no AMR and no parse client is configured");
          TraversalMode t = mode_.traversal;
          t.seed = t.seed + 1000003ULL * pair_index + j;
          ConceptSet set = distill_concepts(parse_amr(amr), doc.text, idf, t, config_);
          ctx.contexts.push_back(render_facts(set));
          sets.push_back(std::move(set));
        }
        ctx.prompt = build_fact_prompt(sets, pair.question);
        break;
      }
      case CompressionMode::Kind::KeywordsPrompt:
      case CompressionMode::Kind::SummaryPrompt: {
        const BaselineKind kind = mode_.kind == CompressionMode::Kind::KeywordsPrompt ? BaselineKind::Keywords
                                                                                      : BaselineKind::Summary;
        for (const auto& d : pair.documents) {
          LlmReply r = query_llm(backend_, build_baseline_prompt(kind, d.text));
          ctx.compress_latency_ms += r.latency_ms;
          ctx.contexts.push_back(trimmed(r.text));
        }
        ctx.prompt = build_fact_prompt_from_texts(ctx.contexts, pair.question);
        break;
      }
    }
    return ctx;
  }

  const std::vector<QadPair>& pairs_;
  CompressionMode mode_;
  const LlmBackendSpec& backend_;
  const DistillConfig& config_;
  const AmrProvider& provider_;
  std::optional<IdfIndex> corpus_idf_;
};

json doc_to_json(const SupportDoc& d) {
  json j{{"text", d.text}, {"hasanswer", d.hasanswer}};
  if (d.amr) j["amr"] = *d.amr;
  return j;
}

}  // namespace

std::string to_string(CompressionMode::Kind k) {
  switch (k) {
    case CompressionMode::Kind::Vanilla: return "vanilla";
    case CompressionMode::Kind::Concepts: return "concepts";
    case CompressionMode::Kind::KeywordsPrompt: return "keywords";
    case CompressionMode::Kind::SummaryPrompt: return "summary";
  }
  return "?";
}

CompressionMode::Kind parse_compression_kind(std::string_view s) {
  if (s == "vanilla") return CompressionMode::Kind::Vanilla;
  if (s == "concepts") return CompressionMode::Kind::Concepts;
  if (s == "keywords") return CompressionMode::Kind::KeywordsPrompt;
  if (s == "summary") return CompressionMode::Kind::SummaryPrompt;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "'");
}

std::string render_facts(const ConceptSet& set) {
  std::string out;
  for (std::size_t i = 0; i < set.concepts.size(); ++i) {
    if (i > 0) {
      const bool new_sentence =
          set.sentence_grouped && set.concepts[i].sentence_index != set.concepts[i - 1].sentence_index;
      out += new_sentence ? ". " : ", ";
    }
    out += set.concepts[i].text;
  }
  return out;
}

std::string build_fact_prompt(const std::vector<ConceptSet>& concepts, std::string_view question) {
  std::vector<std::string> texts;
  for (const auto& set : concepts)
    if (!set.concepts.empty()) texts.push_back(render_facts(set));
  if (texts.empty()) throw std::invalid_argument("fact prompt: no concepts survived distillation");
  return build_fact_prompt_from_texts(texts, question);
}

std::string build_fact_prompt_from_texts(const std::vector<std::string>& contexts, std::string_view question) {
  if (trimmed(question).empty()) throw std::invalid_argument("fact prompt: empty question");
  std::string facts;
  for (const auto& raw : contexts) {
    std::string c = trimmed(raw);
    if (c.empty()) continue;
    if (!facts.empty()) facts += ' ';
    facts += c;
    if (!ends_sentence(c)) facts += '.';
  }
  if (facts.empty()) throw std::invalid_argument("fact prompt: no facts");
  std::string out(kFactHead);
  out += facts;
  out += " Question: ";
  out += question;
  return out;
}

std::string build_baseline_prompt(BaselineKind kind, std::string_view doc) {
  if (doc.empty()) throw std::invalid_argument("baseline prompt: empty document");
  std::string out = "Below is an instruction that describes a task, paired with an input that provides content.\n";
  out += "### Instruction: {";
  out += kind == BaselineKind::Keywords ? kKeywordsInstruction : kSummaryInstruction;
  out += "}\n### Input: {";
  out += doc;
  out += "}\n### Response: ";
  return out;
}

std::vector<PipelineRecord> run_pipeline(const std::vector<QadPair>& pairs, CompressionMode mode,
                                         const LlmBackendSpec& backend, const DistillConfig& distill_config,
                                         const AmrProvider& amr_provider) {
  backend.validate();
  const Runner runner(pairs, mode, backend, distill_config, amr_provider);
  std::vector<PipelineRecord> out(pairs.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) out[i] = runner.run_one(i);
  };
  const std::size_t workers = std::min(backend.max_parallel, pairs.size());
  if (workers <= 1) {
    work();
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return out;
}

std::string record_to_json(const PipelineRecord& r) {
  json docs = json::array();
  for (const auto& d : r.pair.documents) docs.push_back(doc_to_json(d));
  json j{{"question", r.pair.question},
         {"answers", r.pair.gold_answers},
         {"k", r.k()},
         {"docs", std::move(docs)},
         {"mode", r.mode},
         {"backend", r.backend},
         {"contexts", r.contexts},
         {"prompt", r.prompt},
         {"answer", r.raw_answer},
         {"latency_ms", r.latency_ms},
         {"compress_latency_ms", r.compress_latency_ms},
         {"error", r.error ? json(*r.error) : json(nullptr)},
         {"backend_failure", r.backend_failure},
         {"correct", r.correct ? json(*r.correct) : json(nullptr)}};
  if (r.pair.s_pop) j["s_pop"] = *r.pair.s_pop;
  return j.dump();
}

PipelineRecord record_from_json(std::string_view json_line) {
  PipelineRecord r;
  try {
    const json j = json::parse(json_line);
    r.pair.question = j.at("question").get<std::string>();
    r.pair.gold_answers = j.at("answers").get<std::vector<std::string>>();
    if (j.contains("s_pop") && !j.at("s_pop").is_null()) r.pair.s_pop = j.at("s_pop").get<std::int64_t>();
    for (const auto& d : j.at("docs")) {
      SupportDoc doc{d.at("text").get<std::string>(), d.at("hasanswer").get<bool>(), std::nullopt};
      if (d.contains("amr") && d.at("amr").is_string()) doc.amr = d.at("amr").get<std::string>();
      r.pair.documents.push_back(std::move(doc));
    }
    r.mode = j.at("mode").get<std::string>();
    r.backend = j.at("backend").get<std::string>();
    r.contexts = j.at("contexts").get<std::vector<std::string>>();
    r.prompt = j.at("prompt").get<std::string>();
    r.raw_answer = j.at("answer").get<std::string>();
    r.latency_ms = j.at("latency_ms").get<double>();
    r.compress_latency_ms = j.value("compress_latency_ms", 0.0);
    if (j.contains("error") && !j.at("error").is_null()) r.error = j.at("error").get<std::string>();
    r.backend_failure = j.value("backend_failure", false);
    if (j.contains("correct") && !j.at("correct").is_null()) r.correct = j.at("correct").get<bool>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("record: ") + e.what());
  }
  return r;
}

}  // namespace conceptrag
