#pragma once

// Concept distillation: AMR graph + source document -> ordered concepts.
//
// The walk goes sentence by sentence in depth-first order. Name, wiki and
// date-entity nodes are collected in a pending buffer and flushed as
// consolidated concepts when the next ordinary node arrives or the sentence
// ends; ordinary nodes contribute their instance label. The raw list is then
// filtered (canonical entity-type nodes, pronouns, frequent terms), stripped
// of sense suffixes, and finally mapped back onto the surface words of the
// source document.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conceptrag/penman.hpp"

namespace conceptrag {

class DistillError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Provenance { Instance, Name, Wiki, Date };

std::string_view to_string(Provenance p);

struct SourceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const SourceSpan&) const = default;
};

struct Concept {
  std::string text;
  Provenance provenance = Provenance::Instance;
  int sentence_index = 1;
  std::optional<SourceSpan> source_span;
  /// Instance label of the node the concept came from ("work-01", "name",
  /// "date-entity", the entity type for wiki concepts).
  std::string origin;

  bool operator==(const Concept&) const = default;
};

struct ConceptSet {
  std::vector<Concept> concepts;
  std::string source_doc;
  /// False when the traversal mixed sentences (global random order), in
  /// which case sentence groups carry no meaning for rendering.
  bool sentence_grouped = true;

  std::vector<std::string> texts() const;
  std::size_t word_count() const;
};

/// Document frequencies of normalized terms.
class IdfIndex {
 public:
  IdfIndex() = default;
  IdfIndex(std::size_t doc_count, std::map<std::string, std::size_t> term_doc_freq);

  std::size_t doc_count() const { return doc_count_; }
  const std::map<std::string, std::size_t>& term_doc_freq() const { return freq_; }
  std::size_t doc_freq(const std::string& term) const;
  /// doc_freq / doc_count, 0 for unseen terms.
  double doc_fraction(const std::string& term) const;

 private:
  std::size_t doc_count_ = 0;
  std::map<std::string, std::size_t> freq_;
};

/// Throws std::invalid_argument on an empty corpus.
IdfIndex build_idf_index(const std::vector<std::string>& docs);

struct TraversalMode {
  enum class Kind { Dfs, GlobalRandom, LocalRandom };
  Kind kind = Kind::Dfs;
  std::uint64_t seed = 0;

  static TraversalMode dfs() { return {}; }
  static TraversalMode global_random(std::uint64_t seed) { return {Kind::GlobalRandom, seed}; }
  static TraversalMode local_random(std::uint64_t seed) { return {Kind::LocalRandom, seed}; }

  bool operator==(const TraversalMode&) const = default;
};

std::string to_string(TraversalMode::Kind k);
/// "dfs", "global-random", "local-random". Throws std::invalid_argument.
TraversalMode::Kind parse_traversal_kind(std::string_view s);

/// Which documents feed the IDF filter when distilling inside a pipeline run.
enum class IdfScope { None, Retrieved, Corpus };

std::string to_string(IdfScope s);
IdfScope parse_idf_scope(std::string_view s);

/// Canonical AMR node labels dropped from the concept list: entity types,
/// structural nodes (multi-sentence, name, date-entity, ...) and bare pronouns.
std::set<std::string> default_stoplist();

struct DistillConfig {
  std::set<std::string> stoplist = default_stoplist();
  double idf_threshold = 0.5;
  /// The frequent-term filter is skipped when the IDF index holds fewer
  /// documents than this; on a handful of documents every term is frequent.
  std::size_t idf_min_docs = 10;
  std::size_t min_backtrace_overlap = 4;
  TraversalMode traversal;
  IdfScope idf_scope = IdfScope::Corpus;
};

/// JSON keys: stoplist_add, stoplist_remove, stoplist (full replacement),
/// idf_threshold, idf_min_docs, min_backtrace_overlap, traversal, seed,
/// idf_scope.
DistillConfig distill_config_from_json(std::string_view json_text);
DistillConfig load_distill_config(const std::filesystem::path& path);
std::string distill_config_to_json(const DistillConfig& config);

Concept handle_name(const AmrNode& name_node);
/// Empty for the no-link marker `:wiki "-"` or a node without `:wiki`.
std::optional<Concept> handle_wiki(const AmrNode& entity_node);
/// Empty when the node carries none of :day, :month, :year.
std::optional<Concept> handle_date(const AmrNode& date_node);

std::vector<Concept> concept_format(const std::vector<Concept>& concepts, const IdfIndex* idf,
                                    const std::set<std::string>& stoplist, double idf_threshold);

std::vector<Concept> concept_backtrace(const std::vector<Concept>& concepts,
                                       std::string_view source_doc,
                                       std::size_t min_overlap = 4);

/// Traversal and role handling only (no formatting or backtrace), in the
/// order `mode` produces.
std::vector<Concept> collect_concepts(const AmrGraph& graph, TraversalMode mode);

ConceptSet distill_concepts(const AmrGraph& graph, std::string_view source_doc,
                            const IdfIndex* idf, TraversalMode mode,
                            const DistillConfig& config = {});

std::string concept_set_to_json(const ConceptSet& set, int indent = 2);

}  // namespace conceptrag
