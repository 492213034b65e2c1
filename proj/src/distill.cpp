#include "conceptrag/distill.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "conceptrag/text.hpp"

namespace conceptrag {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Instance: return "instance";
    case Provenance::Name: return "name";
    case Provenance::Wiki: return "wiki";
    case Provenance::Date: return "date";
  }
  return "instance";
}

std::vector<std::string> ConceptSet::texts() const {
  std::vector<std::string> out;
  out.reserve(concepts.size());
  for (const auto& c : concepts) out.push_back(c.text);
  return out;
}

std::size_t ConceptSet::word_count() const {
  std::size_t n = 0;
  for (const auto& c : concepts) n += conceptrag::word_count(c.text);
  return n;
}

IdfIndex::IdfIndex(std::size_t doc_count, std::map<std::string, std::size_t> term_doc_freq)
    : doc_count_(doc_count), freq_(std::move(term_doc_freq)) {
  for (const auto& [term, df] : freq_)
    if (df == 0 || df > doc_count_) throw std::invalid_argument("bad document frequency for " + term);
}

std::size_t IdfIndex::doc_freq(const std::string& term) const {
  auto it = freq_.find(term);
  return it == freq_.end() ? 0 : it->second;
}

double IdfIndex::doc_fraction(const std::string& term) const {
  if (doc_count_ == 0) return 0.0;
  return static_cast<double>(doc_freq(term)) / static_cast<double>(doc_count_);
}

IdfIndex build_idf_index(const std::vector<std::string>& docs) {
  if (docs.empty()) throw std::invalid_argument("cannot build an IDF index from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : docs) {
    auto words = split_words(normalize_text(doc));
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    for (auto& w : words) ++freq[std::move(w)];
  }
  return IdfIndex(docs.size(), std::move(freq));
}

std::string to_string(TraversalMode::Kind k) {
  switch (k) {
    case TraversalMode::Kind::Dfs: return "dfs";
    case TraversalMode::Kind::GlobalRandom: return "global-random";
    case TraversalMode::Kind::LocalRandom: return "local-random";
  }
  return "dfs";
}

TraversalMode::Kind parse_traversal_kind(std::string_view s) {
  if (s == "dfs") return TraversalMode::Kind::Dfs;
  if (s == "global-random") return TraversalMode::Kind::GlobalRandom;
  if (s == "local-random") return TraversalMode::Kind::LocalRandom;
  throw std::invalid_argument("unknown traversal '" + std::string(s) + "'");
}

std::string to_string(IdfScope s) {
  switch (s) {
    case IdfScope::None: return "none";
    case IdfScope::Retrieved: return "retrieved";
    case IdfScope::Corpus: return "corpus";
  }
  return "corpus";
}

IdfScope parse_idf_scope(std::string_view s) {
  if (s == "none") return IdfScope::None;
  if (s == "retrieved") return IdfScope::Retrieved;
  if (s == "corpus") return IdfScope::Corpus;
  throw std::invalid_argument("unknown idf scope '" + std::string(s) + "'");
}

std::set<std::string> default_stoplist() {
  return {
      // structural
      "multi-sentence", "name", "date-entity", "date-interval", "thing", "and", "or",
      "amr-unknown", "have-org-role-91", "have-rel-role-91", "rate-entity-91",
      "percentage-entity", "monetary-quantity", "distance-quantity", "temporal-quantity",
      "mass-quantity", "volume-quantity", "ordinal-entity", "url-entity",
      "email-address-entity", "phone-number-entity", "string-entity",
      // pronouns
      "he", "she", "it", "they", "i", "you", "we",
      // named-entity types
      "person", "family", "animal", "language", "nationality", "ethnic-group",
      "regional-group", "religious-group", "political-movement", "organization", "company",
      "government-organization", "military", "criminal-organization", "political-party",
      "market-sector", "school", "university", "research-institute", "team", "league",
      "location", "city", "city-district", "county", "state", "province", "territory",
      "country", "local-region", "country-region", "world-region", "continent", "ocean",
      "sea", "lake", "river", "gulf", "bay", "strait", "canal", "peninsula", "mountain",
      "volcano", "valley", "canyon", "island", "desert", "forest", "moon", "planet", "star",
      "constellation", "facility", "airport", "station", "port", "tunnel", "bridge", "road",
      "railway-line", "building", "theater", "museum", "palace", "hotel", "worship-place",
      "market", "sports-facility", "park", "zoo", "amusement-park", "event", "incident",
      "natural-disaster", "earthquake", "war", "conference", "game", "festival", "product",
      "vehicle", "ship", "aircraft", "aircraft-type", "spaceship", "car-make", "work-of-art",
      "picture", "music", "show", "broadcast-program", "publication", "book", "newspaper",
      "magazine", "journal", "natural-object", "award", "law", "court-decision", "treaty",
      "music-key", "musical-note", "food-dish", "writing-script", "variable", "program",
      "molecular-physical-entity", "small-molecule", "protein", "protein-family",
      "protein-segment", "amino-acid", "macro-molecular-complex", "enzyme", "nucleic-acid",
      "pathway", "gene", "dna-sequence", "cell", "cell-line", "species", "taxon", "disease",
      "medical-condition",
  };
}

DistillConfig distill_config_from_json(std::string_view json_text) {
  using nlohmann::json;
  DistillConfig cfg;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("distill config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("distill config must be a JSON object");
  try {
    if (j.contains("stoplist")) cfg.stoplist = j.at("stoplist").get<std::set<std::string>>();
    if (j.contains("stoplist_add"))
      for (const auto& s : j.at("stoplist_add")) cfg.stoplist.insert(s.get<std::string>());
    if (j.contains("stoplist_remove"))
      for (const auto& s : j.at("stoplist_remove")) cfg.stoplist.erase(s.get<std::string>());
    if (j.contains("idf_threshold")) cfg.idf_threshold = j.at("idf_threshold").get<double>();
    if (j.contains("idf_min_docs")) cfg.idf_min_docs = j.at("idf_min_docs").get<std::size_t>();
    if (j.contains("min_backtrace_overlap"))
      cfg.min_backtrace_overlap = j.at("min_backtrace_overlap").get<std::size_t>();
    if (j.contains("traversal"))
      cfg.traversal.kind = parse_traversal_kind(j.at("traversal").get<std::string>());
    if (j.contains("seed")) cfg.traversal.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("idf_scope")) cfg.idf_scope = parse_idf_scope(j.at("idf_scope").get<std::string>());
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("distill config: ") + e.what());
  }
  if (cfg.idf_threshold < 0.0 || cfg.idf_threshold > 1.0)
    throw std::invalid_argument("distill config: idf_threshold must lie in [0, 1]");
  return cfg;
}

DistillConfig load_distill_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return distill_config_from_json(ss.str());
}

std::string distill_config_to_json(const DistillConfig& config) {
  nlohmann::json j{
      {"stoplist", config.stoplist},
      {"idf_threshold", config.idf_threshold},
      {"idf_min_docs", config.idf_min_docs},
      {"min_backtrace_overlap", config.min_backtrace_overlap},
      {"traversal", to_string(config.traversal.kind)},
      {"seed", config.traversal.seed},
      {"idf_scope", to_string(config.idf_scope)},
  };
  return j.dump();
}

namespace {

std::optional<int> parse_int(std::string_view s) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

constexpr const char* kMonths[] = {"January", "February", "March",     "April",   "May",      "June",
                                   "July",    "August",   "September", "October", "November", "December"};

// "work-01" -> "work"; labels without a numeric suffix are returned as is.
std::string strip_sense(const std::string& label) {
  const auto dash = label.rfind('-');
  if (dash == std::string::npos || dash + 1 == label.size()) return label;
  const bool digits = std::all_of(label.begin() + static_cast<std::ptrdiff_t>(dash) + 1, label.end(),
                                  [](char c) { return c >= '0' && c <= '9'; });
  return digits ? label.substr(0, dash) : label;
}

bool iequals(std::string_view a, std::string_view b) { return to_lower(a) == to_lower(b); }

bool is_name_node(const AmrNode& n) { return n.instance == "name"; }

bool has_wiki_link(const AmrNode& n) {
  const Literal* w = n.attribute(":wiki");
  return w && w->text != "-";
}

bool is_date_node(const AmrNode& n) { return n.instance == "date-entity"; }

// Owner (parent through a non-reentrant edge) of every node.
std::map<std::string, std::string> owners(const AmrGraph& g) {
  std::map<std::string, std::string> out;
  for (const auto& e : g.edges())
    if (const NodeRef* r = e.node(); r && !r->reentrant) out[r->variable] = e.source;
  return out;
}

// Name child of an entity node, if any.
const AmrNode* name_child(const AmrGraph& g, const AmrNode& entity) {
  for (const AmrEdge* e : g.outgoing(entity.variable)) {
    const NodeRef* r = e->node();
    if (e->role == ":name" && r && !r->reentrant && is_name_node(g.node(r->variable)))
      return &g.node(r->variable);
  }
  return nullptr;
}

// Flushes the pending role buffer, dropping adjacent duplicates.
void flush_roles(std::vector<Concept>& roles, std::vector<Concept>& out) {
  for (auto& c : roles) {
    if (!out.empty() && out.back().sentence_index == c.sentence_index &&
        out.back().provenance != Provenance::Instance && iequals(out.back().text, c.text))
      continue;
    out.push_back(std::move(c));
  }
  roles.clear();
}

std::vector<Concept> collect_sentence(const AmrGraph& g, const SentenceSubgraph& s,
                                      const std::map<std::string, std::string>& owner) {
  std::vector<Concept> out;
  std::vector<Concept> roles;
  for (const std::string& var : dfs_nodes(g, s)) {
    const AmrNode& node = g.node(var);
    bool is_role = false;

    if (is_name_node(node)) {
      is_role = true;
      auto it = owner.find(var);
      const AmrNode* entity = it == owner.end() ? nullptr : &g.node(it->second);
      // Names of wiki-linked entities were consolidated at the entity.
      if (!(entity && has_wiki_link(*entity) && name_child(g, *entity) == &node)) {
        Concept c = handle_name(node);
        c.sentence_index = s.index;
        roles.push_back(std::move(c));
      }
    }
    if (has_wiki_link(node)) {
      is_role = true;
      Concept c = *handle_wiki(node);
      if (const AmrNode* name = name_child(g, node)) {
        Concept n = handle_name(*name);
        if (iequals(n.text, c.text)) c = std::move(n);
      }
      c.sentence_index = s.index;
      roles.push_back(std::move(c));
    }
    if (is_date_node(node)) {
      is_role = true;
      if (auto c = handle_date(node)) {
        c->sentence_index = s.index;
        roles.push_back(std::move(*c));
      }
    }

    if (!is_role) {
      flush_roles(roles, out);
      out.push_back(Concept{node.instance, Provenance::Instance, s.index, std::nullopt, node.instance});
    }
  }
  flush_roles(roles, out);
  return out;
}

// Fisher-Yates driven directly by the engine so a seed gives the same order
// with every standard library.
template <typename It>
void seeded_shuffle(It first, It last, std::mt19937_64& rng) {
  const auto n = static_cast<std::uint64_t>(last - first);
  for (std::uint64_t i = n; i > 1; --i) {
    const std::uint64_t j = rng() % i;
    std::swap(first[static_cast<std::ptrdiff_t>(i - 1)], first[static_cast<std::ptrdiff_t>(j)]);
  }
}

bool word_boundary(std::string_view doc, std::size_t begin, std::size_t end) {
  auto word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; };
  if (begin > 0 && word(doc[begin - 1])) return false;
  if (end < doc.size() && word(doc[end])) return false;
  return true;
}

std::size_t common_prefix(std::string_view a, std::string_view b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[n] == b[n]) ++n;
  return n;
}

}  // namespace

Concept handle_name(const AmrNode& name_node) {
  std::map<int, std::string> ops;
  for (const auto& [role, lit] : name_node.attributes) {
    if (role.rfind(":op", 0) != 0) continue;
    auto n = parse_int(std::string_view(role).substr(3));
    if (!n || *n < 1) throw DistillError("name node " + name_node.variable + ": bad role " + role);
    ops[*n] = lit.text;
  }
  if (!ops.count(1)) throw DistillError("name node " + name_node.variable + " has no :op1");
  std::vector<std::string> parts;
  int expected = 1;
  for (const auto& [n, text] : ops) {
    if (n != expected++)
      throw DistillError("name node " + name_node.variable + " has non-contiguous :op roles");
    parts.push_back(text);
  }
  return Concept{trim(join(parts, " ")), Provenance::Name, 1, std::nullopt, name_node.instance};
}

std::optional<Concept> handle_wiki(const AmrNode& entity_node) {
  const Literal* w = entity_node.attribute(":wiki");
  if (!w || w->text == "-") return std::nullopt;
  std::string text = w->text;
  std::replace(text.begin(), text.end(), '_', ' ');
  text = trim(text);
  if (text.empty()) return std::nullopt;
  return Concept{std::move(text), Provenance::Wiki, 1, std::nullopt, entity_node.instance};
}

std::optional<Concept> handle_date(const AmrNode& date_node) {
  std::vector<std::string> parts;
  auto component = [&](const char* role, int lo, int hi) -> std::optional<int> {
    const Literal* l = date_node.attribute(role);
    if (!l) return std::nullopt;
    auto v = parse_int(l->text);
    if (!v || *v < lo || *v > hi)
      throw DistillError(std::string("date-entity ") + date_node.variable + ": " + role + " " +
                         l->text + " is out of range");
    return v;
  };
  if (auto day = component(":day", 1, 31)) parts.push_back(std::to_string(*day));
  if (auto month = component(":month", 1, 12)) parts.emplace_back(kMonths[*month - 1]);
  if (const Literal* year = date_node.attribute(":year")) parts.push_back(year->text);
  if (parts.empty()) return std::nullopt;
  return Concept{join(parts, " "), Provenance::Date, 1, std::nullopt, date_node.instance};
}

std::vector<Concept> concept_format(const std::vector<Concept>& concepts, const IdfIndex* idf,
                                    const std::set<std::string>& stoplist, double idf_threshold) {
  std::vector<Concept> out;
  out.reserve(concepts.size());
  for (const Concept& c : concepts) {
    Concept f = c;
    if (f.provenance == Provenance::Instance) {
      if (stoplist.count(f.origin) || stoplist.count(strip_sense(f.origin))) continue;
      f.text = strip_sense(f.text);
    }
    f.text = trim(f.text);
    if (f.text.empty()) continue;
    if (idf && idf->doc_count() > 0) {
      const auto terms = split_words(normalize_text(f.text));
      if (!terms.empty()) {
        double rarest = 1.0;
        for (const auto& t : terms) rarest = std::min(rarest, idf->doc_fraction(t));
        if (rarest > idf_threshold) continue;
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Concept> concept_backtrace(const std::vector<Concept>& concepts,
                                       std::string_view source_doc, std::size_t min_overlap) {
  const auto tokens = tokenize_words(source_doc);
  std::vector<std::string> lowered;
  lowered.reserve(tokens.size());
  for (const auto& t : tokens) lowered.push_back(to_lower(t.text));
  const std::string doc_lower = to_lower(source_doc);

  std::vector<Concept> out;
  out.reserve(concepts.size());
  for (const Concept& c : concepts) {
    Concept b = c;
    if (c.provenance == Provenance::Instance) {
      std::string spaced = c.text;
      std::replace(spaced.begin(), spaced.end(), '-', ' ');
      const auto words = split_words(spaced);
      std::vector<const WordSpan*> matched;
      for (const auto& w : words) {
        const std::string lw = to_lower(w);
        const WordSpan* best = nullptr;
        std::size_t best_len = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
          const std::size_t lcp = common_prefix(lw, lowered[i]);
          const bool exact = lw == lowered[i];
          if (!exact && lcp < min_overlap) continue;
          const std::size_t score = exact ? lw.size() : lcp;
          if (score > best_len) {
            best_len = score;
            best = &tokens[i];
          }
        }
        if (!best) break;
        matched.push_back(best);
      }
      if (!words.empty() && matched.size() == words.size()) {
        std::vector<std::string> surface;
        std::size_t lo = matched.front()->begin, hi = matched.front()->end;
        for (const WordSpan* m : matched) {
          surface.push_back(m->text);
          lo = std::min(lo, m->begin);
          hi = std::max(hi, m->end);
        }
        b.text = join(surface, " ");
        b.source_span = SourceSpan{lo, hi};
      }
    } else {
      const std::string needle = to_lower(c.text);
      std::size_t pos = needle.empty() ? std::string::npos : doc_lower.find(needle);
      while (pos != std::string::npos && !word_boundary(source_doc, pos, pos + needle.size()))
        pos = doc_lower.find(needle, pos + 1);
      if (pos != std::string::npos) {
        b.text = std::string(source_doc.substr(pos, needle.size()));
        b.source_span = SourceSpan{pos, pos + needle.size()};
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<Concept> collect_concepts(const AmrGraph& graph, TraversalMode mode) {
  std::vector<Concept> out;
  if (graph.empty()) return out;
  const auto owner = owners(graph);
  std::mt19937_64 rng(mode.seed);
  for (const auto& sentence : split_sentences(graph)) {
    auto part = collect_sentence(graph, sentence, owner);
    if (mode.kind == TraversalMode::Kind::LocalRandom) seeded_shuffle(part.begin(), part.end(), rng);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  if (mode.kind == TraversalMode::Kind::GlobalRandom) seeded_shuffle(out.begin(), out.end(), rng);
  return out;
}

ConceptSet distill_concepts(const AmrGraph& graph, std::string_view source_doc, const IdfIndex* idf,
                            TraversalMode mode, const DistillConfig& config) {
  ConceptSet set;
  set.source_doc = std::string(source_doc);
  set.sentence_grouped = mode.kind != TraversalMode::Kind::GlobalRandom;
  auto raw = collect_concepts(graph, mode);
  if (idf && idf->doc_count() < config.idf_min_docs) idf = nullptr;
  auto formatted = concept_format(raw, idf, config.stoplist, config.idf_threshold);
  set.concepts = concept_backtrace(formatted, source_doc, config.min_backtrace_overlap);
  return set;
}

std::string concept_set_to_json(const ConceptSet& set, int indent) {
  using nlohmann::json;
  json concepts = json::array();
  for (const auto& c : set.concepts) {
    json j{{"text", c.text},
           {"provenance", std::string(to_string(c.provenance))},
           {"sentence", c.sentence_index},
           {"origin", c.origin}};
    if (c.source_span) j["span"] = {c.source_span->begin, c.source_span->end};
    else j["span"] = nullptr;
    concepts.push_back(std::move(j));
  }
  return json{{"concepts", concepts}, {"sentence_grouped", set.sentence_grouped}}.dump(indent);
}

}  // namespace conceptrag
