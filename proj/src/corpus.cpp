#include "conceptrag/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace conceptrag {

namespace {

using nlohmann::json;

QadPair pair_from_json(const json& j, std::size_t line) {
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw DatasetError(std::string("missing required field '") + key + "'", line);
    return j.at(key);
  };
  QadPair p;
  try {
    p.question = require("question").get<std::string>();
    p.gold_answers = require("answers").get<std::vector<std::string>>();
    if (j.contains("s_pop") && !j.at("s_pop").is_null()) p.s_pop = j.at("s_pop").get<std::int64_t>();
    for (const auto& d : require("docs")) {
      if (!d.is_object()) throw DatasetError("document is not an object", line);
      if (!d.contains("text")) throw DatasetError("document missing required field 'text'", line);
      if (!d.contains("hasanswer")) throw DatasetError("document missing required field 'hasanswer'", line);
      SupportDoc doc;
      doc.text = d.at("text").get<std::string>();
      doc.hasanswer = d.at("hasanswer").get<bool>();
      if (d.contains("amr") && !d.at("amr").is_null()) doc.amr = d.at("amr").get<std::string>();
      p.documents.push_back(std::move(doc));
    }
  } catch (const json::exception& e) {
    throw DatasetError(std::string("wrong field type: ") + e.what(), line);
  }
  if (p.gold_answers.empty()) throw DatasetError("'answers' is empty", line);
  for (const auto& a : p.gold_answers)
    if (a.empty()) throw DatasetError("empty gold answer", line);
  if (p.documents.empty()) throw DatasetError("'docs' is empty", line);
  for (const auto& d : p.documents)
    if (d.text.empty()) throw DatasetError("empty document text", line);
  return p;
}

json pair_to_json(const QadPair& p) {
  json docs = json::array();
  for (const auto& d : p.documents) {
    json jd{{"text", d.text}, {"hasanswer", d.hasanswer}};
    if (d.amr) jd["amr"] = *d.amr;
    docs.push_back(std::move(jd));
  }
  json j{{"question", p.question}, {"answers", p.gold_answers}};
  if (p.s_pop) j["s_pop"] = *p.s_pop;
  j["docs"] = std::move(docs);
  return j;
}

}  // namespace

std::vector<QadPair> parse_dataset(std::string_view jsonl) {
  std::vector<QadPair> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= jsonl.size()) {
    auto nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DatasetError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!j.is_object()) throw DatasetError("record is not a JSON object", line_no);
    out.push_back(pair_from_json(j, line_no));
  }
  return out;
}

std::vector<QadPair> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open dataset " + path.string(), 0);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_dataset(ss.str());
}

std::string dataset_to_jsonl(const std::vector<QadPair>& pairs) {
  std::string out;
  for (const auto& p : pairs) {
    out += pair_to_json(p).dump();
    out.push_back('\n');
  }
  return out;
}

void save_dataset(const std::filesystem::path& path, const std::vector<QadPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot write dataset " + path.string(), 0);
  out << dataset_to_jsonl(pairs);
}

std::vector<QadPair> screen_pairs(const std::vector<QadPair>& pairs, bool require_all_hasanswer,
                                  std::optional<std::int64_t> s_pop_max) {
  std::vector<QadPair> out;
  for (const auto& p : pairs) {
    if (require_all_hasanswer &&
        !std::all_of(p.documents.begin(), p.documents.end(), [](const SupportDoc& d) { return d.hasanswer; }))
      continue;
    if (s_pop_max && p.s_pop && *p.s_pop >= *s_pop_max) continue;
    out.push_back(p);
  }
  return out;
}

std::size_t KStats::total() const {
  return std::accumulate(counts.begin(), counts.end(), overflow);
}

KGroups group_by_k(const std::vector<QadPair>& pairs) {
  KGroups g;
  for (const auto& p : pairs) {
    const std::size_t k = p.k();
    g.buckets[k].push_back(p);
    if (k >= 1 && k <= KStats::kMaxK) ++g.stats.counts[k - 1];
    else ++g.stats.overflow;
  }
  return g;
}

std::string stats_tsv(const KStats& stats, const std::string& label) {
  std::ostringstream out;
  out << "K=";
  for (std::size_t k = 1; k <= KStats::kMaxK; ++k) out << '\t' << k;
  out << "\t>" << KStats::kMaxK << '\n' << label;
  for (auto c : stats.counts) out << '\t' << c;
  out << '\t' << stats.overflow << '\n';
  return out.str();
}

}  // namespace conceptrag
