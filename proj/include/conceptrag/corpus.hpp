#pragma once

// <Q-A-D> datasets: JSONL loading, screening and per-K grouping.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace conceptrag {

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  /// 1-based line number, 0 when not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct SupportDoc {
  std::string text;
  bool hasanswer = false;
  std::optional<std::string> amr;

  bool operator==(const SupportDoc&) const = default;
};

struct QadPair {
  std::string question;
  std::vector<std::string> gold_answers;
  std::vector<SupportDoc> documents;
  std::optional<std::int64_t> s_pop;

  std::size_t k() const { return documents.size(); }
  bool operator==(const QadPair&) const = default;
};

/// One record per line:
///   {"question": str, "answers": [str], "s_pop": int?,
///    "docs": [{"text": str, "hasanswer": bool, "amr": str?}]}
/// Blank lines are skipped, unknown fields ignored. Throws DatasetError.
std::vector<QadPair> parse_dataset(std::string_view jsonl);
std::vector<QadPair> load_dataset(const std::filesystem::path& path);

std::string dataset_to_jsonl(const std::vector<QadPair>& pairs);
void save_dataset(const std::filesystem::path& path, const std::vector<QadPair>& pairs);

/// Keeps pairs whose documents all carry hasanswer=true (when required) and,
/// if `s_pop_max` is set, whose s_pop is below it. Pairs without s_pop are
/// always kept by the popularity rule.
std::vector<QadPair> screen_pairs(const std::vector<QadPair>& pairs, bool require_all_hasanswer = true,
                                  std::optional<std::int64_t> s_pop_max = 500);

struct KStats {
  static constexpr std::size_t kMaxK = 10;
  /// counts[k-1] for k = 1..10.
  std::array<std::size_t, kMaxK> counts{};
  std::size_t overflow = 0;  // K > 10
  std::size_t total() const;
};

struct KGroups {
  std::map<std::size_t, std::vector<QadPair>> buckets;
  KStats stats;
};

KGroups group_by_k(const std::vector<QadPair>& pairs);

/// Table-shaped TSV: a header row "K=\t1..10\t>10" and one row of counts.
std::string stats_tsv(const KStats& stats, const std::string& label);

}  // namespace conceptrag
