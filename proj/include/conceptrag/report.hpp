#pragma once

// Run summaries, report rendering (TSV, JSON, SVG) and run manifests.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "conceptrag/metrics.hpp"

namespace conceptrag {

struct RunSummary {
  std::string label;
  std::string mode;
  std::string backend;
  EvalCurve curve;
  /// One entry per requested interval; intervals the curve does not cover
  /// are left out and listed in `skipped_intervals`.
  std::vector<IntgReport> intg;
  std::vector<Interval> skipped_intervals;
  /// Word-level ratio over records without errors; empty when none succeeded.
  std::optional<double> compression_ratio;
  std::vector<LatencyStats> latency;
  std::size_t record_count = 0;
  std::size_t error_count = 0;
};

/// Records must already be scored.
RunSummary summarize_run(const std::vector<PipelineRecord>& records, std::string label,
                         const std::vector<Interval>& intervals);

/// Fills IntgReport::delta of every run against the first run whose mode is
/// "vanilla" (same interval). Returns false when there is no such run.
bool attach_deltas(std::vector<RunSummary>& runs);

/// Sections: per-K accuracy, Intg per interval with delta, compression and
/// latency. Accuracies are rounded to two decimals here and nowhere else.
std::string report_tsv(const std::vector<RunSummary>& runs);
std::string report_json(const std::vector<RunSummary>& runs);

/// Static accuracy-vs-K line plot, one polyline per run.
std::string render_svg(const std::vector<RunSummary>& runs);

struct RunManifest {
  std::string mode;
  std::string traversal;
  std::optional<std::uint64_t> seed;
  std::string distill_config_json;
  std::string backend_json;
  std::string dataset_path;
  std::string dataset_hash;
  std::size_t pair_count = 0;
  std::size_t screened_count = 0;

  /// SHA-1 of the canonical JSON of mode, traversal, seed, distill config
  /// and backend spec.
  std::string config_hash() const;
  std::string to_json() const;
};

std::vector<PipelineRecord> load_records(const std::filesystem::path& path);
void save_records(const std::filesystem::path& path, const std::vector<PipelineRecord>& records);

}  // namespace conceptrag
