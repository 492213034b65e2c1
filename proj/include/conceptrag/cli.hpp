#pragma once

// Command layer behind the conceptrag binary. Every command returns an exit
// code and writes to the given streams so it can be driven from tests.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conceptrag/distill.hpp"
#include "conceptrag/metrics.hpp"
#include "conceptrag/ragpipe.hpp"

namespace conceptrag::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kBackend = 3 };

struct ParseOptions {
  std::string input = "-";  // "-" reads stdin
  std::optional<std::filesystem::path> output;
};

struct DistillOptions {
  std::filesystem::path amr;
  std::filesystem::path document;
  std::optional<std::filesystem::path> config;
  TraversalMode traversal;
  /// One document per line; enables the frequent-term filter.
  std::optional<std::filesystem::path> idf_docs;
  bool json = false;
  std::optional<std::filesystem::path> output;
};

struct StatsOptions {
  std::filesystem::path dataset;
  bool screen = false;
  std::optional<std::int64_t> s_pop_max = 500;
  std::optional<std::string> label;
};

struct RunConfig {
  std::filesystem::path dataset;
  CompressionMode mode;
  std::optional<std::filesystem::path> distill_config;
  std::optional<std::filesystem::path> backend_spec;  // stub with OracleSubstring when absent
  std::optional<std::string> parse_url;
  std::vector<Interval> intervals{Interval::normal(), Interval::longer()};
  std::filesystem::path output_dir;
  bool screen = true;
  std::optional<std::int64_t> s_pop_max = 500;
  bool seed_given = false;
};

struct ReportOptions {
  std::vector<std::filesystem::path> results;  // run directories or results.jsonl files
  std::vector<Interval> intervals{Interval::normal(), Interval::longer()};
  std::optional<std::filesystem::path> output_dir;
  bool svg = false;
};

int cmd_parse(const ParseOptions& opt, std::ostream& out, std::ostream& err);
int cmd_distill(const DistillOptions& opt, std::ostream& out, std::ostream& err);
int cmd_stats(const StatsOptions& opt, std::ostream& out, std::ostream& err);
/// Writes results.jsonl, summary.json and manifest.json into output_dir.
int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err);
/// Writes report.tsv, report.json and, with `svg`, curve.svg.
int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err);

/// Full command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace conceptrag::cli
