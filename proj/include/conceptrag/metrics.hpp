#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "conceptrag/ragpipe.hpp"

namespace conceptrag {

class MetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Accuracy (percent, unrounded) per number of supporting documents K.
struct EvalCurve {
  std::map<int, double> points;
  std::string label;
};

/// Closed integer range of K.
struct Interval {
  int start = 1;
  int end = 10;

  static constexpr Interval normal() { return {1, 10}; }
  static constexpr Interval longer() { return {6, 10}; }

  /// "normal", "long", or "a,b". Throws MetricError.
  static Interval parse(std::string_view s);
  std::string name() const;
  bool operator==(const Interval&) const = default;
};

struct IntgReport {
  double intg = 0.0;
  Interval interval;
  std::optional<double> delta;
};

/// True iff some normalized gold answer occurs inside the normalized candidate.
bool answer_match(std::string_view candidate, const std::vector<std::string>& gold_answers);

/// Sets `correct` on every record; failed records count as wrong.
void score_records(std::vector<PipelineRecord>& records);

/// Throws MetricError if a record has not been scored.
EvalCurve accuracy_curve(const std::vector<PipelineRecord>& records, std::string label = {});

/// Unit-step trapezoid sum over K = start..end. Throws MetricError when a K
/// inside the interval is missing or the interval is empty.
IntgReport integrate(const EvalCurve& curve, Interval interval);

/// ours.intg - baseline.intg; both must cover the same interval.
double delta(const IntgReport& ours, const IntgReport& baseline);
IntgReport with_delta(IntgReport ours, const IntgReport& baseline);

/// 100 * compressed words / original words (whitespace tokens).
double compression_ratio(const std::vector<std::string>& originals,
                         const std::vector<std::string>& compressed);

struct LatencyStats {
  std::string backend;
  std::string mode;
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
};

/// Nearest-rank percentile, p in (0, 100].
double percentile(std::vector<double> values, double p);

std::vector<LatencyStats> latency_summary(const std::vector<PipelineRecord>& records);

}  // namespace conceptrag
