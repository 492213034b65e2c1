#include "conceptrag/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "conceptrag/text.hpp"

namespace conceptrag {

Interval Interval::parse(std::string_view s) {
  if (s == "normal") return normal();
  if (s == "long") return longer();
  const auto comma = s.find(',');
  if (comma != std::string_view::npos) {
    Interval iv;
    auto a = s.substr(0, comma), b = s.substr(comma + 1);
    auto [pa, ea] = std::from_chars(a.data(), a.data() + a.size(), iv.start);
    auto [pb, eb] = std::from_chars(b.data(), b.data() + b.size(), iv.end);
    if (ea == std::errc() && eb == std::errc() && pa == a.data() + a.size() &&
        pb == b.data() + b.size() && iv.start >= 1 && iv.start < iv.end)
      return iv;
  }
  throw MetricError("bad interval '" + std::string(s) + "' (want normal, long or a,b with 1 <= a < b)");
}

std::string Interval::name() const {
  if (*this == normal()) return "I_n";
  if (*this == longer()) return "I_l";
  return "[" + std::to_string(start) + "," + std::to_string(end) + "]";
}

bool answer_match(std::string_view candidate, const std::vector<std::string>& gold_answers) {
  const std::string cand = normalize_text(candidate);
  for (const auto& g : gold_answers) {
    const std::string gold = normalize_text(g);
    if (!gold.empty() && cand.find(gold) != std::string::npos) return true;
  }
  return false;
}

void score_records(std::vector<PipelineRecord>& records) {
  for (auto& r : records)
    r.correct = !r.error && answer_match(r.raw_answer, r.pair.gold_answers);
}

EvalCurve accuracy_curve(const std::vector<PipelineRecord>& records, std::string label) {
  std::map<int, std::pair<std::size_t, std::size_t>> tally;  // K -> (correct, total)
  for (const auto& r : records) {
    if (!r.correct) throw MetricError("record for '" + r.pair.question + "' has not been scored");
    auto& [ok, total] = tally[static_cast<int>(r.k())];
    ok += *r.correct ? 1 : 0;
    ++total;
  }
  EvalCurve curve;
  curve.label = std::move(label);
  for (const auto& [k, t] : tally)
    curve.points[k] = 100.0 * static_cast<double>(t.first) / static_cast<double>(t.second);
  return curve;
}

IntgReport integrate(const EvalCurve& curve, Interval interval) {
  if (interval.start < 1 || interval.start >= interval.end)
    throw MetricError("interval must satisfy 1 <= start < end");
  auto acc = [&](int k) {
    auto it = curve.points.find(k);
    if (it == curve.points.end())
      throw MetricError("curve '" + curve.label + "' has no accuracy at K=" + std::to_string(k));
    return it->second;
  };
  double sum = 0.0;
  double prev = acc(interval.start);
  for (int k = interval.start + 1; k <= interval.end; ++k) {
    const double cur = acc(k);
    sum += 0.5 * (cur + prev);
    prev = cur;
  }
  return IntgReport{sum, interval, std::nullopt};
}

double delta(const IntgReport& ours, const IntgReport& baseline) {
  if (!(ours.interval == baseline.interval)) throw MetricError("delta across different intervals");
  return ours.intg - baseline.intg;
}

IntgReport with_delta(IntgReport ours, const IntgReport& baseline) {
  ours.delta = delta(ours, baseline);
  return ours;
}

double compression_ratio(const std::vector<std::string>& originals,
                         const std::vector<std::string>& compressed) {
  if (originals.size() != compressed.size())
    throw MetricError("compression_ratio: " + std::to_string(originals.size()) + " originals vs " +
                      std::to_string(compressed.size()) + " compressed texts");
  std::size_t orig = 0, comp = 0;
  for (const auto& s : originals) orig += word_count(s);
  for (const auto& s : compressed) comp += word_count(s);
  if (orig == 0) throw MetricError("compression_ratio: originals contain no words");
  return 100.0 * static_cast<double>(comp) / static_cast<double>(orig);
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw MetricError("percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw MetricError("percentile outside (0, 100]");
  const auto n = values.size();
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(n)));
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

std::vector<LatencyStats> latency_summary(const std::vector<PipelineRecord>& records) {
  std::map<std::pair<std::string, std::string>, std::vector<double>> groups;
  for (const auto& r : records) groups[{r.backend, r.mode}].push_back(r.latency_ms);
  std::vector<LatencyStats> out;
  for (const auto& [key, lat] : groups) {
    LatencyStats s;
    s.backend = key.first;
    s.mode = key.second;
    s.count = lat.size();
    s.mean_ms = std::accumulate(lat.begin(), lat.end(), 0.0) / static_cast<double>(lat.size());
    s.p50_ms = percentile(lat, 50.0);
    s.p95_ms = percentile(lat, 95.0);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace conceptrag
