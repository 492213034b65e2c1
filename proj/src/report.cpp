#include "conceptrag/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "conceptrag/hash.hpp"

namespace conceptrag {

namespace {

using nlohmann::json;

std::string fixed(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<int> all_ks(const std::vector<RunSummary>& runs) {
  std::vector<int> ks;
  for (const auto& r : runs)
    for (const auto& [k, acc] : r.curve.points) ks.push_back(k);
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  return ks;
}

}  // namespace

RunSummary summarize_run(const std::vector<PipelineRecord>& records, std::string label,
                         const std::vector<Interval>& intervals) {
  RunSummary s;
  s.label = std::move(label);
  s.record_count = records.size();
  if (!records.empty()) {
    s.mode = records.front().mode;
    s.backend = records.front().backend;
  }
  s.curve = accuracy_curve(records, s.label);
  for (const auto& iv : intervals) {
    bool covered = true;
    for (int k = iv.start; k <= iv.end; ++k) covered = covered && s.curve.points.count(k) > 0;
    if (covered) s.intg.push_back(integrate(s.curve, iv));
    else s.skipped_intervals.push_back(iv);
  }
  std::vector<std::string> originals, compressed;
  for (const auto& r : records) {
    if (r.error) {
      ++s.error_count;
      continue;
    }
    for (const auto& d : r.pair.documents) originals.push_back(d.text);
    compressed.insert(compressed.end(), r.contexts.begin(), r.contexts.end());
  }
  if (!originals.empty() && originals.size() == compressed.size())
    s.compression_ratio = compression_ratio(originals, compressed);
  std::vector<PipelineRecord> ok;
  for (const auto& r : records)
    if (!r.error) ok.push_back(r);
  s.latency = latency_summary(ok);
  return s;
}

bool attach_deltas(std::vector<RunSummary>& runs) {
  auto base = std::find_if(runs.begin(), runs.end(), [](const RunSummary& r) { return r.mode == "vanilla"; });
  if (base == runs.end()) return false;
  const std::vector<IntgReport> baseline = base->intg;
  for (auto& run : runs)
    for (auto& rep : run.intg)
      for (const auto& b : baseline)
        if (b.interval == rep.interval) rep.delta = delta(rep, b);
  return true;
}

std::string report_tsv(const std::vector<RunSummary>& runs) {
  std::ostringstream out;
  const auto ks = all_ks(runs);
  out << "# accuracy\nrun\tmode";
  for (int k : ks) out << "\tK=" << k;
  out << '\n';
  for (const auto& r : runs) {
    out << r.label << '\t' << r.mode;
    for (int k : ks) {
      auto it = r.curve.points.find(k);
      out << '\t' << (it == r.curve.points.end() ? std::string("-") : fixed(it->second));
    }
    out << '\n';
  }
  out << "\n# intg\nrun\tinterval\tintg\tdelta\n";
  for (const auto& r : runs)
    for (const auto& rep : r.intg)
      out << r.label << '\t' << rep.interval.name() << '\t' << fixed(rep.intg) << '\t'
          << (rep.delta ? fixed(*rep.delta) : std::string("-")) << '\n';
  out << "\n# compression\nrun\tratio_percent\trecords\terrors\n";
  for (const auto& r : runs)
    out << r.label << '\t' << (r.compression_ratio ? fixed(*r.compression_ratio) : std::string("-")) << '\t'
        << r.record_count << '\t' << r.error_count << '\n';
  out << "\n# latency\nrun\tbackend\tmode\tcount\tmean_ms\tp50_ms\tp95_ms\n";
  for (const auto& r : runs)
    for (const auto& l : r.latency)
      out << r.label << '\t' << l.backend << '\t' << l.mode << '\t' << l.count << '\t' << fixed(l.mean_ms, 3)
          << '\t' << fixed(l.p50_ms, 3) << '\t' << fixed(l.p95_ms, 3) << '\n';
  return out.str();
}

std::string report_json(const std::vector<RunSummary>& runs) {
  json arr = json::array();
  for (const auto& r : runs) {
    json acc = json::object();
    for (const auto& [k, v] : r.curve.points) acc[std::to_string(k)] = v;
    json intg = json::array();
    for (const auto& rep : r.intg)
      intg.push_back({{"interval", rep.interval.name()},
                      {"start", rep.interval.start},
                      {"end", rep.interval.end},
                      {"intg", rep.intg},
                      {"delta", rep.delta ? json(*rep.delta) : json(nullptr)}});
    json skipped = json::array();
    for (const auto& iv : r.skipped_intervals) skipped.push_back(iv.name());
    json lat = json::array();
    for (const auto& l : r.latency)
      lat.push_back({{"backend", l.backend},
                     {"mode", l.mode},
                     {"count", l.count},
                     {"mean_ms", l.mean_ms},
                     {"p50_ms", l.p50_ms},
                     {"p95_ms", l.p95_ms}});
    arr.push_back({{"label", r.label},
                   {"mode", r.mode},
                   {"backend", r.backend},
                   {"accuracy", std::move(acc)},
                   {"intg", std::move(intg)},
                   {"skipped_intervals", std::move(skipped)},
                   {"compression_ratio", r.compression_ratio ? json(*r.compression_ratio) : json(nullptr)},
                   {"latency", std::move(lat)},
                   {"records", r.record_count},
                   {"errors", r.error_count}});
  }
  return json{{"runs", std::move(arr)}}.dump(2);
}

std::string render_svg(const std::vector<RunSummary>& runs) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 150, kTop = 20, kBottom = 50;
  constexpr const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                     "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  const auto ks = all_ks(runs);
  const int kmin = ks.empty() ? 1 : ks.front();
  const int kmax = ks.empty() ? 10 : std::max(ks.back(), kmin + 1);
  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto x = [&](int k) { return kLeft + pw * (k - kmin) / static_cast<double>(kmax - kmin); };
  auto y = [&](double acc) { return kTop + ph * (1.0 - acc / 100.0); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << y(0) << "\" x2=\"" << kLeft + pw << "\" y2=\"" << y(0)
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << y(0) << "\" x2=\"" << kLeft << "\" y2=\"" << y(100)
      << "\" stroke=\"black\"/>\n";
  for (int k = kmin; k <= kmax; ++k)
    out << "<text x=\"" << x(k) << "\" y=\"" << y(0) + 15 << "\" text-anchor=\"middle\">" << k << "</text>\n";
  for (int a = 0; a <= 100; a += 20)
    out << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(a) + 4 << "\" text-anchor=\"end\">" << a << "</text>\n";
  out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\">K</text>\n";
  out << "<text x=\"15\" y=\"" << kTop + ph / 2 << "\" transform=\"rotate(-90 15 " << kTop + ph / 2
      << ")\" text-anchor=\"middle\">Acc (%)</text>\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const char* color = kColors[i % std::size(kColors)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    bool first = true;
    for (const auto& [k, acc] : runs[i].curve.points) {
      out << (first ? "" : " ") << fixed(x(k)) << ',' << fixed(y(acc));
      first = false;
    }
    out << "\"/>\n";
    for (const auto& [k, acc] : runs[i].curve.points)
      out << "<circle cx=\"" << fixed(x(k)) << "\" cy=\"" << fixed(y(acc)) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    const double ly = kTop + 15.0 * static_cast<double>(i + 1);
    out << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << kLeft + pw + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kLeft + pw + 35 << "\" y=\"" << ly + 4 << "\">" << xml_escape(runs[i].label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string RunManifest::config_hash() const {
  // nlohmann::json objects keep keys sorted, so dump() is canonical.
  const json canon{{"mode", mode},
                   {"traversal", traversal},
                   {"seed", seed ? json(*seed) : json(nullptr)},
                   {"distill", json::parse(distill_config_json)},
                   {"backend", json::parse(backend_json)}};
  return sha1_hex(canon.dump());
}

std::string RunManifest::to_json() const {
  const json j{{"mode", mode},
               {"traversal", traversal},
               {"seed", seed ? json(*seed) : json(nullptr)},
               {"distill_config", json::parse(distill_config_json)},
               {"backend", json::parse(backend_json)},
               {"config_hash", config_hash()},
               {"dataset", {{"path", dataset_path}, {"git_blob_sha1", dataset_hash}}},
               {"pairs", pair_count},
               {"screened_pairs", screened_count}};
  return j.dump(2);
}

std::vector<PipelineRecord> load_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<PipelineRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::invalid_argument& e) {
      throw DatasetError(e.what(), n);
    }
  }
  return out;
}

void save_records(const std::filesystem::path& path, const std::vector<PipelineRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& r : records) out << record_to_json(r) << '\n';
}

}  // namespace conceptrag
