#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "conceptrag/hash.hpp"
#include "conceptrag/report.hpp"

using namespace conceptrag;

namespace {

PipelineRecord record(std::size_t k, bool correct, std::string mode, std::string context = "a b") {
  PipelineRecord r;
  r.pair.question = "Where?";
  r.pair.gold_answers = {"a"};
  r.pair.documents.resize(k, SupportDoc{"a b c d", true, std::nullopt});
  r.mode = std::move(mode);
  r.backend = "stub:oracle-substring";
  r.contexts.assign(k, context);
  r.prompt = "p";
  r.raw_answer = correct ? "a" : "unknown";
  r.latency_ms = 2.0;
  r.correct = correct;
  return r;
}

std::vector<PipelineRecord> run_of(const std::string& mode, int correct_per_k, int per_k = 2) {
  std::vector<PipelineRecord> rs;
  for (std::size_t k = 1; k <= 10; ++k)
    for (int i = 0; i < per_k; ++i)
      rs.push_back(record(k, i < correct_per_k, mode, mode == "vanilla" ? "a b c d" : "a b"));
  return rs;
}

}  // namespace

TEST_CASE("SHA-1 and git blob ids") {
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(git_blob_hash("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
  CHECK(git_blob_hash_file(FIXTURE_DIR "/worked_example.txt") == "5484b54132a08c1a54c70e03c7d76f103fb4051f");
}

TEST_CASE("run summary") {
  auto rs = run_of("concepts", 1);
  rs[0].error = "backend: down";
  rs[0].correct = false;
  const auto s = summarize_run(rs, "ours", {Interval::normal(), Interval::longer(), {2, 12}});
  CHECK(s.mode == "concepts");
  CHECK(s.record_count == 20);
  CHECK(s.error_count == 1);
  CHECK(s.curve.points.at(1) == 0.0);
  CHECK(s.curve.points.at(5) == 50.0);
  REQUIRE(s.intg.size() == 2);
  CHECK(s.intg[0].intg == doctest::Approx(450.0 - 25.0));
  CHECK(s.intg[1].intg == 200.0);
  REQUIRE(s.skipped_intervals.size() == 1);
  CHECK(s.skipped_intervals[0] == Interval{2, 12});
  REQUIRE(s.compression_ratio.has_value());
  CHECK(*s.compression_ratio == 50.0);
  REQUIRE(s.latency.size() == 1);
  CHECK(s.latency[0].count == 19);
}

TEST_CASE("deltas are taken against the vanilla run") {
  std::vector<RunSummary> runs{summarize_run(run_of("concepts", 2), "ours", {Interval::normal()}),
                               summarize_run(run_of("vanilla", 1), "base", {Interval::normal()})};
  CHECK(attach_deltas(runs));
  CHECK(runs[0].intg[0].delta == doctest::Approx(450.0));
  CHECK(runs[1].intg[0].delta == 0.0);
  std::vector<RunSummary> none{runs[0]};
  none[0].intg[0].delta.reset();
  CHECK_FALSE(attach_deltas(none));
  CHECK_FALSE(none[0].intg[0].delta.has_value());
}

TEST_CASE("TSV, JSON and SVG reports") {
  std::vector<RunSummary> runs{summarize_run(run_of("vanilla", 1), "base", {Interval::normal()}),
                               summarize_run(run_of("concepts", 2), "ours & co", {Interval::normal()})};
  attach_deltas(runs);
  const std::string tsv = report_tsv(runs);
  CHECK(tsv.find("# accuracy\nrun\tmode\tK=1\tK=2") == 0);
  CHECK(tsv.find("base\tvanilla\t50.00\t50.00") != std::string::npos);
  CHECK(tsv.find("ours & co\tI_n\t900.00\t450.00\n") != std::string::npos);
  CHECK(tsv.find("base\t100.00\t20\t0\n") != std::string::npos);
  CHECK(tsv.find("ours & co\t50.00\t20\t0\n") != std::string::npos);
  CHECK(tsv.find("# latency") != std::string::npos);

  const auto j = nlohmann::json::parse(report_json(runs));
  REQUIRE(j.at("runs").size() == 2);
  CHECK(j["runs"][1]["intg"][0]["intg"] == 900.0);
  CHECK(j["runs"][1]["intg"][0]["delta"] == 450.0);
  CHECK(j["runs"][0]["accuracy"]["10"] == 50.0);

  const std::string svg = render_svg(runs);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) ++polylines;
  CHECK(polylines == 2);
  CHECK(svg.find("ours &amp; co") != std::string::npos);
}

TEST_CASE("manifest hash depends only on the run configuration") {
  RunManifest m;
  m.mode = "concepts";
  m.traversal = "graph";
  m.distill_config_json = R"({"b": 1, "a": [1, 2]})";
  m.backend_json = R"({"kind": "stub"})";
  m.dataset_path = "x.jsonl";
  m.dataset_hash = "abc";
  const std::string h = m.config_hash();
  CHECK(h.size() == 40);
  RunManifest reordered = m;
  reordered.distill_config_json = "{\"a\":[1,2],\"b\":1}";
  reordered.dataset_path = "elsewhere.jsonl";
  reordered.pair_count = 99;
  CHECK(reordered.config_hash() == h);
  RunManifest seeded = m;
  seeded.seed = 7;
  CHECK(seeded.config_hash() != h);
  RunManifest other_mode = m;
  other_mode.mode = "vanilla";
  CHECK(other_mode.config_hash() != h);
  const auto j = nlohmann::json::parse(m.to_json());
  CHECK(j.at("config_hash") == h);
  CHECK(j.at("dataset").at("git_blob_sha1") == "abc");
}

TEST_CASE("records round-trip through disk") {
  auto rs = run_of("concepts", 1, 1);
  rs[2].error = "backend: timeout";
  rs[2].backend_failure = true;
  rs[3].compress_latency_ms = 4.25;
  rs[4].pair.s_pop = 12;
  rs[4].pair.documents[0].amr = "(b / boy)";
  const auto path = std::filesystem::temp_directory_path() / "conceptrag_report_records.jsonl";
  save_records(path, rs);
  const auto back = load_records(path);
  REQUIRE(back.size() == rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CHECK(back[i].pair == rs[i].pair);
    CHECK(back[i].contexts == rs[i].contexts);
    CHECK(back[i].raw_answer == rs[i].raw_answer);
    CHECK(back[i].error == rs[i].error);
    CHECK(back[i].backend_failure == rs[i].backend_failure);
    CHECK(back[i].correct == rs[i].correct);
    CHECK(back[i].latency_ms == rs[i].latency_ms);
    CHECK(back[i].compress_latency_ms == rs[i].compress_latency_ms);
  }
  {
    std::ofstream bad(path, std::ios::app);
    bad << "{not json\n";
  }
  try {
    load_records(path);
    FAIL("expected a DatasetError");
  } catch (const DatasetError& e) {
    CHECK(e.line() == rs.size() + 1);
  }
  std::filesystem::remove(path);
}
