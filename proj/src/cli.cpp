#include "conceptrag/cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "conceptrag/corpus.hpp"
#include "conceptrag/hash.hpp"
#include "conceptrag/penman.hpp"
#include "conceptrag/report.hpp"

namespace conceptrag::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

void emit(const std::optional<fs::path>& path, std::string_view content, std::ostream& out) {
  if (path) write_file(*path, content);
  else out << content;
}

bool is_random(const TraversalMode& t) { return t.kind != TraversalMode::Kind::Dfs; }

// Maps exceptions onto exit codes: bad flags or config values are usage
// errors, unreadable or malformed inputs are data errors.
template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const BackendError& e) {
    err << "backend error: " << e.what() << '\n';
    return kBackend;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

fs::path results_file(const fs::path& p) { return fs::is_directory(p) ? p / "results.jsonl" : p; }

std::string run_label(const fs::path& p) {
  const fs::path dir = fs::is_directory(p) ? p : p.parent_path();
  std::string name = dir.filename().string();
  if (name.empty() || name == ".") name = fs::absolute(dir).lexically_normal().filename().string();
  return name.empty() ? p.string() : name;
}

}  // namespace

int cmd_parse(const ParseOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::string text;
    if (opt.input == "-") {
      std::stringstream ss;
      ss << std::cin.rdbuf();
      text = ss.str();
    } else {
      text = read_file(opt.input);
    }
    const auto graphs = parse_amr_corpus(text);
    if (graphs.empty()) throw std::runtime_error(opt.input + ": no AMR graph found");
    std::string rendered;
    if (graphs.size() == 1) {
      rendered = graph_to_json(graphs.front());
    } else {
      json arr = json::array();
      for (const auto& g : graphs) arr.push_back(json::parse(graph_to_json(g, -1)));
      rendered = arr.dump(2);
    }
    emit(opt.output, rendered + "\n", out);
    return kOk;
  });
}

int cmd_distill(const DistillOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    DistillConfig config = opt.config ? load_distill_config(*opt.config) : DistillConfig{};
    const AmrGraph graph = parse_amr(read_file(opt.amr));
    const std::string doc = read_file(opt.document);
    std::optional<IdfIndex> idf;
    if (opt.idf_docs) {
      std::vector<std::string> docs;
      std::istringstream lines(read_file(*opt.idf_docs));
      for (std::string line; std::getline(lines, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) docs.push_back(line);
      idf = build_idf_index(docs);
    }
    const ConceptSet set = distill_concepts(graph, doc, idf ? &*idf : nullptr, opt.traversal, config);
    if (opt.json) {
      emit(opt.output, concept_set_to_json(set) + "\n", out);
    } else {
      std::string lines;
      for (const auto& c : set.concepts) lines += c.text + "\n";
      emit(opt.output, lines, out);
    }
    return kOk;
  });
}

int cmd_stats(const StatsOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    auto pairs = load_dataset(opt.dataset);
    if (opt.screen) pairs = screen_pairs(pairs, true, opt.s_pop_max);
    const KGroups groups = group_by_k(pairs);
    out << stats_tsv(groups.stats, opt.label.value_or(opt.dataset.stem().string()));
    return kOk;
  });
}

int cmd_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cfg.output_dir.empty()) throw UsageError("eval needs --out");
    if (cfg.mode.kind == CompressionMode::Kind::Concepts && is_random(cfg.mode.traversal) && !cfg.seed_given)
      throw UsageError("random traversal requires --seed");
    DistillConfig distill = cfg.distill_config ? load_distill_config(*cfg.distill_config) : DistillConfig{};
    distill.traversal = cfg.mode.traversal;
    LlmBackendSpec backend = cfg.backend_spec ? load_backend_spec(*cfg.backend_spec) : LlmBackendSpec{};
    AmrProvider provider;
    if (cfg.parse_url) provider = http_parse_client(*cfg.parse_url, backend.timeout);

    const std::string dataset_text = read_file(cfg.dataset);
    const auto all_pairs = parse_dataset(dataset_text);
    const auto pairs = cfg.screen ? screen_pairs(all_pairs, true, cfg.s_pop_max) : all_pairs;

    auto records = run_pipeline(pairs, cfg.mode, backend, distill, provider);
    score_records(records);

    fs::create_directories(cfg.output_dir);
    save_records(cfg.output_dir / "results.jsonl", records);

    RunManifest manifest;
    manifest.mode = to_string(cfg.mode.kind);
    manifest.traversal = to_string(cfg.mode.traversal.kind);
    if (cfg.seed_given) manifest.seed = cfg.mode.traversal.seed;
    manifest.distill_config_json = distill_config_to_json(distill);
    manifest.backend_json = backend_spec_to_json(backend);
    manifest.dataset_path = cfg.dataset.string();
    manifest.dataset_hash = git_blob_hash(dataset_text);
    manifest.pair_count = all_pairs.size();
    manifest.screened_count = pairs.size();
    write_file(cfg.output_dir / "manifest.json", manifest.to_json() + "\n");

    std::vector<RunSummary> runs{summarize_run(records, run_label(cfg.output_dir), cfg.intervals)};
    write_file(cfg.output_dir / "summary.json", report_json(runs) + "\n");

    std::size_t failures = 0, backend_failures = 0;
    for (const auto& r : records) {
      if (!r.error) continue;
      ++failures;
      if (r.backend_failure) ++backend_failures;
      err << "pair '" << r.pair.question << "': " << *r.error << '\n';
    }
    out << report_tsv(runs);
    if (!records.empty() && backend_failures == records.size()) {
      err << "backend error: every request failed\n";
      return static_cast<int>(kBackend);
    }
    if (failures > 0) err << failures << " of " << records.size() << " pairs failed\n";
    return static_cast<int>(kOk);
  });
}

int cmd_report(const ReportOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.results.empty()) throw UsageError("report needs at least one results directory");
    std::vector<RunSummary> runs;
    for (const auto& p : opt.results) {
      auto records = load_records(results_file(p));
      for (const auto& r : records)
        if (!r.correct) throw DatasetError(results_file(p).string() + ": record is not scored", 0);
      runs.push_back(summarize_run(records, run_label(p), opt.intervals));
    }
    attach_deltas(runs);
    const fs::path dir = opt.output_dir.value_or(fs::is_directory(opt.results.front())
                                                     ? opt.results.front()
                                                     : opt.results.front().parent_path());
    fs::create_directories(dir);
    const std::string tsv = report_tsv(runs);
    write_file(dir / "report.tsv", tsv);
    write_file(dir / "report.json", report_json(runs) + "\n");
    if (opt.svg) write_file(dir / "curve.svg", render_svg(runs));
    out << tsv;
    return static_cast<int>(kOk);
  });
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AMR concept distillation and RAG evaluation"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config, out_path, mode_name, traversal_name;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> interval_names;
  app.add_option("--config", config, "Distillation config (JSON)");
  app.add_option("--out", out_path, "Output file or directory");
  app.add_option("--seed", seed, "Seed for random traversal modes");
  app.add_option("--mode", mode_name, "vanilla | concepts | keywords | summary");
  app.add_option("--traversal", traversal_name, "dfs | global-random | local-random");
  app.add_option("--interval", interval_names, "normal | long | a,b (repeatable)");

  ParseOptions parse_opt;
  auto* parse_cmd = app.add_subcommand("parse", "PENMAN to JSON");
  parse_cmd->add_option("input", parse_opt.input, "PENMAN file, - for stdin");

  DistillOptions distill_opt;
  std::string idf_docs;
  auto* distill_cmd = app.add_subcommand("distill", "Concepts of one AMR graph and its document");
  distill_cmd->add_option("amr", distill_opt.amr, "PENMAN file")->required();
  distill_cmd->add_option("document", distill_opt.document, "Source document")->required();
  distill_cmd->add_flag("--json", distill_opt.json, "JSON with provenance and spans");
  distill_cmd->add_option("--idf-docs", idf_docs, "Corpus for the frequent-term filter, one document per line");

  StatsOptions stats_opt;
  bool stats_screen = false;
  std::optional<std::int64_t> stats_pop;
  std::string stats_label;
  auto* stats_cmd = app.add_subcommand("stats", "Pairs per K as TSV");
  stats_cmd->add_option("dataset", stats_opt.dataset, "JSONL dataset")->required();
  stats_cmd->add_flag("--screen", stats_screen, "Apply screening first");
  stats_cmd->add_option("--s-pop-max", stats_pop, "Popularity bound for screening");
  stats_cmd->add_option("--label", stats_label, "Row label");

  RunConfig run_cfg;
  std::string dataset, backend, parse_url;
  bool no_screen = false;
  std::optional<std::int64_t> eval_pop;
  auto* eval_cmd = app.add_subcommand("eval", "Run the pipeline over a dataset");
  eval_cmd->add_option("--dataset", dataset, "JSONL dataset")->required();
  eval_cmd->add_option("--backend", backend, "Backend spec (JSON); stub when omitted");
  eval_cmd->add_option("--parse-url", parse_url, "AMR parse service for documents without inline AMR");
  eval_cmd->add_flag("--no-screen", no_screen, "Keep every pair");
  eval_cmd->add_option("--s-pop-max", eval_pop, "Popularity bound for screening");

  ReportOptions report_opt;
  std::vector<std::string> result_paths;
  auto* report_cmd = app.add_subcommand("report", "Accuracy, Intg, compression and latency tables");
  report_cmd->add_option("results", result_paths, "Run directories or results.jsonl files")->required();
  report_cmd->add_flag("--svg", report_opt.svg, "Also write curve.svg");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  TraversalMode traversal;
  std::vector<Interval> intervals;
  try {
    if (traversal_name) {
      traversal.kind = parse_traversal_kind(*traversal_name);
    } else if (config) {
      traversal.kind = load_distill_config(*config).traversal.kind;
    }
    if (seed) traversal.seed = *seed;
    for (const auto& s : interval_names) intervals.push_back(Interval::parse(s));
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const MetricError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  const bool needs_seed = traversal.kind != TraversalMode::Kind::Dfs && !seed;

  if (parse_cmd->parsed()) {
    if (out_path) parse_opt.output = *out_path;
    return cmd_parse(parse_opt, out, err);
  }
  if (distill_cmd->parsed()) {
    if (needs_seed) {
      err << "usage error: random traversal requires --seed\n";
      return kUsage;
    }
    if (config) distill_opt.config = *config;
    if (out_path) distill_opt.output = *out_path;
    if (!idf_docs.empty()) distill_opt.idf_docs = idf_docs;
    distill_opt.traversal = traversal;
    return cmd_distill(distill_opt, out, err);
  }
  if (stats_cmd->parsed()) {
    stats_opt.screen = stats_screen;
    if (stats_pop) stats_opt.s_pop_max = *stats_pop;
    if (!stats_label.empty()) stats_opt.label = stats_label;
    return cmd_stats(stats_opt, out, err);
  }
  if (eval_cmd->parsed()) {
    run_cfg.dataset = dataset;
    try {
      run_cfg.mode.kind = parse_compression_kind(mode_name.value_or("concepts"));
    } catch (const std::invalid_argument& e) {
      err << "usage error: " << e.what() << '\n';
      return kUsage;
    }
    run_cfg.mode.traversal = traversal;
    run_cfg.seed_given = seed.has_value();
    if (config) run_cfg.distill_config = *config;
    if (!backend.empty()) run_cfg.backend_spec = backend;
    if (!parse_url.empty()) run_cfg.parse_url = parse_url;
    if (!intervals.empty()) run_cfg.intervals = intervals;
    if (out_path) run_cfg.output_dir = *out_path;
    run_cfg.screen = !no_screen;
    if (eval_pop) run_cfg.s_pop_max = *eval_pop;
    return cmd_eval(run_cfg, out, err);
  }
  if (report_cmd->parsed()) {
    for (const auto& p : result_paths) report_opt.results.emplace_back(p);
    if (!intervals.empty()) report_opt.intervals = intervals;
    if (out_path) report_opt.output_dir = *out_path;
    return cmd_report(report_opt, out, err);
  }
  return kUsage;
}

}  // namespace conceptrag::cli
