// creditxai command line: ingest, features, baselines, evaluate, ablate,
// report, trace verify, import-kaggle.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "creditxai/ablation.hpp"
#include "creditxai/corpus.hpp"
#include "creditxai/csv.hpp"
#include "creditxai/errors.hpp"
#include "creditxai/pipeline.hpp"

using namespace creditxai;
using json = nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoFailure("cannot read '" + p.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct EvalArgs {
  std::string config;
  std::string corpus;
  std::string backend;
  std::string out;
  std::string out_dir;
  std::string mode;
  std::string agent_set;
  int workers = -1;
};

PipelineConfig eval_config(const EvalArgs& a) {
  PipelineConfig cfg;
  if (!a.config.empty()) {
    cfg = load_config(a.config);
  } else if (std::filesystem::exists(std::filesystem::path(a.corpus) / "config.json")) {
    cfg = load_config(std::filesystem::path(a.corpus) / "config.json");
  }
  if (!a.backend.empty()) cfg.backend.type = a.backend;
  if (!a.mode.empty()) cfg.mode = parse_history_mode(a.mode);
  if (!a.agent_set.empty()) cfg.agent_set = parse_agent_set(a.agent_set);
  if (a.workers >= 0) cfg.workers = a.workers;
  cfg.validate();
  return cfg;
}

void add_eval_options(CLI::App* cmd, EvalArgs& a) {
  cmd->add_option("--config", a.config, "pipeline config JSON (default: <corpus>/config.json)");
  cmd->add_option("--corpus", a.corpus, "corpus directory")->required();
  cmd->add_option("--backend", a.backend, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--out", a.out, "results CSV")->required();
  cmd->add_option("--out-dir", a.out_dir, "trace and reports directory");
  cmd->add_option("--mode", a.mode, "history or no_history");
  cmd->add_option("--agent-set", a.agent_set, "e.g. BRA, BRA+FRA+CRA, ALL");
  cmd->add_option("--workers", a.workers, "worker threads (0 = all cores)");
}

void write_text(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

int cmd_ingest(const std::string& filings, const std::string& ratings, const std::string& out, std::size_t min_body) {
  std::map<std::pair<std::string, int>, std::string> sectors;
  if (!ratings.empty()) {
    for (const auto& s : parse_ratings_csv(slurp(ratings))) sectors[{s.key.company_id, s.key.fiscal_year}] = s.key.sector;
  }
  std::vector<std::filesystem::path> paths;
  for (const auto& e : std::filesystem::directory_iterator(filings)) {
    if (e.is_regular_file() && e.path().extension() == ".txt") paths.push_back(e.path());
  }
  std::sort(paths.begin(), paths.end());
  std::string lines;
  std::size_t n_items = 0;
  for (const auto& p : paths) {
    const std::string stem = p.stem().string();
    const auto us = stem.rfind('_');
    if (us == std::string::npos) {
      std::cerr << "skipping " << p.filename() << ": expected <company>_<year>.txt\n";
      continue;
    }
    FilingDocument doc;
    doc.key.company_id = stem.substr(0, us);
    doc.key.fiscal_year = std::stoi(stem.substr(us + 1));
    auto s = sectors.find({doc.key.company_id, doc.key.fiscal_year});
    doc.key.sector = s == sectors.end() ? "unknown" : s->second;
    doc.source_uri = p.string();
    doc.raw_text = slurp(p);
    for (const auto& item : parse_filing(doc, min_body)) {
      json j = {{"company_id", doc.key.company_id}, {"fiscal_year", doc.key.fiscal_year},
                {"sector", doc.key.sector},         {"item_id", item.item_id},
                {"title", item.title},              {"start", item.span.start},
                {"end", item.span.end},             {"stub", item.stub},
                {"body", item.body}};
      lines += j.dump() + "\n";
      ++n_items;
    }
  }
  write_text(out, lines);
  std::cerr << paths.size() << " filings, " << n_items << " items\n";
  return 0;
}

int cmd_features(const std::string& items_path, const std::string& provider_url, const std::string& fixtures,
                 bool lexical, const std::string& out, FeatureDims dims) {
  std::unique_ptr<FeatureProvider> provider;
  if (lexical) {
    provider = std::make_unique<LexicalProvider>(dims);
  } else if (!fixtures.empty()) {
    provider = std::make_unique<FixtureProvider>(load_store(fixtures).records());
  } else if (!provider_url.empty()) {
    HttpProviderOptions o;
    o.base_url = provider_url;
    provider = std::make_unique<HttpProvider>(o);
  } else {
    throw InvalidArgument("one of --lexical, --fixtures or --provider is required");
  }
  FeatureStore store(dims);
  std::istringstream in(slurp(items_path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorruptRecord(line_no, e.what());
    }
    if (j.value("stub", false)) continue;
    FilingItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.body = j.at("body").get<std::string>();
    CompanyYearKey key{j.at("company_id").get<std::string>(), j.at("fiscal_year").get<int>(),
                       j.at("sector").get<std::string>()};
    FeatureRecord r;
    r.key = key;
    r.item_id = item.item_id;
    r.features = compute_item_features(item, *provider, dims);
    r.provider_id = provider->id();
    r.content_digest = content_digest(item.body);
    store.put(std::move(r));
  }
  save_store(store, out);
  std::cerr << store.size() << " feature records\n";
  return 0;
}

int cmd_evaluate(const EvalArgs& a) {
  const PipelineConfig cfg = eval_config(a);
  const Corpus corpus = load_corpus(a.corpus);
  Resources res = make_resources(cfg, corpus);
  PipelineOptions opts;
  opts.out_dir = a.out_dir;
  const PipelineResult result = run_pipeline(cfg, corpus, res, opts);
  const AblationRow row = evaluate_run(cfg, result);
  write_text(a.out, results_csv({row}));
  for (const auto& o : result.outcomes) {
    if (o.error) std::cerr << o.key.company_id << " " << o.key.fiscal_year << ": " << to_string(*o.failed_stage)
                           << " failed: " << *o.error << "\n";
  }
  std::cerr << "run " << result.run_id << ": " << result.predictions.size() << "/" << result.test_set.size()
            << " keys, accuracy " << row.metrics.accuracy << (result.partial ? " (partial)" : "") << "\n";
  if (result.trace_file) std::cerr << "trace " << result.trace_file->string() << "\n";
  return result.partial ? 2 : 0;
}

int cmd_ablate(const std::string& grid_path, const EvalArgs& a) {
  const PipelineConfig base = eval_config(a);
  const Corpus corpus = load_corpus(a.corpus);
  Resources res = make_resources(base, corpus);
  PipelineOptions opts;
  opts.out_dir = a.out_dir;
  const auto rows = run_ablation(load_grid(grid_path), base, corpus, res, opts);
  write_text(a.out, results_csv(rows));
  std::cerr << rows.size() << " grid points\n";
  return 0;
}

int cmd_report(const std::string& decision, const std::string& out, const std::string& generated_at) {
  const RatingReport r = report_from_json(slurp(decision));
  const auto paths = write_report(r, out, generated_at.empty() ? utc_timestamp() : generated_at);
  std::cout << paths.markdown.string() << "\n" << paths.json.string() << "\n";
  return 0;
}

int cmd_trace_verify(const std::string& file) {
  const Trace t = load_trace(file);
  if (!t.header) throw CorruptRecord(1, "trace has no run header");
  const auto report = verify_trace(t.events, t.header->expected_keys, t.header->expected_stages);
  for (const auto& v : report.violations) std::cout << v << "\n";
  std::cout << report.keys_checked << " keys, " << report.events_checked << " events, " << report.violations.size()
            << " violations" << (t.partial.value_or(false) ? ", run marked partial" : "") << "\n";
  return report.ok() ? 0 : 1;
}

int cmd_import_kaggle(const std::string& csv_path, const std::string& out_dir) {
  const KaggleImport imp = import_kaggle_csv(csv_path);
  std::filesystem::create_directories(out_dir);
  write_file_atomic(std::filesystem::path(out_dir) / "ratings.csv", ratings_to_csv(imp.ratings));
  write_file_atomic(std::filesystem::path(out_dir) / "financials.csv", financials_to_csv(imp.financials));
  std::cerr << imp.ratings.size() << " company-years, " << imp.skipped_rows << " skipped, " << imp.duplicate_rows
            << " duplicates\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"creditxai: multi-agent credit rating pipeline"};
  app.require_subcommand(1);

  std::string filings, ratings, out;
  std::size_t min_body = kDefaultMinBodyChars;
  auto* ingest = app.add_subcommand("ingest", "split 10-K filings into items (JSONL)");
  ingest->add_option("--filings", filings, "directory of <company>_<year>.txt")->required();
  ingest->add_option("--ratings", ratings, "ratings.csv supplying sectors");
  ingest->add_option("--min-body", min_body, "items shorter than this are stubs");
  ingest->add_option("--out", out, "output JSONL or -")->required();

  std::string items, provider, fixtures;
  bool lexical = false;
  FeatureDims dims;
  auto* features = app.add_subcommand("features", "compute a feature store from ingested items");
  features->add_option("--items", items, "items JSONL from ingest")->required();
  auto* g = features->add_option_group("source");
  g->add_option("--provider", provider, "embedding service base URL");
  g->add_option("--fixtures", fixtures, "existing feature store to replay");
  g->add_flag("--lexical", lexical, "offline feature-hashing provider");
  g->require_option(1);
  features->add_option("--finance-dim", dims.finance);
  features->add_option("--general-dim", dims.general);
  features->add_option("--out", out, "feature store JSONL")->required();

  std::string financials;
  int cutoff = 0;
  std::size_t min_support = 5;
  auto* baselines = app.add_subcommand("baselines", "sector medians of financial indicators");
  baselines->add_option("--financials", financials, "financials.csv")->required();
  baselines->add_option("--cutoff", cutoff, "use rows with fiscal_year < cutoff (0 = all)");
  baselines->add_option("--min-support", min_support);
  baselines->add_option("--out", out, "output JSON or -")->required();

  EvalArgs eval;
  auto* evaluate = app.add_subcommand("evaluate", "run the pipeline over the test split and score it");
  add_eval_options(evaluate, eval);

  std::string grid;
  EvalArgs abl;
  auto* ablate = app.add_subcommand("ablate", "run a parameter grid");
  ablate->add_option("--grid", grid, "grid JSON")->required();
  add_eval_options(ablate, abl);

  std::string decision, generated_at;
  auto* report = app.add_subcommand("report", "re-render a report from its JSON sidecar");
  report->add_option("--decision", decision, "report JSON")->required();
  report->add_option("--out", out, "output directory")->required();
  report->add_option("--generated-at", generated_at);

  std::string trace_file;
  auto* trace = app.add_subcommand("trace", "trace tools");
  trace->require_subcommand(1);
  auto* verify = trace->add_subcommand("verify", "check a trace for completeness");
  verify->add_option("--file", trace_file)->required();

  std::string kaggle;
  auto* import = app.add_subcommand("import-kaggle", "convert the public rating CSV into corpus tables");
  import->add_option("--csv", kaggle)->required();
  import->add_option("--out", out, "corpus directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(filings, ratings, out, min_body);
    if (*features) return cmd_features(items, provider, fixtures, lexical, out, dims);
    if (*baselines) {
      auto rows = load_financials_csv(financials);
      if (cutoff > 0) std::erase_if(rows, [&](const FinancialVector& f) { return f.key.fiscal_year >= cutoff; });
      write_text(out, baselines_to_json(compute_baselines(rows, {}, min_support)) + "\n");
      return 0;
    }
    if (*evaluate) return cmd_evaluate(eval);
    if (*ablate) return cmd_ablate(grid, abl);
    if (*report) return cmd_report(decision, out, generated_at);
    if (*verify) return cmd_trace_verify(trace_file);
    if (*import) return cmd_import_kaggle(kaggle, out);
  } catch (const CorruptRecord& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
