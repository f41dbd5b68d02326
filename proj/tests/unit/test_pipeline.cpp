#include <mutex>

#include "creditxai/ablation.hpp"
#include "creditxai/errors.hpp"
#include "creditxai/pipeline.hpp"
#include "helpers.hpp"

using namespace creditxai;

namespace {

// Records every prompt and optionally fails calls whose prompt contains `fail_on`.
class RecordingBackend : public ChatBackend {
 public:
  explicit RecordingBackend(std::unique_ptr<ChatBackend> inner, std::string fail_on = "")
      : inner_(std::move(inner)), fail_on_(std::move(fail_on)) {}

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const ChatParams& params) override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      prompts_.push_back(user_text);
    }
    if (!fail_on_.empty() && user_text.find(fail_on_) != std::string::npos) throw BackendUnavailable("injected");
    return inner_->complete(system_text, user_text, params);
  }

  std::vector<std::string> prompts() {
    std::lock_guard<std::mutex> lock(mu_);
    return prompts_;
  }

 private:
  std::unique_ptr<ChatBackend> inner_;
  std::string fail_on_;
  std::mutex mu_;
  std::vector<std::string> prompts_;
};

PipelineConfig fixture_config() { return load_config(testing::corpus_dir() / "config.json"); }

std::string grade_or_dash(const std::optional<RiskSignal>& s) {
  return s ? std::string(to_string(s->grade)) : "-";
}

std::string predictions_table(const PipelineResult& r) {
  std::string out = "company_id,fiscal_year,bra,fra,gra_initial,cra,gra_adjusted,final,final_score\n";
  for (const auto& o : r.outcomes) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", o.decision ? o.decision->score.value() : -1.0);
    out += o.key.company_id + "," + std::to_string(o.key.fiscal_year) + "," + grade_or_dash(o.bra) + "," +
           grade_or_dash(o.fra) + "," + grade_or_dash(o.gra_initial) + "," + grade_or_dash(o.cra) + "," +
           grade_or_dash(o.gra_adjusted) + "," + (o.prediction ? std::string(to_string(*o.prediction)) : "-") + "," +
           score + "\n";
  }
  return out;
}

}  // namespace

TEST_CASE("stage sets and prediction source") {
  CHECK(expected_stages(full_agent_set()).size() == 11);
  CHECK(expected_stages({AgentId::FRA}) ==
        std::vector<Stage>{Stage::INGEST, Stage::FEATURES, Stage::HISTORY, Stage::FRA_QUANT, Stage::FRA});
  CHECK(prediction_source(full_agent_set()) == AgentId::CAA);
  CHECK(prediction_source({AgentId::BRA, AgentId::FRA, AgentId::CRA}) == AgentId::CRA);
  CHECK(prediction_source({AgentId::BRA, AgentId::GRA}) == AgentId::GRA);
  CHECK(prediction_source({AgentId::BRA}) == AgentId::BRA);
}

TEST_CASE("full run on the fixture corpus matches the golden predictions") {
  const Corpus corpus = load_corpus(testing::corpus_dir());
  const PipelineConfig cfg = fixture_config();
  Resources res = make_resources(cfg, corpus);
  testing::TempDir out("run");
  const auto r = run_pipeline(cfg, corpus, res, {out.path(), "", "2026-01-01T00:00:00Z"});

  CHECK_FALSE(r.partial);
  CHECK(r.test_set.size() == 12);
  CHECK(r.predictions.size() == 12);
  CHECK(r.events.size() == 12 * 11);
  testing::check_golden(testing::fixture_dir() / "golden" / "predictions.csv", predictions_table(r));

  REQUIRE(r.trace_file.has_value());
  const Trace t = load_trace(*r.trace_file);
  CHECK(verify_trace(t.events, t.header->expected_keys).ok());
  CHECK(t.partial == false);

  const auto& first = r.outcomes.front();
  REQUIRE(first.report_paths.has_value());
  testing::check_golden(testing::fixture_dir() / "golden" / ("report_" + first.key.label() + ".md"),
                        testing::read_file(first.report_paths->markdown));
}

TEST_CASE("fra-only agent set passes the FRA grade through") {
  const Corpus corpus = load_corpus(testing::corpus_dir());
  PipelineConfig cfg = fixture_config();
  cfg.agent_set = {AgentId::FRA};
  Resources res = make_resources(cfg, corpus);
  const auto r = run_pipeline(cfg, corpus, res);
  CHECK(r.events.size() == 12 * 5);
  for (const auto& o : r.outcomes) {
    REQUIRE(o.fra.has_value());
    CHECK_FALSE(o.bra.has_value());
    CHECK_FALSE(o.decision.has_value());
    CHECK(o.prediction == o.fra->grade);
  }
}

TEST_CASE("no-history mode marks every business and governance prompt") {
  const Corpus corpus = load_corpus(testing::corpus_dir());
  PipelineConfig cfg = fixture_config();
  cfg.mode = HistoryMode::no_history;
  Resources res = make_resources(cfg, corpus);
  auto* rec = new RecordingBackend(std::move(res.backend));
  res.backend.reset(rec);
  const auto r = run_pipeline(cfg, corpus, res);
  CHECK_FALSE(r.partial);

  int text_prompts = 0;
  for (const auto& p : rec->prompts()) {
    if (p.rfind("AGENT: BRA\n", 0) == 0 || p.rfind("AGENT: GRA\n", 0) == 0) {
      ++text_prompts;
      CHECK(p.find(kNoHistoryMarker) != std::string::npos);
    }
  }
  CHECK(text_prompts == 24);
  for (const auto& o : r.outcomes) CHECK(o.fra->flags.cold_start);
}

TEST_CASE("a failing key is recorded and the others continue") {
  const Corpus corpus = load_corpus(testing::corpus_dir());
  const PipelineConfig cfg = fixture_config();
  Resources res = make_resources(cfg, corpus);
  res.backend = std::make_unique<RecordingBackend>(std::move(res.backend), "AGENT: GRA\nCOMPANY: INDA\nFISCAL_YEAR: 2021");
  testing::TempDir out("partial");
  const auto r = run_pipeline(cfg, corpus, res, {out.path(), "", "t"});

  CHECK(r.partial);
  CHECK(r.predictions.size() == 11);
  const auto bad = std::find_if(r.outcomes.begin(), r.outcomes.end(),
                                [](const KeyOutcome& o) { return o.key.label() == "INDA_2021"; });
  REQUIRE(bad != r.outcomes.end());
  CHECK(bad->failed_stage == Stage::GRA_INIT);
  CHECK_FALSE(bad->prediction.has_value());
  CHECK(bad->error->find("injected") != std::string::npos);

  const Trace t = load_trace(*r.trace_file);
  CHECK(t.partial == true);
  const auto report = verify_trace(t.events, t.header->expected_keys);
  CHECK_FALSE(report.ok());
  for (const auto& v : report.violations) CHECK(v.rfind("INDA_2021: ", 0) == 0);
  CHECK(std::any_of(report.violations.begin(), report.violations.end(),
                    [](const std::string& v) { return v.find("stage GRA_INIT failed") != std::string::npos; }));

  // ablation metrics cover the predicted keys and count the failure
  const AblationRow row = evaluate_run(cfg, r);
  CHECK(row.failed == 1);
  CHECK(row.metrics.n == 11);
}

TEST_CASE("missing filing fails INGEST only for that key") {
  testing::TempDir dir("nofiling");
  std::filesystem::copy(testing::corpus_dir(), dir.path() / "corpus", std::filesystem::copy_options::recursive);
  std::filesystem::remove(dir.path() / "corpus" / "filings" / "UTLA_2020.txt");
  const Corpus corpus = load_corpus(dir.path() / "corpus");
  const PipelineConfig cfg = fixture_config();
  Resources res = make_resources(cfg, corpus);
  const auto r = run_pipeline(cfg, corpus, res);
  CHECK(r.partial);
  CHECK(r.predictions.size() == 11);
  const auto bad = std::find_if(r.outcomes.begin(), r.outcomes.end(),
                                [](const KeyOutcome& o) { return o.key.label() == "UTLA_2020"; });
  CHECK(bad->failed_stage == Stage::INGEST);
}

TEST_CASE("test-year financial rows never reach baselines or history windows") {
  testing::TempDir dir("leak");
  std::filesystem::copy(testing::corpus_dir(), dir.path() / "corpus", std::filesystem::copy_options::recursive);
  const Corpus clean = load_corpus(testing::corpus_dir());
  Corpus poisoned = load_corpus(dir.path() / "corpus");
  for (auto& f : poisoned.financials) {
    if (f.key.fiscal_year >= 2020) {
      f.indicators["poison"] = 1e300;
      f.indicators["current_ratio"] *= 1000.0;
    }
  }
  const PipelineConfig cfg = fixture_config();
  const auto b_clean = reference_baselines(clean, cfg.cutoff_year, cfg.min_support);
  const auto b_poison = reference_baselines(poisoned, cfg.cutoff_year, cfg.min_support);
  CHECK(b_clean.per_sector == b_poison.per_sector);
  CHECK(b_clean.all_sectors == b_poison.all_sectors);
  CHECK(b_poison.all_sectors.count("poison") == 0);

  Resources res = make_resources(cfg, poisoned);
  const HistoryWindow w = history_window_for({"TECB", 2020, "technology"}, poisoned, cfg, res.store, *res.provider);
  REQUIRE(w.entries.size() == 2);
  for (const auto& e : w.entries) {
    CHECK(e.key.fiscal_year < 2020);
    CHECK(e.financials.indicators.count("poison") == 0);
  }
}
