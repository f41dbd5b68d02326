#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "creditxai/config.hpp"
#include "creditxai/corpus.hpp"
#include "creditxai/reporting.hpp"
#include "creditxai/supervision.hpp"

namespace creditxai {

// Feature store, provider for cache misses and chat backend for one run.
struct Resources {
  FeatureStore store;
  std::unique_ptr<FeatureProvider> provider;
  std::unique_ptr<ChatBackend> backend;
};

// store: <corpus>/<features.store> when present. provider: store -> fixture
// lookup over the store, lexical -> LexicalProvider, http -> HttpProvider.
// backend: mock rules from <corpus>/<backend.rules> (none if absent) or the
// HTTP chat endpoint.
Resources make_resources(const PipelineConfig& cfg, const Corpus& corpus);
std::unique_ptr<ChatBackend> make_backend(const PipelineConfig& cfg, const std::filesystem::path& corpus_root);

// Stages a run executes for an agent set; the full set gives all eleven.
std::vector<Stage> expected_stages(const AgentSet& set);

// Which agent's grade is the prediction: CAA, else CRA, else GRA, else FRA,
// else BRA.
AgentId prediction_source(const AgentSet& set);

// Baselines from financial rows with fiscal_year < cutoff_year only.
IndustryBaselines reference_baselines(const Corpus& corpus, int cutoff_year, std::size_t min_support);

// Prior years t-K .. t-1 of key that carry a rating, with their features and
// financials. Nothing from year t or later is read.
HistoryWindow history_window_for(const CompanyYearKey& key, const Corpus& corpus, const PipelineConfig& cfg,
                                 FeatureStore& store, FeatureProvider& provider);

struct PipelineOptions {
  std::filesystem::path out_dir;  // trace and reports/ go here; empty = nothing written
  std::string run_id;             // empty = derived from config and test keys
  std::string generated_at;       // empty = current UTC time
};

struct KeyOutcome {
  CompanyYearKey key;
  std::optional<RatingGrade> prediction;
  std::optional<RiskSignal> bra, fra, gra_initial, cra, gra_adjusted;
  std::optional<FinalDecision> decision;
  std::optional<RatingReport> report;
  std::optional<ReportPaths> report_paths;
  std::optional<Stage> failed_stage;
  std::optional<std::string> error;
};

struct PipelineResult {
  std::string run_id;
  std::string config_fingerprint;
  std::vector<Stage> expected_stages;
  std::vector<LabeledSample> test_set;
  std::vector<KeyOutcome> outcomes;  // in test-set order
  std::map<CompanyYearKey, RatingGrade> predictions;
  std::vector<TraceEvent> events;  // by key, then start time
  std::optional<std::filesystem::path> trace_file;
  bool partial = false;
};

// Runs every test key (fiscal_year >= cutoff) through the stages of the
// configured agent set on a worker pool. A failing stage is recorded in the
// trace with its error; the other keys continue and the run is marked
// partial.
PipelineResult run_pipeline(const PipelineConfig& cfg, const Corpus& corpus, Resources& resources,
                            const PipelineOptions& options = {});

}  // namespace creditxai
