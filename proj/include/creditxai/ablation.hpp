#pragma once

#include <string>
#include <vector>

#include "creditxai/metrics.hpp"
#include "creditxai/pipeline.hpp"

namespace creditxai {

// Axes left empty take the base config's value.
struct AblationGrid {
  std::vector<HistoryMode> modes;
  std::vector<AgentSet> agent_sets;
  std::vector<double> alphas;
  std::vector<double> deltas;
  std::vector<double> w_highs;
  std::vector<int> window_ks;
};

// {"modes": ["history", "no_history"], "agent_sets": ["BRA", "BRA+FRA+CRA", "ALL"],
//  "alpha": [...], "delta": [...], "w_high": [...], "K": [...]}
AblationGrid grid_from_json(const std::string& text);
AblationGrid load_grid(const std::filesystem::path& path);

// Cartesian product in mode, agent_set, alpha, delta, w_high, K order.
std::vector<PipelineConfig> expand_grid(const AblationGrid& grid, const PipelineConfig& base);

struct AblationRow {
  PipelineConfig config;
  MetricsReport metrics;
  std::size_t failed = 0;  // test keys without a prediction
};

// One pipeline run per grid point. Metrics cover the keys that produced a
// prediction; failures are counted in the row.
std::vector<AblationRow> run_ablation(const AblationGrid& grid, const PipelineConfig& base, const Corpus& corpus,
                                      Resources& resources, const PipelineOptions& options = {});

AblationRow evaluate_run(const PipelineConfig& cfg, const PipelineResult& result);

// mode, agent_set, alpha, delta, w_high, K, item_set, n, failed, accuracy,
// weighted_precision, weighted_recall, weighted_f1, then precision_<G>,
// recall_<G>, f1_<G>, support_<G> for every grade AAA..C.
const std::vector<std::string>& results_columns();
std::string results_csv(const std::vector<AblationRow>& rows);

}  // namespace creditxai
