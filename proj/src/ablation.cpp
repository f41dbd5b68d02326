#include "creditxai/ablation.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "creditxai/csv.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

template <typename T>
std::vector<T> or_base(const std::vector<T>& axis, T base) {
  return axis.empty() ? std::vector<T>{base} : axis;
}

}  // namespace

AblationGrid grid_from_json(const std::string& text) {
  AblationGrid g;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw InvalidArgument("grid must be a JSON object");
    for (const auto& [k, v] : j.items()) {
      if (k == "modes") {
        for (const auto& m : v) g.modes.push_back(parse_history_mode(m.get<std::string>()));
      } else if (k == "agent_sets") {
        for (const auto& a : v) g.agent_sets.push_back(parse_agent_set(a.get<std::string>()));
      } else if (k == "alpha") {
        g.alphas = v.get<std::vector<double>>();
      } else if (k == "delta") {
        g.deltas = v.get<std::vector<double>>();
      } else if (k == "w_high") {
        g.w_highs = v.get<std::vector<double>>();
      } else if (k == "K") {
        g.window_ks = v.get<std::vector<int>>();
      } else {
        throw InvalidArgument("grid: unknown axis '" + k + "'");
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("grid: ") + e.what());
  }
  return g;
}

AblationGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read grid '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return grid_from_json(s.str());
}

std::vector<PipelineConfig> expand_grid(const AblationGrid& grid, const PipelineConfig& base) {
  std::vector<PipelineConfig> out;
  for (HistoryMode m : or_base(grid.modes, base.mode)) {
    for (const AgentSet& set : or_base(grid.agent_sets, base.agent_set)) {
      for (double a : or_base(grid.alphas, base.alpha)) {
        for (double d : or_base(grid.deltas, base.fusion.delta)) {
          for (double wh : or_base(grid.w_highs, base.fusion.w_high)) {
            for (int k : or_base(grid.window_ks, base.window_k)) {
              PipelineConfig c = base;
              c.mode = m;
              c.agent_set = set;
              c.alpha = a;
              c.fusion.delta = d;
              c.fusion.w_high = wh;
              c.window_k = k;
              c.validate();
              out.push_back(std::move(c));
            }
          }
        }
      }
    }
  }
  return out;
}

AblationRow evaluate_run(const PipelineConfig& cfg, const PipelineResult& result) {
  AblationRow row;
  row.config = cfg;
  std::vector<LabeledSample> covered;
  for (const auto& s : result.test_set) {
    if (result.predictions.count(s.key)) {
      covered.push_back(s);
    } else {
      ++row.failed;
    }
  }
  row.metrics = compute_metrics(result.predictions, covered);
  return row;
}

std::vector<AblationRow> run_ablation(const AblationGrid& grid, const PipelineConfig& base, const Corpus& corpus,
                                      Resources& resources, const PipelineOptions& options) {
  std::vector<AblationRow> rows;
  for (const PipelineConfig& cfg : expand_grid(grid, base)) {
    const PipelineResult result = run_pipeline(cfg, corpus, resources, options);
    rows.push_back(evaluate_run(cfg, result));
  }
  return rows;
}

const std::vector<std::string>& results_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c = {"mode",     "agent_set", "alpha",    "delta",    "w_high",
                                  "K",        "item_set",  "n",        "failed",   "accuracy",
                                  "weighted_precision", "weighted_recall", "weighted_f1"};
    for (RatingGrade g : kAllGrades) {
      const std::string n(to_string(g));
      for (const char* m : {"precision_", "recall_", "f1_", "support_"}) c.push_back(m + n);
    }
    return c;
  }();
  return cols;
}

std::string results_csv(const std::vector<AblationRow>& rows) {
  std::string out = csv::join_row(results_columns()) + "\n";
  for (const auto& r : rows) {
    std::string items;
    for (const auto& id : r.config.item_set) items += (items.empty() ? "" : "|") + id;
    std::vector<std::string> f = {std::string(to_string(r.config.mode)),
                                  agent_set_label(r.config.agent_set),
                                  short_num(r.config.alpha),
                                  short_num(r.config.fusion.delta),
                                  short_num(r.config.fusion.w_high),
                                  std::to_string(r.config.window_k),
                                  items,
                                  std::to_string(r.metrics.n),
                                  std::to_string(r.failed),
                                  num(r.metrics.accuracy),
                                  num(r.metrics.weighted_precision),
                                  num(r.metrics.weighted_recall),
                                  num(r.metrics.weighted_f1)};
    for (const auto& c : r.metrics.per_class) {
      f.push_back(num(c.precision));
      f.push_back(num(c.recall));
      f.push_back(num(c.f1));
      f.push_back(std::to_string(c.support));
    }
    out += csv::join_row(f) + "\n";
  }
  return out;
}

}  // namespace creditxai
