#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "creditxai/features.hpp"
#include "creditxai/fra_quant.hpp"
#include "creditxai/ratings.hpp"

namespace creditxai {

// One prior year of a company: its item features, financials and rating.
struct HistoryRecord {
  CompanyYearKey key;
  std::map<std::string, ItemFeatures> items;
  FinancialVector financials;
  RatingGrade grade = RatingGrade::BBB;
};

// Years t-K .. t-1 for key (year t), strictly increasing, gaps allowed.
struct HistoryWindow {
  CompanyYearKey key;
  int k = 3;
  std::vector<HistoryRecord> entries;

  bool empty() const { return entries.empty(); }
  // Most recent prior year, if any.
  const HistoryRecord* latest() const { return entries.empty() ? nullptr : &entries.back(); }
};

// Keeps the records of key's company with years in [t-K, t-1]; the first
// record wins when a year appears twice. Throws PreconditionViolation for K < 1.
HistoryWindow build_history_window(const std::vector<HistoryRecord>& records, const CompanyYearKey& key, int k);

enum class VectorChoice { finance, general };

std::string_view to_string(VectorChoice c);
VectorChoice parse_vector_choice(std::string_view text);

// Cosine similarity clamped into [-1, 1]. Throws DimensionMismatch or
// ZeroVector.
double item_similarity(std::span<const float> current, std::span<const float> historical);

struct YearSimilarity {
  std::map<std::string, double> per_item;
  std::size_t excluded_items = 0;  // wanted items absent from either year
};

// Per-item cosine similarities over items present in both years, restricted
// to `items` when non-empty.
YearSimilarity year_similarity(const std::map<std::string, ItemFeatures>& current,
                               const std::map<std::string, ItemFeatures>& historical,
                               const std::vector<std::string>& items, VectorChoice choice);

// Arithmetic mean. Throws NoCommonItems on an empty map.
double aggregate_year_similarity(const std::map<std::string, double>& per_item_sims);

struct YearWeight {
  int year = 0;
  double sim = 0.0;
  double weight = 0.0;
};

struct SimilarityWeights {
  double alpha = 5.0;
  std::vector<YearWeight> per_year;  // in input order
  std::vector<int> years_without_common_items;

  bool empty() const { return per_year.empty(); }
  const YearWeight* find(int year) const;
};

// w_k = exp(alpha * sim_k) / sum_l exp(alpha * sim_l), with max subtraction.
SimilarityWeights softmax_weights(const std::vector<std::pair<int, double>>& sims, double alpha);

// Year-level similarity of the window's entries to the current items, then
// softmax. Years sharing no items with the current filing get sim 0.
// Returns empty weights for an empty window.
SimilarityWeights compute_similarity_weights(const std::map<std::string, ItemFeatures>& current,
                                             const HistoryWindow& window, const std::vector<std::string>& items,
                                             VectorChoice choice, double alpha);

// One-line "name=value" summary of a financial vector, names sorted.
std::string financial_summary(const FinancialVector& fin);

// Prompt block listing prior years by descending weight (ties: later year
// first) with weight, similarity, prior grade and financial summary.
// Throws PreconditionViolation on an empty window.
std::string render_history_context(const HistoryWindow& window, const SimilarityWeights& weights,
                                   VectorChoice choice);

// Years of the window in render order.
std::vector<int> history_render_order(const SimilarityWeights& weights);

}  // namespace creditxai
