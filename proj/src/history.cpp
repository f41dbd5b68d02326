#include "creditxai/history.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

const std::vector<float>& pick(const ItemFeatures& f, VectorChoice choice) {
  return choice == VectorChoice::finance ? f.finance_vec : f.general_vec;
}

}  // namespace

HistoryWindow build_history_window(const std::vector<HistoryRecord>& records, const CompanyYearKey& key, int k) {
  if (k < 1) throw PreconditionViolation("history window length must be at least 1, got " + std::to_string(k));
  HistoryWindow w;
  w.key = key;
  w.k = k;
  const int t = key.fiscal_year;
  for (const auto& r : records) {
    if (r.key.company_id != key.company_id) continue;
    const int y = r.key.fiscal_year;
    if (y < t - k || y > t - 1) continue;
    const bool seen = std::any_of(w.entries.begin(), w.entries.end(),
                                  [y](const HistoryRecord& e) { return e.key.fiscal_year == y; });
    if (!seen) w.entries.push_back(r);
  }
  std::sort(w.entries.begin(), w.entries.end(), [](const HistoryRecord& a, const HistoryRecord& b) {
    return a.key.fiscal_year < b.key.fiscal_year;
  });
  return w;
}

std::string_view to_string(VectorChoice c) { return c == VectorChoice::finance ? "finance" : "general"; }

VectorChoice parse_vector_choice(std::string_view text) {
  if (text == "finance") return VectorChoice::finance;
  if (text == "general") return VectorChoice::general;
  throw InvalidArgument("vector choice must be 'finance' or 'general', got '" + std::string(text) + "'");
}

double item_similarity(std::span<const float> current, std::span<const float> historical) {
  if (current.size() != historical.size()) {
    throw DimensionMismatch("cosine of vectors with widths " + std::to_string(current.size()) + " and " +
                            std::to_string(historical.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) {
    dot += static_cast<double>(current[i]) * historical[i];
    na += static_cast<double>(current[i]) * current[i];
    nb += static_cast<double>(historical[i]) * historical[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

YearSimilarity year_similarity(const std::map<std::string, ItemFeatures>& current,
                               const std::map<std::string, ItemFeatures>& historical,
                               const std::vector<std::string>& items, VectorChoice choice) {
  std::vector<std::string> wanted = items;
  if (wanted.empty()) {
    for (const auto& [id, f] : current) wanted.push_back(id);
    for (const auto& [id, f] : historical) {
      if (!current.count(id)) wanted.push_back(id);
    }
  }
  YearSimilarity out;
  for (const auto& id : wanted) {
    auto c = current.find(id);
    auto h = historical.find(id);
    if (c == current.end() || h == historical.end()) {
      ++out.excluded_items;
      continue;
    }
    out.per_item[id] = item_similarity(pick(c->second, choice), pick(h->second, choice));
  }
  return out;
}

double aggregate_year_similarity(const std::map<std::string, double>& per_item_sims) {
  if (per_item_sims.empty()) throw NoCommonItems("no item is present in both years");
  double sum = 0.0;
  for (const auto& [id, s] : per_item_sims) sum += s;
  return sum / static_cast<double>(per_item_sims.size());
}

const YearWeight* SimilarityWeights::find(int year) const {
  for (const auto& yw : per_year) {
    if (yw.year == year) return &yw;
  }
  return nullptr;
}

SimilarityWeights softmax_weights(const std::vector<std::pair<int, double>>& sims, double alpha) {
  if (sims.empty()) throw PreconditionViolation("softmax over an empty similarity list");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InvalidArgument("alpha must be finite and >= 0");
  double peak = -std::numeric_limits<double>::infinity();
  for (const auto& [year, s] : sims) peak = std::max(peak, alpha * s);
  SimilarityWeights w;
  w.alpha = alpha;
  double total = 0.0;
  for (const auto& [year, s] : sims) {
    const double e = std::exp(alpha * s - peak);
    w.per_year.push_back({year, s, e});
    total += e;
  }
  for (auto& yw : w.per_year) yw.weight /= total;
  return w;
}

SimilarityWeights compute_similarity_weights(const std::map<std::string, ItemFeatures>& current,
                                             const HistoryWindow& window, const std::vector<std::string>& items,
                                             VectorChoice choice, double alpha) {
  SimilarityWeights empty;
  empty.alpha = alpha;
  if (window.empty()) return empty;
  std::vector<std::pair<int, double>> sims;
  std::vector<int> no_common;
  for (const auto& entry : window.entries) {
    const YearSimilarity ys = year_similarity(current, entry.items, items, choice);
    if (ys.per_item.empty()) {
      no_common.push_back(entry.key.fiscal_year);
      sims.emplace_back(entry.key.fiscal_year, 0.0);
    } else {
      sims.emplace_back(entry.key.fiscal_year, aggregate_year_similarity(ys.per_item));
    }
  }
  SimilarityWeights w = softmax_weights(sims, alpha);
  w.years_without_common_items = std::move(no_common);
  return w;
}

std::string financial_summary(const FinancialVector& fin) {
  if (fin.indicators.empty()) return "no financial indicators";
  std::ostringstream s;
  bool first = true;
  for (const auto& [name, value] : fin.indicators) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", value);
    s << (first ? "" : ", ") << name << "=" << buf;
    first = false;
  }
  return s.str();
}

std::vector<int> history_render_order(const SimilarityWeights& weights) {
  std::vector<YearWeight> sorted = weights.per_year;
  std::sort(sorted.begin(), sorted.end(), [](const YearWeight& a, const YearWeight& b) {
    if (a.weight != b.weight) return a.weight > b.weight;
    return a.year > b.year;
  });
  std::vector<int> years;
  for (const auto& yw : sorted) years.push_back(yw.year);
  return years;
}

std::string render_history_context(const HistoryWindow& window, const SimilarityWeights& weights,
                                   VectorChoice choice) {
  if (window.empty()) throw PreconditionViolation("history context needs a non-empty window");
  std::ostringstream out;
  out << "HISTORY (K=" << window.k << ", alpha=" << fixed(weights.alpha, 2)
      << ", similarity basis: " << to_string(choice) << " embeddings; most similar year first)\n";
  for (int year : history_render_order(weights)) {
    const YearWeight* yw = weights.find(year);
    auto entry = std::find_if(window.entries.begin(), window.entries.end(),
                              [year](const HistoryRecord& r) { return r.key.fiscal_year == year; });
    if (entry == window.entries.end()) continue;
    out << "- FY" << year << " | weight " << fixed(yw->weight, 2) << " | sim " << fixed(yw->sim, 4)
        << " | prior grade " << to_string(entry->grade) << " | " << financial_summary(entry->financials) << "\n";
  }
  return out.str();
}

}  // namespace creditxai
