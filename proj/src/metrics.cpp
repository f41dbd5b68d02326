#include "creditxai/metrics.hpp"

#include <set>

#include "creditxai/errors.hpp"

namespace creditxai {

MetricsReport compute_metrics(const std::map<CompanyYearKey, RatingGrade>& preds,
                              const std::vector<LabeledSample>& truth) {
  MetricsReport r;
  std::set<CompanyYearKey> seen;
  for (const auto& s : truth) {
    if (!seen.insert(s.key).second) throw InvalidArgument("duplicate truth key " + s.key.label());
    auto it = preds.find(s.key);
    if (it == preds.end()) throw MissingPrediction(s.key.label());
    ++r.confusion[grade_index(s.truth)][grade_index(it->second)];
  }
  r.n = truth.size();
  if (r.n == 0) return r;

  std::size_t correct = 0;
  for (int c = 0; c < kGradeCount; ++c) {
    ClassMetrics& m = r.per_class[c];
    for (int j = 0; j < kGradeCount; ++j) {
      m.support += r.confusion[c][j];
      m.predicted += r.confusion[j][c];
    }
    const std::size_t tp = r.confusion[c][c];
    correct += tp;
    m.precision = m.predicted ? static_cast<double>(tp) / static_cast<double>(m.predicted) : 0.0;
    m.recall = m.support ? static_cast<double>(tp) / static_cast<double>(m.support) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    const double w = static_cast<double>(m.support) / static_cast<double>(r.n);
    r.weighted_precision += w * m.precision;
    r.weighted_recall += w * m.recall;
    r.weighted_f1 += w * m.f1;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
  return r;
}

DatasetSplit split_dataset(const std::vector<LabeledSample>& samples, int cutoff_year) {
  DatasetSplit out;
  for (const auto& s : samples) {
    (s.key.fiscal_year < cutoff_year ? out.reference : out.test).push_back(s);
  }
  if (out.reference.empty() || out.test.empty()) {
    throw DegenerateSplit("cutoff " + std::to_string(cutoff_year) + " leaves " +
                          (out.reference.empty() ? "the reference set" : "the test set") + " empty");
  }
  return out;
}

}  // namespace creditxai
