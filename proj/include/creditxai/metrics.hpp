#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <vector>

#include "creditxai/ratings.hpp"

namespace creditxai {

struct LabeledSample {
  CompanyYearKey key;
  RatingGrade truth = RatingGrade::BBB;
};

struct ClassMetrics {
  double precision = 0.0;  // 0 when the class is never predicted
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
  std::size_t predicted = 0;
};

// confusion[truth][predicted]
using ConfusionMatrix = std::array<std::array<std::size_t, kGradeCount>, kGradeCount>;

struct MetricsReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  std::array<ClassMetrics, kGradeCount> per_class{};
  // Averages weighted by support; classes with no support drop out.
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double weighted_f1 = 0.0;
  ConfusionMatrix confusion{};
};

// Throws MissingPrediction for a truth key without a prediction and
// InvalidArgument for duplicate truth keys.
MetricsReport compute_metrics(const std::map<CompanyYearKey, RatingGrade>& preds,
                              const std::vector<LabeledSample>& truth);

struct DatasetSplit {
  std::vector<LabeledSample> reference;  // years < cutoff
  std::vector<LabeledSample> test;       // years >= cutoff
};

// Temporal split on fiscal year. Throws DegenerateSplit when either side is
// empty.
DatasetSplit split_dataset(const std::vector<LabeledSample>& samples, int cutoff_year);

}  // namespace creditxai
