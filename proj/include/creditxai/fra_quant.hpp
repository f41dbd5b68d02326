#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "creditxai/ratings.hpp"

namespace creditxai {

struct FinancialVector {
  CompanyYearKey key;
  std::map<std::string, double> indicators;
};

// CSV with header `company_id,fiscal_year,sector,<indicator...>`. Empty cells
// are missing indicators; unparsable or non-finite cells raise CorruptRecord.
std::vector<FinancialVector> load_financials_csv(const std::filesystem::path& path);
std::vector<FinancialVector> parse_financials_csv(const std::string& text);

struct BaselineProvenance {
  std::string dataset_digest;
  int first_year = 0;
  int last_year = 0;
  std::size_t observations = 0;
  std::size_t min_support = 5;
};

// Per-sector medians plus an all-sector median used as fallback. Cells with
// fewer than min_support observations are absent rather than zero-filled.
struct IndustryBaselines {
  std::map<std::string, std::map<std::string, double>> per_sector;
  std::map<std::string, double> all_sectors;
  std::set<std::string> known_sectors;
  BaselineProvenance provenance;

  // Sector median if supported, else the all-sector median, else nothing.
  std::optional<double> lookup(const std::string& sector, const std::string& indicator) const;
};

double median(std::vector<double> values);

// Median over every company in the sector across every period in dataset.
// Callers exclude the evaluation years. An empty `sectors` means all sectors.
IndustryBaselines compute_baselines(const std::vector<FinancialVector>& dataset,
                                    const std::set<std::string>& sectors = {},
                                    std::size_t min_support = 5);

std::string baselines_to_json(const IndustryBaselines& b);
IndustryBaselines baselines_from_json(const std::string& text);

enum class DeviationStatus { ok, undefined_baseline, missing_indicator };

std::string_view to_string(DeviationStatus s);

struct IndicatorDeviation {
  std::optional<double> value;
  std::optional<double> baseline;
  std::optional<double> dev;  // present iff status == ok
  DeviationStatus status = DeviationStatus::missing_indicator;
};

struct DeviationReport {
  CompanyYearKey key;
  std::map<std::string, IndicatorDeviation> indicators;
  std::map<std::string, double> yoy;  // relative change vs prior year
};

inline constexpr double kBaselineEpsilon = 1e-9;

// dev = (f - baseline) / baseline per indicator in `schema` (empty schema:
// every indicator known to the baselines or present in fin). Throws
// UnknownSector when fin's sector was never seen by compute_baselines.
DeviationReport compute_deviations(const FinancialVector& fin, const std::optional<FinancialVector>& prior,
                                   const IndustryBaselines& baselines,
                                   const std::vector<std::string>& schema = {},
                                   double epsilon = kBaselineEpsilon);

struct AdjustmentPolicy {
  double dev_minor = 0.25;
  double dev_major = 0.75;
  double yoy_major = 0.40;
  int max_notches = 2;
  // true = higher values are better. Indicators not listed default to true.
  std::map<std::string, bool> higher_is_better = default_directionality();

  static std::map<std::string, bool> default_directionality();
  bool is_higher_better(const std::string& indicator) const;
  void validate() const;
};

struct IndicatorVote {
  std::string indicator;
  int vote = 0;  // in [-2, 2]; positive = supports an upgrade
  std::string reason;
};

struct VoteTally {
  std::vector<IndicatorVote> votes;  // one per indicator with status ok
  double mean_vote = 0.0;
};

// Each ok indicator votes -1/0/+1 on its direction-aware deviation (major
// breaches count double) plus a double vote for a major year-over-year move;
// the per-indicator total is clamped to [-2, 2]. Throws EmptyReport when no
// indicator has status ok.
VoteTally tally_votes(const DeviationReport& report, const AdjustmentPolicy& policy);

struct AdjustmentProposal {
  int notch_delta = 0;  // positive = upgrade (towards AAA)
  std::string rationale;
  VoteTally tally;
};

// notch_delta = clamp(round(mean_vote * 2), -max_notches, max_notches),
// then clamped so the shifted grade stays on the scale.
AdjustmentProposal propose_rating_adjustment(RatingGrade prev_grade, const DeviationReport& report,
                                             const AdjustmentPolicy& policy);

// Cold-start anchor: maps the mean vote in [-2, 2] onto a score around the
// scale midpoint (0.5 - mean/4) and returns the grade of that score.
RatingGrade deviation_implied_grade(const VoteTally& tally);

// The proposal handed to the financial agent: the grade it starts from, the
// notch delta and the grade that results. Without a prior rating the start
// grade is deviation_implied_grade and the delta is 0 (cold start).
struct FraProposal {
  AdjustmentProposal adjustment;
  RatingGrade base_grade = RatingGrade::BBB;
  RatingGrade proposed_grade = RatingGrade::BBB;
  bool cold_start = false;
};

FraProposal make_fra_proposal(const DeviationReport& report, std::optional<RatingGrade> prev_grade,
                              const AdjustmentPolicy& policy);

}  // namespace creditxai
