#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "creditxai/fusion.hpp"
#include "creditxai/history.hpp"

namespace creditxai {

struct ReportSection {
  std::string name;  // "composite", "business", "financial", "governance"
  AgentId agent = AgentId::CRA;
  RatingGrade grade = RatingGrade::BBB;
  RiskScore score{0.5};
  std::string rationale;
  std::vector<std::string> evidence;  // non-empty rationale lines of the signal
  std::optional<RatingGrade> initial_grade;
  std::optional<int> adjustment;
};

struct HistoryAppendixRow {
  int year = 0;
  std::optional<YearWeight> business;
  std::optional<YearWeight> governance;
};

struct RatingReport {
  CompanyYearKey key;
  FinalDecision final;
  std::vector<ReportSection> sections;  // composite, business, financial, governance
  std::vector<HistoryAppendixRow> history_appendix;
  double alpha = 5.0;
  std::string config_fingerprint;
};

// Display precision in the markdown body.
inline constexpr int kScoreDecimals = 4;
inline constexpr int kWeightDecimals = 2;

RatingReport render_report(const CompanyYearKey& key, const FinalDecision& decision,
                           const SimilarityWeights& business_weights, const SimilarityWeights& governance_weights,
                           const std::string& config_fingerprint);

// Fixed section order: Final, Composite, Business, Financial, Governance,
// History appendix. The timestamp sits alone on the second line.
std::string report_markdown(const RatingReport& report, const std::string& generated_at);

// Full-precision sidecar; no timestamp.
std::string report_json(const RatingReport& report);
RatingReport report_from_json(const std::string& text);

struct ReportPaths {
  std::filesystem::path markdown;
  std::filesystem::path json;
};

// Writes <company>_<year>.md and .json via write-temp-then-rename. Throws
// IoFailure.
ReportPaths write_report(const RatingReport& report, const std::filesystem::path& out_dir,
                         const std::string& generated_at);

// Writes text to path atomically (temp file in the same directory, rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

// Current UTC time as ISO-8601.
std::string utc_timestamp();

}  // namespace creditxai
