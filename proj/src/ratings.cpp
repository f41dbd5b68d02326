#include "creditxai/ratings.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

constexpr std::array<std::string_view, kGradeCount> kGradeNames = {"AAA", "AA", "A",   "BBB",
                                                                   "BB",  "B",  "CCC", "C"};
constexpr std::array<std::string_view, 5> kAgentNames = {"BRA", "FRA", "GRA", "CRA", "CAA"};

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

RatingGrade grade_from_index(int index) {
  if (index < 0 || index >= kGradeCount) {
    throw InvalidArgument("grade index out of range: " + std::to_string(index));
  }
  return static_cast<RatingGrade>(index);
}

RatingGrade grade_from_clamped_index(int index) {
  return static_cast<RatingGrade>(std::clamp(index, 0, kGradeCount - 1));
}

std::string_view to_string(RatingGrade g) { return kGradeNames[grade_index(g)]; }

std::optional<RatingGrade> try_parse_grade(std::string_view text) {
  const std::string u = upper(text);
  for (int i = 0; i < kGradeCount; ++i) {
    if (u == kGradeNames[i]) return static_cast<RatingGrade>(i);
  }
  return std::nullopt;
}

RatingGrade parse_grade(std::string_view text) {
  if (auto g = try_parse_grade(text)) return *g;
  throw InvalidArgument("not a rating grade: '" + std::string(text) + "'");
}

RiskScore::RiskScore(double value) : value_(value) {
  if (!std::isfinite(value) || value < 0.0 || value > 1.0) {
    throw InvalidArgument("risk score outside [0,1]: " + std::to_string(value));
  }
}

RiskScore grade_to_score(RatingGrade grade) {
  return RiskScore((grade_index(grade) + 0.5) / kGradeCount);
}

RatingGrade score_to_grade(RiskScore score) {
  const int index = static_cast<int>(std::floor(score.value() * kGradeCount));
  return grade_from_clamped_index(index);
}

RatingGrade apply_notches(RatingGrade grade, int notch_delta) {
  return grade_from_clamped_index(grade_index(grade) - notch_delta);
}

std::string_view to_string(AgentId id) { return kAgentNames[static_cast<int>(id)]; }

AgentId parse_agent_id(std::string_view text) {
  const std::string u = upper(text);
  for (std::size_t i = 0; i < kAgentNames.size(); ++i) {
    if (u == kAgentNames[i]) return static_cast<AgentId>(i);
  }
  throw InvalidArgument("unknown agent id: '" + std::string(text) + "'");
}

void CompanyYearKey::validate() const {
  if (fiscal_year < 1990 || fiscal_year > 2100) {
    throw InvalidArgument("fiscal_year outside [1990, 2100]: " + std::to_string(fiscal_year));
  }
  if (sector.empty()) throw InvalidArgument("sector must be non-empty for " + company_id);
  if (company_id.empty()) throw InvalidArgument("company_id must be non-empty");
}

std::string CompanyYearKey::label() const { return company_id + "_" + std::to_string(fiscal_year); }

bool RiskSignal::is_consistent() const {
  return flags.grade_overridden || score_to_grade(score) == grade;
}

}  // namespace creditxai
