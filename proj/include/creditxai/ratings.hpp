#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace creditxai {

// Eight-grade ordinal scale. The underlying value is the ordinal index:
// AAA = 0 (lowest risk) ... C = 7 (highest risk).
enum class RatingGrade : std::uint8_t { AAA = 0, AA, A, BBB, BB, B, CCC, C };

inline constexpr int kGradeCount = 8;

inline constexpr std::array<RatingGrade, kGradeCount> kAllGrades = {
    RatingGrade::AAA, RatingGrade::AA, RatingGrade::A,   RatingGrade::BBB,
    RatingGrade::BB,  RatingGrade::B,  RatingGrade::CCC, RatingGrade::C};

constexpr int grade_index(RatingGrade g) { return static_cast<int>(g); }

// Throws InvalidArgument when index is outside [0, 7].
RatingGrade grade_from_index(int index);

// Index clamped into [0, 7] before conversion.
RatingGrade grade_from_clamped_index(int index);

std::string_view to_string(RatingGrade g);

// Case-insensitive; rejects anything outside the eight symbols.
RatingGrade parse_grade(std::string_view text);
std::optional<RatingGrade> try_parse_grade(std::string_view text);

// Continuous risk score in [0, 1], higher = riskier.
class RiskScore {
 public:
  // Throws InvalidArgument outside [0, 1] or for non-finite input.
  explicit RiskScore(double value);

  double value() const { return value_; }

  friend bool operator==(const RiskScore&, const RiskScore&) = default;
  friend auto operator<=>(const RiskScore&, const RiskScore&) = default;

 private:
  double value_;
};

// Bin midpoint: (index + 0.5) / 8.
RiskScore grade_to_score(RatingGrade grade);

// floor(score * 8), with 1.0 clamped into the last bin.
RatingGrade score_to_grade(RiskScore score);

inline RatingGrade roundtrip_check(RatingGrade grade) { return score_to_grade(grade_to_score(grade)); }

// Shifts a grade by notches where positive = upgrade (towards AAA). The result
// is clamped into the scale.
RatingGrade apply_notches(RatingGrade grade, int notch_delta);

enum class AgentId : std::uint8_t { BRA, FRA, GRA, CRA, CAA };

std::string_view to_string(AgentId id);
AgentId parse_agent_id(std::string_view text);

struct CompanyYearKey {
  std::string company_id;
  int fiscal_year = 0;
  std::string sector;

  // Throws InvalidArgument when fiscal_year is outside [1990, 2100] or sector
  // is empty.
  void validate() const;

  // "<company>_<year>", used for file names and map keys.
  std::string label() const;

  friend bool operator==(const CompanyYearKey& a, const CompanyYearKey& b) {
    return a.company_id == b.company_id && a.fiscal_year == b.fiscal_year;
  }
  friend bool operator<(const CompanyYearKey& a, const CompanyYearKey& b) {
    if (a.company_id != b.company_id) return a.company_id < b.company_id;
    return a.fiscal_year < b.fiscal_year;
  }
};

struct SignalFlags {
  bool grade_overridden = false;  // grade is not score_to_grade(score)
  bool cold_start = false;        // no prior rating was available
  bool clamped = false;           // an agent proposal was clamped into bounds

  friend bool operator==(const SignalFlags&, const SignalFlags&) = default;
};

// One agent's output: a categorical grade, a continuous score and the
// reasoning that produced them.
struct RiskSignal {
  AgentId agent_id = AgentId::BRA;
  RatingGrade grade = RatingGrade::BBB;
  RiskScore score{0.5};
  std::string rationale;
  std::string inputs_digest;
  SignalFlags flags;
  double confidence = 0.5;
  // Governance signals carry the pre-adjustment grade and the applied notch
  // adjustment alongside the adjusted grade.
  std::optional<RatingGrade> initial_grade;
  std::optional<int> adjustment;

  // Mapping consistency: score_to_grade(score) == grade unless overridden.
  bool is_consistent() const;

  friend bool operator==(const RiskSignal&, const RiskSignal&) = default;
};

}  // namespace creditxai
