#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "creditxai/backends.hpp"
#include "creditxai/features.hpp"
#include "creditxai/filing.hpp"
#include "creditxai/fra_quant.hpp"
#include "creditxai/history.hpp"
#include "creditxai/ratings.hpp"

namespace creditxai {

inline constexpr std::string_view kNoHistoryMarker = "NO PRIOR YEARS AVAILABLE";

struct AgentVerdict {
  RatingGrade grade = RatingGrade::BBB;
  RiskScore score{0.5};
  std::string rationale;
  std::optional<int> adjustment;
  double confidence = 0.5;
  bool grade_overridden = false;  // score_to_grade(score) != grade
};

// Reads the first fenced JSON block (```json ... ``` or ``` ... ```) and
// requires grade (string), score (number in [0,1]) and rationale (string);
// adjustment (integer) and confidence (number in [0,1]) are optional.
// Throws MalformedVerdict carrying the offending fragment.
AgentVerdict parse_verdict(std::string_view text);

struct CurrentItem {
  FilingItem item;
  ItemFeatures features;
};

// Processed inputs of one agent call for one company-year.
struct AgentContext {
  CompanyYearKey key;
  std::map<std::string, CurrentItem> items;
  HistoryWindow window;
  SimilarityWeights weights;
  std::optional<DeviationReport> deviations;  // financial agent only
  std::optional<FraProposal> proposal;        // financial agent only
  std::optional<RatingGrade> prior_grade;
};

// Digest over every field of the context; stored as RiskSignal::inputs_digest.
std::string context_digest(const AgentContext& ctx);

// Digest over every field of a signal.
std::string signal_digest(const RiskSignal& signal);

struct AgentSettings {
  int retries = 2;  // extra attempts after a malformed verdict
  ChatParams params;
  std::vector<std::string> business_items = {"1", "1A", "7", "7A"};
  std::vector<std::string> governance_items = {"10", "11", "13", "9A"};
  VectorChoice similarity_vector = VectorChoice::finance;
  std::size_t excerpt_chars = 600;
  int max_gra_adjustment = 2;
  int max_fra_override = 1;
};

struct Prompt {
  std::string system;
  std::string user;
};

Prompt build_bra_prompt(const AgentContext& ctx, const AgentSettings& settings);
Prompt build_fra_prompt(const AgentContext& ctx, const AgentSettings& settings);
Prompt build_gra_prompt(const AgentContext& ctx, const AgentSettings& settings);
Prompt build_gra_adjust_prompt(const RiskSignal& gra_initial, const RiskSignal& cra_signal,
                               const AgentSettings& settings);

// Calls the backend up to retries + 1 times until a verdict parses.
AgentVerdict request_verdict(ChatBackend& backend, const Prompt& prompt, const AgentSettings& settings);

// Business risk from items 1/1A/7/7A read against the weighted history.
RiskSignal run_bra(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings = {});

// Financial risk: the model confirms or overrides the quantitative proposal;
// overrides beyond max_fra_override notches are clamped and flagged.
RiskSignal run_fra(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings = {});

// Initial governance rating from items 10/11/13/9A, same history mechanics
// as the business agent.
RiskSignal run_gra_initial(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings = {});

// Governance adjustment of the composite grade. The verdict's integer
// adjustment (negative = downgrade = riskier) is clamped to
// +/-max_gra_adjustment and applied to the composite grade.
RiskSignal run_gra_adjust(const RiskSignal& gra_initial, const RiskSignal& cra_signal, ChatBackend& backend,
                          const AgentSettings& settings = {});

}  // namespace creditxai
