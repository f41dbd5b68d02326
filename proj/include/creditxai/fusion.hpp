#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "creditxai/agents.hpp"
#include "creditxai/backends.hpp"
#include "creditxai/ratings.hpp"

namespace creditxai {

struct FusionParams {
  double delta = 0.15;  // divergence threshold on |S_BRA - S_FRA|
  double w_high = 0.7;  // business weight when the scores diverge
  double w_base = 0.5;  // business weight otherwise

  void validate() const;
};

struct CraResult {
  RiskSignal signal;
  double w_bra = 0.5;
  double w_fra = 0.5;
};

inline constexpr double kDivergenceTolerance = 1e-12;

// Composite rating: w_BRA = w_high when |s_bra - s_fra| exceeds delta by more
// than kDivergenceTolerance, w_base otherwise; w_FRA = 1 - w_BRA.
CraResult fuse_cra(RiskScore s_bra, RiskScore s_fra, const FusionParams& params);
CraResult fuse_cra(const RiskSignal& bra, const RiskSignal& fra, const FusionParams& params);

struct CaaWeights {
  double cra = 0.5;
  double gra = 0.3;
  double bra = 0.1;
  double fra = 0.1;

  void validate() const;
};

enum class CaaMode { deterministic, llm };

std::string_view to_string(CaaMode m);
CaaMode parse_caa_mode(std::string_view text);

struct CaaInputs {
  std::optional<RiskSignal> bra;
  std::optional<RiskSignal> fra;
  std::optional<RiskSignal> gra;  // governance-adjusted signal
  std::optional<RiskSignal> cra;
};

struct FinalDecision {
  RiskScore score{0.5};
  RatingGrade grade = RatingGrade::BBB;
  std::vector<RiskSignal> contributing;  // BRA, FRA, GRA, CRA
  double consensus = 1.0;
  std::string rationale;
  bool grade_overridden = false;
  CaaMode mode = CaaMode::deterministic;
  std::map<std::string, double> weights_used;  // after outlier damping
  double deterministic_score = 0.5;
};

// Population standard deviation based agreement: 1 - stddev / 0.5, clamped.
double consensus_of(const std::vector<double>& scores);

// Deterministic mode: base weights, halved for any signal farther than twice
// the mean absolute deviation from the median, renormalized. LLM mode renders
// the four signals and the deterministic result into a prompt and takes the
// parsed verdict. Throws MissingSignal when an input is absent.
FinalDecision decide_caa(const CaaInputs& inputs, CaaMode mode, ChatBackend* backend, const CaaWeights& weights,
                         const AgentSettings& settings = {});

Prompt build_caa_prompt(const CaaInputs& inputs, const FinalDecision& deterministic);

}  // namespace creditxai
