#include "creditxai/fusion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

}  // namespace

void FusionParams::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("delta must lie in (0,1)");
  if (!(w_high > 0.5 && w_high <= 1.0)) throw InvalidArgument("w_high must lie in (0.5,1]");
  if (!(w_base > 0.0 && w_base < 1.0)) throw InvalidArgument("w_base must lie in (0,1)");
  if (!(w_high > w_base)) throw InvalidArgument("w_high must exceed w_base");
}

CraResult fuse_cra(RiskScore s_bra, RiskScore s_fra, const FusionParams& params) {
  params.validate();
  const double gap = std::abs(s_bra.value() - s_fra.value());
  // a gap equal to delta up to rounding (0.3 - 0.15 on a decimal grid) stays on the base branch
  const bool divergent = gap - params.delta > kDivergenceTolerance;
  CraResult r;
  r.w_bra = divergent ? params.w_high : params.w_base;
  r.w_fra = 1.0 - r.w_bra;
  const double lo = std::min(s_bra.value(), s_fra.value());
  const double hi = std::max(s_bra.value(), s_fra.value());
  const double score = std::clamp(r.w_bra * s_bra.value() + r.w_fra * s_fra.value(), lo, hi);

  r.signal.agent_id = AgentId::CRA;
  r.signal.score = RiskScore(score);
  r.signal.grade = score_to_grade(r.signal.score);
  std::ostringstream why;
  why << "delta_S = |" << fixed(s_bra.value(), 4) << " - " << fixed(s_fra.value(), 4) << "| = " << fixed(gap, 4)
      << (divergent ? " > " : " <= ") << "delta " << fixed(params.delta, 4) << " -> "
      << (divergent ? "divergent branch (w_high)" : "base branch (w_base)") << "; w_BRA = " << fixed(r.w_bra, 4)
      << ", w_FRA = " << fixed(r.w_fra, 4) << "; S_CRA = " << fixed(score, 4);
  r.signal.rationale = why.str();
  r.signal.inputs_digest = digest_parts({digest_number(s_bra.value()), digest_number(s_fra.value()),
                                         digest_number(params.delta), digest_number(params.w_high),
                                         digest_number(params.w_base)});
  r.signal.confidence = 1.0;
  return r;
}

CraResult fuse_cra(const RiskSignal& bra, const RiskSignal& fra, const FusionParams& params) {
  CraResult r = fuse_cra(bra.score, fra.score, params);
  r.signal.inputs_digest = digest_parts({signal_digest(bra), signal_digest(fra), r.signal.inputs_digest});
  r.signal.flags.cold_start = bra.flags.cold_start && fra.flags.cold_start;
  return r;
}

void CaaWeights::validate() const {
  const std::array<double, 4> w = {cra, gra, bra, fra};
  if (std::any_of(w.begin(), w.end(), [](double x) { return !(x >= 0.0) || !std::isfinite(x); })) {
    throw InvalidArgument("CAA weights must be finite and non-negative");
  }
  if (cra + gra + bra + fra <= 0.0) throw InvalidArgument("CAA weights must not all be zero");
}

std::string_view to_string(CaaMode m) { return m == CaaMode::deterministic ? "deterministic" : "llm"; }

CaaMode parse_caa_mode(std::string_view text) {
  if (text == "deterministic") return CaaMode::deterministic;
  if (text == "llm") return CaaMode::llm;
  throw InvalidArgument("caa mode must be 'deterministic' or 'llm', got '" + std::string(text) + "'");
}

double consensus_of(const std::vector<double>& scores) {
  if (scores.empty()) return 1.0;
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(scores.size());
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(scores.size());
  return std::clamp(1.0 - std::sqrt(var) / 0.5, 0.0, 1.0);
}

Prompt build_caa_prompt(const CaaInputs& in, const FinalDecision& det) {
  Prompt p;
  p.system =
      "You are the Chief Analyst of a corporate credit rating committee. Weigh the business, financial, governance "
      "and composite signals by their consistency and reliability and issue the final rating.\n\n"
      "Reply with exactly one fenced JSON block and nothing else:\n```json\n"
      "{\"grade\": \"<AAA|AA|A|BBB|BB|B|CCC|C>\", \"score\": <risk score in [0,1]>, \"rationale\": \"<reasoning>\", "
      "\"confidence\": <number in [0,1]>}\n```";
  std::ostringstream u;
  u << "AGENT: CAA\n";
  for (const RiskSignal* s : {&*in.bra, &*in.fra, &*in.gra, &*in.cra}) {
    u << "SIGNAL " << to_string(s->agent_id) << ": grade " << to_string(s->grade) << ", score "
      << fixed(s->score.value(), 4) << "\n"
      << s->rationale << "\n\n";
  }
  u << "DETERMINISTIC_FUSION_GRADE: " << to_string(det.grade) << "\n"
    << "DETERMINISTIC_FUSION_SCORE: " << fixed(det.score.value(), 4) << "\n"
    << "CONSENSUS: " << fixed(det.consensus, 4) << "\n";
  p.user = u.str();
  return p;
}

FinalDecision decide_caa(const CaaInputs& in, CaaMode mode, ChatBackend* backend, const CaaWeights& weights,
                         const AgentSettings& settings) {
  if (!in.bra) throw MissingSignal("missing BRA signal");
  if (!in.fra) throw MissingSignal("missing FRA signal");
  if (!in.gra) throw MissingSignal("missing GRA signal");
  if (!in.cra) throw MissingSignal("missing CRA signal");
  weights.validate();

  const std::array<std::string, 4> names = {"CRA", "GRA", "BRA", "FRA"};
  const std::array<double, 4> scores = {in.cra->score.value(), in.gra->score.value(), in.bra->score.value(),
                                        in.fra->score.value()};
  std::array<double, 4> w = {weights.cra, weights.gra, weights.bra, weights.fra};

  const double med = median(std::vector<double>(scores.begin(), scores.end()));
  double mad = 0.0;
  for (double s : scores) mad += std::abs(s - med);
  mad /= 4.0;

  std::ostringstream why;
  why << "median " << fixed(med, 4) << ", mean absolute deviation " << fixed(mad, 4);
  for (std::size_t i = 0; i < 4; ++i) {
    if (std::abs(scores[i] - med) > 2.0 * mad) {
      w[i] /= 2.0;
      why << "; " << names[i] << " score " << fixed(scores[i], 4) << " is an outlier, weight halved";
    }
  }
  const double total = w[0] + w[1] + w[2] + w[3];
  double fused = 0.0;
  FinalDecision d;
  for (std::size_t i = 0; i < 4; ++i) {
    w[i] /= total;
    fused += w[i] * scores[i];
    d.weights_used[names[i]] = w[i];
  }
  fused = std::clamp(fused, *std::min_element(scores.begin(), scores.end()),
                     *std::max_element(scores.begin(), scores.end()));

  d.contributing = {*in.bra, *in.fra, *in.gra, *in.cra};
  d.consensus = consensus_of(std::vector<double>(scores.begin(), scores.end()));
  d.score = RiskScore(fused);
  d.grade = score_to_grade(d.score);
  d.deterministic_score = fused;
  d.mode = CaaMode::deterministic;
  why << "; weights CRA " << fixed(w[0], 4) << ", GRA " << fixed(w[1], 4) << ", BRA " << fixed(w[2], 4) << ", FRA "
      << fixed(w[3], 4) << "; S_CAA = " << fixed(fused, 4) << " -> " << to_string(d.grade) << "; consensus "
      << fixed(d.consensus, 4);
  d.rationale = why.str();
  if (mode == CaaMode::deterministic) return d;

  if (!backend) throw InvalidArgument("llm-mode CAA needs a chat backend");
  const AgentVerdict v = request_verdict(*backend, build_caa_prompt(in, d), settings);
  d.mode = CaaMode::llm;
  d.score = v.score;
  d.grade = v.grade;
  d.grade_overridden = v.grade_overridden;
  d.rationale = v.rationale + "\n[deterministic fusion: " + d.rationale + "]";
  return d;
}

}  // namespace creditxai
