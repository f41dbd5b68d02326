#include "creditxai/agents.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <sstream>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

std::string signed_fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%+.*f", precision, x);
  return buf;
}

std::string fragment(std::string_view text) {
  constexpr std::size_t kMax = 160;
  std::string s(text.substr(0, kMax));
  if (text.size() > kMax) s += "...";
  return s;
}

// Whitespace-collapsed prefix that never splits a UTF-8 sequence.
std::string excerpt(const std::string& body, std::size_t max_chars) {
  std::string flat;
  flat.reserve(std::min(body.size(), max_chars + 8));
  bool space = false;
  for (char c : body) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !flat.empty();
      continue;
    }
    if (space) flat.push_back(' ');
    space = false;
    flat.push_back(c);
    if (flat.size() >= max_chars) break;
  }
  if (flat.size() >= max_chars) {
    std::size_t cut = max_chars;
    while (cut > 0 && (static_cast<unsigned char>(flat[cut]) & 0xC0) == 0x80) --cut;
    flat.resize(cut);
    flat += " [...]";
  }
  return flat;
}

constexpr std::string_view kVerdictInstructions =
    "Reply with exactly one fenced JSON block and nothing else:\n"
    "```json\n"
    "{\"grade\": \"<AAA|AA|A|BBB|BB|B|CCC|C>\", \"score\": <risk score in [0,1], higher is riskier>, "
    "\"rationale\": \"<concise reasoning>\", \"confidence\": <number in [0,1]>}\n"
    "```\n"
    "Grade and score must agree: grade index i (AAA=0 ... C=7) covers scores [i/8, (i+1)/8).";

constexpr std::string_view kAdjustInstructions =
    "Reply with exactly one fenced JSON block and nothing else:\n"
    "```json\n"
    "{\"grade\": \"<governance-adjusted grade>\", \"score\": <risk score in [0,1]>, "
    "\"rationale\": \"<concise reasoning>\", \"adjustment\": <integer notches, negative = downgrade, "
    "between -2 and 2>, \"confidence\": <number in [0,1]>}\n"
    "```";

std::string header(std::string_view agent, const CompanyYearKey& key) {
  std::ostringstream s;
  s << "AGENT: " << agent << "\n"
    << "COMPANY: " << key.company_id << "\n"
    << "FISCAL_YEAR: " << key.fiscal_year << "\n"
    << "SECTOR: " << key.sector << "\n";
  return s.str();
}

std::string disclosures(const AgentContext& ctx, const std::vector<std::string>& wanted, std::size_t excerpt_chars) {
  std::ostringstream s;
  s << "CURRENT DISCLOSURES\n";
  int shown = 0;
  for (const auto& id : wanted) {
    auto it = ctx.items.find(id);
    if (it == ctx.items.end()) continue;
    const auto& [item, features] = it->second;
    s << "### Item " << item.item_id << " | " << (item.title.empty() ? "untitled" : item.title)
      << " | sentiment " << signed_fixed(features.sentiment, 3) << " | " << item.body.size() << " chars\n"
      << excerpt(item.body, excerpt_chars) << "\n";
    ++shown;
  }
  if (shown == 0) {
    throw PreconditionViolation("agent context for " + ctx.key.label() + " has none of the required items");
  }
  return s.str();
}

std::string history_section(const AgentContext& ctx, VectorChoice choice) {
  if (ctx.window.empty()) return std::string(kNoHistoryMarker) + "\n";
  std::string block = render_history_context(ctx.window, ctx.weights, choice);
  const auto order = history_render_order(ctx.weights);
  if (!order.empty()) {
    const int top = order.front();
    for (const auto& e : ctx.window.entries) {
      if (e.key.fiscal_year == top) {
        block += "ANCHOR_GRADE: " + std::string(to_string(e.grade)) + "\n";
        break;
      }
    }
  }
  return block;
}

Prompt text_agent_prompt(std::string_view agent, std::string_view role, const AgentContext& ctx,
                         const std::vector<std::string>& items, const AgentSettings& settings) {
  Prompt p;
  p.system = std::string(role) + "\n\n" + std::string(kVerdictInstructions);
  std::ostringstream u;
  u << header(agent, ctx.key) << "\n"
    << "TASK: rate the company's " << (agent == "BRA" ? "business" : "governance")
    << " risk from the current disclosures. Prior years are weighted by how similar their disclosures are to "
       "this year's; lean on the most similar years when interpreting changes.\n\n"
    << disclosures(ctx, items, settings.excerpt_chars) << "\n"
    << history_section(ctx, settings.similarity_vector);
  p.user = u.str();
  return p;
}

RiskSignal signal_from(AgentId id, const AgentVerdict& v, const AgentContext& ctx) {
  RiskSignal s;
  s.agent_id = id;
  s.grade = v.grade;
  s.score = v.score;
  s.rationale = v.rationale;
  s.inputs_digest = context_digest(ctx);
  s.flags.grade_overridden = v.grade_overridden;
  s.flags.cold_start = ctx.window.empty();
  s.confidence = v.confidence;
  return s;
}

}  // namespace

AgentVerdict parse_verdict(std::string_view text) {
  const std::size_t open = text.find("```");
  if (open == std::string_view::npos) throw MalformedVerdict("no fenced JSON block in reply: " + fragment(text));
  std::size_t start = text.find('\n', open);
  if (start == std::string_view::npos) throw MalformedVerdict("unterminated fence: " + fragment(text.substr(open)));
  ++start;
  const std::size_t close = text.find("```", start);
  if (close == std::string_view::npos) throw MalformedVerdict("unterminated fence: " + fragment(text.substr(open)));
  const std::string_view block = text.substr(start, close - start);

  json j;
  try {
    j = json::parse(block);
  } catch (const json::exception&) {
    throw MalformedVerdict("fenced block is not JSON: " + fragment(block));
  }
  if (!j.is_object()) throw MalformedVerdict("verdict is not a JSON object: " + fragment(block));
  if (!j.contains("grade") || !j["grade"].is_string()) throw MalformedVerdict("missing string 'grade': " + fragment(block));
  if (!j.contains("score") || !j["score"].is_number()) throw MalformedVerdict("missing numeric 'score': " + fragment(block));
  if (!j.contains("rationale") || !j["rationale"].is_string()) {
    throw MalformedVerdict("missing string 'rationale': " + fragment(block));
  }
  const auto grade = try_parse_grade(j["grade"].get<std::string>());
  if (!grade) throw MalformedVerdict("unknown grade: " + fragment(block));
  const double score = j["score"].get<double>();
  if (!std::isfinite(score) || score < 0.0 || score > 1.0) throw MalformedVerdict("score outside [0,1]: " + fragment(block));

  AgentVerdict v;
  v.grade = *grade;
  v.score = RiskScore(score);
  v.rationale = j["rationale"].get<std::string>();
  if (j.contains("adjustment") && !j["adjustment"].is_null()) {
    if (!j["adjustment"].is_number_integer()) throw MalformedVerdict("'adjustment' is not an integer: " + fragment(block));
    v.adjustment = j["adjustment"].get<int>();
  }
  if (j.contains("confidence") && !j["confidence"].is_null()) {
    if (!j["confidence"].is_number()) throw MalformedVerdict("'confidence' is not a number: " + fragment(block));
    const double c = j["confidence"].get<double>();
    if (!(c >= 0.0 && c <= 1.0)) throw MalformedVerdict("confidence outside [0,1]: " + fragment(block));
    v.confidence = c;
  }
  v.grade_overridden = score_to_grade(v.score) != v.grade;
  return v;
}

std::string context_digest(const AgentContext& ctx) {
  std::ostringstream s;
  s << "key=" << ctx.key.company_id << "|" << ctx.key.fiscal_year << "|" << ctx.key.sector << "\n";
  for (const auto& [id, ci] : ctx.items) {
    s << "item=" << id << "|" << content_digest(ci.item.body) << "|" << digest_number(ci.features.sentiment) << "|";
    std::string vec;
    for (float x : ci.features.finance_vec) vec += digest_number(x) + ",";
    vec += ";";
    for (float x : ci.features.general_vec) vec += digest_number(x) + ",";
    s << sha256_hex(vec) << "\n";
  }
  s << "window=" << ctx.window.k << "\n";
  for (const auto& e : ctx.window.entries) {
    s << "hist=" << e.key.fiscal_year << "|" << to_string(e.grade) << "|" << financial_summary(e.financials) << "\n";
  }
  s << "alpha=" << digest_number(ctx.weights.alpha) << "\n";
  for (const auto& yw : ctx.weights.per_year) {
    s << "w=" << yw.year << "|" << digest_number(yw.sim) << "|" << digest_number(yw.weight) << "\n";
  }
  if (ctx.deviations) {
    for (const auto& [name, d] : ctx.deviations->indicators) {
      s << "dev=" << name << "|" << to_string(d.status) << "|" << (d.dev ? digest_number(*d.dev) : "-") << "\n";
    }
    for (const auto& [name, y] : ctx.deviations->yoy) s << "yoy=" << name << "|" << digest_number(y) << "\n";
  }
  if (ctx.proposal) {
    s << "proposal=" << ctx.proposal->adjustment.notch_delta << "|" << to_string(ctx.proposal->base_grade) << "|"
      << to_string(ctx.proposal->proposed_grade) << "|" << ctx.proposal->cold_start << "\n";
  }
  if (ctx.prior_grade) s << "prior=" << to_string(*ctx.prior_grade) << "\n";
  return sha256_hex(s.str());
}

std::string signal_digest(const RiskSignal& sig) {
  std::ostringstream s;
  s << to_string(sig.agent_id) << "|" << to_string(sig.grade) << "|" << digest_number(sig.score.value()) << "|"
    << sig.rationale << "|" << sig.inputs_digest << "|" << sig.flags.grade_overridden << sig.flags.cold_start
    << sig.flags.clamped << "|" << digest_number(sig.confidence) << "|"
    << (sig.initial_grade ? std::string(to_string(*sig.initial_grade)) : "-") << "|"
    << (sig.adjustment ? std::to_string(*sig.adjustment) : "-");
  return sha256_hex(s.str());
}

Prompt build_bra_prompt(const AgentContext& ctx, const AgentSettings& settings) {
  return text_agent_prompt("BRA",
                           "You are the Business Risk Analysis agent of a corporate credit rating committee. You read "
                           "a company's 10-K business, risk factor and MD&A disclosures and rate its business risk.",
                           ctx, settings.business_items, settings);
}

Prompt build_gra_prompt(const AgentContext& ctx, const AgentSettings& settings) {
  return text_agent_prompt("GRA",
                           "You are the Governance Risk Analysis agent of a corporate credit rating committee. You read "
                           "a company's 10-K governance, control and ownership disclosures and rate its governance "
                           "risk.",
                           ctx, settings.governance_items, settings);
}

Prompt build_fra_prompt(const AgentContext& ctx, const AgentSettings& settings) {
  if (!ctx.deviations || !ctx.proposal) {
    throw PreconditionViolation("financial agent context for " + ctx.key.label() + " lacks deviations or proposal");
  }
  const FraProposal& prop = *ctx.proposal;
  Prompt p;
  p.system =
      "You are the Financial Risk Analysis agent of a corporate credit rating committee. You review industry-relative "
      "deviations of financial indicators and year-over-year changes, then confirm or revise the quantitative "
      "rating proposal. Revisions of more than " +
      std::to_string(settings.max_fra_override) + " notch from the proposal are not accepted.\n\n" +
      std::string(kVerdictInstructions);
  std::ostringstream u;
  u << header("FRA", ctx.key) << "\n";
  if (prop.cold_start) {
    u << "COLD_START: no prior rating available\n"
      << "DEVIATION_IMPLIED_GRADE: " << to_string(prop.base_grade) << "\n";
  } else {
    u << "PREVIOUS_GRADE: " << to_string(prop.base_grade) << "\n";
  }
  u << "PROPOSED_NOTCH_DELTA: " << (prop.adjustment.notch_delta > 0 ? "+" : "") << prop.adjustment.notch_delta
    << " (positive = upgrade)\n"
    << "PROPOSED_GRADE: " << to_string(prop.proposed_grade) << "\n\n"
    << "PROPOSAL RATIONALE\n"
    << prop.adjustment.rationale << "\n\n"
    << "INDICATOR DEVIATIONS FROM SECTOR MEDIAN\n";
  for (const auto& [name, d] : ctx.deviations->indicators) {
    u << "- " << name << ": ";
    if (d.status == DeviationStatus::ok) {
      u << "value " << fixed(*d.value, 4) << " vs baseline " << fixed(*d.baseline, 4) << " -> dev "
        << signed_fixed(*d.dev, 4);
    } else {
      u << to_string(d.status);
    }
    if (auto y = ctx.deviations->yoy.find(name); y != ctx.deviations->yoy.end()) {
      u << " | yoy " << signed_fixed(y->second, 4);
    }
    u << "\n";
  }
  p.user = u.str();
  return p;
}

Prompt build_gra_adjust_prompt(const RiskSignal& gra_initial, const RiskSignal& cra_signal,
                               const AgentSettings& settings) {
  Prompt p;
  p.system =
      "You are the Governance Risk Analysis agent. Having rated governance risk, you now decide whether the "
      "composite business/financial rating should be adjusted for governance, by at most " +
      std::to_string(settings.max_gra_adjustment) + " notches.\n\n" + std::string(kAdjustInstructions);
  std::ostringstream u;
  u << "AGENT: GRA_ADJUST\n"
    << "INITIAL_GOVERNANCE_GRADE: " << to_string(gra_initial.grade) << "\n"
    << "INITIAL_GOVERNANCE_SCORE: " << fixed(gra_initial.score.value(), 4) << "\n"
    << "COMPOSITE_GRADE: " << to_string(cra_signal.grade) << "\n"
    << "COMPOSITE_SCORE: " << fixed(cra_signal.score.value(), 4) << "\n\n"
    << "GOVERNANCE RATIONALE\n"
    << gra_initial.rationale << "\n\n"
    << "COMPOSITE RATIONALE\n"
    << cra_signal.rationale << "\n";
  p.user = u.str();
  return p;
}

AgentVerdict request_verdict(ChatBackend& backend, const Prompt& prompt, const AgentSettings& settings) {
  std::string user = prompt.user;
  std::string last_error;
  for (int attempt = 0; attempt <= std::max(0, settings.retries); ++attempt) {
    const std::string reply = backend.complete(prompt.system, user, settings.params);
    try {
      return parse_verdict(reply);
    } catch (const MalformedVerdict& e) {
      last_error = e.what();
      user = prompt.user + "\n\nYOUR PREVIOUS REPLY WAS REJECTED (" + last_error +
             "). Reply with exactly one fenced JSON verdict block.\n";
    }
  }
  throw MalformedVerdict("no valid verdict after " + std::to_string(settings.retries + 1) +
                         " attempts; last error: " + last_error);
}

RiskSignal run_bra(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings) {
  return signal_from(AgentId::BRA, request_verdict(backend, build_bra_prompt(ctx, settings), settings), ctx);
}

RiskSignal run_gra_initial(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings) {
  return signal_from(AgentId::GRA, request_verdict(backend, build_gra_prompt(ctx, settings), settings), ctx);
}

RiskSignal run_fra(const AgentContext& ctx, ChatBackend& backend, const AgentSettings& settings) {
  const AgentVerdict v = request_verdict(backend, build_fra_prompt(ctx, settings), settings);
  const FraProposal& prop = *ctx.proposal;
  RiskSignal s = signal_from(AgentId::FRA, v, ctx);
  s.flags.cold_start = prop.cold_start;
  const int diff = grade_index(v.grade) - grade_index(prop.proposed_grade);
  if (std::abs(diff) > settings.max_fra_override) {
    const int bound = diff > 0 ? settings.max_fra_override : -settings.max_fra_override;
    s.grade = grade_from_clamped_index(grade_index(prop.proposed_grade) + bound);
    s.score = grade_to_score(s.grade);
    s.flags.clamped = true;
    s.flags.grade_overridden = true;
    s.rationale += "\n[override of " + std::string(to_string(v.grade)) + " clamped to " +
                   std::string(to_string(s.grade)) + ", within " + std::to_string(settings.max_fra_override) +
                   " notch of proposal " + std::string(to_string(prop.proposed_grade)) + "]";
  }
  return s;
}

RiskSignal run_gra_adjust(const RiskSignal& gra_initial, const RiskSignal& cra_signal, ChatBackend& backend,
                          const AgentSettings& settings) {
  const AgentVerdict v = request_verdict(backend, build_gra_adjust_prompt(gra_initial, cra_signal, settings), settings);
  int adjustment = v.adjustment.value_or(0);
  RiskSignal s;
  s.agent_id = AgentId::GRA;
  s.rationale = v.rationale;
  if (std::abs(adjustment) > settings.max_gra_adjustment) {
    const int clamped = adjustment > 0 ? settings.max_gra_adjustment : -settings.max_gra_adjustment;
    s.rationale += "\n[adjustment " + std::to_string(adjustment) + " clamped to " + std::to_string(clamped) + "]";
    adjustment = clamped;
    s.flags.clamped = true;
  }
  s.grade = apply_notches(cra_signal.grade, adjustment);
  s.score = grade_to_score(s.grade);
  s.initial_grade = gra_initial.grade;
  s.adjustment = adjustment;
  s.confidence = v.confidence;
  s.flags.cold_start = gra_initial.flags.cold_start;
  s.inputs_digest = digest_parts({signal_digest(gra_initial), signal_digest(cra_signal)});
  return s;
}

}  // namespace creditxai
