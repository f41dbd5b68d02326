#include "creditxai/agents.hpp"
#include "creditxai/errors.hpp"
#include "helpers.hpp"

using namespace creditxai;
using testing::fenced;
using testing::ScriptedBackend;

namespace {

ItemFeatures feat(float a, float b) {
  ItemFeatures f;
  f.finance_vec = {a, b};
  f.general_vec = {b, a};
  f.sentiment = 0.1f;
  return f;
}

AgentContext context(bool with_history) {
  AgentContext ctx;
  ctx.key = {"ACME", 2021, "tech"};
  for (const std::string id : {"1", "1A", "7", "10", "11"}) {
    CurrentItem ci;
    ci.item.item_id = id;
    ci.item.title = "Item " + id;
    ci.item.body = "Body of item " + id + " with demand softening and margin pressure.";
    ci.features = feat(1.0f, id.size() * 0.5f);
    ctx.items[id] = ci;
  }
  ctx.window.key = ctx.key;
  ctx.window.k = 3;
  if (with_history) {
    HistoryRecord r;
    r.key = {"ACME", 2020, "tech"};
    r.grade = RatingGrade::BBB;
    r.items = {{"1", feat(1.0f, 0.5f)}};
    ctx.window.entries.push_back(r);
    ctx.weights = compute_similarity_weights({{"1", ctx.items["1"].features}}, ctx.window, {}, VectorChoice::finance, 5.0);
    ctx.prior_grade = RatingGrade::BBB;
  }
  return ctx;
}

AgentContext fra_context(std::optional<RatingGrade> prior) {
  AgentContext ctx = context(prior.has_value());
  DeviationReport r;
  r.key = ctx.key;
  IndicatorDeviation d;
  d.value = 1.3;
  d.baseline = 1.0;
  d.dev = 0.3;
  d.status = DeviationStatus::ok;
  r.indicators["current_ratio"] = d;
  ctx.deviations = r;
  ctx.proposal = make_fra_proposal(r, prior, AdjustmentPolicy{});
  return ctx;
}

RiskSignal sig(AgentId id, RatingGrade g) {
  RiskSignal s;
  s.agent_id = id;
  s.grade = g;
  s.score = grade_to_score(g);
  s.rationale = "r";
  return s;
}

}  // namespace

TEST_CASE("parse_verdict") {
  const auto v = parse_verdict("prose\n" + fenced(R"({"grade":"BBB","score":0.44,"rationale":"steady"})"));
  CHECK(v.grade == RatingGrade::BBB);
  CHECK(v.score.value() == 0.44);
  CHECK_FALSE(v.grade_overridden);
  CHECK(v.confidence == 0.5);
  CHECK_FALSE(v.adjustment.has_value());

  CHECK(parse_verdict(fenced(R"({"grade":"A","score":0.9,"rationale":"x"})")).grade_overridden);
  CHECK_THROWS_AS(parse_verdict(fenced(R"({"grade":"BBB","score":1.3,"rationale":"x"})")), MalformedVerdict);
  CHECK_THROWS_AS(parse_verdict(fenced(R"({"grade":"BBB+","score":0.4,"rationale":"x"})")), MalformedVerdict);
  CHECK_THROWS_AS(parse_verdict(fenced(R"({"grade":"BBB","score":0.4})")), MalformedVerdict);
  CHECK_THROWS_AS(parse_verdict(fenced(R"({"grade":"BBB","score":0.4,"rationale":"x","adjustment":1.5})")),
                  MalformedVerdict);
  CHECK_THROWS_AS(parse_verdict("no block at all"), MalformedVerdict);

  const auto first = parse_verdict(fenced(R"({"grade":"AA","score":0.2,"rationale":"one","confidence":0.9})") +
                                   "\n" + fenced(R"({"grade":"C","score":0.95,"rationale":"two"})"));
  CHECK(first.grade == RatingGrade::AA);
  CHECK(first.confidence == 0.9);
  CHECK(parse_verdict("```\n{\"grade\":\"B\",\"score\":0.7,\"rationale\":\"r\",\"adjustment\":-1}\n```").adjustment == -1);

  try {
    parse_verdict(fenced(R"({"grade":"BBB","score":7,"rationale":"x"})"));
  } catch (const MalformedVerdict& e) {
    CHECK(std::string(e.what()).find("\"score\":7") != std::string::npos);
  }
}

TEST_CASE("business agent") {
  ScriptedBackend b({fenced(R"({"grade":"BB","score":0.56,"rationale":"soft demand"})")});
  const AgentContext ctx = context(true);
  const RiskSignal s = run_bra(ctx, b);
  CHECK(s.agent_id == AgentId::BRA);
  CHECK(s.grade == RatingGrade::BB);
  CHECK(s.rationale == "soft demand");
  CHECK(s.inputs_digest == context_digest(ctx));
  CHECK_FALSE(s.flags.cold_start);
  REQUIRE(b.prompts.size() == 1);
  CHECK(b.prompts[0].find("AGENT: BRA") != std::string::npos);
  CHECK(b.prompts[0].find("FY2020") != std::string::npos);
  CHECK(b.prompts[0].find(kNoHistoryMarker) == std::string::npos);
  // governance items stay out of the business prompt
  CHECK(b.prompts[0].find("Body of item 10") == std::string::npos);
}

TEST_CASE("empty window puts the no-history marker in both text agents") {
  ScriptedBackend b({fenced(R"({"grade":"BB","score":0.56,"rationale":"r"})")});
  const AgentContext ctx = context(false);
  CHECK(run_bra(ctx, b).flags.cold_start);
  run_gra_initial(ctx, b);
  REQUIRE(b.prompts.size() == 2);
  CHECK(b.prompts[0].find(kNoHistoryMarker) != std::string::npos);
  CHECK(b.prompts[1].find(kNoHistoryMarker) != std::string::npos);
  CHECK(b.prompts[1].find("AGENT: GRA") != std::string::npos);
  CHECK(b.prompts[1].find("Body of item 10") != std::string::npos);
}

TEST_CASE("retries are bounded and end in MalformedVerdict") {
  ScriptedBackend prose({"I think it is fine."});
  AgentSettings settings;
  settings.retries = 1;
  CHECK_THROWS_AS(run_bra(context(true), prose, settings), MalformedVerdict);
  CHECK(prose.prompts.size() == 2);
  CHECK_THROWS_AS(run_gra_initial(context(true), prose, settings), MalformedVerdict);
  CHECK(prose.prompts.size() == 4);

  ScriptedBackend late({"prose", fenced(R"({"grade":"A","score":0.3,"rationale":"ok"})")});
  CHECK(run_bra(context(true), late).grade == RatingGrade::A);
  CHECK(late.prompts.size() == 2);
  CHECK(late.prompts[1].find("REJECTED") != std::string::npos);
}

TEST_CASE("financial agent confirms or is clamped") {
  const AgentContext ctx = fra_context(RatingGrade::BB);
  // one +1 vote -> mean 1 -> delta +2 -> A
  REQUIRE(ctx.proposal->proposed_grade == RatingGrade::A);

  ScriptedBackend confirm({fenced(R"({"grade":"A","score":0.3,"rationale":"agree"})")});
  const auto s = run_fra(ctx, confirm);
  CHECK(s.grade == apply_notches(RatingGrade::BB, ctx.proposal->adjustment.notch_delta));
  CHECK_FALSE(s.flags.clamped);
  CHECK(confirm.prompts[0].find("PROPOSED_GRADE: A") != std::string::npos);
  CHECK(confirm.prompts[0].find("PROPOSED_NOTCH_DELTA: +2") != std::string::npos);

  // A -> AAA would be two notches up; also exercise three notches down
  ScriptedBackend up({fenced(R"({"grade":"AAA","score":0.05,"rationale":"bold"})")});
  const auto clamped_up = run_fra(ctx, up);
  CHECK(clamped_up.grade == RatingGrade::AA);
  CHECK(clamped_up.flags.clamped);
  CHECK(clamped_up.flags.grade_overridden);

  ScriptedBackend down({fenced(R"({"grade":"BB","score":0.55,"rationale":"bearish"})")});
  const auto clamped_down = run_fra(ctx, down);
  CHECK(clamped_down.grade == RatingGrade::BBB);
  CHECK(clamped_down.score == grade_to_score(RatingGrade::BBB));
}

TEST_CASE("financial agent cold start") {
  const AgentContext ctx = fra_context(std::nullopt);
  CHECK(ctx.proposal->cold_start);
  ScriptedBackend b({fenced(R"({"grade":"A","score":0.3,"rationale":"ok"})")});
  const auto s = run_fra(ctx, b);
  CHECK(s.flags.cold_start);
  CHECK(b.prompts[0].find("COLD_START") != std::string::npos);
  CHECK(b.prompts[0].find("DEVIATION_IMPLIED_GRADE: " + std::string(to_string(ctx.proposal->base_grade))) !=
        std::string::npos);

  AgentContext missing = context(true);
  CHECK_THROWS_AS(run_fra(missing, b), PreconditionViolation);
}

TEST_CASE("governance adjustment") {
  const RiskSignal initial = sig(AgentId::GRA, RatingGrade::BB);
  const RiskSignal cra = sig(AgentId::CRA, RatingGrade::BBB);

  ScriptedBackend zero({fenced(R"({"grade":"BBB","score":0.44,"rationale":"none","adjustment":0})")});
  const auto z = run_gra_adjust(initial, cra, zero);
  CHECK(z.grade == RatingGrade::BBB);
  CHECK(z.initial_grade == RatingGrade::BB);
  CHECK(z.adjustment == 0);
  CHECK(zero.prompts[0].find("COMPOSITE_GRADE: BBB") != std::string::npos);

  ScriptedBackend minus({fenced(R"({"grade":"BB","score":0.56,"rationale":"weak board","adjustment":-1})")});
  const auto m = run_gra_adjust(initial, cra, minus);
  CHECK(m.grade == RatingGrade::BB);
  CHECK(grade_index(m.grade) == grade_index(RatingGrade::BBB) + 1);
  CHECK_FALSE(m.flags.clamped);

  ScriptedBackend big({fenced(R"({"grade":"C","score":0.95,"rationale":"fraud","adjustment":-5})")});
  const auto b = run_gra_adjust(initial, cra, big);
  CHECK(b.adjustment == -2);
  CHECK(b.grade == RatingGrade::B);
  CHECK(b.flags.clamped);

  ScriptedBackend absent({fenced(R"({"grade":"BBB","score":0.44,"rationale":"n/a"})")});
  CHECK(run_gra_adjust(initial, cra, absent).grade == RatingGrade::BBB);
}

TEST_CASE("context digest covers every field") {
  const AgentContext base = fra_context(RatingGrade::BBB);
  const std::string d = context_digest(base);
  CHECK(d == context_digest(fra_context(RatingGrade::BBB)));
  AgentContext c = base;
  c.items["1"].item.body += ".";
  CHECK(context_digest(c) != d);
  c = base;
  c.window.entries[0].grade = RatingGrade::B;
  CHECK(context_digest(c) != d);
  c = base;
  c.deviations->indicators["current_ratio"].dev = 0.31;
  CHECK(context_digest(c) != d);
  c = base;
  c.prior_grade.reset();
  CHECK(context_digest(c) != d);
}
