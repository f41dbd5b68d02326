#include <cmath>

#include "creditxai/errors.hpp"
#include "creditxai/fusion.hpp"
#include "helpers.hpp"

using namespace creditxai;

namespace {

RiskSignal sig(AgentId id, double score) {
  RiskSignal s;
  s.agent_id = id;
  s.score = RiskScore(score);
  s.grade = score_to_grade(s.score);
  s.rationale = "r";
  return s;
}

CaaInputs inputs(double bra, double fra, double gra, double cra) {
  return {sig(AgentId::BRA, bra), sig(AgentId::FRA, fra), sig(AgentId::GRA, gra), sig(AgentId::CRA, cra)};
}

}  // namespace

TEST_CASE("composite weighting") {
  const FusionParams p;
  CHECK(fuse_cra(RiskScore(0.5), RiskScore(0.5), p).signal.score.value() == 0.5);

  const auto r = fuse_cra(RiskScore(0.2), RiskScore(0.8), p);
  CHECK(r.w_bra == 0.7);
  CHECK(r.w_fra == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(r.signal.score.value() == 0.7 * 0.2 + (1.0 - 0.7) * 0.8);
  CHECK(std::abs(r.signal.score.value() - 0.38) < 1e-15);
  CHECK(r.signal.grade == RatingGrade::BBB);
  CHECK(r.signal.agent_id == AgentId::CRA);
  CHECK(r.signal.rationale.find("0.6") != std::string::npos);

  // exactly at the threshold: base branch. 0.5 and 0.25 are exact in binary.
  FusionParams exact;
  exact.delta = 0.25;
  CHECK(fuse_cra(RiskScore(0.5), RiskScore(0.25), exact).w_bra == 0.5);
  CHECK(fuse_cra(RiskScore(0.5), RiskScore(0.2499), exact).w_bra == 0.7);
}

TEST_CASE("composite from signals carries both digests") {
  RiskSignal b = sig(AgentId::BRA, 0.3), f = sig(AgentId::FRA, 0.35);
  b.inputs_digest = "b";
  f.inputs_digest = "f";
  const auto r = fuse_cra(b, f, FusionParams{});
  CHECK(r.w_bra == 0.5);
  CHECK(r.signal.score.value() == doctest::Approx(0.325));
  CHECK_FALSE(r.signal.inputs_digest.empty());
}

TEST_CASE("fusion params validation") {
  FusionParams p;
  p.w_high = 0.4;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = FusionParams{};
  p.delta = 0.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CaaWeights w;
  w.cra = -0.1;
  CHECK_THROWS_AS(w.validate(), InvalidArgument);
}

TEST_CASE("deterministic consensus decision") {
  const auto same = decide_caa(inputs(0.3, 0.3, 0.3, 0.3), CaaMode::deterministic, nullptr, CaaWeights{});
  CHECK(same.score.value() == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(same.consensus == 1.0);
  CHECK(same.contributing.size() == 4);
  CHECK(same.grade == RatingGrade::A);

  // outlier on the composite signal
  const auto d = decide_caa(inputs(0.4, 0.4, 0.4, 0.9), CaaMode::deterministic, nullptr, CaaWeights{});
  const double unhalved = 0.5 * 0.9 + 0.3 * 0.4 + 0.1 * 0.4 + 0.1 * 0.4;
  const double halved = (0.25 * 0.9 + 0.3 * 0.4 + 0.1 * 0.4 + 0.1 * 0.4) / 0.75;
  CHECK(d.score.value() == doctest::Approx(halved).epsilon(1e-12));
  CHECK(std::abs(d.score.value() - 0.4) < std::abs(unhalved - 0.4));
  CHECK(d.weights_used.at("CRA") == doctest::Approx(0.25 / 0.75));
  CHECK(d.consensus < 1.0);
  CHECK(d.rationale.find("CRA score 0.9000 is an outlier") != std::string::npos);
}

TEST_CASE("consensus bounds") {
  CHECK(consensus_of({0.5, 0.5}) == 1.0);
  CHECK(consensus_of({0.0, 1.0, 0.0, 1.0}) == 0.0);
  CHECK(consensus_of({0.0, 0.5}) == doctest::Approx(0.5));
}

TEST_CASE("missing signals") {
  CaaInputs in = inputs(0.1, 0.2, 0.3, 0.4);
  in.gra.reset();
  CHECK_THROWS_AS(decide_caa(in, CaaMode::deterministic, nullptr, CaaWeights{}), MissingSignal);
  in = inputs(0.1, 0.2, 0.3, 0.4);
  in.cra.reset();
  CHECK_THROWS_AS(decide_caa(in, CaaMode::deterministic, nullptr, CaaWeights{}), MissingSignal);
}

TEST_CASE("llm mode takes the verdict and keeps the deterministic result") {
  testing::ScriptedBackend b({testing::fenced(R"({"grade":"BB","score":0.6,"rationale":"committee view"})")});
  const auto d = decide_caa(inputs(0.3, 0.3, 0.3, 0.3), CaaMode::llm, &b, CaaWeights{});
  CHECK(d.mode == CaaMode::llm);
  CHECK(d.grade == RatingGrade::BB);
  CHECK(d.deterministic_score == doctest::Approx(0.3));
  CHECK(d.rationale.find("committee view") == 0);
  CHECK(d.rationale.find("deterministic fusion") != std::string::npos);
  REQUIRE(b.prompts.size() == 1);
  CHECK(b.prompts[0].find("DETERMINISTIC_FUSION_GRADE: A") != std::string::npos);
  CHECK_THROWS_AS(decide_caa(inputs(0.3, 0.3, 0.3, 0.3), CaaMode::llm, nullptr, CaaWeights{}), InvalidArgument);
  CHECK(parse_caa_mode("llm") == CaaMode::llm);
  CHECK(to_string(CaaMode::deterministic) == "deterministic");
}
