#include <cmath>
#include <limits>

#include "creditxai/errors.hpp"
#include "creditxai/ratings.hpp"
#include "helpers.hpp"

using namespace creditxai;

TEST_CASE("grade_to_score uses bin midpoints") {
  CHECK(grade_to_score(RatingGrade::AAA).value() == 0.0625);
  CHECK(grade_to_score(RatingGrade::C).value() == 0.9375);
  CHECK(grade_to_score(RatingGrade::AA) < grade_to_score(RatingGrade::BBB));
}

TEST_CASE("score_to_grade boundaries") {
  CHECK(score_to_grade(RiskScore(0.0)) == RatingGrade::AAA);
  CHECK(score_to_grade(RiskScore(1.0)) == RatingGrade::C);
  CHECK(score_to_grade(RiskScore(0.5)) == RatingGrade::BB);
  const double eps = 1e-12;
  for (int i = 1; i < kGradeCount; ++i) {
    const double edge = i / 8.0;
    CHECK(grade_index(score_to_grade(RiskScore(edge - eps))) == i - 1);
    CHECK(grade_index(score_to_grade(RiskScore(edge))) == i);
  }
}

TEST_CASE("roundtrip and monotonicity over all grades") {
  for (RatingGrade g : kAllGrades) {
    CHECK(roundtrip_check(g) == g);
    if (grade_index(g) > 0) {
      CHECK(grade_to_score(grade_from_index(grade_index(g) - 1)) < grade_to_score(g));
    }
  }
  RatingGrade prev = RatingGrade::AAA;
  for (int k = 0; k <= 10000; ++k) {
    const RatingGrade g = score_to_grade(RiskScore(k / 10000.0));
    CHECK(grade_index(g) >= grade_index(prev));
    prev = g;
  }
}

TEST_CASE("RiskScore rejects out-of-range values") {
  CHECK_THROWS_AS(RiskScore(-0.01), InvalidArgument);
  CHECK_THROWS_AS(RiskScore(1.0001), InvalidArgument);
  CHECK_THROWS_AS(RiskScore(std::numeric_limits<double>::quiet_NaN()), InvalidArgument);
}

TEST_CASE("grade parsing") {
  CHECK(parse_grade("bbb") == RatingGrade::BBB);
  CHECK(parse_grade("Ccc") == RatingGrade::CCC);
  CHECK(to_string(RatingGrade::AA) == "AA");
  CHECK_THROWS_AS(parse_grade("A+"), InvalidArgument);
  CHECK_THROWS_AS(parse_grade("D"), InvalidArgument);
  CHECK_FALSE(try_parse_grade("").has_value());
  for (RatingGrade g : kAllGrades) CHECK(parse_grade(to_string(g)) == g);
}

TEST_CASE("apply_notches: positive is an upgrade and clamps on the scale") {
  CHECK(apply_notches(RatingGrade::BBB, 1) == RatingGrade::A);
  CHECK(apply_notches(RatingGrade::BBB, -1) == RatingGrade::BB);
  CHECK(apply_notches(RatingGrade::AA, 5) == RatingGrade::AAA);
  CHECK(apply_notches(RatingGrade::CCC, -4) == RatingGrade::C);
}

TEST_CASE("CompanyYearKey validation") {
  CompanyYearKey k{"ACME", 2020, "tech"};
  CHECK_NOTHROW(k.validate());
  k.fiscal_year = 1989;
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
  k.fiscal_year = 2020;
  k.sector = "";
  CHECK_THROWS_AS(k.validate(), InvalidArgument);
}

TEST_CASE("RiskSignal consistency honours the override flag") {
  RiskSignal s;
  s.grade = RatingGrade::BBB;
  s.score = RiskScore(0.44);
  CHECK(s.is_consistent());
  s.score = RiskScore(0.9);
  CHECK_FALSE(s.is_consistent());
  s.flags.grade_overridden = true;
  CHECK(s.is_consistent());
}
