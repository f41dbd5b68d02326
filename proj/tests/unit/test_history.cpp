#include <cmath>
#include <vector>

#include "creditxai/errors.hpp"
#include "creditxai/history.hpp"
#include "helpers.hpp"

using namespace creditxai;

namespace {

HistoryRecord rec(int year, RatingGrade g = RatingGrade::BBB) {
  HistoryRecord r;
  r.key = {"ACME", year, "tech"};
  r.grade = g;
  return r;
}

ItemFeatures feat(std::vector<float> fin) {
  ItemFeatures f;
  f.finance_vec = std::move(fin);
  f.general_vec = {1.0f, 0.0f};
  return f;
}

std::vector<int> years(const HistoryWindow& w) {
  std::vector<int> out;
  for (const auto& e : w.entries) out.push_back(e.key.fiscal_year);
  return out;
}

}  // namespace

TEST_CASE("history window selection") {
  const CompanyYearKey key{"ACME", 2021, "tech"};
  CHECK(years(build_history_window({rec(2018), rec(2019), rec(2020)}, key, 3)) == std::vector<int>{2018, 2019, 2020});
  CHECK(years(build_history_window({rec(2020), rec(2018)}, key, 3)) == std::vector<int>{2018, 2020});
  CHECK(build_history_window({}, key, 3).empty());
  // out of range, same year, other companies
  HistoryRecord other = rec(2020);
  other.key.company_id = "BETA";
  CHECK(years(build_history_window({rec(2017), rec(2021), rec(2022), other, rec(2019)}, key, 3)) ==
        std::vector<int>{2019});
  CHECK(years(build_history_window({rec(2018), rec(2019), rec(2020)}, key, 1)) == std::vector<int>{2020});
  CHECK_THROWS_AS(build_history_window({}, key, 0), PreconditionViolation);

  HistoryRecord dup = rec(2020, RatingGrade::AA);
  const auto w = build_history_window({rec(2020, RatingGrade::B), dup}, key, 3);
  REQUIRE(w.entries.size() == 1);
  CHECK(w.latest()->grade == RatingGrade::B);
}

TEST_CASE("item similarity") {
  const std::vector<float> v{0.3f, -1.2f, 2.0f};
  CHECK(item_similarity(v, v) == doctest::Approx(1.0).epsilon(1e-12));
  const std::vector<float> x{1, 0}, y{0, 1}, d{1, 1};
  CHECK(item_similarity(x, y) == 0.0);
  CHECK(std::abs(item_similarity(x, d) - 0.70710678) < 1e-8);
  const std::vector<float> scaled{0.9f, -3.6f, 6.0f};
  CHECK(item_similarity(v, scaled) == doctest::Approx(1.0).epsilon(1e-6));
  const std::vector<float> zero{0, 0};
  CHECK_THROWS_AS(item_similarity(x, zero), ZeroVector);
  const std::vector<float> three{1, 0, 0};
  CHECK_THROWS_AS(item_similarity(x, three), DimensionMismatch);
}

TEST_CASE("year aggregation") {
  CHECK(aggregate_year_similarity({{"1A", 0.9}, {"7", 0.7}}) == doctest::Approx(0.8));
  CHECK(aggregate_year_similarity({{"1A", 0.42}}) == 0.42);
  CHECK_THROWS_AS(aggregate_year_similarity({}), NoCommonItems);

  const std::map<std::string, ItemFeatures> cur{{"1", feat({1, 0})}, {"7", feat({1, 1})}, {"8", feat({0, 1})}};
  const std::map<std::string, ItemFeatures> hist{{"1", feat({1, 0})}, {"7", feat({1, 0})}, {"9", feat({1, 0})}};
  const auto ys = year_similarity(cur, hist, {}, VectorChoice::finance);
  CHECK(ys.per_item.size() == 2);
  CHECK(ys.per_item.at("1") == doctest::Approx(1.0));
  CHECK(ys.per_item.at("7") == doctest::Approx(0.70710678));
  const auto restricted = year_similarity(cur, hist, {"7", "8"}, VectorChoice::finance);
  CHECK(restricted.per_item.size() == 1);
  CHECK(restricted.excluded_items == 1);
  const auto disjoint = year_similarity({{"8", feat({0, 1})}}, hist, {}, VectorChoice::finance);
  CHECK_THROWS_AS(aggregate_year_similarity(disjoint.per_item), NoCommonItems);
}

TEST_CASE("softmax weights") {
  const auto w = softmax_weights({{2018, 0.9}, {2019, 0.5}, {2020, 0.2}}, 5.0);
  REQUIRE(w.per_year.size() == 3);
  // oracle: exp(4.5), exp(2.5), exp(1.0) normalized
  const double z = std::exp(4.5) + std::exp(2.5) + std::exp(1.0);
  CHECK(w.per_year[0].weight == doctest::Approx(std::exp(4.5) / z).epsilon(1e-12));
  CHECK(std::abs(w.per_year[0].weight - 0.8580) < 1e-3);
  CHECK(std::abs(w.per_year[1].weight - 0.1161) < 1e-3);
  CHECK(std::abs(w.per_year[2].weight - 0.0259) < 1e-3);

  for (const auto& yw : softmax_weights({{1, 0.3}, {2, 0.3}, {3, 0.3}, {4, 0.3}}, 7.0).per_year) {
    CHECK(yw.weight == doctest::Approx(0.25));
  }
  for (const auto& yw : softmax_weights({{1, 0.9}, {2, -0.3}}, 0.0).per_year) CHECK(yw.weight == 0.5);
  // large alpha stays finite
  const auto big = softmax_weights({{1, 1.0}, {2, -1.0}}, 800.0);
  CHECK(std::isfinite(big.per_year[0].weight));
  CHECK(big.per_year[1].weight >= 0.0);
}

TEST_CASE("similarity weights over a window") {
  const CompanyYearKey key{"ACME", 2021, "tech"};
  HistoryWindow w;
  w.key = key;
  HistoryRecord a = rec(2019), b = rec(2020);
  a.items = {{"1", feat({1, 0})}};
  b.items = {{"2", feat({1, 0})}};
  w.entries = {a, b};
  const std::map<std::string, ItemFeatures> cur{{"1", feat({1, 0})}};
  const auto sw = compute_similarity_weights(cur, w, {}, VectorChoice::finance, 5.0);
  REQUIRE(sw.per_year.size() == 2);
  CHECK(sw.find(2019)->sim == doctest::Approx(1.0));
  CHECK(sw.find(2020)->sim == 0.0);
  CHECK(sw.years_without_common_items == std::vector<int>{2020});
  CHECK(sw.find(2019)->weight > sw.find(2020)->weight);
  CHECK(compute_similarity_weights(cur, HistoryWindow{key, 3, {}}, {}, VectorChoice::finance, 5.0).empty());
}

TEST_CASE("history context rendering order") {
  HistoryWindow w;
  w.key = {"ACME", 2021, "tech"};
  HistoryRecord a = rec(2019, RatingGrade::A), b = rec(2020, RatingGrade::BB);
  b.financials.indicators = {{"debt_to_equity", 1.5}, {"current_ratio", 2.0}};
  w.entries = {a, b};

  SimilarityWeights sw;
  sw.per_year = {{2019, 0.9, 0.7}, {2020, 0.1, 0.3}};
  CHECK(history_render_order(sw) == std::vector<int>{2019, 2020});
  const std::string text = render_history_context(w, sw, VectorChoice::finance);
  CHECK(text.find("FY2019") < text.find("FY2020"));
  CHECK(text.find("weight 0.70") != std::string::npos);
  CHECK(text.find("prior grade BB") != std::string::npos);
  CHECK(text.find("current_ratio=2, debt_to_equity=1.5") != std::string::npos);

  sw.per_year = {{2019, 0.5, 0.5}, {2020, 0.5, 0.5}};
  CHECK(history_render_order(sw) == std::vector<int>{2020, 2019});

  CHECK_THROWS_AS(render_history_context(HistoryWindow{}, sw, VectorChoice::finance), PreconditionViolation);
  CHECK(financial_summary({}) == "no financial indicators");
}
