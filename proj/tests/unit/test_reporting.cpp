#include <atomic>
#include <thread>

#include <json.hpp>

#include "creditxai/errors.hpp"
#include "creditxai/reporting.hpp"
#include "helpers.hpp"

using namespace creditxai;

namespace {

RiskSignal sig(AgentId id, RatingGrade g, const std::string& rationale) {
  RiskSignal s;
  s.agent_id = id;
  s.grade = g;
  s.score = grade_to_score(g);
  s.rationale = rationale;
  s.inputs_digest = std::string(to_string(id)) + "-digest";
  return s;
}

FinalDecision fixture_decision() {
  CaaInputs in;
  in.bra = sig(AgentId::BRA, RatingGrade::BBB, "Demand held up in core segments.\n\nBacklog grew 4%.");
  in.fra = sig(AgentId::FRA, RatingGrade::BB, "Leverage above sector median.");
  RiskSignal gra = sig(AgentId::GRA, RatingGrade::BB, "Board independence unchanged.");
  gra.initial_grade = RatingGrade::B;
  gra.adjustment = -1;
  in.gra = gra;
  RiskSignal cra = sig(AgentId::CRA, RatingGrade::BBB, "dS = 0.1250 <= delta; base weights");
  cra.score = RiskScore(0.4975);
  in.cra = cra;
  return decide_caa(in, CaaMode::deterministic, nullptr, CaaWeights{});
}

SimilarityWeights weights(std::vector<std::pair<int, double>> sims) { return softmax_weights(sims, 5.0); }

std::string mask_timestamp(std::string md) {
  const auto a = md.find('\n');
  const auto b = md.find('\n', a + 1);
  return md.replace(a + 1, b - a - 1, "Generated: <masked>");
}

}  // namespace

TEST_CASE("golden markdown, timestamp masked") {
  const CompanyYearKey key{"ACME", 2021, "industrials"};
  const auto report = render_report(key, fixture_decision(), weights({{2019, 0.81}, {2020, 0.93}}),
                                    weights({{2020, 0.5}}), "cafe0123");
  const std::string md = report_markdown(report, utc_timestamp());
  CHECK(md.substr(md.find('\n') + 1, 11) == "Generated: ");
  testing::check_golden(testing::fixture_dir() / "golden" / "report_ACME_2021.md", mask_timestamp(md));

  const auto f = md.find("## Final rating"), c = md.find("## Composite"), b = md.find("## Business"),
             fi = md.find("## Financial"), g = md.find("## Governance"), h = md.find("## History appendix");
  CHECK(f < c);
  CHECK(c < b);
  CHECK(b < fi);
  CHECK(fi < g);
  CHECK(g < h);
}

TEST_CASE("report numbers match the signals and the sidecar") {
  const FinalDecision d = fixture_decision();
  const auto report = render_report({"ACME", 2021, "industrials"}, d, weights({{2020, 0.9}}), {}, "fp");
  for (const auto& s : report.sections) {
    const auto it = std::find_if(d.contributing.begin(), d.contributing.end(),
                                 [&](const RiskSignal& sig) { return sig.agent_id == s.agent; });
    REQUIRE(it != d.contributing.end());
    CHECK(s.grade == it->grade);
    CHECK(s.score == it->score);
    for (const auto& line : s.evidence) CHECK(it->rationale.find(line) != std::string::npos);
  }
  const auto j = nlohmann::json::parse(report_json(report));
  CHECK(j["final"]["score"].get<double>() == d.score.value());
  CHECK(report_json(report) == report_json(report_from_json(report_json(report))));

  char buf[32];
  std::snprintf(buf, sizeof(buf), "- Score: %.4f", d.score.value());
  CHECK(report_markdown(report, "t").find(buf) != std::string::npos);
}

TEST_CASE("empty history reads no prior years") {
  const auto report = render_report({"ACME", 2018, "industrials"}, fixture_decision(), {}, {}, "fp");
  CHECK(report.history_appendix.empty());
  CHECK(report_markdown(report, "t").find("## History appendix\n\nno prior years\n") != std::string::npos);
}

TEST_CASE("render is deterministic") {
  const auto a = render_report({"ACME", 2021, "x"}, fixture_decision(), weights({{2020, 0.3}}), {}, "fp");
  const auto b = render_report({"ACME", 2021, "x"}, fixture_decision(), weights({{2020, 0.3}}), {}, "fp");
  CHECK(report_json(a) == report_json(b));
}

TEST_CASE("write_report") {
  testing::TempDir dir("reports");
  const auto report = render_report({"ACME", 2021, "x"}, fixture_decision(), {}, {}, "fp");
  const auto paths = write_report(report, dir.path() / "out", "t");
  CHECK(std::filesystem::exists(paths.markdown));
  CHECK(std::filesystem::exists(paths.json));
  CHECK(paths.markdown.filename() == "ACME_2021.md");

  testing::write_file(dir.path() / "plain", "x");
  CHECK_THROWS_AS(write_report(report, dir.path() / "plain" / "sub", "t"), IoFailure);
}

TEST_CASE("rewrites are atomic for concurrent readers") {
  testing::TempDir dir("atomic");
  const auto path = dir.path() / "r.md";
  const std::string a(200000, 'a'), b(150000, 'b');
  write_file_atomic(path, a);
  std::atomic<bool> done{false};
  std::atomic<int> torn{0}, reads{0};
  std::thread reader([&] {
    while (!done) {
      const std::string s = testing::read_file(path);
      ++reads;
      if (s != a && s != b) ++torn;
    }
  });
  for (int i = 0; i < 100; ++i) write_file_atomic(path, i % 2 ? a : b);
  done = true;
  reader.join();
  CHECK(reads > 0);
  CHECK(torn == 0);
  // no temp files left behind
  CHECK(std::distance(std::filesystem::directory_iterator(dir.path()), std::filesystem::directory_iterator{}) == 1);
}
