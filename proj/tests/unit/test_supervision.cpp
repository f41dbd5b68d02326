#include <algorithm>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"
#include "creditxai/supervision.hpp"
#include "helpers.hpp"

using namespace creditxai;

namespace {

const CompanyYearKey kKey{"ACME", 2021, "tech"};

// One well-formed run for a key: stages laid out sequentially in enum order,
// 10 ns each, with chained digests.
std::vector<TraceEvent> complete_run(const CompanyYearKey& key, std::int64_t t0 = 1000) {
  std::vector<TraceEvent> out;
  std::map<Stage, std::string> outputs;
  std::int64_t t = t0;
  for (Stage s : all_stages()) {
    TraceEvent e;
    e.run_id = "r1";
    e.key = key;
    e.stage = s;
    std::vector<std::string> up;
    for (Stage d : stage_dependencies(s)) up.push_back(outputs.at(d));
    e.inputs_digest = up.empty() ? sha256_hex("raw") : chain_digest(up);
    e.outputs_digest = sha256_hex(key.label() + std::string(to_string(s)));
    outputs[s] = e.outputs_digest;
    e.started_ns = t;
    e.ended_ns = t + 10;
    t += 20;
    out.push_back(e);
  }
  return out;
}

TraceEvent& find(std::vector<TraceEvent>& events, Stage s) {
  return *std::find_if(events.begin(), events.end(), [s](const TraceEvent& e) { return e.stage == s; });
}

bool has(const VerificationReport& r, const std::string& text) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const std::string& v) { return v.find(text) != std::string::npos; });
}

std::size_t line_count(const std::filesystem::path& p) {
  const std::string s = testing::read_file(p);
  return std::count(s.begin(), s.end(), '\n');
}

}  // namespace

TEST_CASE("stage table") {
  CHECK(all_stages().size() == kStageCount);
  CHECK(kStageCount == 11);
  for (Stage s : all_stages()) CHECK(parse_stage(to_string(s)) == s);
  CHECK(stage_dependencies(Stage::CRA) == std::vector<Stage>{Stage::BRA, Stage::FRA});
  CHECK(stage_dependencies(Stage::INGEST).empty());
  CHECK_THROWS_AS(parse_stage("SSA"), InvalidArgument);
}

TEST_CASE("complete run verifies clean") {
  const auto events = complete_run(kKey);
  const auto r = verify_trace(events, {kKey});
  CHECK(r.ok());
  CHECK(r.keys_checked == 1);
  CHECK(r.events_checked == 11);
}

TEST_CASE("constructed gaps and inversions are reported") {
  auto events = complete_run(kKey);
  events.erase(std::remove_if(events.begin(), events.end(), [](const TraceEvent& e) { return e.stage == Stage::CRA; }),
               events.end());
  CHECK(has(verify_trace(events, {kKey}), "ACME_2021: missing stage CRA"));

  events = complete_run(kKey);
  find(events, Stage::CAA).started_ns = find(events, Stage::GRA_ADJ).ended_ns - 1;
  CHECK(has(verify_trace(events, {kKey}), "ordering violation, CAA started before GRA_ADJ ended"));

  events = complete_run(kKey);
  find(events, Stage::FRA).outputs_digest = "tampered";
  CHECK(has(verify_trace(events, {kKey}), "digest chain mismatch at CRA"));

  events = complete_run(kKey);
  events.push_back(find(events, Stage::BRA));
  CHECK(has(verify_trace(events, {kKey}), "stage BRA recorded 2 times"));

  events = complete_run(kKey);
  find(events, Stage::HISTORY).error = "boom";
  CHECK(has(verify_trace(events, {kKey}), "stage HISTORY failed: boom"));

  events = complete_run(kKey);
  find(events, Stage::RRA).ended_ns = 0;
  CHECK(has(verify_trace(events, {kKey}), "ends before it starts"));

  const CompanyYearKey other{"BETA", 2021, "tech"};
  const auto r = verify_trace(complete_run(kKey), {kKey, other});
  CHECK(std::count_if(r.violations.begin(), r.violations.end(),
                      [](const std::string& v) { return v.rfind("BETA_2021", 0) == 0; }) == 11);
}

TEST_CASE("reduced stage sets") {
  auto events = complete_run(kKey);
  const std::vector<Stage> reduced{Stage::INGEST, Stage::FEATURES, Stage::HISTORY, Stage::FRA_QUANT, Stage::FRA};
  events.erase(std::remove_if(events.begin(), events.end(),
                              [&](const TraceEvent& e) {
                                return std::find(reduced.begin(), reduced.end(), e.stage) == reduced.end();
                              }),
               events.end());
  CHECK(verify_trace(events, {kKey}, reduced).ok());
  events.push_back(complete_run(kKey).at(static_cast<int>(Stage::BRA)));
  CHECK(has(verify_trace(events, {kKey}, reduced), "unexpected stage BRA"));
}

TEST_CASE("trace sink") {
  testing::TempDir dir("trace");
  const auto path = trace_path(dir.path(), "r1");
  CHECK(path.filename() == "trace_r1.jsonl");

  TraceSink sink;
  CHECK_FALSE(sink.is_open());
  TraceHeader header{"r1", "2026-01-01T00:00:00Z", "fp", {kKey}, all_stages(), false};
  sink.open(path, header);
  CHECK(line_count(path) == 1);

  const auto events = complete_run(kKey);
  record_event(sink, events[0]);
  CHECK(line_count(path) == 2);
  for (std::size_t i = 1; i < events.size(); ++i) record_event(sink, events[i]);
  sink.finish(false);
  sink.close();
  CHECK_THROWS_AS(record_event(sink, events[0]), IoFailure);

  const Trace t = load_trace(path);
  REQUIRE(t.header.has_value());
  CHECK(t.header->run_id == "r1");
  CHECK(t.header->expected_keys.size() == 1);
  CHECK(t.partial == false);
  REQUIRE(t.events.size() == events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(t.events[i].stage == events[i].stage);
    CHECK(t.events[i].outputs_digest == events[i].outputs_digest);
    CHECK(t.events[i].started_ns == events[i].started_ns);
  }
  CHECK(verify_trace(t.events, t.header->expected_keys).ok());
}

TEST_CASE("event json round-trip and corrupt lines") {
  TraceEvent e = complete_run(kKey)[3];
  e.error = "x";
  e.backend_calls = 2;
  const TraceEvent back = event_from_json(event_to_json(e), 1);
  CHECK(back.error == e.error);
  CHECK(back.backend_calls == 2);
  CHECK(back.key == e.key);
  CHECK_THROWS_AS(event_from_json("{\"stage\":", 4), CorruptRecord);

  testing::TempDir dir("badtrace");
  testing::write_file(dir.path() / "t.jsonl", event_to_json(e) + "\n{oops\n");
  try {
    load_trace(dir.path() / "t.jsonl");
    FAIL("expected CorruptRecord");
  } catch (const CorruptRecord& err) {
    CHECK(err.line() == 2);
  }
}
