#include "creditxai/supervision.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <json.hpp>
#include <map>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

constexpr std::array<std::string_view, kStageCount> kStageNames = {
    "INGEST", "FEATURES", "HISTORY", "FRA_QUANT", "BRA", "FRA", "GRA_INIT", "CRA", "GRA_ADJ", "CAA", "RRA"};

json key_json(const CompanyYearKey& k) {
  return {{"company_id", k.company_id}, {"fiscal_year", k.fiscal_year}, {"sector", k.sector}};
}

CompanyYearKey key_from(const json& j) {
  CompanyYearKey k;
  k.company_id = j.at("company_id").get<std::string>();
  k.fiscal_year = j.at("fiscal_year").get<int>();
  k.sector = j.at("sector").get<std::string>();
  return k;
}

}  // namespace

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> stages = {Stage::INGEST, Stage::FEATURES, Stage::HISTORY, Stage::FRA_QUANT,
                                            Stage::BRA,    Stage::FRA,      Stage::GRA_INIT, Stage::CRA,
                                            Stage::GRA_ADJ, Stage::CAA,     Stage::RRA};
  return stages;
}

std::string_view to_string(Stage s) { return kStageNames[static_cast<std::size_t>(s)]; }

Stage parse_stage(std::string_view text) {
  for (std::size_t i = 0; i < kStageNames.size(); ++i) {
    if (kStageNames[i] == text) return static_cast<Stage>(i);
  }
  throw InvalidArgument("unknown stage '" + std::string(text) + "'");
}

const std::vector<Stage>& stage_dependencies(Stage s) {
  static const std::map<Stage, std::vector<Stage>> deps = {
      {Stage::INGEST, {}},
      {Stage::FEATURES, {Stage::INGEST}},
      {Stage::HISTORY, {Stage::FEATURES}},
      {Stage::FRA_QUANT, {Stage::HISTORY}},
      {Stage::BRA, {Stage::HISTORY}},
      {Stage::FRA, {Stage::FRA_QUANT}},
      {Stage::GRA_INIT, {Stage::HISTORY}},
      {Stage::CRA, {Stage::BRA, Stage::FRA}},
      {Stage::GRA_ADJ, {Stage::GRA_INIT, Stage::CRA}},
      {Stage::CAA, {Stage::BRA, Stage::FRA, Stage::CRA, Stage::GRA_ADJ}},
      {Stage::RRA, {Stage::CAA}},
  };
  return deps.at(s);
}

std::int64_t monotonic_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string chain_digest(const std::vector<std::string>& upstream_outputs) {
  std::string joined;
  for (const auto& d : upstream_outputs) joined += d + "\n";
  return sha256_hex("chain\n" + joined);
}

std::string event_to_json(const TraceEvent& e) {
  json j = {{"type", "stage"},
            {"run_id", e.run_id},
            {"key", key_json(e.key)},
            {"stage", std::string(to_string(e.stage))},
            {"inputs_digest", e.inputs_digest},
            {"outputs_digest", e.outputs_digest},
            {"started_ns", e.started_ns},
            {"ended_ns", e.ended_ns},
            {"backend_calls", e.backend_calls}};
  j["error"] = e.error ? json(*e.error) : json(nullptr);
  return j.dump();
}

TraceEvent event_from_json(const std::string& line, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    TraceEvent e;
    e.run_id = j.at("run_id").get<std::string>();
    e.key = key_from(j.at("key"));
    e.stage = parse_stage(j.at("stage").get<std::string>());
    e.inputs_digest = j.at("inputs_digest").get<std::string>();
    e.outputs_digest = j.at("outputs_digest").get<std::string>();
    e.started_ns = j.at("started_ns").get<std::int64_t>();
    e.ended_ns = j.at("ended_ns").get<std::int64_t>();
    e.backend_calls = j.at("backend_calls").get<int>();
    if (j.contains("error") && !j["error"].is_null()) e.error = j["error"].get<std::string>();
    return e;
  } catch (const json::exception& ex) {
    throw CorruptRecord(line_no, ex.what());
  } catch (const InvalidArgument& ex) {
    throw CorruptRecord(line_no, ex.what());
  }
}

TraceSink::~TraceSink() { close(); }

void TraceSink::open(const std::filesystem::path& path, const TraceHeader& header) {
  std::lock_guard lock(mu_);
  if (out_.is_open()) out_.close();
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw IoFailure("cannot open trace file '" + path.string() + "'");
  path_ = path;
  json keys = json::array();
  for (const auto& k : header.expected_keys) keys.push_back(key_json(k));
  json stages = json::array();
  for (Stage s : header.expected_stages) stages.push_back(std::string(to_string(s)));
  const json h = {{"type", "run_header"},           {"run_id", header.run_id},
                  {"wall_clock", header.wall_clock}, {"config_fingerprint", header.config_fingerprint},
                  {"expected_keys", keys},           {"expected_stages", stages}};
  write_line(h.dump());
}

void TraceSink::close() {
  std::lock_guard lock(mu_);
  if (out_.is_open()) out_.close();
}

bool TraceSink::is_open() const {
  std::lock_guard lock(mu_);
  return out_.is_open();
}

void TraceSink::write_line(const std::string& line) {
  if (!out_.is_open()) throw IoFailure("trace sink is closed");
  out_ << line << '\n';
  out_.flush();
  if (!out_) throw IoFailure("failed writing trace file '" + path_.string() + "'");
}

void TraceSink::record(const TraceEvent& event) {
  const std::string line = event_to_json(event);
  std::lock_guard lock(mu_);
  write_line(line);
}

void TraceSink::finish(bool partial) {
  std::lock_guard lock(mu_);
  write_line(json{{"type", "run_end"}, {"partial", partial}}.dump());
}

void record_event(TraceSink& sink, const TraceEvent& event) { sink.record(event); }

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& run_id) {
  return dir / ("trace_" + run_id + ".jsonl");
}

Trace load_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open trace '" + path.string() + "'");
  Trace t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw CorruptRecord(line_no, e.what());
    }
    const std::string type = j.value("type", "stage");
    if (type == "run_header") {
      try {
        TraceHeader h;
        h.run_id = j.at("run_id").get<std::string>();
        h.wall_clock = j.value("wall_clock", "");
        h.config_fingerprint = j.value("config_fingerprint", "");
        for (const auto& k : j.at("expected_keys")) h.expected_keys.push_back(key_from(k));
        for (const auto& s : j.at("expected_stages")) h.expected_stages.push_back(parse_stage(s.get<std::string>()));
        t.header = std::move(h);
      } catch (const std::exception& e) {
        throw CorruptRecord(line_no, e.what());
      }
    } else if (type == "run_end") {
      t.partial = j.value("partial", false);
    } else {
      t.events.push_back(event_from_json(line, line_no));
    }
  }
  return t;
}

VerificationReport verify_trace(const std::vector<TraceEvent>& events, const std::vector<CompanyYearKey>& expected_keys,
                                const std::vector<Stage>& expected_stages) {
  VerificationReport report;
  std::map<std::pair<std::string, int>, std::vector<const TraceEvent*>> by_key;
  for (const auto& e : events) by_key[{e.key.company_id, e.key.fiscal_year}].push_back(&e);
  const std::set<Stage> expected(expected_stages.begin(), expected_stages.end());

  for (const auto& key : expected_keys) {
    ++report.keys_checked;
    const std::string label = key.label();
    auto it = by_key.find({key.company_id, key.fiscal_year});
    std::map<Stage, std::vector<const TraceEvent*>> stages;
    if (it != by_key.end()) {
      for (const TraceEvent* e : it->second) stages[e->stage].push_back(e);
      report.events_checked += it->second.size();
    }
    for (Stage s : expected_stages) {
      const auto found = stages.find(s);
      if (found == stages.end()) {
        report.violations.push_back(label + ": missing stage " + std::string(to_string(s)));
      } else if (found->second.size() > 1) {
        report.violations.push_back(label + ": stage " + std::string(to_string(s)) + " recorded " +
                                    std::to_string(found->second.size()) + " times");
      }
    }
    for (const auto& [stage, list] : stages) {
      if (!expected.count(stage)) {
        report.violations.push_back(label + ": unexpected stage " + std::string(to_string(stage)));
      }
      for (const TraceEvent* e : list) {
        if (e->error) {
          report.violations.push_back(label + ": stage " + std::string(to_string(stage)) + " failed: " + *e->error);
        }
        if (e->ended_ns < e->started_ns) {
          report.violations.push_back(label + ": stage " + std::string(to_string(stage)) + " ends before it starts");
        }
      }
    }
    for (const auto& [stage, list] : stages) {
      if (list.size() != 1) continue;
      const TraceEvent* e = list.front();
      std::vector<std::string> upstream;
      bool complete = true;
      for (Stage dep : stage_dependencies(stage)) {
        if (!expected.count(dep)) continue;
        auto d = stages.find(dep);
        if (d == stages.end() || d->second.size() != 1) {
          complete = false;
          continue;
        }
        const TraceEvent* de = d->second.front();
        if (de->ended_ns > e->started_ns) {
          report.violations.push_back(label + ": ordering violation, " + std::string(to_string(stage)) +
                                      " started before " + std::string(to_string(dep)) + " ended");
        }
        upstream.push_back(de->outputs_digest);
      }
      if (complete && !upstream.empty() && chain_digest(upstream) != e->inputs_digest) {
        report.violations.push_back(label + ": digest chain mismatch at " + std::string(to_string(stage)));
      }
    }
  }
  return report;
}

}  // namespace creditxai
