#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "creditxai/ratings.hpp"

namespace creditxai {

enum class Stage : std::uint8_t { INGEST, FEATURES, HISTORY, FRA_QUANT, BRA, FRA, GRA_INIT, CRA, GRA_ADJ, CAA, RRA };

inline constexpr std::size_t kStageCount = 11;

const std::vector<Stage>& all_stages();
std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

// Upstream stages whose outputs feed `s`.
const std::vector<Stage>& stage_dependencies(Stage s);

struct TraceEvent {
  std::string run_id;
  CompanyYearKey key;
  Stage stage = Stage::INGEST;
  std::string inputs_digest;
  std::string outputs_digest;
  std::int64_t started_ns = 0;  // steady clock
  std::int64_t ended_ns = 0;
  int backend_calls = 0;
  std::optional<std::string> error;
};

std::int64_t monotonic_ns();

// Inputs digest of a stage: digest of its upstream outputs in dependency
// order. Stages without dependencies hash their raw input instead.
std::string chain_digest(const std::vector<std::string>& upstream_outputs);

struct TraceHeader {
  std::string run_id;
  std::string wall_clock;
  std::string config_fingerprint;
  std::vector<CompanyYearKey> expected_keys;
  std::vector<Stage> expected_stages;
  bool partial = false;
};

std::string event_to_json(const TraceEvent& e);
TraceEvent event_from_json(const std::string& line, std::size_t line_no);

// Append-only JSONL trace file with one serialized writer. Every line is
// flushed as it is written.
class TraceSink {
 public:
  TraceSink() = default;
  ~TraceSink();
  TraceSink(const TraceSink&) = delete;
  TraceSink& operator=(const TraceSink&) = delete;

  // Creates or truncates path and writes the header line.
  void open(const std::filesystem::path& path, const TraceHeader& header);
  void close();
  bool is_open() const;

  // Throws IoFailure when the sink is closed or the write fails.
  void record(const TraceEvent& event);
  // Appends a closing line marking the run complete or partial.
  void finish(bool partial);

  const std::filesystem::path& path() const { return path_; }

 private:
  void write_line(const std::string& line);

  mutable std::mutex mu_;
  std::ofstream out_;
  std::filesystem::path path_;
};

void record_event(TraceSink& sink, const TraceEvent& event);

// "trace_<run_id>.jsonl" inside dir.
std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& run_id);

struct Trace {
  std::optional<TraceHeader> header;
  std::vector<TraceEvent> events;
  std::optional<bool> partial;  // from the closing line, if present
};

Trace load_trace(const std::filesystem::path& path);

struct VerificationReport {
  std::vector<std::string> violations;
  std::size_t keys_checked = 0;
  std::size_t events_checked = 0;

  bool ok() const { return violations.empty(); }
};

// For every expected key: each expected stage appears exactly once, no event
// carries an error, ended >= started, dependencies finished before a stage
// started, and each inputs_digest chains from the upstream outputs_digests.
VerificationReport verify_trace(const std::vector<TraceEvent>& events, const std::vector<CompanyYearKey>& expected_keys,
                                const std::vector<Stage>& expected_stages = all_stages());

}  // namespace creditxai
