#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "creditxai/agents.hpp"
#include "creditxai/features.hpp"
#include "creditxai/fra_quant.hpp"
#include "creditxai/fusion.hpp"

namespace creditxai {

enum class HistoryMode { history, no_history };

std::string_view to_string(HistoryMode m);
HistoryMode parse_history_mode(std::string_view text);

using AgentSet = std::set<AgentId>;

const AgentSet& full_agent_set();
// "BRA+FRA+CRA" style, in BRA, FRA, GRA, CRA, CAA order.
std::string agent_set_label(const AgentSet& set);
// Accepts "+" or "," separated ids, or "ALL". Throws InvalidArgument on an
// unknown id or a set violating CRA => BRA+FRA and CAA => CRA+GRA.
AgentSet parse_agent_set(std::string_view text);
void validate_agent_set(const AgentSet& set);

struct BackendConfig {
  std::string type = "mock";  // mock | http
  std::string url;
  std::string model;
  double temperature = 0.0;
  std::uint64_t seed = 7;
  int max_tokens = 1024;
  int timeout_ms = 60000;
  int max_attempts = 3;
  int max_in_flight = 4;
  std::string rules = "mock_rules.json";  // relative to the corpus directory
};

struct FeatureSourceConfig {
  std::string provider = "store";  // store | lexical | http
  std::string url;
  std::string store = "features.jsonl";  // relative to the corpus directory
};

struct PipelineConfig {
  double alpha = 5.0;
  int window_k = 3;
  FusionParams fusion;
  std::vector<std::string> item_set = default_key_items();
  AgentSettings agents;
  std::size_t min_body_chars = kDefaultMinBodyChars;
  std::size_t min_support = 5;
  std::vector<std::string> indicator_schema;  // empty = every indicator seen
  AdjustmentPolicy fra_policy;
  CaaMode caa_mode = CaaMode::deterministic;
  CaaWeights caa_weights;
  BackendConfig backend;
  FeatureSourceConfig features;
  FeatureDims dims;
  int cutoff_year = 2020;
  HistoryMode mode = HistoryMode::history;
  AgentSet agent_set = full_agent_set();
  int workers = 0;  // 0 = hardware concurrency

  void validate() const;
};

// Missing keys keep their defaults; unknown keys are rejected.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);
// Canonical dump: every field, sorted keys.
std::string config_to_json(const PipelineConfig& cfg);
std::string config_fingerprint(const PipelineConfig& cfg);

}  // namespace creditxai
