#include "creditxai/config.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw InvalidArgument("config: '" + where + "' must be an object");
  for (const auto& [k, v] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || k == a;
    if (!ok) throw InvalidArgument("config: unknown key '" + k + "' in " + where);
  }
}

template <typename T>
void read(const json& obj, const char* name, T& out) {
  if (obj.contains(name)) out = obj.at(name).get<T>();
}

}  // namespace

std::string_view to_string(HistoryMode m) { return m == HistoryMode::history ? "history" : "no_history"; }

HistoryMode parse_history_mode(std::string_view text) {
  if (text == "history") return HistoryMode::history;
  if (text == "no_history" || text == "no-history") return HistoryMode::no_history;
  throw InvalidArgument("unknown history mode '" + std::string(text) + "'");
}

const AgentSet& full_agent_set() {
  static const AgentSet all = {AgentId::BRA, AgentId::FRA, AgentId::GRA, AgentId::CRA, AgentId::CAA};
  return all;
}

std::string agent_set_label(const AgentSet& set) {
  std::string out;
  for (AgentId id : set) {
    if (!out.empty()) out += "+";
    out += to_string(id);
  }
  return out;
}

void validate_agent_set(const AgentSet& set) {
  if (set.empty()) throw InvalidArgument("agent set is empty");
  if (set.count(AgentId::CRA) && !(set.count(AgentId::BRA) && set.count(AgentId::FRA))) {
    throw InvalidArgument("agent set " + agent_set_label(set) + ": CRA requires BRA and FRA");
  }
  if (set.count(AgentId::CAA) && !(set.count(AgentId::CRA) && set.count(AgentId::GRA))) {
    throw InvalidArgument("agent set " + agent_set_label(set) + ": CAA requires CRA and GRA");
  }
}

AgentSet parse_agent_set(std::string_view text) {
  if (text == "ALL" || text == "all") return full_agent_set();
  AgentSet set;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) set.insert(parse_agent_id(token));
    token.clear();
  };
  for (char c : text) {
    if (c == '+' || c == ',' || c == ' ') {
      flush();
    } else {
      token += c;
    }
  }
  flush();
  validate_agent_set(set);
  return set;
}

void PipelineConfig::validate() const {
  if (!(alpha >= 0.0)) throw InvalidArgument("config: alpha must be >= 0");
  if (window_k < 1) throw InvalidArgument("config: window_k must be >= 1");
  fusion.validate();
  fra_policy.validate();
  caa_weights.validate();
  if (item_set.empty()) throw InvalidArgument("config: item_set is empty");
  if (agents.retries < 0) throw InvalidArgument("config: retries must be >= 0");
  if (backend.type != "mock" && backend.type != "http") {
    throw InvalidArgument("config: backend.type must be mock or http");
  }
  if (features.provider != "store" && features.provider != "lexical" && features.provider != "http") {
    throw InvalidArgument("config: features.provider must be store, lexical or http");
  }
  if (backend.max_in_flight < 1) throw InvalidArgument("config: backend.max_in_flight must be >= 1");
  if (workers < 0) throw InvalidArgument("config: workers must be >= 0");
  validate_agent_set(agent_set);
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  try {
    check_keys(j, "config",
               {"alpha", "window_k", "delta", "w_high", "w_base", "item_set", "business_items", "governance_items",
                "similarity_vector", "min_body_chars", "min_support", "indicator_schema", "excerpt_chars",
                "max_gra_adjustment", "max_fra_override", "fra_policy", "caa", "backend", "features", "dims", "split",
                "ablation", "workers"});
    read(j, "alpha", c.alpha);
    read(j, "window_k", c.window_k);
    read(j, "delta", c.fusion.delta);
    read(j, "w_high", c.fusion.w_high);
    read(j, "w_base", c.fusion.w_base);
    read(j, "item_set", c.item_set);
    for (auto& id : c.item_set) id = canonical_item_id(id);
    read(j, "business_items", c.agents.business_items);
    read(j, "governance_items", c.agents.governance_items);
    if (j.contains("similarity_vector")) {
      c.agents.similarity_vector = parse_vector_choice(j["similarity_vector"].get<std::string>());
    }
    read(j, "min_body_chars", c.min_body_chars);
    read(j, "min_support", c.min_support);
    read(j, "indicator_schema", c.indicator_schema);
    read(j, "excerpt_chars", c.agents.excerpt_chars);
    read(j, "max_gra_adjustment", c.agents.max_gra_adjustment);
    read(j, "max_fra_override", c.agents.max_fra_override);
    read(j, "workers", c.workers);

    if (j.contains("fra_policy")) {
      const json& p = j["fra_policy"];
      check_keys(p, "fra_policy", {"dev_minor", "dev_major", "yoy_major", "max_notches", "higher_is_better"});
      read(p, "dev_minor", c.fra_policy.dev_minor);
      read(p, "dev_major", c.fra_policy.dev_major);
      read(p, "yoy_major", c.fra_policy.yoy_major);
      read(p, "max_notches", c.fra_policy.max_notches);
      if (p.contains("higher_is_better")) {
        for (const auto& [k, v] : p["higher_is_better"].items()) c.fra_policy.higher_is_better[k] = v.get<bool>();
      }
    }
    if (j.contains("caa")) {
      const json& p = j["caa"];
      check_keys(p, "caa", {"mode", "weights"});
      if (p.contains("mode")) c.caa_mode = parse_caa_mode(p["mode"].get<std::string>());
      if (p.contains("weights")) {
        const json& w = p["weights"];
        check_keys(w, "caa.weights", {"cra", "gra", "bra", "fra"});
        read(w, "cra", c.caa_weights.cra);
        read(w, "gra", c.caa_weights.gra);
        read(w, "bra", c.caa_weights.bra);
        read(w, "fra", c.caa_weights.fra);
      }
    }
    if (j.contains("backend")) {
      const json& b = j["backend"];
      check_keys(b, "backend",
                 {"type", "url", "model", "temperature", "seed", "max_tokens", "retries", "timeout_ms", "max_attempts",
                  "max_in_flight", "rules"});
      read(b, "type", c.backend.type);
      read(b, "url", c.backend.url);
      read(b, "model", c.backend.model);
      read(b, "temperature", c.backend.temperature);
      read(b, "seed", c.backend.seed);
      read(b, "max_tokens", c.backend.max_tokens);
      read(b, "retries", c.agents.retries);
      read(b, "timeout_ms", c.backend.timeout_ms);
      read(b, "max_attempts", c.backend.max_attempts);
      read(b, "max_in_flight", c.backend.max_in_flight);
      read(b, "rules", c.backend.rules);
    }
    if (j.contains("features")) {
      const json& f = j["features"];
      check_keys(f, "features", {"provider", "url", "store"});
      read(f, "provider", c.features.provider);
      read(f, "url", c.features.url);
      read(f, "store", c.features.store);
    }
    if (j.contains("dims")) {
      const json& d = j["dims"];
      check_keys(d, "dims", {"finance", "general"});
      read(d, "finance", c.dims.finance);
      read(d, "general", c.dims.general);
    }
    if (j.contains("split")) {
      check_keys(j["split"], "split", {"cutoff_year"});
      read(j["split"], "cutoff_year", c.cutoff_year);
    }
    if (j.contains("ablation")) {
      const json& a = j["ablation"];
      check_keys(a, "ablation", {"mode", "agent_set"});
      if (a.contains("mode")) c.mode = parse_history_mode(a["mode"].get<std::string>());
      if (a.contains("agent_set")) c.agent_set = parse_agent_set(a["agent_set"].get<std::string>());
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  c.agents.params.temperature = c.backend.temperature;
  c.agents.params.seed = c.backend.seed;
  c.agents.params.max_tokens = c.backend.max_tokens;
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read config '" + path.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return config_from_json(s.str());
}

std::string config_to_json(const PipelineConfig& c) {
  json hib = json::object();
  for (const auto& [k, v] : c.fra_policy.higher_is_better) hib[k] = v;
  json j = {
      {"alpha", c.alpha},
      {"window_k", c.window_k},
      {"delta", c.fusion.delta},
      {"w_high", c.fusion.w_high},
      {"w_base", c.fusion.w_base},
      {"item_set", c.item_set},
      {"business_items", c.agents.business_items},
      {"governance_items", c.agents.governance_items},
      {"similarity_vector", std::string(to_string(c.agents.similarity_vector))},
      {"min_body_chars", c.min_body_chars},
      {"min_support", c.min_support},
      {"indicator_schema", c.indicator_schema},
      {"excerpt_chars", c.agents.excerpt_chars},
      {"max_gra_adjustment", c.agents.max_gra_adjustment},
      {"max_fra_override", c.agents.max_fra_override},
      {"fra_policy",
       {{"dev_minor", c.fra_policy.dev_minor},
        {"dev_major", c.fra_policy.dev_major},
        {"yoy_major", c.fra_policy.yoy_major},
        {"max_notches", c.fra_policy.max_notches},
        {"higher_is_better", hib}}},
      {"caa",
       {{"mode", std::string(to_string(c.caa_mode))},
        {"weights",
         {{"cra", c.caa_weights.cra}, {"gra", c.caa_weights.gra}, {"bra", c.caa_weights.bra},
          {"fra", c.caa_weights.fra}}}}},
      {"backend",
       {{"type", c.backend.type},
        {"url", c.backend.url},
        {"model", c.backend.model},
        {"temperature", c.backend.temperature},
        {"seed", c.backend.seed},
        {"max_tokens", c.backend.max_tokens},
        {"retries", c.agents.retries},
        {"timeout_ms", c.backend.timeout_ms},
        {"max_attempts", c.backend.max_attempts},
        {"max_in_flight", c.backend.max_in_flight},
        {"rules", c.backend.rules}}},
      {"features", {{"provider", c.features.provider}, {"url", c.features.url}, {"store", c.features.store}}},
      {"dims", {{"finance", c.dims.finance}, {"general", c.dims.general}}},
      {"split", {{"cutoff_year", c.cutoff_year}}},
      {"ablation", {{"mode", std::string(to_string(c.mode))}, {"agent_set", agent_set_label(c.agent_set)}}},
      {"workers", c.workers},
  };
  return j.dump(2);
}

std::string config_fingerprint(const PipelineConfig& cfg) {
  // worker count does not change results
  PipelineConfig c = cfg;
  c.workers = 0;
  return sha256_hex(config_to_json(c));
}

}  // namespace creditxai
