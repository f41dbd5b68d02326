#include "creditxai/backends.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <json.hpp>
#include <thread>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"
#include "creditxai/ratings.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::string fence(const std::string& body) { return "```json\n" + body + "\n```"; }

std::optional<std::string> field_value(const std::string& text, const std::string& field) {
  const std::string needle = field + ":";
  std::size_t pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    if (pos == 0 || text[pos - 1] == '\n') {
      std::size_t start = pos + needle.size();
      const std::size_t eol = text.find('\n', start);
      std::string value = text.substr(start, eol == std::string::npos ? std::string::npos : eol - start);
      const auto b = value.find_first_not_of(" \t");
      const auto e = value.find_last_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      return value.substr(b, e - b + 1);
    }
    pos += needle.size();
  }
  return std::nullopt;
}

}  // namespace

// --- MockBackend -----------------------------------------------------------

MockBackend::MockBackend(std::vector<MockRule> rules, std::uint64_t seed) : rules_(std::move(rules)), seed_(seed) {}

std::vector<MockRule> MockBackend::parse_rules(const std::string& json_text) {
  std::vector<MockRule> rules;
  try {
    const json j = json::parse(json_text);
    for (const auto& r : j.at("rules")) {
      MockRule rule;
      rule.name = r.value("name", "");
      if (r.contains("agent")) rule.agent = r.at("agent").get<std::string>();
      rule.all_of = r.value("all_of", std::vector<std::string>{});
      rule.none_of = r.value("none_of", std::vector<std::string>{});
      rule.digest_prefix = r.value("digest_prefix", "");
      if (r.contains("verdict")) {
        const auto& v = r.at("verdict");
        rule.verdict_json = v.is_string() ? v.get<std::string>() : v.dump();
      }
      if (r.contains("reply")) rule.raw_reply = r.at("reply").get<std::string>();
      rule.echo_grade_field = r.value("echo_grade_field", "");
      if (r.contains("nudge")) {
        const auto& n = r.at("nudge");
        rule.nudge_from = n.at("from").get<std::string>();
        rule.nudge_toward = n.at("toward").get<std::string>();
        rule.nudge_max = n.value("max", 1);
        if (rule.nudge_max < 0) throw InvalidArgument("mock rule '" + rule.name + "': nudge max < 0");
      }
      rule.rationale = r.value("rationale", "");
      if (!rule.verdict_json && !rule.raw_reply && rule.echo_grade_field.empty() && rule.nudge_from.empty()) {
        throw InvalidArgument("mock rule '" + rule.name + "' has no verdict, reply, echo_grade_field or nudge");
      }
      rules.push_back(std::move(rule));
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("mock rule table: ") + e.what());
  }
  return rules;
}

std::string MockBackend::prompt_digest(const std::string& system_text, const std::string& user_text) {
  return sha256_hex(system_text + "\n" + user_text);
}

std::optional<std::string> MockBackend::apply(const MockRule& rule, const std::string& user_text) const {
  if (rule.raw_reply) return *rule.raw_reply;
  if (rule.verdict_json) return fence(*rule.verdict_json);
  if (!rule.nudge_from.empty()) {
    const auto from = field_value(user_text, rule.nudge_from);
    const auto toward = field_value(user_text, rule.nudge_toward);
    if (!from || !toward) return std::nullopt;
    const auto g_from = try_parse_grade(*from);
    const auto g_toward = try_parse_grade(*toward);
    if (!g_from || !g_toward) return std::nullopt;
    // positive adjustment = upgrade = lower index
    const int adj = std::clamp(grade_index(*g_from) - grade_index(*g_toward), -rule.nudge_max, rule.nudge_max);
    const RatingGrade g = apply_notches(*g_from, adj);
    json v = {{"grade", std::string(to_string(g))},
              {"score", grade_to_score(g).value()},
              {"rationale", rule.rationale.empty() ? "mock: " + rule.nudge_from + " nudged towards " + rule.nudge_toward
                                                   : rule.rationale},
              {"adjustment", adj},
              {"confidence", 0.8}};
    return fence(v.dump());
  }
  const auto value = field_value(user_text, rule.echo_grade_field);
  if (!value) return std::nullopt;
  const auto grade = try_parse_grade(*value);
  if (!grade) return std::nullopt;
  json v = {{"grade", std::string(to_string(*grade))},
            {"score", grade_to_score(*grade).value()},
            {"rationale", rule.rationale.empty() ? "mock: grade taken from " + rule.echo_grade_field : rule.rationale},
            {"confidence", 0.8}};
  return fence(v.dump());
}

std::string MockBackend::fallback(const std::string& digest) const {
  const std::string h = sha256_hex(std::to_string(seed_) + ":" + digest);
  const int idx = std::stoi(h.substr(0, 2), nullptr, 16) % kGradeCount;
  const RatingGrade g = grade_from_index(idx);
  json v = {{"grade", std::string(to_string(g))},
            {"score", grade_to_score(g).value()},
            {"rationale", "mock fallback verdict " + h.substr(0, 12)},
            {"confidence", 0.5}};
  return fence(v.dump());
}

std::string MockBackend::complete(const std::string& system_text, const std::string& user_text, const ChatParams&) {
  const std::string digest = prompt_digest(system_text, user_text);
  for (const MockRule& rule : rules_) {
    if (rule.agent && user_text.find("AGENT: " + *rule.agent + "\n") == std::string::npos) continue;
    if (!rule.digest_prefix.empty() && digest.rfind(rule.digest_prefix, 0) != 0) continue;
    const bool all = std::all_of(rule.all_of.begin(), rule.all_of.end(),
                                 [&](const std::string& s) { return user_text.find(s) != std::string::npos; });
    const bool none = std::none_of(rule.none_of.begin(), rule.none_of.end(),
                                   [&](const std::string& s) { return user_text.find(s) != std::string::npos; });
    if (!all || !none) continue;
    if (auto reply = apply(rule, user_text)) return *reply;
  }
  return fallback(digest);
}

std::unique_ptr<MockBackend> mock_backend(const std::string& rule_table_json, std::uint64_t seed) {
  return std::make_unique<MockBackend>(MockBackend::parse_rules(rule_table_json), seed);
}

// --- HttpChatBackend -------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpChatOptions options) : options_(std::move(options)) {
  if (options_.api_key.empty()) {
    if (const char* key = std::getenv("CREDITXAI_API_KEY")) options_.api_key = key;
  }
  const auto scheme = options_.url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("chat url needs a scheme: '" + options_.url + "'");
  const auto slash = options_.url.find('/', scheme + 3);
  base_ = options_.url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : options_.url.substr(slash);
  if (options_.max_attempts < 1) throw InvalidArgument("max_attempts must be at least 1");
}

std::optional<std::string> HttpChatBackend::extract_text(const std::string& response_body) {
  json j;
  try {
    j = json::parse(response_body);
  } catch (const json::exception&) {
    return std::nullopt;
  }
  auto str = [](const json& v) -> std::optional<std::string> {
    if (v.is_string()) return v.get<std::string>();
    return std::nullopt;
  };
  try {
    if (j.contains("choices") && !j["choices"].empty()) {
      const auto& c = j["choices"][0];
      if (c.contains("message") && c["message"].contains("content")) return str(c["message"]["content"]);
      if (c.contains("text")) return str(c["text"]);
    }
    if (j.contains("content") && j["content"].is_array() && !j["content"].empty()) {
      for (const auto& part : j["content"]) {
        if (part.contains("text")) return str(part["text"]);
      }
    }
    if (j.contains("candidates") && !j["candidates"].empty()) {
      const auto& parts = j["candidates"][0]["content"]["parts"];
      if (!parts.empty() && parts[0].contains("text")) return str(parts[0]["text"]);
    }
    if (j.contains("text")) return str(j["text"]);
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

std::string HttpChatBackend::complete(const std::string& system_text, const std::string& user_text,
                                      const ChatParams& params) {
  const json body = {{"model", options_.model},
                     {"messages", json::array({{{"role", "system"}, {"content", system_text}},
                                               {{"role", "user"}, {"content", user_text}}})},
                     {"temperature", params.temperature},
                     {"max_tokens", params.max_tokens},
                     {"seed", params.seed}};
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  std::string last_error;
  int backoff = options_.backoff_ms;
  for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
      backoff *= 2;
    }
    httplib::Client cli(base_);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    auto res = cli.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw BackendUnavailable("chat endpoint " + options_.url + " returned HTTP " + std::to_string(res->status));
    }
    if (auto text = extract_text(res->body)) return *text;
    throw BackendUnavailable("chat endpoint " + options_.url + " returned no text content");
  }
  throw BackendUnavailable("chat endpoint " + options_.url + " failed after " +
                           std::to_string(options_.max_attempts) + " attempts: " + last_error);
}

// --- Gateway ---------------------------------------------------------------

Gateway::Gateway(ChatBackend& inner, std::ptrdiff_t max_in_flight)
    : inner_(inner), slots_(std::clamp<std::ptrdiff_t>(max_in_flight, 1, 256)) {}

std::string Gateway::complete(const std::string& system_text, const std::string& user_text, const ChatParams& params) {
  slots_.acquire();
  struct Release {
    std::counting_semaphore<256>& s;
    ~Release() { s.release(); }
  } release{slots_};
  return inner_.complete(system_text, user_text, params);
}

}  // namespace creditxai
