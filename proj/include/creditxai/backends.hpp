#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace creditxai {

struct ChatParams {
  double temperature = 0.0;
  int max_tokens = 1024;
  std::uint64_t seed = 0;
};

// A chat completion endpoint: (system, user, params) -> reply text.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string complete(const std::string& system_text, const std::string& user_text,
                               const ChatParams& params) = 0;
};

// A mock rule fires when every condition holds. It then replies with a
// canned verdict, a raw reply, a verdict echoing the grade found on a
// "<FIELD>: <grade>" line of the user prompt, or a nudge: an adjustment of at
// most `max` notches moving the `from` grade towards the `toward` grade.
// Echo and nudge rules do not match when their fields are absent.
struct MockRule {
  std::string name;
  std::optional<std::string> agent;  // matches the "AGENT: <id>" prompt line
  std::vector<std::string> all_of;
  std::vector<std::string> none_of;
  std::string digest_prefix;  // prefix of sha256(system + "\n" + user)

  std::optional<std::string> verdict_json;
  std::optional<std::string> raw_reply;
  std::string echo_grade_field;
  std::string nudge_from;
  std::string nudge_toward;
  int nudge_max = 1;
  std::string rationale;
};

// Deterministic chat backend driven by a rule table. Unmatched prompts get a
// schema-valid verdict whose grade is derived from the prompt digest and seed.
class MockBackend final : public ChatBackend {
 public:
  MockBackend(std::vector<MockRule> rules, std::uint64_t seed);

  // {"rules": [{"name", "agent", "all_of", "none_of", "digest_prefix",
  //             "verdict" | "reply" | "echo_grade_field" |
  //             "nudge": {"from", "toward", "max"}, "rationale"}]}
  static std::vector<MockRule> parse_rules(const std::string& json_text);

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const ChatParams& params) override;

  // sha256(system + "\n" + user); what digest_prefix rules match against.
  static std::string prompt_digest(const std::string& system_text, const std::string& user_text);

 private:
  std::optional<std::string> apply(const MockRule& rule, const std::string& user_text) const;
  std::string fallback(const std::string& digest) const;

  std::vector<MockRule> rules_;
  std::uint64_t seed_;
};

std::unique_ptr<MockBackend> mock_backend(const std::string& rule_table_json, std::uint64_t seed);

struct HttpChatOptions {
  std::string url;  // full endpoint, e.g. http://localhost:8080/v1/chat/completions
  std::string model;
  std::string api_key;  // defaults to $CREDITXAI_API_KEY when empty
  int timeout_ms = 60000;
  int max_attempts = 3;
  int backoff_ms = 250;  // doubled after every failed attempt
};

// OpenAI-style chat endpoint. Transport errors, HTTP 429 and 5xx are retried
// with exponential backoff; exhaustion raises BackendUnavailable.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpChatOptions options);

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const ChatParams& params) override;

  // First text content of a chat response body: choices[0].message.content,
  // content[0].text, candidates[0].content.parts[0].text or "text".
  static std::optional<std::string> extract_text(const std::string& response_body);

 private:
  HttpChatOptions options_;
  std::string base_;
  std::string path_;
};

// Bounds the number of in-flight requests to the wrapped backend.
class Gateway final : public ChatBackend {
 public:
  Gateway(ChatBackend& inner, std::ptrdiff_t max_in_flight);

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const ChatParams& params) override;

 private:
  ChatBackend& inner_;
  std::counting_semaphore<256> slots_;
};

// Counts calls to the wrapped backend.
class CountingBackend final : public ChatBackend {
 public:
  explicit CountingBackend(ChatBackend& inner) : inner_(inner) {}

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const ChatParams& params) override {
    ++calls_;
    return inner_.complete(system_text, user_text, params);
  }

  int calls() const { return calls_.load(); }

 private:
  ChatBackend& inner_;
  std::atomic<int> calls_{0};
};

}  // namespace creditxai
