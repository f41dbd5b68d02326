#pragma once

#include <doctest.h>
#include <httplib.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <mutex>
#include <vector>

#include "creditxai/backends.hpp"

namespace testing {

inline std::filesystem::path fixture_dir() { return CREDITXAI_FIXTURE_DIR; }
inline std::filesystem::path corpus_dir() { return fixture_dir() / "corpus"; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path_ = std::filesystem::temp_directory_path() / ("creditxai_" + tag + "_" + std::to_string(rng()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

// Compares against a frozen file. CREDITXAI_UPDATE_GOLDEN=1 rewrites it.
inline void check_golden(const std::filesystem::path& path, const std::string& actual) {
  if (const char* u = std::getenv("CREDITXAI_UPDATE_GOLDEN"); u && std::string(u) == "1") {
    std::filesystem::create_directories(path.parent_path());
    write_file(path, actual);
  }
  REQUIRE_MESSAGE(std::filesystem::exists(path), "missing golden file " << path.string());
  CHECK(read_file(path) == actual);
}

// Replies from a fixed script (the last reply repeats) and records prompts.
class ScriptedBackend : public creditxai::ChatBackend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string complete(const std::string& system_text, const std::string& user_text,
                       const creditxai::ChatParams&) override {
    std::lock_guard<std::mutex> lock(mu_);
    prompts.push_back(system_text + "\n" + user_text);
    const std::size_t i = std::min(prompts.size() - 1, replies_.size() - 1);
    return replies_[i];
  }

  std::vector<std::string> prompts;

 private:
  std::mutex mu_;
  std::vector<std::string> replies_;
};

inline std::string fenced(const std::string& json_text) { return "```json\n" + json_text + "\n```"; }

// httplib server on an ephemeral loopback port, served from a background thread.
class LocalServer {
 public:
  LocalServer() = default;
  ~LocalServer() { stop(); }

  httplib::Server& server() { return server_; }

  void start() {
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace testing
