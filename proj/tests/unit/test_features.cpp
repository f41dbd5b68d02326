#include <atomic>
#include <cmath>

#include <json.hpp>

#include "creditxai/errors.hpp"
#include "creditxai/features.hpp"
#include "helpers.hpp"

using namespace creditxai;
using nlohmann::json;

namespace {

const FeatureDims kSmall{4, 3};

// Deterministic toy provider: vectors derived from text length and first char.
class CountingProvider : public FeatureProvider {
 public:
  explicit CountingProvider(std::size_t window = 100000) : window_(window) {}

  std::string id() const override { return "counting"; }
  std::size_t max_chars() const override { return window_; }

  std::vector<std::vector<float>> embed_finance(const std::vector<std::string>& texts) override {
    ++finance_calls;
    return make(texts, kSmall.finance);
  }
  std::vector<std::vector<float>> embed_general(const std::vector<std::string>& texts) override {
    ++general_calls;
    return make(texts, kSmall.general);
  }
  std::vector<float> sentiment(const std::vector<std::string>& texts) override {
    ++sentiment_calls;
    std::vector<float> out;
    for (const auto& t : texts) out.push_back(static_cast<float>((t.size() % 7) / 10.0));
    return out;
  }

  int total() const { return finance_calls + general_calls + sentiment_calls; }

  std::atomic<int> finance_calls{0}, general_calls{0}, sentiment_calls{0};

 private:
  static std::vector<std::vector<float>> make(const std::vector<std::string>& texts, std::size_t dim) {
    std::vector<std::vector<float>> out;
    for (const auto& t : texts) {
      std::vector<float> v(dim);
      for (std::size_t i = 0; i < dim; ++i) v[i] = static_cast<float>(1 + (t.size() + i * (t.empty() ? 1 : t[0])) % 5);
      out.push_back(v);
    }
    return out;
  }
  std::size_t window_;
};

FilingItem item(const std::string& id, const std::string& body) {
  FilingItem it;
  it.item_id = id;
  it.title = "t";
  it.body = body;
  it.span = {0, body.size()};
  return it;
}

std::string long_body(char c, std::size_t n) {
  std::string s;
  while (s.size() < n) s += std::string(1, c) + "word ";
  return s;
}

FeatureRecord sample_record(const std::string& company, int year, const std::string& id, float base) {
  FeatureRecord r;
  r.key = {company, year, "tech"};
  r.item_id = id;
  r.features.finance_vec = {base, 0.1f, -0.333333343f, 1e-7f};
  r.features.general_vec = {0.5f, base * 3.14159274f, -2.0f};
  r.features.sentiment = -0.25f;
  r.provider_id = "fixture";
  r.content_digest = content_digest(company + id);
  return r;
}

}  // namespace

TEST_CASE("stub items are rejected") {
  CountingProvider p;
  FilingItem stub = item("7", "0123456789");
  stub.stub = true;
  CHECK_THROWS_AS(compute_item_features(stub, p, kSmall), PreconditionViolation);
  CHECK(p.total() == 0);
}

TEST_CASE("identical bodies give identical features") {
  CountingProvider p;
  const auto a = compute_item_features(item("1", long_body('a', 300)), p, kSmall);
  const auto b = compute_item_features(item("1A", long_body('a', 300)), p, kSmall);
  CHECK(a == b);
}

TEST_CASE("wrong provider width is a dimension mismatch") {
  CountingProvider p;
  CHECK_THROWS_AS(compute_item_features(item("1", long_body('a', 300)), p, FeatureDims{5, 3}), DimensionMismatch);
}

TEST_CASE("fixture provider serves recorded features exactly") {
  const std::string body = long_body('q', 400);
  FeatureRecord r = sample_record("ACME", 2020, "1A", 0.75f);
  r.content_digest = content_digest(body);
  FixtureProvider fp({r});
  CHECK(compute_item_features(item("1A", body), fp, kSmall) == r.features);
  CHECK_THROWS_AS(compute_item_features(item("1A", body + "x"), fp, kSmall), ProviderUnavailable);
}

TEST_CASE("chunking keeps short text whole and pools long text to unit length") {
  const std::string body = long_body('m', 250);
  CHECK(chunk_text(body, 1000).size() == 1);
  CountingProvider whole;
  CountingProvider window_equal(body.size());
  CHECK(compute_item_features(item("1", body), whole, kSmall) ==
        compute_item_features(item("1", body), window_equal, kSmall));

  const auto pieces = chunk_text(body, 40);
  CHECK(pieces.size() > 1);
  for (const auto& piece : pieces) CHECK(piece.size() <= 40);
  CountingProvider small(40);
  const auto f = compute_item_features(item("1", body), small, kSmall);
  double norm = 0;
  for (float x : f.finance_vec) norm += double(x) * x;
  CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(small.finance_calls == 1);
}

TEST_CASE("get_or_compute cache semantics") {
  FeatureStore store(kSmall);
  CountingProvider p;
  const CompanyYearKey key{"ACME", 2020, "tech"};
  const FilingItem it = item("7", long_body('z', 300));

  const auto first = get_or_compute(store, key, it, p, kSmall);
  // cold store: one call per component batch
  CHECK(p.finance_calls == 1);
  CHECK(p.general_calls == 1);
  CHECK(p.sentiment_calls == 1);
  CHECK(first == compute_item_features(it, p, kSmall));

  const int before = p.total();
  CHECK(get_or_compute(store, key, it, p, kSmall) == first);
  CHECK(p.total() == before);

  const FilingItem edited = item("7", long_body('y', 320));
  get_or_compute(store, key, edited, p, kSmall);
  CHECK(p.total() == before + 3);
  const auto rec = store.find(key, "7");
  REQUIRE(rec.has_value());
  CHECK(rec->content_digest == content_digest(edited.body));
  CHECK(store.size() == 1);
}

TEST_CASE("store rejects records with other widths") {
  FeatureStore store(kSmall);
  FeatureRecord r = sample_record("A", 2020, "1", 0.1f);
  r.features.general_vec.push_back(0.0f);
  CHECK_THROWS_AS(store.put(r), DimensionMismatch);
}

TEST_CASE("store round-trip") {
  testing::TempDir dir("store");
  const auto path = dir.path() / "features.jsonl";

  FeatureStore empty;
  save_store(empty, path);
  CHECK(load_store(path).size() == 0);

  FeatureStore store(kSmall);
  store.put(sample_record("ACME", 2019, "1A", 0.123456789f));
  store.put(sample_record("ACME", 2020, "7", -0.987654321f));
  store.put(sample_record("BETA", 2020, "1", 3.0e-5f));
  save_store(store, path);
  const FeatureStore loaded = load_store(path);
  CHECK(loaded.records() == store.records());
}

TEST_CASE("truncated line raises CorruptRecord with its line number") {
  testing::TempDir dir("corrupt");
  const auto path = dir.path() / "features.jsonl";
  const std::string good1 = record_to_json_line(sample_record("A", 2020, "1", 0.1f));
  const std::string good2 = record_to_json_line(sample_record("A", 2020, "2", 0.2f));
  testing::write_file(path, good1 + "\n" + good2 + "\n" + good2.substr(0, good2.size() / 2) + "\n");
  try {
    load_store(path);
    FAIL("expected CorruptRecord");
  } catch (const CorruptRecord& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(load_store(dir.path() / "absent.jsonl"), IoFailure);
}

TEST_CASE("http provider speaks the sidecar contract") {
  testing::LocalServer srv;
  std::atomic<int> posts{0};
  auto vectors = [&](std::size_t dim) {
    return [&posts, dim](const httplib::Request& req, httplib::Response& res) {
      ++posts;
      const json body = json::parse(req.body);
      json out = json::array();
      for (const auto& t : body.at("texts")) {
        json v = json::array();
        for (std::size_t i = 0; i < dim; ++i) v.push_back(double(t.get<std::string>().size() + i));
        out.push_back(v);
      }
      res.set_content(json{{"vectors", out}}.dump(), "application/json");
    };
  };
  srv.server().Post("/embed/finance", vectors(kSmall.finance));
  srv.server().Post("/embed/general", vectors(kSmall.general));
  srv.server().Post("/sentiment", [&](const httplib::Request& req, httplib::Response& res) {
    ++posts;
    const json body = json::parse(req.body);
    json out = json::array();
    for (std::size_t i = 0; i < body.at("texts").size(); ++i) out.push_back(0.5);
    res.set_content(json{{"scores", out}}.dump(), "application/json");
  });
  srv.server().Get("/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok","dims":{"finance":4,"general":3}})", "application/json");
  });
  srv.server().Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  srv.start();

  HttpProvider hp({srv.url(), 32, 100000, 5000, 4});
  const auto h = hp.health();
  CHECK(h.status == "ok");
  CHECK(h.dims == kSmall);

  const auto v = hp.embed_finance({"ab", "abcd", "a"});
  REQUIRE(v.size() == 3);
  CHECK(v[0][0] == 2.0f);
  CHECK(v[1][0] == 4.0f);
  CHECK(v[2][3] == 4.0f);

  const auto f = compute_item_features(item("1", long_body('h', 300)), hp, kSmall);
  CHECK(f.sentiment == 0.5f);
  CHECK(f.general_vec.size() == 3);

  HttpProvider dead({"http://127.0.0.1:1", 32, 100000, 500, 1});
  CHECK_THROWS_AS(dead.embed_general({"x"}), ProviderUnavailable);
}

TEST_CASE("http provider splits large batches") {
  testing::LocalServer srv;
  std::atomic<int> calls{0};
  srv.server().Post("/sentiment", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    const json body = json::parse(req.body);
    json out = json::array();
    for (const auto& t : body.at("texts")) out.push_back(t.get<std::string>() == "neg" ? -1.0 : 1.0);
    res.set_content(json{{"scores", out}}.dump(), "application/json");
  });
  srv.start();
  HttpProvider hp({srv.url(), 2, 100000, 5000, 2});
  const auto s = hp.sentiment({"neg", "pos", "neg", "pos", "neg"});
  CHECK(s == std::vector<float>{-1, 1, -1, 1, -1});
  CHECK(calls == 3);
}
