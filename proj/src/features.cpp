#include "creditxai/features.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <unordered_map>
#include <unordered_set>

#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = 1469598103934665603ULL ^ seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

void normalize(std::vector<float>& v) {
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) return;
  for (float& x : v) x = static_cast<float>(x / norm);
}

std::vector<float> hashed_embedding(std::string_view text, std::size_t dim, std::uint64_t salt,
                                    bool bigrams) {
  std::vector<float> v(dim, 0.0f);
  if (dim == 0) return v;
  const auto tokens = tokenize(text);
  std::unordered_map<std::string, int> tf;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    ++tf[tokens[i]];
    if (bigrams && i + 1 < tokens.size()) ++tf[tokens[i] + "_" + tokens[i + 1]];
  }
  for (const auto& [tok, count] : tf) {
    const std::uint64_t h = fnv1a(tok, salt);
    const float sign = (h >> 63) ? -1.0f : 1.0f;
    v[h % dim] += sign * static_cast<float>(1.0 + std::log(static_cast<double>(count)));
  }
  normalize(v);
  return v;
}

const std::unordered_set<std::string>& positive_words() {
  static const std::unordered_set<std::string> words = {
      "strong",    "growth",     "improved",  "improvement", "increase",  "increased", "gain",
      "gains",     "profitable", "robust",    "stable",      "favorable", "record",    "exceeded",
      "strength",  "resilient",  "expanded",  "upgrade",     "success",   "successful", "efficient",
      "efficiency", "opportunity", "opportunities", "benefit", "benefited", "surplus", "solid"};
  return words;
}

const std::unordered_set<std::string>& negative_words() {
  static const std::unordered_set<std::string> words = {
      "loss",       "losses",     "decline",    "declined",  "weak",       "weakness",  "impairment",
      "default",    "litigation", "adverse",    "downgrade", "deficit",    "restructuring",
      "volatility", "breach",     "covenant",   "shortfall", "deteriorated", "deterioration",
      "uncertainty", "uncertain", "material",   "weaknesses", "penalty",   "penalties", "decrease",
      "decreased",  "risk",       "risks",      "distress",  "going",      "concern"};
  return words;
}

double lexicon_sentiment(std::string_view text) {
  int pos = 0;
  int neg = 0;
  for (const auto& tok : tokenize(text)) {
    if (positive_words().count(tok)) ++pos;
    if (negative_words().count(tok)) ++neg;
  }
  if (pos + neg == 0) return 0.0;
  return static_cast<double>(pos - neg) / static_cast<double>(pos + neg);
}

std::string format_float(float x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(x));
  return buf;
}

void append_vector(std::string& out, const std::vector<float>& v) {
  out.push_back('[');
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out.push_back(',');
    out += format_float(v[i]);
  }
  out.push_back(']');
}

std::vector<float> read_vector(const json& j) {
  std::vector<float> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(static_cast<float>(x.get<double>()));
  return v;
}

}  // namespace

void ItemFeatures::validate(const FeatureDims& expected) const {
  if (finance_vec.size() != expected.finance || general_vec.size() != expected.general) {
    throw DimensionMismatch("feature widths (" + std::to_string(finance_vec.size()) + ", " +
                            std::to_string(general_vec.size()) + ") != configured (" +
                            std::to_string(expected.finance) + ", " + std::to_string(expected.general) + ")");
  }
  auto finite = [](const std::vector<float>& v) {
    return std::all_of(v.begin(), v.end(), [](float x) { return std::isfinite(x); });
  };
  if (!finite(finance_vec) || !finite(general_vec) || !std::isfinite(sentiment)) {
    throw InvalidArgument("non-finite feature component");
  }
  if (sentiment < -1.0f || sentiment > 1.0f) {
    throw InvalidArgument("sentiment outside [-1,1]: " + std::to_string(sentiment));
  }
}

std::string content_digest(std::string_view body) { return sha256_hex(body); }

// --- FixtureProvider -------------------------------------------------------

FixtureProvider::FixtureProvider(const std::vector<FeatureRecord>& records) {
  for (const auto& r : records) by_digest_.emplace(r.content_digest, r.features);
}

const ItemFeatures& FixtureProvider::lookup(const std::string& text) const {
  auto it = by_digest_.find(content_digest(text));
  if (it == by_digest_.end()) {
    throw ProviderUnavailable("no recorded features for text digest " + content_digest(text).substr(0, 12));
  }
  return it->second;
}

std::vector<std::vector<float>> FixtureProvider::embed_finance(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  for (const auto& t : texts) out.push_back(lookup(t).finance_vec);
  return out;
}

std::vector<std::vector<float>> FixtureProvider::embed_general(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  for (const auto& t : texts) out.push_back(lookup(t).general_vec);
  return out;
}

std::vector<float> FixtureProvider::sentiment(const std::vector<std::string>& texts) {
  std::vector<float> out;
  for (const auto& t : texts) out.push_back(lookup(t).sentiment);
  return out;
}

// --- LexicalProvider -------------------------------------------------------

LexicalProvider::LexicalProvider(FeatureDims dims, std::size_t window_chars)
    : dims_(dims), window_chars_(window_chars) {
  if (window_chars_ == 0) throw InvalidArgument("window_chars must be positive");
}

std::string LexicalProvider::id() const {
  return "lexical-hash-v1:" + std::to_string(dims_.finance) + "x" + std::to_string(dims_.general);
}

std::vector<std::vector<float>> LexicalProvider::embed_finance(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  for (const auto& t : texts) out.push_back(hashed_embedding(t, dims_.finance, 0xF1AA, true));
  return out;
}

std::vector<std::vector<float>> LexicalProvider::embed_general(const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  for (const auto& t : texts) out.push_back(hashed_embedding(t, dims_.general, 0x6E4E, false));
  return out;
}

std::vector<float> LexicalProvider::sentiment(const std::vector<std::string>& texts) {
  std::vector<float> out;
  for (const auto& t : texts) out.push_back(static_cast<float>(lexicon_sentiment(t)));
  return out;
}

// --- HttpProvider ----------------------------------------------------------

HttpProvider::HttpProvider(HttpProviderOptions options)
    : options_(std::move(options)), in_flight_(std::clamp<std::ptrdiff_t>(options_.max_in_flight, 1, 64)) {
  if (options_.base_url.empty()) throw InvalidArgument("provider url is empty");
  if (options_.batch_max == 0) throw InvalidArgument("batch_max must be positive");
}

std::string HttpProvider::post(const std::string& path, const std::vector<std::string>& texts) {
  in_flight_.acquire();
  struct Release {
    std::counting_semaphore<64>& s;
    ~Release() { s.release(); }
  } release{in_flight_};

  httplib::Client cli(options_.base_url);
  const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  const json body = {{"texts", texts}};
  auto res = cli.Post(path, body.dump(), "application/json");
  if (!res) {
    throw ProviderUnavailable("POST " + options_.base_url + path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw ProviderUnavailable("POST " + options_.base_url + path + " returned HTTP " + std::to_string(res->status));
  }
  return res->body;
}

std::vector<std::vector<float>> HttpProvider::embed(const std::string& path, const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += options_.batch_max) {
    const std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                         texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + options_.batch_max)));
    try {
      const json resp = json::parse(post(path, batch));
      const auto& vectors = resp.at("vectors");
      if (vectors.size() != batch.size()) {
        throw ProviderUnavailable(path + " returned " + std::to_string(vectors.size()) + " vectors for " +
                                  std::to_string(batch.size()) + " texts");
      }
      for (const auto& v : vectors) out.push_back(read_vector(v));
    } catch (const json::exception& e) {
      throw ProviderUnavailable(path + " returned malformed JSON: " + e.what());
    }
  }
  return out;
}

std::vector<std::vector<float>> HttpProvider::embed_finance(const std::vector<std::string>& texts) {
  return embed("/embed/finance", texts);
}

std::vector<std::vector<float>> HttpProvider::embed_general(const std::vector<std::string>& texts) {
  return embed("/embed/general", texts);
}

std::vector<float> HttpProvider::sentiment(const std::vector<std::string>& texts) {
  std::vector<float> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += options_.batch_max) {
    const std::vector<std::string> batch(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                         texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + options_.batch_max)));
    try {
      const json resp = json::parse(post("/sentiment", batch));
      const auto& scores = resp.at("scores");
      if (scores.size() != batch.size()) {
        throw ProviderUnavailable("/sentiment returned " + std::to_string(scores.size()) + " scores for " +
                                  std::to_string(batch.size()) + " texts");
      }
      for (const auto& s : scores) out.push_back(static_cast<float>(s.get<double>()));
    } catch (const json::exception& e) {
      throw ProviderUnavailable(std::string("/sentiment returned malformed JSON: ") + e.what());
    }
  }
  return out;
}

ProviderHealth HttpProvider::health() {
  httplib::Client cli(options_.base_url);
  cli.set_connection_timeout(std::chrono::milliseconds(options_.timeout_ms));
  auto res = cli.Get("/health");
  if (!res || res->status != 200) throw ProviderUnavailable("GET " + options_.base_url + "/health failed");
  try {
    const json j = json::parse(res->body);
    ProviderHealth h;
    h.status = j.at("status").get<std::string>();
    h.dims.finance = j.at("dims").at("finance").get<std::size_t>();
    h.dims.general = j.at("dims").at("general").get<std::size_t>();
    return h;
  } catch (const json::exception& e) {
    throw ProviderUnavailable(std::string("malformed /health response: ") + e.what());
  }
}

// --- computation -----------------------------------------------------------

std::vector<std::string> chunk_text(const std::string& text, std::size_t max_chars) {
  if (max_chars == 0) throw InvalidArgument("chunk size must be positive");
  if (text.size() <= max_chars) return {text};
  std::vector<std::string> chunks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = std::min(text.size(), pos + max_chars);
    if (end < text.size()) {
      const std::size_t ws = text.find_last_of(" \t\n", end);
      if (ws != std::string::npos && ws > pos + max_chars / 2) end = ws + 1;
    }
    chunks.push_back(text.substr(pos, end - pos));
    pos = end;
  }
  return chunks;
}

ItemFeatures compute_item_features(const FilingItem& item, FeatureProvider& provider, const FeatureDims& dims) {
  if (item.stub || item.body.empty()) {
    throw PreconditionViolation("item " + item.item_id + " is a stub (" + std::to_string(item.body.size()) +
                                " chars); features need a full body");
  }
  const std::vector<std::string> chunks = chunk_text(item.body, provider.max_chars());
  auto finance = provider.embed_finance(chunks);
  auto general = provider.embed_general(chunks);
  auto sentiment = provider.sentiment(chunks);
  if (finance.size() != chunks.size() || general.size() != chunks.size() || sentiment.size() != chunks.size()) {
    throw ProviderUnavailable("provider returned a batch of the wrong length");
  }
  for (const auto& v : finance) {
    if (v.size() != dims.finance) throw DimensionMismatch("finance vector width " + std::to_string(v.size()));
  }
  for (const auto& v : general) {
    if (v.size() != dims.general) throw DimensionMismatch("general vector width " + std::to_string(v.size()));
  }

  ItemFeatures out;
  if (chunks.size() == 1) {
    out.finance_vec = std::move(finance.front());
    out.general_vec = std::move(general.front());
    out.sentiment = sentiment.front();
  } else {
    auto pool = [](const std::vector<std::vector<float>>& vs, std::size_t dim) {
      std::vector<double> acc(dim, 0.0);
      for (const auto& v : vs) {
        for (std::size_t i = 0; i < dim; ++i) acc[i] += v[i];
      }
      std::vector<float> mean(dim);
      for (std::size_t i = 0; i < dim; ++i) mean[i] = static_cast<float>(acc[i] / static_cast<double>(vs.size()));
      normalize(mean);
      return mean;
    };
    out.finance_vec = pool(finance, dims.finance);
    out.general_vec = pool(general, dims.general);
    double s = 0.0;
    for (float x : sentiment) s += x;
    out.sentiment = static_cast<float>(std::clamp(s / static_cast<double>(sentiment.size()), -1.0, 1.0));
  }
  out.validate(dims);
  return out;
}

// --- FeatureStore ----------------------------------------------------------

FeatureStore::FeatureStore(FeatureStore&& other) noexcept {
  std::unique_lock lock(other.mu_);
  records_ = std::move(other.records_);
  dims_ = other.dims_;
}

std::optional<FeatureRecord> FeatureStore::find(const CompanyYearKey& key, const std::string& item_id) const {
  std::shared_lock lock(mu_);
  auto it = records_.find({key.company_id, key.fiscal_year, item_id});
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

void FeatureStore::put(FeatureRecord record) {
  std::unique_lock lock(mu_);
  const FeatureDims d = record.features.dims();
  if (dims_ && !(*dims_ == d)) {
    throw DimensionMismatch("record " + record.key.label() + "/" + record.item_id + " has widths (" +
                            std::to_string(d.finance) + ", " + std::to_string(d.general) +
                            ") but the store holds (" + std::to_string(dims_->finance) + ", " +
                            std::to_string(dims_->general) + ")");
  }
  dims_ = d;
  Key k{record.key.company_id, record.key.fiscal_year, record.item_id};
  records_.insert_or_assign(std::move(k), std::move(record));
}

std::vector<FeatureRecord> FeatureStore::records() const {
  std::shared_lock lock(mu_);
  std::vector<FeatureRecord> out;
  out.reserve(records_.size());
  for (const auto& [k, r] : records_) out.push_back(r);
  return out;
}

std::size_t FeatureStore::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::optional<FeatureDims> FeatureStore::dims() const {
  std::shared_lock lock(mu_);
  return dims_;
}

ItemFeatures get_or_compute(FeatureStore& store, const CompanyYearKey& key, const FilingItem& item,
                            FeatureProvider& provider, const FeatureDims& dims) {
  const std::string digest = content_digest(item.body);
  if (auto hit = store.find(key, item.item_id); hit && hit->content_digest == digest) {
    return hit->features;
  }
  FeatureRecord rec;
  rec.key = key;
  rec.item_id = item.item_id;
  rec.features = compute_item_features(item, provider, dims);
  rec.provider_id = provider.id();
  rec.content_digest = digest;
  ItemFeatures out = rec.features;
  store.put(std::move(rec));
  return out;
}

std::string record_to_json_line(const FeatureRecord& r) {
  std::string out = "{\"company_id\":" + json(r.key.company_id).dump() +
                    ",\"fiscal_year\":" + std::to_string(r.key.fiscal_year) +
                    ",\"sector\":" + json(r.key.sector).dump() + ",\"item_id\":" + json(r.item_id).dump() +
                    ",\"provider_id\":" + json(r.provider_id).dump() +
                    ",\"content_digest\":" + json(r.content_digest).dump() +
                    ",\"sentiment\":" + format_float(r.features.sentiment) + ",\"finance_vec\":";
  append_vector(out, r.features.finance_vec);
  out += ",\"general_vec\":";
  append_vector(out, r.features.general_vec);
  out += "}";
  return out;
}

FeatureRecord record_from_json_line(const std::string& line, std::size_t line_no) {
  try {
    const json j = json::parse(line);
    FeatureRecord r;
    r.key.company_id = j.at("company_id").get<std::string>();
    r.key.fiscal_year = j.at("fiscal_year").get<int>();
    r.key.sector = j.at("sector").get<std::string>();
    r.item_id = j.at("item_id").get<std::string>();
    r.provider_id = j.at("provider_id").get<std::string>();
    r.content_digest = j.at("content_digest").get<std::string>();
    r.features.sentiment = static_cast<float>(j.at("sentiment").get<double>());
    r.features.finance_vec = read_vector(j.at("finance_vec"));
    r.features.general_vec = read_vector(j.at("general_vec"));
    r.features.validate(r.features.dims());
    return r;
  } catch (const json::exception& e) {
    throw CorruptRecord(line_no, e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptRecord(line_no, e.what());
  }
}

FeatureStore load_store(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open feature store '" + path.string() + "'");
  FeatureStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    FeatureRecord r = record_from_json_line(line, line_no);
    try {
      store.put(std::move(r));
    } catch (const DimensionMismatch& e) {
      throw CorruptRecord(line_no, e.what());
    }
  }
  return store;
}

void save_store(const FeatureStore& store, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoFailure("cannot write feature store '" + tmp.string() + "'");
    for (const auto& r : store.records()) out << record_to_json_line(r) << '\n';
    if (!out) throw IoFailure("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot replace '" + path.string() + "': " + ec.message());
}

}  // namespace creditxai
