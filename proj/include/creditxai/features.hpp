#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <shared_mutex>
#include <string>
#include <vector>

#include "creditxai/filing.hpp"
#include "creditxai/ratings.hpp"

namespace creditxai {

struct FeatureDims {
  std::size_t finance = 768;
  std::size_t general = 384;

  friend bool operator==(const FeatureDims&, const FeatureDims&) = default;
};

// Hybrid representation of one filing item: finance-domain embedding,
// general sentence embedding and a sentiment scalar in [-1, 1].
struct ItemFeatures {
  std::vector<float> finance_vec;
  std::vector<float> general_vec;
  float sentiment = 0.0f;

  FeatureDims dims() const { return {finance_vec.size(), general_vec.size()}; }

  // Throws DimensionMismatch on wrong widths and InvalidArgument on
  // non-finite components or out-of-range sentiment.
  void validate(const FeatureDims& expected) const;

  friend bool operator==(const ItemFeatures&, const ItemFeatures&) = default;
};

struct FeatureRecord {
  CompanyYearKey key;
  std::string item_id;
  ItemFeatures features;
  std::string provider_id;
  std::string content_digest;

  friend bool operator==(const FeatureRecord& a, const FeatureRecord& b) {
    return a.key == b.key && a.key.sector == b.key.sector && a.item_id == b.item_id &&
           a.features == b.features && a.provider_id == b.provider_id &&
           a.content_digest == b.content_digest;
  }
};

std::string content_digest(std::string_view body);

// Source of the three feature components. Implementations must be
// deterministic for identical text and preserve batch order.
class FeatureProvider {
 public:
  virtual ~FeatureProvider() = default;

  virtual std::string id() const = 0;
  // Longest text (in chars) embedded in one piece; longer text is chunked.
  virtual std::size_t max_chars() const = 0;

  virtual std::vector<std::vector<float>> embed_finance(const std::vector<std::string>& texts) = 0;
  virtual std::vector<std::vector<float>> embed_general(const std::vector<std::string>& texts) = 0;
  virtual std::vector<float> sentiment(const std::vector<std::string>& texts) = 0;
};

// Serves recorded features keyed by the digest of the text. Unknown text
// raises ProviderUnavailable. Never chunks.
class FixtureProvider final : public FeatureProvider {
 public:
  explicit FixtureProvider(const std::vector<FeatureRecord>& records);

  std::string id() const override { return "fixture"; }
  std::size_t max_chars() const override { return static_cast<std::size_t>(-1); }
  std::vector<std::vector<float>> embed_finance(const std::vector<std::string>& texts) override;
  std::vector<std::vector<float>> embed_general(const std::vector<std::string>& texts) override;
  std::vector<float> sentiment(const std::vector<std::string>& texts) override;

 private:
  const ItemFeatures& lookup(const std::string& text) const;

  std::map<std::string, ItemFeatures> by_digest_;
};

// Offline feature-hashing embedder with a small finance tone lexicon. Used
// to produce reproducible fixture stores without the embedding service.
class LexicalProvider final : public FeatureProvider {
 public:
  explicit LexicalProvider(FeatureDims dims = {}, std::size_t window_chars = 4000);

  std::string id() const override;
  std::size_t max_chars() const override { return window_chars_; }
  std::vector<std::vector<float>> embed_finance(const std::vector<std::string>& texts) override;
  std::vector<std::vector<float>> embed_general(const std::vector<std::string>& texts) override;
  std::vector<float> sentiment(const std::vector<std::string>& texts) override;

 private:
  FeatureDims dims_;
  std::size_t window_chars_;
};

struct HttpProviderOptions {
  std::string base_url;  // e.g. "http://127.0.0.1:8090"
  std::size_t batch_max = 32;
  std::size_t window_chars = 2000;
  int timeout_ms = 30000;
  std::ptrdiff_t max_in_flight = 4;
};

struct ProviderHealth {
  std::string status;
  FeatureDims dims;
};

// Client for the embedding sidecar: POST /embed/finance, /embed/general,
// /sentiment and GET /health. Transport failures raise ProviderUnavailable.
class HttpProvider final : public FeatureProvider {
 public:
  explicit HttpProvider(HttpProviderOptions options);

  std::string id() const override { return "http:" + options_.base_url; }
  std::size_t max_chars() const override { return options_.window_chars; }
  std::vector<std::vector<float>> embed_finance(const std::vector<std::string>& texts) override;
  std::vector<std::vector<float>> embed_general(const std::vector<std::string>& texts) override;
  std::vector<float> sentiment(const std::vector<std::string>& texts) override;

  ProviderHealth health();

 private:
  std::string post(const std::string& path, const std::vector<std::string>& texts);
  std::vector<std::vector<float>> embed(const std::string& path, const std::vector<std::string>& texts);

  HttpProviderOptions options_;
  std::counting_semaphore<64> in_flight_;
};

// Splits text into pieces of at most max_chars, preferring whitespace
// boundaries. Text within the window comes back as a single piece.
std::vector<std::string> chunk_text(const std::string& text, std::size_t max_chars);

// Three provider calls (one batch per component). A single-chunk text keeps
// the provider's vectors as returned; multi-chunk text is mean-pooled and
// re-normalized to unit length, with sentiment averaged.
ItemFeatures compute_item_features(const FilingItem& item, FeatureProvider& provider,
                                   const FeatureDims& dims);

// Feature cache keyed by (company, year, item). Many readers, one writer.
class FeatureStore {
 public:
  FeatureStore() = default;
  explicit FeatureStore(std::optional<FeatureDims> dims) : dims_(dims) {}
  FeatureStore(FeatureStore&& other) noexcept;
  FeatureStore& operator=(FeatureStore&&) = delete;

  std::optional<FeatureRecord> find(const CompanyYearKey& key, const std::string& item_id) const;
  // Throws DimensionMismatch if the record's widths differ from the store's.
  void put(FeatureRecord record);

  std::vector<FeatureRecord> records() const;
  std::size_t size() const;
  std::optional<FeatureDims> dims() const;

 private:
  using Key = std::tuple<std::string, int, std::string>;

  mutable std::shared_mutex mu_;
  std::map<Key, FeatureRecord> records_;
  std::optional<FeatureDims> dims_;
};

// Cache lookup requiring a content digest match; recomputes and overwrites
// otherwise.
ItemFeatures get_or_compute(FeatureStore& store, const CompanyYearKey& key, const FilingItem& item,
                            FeatureProvider& provider, const FeatureDims& dims);

// JSONL, one FeatureRecord per line, floats with 9 significant digits.
FeatureStore load_store(const std::filesystem::path& path);
void save_store(const FeatureStore& store, const std::filesystem::path& path);

std::string record_to_json_line(const FeatureRecord& record);
FeatureRecord record_from_json_line(const std::string& line, std::size_t line_no);

}  // namespace creditxai
