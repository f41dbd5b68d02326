#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "creditxai/fra_quant.hpp"
#include "creditxai/metrics.hpp"

namespace creditxai {

// On-disk corpus:
//   filings/<company>_<year>.txt   plain-text 10-K
//   ratings.csv                    company_id,fiscal_year,sector,rating
//   financials.csv                 company_id,fiscal_year,sector,<indicators...>
//   features.jsonl                 optional feature store
//   mock_rules.json, config.json   optional
struct Corpus {
  std::filesystem::path root;
  std::vector<LabeledSample> ratings;  // sorted by key
  std::vector<FinancialVector> financials;
  std::map<CompanyYearKey, std::filesystem::path> filings;

  bool has_filing(const CompanyYearKey& key) const { return filings.count(key) > 0; }
  // Throws IoFailure when the filing is absent or unreadable.
  std::string read_filing(const CompanyYearKey& key) const;
  std::optional<FinancialVector> financials_for(const CompanyYearKey& key) const;
  std::optional<RatingGrade> rating_for(const CompanyYearKey& key) const;
};

Corpus load_corpus(const std::filesystem::path& dir);

std::vector<LabeledSample> parse_ratings_csv(const std::string& text);
std::string ratings_to_csv(const std::vector<LabeledSample>& samples);
std::string financials_to_csv(const std::vector<FinancialVector>& rows);

// Agency rating with notches or outlook ("BBB-", "Aa2", "CC") -> scale grade.
// Notches are dropped; CC, D and SD fold into C. Moody's style symbols are
// accepted. Throws InvalidArgument.
RatingGrade map_agency_rating(std::string_view text);

struct KaggleImport {
  std::vector<LabeledSample> ratings;
  std::vector<FinancialVector> financials;
  std::size_t skipped_rows = 0;
  std::size_t duplicate_rows = 0;
};

// Reads the public corporate credit rating CSV (ratings plus financial
// ratios). Company = ticker or symbol column, year = first four-digit run of
// the date column, every other numeric column becomes an indicator. The
// first row per company-year wins.
KaggleImport import_kaggle_csv(const std::filesystem::path& path);

}  // namespace creditxai
