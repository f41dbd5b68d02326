#include "creditxai/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "creditxai/csv.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoFailure("cannot read '" + p.string() + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::optional<double> parse_number(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::string Corpus::read_filing(const CompanyYearKey& key) const {
  auto it = filings.find(key);
  if (it == filings.end()) throw IoFailure("no filing for " + key.company_id + " " + std::to_string(key.fiscal_year));
  return read_text(it->second);
}

std::optional<FinancialVector> Corpus::financials_for(const CompanyYearKey& key) const {
  for (const auto& f : financials) {
    if (f.key == key) return f;
  }
  return std::nullopt;
}

std::optional<RatingGrade> Corpus::rating_for(const CompanyYearKey& key) const {
  for (const auto& s : ratings) {
    if (s.key == key) return s.truth;
  }
  return std::nullopt;
}

std::vector<LabeledSample> parse_ratings_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int c_company = t.column("company_id");
  const int c_year = t.column("fiscal_year");
  const int c_sector = t.column("sector");
  const int c_rating = t.column("rating");
  if (c_company < 0 || c_year < 0 || c_sector < 0 || c_rating < 0) {
    throw CorruptRecord(1, "ratings header needs company_id,fiscal_year,sector,rating");
  }
  std::vector<LabeledSample> out;
  std::set<CompanyYearKey> seen;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const std::size_t line = i + 2;
    LabeledSample s;
    s.key.company_id = trim(row[c_company]);
    const auto year = parse_number(row[c_year]);
    if (!year || *year != std::floor(*year)) throw CorruptRecord(line, "bad fiscal_year '" + row[c_year] + "'");
    s.key.fiscal_year = static_cast<int>(*year);
    s.key.sector = trim(row[c_sector]);
    const auto g = try_parse_grade(trim(row[c_rating]));
    if (!g) throw CorruptRecord(line, "bad rating '" + row[c_rating] + "'");
    s.truth = *g;
    try {
      s.key.validate();
    } catch (const Error& e) {
      throw CorruptRecord(line, e.what());
    }
    if (!seen.insert(s.key).second) throw CorruptRecord(line, "duplicate key " + s.key.label());
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(), [](const LabeledSample& a, const LabeledSample& b) { return a.key < b.key; });
  return out;
}

std::string ratings_to_csv(const std::vector<LabeledSample>& samples) {
  std::string out = "company_id,fiscal_year,sector,rating\n";
  for (const auto& s : samples) {
    out += csv::join_row({s.key.company_id, std::to_string(s.key.fiscal_year), s.key.sector,
                          std::string(to_string(s.truth))});
    out += "\n";
  }
  return out;
}

std::string financials_to_csv(const std::vector<FinancialVector>& rows) {
  std::set<std::string> names;
  for (const auto& r : rows) {
    for (const auto& [k, v] : r.indicators) names.insert(k);
  }
  std::vector<std::string> header = {"company_id", "fiscal_year", "sector"};
  header.insert(header.end(), names.begin(), names.end());
  std::string out = csv::join_row(header) + "\n";
  for (const auto& r : rows) {
    std::vector<std::string> fields = {r.key.company_id, std::to_string(r.key.fiscal_year), r.key.sector};
    for (const auto& n : names) {
      auto it = r.indicators.find(n);
      fields.push_back(it == r.indicators.end() ? "" : fmt_double(it->second));
    }
    out += csv::join_row(fields) + "\n";
  }
  return out;
}

Corpus load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoFailure("corpus directory '" + dir.string() + "' not found");
  Corpus c;
  c.root = dir;
  c.ratings = parse_ratings_csv(read_text(dir / "ratings.csv"));
  if (std::filesystem::exists(dir / "financials.csv")) c.financials = load_financials_csv(dir / "financials.csv");

  std::map<std::pair<std::string, int>, std::string> sectors;
  for (const auto& f : c.financials) sectors[{f.key.company_id, f.key.fiscal_year}] = f.key.sector;
  for (const auto& s : c.ratings) sectors[{s.key.company_id, s.key.fiscal_year}] = s.key.sector;

  const auto filings_dir = dir / "filings";
  if (std::filesystem::is_directory(filings_dir)) {
    static const std::regex name_re(R"(^(.+)_(\d{4})\.txt$)");
    std::vector<std::filesystem::path> paths;
    for (const auto& e : std::filesystem::directory_iterator(filings_dir)) {
      if (e.is_regular_file()) paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      std::smatch m;
      const std::string name = p.filename().string();
      if (!std::regex_match(name, m, name_re)) continue;
      CompanyYearKey key;
      key.company_id = m[1].str();
      key.fiscal_year = std::stoi(m[2].str());
      auto s = sectors.find({key.company_id, key.fiscal_year});
      key.sector = s == sectors.end() ? "unknown" : s->second;
      c.filings[key] = p;
    }
  }
  return c;
}

RatingGrade map_agency_rating(std::string_view text) {
  std::string t = trim(text);
  // notch and watch suffixes: "BBB-", "AA+", "B *-"
  while (!t.empty() && (t.back() == '+' || t.back() == '-' || t.back() == '*' || t.back() == ' ')) t.pop_back();
  if (t.empty()) throw InvalidArgument("empty agency rating");
  std::string up;
  for (char c : t) up += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  // Moody's numeric notches: Aa2, Baa1, B3
  while (!up.empty() && std::isdigit(static_cast<unsigned char>(up.back()))) up.pop_back();
  static const std::map<std::string, RatingGrade> table = {
      {"AAA", RatingGrade::AAA}, {"AA", RatingGrade::AA},   {"A", RatingGrade::A},     {"BBB", RatingGrade::BBB},
      {"BAA", RatingGrade::BBB}, {"BB", RatingGrade::BB},   {"BA", RatingGrade::BB},   {"B", RatingGrade::B},
      {"CCC", RatingGrade::CCC}, {"CAA", RatingGrade::CCC}, {"CC", RatingGrade::C},    {"CA", RatingGrade::C},
      {"C", RatingGrade::C},     {"D", RatingGrade::C},     {"SD", RatingGrade::C},    {"RD", RatingGrade::C},
  };
  auto it = table.find(up);
  if (it == table.end()) throw InvalidArgument("unknown agency rating '" + std::string(text) + "'");
  return it->second;
}

KaggleImport import_kaggle_csv(const std::filesystem::path& path) {
  const csv::Table t = csv::read_file(path);
  auto find_col = [&](std::initializer_list<const char*> names) {
    for (const char* n : names) {
      for (std::size_t i = 0; i < t.header.size(); ++i) {
        if (lower(trim(t.header[i])) == n) return static_cast<int>(i);
      }
    }
    return -1;
  };
  const int c_company = find_col({"ticker", "symbol", "corporation", "name"});
  const int c_date = find_col({"rating date", "date"});
  const int c_sector = find_col({"sector"});
  const int c_rating = find_col({"rating"});
  if (c_company < 0 || c_date < 0 || c_rating < 0) {
    throw CorruptRecord(1, "expected ticker/symbol, date and rating columns");
  }
  std::set<int> non_numeric = {c_company, c_date, c_sector, c_rating};
  for (const char* n : {"rating agency name", "rating agency", "name", "corporation", "symbol", "ticker", "cik",
                        "sic code", "binary rating"}) {
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      if (lower(trim(t.header[i])) == n) non_numeric.insert(static_cast<int>(i));
    }
  }

  KaggleImport out;
  std::set<CompanyYearKey> seen;
  static const std::regex year_re(R"((19|20)\d\d)");
  for (const auto& row : t.rows) {
    std::smatch m;
    const std::string& date = row[c_date];
    const std::string company = trim(row[c_company]);
    std::optional<RatingGrade> grade;
    try {
      grade = map_agency_rating(row[c_rating]);
    } catch (const InvalidArgument&) {
    }
    if (company.empty() || !grade || !std::regex_search(date, m, year_re)) {
      ++out.skipped_rows;
      continue;
    }
    CompanyYearKey key;
    key.company_id = company;
    key.fiscal_year = std::stoi(m[0].str());
    key.sector = c_sector >= 0 && !trim(row[c_sector]).empty() ? trim(row[c_sector]) : "unknown";
    if (!seen.insert(key).second) {
      ++out.duplicate_rows;
      continue;
    }
    FinancialVector fv;
    fv.key = key;
    for (std::size_t i = 0; i < t.header.size(); ++i) {
      if (non_numeric.count(static_cast<int>(i))) continue;
      if (auto v = parse_number(row[i])) fv.indicators[trim(t.header[i])] = *v;
    }
    out.ratings.push_back({key, *grade});
    out.financials.push_back(std::move(fv));
  }
  std::sort(out.ratings.begin(), out.ratings.end(),
            [](const LabeledSample& a, const LabeledSample& b) { return a.key < b.key; });
  return out;
}

}  // namespace creditxai
