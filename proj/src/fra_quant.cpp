#include "creditxai/fra_quant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "creditxai/csv.hpp"
#include "creditxai/digest.hpp"
#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::string fmt(double x, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

double parse_number(const std::string& cell, std::size_t line, const std::string& column) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    throw CorruptRecord(line, "column '" + column + "' is not a number: '" + cell + "'");
  }
  if (used != cell.size() || !std::isfinite(v)) {
    throw CorruptRecord(line, "column '" + column + "' is not a finite number: '" + cell + "'");
  }
  return v;
}

}  // namespace

std::vector<FinancialVector> parse_financials_csv(const std::string& text) {
  const csv::Table t = csv::parse(text);
  const int c_company = t.column("company_id");
  const int c_year = t.column("fiscal_year");
  const int c_sector = t.column("sector");
  if (c_company < 0 || c_year < 0 || c_sector < 0) {
    throw CorruptRecord(1, "financials header needs company_id,fiscal_year,sector");
  }
  std::vector<FinancialVector> out;
  out.reserve(t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const auto& row = t.rows[r];
    const std::size_t line = r + 2;
    FinancialVector fv;
    fv.key.company_id = row[c_company];
    fv.key.fiscal_year = static_cast<int>(parse_number(row[c_year], line, "fiscal_year"));
    fv.key.sector = row[c_sector];
    try {
      fv.key.validate();
    } catch (const InvalidArgument& e) {
      throw CorruptRecord(line, e.what());
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (static_cast<int>(c) == c_company || static_cast<int>(c) == c_year || static_cast<int>(c) == c_sector) {
        continue;
      }
      if (row[c].empty()) continue;
      fv.indicators[t.header[c]] = parse_number(row[c], line, t.header[c]);
    }
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<FinancialVector> load_financials_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open financials '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_financials_csv(ss.str());
}

double median(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("median of an empty set");
  const std::size_t n = values.size();
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(values.begin(), mid, values.end());
  const double upper = *mid;
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), mid);
  return (lower + upper) / 2.0;
}

std::optional<double> IndustryBaselines::lookup(const std::string& sector, const std::string& indicator) const {
  if (auto s = per_sector.find(sector); s != per_sector.end()) {
    if (auto v = s->second.find(indicator); v != s->second.end()) return v->second;
  }
  if (auto v = all_sectors.find(indicator); v != all_sectors.end()) return v->second;
  return std::nullopt;
}

IndustryBaselines compute_baselines(const std::vector<FinancialVector>& dataset, const std::set<std::string>& sectors,
                                    std::size_t min_support) {
  if (dataset.empty()) throw PreconditionViolation("baselines need a non-empty dataset");
  if (min_support == 0) throw InvalidArgument("min_support must be at least 1");

  std::map<std::string, std::map<std::string, std::vector<double>>> by_sector;
  std::map<std::string, std::vector<double>> overall;
  IndustryBaselines b;
  b.provenance.min_support = min_support;
  b.provenance.first_year = dataset.front().key.fiscal_year;
  b.provenance.last_year = dataset.front().key.fiscal_year;

  std::string digest_input;
  for (const auto& fv : dataset) {
    if (!sectors.empty() && !sectors.count(fv.key.sector)) continue;
    b.known_sectors.insert(fv.key.sector);
    b.provenance.first_year = std::min(b.provenance.first_year, fv.key.fiscal_year);
    b.provenance.last_year = std::max(b.provenance.last_year, fv.key.fiscal_year);
    ++b.provenance.observations;
    digest_input += fv.key.company_id + "|" + std::to_string(fv.key.fiscal_year) + "|" + fv.key.sector;
    for (const auto& [name, value] : fv.indicators) {
      by_sector[fv.key.sector][name].push_back(value);
      overall[name].push_back(value);
      digest_input += "|" + name + "=" + digest_number(value);
    }
    digest_input += "\n";
  }
  b.provenance.dataset_digest = sha256_hex(digest_input);

  for (const auto& [sector, cols] : by_sector) {
    for (const auto& [name, values] : cols) {
      if (values.size() >= min_support) b.per_sector[sector][name] = median(values);
    }
  }
  for (const auto& [name, values] : overall) {
    if (values.size() >= min_support) b.all_sectors[name] = median(values);
  }
  return b;
}

std::string baselines_to_json(const IndustryBaselines& b) {
  json j;
  j["per_sector"] = b.per_sector;
  j["all_sectors"] = b.all_sectors;
  j["known_sectors"] = b.known_sectors;
  j["provenance"] = {{"dataset_digest", b.provenance.dataset_digest},
                     {"first_year", b.provenance.first_year},
                     {"last_year", b.provenance.last_year},
                     {"observations", b.provenance.observations},
                     {"min_support", b.provenance.min_support}};
  return j.dump(2);
}

IndustryBaselines baselines_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    IndustryBaselines b;
    b.per_sector = j.at("per_sector").get<std::map<std::string, std::map<std::string, double>>>();
    b.all_sectors = j.at("all_sectors").get<std::map<std::string, double>>();
    b.known_sectors = j.at("known_sectors").get<std::set<std::string>>();
    const auto& p = j.at("provenance");
    b.provenance.dataset_digest = p.at("dataset_digest").get<std::string>();
    b.provenance.first_year = p.at("first_year").get<int>();
    b.provenance.last_year = p.at("last_year").get<int>();
    b.provenance.observations = p.at("observations").get<std::size_t>();
    b.provenance.min_support = p.at("min_support").get<std::size_t>();
    return b;
  } catch (const json::exception& e) {
    throw CorruptRecord(1, std::string("baselines JSON: ") + e.what());
  }
}

std::string_view to_string(DeviationStatus s) {
  switch (s) {
    case DeviationStatus::ok:
      return "ok";
    case DeviationStatus::undefined_baseline:
      return "undefined_baseline";
    case DeviationStatus::missing_indicator:
      return "missing_indicator";
  }
  return "unknown";
}

DeviationReport compute_deviations(const FinancialVector& fin, const std::optional<FinancialVector>& prior,
                                   const IndustryBaselines& baselines, const std::vector<std::string>& schema,
                                   double epsilon) {
  if (!baselines.known_sectors.count(fin.key.sector)) {
    throw UnknownSector("no baselines for sector '" + fin.key.sector + "'");
  }
  std::set<std::string> names(schema.begin(), schema.end());
  if (names.empty()) {
    for (const auto& [n, v] : baselines.all_sectors) names.insert(n);
    if (auto s = baselines.per_sector.find(fin.key.sector); s != baselines.per_sector.end()) {
      for (const auto& [n, v] : s->second) names.insert(n);
    }
    for (const auto& [n, v] : fin.indicators) names.insert(n);
  }

  DeviationReport report;
  report.key = fin.key;
  for (const std::string& name : names) {
    IndicatorDeviation d;
    auto value = fin.indicators.find(name);
    const std::optional<double> baseline = baselines.lookup(fin.key.sector, name);
    if (value != fin.indicators.end()) d.value = value->second;
    d.baseline = baseline;
    if (!d.value || !baseline) {
      d.status = DeviationStatus::missing_indicator;
    } else if (std::abs(*baseline) < epsilon) {
      d.status = DeviationStatus::undefined_baseline;
    } else {
      d.status = DeviationStatus::ok;
      d.dev = (*d.value - *baseline) / *baseline;
    }
    report.indicators.emplace(name, d);

    if (prior && d.value) {
      auto p = prior->indicators.find(name);
      if (p != prior->indicators.end() && std::abs(p->second) >= epsilon) {
        report.yoy[name] = (*d.value - p->second) / std::abs(p->second);
      }
    }
  }
  return report;
}

std::map<std::string, bool> AdjustmentPolicy::default_directionality() {
  return {{"current_ratio", true},     {"quick_ratio", true},        {"interest_coverage", true},
          {"net_margin", true},        {"operating_margin", true},   {"gross_margin", true},
          {"ebit_margin", true},       {"ebitda_margin", true},      {"roa", true},
          {"roe", true},               {"roi", true},                {"asset_turnover", true},
          {"operating_cash_flow_per_share", true},                   {"free_cash_flow_per_share", true},
          {"debt_to_equity", false},   {"long_term_debt_to_capital", false},
          {"debt_to_assets", false},   {"leverage", false}};
}

bool AdjustmentPolicy::is_higher_better(const std::string& indicator) const {
  auto it = higher_is_better.find(indicator);
  return it == higher_is_better.end() ? true : it->second;
}

void AdjustmentPolicy::validate() const {
  if (!(dev_minor > 0.0) || !(dev_minor < dev_major)) {
    throw InvalidArgument("adjustment policy needs 0 < dev_minor < dev_major");
  }
  if (!(yoy_major > 0.0)) throw InvalidArgument("yoy_major must be positive");
  if (max_notches < 1) throw InvalidArgument("max_notches must be at least 1");
}

VoteTally tally_votes(const DeviationReport& report, const AdjustmentPolicy& policy) {
  policy.validate();
  VoteTally tally;
  int total = 0;
  for (const auto& [name, d] : report.indicators) {
    if (d.status != DeviationStatus::ok) continue;
    const double sign = policy.is_higher_better(name) ? 1.0 : -1.0;
    const double oriented = sign * *d.dev;
    int dev_vote = 0;
    std::string reason;
    if (std::abs(oriented) >= policy.dev_major) {
      dev_vote = oriented > 0 ? 2 : -2;
      reason = "dev " + fmt(*d.dev) + " breaches major threshold " + fmt(policy.dev_major, 2);
    } else if (std::abs(oriented) >= policy.dev_minor) {
      dev_vote = oriented > 0 ? 1 : -1;
      reason = "dev " + fmt(*d.dev) + " breaches minor threshold " + fmt(policy.dev_minor, 2);
    }
    int yoy_vote = 0;
    if (auto y = report.yoy.find(name); y != report.yoy.end()) {
      const double oriented_yoy = sign * y->second;
      if (std::abs(oriented_yoy) >= policy.yoy_major) {
        yoy_vote = oriented_yoy > 0 ? 2 : -2;
        if (!reason.empty()) reason += "; ";
        reason += "yoy " + fmt(y->second) + " breaches major threshold " + fmt(policy.yoy_major, 2);
      }
    }
    IndicatorVote v{name, std::clamp(dev_vote + yoy_vote, -2, 2), reason};
    total += v.vote;
    tally.votes.push_back(std::move(v));
  }
  if (tally.votes.empty()) {
    throw EmptyReport("no indicator of " + report.key.label() + " has a usable deviation");
  }
  tally.mean_vote = static_cast<double>(total) / static_cast<double>(tally.votes.size());
  return tally;
}

AdjustmentProposal propose_rating_adjustment(RatingGrade prev_grade, const DeviationReport& report,
                                             const AdjustmentPolicy& policy) {
  AdjustmentProposal p;
  p.tally = tally_votes(report, policy);
  int delta = static_cast<int>(std::lround(p.tally.mean_vote * 2.0));
  delta = std::clamp(delta, -policy.max_notches, policy.max_notches);
  // Upgrades may not pass AAA (index 0), downgrades may not pass C (index 7).
  const int idx = grade_index(prev_grade);
  delta = std::clamp(delta, idx - (kGradeCount - 1), idx);
  p.notch_delta = delta;

  std::ostringstream r;
  r << "mean vote " << fmt(p.tally.mean_vote, 3) << " over " << p.tally.votes.size()
    << " indicators -> notch delta " << (delta > 0 ? "+" : "") << delta << " from "
    << to_string(prev_grade);
  for (const auto& v : p.tally.votes) {
    if (v.vote == 0) continue;
    r << "\n" << v.indicator << ": vote " << (v.vote > 0 ? "+" : "") << v.vote << " (" << v.reason << ")";
  }
  p.rationale = r.str();
  return p;
}

RatingGrade deviation_implied_grade(const VoteTally& tally) {
  const double score = std::clamp(0.5 - tally.mean_vote / 4.0, 0.0, 1.0);
  return score_to_grade(RiskScore(score));
}

FraProposal make_fra_proposal(const DeviationReport& report, std::optional<RatingGrade> prev_grade,
                              const AdjustmentPolicy& policy) {
  FraProposal p;
  if (prev_grade) {
    p.adjustment = propose_rating_adjustment(*prev_grade, report, policy);
    p.base_grade = *prev_grade;
    p.proposed_grade = apply_notches(*prev_grade, p.adjustment.notch_delta);
    return p;
  }
  p.cold_start = true;
  p.adjustment.tally = tally_votes(report, policy);
  p.base_grade = deviation_implied_grade(p.adjustment.tally);
  p.proposed_grade = p.base_grade;
  p.adjustment.notch_delta = 0;
  std::ostringstream r;
  r << "cold start: no prior rating; mean vote " << fmt(p.adjustment.tally.mean_vote, 3)
    << " implies " << to_string(p.base_grade);
  for (const auto& v : p.adjustment.tally.votes) {
    if (v.vote == 0) continue;
    r << "\n" << v.indicator << ": vote " << (v.vote > 0 ? "+" : "") << v.vote << " (" << v.reason << ")";
  }
  p.adjustment.rationale = r.str();
  return p;
}

}  // namespace creditxai
