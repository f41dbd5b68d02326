#include "creditxai/reporting.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>

#include "creditxai/errors.hpp"

namespace creditxai {
namespace {

using json = nlohmann::json;

std::string fixed(double x, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, x);
  return buf;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    out.push_back(line.substr(b, e - b + 1));
  }
  return out;
}

ReportSection section(const std::string& name, const RiskSignal& s) {
  ReportSection r;
  r.name = name;
  r.agent = s.agent_id;
  r.grade = s.grade;
  r.score = s.score;
  r.rationale = s.rationale;
  r.evidence = lines_of(s.rationale);
  r.initial_grade = s.initial_grade;
  r.adjustment = s.adjustment;
  return r;
}

const RiskSignal& find_signal(const FinalDecision& d, AgentId id) {
  for (const auto& s : d.contributing) {
    if (s.agent_id == id) return s;
  }
  throw MissingSignal("decision has no " + std::string(to_string(id)) + " signal");
}

json signal_to_json(const RiskSignal& s) {
  json j = {{"agent_id", std::string(to_string(s.agent_id))},
            {"grade", std::string(to_string(s.grade))},
            {"score", s.score.value()},
            {"rationale", s.rationale},
            {"inputs_digest", s.inputs_digest},
            {"confidence", s.confidence},
            {"flags",
             {{"grade_overridden", s.flags.grade_overridden},
              {"cold_start", s.flags.cold_start},
              {"clamped", s.flags.clamped}}}};
  j["initial_grade"] = s.initial_grade ? json(std::string(to_string(*s.initial_grade))) : json(nullptr);
  j["adjustment"] = s.adjustment ? json(*s.adjustment) : json(nullptr);
  return j;
}

RiskSignal signal_from_json(const json& j) {
  RiskSignal s;
  s.agent_id = parse_agent_id(j.at("agent_id").get<std::string>());
  s.grade = parse_grade(j.at("grade").get<std::string>());
  s.score = RiskScore(j.at("score").get<double>());
  s.rationale = j.at("rationale").get<std::string>();
  s.inputs_digest = j.at("inputs_digest").get<std::string>();
  s.confidence = j.at("confidence").get<double>();
  const auto& f = j.at("flags");
  s.flags.grade_overridden = f.at("grade_overridden").get<bool>();
  s.flags.cold_start = f.at("cold_start").get<bool>();
  s.flags.clamped = f.at("clamped").get<bool>();
  if (!j.at("initial_grade").is_null()) s.initial_grade = parse_grade(j.at("initial_grade").get<std::string>());
  if (!j.at("adjustment").is_null()) s.adjustment = j.at("adjustment").get<int>();
  return s;
}

json year_weight_json(const std::optional<YearWeight>& yw) {
  if (!yw) return nullptr;
  return {{"sim", yw->sim}, {"weight", yw->weight}};
}

std::optional<YearWeight> year_weight_from(const json& j, int year) {
  if (j.is_null()) return std::nullopt;
  return YearWeight{year, j.at("sim").get<double>(), j.at("weight").get<double>()};
}

}  // namespace

RatingReport render_report(const CompanyYearKey& key, const FinalDecision& decision,
                           const SimilarityWeights& business_weights, const SimilarityWeights& governance_weights,
                           const std::string& config_fingerprint) {
  RatingReport r;
  r.key = key;
  r.final = decision;
  r.config_fingerprint = config_fingerprint;
  r.alpha = business_weights.alpha;
  r.sections.push_back(section("composite", find_signal(decision, AgentId::CRA)));
  r.sections.push_back(section("business", find_signal(decision, AgentId::BRA)));
  r.sections.push_back(section("financial", find_signal(decision, AgentId::FRA)));
  r.sections.push_back(section("governance", find_signal(decision, AgentId::GRA)));

  std::map<int, HistoryAppendixRow, std::greater<>> rows;
  for (const auto& yw : business_weights.per_year) {
    rows[yw.year].year = yw.year;
    rows[yw.year].business = yw;
  }
  for (const auto& yw : governance_weights.per_year) {
    rows[yw.year].year = yw.year;
    rows[yw.year].governance = yw;
  }
  for (auto& [year, row] : rows) r.history_appendix.push_back(row);
  return r;
}

std::string report_markdown(const RatingReport& r, const std::string& generated_at) {
  std::ostringstream md;
  md << "# Credit rating report: " << r.key.company_id << " FY" << r.key.fiscal_year << "\n";
  md << "Generated: " << generated_at << "\n\n";
  md << "Sector: " << r.key.sector << "  \n";
  md << "Config fingerprint: `" << r.config_fingerprint << "`\n\n";

  md << "## Final rating\n\n";
  md << "- Grade: **" << to_string(r.final.grade) << "**\n";
  md << "- Score: " << fixed(r.final.score.value(), kScoreDecimals) << "\n";
  md << "- Consensus: " << fixed(r.final.consensus, kScoreDecimals) << "\n";
  md << "- Mode: " << to_string(r.final.mode) << (r.final.grade_overridden ? " (grade overridden)" : "") << "\n";
  if (!r.final.weights_used.empty()) {
    md << "- Fusion weights:";
    for (const char* name : {"CRA", "GRA", "BRA", "FRA"}) {
      auto it = r.final.weights_used.find(name);
      if (it != r.final.weights_used.end()) md << " " << name << " " << fixed(it->second, kWeightDecimals);
    }
    md << "\n";
  }
  md << "\n";
  for (const auto& line : lines_of(r.final.rationale)) md << "> " << line << "\n";
  md << "\n";

  static const std::map<std::string, std::string> kTitles = {{"composite", "Composite (CRA)"},
                                                             {"business", "Business (BRA)"},
                                                             {"financial", "Financial (FRA)"},
                                                             {"governance", "Governance (GRA)"}};
  for (const auto& s : r.sections) {
    md << "## " << kTitles.at(s.name) << "\n\n";
    md << "- Grade: **" << to_string(s.grade) << "**\n";
    md << "- Score: " << fixed(s.score.value(), kScoreDecimals) << "\n";
    if (s.initial_grade) md << "- Initial governance grade: " << to_string(*s.initial_grade) << "\n";
    if (s.adjustment) md << "- Governance adjustment: " << (*s.adjustment > 0 ? "+" : "") << *s.adjustment << " notches\n";
    md << "\nEvidence:\n\n";
    for (const auto& line : s.evidence) md << "- " << line << "\n";
    md << "\n";
  }

  md << "## History appendix\n\n";
  if (r.history_appendix.empty()) {
    md << "no prior years\n";
  } else {
    md << "alpha = " << fixed(r.alpha, kWeightDecimals) << "\n\n";
    md << "| Year | Business sim | Business weight | Governance sim | Governance weight |\n";
    md << "|------|--------------|-----------------|----------------|-------------------|\n";
    auto cell = [](const std::optional<YearWeight>& yw, bool weight) {
      if (!yw) return std::string("-");
      return weight ? fixed(yw->weight, kWeightDecimals) : fixed(yw->sim, kScoreDecimals);
    };
    for (const auto& row : r.history_appendix) {
      md << "| " << row.year << " | " << cell(row.business, false) << " | " << cell(row.business, true) << " | "
         << cell(row.governance, false) << " | " << cell(row.governance, true) << " |\n";
    }
  }
  return md.str();
}

std::string report_json(const RatingReport& r) {
  json j;
  j["key"] = {{"company_id", r.key.company_id}, {"fiscal_year", r.key.fiscal_year}, {"sector", r.key.sector}};
  json contributing = json::array();
  for (const auto& s : r.final.contributing) contributing.push_back(signal_to_json(s));
  j["final"] = {{"grade", std::string(to_string(r.final.grade))},
                {"score", r.final.score.value()},
                {"consensus", r.final.consensus},
                {"rationale", r.final.rationale},
                {"grade_overridden", r.final.grade_overridden},
                {"mode", std::string(to_string(r.final.mode))},
                {"weights_used", r.final.weights_used},
                {"deterministic_score", r.final.deterministic_score},
                {"contributing", contributing}};
  json sections = json::array();
  for (const auto& s : r.sections) {
    json js = {{"name", s.name},
               {"agent_id", std::string(to_string(s.agent))},
               {"grade", std::string(to_string(s.grade))},
               {"score", s.score.value()},
               {"rationale", s.rationale},
               {"evidence", s.evidence}};
    js["initial_grade"] = s.initial_grade ? json(std::string(to_string(*s.initial_grade))) : json(nullptr);
    js["adjustment"] = s.adjustment ? json(*s.adjustment) : json(nullptr);
    sections.push_back(js);
  }
  j["sections"] = sections;
  json appendix = json::array();
  for (const auto& row : r.history_appendix) {
    appendix.push_back(
        {{"year", row.year}, {"business", year_weight_json(row.business)}, {"governance", year_weight_json(row.governance)}});
  }
  j["history_appendix"] = appendix;
  j["alpha"] = r.alpha;
  j["config_fingerprint"] = r.config_fingerprint;
  return j.dump(2) + "\n";
}

RatingReport report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    RatingReport r;
    r.key.company_id = j.at("key").at("company_id").get<std::string>();
    r.key.fiscal_year = j.at("key").at("fiscal_year").get<int>();
    r.key.sector = j.at("key").at("sector").get<std::string>();
    const auto& f = j.at("final");
    r.final.grade = parse_grade(f.at("grade").get<std::string>());
    r.final.score = RiskScore(f.at("score").get<double>());
    r.final.consensus = f.at("consensus").get<double>();
    r.final.rationale = f.at("rationale").get<std::string>();
    r.final.grade_overridden = f.at("grade_overridden").get<bool>();
    r.final.mode = parse_caa_mode(f.at("mode").get<std::string>());
    r.final.weights_used = f.at("weights_used").get<std::map<std::string, double>>();
    r.final.deterministic_score = f.at("deterministic_score").get<double>();
    for (const auto& s : f.at("contributing")) r.final.contributing.push_back(signal_from_json(s));
    for (const auto& js : j.at("sections")) {
      ReportSection s;
      s.name = js.at("name").get<std::string>();
      s.agent = parse_agent_id(js.at("agent_id").get<std::string>());
      s.grade = parse_grade(js.at("grade").get<std::string>());
      s.score = RiskScore(js.at("score").get<double>());
      s.rationale = js.at("rationale").get<std::string>();
      s.evidence = js.at("evidence").get<std::vector<std::string>>();
      if (!js.at("initial_grade").is_null()) s.initial_grade = parse_grade(js.at("initial_grade").get<std::string>());
      if (!js.at("adjustment").is_null()) s.adjustment = js.at("adjustment").get<int>();
      r.sections.push_back(std::move(s));
    }
    for (const auto& row : j.at("history_appendix")) {
      HistoryAppendixRow h;
      h.year = row.at("year").get<int>();
      h.business = year_weight_from(row.at("business"), h.year);
      h.governance = year_weight_from(row.at("governance"), h.year);
      r.history_appendix.push_back(h);
    }
    r.alpha = j.at("alpha").get<double>();
    r.config_fingerprint = j.at("config_fingerprint").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw CorruptRecord(1, std::string("report JSON: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptRecord(1, std::string("report JSON: ") + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const std::filesystem::path tmp = path.string() + ".tmp" + std::to_string(rng() % 1000000);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write '" + tmp.string() + "'");
    out << text;
    out.flush();
    if (!out) throw IoFailure("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoFailure("cannot move report into place at '" + path.string() + "'");
  }
}

ReportPaths write_report(const RatingReport& report, const std::filesystem::path& out_dir,
                         const std::string& generated_at) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) {
    throw IoFailure("report directory '" + out_dir.string() + "' is not writable" + (ec ? ": " + ec.message() : ""));
  }
  ReportPaths paths;
  const std::string stem = report.key.label();
  paths.markdown = out_dir / (stem + ".md");
  paths.json = out_dir / (stem + ".json");
  write_file_atomic(paths.markdown, report_markdown(report, generated_at));
  write_file_atomic(paths.json, report_json(report));
  return paths;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace creditxai
