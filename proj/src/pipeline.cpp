#include "creditxai/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fstream>
#include <functional>
#include <future>
#include <mutex>
#include <sstream>
#include <thread>

#include "creditxai/digest.hpp"
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

std::string features_digest(const std::map<std::string, CurrentItem>& items) {
  std::string s;
  for (const auto& [id, ci] : items) {
    s += id + "|" + content_digest(ci.item.body) + "|" + digest_number(ci.features.sentiment) + "|";
    std::string vec;
    for (float x : ci.features.finance_vec) vec += digest_number(x) + ",";
    vec += ";";
    for (float x : ci.features.general_vec) vec += digest_number(x) + ",";
    s += sha256_hex(vec) + "\n";
  }
  return sha256_hex(s);
}

std::string weights_digest(const SimilarityWeights& w) {
  std::string s = "alpha=" + digest_number(w.alpha) + "\n";
  for (const auto& yw : w.per_year) {
    s += std::to_string(yw.year) + "|" + digest_number(yw.sim) + "|" + digest_number(yw.weight) + "\n";
  }
  for (int y : w.years_without_common_items) s += "nocommon=" + std::to_string(y) + "\n";
  return s;
}

std::string decision_digest(const FinalDecision& d) {
  std::string s = std::string(to_string(d.grade)) + "|" + digest_number(d.score.value()) + "|" +
                  digest_number(d.consensus) + "|" + d.rationale + "|" + std::to_string(d.grade_overridden) + "|" +
                  std::string(to_string(d.mode)) + "|" + digest_number(d.deterministic_score) + "\n";
  for (const auto& [k, v] : d.weights_used) s += k + "=" + digest_number(v) + "\n";
  for (const auto& sig : d.contributing) s += signal_digest(sig) + "\n";
  return sha256_hex(s);
}

// Item features of one filing; stubs are skipped.
std::map<std::string, CurrentItem> load_items(const std::string& raw, const CompanyYearKey& key,
                                              const PipelineConfig& cfg) {
  FilingDocument doc{key, "", raw};
  const auto parsed = parse_filing(doc, cfg.min_body_chars);
  const auto sel = select_key_items(parsed, std::set<std::string>(cfg.item_set.begin(), cfg.item_set.end()));
  std::map<std::string, CurrentItem> out;
  for (const auto& [id, item] : sel.items) {
    if (!item.stub) out[id].item = item;
  }
  return out;
}

void attach_features(std::map<std::string, CurrentItem>& items, const CompanyYearKey& key, const PipelineConfig& cfg,
                     FeatureStore& store, FeatureProvider& provider) {
  for (auto& [id, ci] : items) ci.features = get_or_compute(store, key, ci.item, provider, cfg.dims);
}

std::map<std::string, ItemFeatures> features_only(const std::map<std::string, CurrentItem>& items) {
  std::map<std::string, ItemFeatures> out;
  for (const auto& [id, ci] : items) out[id] = ci.features;
  return out;
}

// Serializes trace output from all workers.
class Recorder {
 public:
  Recorder(TraceSink* sink) : sink_(sink) {}

  void emit(const TraceEvent& e) {
    std::lock_guard lock(mu_);
    if (sink_) sink_->record(e);
    events_.push_back(e);
  }

  std::vector<TraceEvent> take() {
    std::lock_guard lock(mu_);
    return std::move(events_);
  }

 private:
  std::mutex mu_;
  TraceSink* sink_;
  std::vector<TraceEvent> events_;
};

struct StageFailure : std::exception {
  Stage stage;
  std::string message;
  StageFailure(Stage s, std::string m) : stage(s), message(std::move(m)) {}
  const char* what() const noexcept override { return message.c_str(); }
};

class KeyRunner {
 public:
  KeyRunner(const PipelineConfig& cfg, const Corpus& corpus, Resources& res, ChatBackend& gateway,
            const IndustryBaselines& baselines, const std::vector<Stage>& expected, Recorder& rec,
            const std::string& run_id, const std::string& fingerprint, const PipelineOptions& opts)
      : cfg_(cfg),
        corpus_(corpus),
        res_(res),
        gateway_(gateway),
        baselines_(baselines),
        expected_(expected.begin(), expected.end()),
        rec_(rec),
        run_id_(run_id),
        fingerprint_(fingerprint),
        opts_(opts) {}

  KeyOutcome run(const CompanyYearKey& key);

 private:
  bool has(Stage s) const { return expected_.count(s) > 0; }

  std::string inputs_for(Stage s) {
    std::vector<std::string> up;
    std::lock_guard lock(mu_);
    for (Stage d : stage_dependencies(s)) {
      if (expected_.count(d)) up.push_back(outputs_.at(d));
    }
    return chain_digest(up);
  }

  // Runs body as one traced stage. body gets a call-counting backend and
  // returns the stage's outputs digest.
  void stage(const CompanyYearKey& key, Stage s, const std::string& inputs,
             const std::function<std::string(ChatBackend&)>& body) {
    CountingBackend counter(gateway_);
    TraceEvent e;
    e.run_id = run_id_;
    e.key = key;
    e.stage = s;
    e.inputs_digest = inputs;
    e.started_ns = monotonic_ns();
    try {
      e.outputs_digest = body(counter);
    } catch (const std::exception& ex) {
      e.ended_ns = monotonic_ns();
      e.backend_calls = counter.calls();
      e.error = ex.what();
      rec_.emit(e);
      throw StageFailure(s, ex.what());
    }
    e.ended_ns = monotonic_ns();
    e.backend_calls = counter.calls();
    {
      std::lock_guard lock(mu_);
      outputs_[s] = e.outputs_digest;
    }
    rec_.emit(e);
  }

  const PipelineConfig& cfg_;
  const Corpus& corpus_;
  Resources& res_;
  ChatBackend& gateway_;
  const IndustryBaselines& baselines_;
  std::set<Stage> expected_;
  Recorder& rec_;
  const std::string& run_id_;
  const std::string& fingerprint_;
  const PipelineOptions& opts_;

  std::mutex mu_;
  std::map<Stage, std::string> outputs_;
};

KeyOutcome KeyRunner::run(const CompanyYearKey& key) {
  KeyOutcome out;
  out.key = key;
  outputs_.clear();
  const AgentSettings& settings = cfg_.agents;

  try {
    // INGEST
    std::string raw;
    std::optional<std::string> read_error;
    try {
      raw = corpus_.read_filing(key);
    } catch (const std::exception& ex) {
      read_error = ex.what();
    }
    const std::string ingest_inputs =
        read_error ? sha256_hex("missing filing " + key.company_id + "|" + std::to_string(key.fiscal_year))
                   : sha256_hex(raw);
    std::map<std::string, CurrentItem> items;
    stage(key, Stage::INGEST, ingest_inputs, [&](ChatBackend&) {
      if (read_error) throw IoFailure(*read_error);
      items = load_items(raw, key, cfg_);
      if (items.empty()) throw AllItemsMissing("every key item of " + key.label() + " is a stub");
      std::string s;
      for (const auto& [id, ci] : items) s += id + "|" + content_digest(ci.item.body) + "\n";
      return sha256_hex(s);
    });

    // FEATURES
    stage(key, Stage::FEATURES, inputs_for(Stage::FEATURES), [&](ChatBackend&) {
      attach_features(items, key, cfg_, res_.store, *res_.provider);
      return features_digest(items);
    });

    // HISTORY
    HistoryWindow window;
    SimilarityWeights w_business, w_governance;
    stage(key, Stage::HISTORY, inputs_for(Stage::HISTORY), [&](ChatBackend&) {
      window.key = key;
      window.k = cfg_.window_k;
      if (cfg_.mode == HistoryMode::history) {
        window = history_window_for(key, corpus_, cfg_, res_.store, *res_.provider);
      }
      const auto current = features_only(items);
      const auto choice = settings.similarity_vector;
      w_business = compute_similarity_weights(current, window, settings.business_items, choice, cfg_.alpha);
      w_governance = compute_similarity_weights(current, window, settings.governance_items, choice, cfg_.alpha);
      w_business.alpha = w_governance.alpha = cfg_.alpha;
      std::string s = "mode=" + std::string(to_string(cfg_.mode)) + "\n";
      for (const auto& e : window.entries) {
        s += std::to_string(e.key.fiscal_year) + "|" + std::string(to_string(e.grade)) + "|" +
             financial_summary(e.financials) + "\n";
      }
      s += "business\n" + weights_digest(w_business) + "governance\n" + weights_digest(w_governance);
      return sha256_hex(s);
    });

    std::optional<RatingGrade> prior_grade;
    if (const HistoryRecord* last = window.latest()) prior_grade = last->grade;

    AgentContext ctx_b{key, items, window, w_business, std::nullopt, std::nullopt, prior_grade};
    AgentContext ctx_g{key, items, window, w_governance, std::nullopt, std::nullopt, prior_grade};
    AgentContext ctx_f = ctx_b;

    // FRA_QUANT
    if (has(Stage::FRA_QUANT)) {
      stage(key, Stage::FRA_QUANT, inputs_for(Stage::FRA_QUANT), [&](ChatBackend&) {
        const auto fin = corpus_.financials_for(key);
        if (!fin) throw PreconditionViolation("no financials for " + key.company_id + " " +
                                              std::to_string(key.fiscal_year));
        std::optional<FinancialVector> prior;
        if (const HistoryRecord* last = window.latest();
            last && last->key.fiscal_year == key.fiscal_year - 1 && !last->financials.indicators.empty()) {
          prior = last->financials;
        }
        ctx_f.deviations = compute_deviations(*fin, prior, baselines_, cfg_.indicator_schema);
        ctx_f.proposal = make_fra_proposal(*ctx_f.deviations, prior_grade, cfg_.fra_policy);
        return context_digest(ctx_f);
      });
    }

    // BRA, FRA and GRA_INIT are independent
    std::vector<std::future<void>> parallel;
    if (has(Stage::BRA)) {
      parallel.push_back(std::async(std::launch::async, [&] {
        stage(key, Stage::BRA, inputs_for(Stage::BRA), [&](ChatBackend& b) {
          out.bra = run_bra(ctx_b, b, settings);
          return signal_digest(*out.bra);
        });
      }));
    }
    if (has(Stage::FRA)) {
      parallel.push_back(std::async(std::launch::async, [&] {
        stage(key, Stage::FRA, inputs_for(Stage::FRA), [&](ChatBackend& b) {
          out.fra = run_fra(ctx_f, b, settings);
          return signal_digest(*out.fra);
        });
      }));
    }
    if (has(Stage::GRA_INIT)) {
      parallel.push_back(std::async(std::launch::async, [&] {
        stage(key, Stage::GRA_INIT, inputs_for(Stage::GRA_INIT), [&](ChatBackend& b) {
          out.gra_initial = run_gra_initial(ctx_g, b, settings);
          return signal_digest(*out.gra_initial);
        });
      }));
    }
    std::exception_ptr first_error;
    for (auto& f : parallel) {
      try {
        f.get();
      } catch (...) {
        if (!first_error) first_error = std::current_exception();
      }
    }
    if (first_error) std::rethrow_exception(first_error);

    if (has(Stage::CRA)) {
      stage(key, Stage::CRA, inputs_for(Stage::CRA), [&](ChatBackend&) {
        out.cra = fuse_cra(*out.bra, *out.fra, cfg_.fusion).signal;
        return signal_digest(*out.cra);
      });
    }
    if (has(Stage::GRA_ADJ)) {
      stage(key, Stage::GRA_ADJ, inputs_for(Stage::GRA_ADJ), [&](ChatBackend& b) {
        out.gra_adjusted = run_gra_adjust(*out.gra_initial, *out.cra, b, settings);
        return signal_digest(*out.gra_adjusted);
      });
    }
    if (has(Stage::CAA)) {
      stage(key, Stage::CAA, inputs_for(Stage::CAA), [&](ChatBackend& b) {
        CaaInputs in{out.bra, out.fra, out.gra_adjusted, out.cra};
        out.decision = decide_caa(in, cfg_.caa_mode, &b, cfg_.caa_weights, settings);
        return decision_digest(*out.decision);
      });
    }
    if (has(Stage::RRA)) {
      stage(key, Stage::RRA, inputs_for(Stage::RRA), [&](ChatBackend&) {
        out.report = render_report(key, *out.decision, w_business, w_governance, fingerprint_);
        out.report->alpha = cfg_.alpha;
        if (!opts_.out_dir.empty()) {
          const std::string at = opts_.generated_at.empty() ? utc_timestamp() : opts_.generated_at;
          out.report_paths = write_report(*out.report, opts_.out_dir / "reports", at);
        }
        return sha256_hex(report_json(*out.report));
      });
    }

    switch (prediction_source(cfg_.agent_set)) {
      case AgentId::CAA: out.prediction = out.decision->grade; break;
      case AgentId::CRA: out.prediction = out.cra->grade; break;
      case AgentId::GRA: out.prediction = out.gra_initial->grade; break;
      case AgentId::FRA: out.prediction = out.fra->grade; break;
      case AgentId::BRA: out.prediction = out.bra->grade; break;
    }
  } catch (const StageFailure& f) {
    out.failed_stage = f.stage;
    out.error = f.message;
    out.prediction.reset();
  }
  return out;
}

}  // namespace

std::unique_ptr<ChatBackend> make_backend(const PipelineConfig& cfg, const std::filesystem::path& corpus_root) {
  if (cfg.backend.type == "http") {
    HttpChatOptions o;
    o.url = cfg.backend.url;
    o.model = cfg.backend.model;
    o.timeout_ms = cfg.backend.timeout_ms;
    o.max_attempts = cfg.backend.max_attempts;
    return std::make_unique<HttpChatBackend>(o);
  }
  std::vector<MockRule> rules;
  std::filesystem::path p = cfg.backend.rules;
  if (p.is_relative()) p = corpus_root / p;
  if (!cfg.backend.rules.empty() && std::filesystem::exists(p)) rules = MockBackend::parse_rules(read_text(p));
  return std::make_unique<MockBackend>(std::move(rules), cfg.backend.seed);
}

Resources make_resources(const PipelineConfig& cfg, const Corpus& corpus) {
  std::filesystem::path store_path = cfg.features.store;
  if (store_path.is_relative()) store_path = corpus.root / store_path;
  FeatureStore store = std::filesystem::exists(store_path) ? load_store(store_path) : FeatureStore(cfg.dims);
  std::unique_ptr<FeatureProvider> provider;
  if (cfg.features.provider == "lexical") {
    provider = std::make_unique<LexicalProvider>(cfg.dims);
  } else if (cfg.features.provider == "http") {
    HttpProviderOptions o;
    o.base_url = cfg.features.url;
    provider = std::make_unique<HttpProvider>(o);
  } else {
    provider = std::make_unique<FixtureProvider>(store.records());
  }
  return Resources{std::move(store), std::move(provider), make_backend(cfg, corpus.root)};
}

std::vector<Stage> expected_stages(const AgentSet& set) {
  const bool bra = set.count(AgentId::BRA), fra = set.count(AgentId::FRA), gra = set.count(AgentId::GRA),
             cra = set.count(AgentId::CRA), caa = set.count(AgentId::CAA);
  std::vector<Stage> out = {Stage::INGEST, Stage::FEATURES, Stage::HISTORY};
  if (fra) out.push_back(Stage::FRA_QUANT);
  if (bra) out.push_back(Stage::BRA);
  if (fra) out.push_back(Stage::FRA);
  if (gra) out.push_back(Stage::GRA_INIT);
  if (cra) out.push_back(Stage::CRA);
  if (gra && cra) out.push_back(Stage::GRA_ADJ);
  if (caa) {
    out.push_back(Stage::CAA);
    out.push_back(Stage::RRA);
  }
  return out;
}

AgentId prediction_source(const AgentSet& set) {
  for (AgentId id : {AgentId::CAA, AgentId::CRA, AgentId::GRA, AgentId::FRA, AgentId::BRA}) {
    if (set.count(id)) return id;
  }
  throw InvalidArgument("agent set is empty");
}

IndustryBaselines reference_baselines(const Corpus& corpus, int cutoff_year, std::size_t min_support) {
  std::vector<FinancialVector> rows;
  for (const auto& f : corpus.financials) {
    if (f.key.fiscal_year < cutoff_year) rows.push_back(f);
  }
  return compute_baselines(rows, {}, min_support);
}

HistoryWindow history_window_for(const CompanyYearKey& key, const Corpus& corpus, const PipelineConfig& cfg,
                                 FeatureStore& store, FeatureProvider& provider) {
  std::vector<HistoryRecord> records;
  for (const auto& s : corpus.ratings) {
    if (s.key.company_id != key.company_id) continue;
    const int y = s.key.fiscal_year;
    if (y >= key.fiscal_year || y < key.fiscal_year - cfg.window_k) continue;
    HistoryRecord r;
    r.key = s.key;
    r.grade = s.truth;
    if (corpus.has_filing(s.key)) {
      auto items = load_items(corpus.read_filing(s.key), s.key, cfg);
      attach_features(items, s.key, cfg, store, provider);
      r.items = features_only(items);
    }
    if (auto fin = corpus.financials_for(s.key)) r.financials = *fin;
    r.financials.key = s.key;
    records.push_back(std::move(r));
  }
  return build_history_window(records, key, cfg.window_k);
}

PipelineResult run_pipeline(const PipelineConfig& cfg, const Corpus& corpus, Resources& resources,
                            const PipelineOptions& options) {
  cfg.validate();
  PipelineResult result;
  result.config_fingerprint = config_fingerprint(cfg);
  result.expected_stages = expected_stages(cfg.agent_set);
  result.test_set = split_dataset(corpus.ratings, cfg.cutoff_year).test;

  if (options.run_id.empty()) {
    std::string s = result.config_fingerprint;
    for (const auto& t : result.test_set) s += "|" + t.key.company_id + ":" + std::to_string(t.key.fiscal_year);
    result.run_id = sha256_hex(s).substr(0, 16);
  } else {
    result.run_id = options.run_id;
  }

  std::vector<CompanyYearKey> keys;
  for (const auto& t : result.test_set) keys.push_back(t.key);

  TraceSink sink;
  if (!options.out_dir.empty()) {
    TraceHeader h{result.run_id, utc_timestamp(), result.config_fingerprint, keys, result.expected_stages, false};
    result.trace_file = trace_path(options.out_dir, result.run_id);
    sink.open(*result.trace_file, h);
  }
  Recorder recorder(sink.is_open() ? &sink : nullptr);

  const IndustryBaselines baselines = reference_baselines(corpus, cfg.cutoff_year, cfg.min_support);
  Gateway gateway(*resources.backend, cfg.backend.max_in_flight);

  result.outcomes.resize(keys.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      KeyRunner runner(cfg, corpus, resources, gateway, baselines, result.expected_stages, recorder, result.run_id,
                       result.config_fingerprint, options);
      result.outcomes[i] = runner.run(keys[i]);
    }
  };
  std::size_t n_workers = cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers)
                                          : std::max(1u, std::thread::hardware_concurrency());
  n_workers = std::min(n_workers, std::max<std::size_t>(1, keys.size()));
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  for (const auto& o : result.outcomes) {
    if (o.prediction) {
      result.predictions[o.key] = *o.prediction;
    } else {
      result.partial = true;
    }
  }
  result.events = recorder.take();
  std::sort(result.events.begin(), result.events.end(), [](const TraceEvent& a, const TraceEvent& b) {
    if (!(a.key == b.key)) return a.key < b.key;
    return a.started_ns < b.started_ns;
  });
  if (sink.is_open()) {
    sink.finish(result.partial);
    sink.close();
  }
  return result;
}

}  // namespace creditxai
