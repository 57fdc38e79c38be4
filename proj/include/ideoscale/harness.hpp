#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "ideoscale/backends.hpp"
#include "ideoscale/cache.hpp"
#include "ideoscale/config.hpp"
#include "ideoscale/report.hpp"

namespace ideoscale {

/// Injectable side effects of a run. Null members fall back to the real
/// HTTP client, the steady clock and the process environment.
struct RunEnvironment {
  HttpTransport* transport = nullptr;
  Clock* clock = nullptr;
  std::function<const char*(const char*)> getenv{};
  std::ostream* log = nullptr;
  bool write_outputs = true;
};

namespace detail {

class Resources {
public:
  explicit Resources(const RunEnvironment& env) : env_(env) {
    if (!env_.transport) {
      owned_transport_ = std::make_unique<HttplibTransport>();
      env_.transport = owned_transport_.get();
    }
    if (!env_.clock) {
      owned_clock_ = std::make_unique<SteadyClock>();
      env_.clock = owned_clock_.get();
    }
    if (!env_.getenv) env_.getenv = [](const char* n) { return std::getenv(n); };
  }
  const RunEnvironment& env() const noexcept { return env_; }
  void log(const std::string& msg) const {
    if (env_.log) *env_.log << msg << std::endl;
  }

private:
  RunEnvironment env_;
  std::unique_ptr<HttplibTransport> owned_transport_;
  std::unique_ptr<SteadyClock> owned_clock_;
};

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline CoderSource training_source(const ExperimentConfig& cfg) {
  for (auto s : cfg.benchmarks)
    if (s == CoderSource::Expert) return s;
  return cfg.benchmarks.front();
}

/// Economic sentence ids carrying a gold label from `gold`, corpus order.
inline std::vector<std::string> golded_ids(const Corpus& corpus, const GoldLabelSet& gold) {
  std::vector<std::string> out;
  for (const auto* s : corpus.economic_sentences())
    if (gold.find(s->id)) out.push_back(s->id);
  return out;
}

inline std::vector<ClassifyItem> items_excluding(const Corpus& corpus, const std::vector<std::string>& excluded) {
  const std::set<std::string> skip(excluded.begin(), excluded.end());
  std::vector<ClassifyItem> items;
  for (const auto* s : corpus.economic_sentences())
    if (!skip.count(s->id)) items.push_back({s->id, s->text});
  return items;
}

inline std::vector<FineTuneItem> training_items(const Corpus& corpus, const GoldLabelSet& gold,
                                                const std::vector<std::string>& ids) {
  std::vector<FineTuneItem> out;
  for (const auto& id : ids) {
    const auto* s = corpus.find_sentence(id);
    const auto* g = gold.find(id);
    if (!s || !g) throw Error("training set: sentence " + id + " has no gold label");
    out.push_back({s->text, g->label});
  }
  return out;
}

struct Prepared {
  Corpus corpus;
  std::map<CoderSource, GoldLabelSet> gold;
};

inline Prepared prepare(const ExperimentConfig& cfg, const Resources& res, const std::filesystem::path& out_dir) {
  auto parsed = parse_corpus(cfg.corpus_path, cfg.schema());
  res.log("corpus: " + std::to_string(parsed.accepted_rows) + " of " + std::to_string(parsed.input_rows) +
          " rows accepted");
  if (res.env().write_outputs && !parsed.rejections.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream rej(out_dir / "rejections.jsonl", std::ios::trunc);
    write_rejection_report(rej, parsed.rejections);
  }
  Prepared p{std::move(parsed.corpus), {}};
  const CodeMapping mapping;
  for (auto src : cfg.benchmarks) p.gold.emplace(src, gold_label_set(p.corpus, src, mapping, cfg.voting));
  return p;
}

inline const GoldLabelSet& gold_for(std::map<CoderSource, GoldLabelSet>& gold, const Corpus& corpus,
                                    CoderSource src, VotingMode voting) {
  auto it = gold.find(src);
  if (it == gold.end()) it = gold.emplace(src, gold_label_set(corpus, src, CodeMapping{}, voting)).first;
  return it->second;
}

/// Classifies `items` with one backend. Fine-tuned backends are trained
/// first when `train` is given.
inline BackendRun classify_backend(BackendConfig b, const ExperimentConfig& cfg, const Resources& res,
                                   const PredictionCache* cache, const std::vector<ClassifyItem>& items,
                                   const GoldLabelSet* mock_gold, const std::vector<FineTuneItem>* train) {
  const auto t0 = std::chrono::steady_clock::now();
  BackendRun run;
  run.backend_id = b.id;
  run.kind = b.kind;
  if (b.kind == BackendKind::FineTuned && train) {
    res.log(b.id + ": fine-tuning on " + std::to_string(train->size()) + " sentences");
    const auto ft = request_fine_tune(b, *train, *res.env().transport, *res.env().clock, res.env().getenv);
    b.model = ft.model_id;
    run.trained_model = ft.model_id;
  }
  if (b.kind == BackendKind::FineTuned && b.model.empty())
    throw Error("backend " + b.id + ": no trained model id; set model or configure a split");
  ClassifyContext ctx;
  ctx.transport = res.env().transport;
  ctx.clock = res.env().clock;
  ctx.cache = cache;
  ctx.read_cache = cfg.resume;
  ctx.prompts = &cfg.prompts;
  ctx.getenv = res.env().getenv;
  if (mock_gold)
    ctx.gold_lookup = [mock_gold](const std::string& id) -> std::optional<IdeologyClass> {
      const auto* g = mock_gold->find(id);
      return g ? std::optional<IdeologyClass>(g->label) : std::nullopt;
    };
  Classifier classifier(b, ctx);
  run.predictions = classifier.classify(items);
  run.prompt_hash = run.predictions.prompt_hash;
  run.stats = classifier.stats();
  run.seconds = seconds_since(t0);
  res.log(b.id + ": " + std::to_string(run.predictions.count(PredictionStatus::Ok)) + "/" +
          std::to_string(items.size()) + " ok, " + std::to_string(run.stats.requests) + " requests, " +
          std::to_string(run.stats.cache_hits) + " cache hits");
  return run;
}

/// Metrics, exclusions, scores and correlations for the backends already in
/// `report`. Keyness runs only when requested.
inline void assemble(RunReport& report, const Corpus& corpus, const ExperimentConfig& cfg, bool with_scores,
                     bool with_keyness, std::vector<std::string>& stages) {
  std::vector<const PredictionSet*> models;
  for (const auto& b : report.backends) models.push_back(&b.predictions);
  std::vector<const GoldLabelSet*> benchmarks;
  for (auto src : report.benchmarks) benchmarks.push_back(&report.gold.at(src));

  std::vector<MetricsCell> cells;
  report.metrics = metrics_table(models, benchmarks, &cells);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto& c = cells[i];
    const auto* b = report.find_backend(c.model_id);
    report.exclusions.push_back(
        {c.model_id, c.benchmark, b ? b->predictions.items.size() : 0, static_cast<std::size_t>(c.cm.total), c.exclusions});
  }
  stages.push_back("metrics");
  if (!with_scores) return;

  std::map<CoderSource, std::vector<IdeologyScore>> human;
  for (auto src : report.benchmarks) {
    human[src] = human_ideology_scores(human_manifesto_scores(corpus, src));
    report.scores.insert(report.scores.end(), human[src].begin(), human[src].end());
  }
  for (const auto& b : report.backends) {
    auto scores = model_ideology_scores(count_labels(b.predictions, corpus), b.backend_id, cfg.log_base);
    for (auto src : report.benchmarks) {
      auto rows = correlation_report(b.backend_id, scores, src, human[src], corpus, cfg.grouping);
      report.correlations.insert(report.correlations.end(), rows.begin(), rows.end());
    }
    report.scores.insert(report.scores.end(), scores.begin(), scores.end());
  }
  stages.push_back("scaling");
  stages.push_back("correlations");
  if (!with_keyness) return;

  const KeynessCorpus docs(corpus, cfg.keyness.tokenizer);
  for (const auto& b : report.backends) {
    for (auto cls : kAllClasses) {
      try {
        auto rows = keyness_by_class(b.predictions, docs, cls, cfg.keyness);
        for (std::size_t i = 0; i < rows.size(); ++i) report.keyness.push_back({b.backend_id, i + 1, std::move(rows[i])});
      } catch (const Error& e) {
        report.notes.push_back("keyness skipped for " + b.backend_id + "/" + std::string(to_string(cls)) + ": " +
                               e.what());
      }
    }
  }
  stages.push_back("keyness");
}

inline bool any_transport_failure(const RunReport& r) {
  for (const auto& b : r.backends)
    if (b.predictions.count(PredictionStatus::TransportFailed) > 0) return true;
  return false;
}

}  // namespace detail

/// Full pipeline: gold, classification, metrics, scaling, correlations,
/// keyness. Writes every export plus manifest.json into the output dir; a
/// fatal error leaves a "failed" manifest listing the completed stages.
inline RunReport run(const ExperimentConfig& cfg, const RunEnvironment& env = {}) {
  const detail::Resources res(env);
  const auto t_start = std::chrono::steady_clock::now();
  RunReport report;
  report.config_hash = cfg.hash();
  report.corpus_label = cfg.corpus_label;
  report.seed = cfg.seed;
  report.benchmarks = cfg.benchmarks;
  report.started_at = utc_timestamp();
  std::vector<std::string> stages;
  try {
    auto t0 = std::chrono::steady_clock::now();
    auto prep = detail::prepare(cfg, res, cfg.output_dir);
    report.manifestos = prep.corpus.manifestos();
    report.stage_seconds["ingest"] = detail::seconds_since(t0);
    stages.push_back("ingest");
    t0 = std::chrono::steady_clock::now();
    report.gold = prep.gold;
    stages.push_back("gold");

    std::vector<std::string> held_out;
    std::optional<std::vector<FineTuneItem>> train;
    if (cfg.split) {
      const auto src = detail::training_source(cfg);
      const auto& gold = detail::gold_for(prep.gold, prep.corpus, src, cfg.voting);
      auto split = split_training_subset(detail::golded_ids(prep.corpus, gold), cfg.split->n, cfg.split->seed);
      held_out = split.train_ids;
      train = detail::training_items(prep.corpus, gold, split.train_ids);
      split.eval_ids.clear();
      for (const auto& item : detail::items_excluding(prep.corpus, held_out)) split.eval_ids.push_back(item.sentence_id);
      report.split = std::move(split);
    }
    const auto items = detail::items_excluding(prep.corpus, held_out);
    if (items.empty()) throw Error("run: no economic sentences to classify");
    report.stage_seconds["gold"] = detail::seconds_since(t0);

    t0 = std::chrono::steady_clock::now();
    std::optional<PredictionCache> cache;
    if (cfg.cache_dir) cache.emplace(*cfg.cache_dir);
    std::map<CoderSource, const GoldLabelSet*> mock_gold;
    for (const auto& b : cfg.backends)
      if (b.kind == BackendKind::Mock)
        mock_gold[b.mock_source] = &detail::gold_for(prep.gold, prep.corpus, b.mock_source, cfg.voting);
    std::vector<std::future<BackendRun>> futures;
    for (const auto& b : cfg.backends) {
      const GoldLabelSet* mg = b.kind == BackendKind::Mock ? mock_gold.at(b.mock_source) : nullptr;
      futures.push_back(std::async(std::launch::async, [&, b, mg] {
        return detail::classify_backend(b, cfg, res, cache ? &*cache : nullptr, items, mg,
                                        train ? &*train : nullptr);
      }));
    }
    std::exception_ptr failure;
    for (auto& f : futures) {
      try {
        report.backends.push_back(f.get());
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    report.stage_seconds["classify"] = detail::seconds_since(t0);
    stages.push_back("classify");

    t0 = std::chrono::steady_clock::now();
    if (!report.backends.empty()) detail::assemble(report, prep.corpus, cfg, true, cfg.run_keyness, stages);
    report.stage_seconds["analysis"] = detail::seconds_since(t0);
    report.partial = detail::any_transport_failure(report);
    report.finished_at = utc_timestamp();
    report.stage_seconds["total"] = detail::seconds_since(t_start);
    if (env.write_outputs) {
      auto files = export_report(cfg.output_dir, report);
      write_manifest(cfg.output_dir, report.partial ? "partial" : "ok", report.config_hash, stages, files);
    }
    return report;
  } catch (const std::exception& e) {
    if (env.write_outputs) {
      try {
        write_manifest(cfg.output_dir, "failed", report.config_hash, stages, {}, e.what());
      } catch (...) {
      }
    }
    throw;
  }
}

struct SweepPoint {
  std::size_t size = 0;
  std::uint64_t seed = 0;
  RunReport report;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  bool aborted = false;
  std::string error;
};

inline void write_sweep_tables(const std::filesystem::path& dir, const SweepResult& sweep) {
  std::filesystem::create_directories(dir);
  std::ofstream m(dir / "sweep_metrics.tsv", std::ios::trunc);
  m << "size\tconfig_hash\tcorpus\tbackend\tprompt_hash\tbenchmark\tclass\tf1\taccuracy\tprecision\trecall\tdegenerate\n";
  std::ofstream c(dir / "sweep_correlations.tsv", std::ios::trunc);
  c << "size\tconfig_hash\tcorpus\tbackend\tprompt_hash\tbenchmark\tscope\tn\tr\n";
  for (const auto& p : sweep.points) {
    std::ostringstream ms, cs;
    write_metrics_tsv(ms, p.report, false);
    write_correlations_tsv(cs, p.report, false);
    std::istringstream mi(ms.str()), ci(cs.str());
    for (std::string line; std::getline(mi, line);) m << p.size << '\t' << line << '\n';
    for (std::string line; std::getline(ci, line);) c << p.size << '\t' << line << '\n';
  }
}

/// Fine-tunes and evaluates once per training size. Nested mode draws one
/// split of the largest size and trains on its prefixes, evaluating every
/// size on the same complement; independent mode draws each size with its
/// own sub-seed. A service failure stops the sweep but keeps finished sizes.
inline SweepResult sweep_training_size(const ExperimentConfig& cfg, const std::vector<std::size_t>& sizes,
                                       bool nested, const RunEnvironment& env = {}) {
  if (sizes.empty()) throw Error("sweep: no sizes given");
  for (auto n : sizes)
    if (n == 0) throw Error("sweep: size 0 would leave an empty training set");
  if (!cfg.sweep) throw Error("sweep: config has no sweep section");
  const auto& backend = cfg.backend(cfg.sweep->backend);
  if (backend.kind != BackendKind::FineTuned) throw Error("sweep: backend " + backend.id + " cannot be fine-tuned");

  const detail::Resources res(env);
  const auto dir = cfg.output_dir / "sweep";
  auto prep = detail::prepare(cfg, res, cfg.output_dir);
  const auto src = detail::training_source(cfg);
  const auto& gold = prep.gold.at(src);
  const auto eligible = detail::golded_ids(prep.corpus, gold);
  const auto max_n = *std::max_element(sizes.begin(), sizes.end());
  std::optional<CorpusSplit> base;
  if (nested) base = split_training_subset(eligible, max_n, cfg.seed);
  else if (max_n > eligible.size())
    throw Error("sweep: size " + std::to_string(max_n) + " exceeds the " + std::to_string(eligible.size()) +
                " eligible sentences");

  std::optional<PredictionCache> cache;
  if (cfg.cache_dir) cache.emplace(*cfg.cache_dir);
  SweepResult result;
  for (auto n : sizes) {
    SweepPoint point;
    point.size = n;
    CorpusSplit split;
    if (nested) {
      split = *base;
      split.train_ids.resize(n);
      split.requested_n = n;
    } else {
      point.seed = detail::splitmix64(cfg.seed ^ static_cast<std::uint64_t>(n));
      split = split_training_subset(eligible, n, point.seed);
    }
    point.seed = split.seed;
    // Nested sizes share the complement of the largest draw.
    const auto& excluded = nested ? base->train_ids : split.train_ids;
    const auto items = detail::items_excluding(prep.corpus, excluded);
    split.eval_ids.clear();
    for (const auto& it : items) split.eval_ids.push_back(it.sentence_id);

    auto& r = point.report;
    r.config_hash = cfg.hash();
    r.corpus_label = cfg.corpus_label;
    r.seed = cfg.seed;
    r.benchmarks = cfg.benchmarks;
    r.manifestos = prep.corpus.manifestos();
    r.gold = prep.gold;
    r.split = split;
    r.started_at = utc_timestamp();
    try {
      const auto train = detail::training_items(prep.corpus, gold, split.train_ids);
      auto b = backend;
      auto br = detail::classify_backend(b, cfg, res, cache ? &*cache : nullptr, items, nullptr, &train);
      if (br.predictions.count(PredictionStatus::TransportFailed) == br.predictions.items.size())
        throw BackendError("service unavailable while classifying size " + std::to_string(n));
      r.backends.push_back(std::move(br));
      std::vector<std::string> stages;
      detail::assemble(r, prep.corpus, cfg, true, false, stages);
    } catch (const BackendError& e) {
      result.aborted = true;
      result.error = e.what();
      res.log("sweep aborted at size " + std::to_string(n) + ": " + e.what());
      break;
    }
    r.partial = detail::any_transport_failure(r);
    r.finished_at = utc_timestamp();
    if (env.write_outputs) export_report(dir / ("n" + std::to_string(n)), r);
    result.points.push_back(std::move(point));
  }
  if (env.write_outputs) {
    write_sweep_tables(dir, result);
    std::vector<std::string> done;
    for (const auto& p : result.points) done.push_back("size " + std::to_string(p.size));
    write_manifest(dir, result.aborted ? "partial" : "ok", cfg.hash(), done, {"sweep_metrics.tsv", "sweep_correlations.tsv"},
                   result.error);
  }
  return result;
}

struct PromptVariantBlock {
  std::string template_id;
  std::string prompt_hash;
  RunReport report;
};

struct PromptVariantResult {
  std::vector<PromptVariantBlock> blocks;
};

/// Deltas are taken against the first template.
inline void write_prompt_variant_tables(std::ostream& out, const PromptVariantResult& res) {
  out << "template\tprompt_hash\tbenchmark\tmetric\tclass\tvalue\tdelta\n";
  if (res.blocks.empty()) return;
  const auto& ref = res.blocks.front().report;
  for (const auto& b : res.blocks) {
    for (std::size_t i = 0; i < b.report.metrics.size(); ++i) {
      const auto& m = b.report.metrics[i];
      const double d = i < ref.metrics.size() ? m.f1 - ref.metrics[i].f1 : 0.0;
      out << b.template_id << '\t' << b.prompt_hash << '\t' << to_string(m.benchmark) << "\tf1\t" << to_string(m.cls)
          << '\t' << format_number(m.f1) << '\t' << format_number(d) << '\n';
    }
    for (std::size_t i = 0; i < b.report.correlations.size(); ++i) {
      const auto& c = b.report.correlations[i];
      if (c.scope != "overall") continue;
      std::optional<double> d;
      if (i < ref.correlations.size() && c.r && ref.correlations[i].r) d = *c.r - *ref.correlations[i].r;
      out << b.template_id << '\t' << b.prompt_hash << '\t' << to_string(c.benchmark) << "\tr\toverall\t"
          << format_number(c.r) << '\t' << format_number(d) << '\n';
    }
  }
}

/// Runs one backend once per template, yielding a metrics and correlation
/// block for each plus a delta table.
inline PromptVariantResult prompt_variant_run(const ExperimentConfig& cfg, const std::string& backend_id,
                                              const std::vector<std::string>& templates,
                                              const RunEnvironment& env = {}) {
  if (templates.empty()) throw Error("prompt variants: no templates given");
  std::optional<PromptKind> kind;
  for (const auto& t : templates) {
    auto it = cfg.prompts.find(t);
    if (it == cfg.prompts.end()) throw Error("prompt variants: unknown template '" + t + "'");
    if (kind && *kind != it->second.kind) throw Error("prompt variants: templates differ in kind");
    kind = it->second.kind;
  }
  const detail::Resources res(env);
  auto prep = detail::prepare(cfg, res, cfg.output_dir);
  const auto items = detail::items_excluding(prep.corpus, {});
  std::optional<PredictionCache> cache;
  if (cfg.cache_dir) cache.emplace(*cfg.cache_dir);

  PromptVariantResult result;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    auto b = cfg.backend(backend_id);
    b.prompt = templates[i];
    b.validate(cfg.prompts);
    PromptVariantBlock block;
    block.template_id = templates[i];
    auto& r = block.report;
    r.config_hash = cfg.hash();
    r.corpus_label = cfg.corpus_label;
    r.seed = cfg.seed;
    r.benchmarks = cfg.benchmarks;
    r.manifestos = prep.corpus.manifestos();
    r.gold = prep.gold;
    r.started_at = utc_timestamp();
    const GoldLabelSet* mg =
        b.kind == BackendKind::Mock ? &detail::gold_for(prep.gold, prep.corpus, b.mock_source, cfg.voting) : nullptr;
    r.backends.push_back(detail::classify_backend(b, cfg, res, cache ? &*cache : nullptr, items, mg, nullptr));
    block.prompt_hash = r.backends.back().prompt_hash;
    std::vector<std::string> stages;
    detail::assemble(r, prep.corpus, cfg, true, false, stages);
    r.partial = detail::any_transport_failure(r);
    r.finished_at = utc_timestamp();
    if (env.write_outputs)
      export_report(cfg.output_dir / "variants" / (std::to_string(i + 1) + "_" + templates[i]), r);
    result.blocks.push_back(std::move(block));
  }
  if (env.write_outputs) {
    std::filesystem::create_directories(cfg.output_dir / "variants");
    std::ofstream out(cfg.output_dir / "variants" / "prompt_variants.tsv", std::ios::trunc);
    write_prompt_variant_tables(out, result);
  }
  return result;
}

/// Sentence-level metrics of one backend on a corpus it was not trained
/// on. Every row is labelled "transfer:<label>"; benchmarks are those the
/// foreign corpus actually carries.
inline RunReport transfer_eval(const ExperimentConfig& cfg, const BackendConfig& backend,
                               const std::filesystem::path& corpus_path, const SchemaConfig& schema,
                               const std::string& label, const RunEnvironment& env = {}) {
  const detail::Resources res(env);
  auto parsed = parse_corpus(corpus_path, schema);
  const auto& corpus = parsed.corpus;
  const auto items = detail::items_excluding(corpus, {});
  if (items.empty()) throw Error("transfer: corpus " + corpus_path.string() + " has no economic sentences");

  RunReport r;
  r.config_hash = cfg.hash();
  r.corpus_label = "transfer:" + label;
  r.seed = cfg.seed;
  r.manifestos = corpus.manifestos();
  r.started_at = utc_timestamp();
  for (auto src : cfg.benchmarks) {
    auto g = gold_label_set(corpus, src, CodeMapping{}, cfg.voting);
    if (g.size() == 0) continue;
    r.benchmarks.push_back(src);
    r.gold.emplace(src, std::move(g));
  }
  if (r.benchmarks.empty()) throw Error("transfer: corpus " + corpus_path.string() + " has no gold labels");

  std::optional<PredictionCache> cache;
  if (cfg.cache_dir) cache.emplace(*cfg.cache_dir);
  const GoldLabelSet* mg = nullptr;
  if (backend.kind == BackendKind::Mock) mg = &detail::gold_for(r.gold, corpus, backend.mock_source, cfg.voting);
  r.backends.push_back(detail::classify_backend(backend, cfg, res, cache ? &*cache : nullptr, items, mg, nullptr));
  std::vector<std::string> stages;
  detail::assemble(r, corpus, cfg, false, false, stages);
  r.partial = detail::any_transport_failure(r);
  r.finished_at = utc_timestamp();
  if (env.write_outputs) export_report(cfg.output_dir / ("transfer_" + label), r);
  return r;
}

}  // namespace ideoscale
