// ideoscale: command-line front end for the evaluation harness.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ideoscale.hpp"

namespace fs = std::filesystem;
using namespace ideoscale;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFatal = 1;
constexpr int kExitPartial = 2;

struct CorpusArgs {
  std::string corpus;
  std::string schema;

  void add(CLI::App* app) {
    app->add_option("--corpus", corpus, "Sentence-level annotation file")->required()->check(CLI::ExistingFile);
    app->add_option("--schema", schema, "Column/value mapping (INI)")->check(CLI::ExistingFile);
  }
  SchemaConfig load_schema() const { return schema.empty() ? SchemaConfig{} : SchemaConfig::load(schema); }
  Corpus load() const {
    auto parsed = parse_corpus(fs::path(corpus), load_schema());
    if (!parsed.rejections.empty())
      std::cerr << parsed.rejections.size() << " row(s) rejected; run `ingest` for the report\n";
    return std::move(parsed.corpus);
  }
};

struct BackendOverrides {
  std::string backend;
  std::string prompt;
  std::optional<std::size_t> batch_size;
  std::optional<unsigned> rate_limit;
  std::string cache_dir;
  bool resume = false;
  bool no_resume = false;

  void add(CLI::App* app, bool backend_required) {
    auto* b = app->add_option("--backend", backend, "Backend id from the config");
    if (backend_required) b->required();
    app->add_option("--prompt", prompt, "Prompt template id");
    app->add_option("--batch-size", batch_size, "Sentences per request")->check(CLI::PositiveNumber);
    app->add_option("--rate-limit", rate_limit, "Requests per minute (0 = unlimited)");
    app->add_option("--cache-dir", cache_dir, "Prediction cache directory");
    app->add_flag("--resume", resume, "Reuse cached predictions");
    app->add_flag("--no-resume", no_resume, "Ignore cached predictions (still refreshes the cache)");
  }

  void apply(ExperimentConfig& cfg) const {
    if (!cache_dir.empty()) cfg.cache_dir = fs::absolute(cache_dir);
    if (resume) cfg.resume = true;
    if (no_resume) cfg.resume = false;
    for (auto& b : cfg.backends) {
      if (!backend.empty() && b.id != backend) continue;
      if (!prompt.empty()) b.prompt = prompt;
      if (batch_size) b.batch_size = *batch_size;
      if (rate_limit) b.rate_limit = *rate_limit;
    }
    if (!backend.empty()) cfg.backend(backend);
    cfg.validate();
  }
};

std::optional<CoderSource> source_arg(const std::string& s) {
  auto src = parse_source(s);
  if (!src) throw Error("unknown benchmark '" + s + "' (expected expert or crowd)");
  return src;
}

std::vector<CoderSource> benchmark_list(const std::vector<std::string>& names) {
  std::vector<CoderSource> out;
  for (const auto& n : names) out.push_back(*source_arg(n));
  return out;
}

int exit_for(const RunReport& r) { return r.partial ? kExitPartial : kExitOk; }

RunReport single_model_report(const Corpus& corpus, const PredictionSet& preds,
                              const std::vector<CoderSource>& benchmarks) {
  RunReport r;
  r.config_hash = "-";
  r.manifestos = corpus.manifestos();
  r.benchmarks = benchmarks;
  for (auto src : benchmarks) r.gold.emplace(src, gold_label_set(corpus, src, CodeMapping{}));
  BackendRun b;
  b.backend_id = preds.model_id;
  b.kind = BackendKind::CachedFile;
  b.prompt_hash = preds.prompt_hash;
  b.predictions = preds;
  r.backends.push_back(std::move(b));
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Economic-ideology classification and scaling harness"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Progress messages on stderr");

  // ingest
  CorpusArgs ingest_args;
  std::string ingest_rejections;
  auto* ingest = app.add_subcommand("ingest", "Parse and validate a corpus");
  ingest_args.add(ingest);
  ingest->add_option("--rejections", ingest_rejections, "Write rejected rows as JSON lines");

  // gold
  CorpusArgs gold_args;
  std::string gold_source = "expert", gold_out, gold_ties, gold_voting = "tri_class";
  auto* gold = app.add_subcommand("gold", "Derive majority gold labels");
  gold_args.add(gold);
  gold->add_option("--source", gold_source, "expert or crowd");
  gold->add_option("--voting", gold_voting, "tri_class or raw_code");
  gold->add_option("-o,--out", gold_out, "Output file (default stdout)");
  gold->add_option("--ties", gold_ties, "Write excluded ties here");

  // classify
  std::string classify_config, classify_out;
  BackendOverrides classify_over;
  auto* classify = app.add_subcommand("classify", "Classify a config's corpus with one backend");
  classify->add_option("--config", classify_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  classify_over.add(classify, true);
  classify->add_option("-o,--out", classify_out, "Predictions file (default stdout)");

  // metrics / scale / correlate / keyness share corpus + predictions
  struct PredArgs {
    CorpusArgs corpus;
    std::string predictions;
    std::string model;
    std::vector<std::string> benchmarks{"expert", "crowd"};
  };
  const auto add_pred_args = [](CLI::App* sub, PredArgs& a) {
    a.corpus.add(sub);
    sub->add_option("--predictions", a.predictions, "Predictions (JSON lines)")->required()->check(CLI::ExistingFile);
    sub->add_option("--model", a.model, "Model id for the output rows");
    sub->add_option("--benchmark", a.benchmarks, "Benchmarks to compare against");
  };
  const auto load_preds = [](const PredArgs& a) {
    const auto id = a.model.empty() ? fs::path(a.predictions).stem().string() : a.model;
    return read_predictions(fs::path(a.predictions), id);
  };

  PredArgs metrics_args;
  auto* metrics = app.add_subcommand("metrics", "Per-class F1, accuracy, precision and recall");
  add_pred_args(metrics, metrics_args);

  PredArgs scale_args;
  std::string scale_base = "e";
  auto* scale = app.add_subcommand("scale", "Manifesto log-odds positions");
  add_pred_args(scale, scale_args);
  scale->add_option("--log-base", scale_base, "e or 10");

  PredArgs corr_args;
  std::string corr_grouping = "both";
  auto* correlate = app.add_subcommand("correlate", "Correlate model and human manifesto positions");
  add_pred_args(correlate, corr_args);
  correlate->add_option("--grouping", corr_grouping, "overall, party or both");

  PredArgs key_args;
  std::string key_class = "all", key_reference = "rest";
  std::size_t key_top = 30;
  bool key_yates = false;
  auto* keyness_cmd = app.add_subcommand("keyness", "Chi-squared keyness of predicted classes");
  add_pred_args(keyness_cmd, key_args);
  keyness_cmd->add_option("--class", key_class, "left, neutral, right or all");
  keyness_cmd->add_option("--reference", key_reference, "rest or opposite");
  keyness_cmd->add_option("--top", key_top, "Rows per class")->check(CLI::PositiveNumber);
  keyness_cmd->add_flag("--yates", key_yates, "Apply the continuity correction");

  // run
  std::string run_config, run_out;
  BackendOverrides run_over;
  auto* run_cmd = app.add_subcommand("run", "Full pipeline from a config");
  run_cmd->add_option("--config", run_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--out", run_out, "Override output directory");
  run_over.add(run_cmd, false);

  // sweep
  std::string sweep_config;
  std::vector<std::size_t> sweep_sizes;
  bool sweep_independent = false;
  auto* sweep = app.add_subcommand("sweep", "Fine-tune at several training-set sizes");
  sweep->add_option("--config", sweep_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--sizes", sweep_sizes, "Training sizes (default from config)");
  sweep->add_flag("--independent", sweep_independent, "Independent draws instead of nested subsets");

  // prompts
  std::string prompts_config, prompts_show, prompts_variants_backend;
  std::vector<std::string> prompts_render, prompts_variants;
  auto* prompts = app.add_subcommand("prompts", "List, render or compare prompt templates");
  prompts->add_option("--config", prompts_config, "Experiment config with custom templates")->check(CLI::ExistingFile);
  prompts->add_option("--show", prompts_show, "Print the template body and hash");
  prompts->add_option("--render", prompts_render, "Render --show with these texts");
  prompts->add_option("--compare", prompts_variants, "Run these templates through --backend");
  prompts->add_option("--backend", prompts_variants_backend, "Backend used by --compare");

  // transfer
  std::string transfer_config, transfer_label = "foreign", transfer_model;
  CorpusArgs transfer_corpus;
  BackendOverrides transfer_over;
  auto* transfer = app.add_subcommand("transfer", "Evaluate a backend on another corpus");
  transfer->add_option("--config", transfer_config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  transfer_corpus.add(transfer);
  transfer_over.add(transfer, true);
  transfer->add_option("--label", transfer_label, "Provenance label for output rows");
  transfer->add_option("--model", transfer_model, "Trained model id (fine_tuned backends)");

  // report
  std::string report_dir;
  bool report_plot = false;
  auto* report = app.add_subcommand("report", "Print or chart an output directory");
  report->add_option("--dir", report_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);
  report->add_flag("--plot", report_plot, "Write SVG charts into <dir>/plots");

  CLI11_PARSE(app, argc, argv);

  std::ostream* log = verbose ? &std::cerr : nullptr;
  RunEnvironment env;
  env.log = log;

  try {
    if (*ingest) {
      auto parsed = parse_corpus(fs::path(ingest_args.corpus), ingest_args.load_schema());
      const auto& c = parsed.corpus;
      std::cout << "rows: " << parsed.input_rows << " read, " << parsed.accepted_rows << " accepted, "
                << parsed.rejections.size() << " rejected\n"
                << "manifestos: " << c.manifestos().size() << "\nsentences: " << c.sentences().size()
                << " (" << c.economic_sentences().size() << " economic)\nannotations: " << c.annotations().size()
                << '\n';
      if (!ingest_rejections.empty()) {
        std::ofstream out(ingest_rejections);
        write_rejection_report(out, parsed.rejections);
      } else {
        write_rejection_report(std::cerr, parsed.rejections);
      }
      return kExitOk;
    }

    if (*gold) {
      const auto corpus = gold_args.load();
      const auto mode = gold_voting == "raw_code" ? VotingMode::RawCode : VotingMode::TriClass;
      if (gold_voting != "raw_code" && gold_voting != "tri_class") throw Error("unknown voting mode " + gold_voting);
      const auto set = gold_label_set(corpus, *source_arg(gold_source), CodeMapping{}, mode);
      if (gold_out.empty()) {
        write_gold_labels(std::cout, set);
      } else {
        std::ofstream out(gold_out);
        write_gold_labels(out, set);
      }
      if (!gold_ties.empty()) {
        std::ofstream out(gold_ties);
        write_gold_ties(out, set);
      }
      std::cerr << set.labels.size() << " labelled, " << set.ties.size() << " ties excluded, " << set.uncoded
                << " uncoded\n";
      return kExitOk;
    }

    if (*classify) {
      auto cfg = load_experiment(classify_config);
      classify_over.apply(cfg);
      auto one = cfg;
      one.backends = {cfg.backend(classify_over.backend)};
      one.run_keyness = false;
      env.write_outputs = false;
      const auto r = ideoscale::run(one, env);
      const auto& preds = r.backends.front().predictions;
      if (classify_out.empty()) {
        write_predictions(std::cout, preds);
      } else {
        std::ofstream out(classify_out);
        write_predictions(out, preds);
      }
      return exit_for(r);
    }

    if (*metrics) {
      const auto corpus = metrics_args.corpus.load();
      auto r = single_model_report(corpus, load_preds(metrics_args), benchmark_list(metrics_args.benchmarks));
      std::vector<std::string> stages;
      detail::assemble(r, corpus, ExperimentConfig{}, false, false, stages);
      write_metrics_tsv(std::cout, r);
      write_exclusions_tsv(std::cerr, r);
      return kExitOk;
    }

    if (*scale) {
      const auto corpus = scale_args.corpus.load();
      const auto preds = load_preds(scale_args);
      const auto base = scale_base == "10" ? LogBase::Ten : LogBase::Natural;
      auto r = single_model_report(corpus, preds, benchmark_list(scale_args.benchmarks));
      for (auto src : r.benchmarks) {
        auto h = human_ideology_scores(human_manifesto_scores(corpus, src));
        r.scores.insert(r.scores.end(), h.begin(), h.end());
      }
      auto m = model_ideology_scores(count_labels(preds, corpus), preds.model_id, base);
      r.scores.insert(r.scores.end(), m.begin(), m.end());
      write_scores_tsv(std::cout, r);
      return kExitOk;
    }

    if (*correlate) {
      const auto corpus = corr_args.corpus.load();
      ExperimentConfig cfg;
      cfg.grouping = corr_grouping == "overall" ? Grouping::Overall
                     : corr_grouping == "party" ? Grouping::ByParty
                                                : Grouping::Both;
      auto r = single_model_report(corpus, load_preds(corr_args), benchmark_list(corr_args.benchmarks));
      std::vector<std::string> stages;
      detail::assemble(r, corpus, cfg, true, false, stages);
      write_correlations_tsv(std::cout, r);
      return kExitOk;
    }

    if (*keyness_cmd) {
      const auto corpus = key_args.corpus.load();
      const auto preds = load_preds(key_args);
      KeynessConfig kc;
      kc.top_n = key_top;
      kc.yates = key_yates;
      if (key_reference == "opposite") kc.reference = KeynessReference::Opposite;
      else if (key_reference != "rest") throw Error("unknown reference " + key_reference);
      std::vector<IdeologyClass> classes;
      if (key_class == "all") {
        classes.assign(kAllClasses.begin(), kAllClasses.end());
      } else {
        auto cls = parse_class(key_class);
        if (!cls) throw Error("unknown class " + key_class);
        classes.push_back(*cls);
      }
      RunReport r = single_model_report(corpus, preds, {});
      const KeynessCorpus docs(corpus, kc.tokenizer);
      for (auto cls : classes) {
        auto rows = keyness_by_class(preds, docs, cls, kc);
        for (std::size_t i = 0; i < rows.size(); ++i) r.keyness.push_back({preds.model_id, i + 1, rows[i]});
      }
      write_keyness_tsv(std::cout, r);
      return kExitOk;
    }

    if (*run_cmd) {
      auto cfg = load_experiment(run_config);
      run_over.apply(cfg);
      if (!run_out.empty()) cfg.output_dir = fs::absolute(run_out);
      const auto r = ideoscale::run(cfg, env);
      write_summary(std::cout, r);
      return exit_for(r);
    }

    if (*sweep) {
      const auto cfg = load_experiment(sweep_config);
      if (!cfg.sweep) throw Error("config has no sweep section");
      const auto sizes = sweep_sizes.empty() ? cfg.sweep->sizes : sweep_sizes;
      const bool nested = sweep_independent ? false : cfg.sweep->nested;
      const auto res = sweep_training_size(cfg, sizes, nested, env);
      for (const auto& p : res.points) {
        std::cout << "size " << p.size << ":\n";
        for (const auto& m : p.report.metrics)
          std::cout << "  " << to_string(m.benchmark) << ' ' << to_string(m.cls) << " F1 " << format_number(m.f1)
                    << '\n';
      }
      if (res.aborted) {
        std::cerr << "sweep aborted: " << res.error << '\n';
        return kExitPartial;
      }
      return kExitOk;
    }

    if (*prompts) {
      std::optional<ExperimentConfig> cfg;
      if (!prompts_config.empty()) cfg = load_experiment(prompts_config);
      const auto catalog = cfg ? cfg->prompts : builtin_prompts();
      if (!prompts_variants.empty()) {
        if (!cfg) throw Error("--compare needs --config");
        if (prompts_variants_backend.empty()) throw Error("--compare needs --backend");
        const auto res = prompt_variant_run(*cfg, prompts_variants_backend, prompts_variants, env);
        write_prompt_variant_tables(std::cout, res);
        for (const auto& b : res.blocks)
          if (b.report.partial) return kExitPartial;
        return kExitOk;
      }
      if (!prompts_show.empty()) {
        auto it = catalog.find(prompts_show);
        if (it == catalog.end()) throw Error("unknown prompt " + prompts_show);
        const auto& t = it->second;
        if (!prompts_render.empty()) {
          std::cout << render_prompt(t, prompts_render) << '\n';
        } else {
          std::cout << "id: " << t.id << "\nkind: " << to_string(t.kind) << "\nhash: " << t.hash() << "\n\n"
                    << t.body << '\n';
        }
        return kExitOk;
      }
      for (const auto& [id, t] : catalog) std::cout << id << '\t' << to_string(t.kind) << '\t' << t.hash() << '\n';
      return kExitOk;
    }

    if (*transfer) {
      auto cfg = load_experiment(transfer_config);
      transfer_over.apply(cfg);
      auto b = cfg.backend(transfer_over.backend);
      if (!transfer_model.empty()) b.model = transfer_model;
      const auto r = transfer_eval(cfg, b, transfer_corpus.corpus, transfer_corpus.load_schema(), transfer_label, env);
      write_metrics_tsv(std::cout, r);
      return exit_for(r);
    }

    if (*report) {
      const fs::path dir(report_dir);
      if (report_plot) {
        for (const auto& f : plot_report(dir)) std::cout << f << '\n';
        return kExitOk;
      }
      std::ifstream in(dir / "summary.txt");
      if (!in) throw Error("no summary.txt in " + dir.string());
      std::cout << in.rdbuf();
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFatal;
  }
  return kExitFatal;
}
