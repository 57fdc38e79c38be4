#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ideoscale/backends.hpp"
#include "ideoscale/corpus.hpp"
#include "ideoscale/gold.hpp"
#include "ideoscale/keyness.hpp"
#include "ideoscale/metrics.hpp"
#include "ideoscale/scaling.hpp"
#include "ideoscale/stopwords.hpp"

namespace ideoscale {

/// Fixed six-decimal rendering shared by every exported table; negative zero
/// prints as zero so reruns stay byte-identical.
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string format_number(const std::optional<double>& v) {
  return v ? format_number(*v) : std::string("undefined");
}

struct BackendRun {
  std::string backend_id;
  BackendKind kind = BackendKind::Mock;
  std::string prompt_hash;
  PredictionSet predictions;
  ClassifyStats stats;
  double seconds = 0.0;
  std::string trained_model;  // fine_tuned runs that trained inside this run
};

struct KeynessEntry {
  std::string backend_id;
  std::size_t rank = 0;  // 1-based within (backend, class)
  KeynessRow row;
};

struct ExclusionRow {
  std::string backend_id;
  CoderSource benchmark = CoderSource::Expert;
  std::size_t predictions = 0;
  std::size_t evaluated = 0;
  Exclusions exclusions;
};

/// Everything one run produced. Table rows are traceable through the config
/// hash, the backend id and that backend's prompt hash.
struct RunReport {
  std::string config_hash;
  std::string corpus_label = "primary";
  std::uint64_t seed = 0;
  std::vector<Manifesto> manifestos;
  std::vector<CoderSource> benchmarks;
  std::map<CoderSource, GoldLabelSet> gold;
  std::vector<BackendRun> backends;
  std::vector<ClassMetrics> metrics;
  std::vector<ExclusionRow> exclusions;
  std::vector<IdeologyScore> scores;
  std::vector<CorrelationReport> correlations;
  std::vector<KeynessEntry> keyness;
  std::vector<std::string> notes;
  std::optional<CorpusSplit> split;
  bool partial = false;
  std::map<std::string, double> stage_seconds;
  std::string started_at;
  std::string finished_at;

  const BackendRun* find_backend(const std::string& id) const {
    for (const auto& b : backends)
      if (b.backend_id == id) return &b;
    return nullptr;
  }

  std::string prompt_hash_of(const std::string& source_id) const {
    const auto* b = find_backend(source_id);
    return b && !b->prompt_hash.empty() ? b->prompt_hash : std::string("-");
  }
};

inline void write_metrics_tsv(std::ostream& out, const RunReport& r, bool header = true) {
  if (header) out << "config_hash\tcorpus\tbackend\tprompt_hash\tbenchmark\tclass\tf1\taccuracy\tprecision\trecall\tdegenerate\n";
  for (const auto& m : r.metrics)
    out << r.config_hash << '\t' << r.corpus_label << '\t' << m.model_id << '\t' << r.prompt_hash_of(m.model_id)
        << '\t' << to_string(m.benchmark) << '\t' << to_string(m.cls) << '\t' << format_number(m.f1) << '\t'
        << format_number(m.accuracy) << '\t' << format_number(m.precision) << '\t' << format_number(m.recall)
        << '\t' << (m.degenerate ? "yes" : "no") << '\n';
}

inline void write_exclusions_tsv(std::ostream& out, const RunReport& r, bool header = true) {
  if (header)
    out << "config_hash\tcorpus\tbackend\tprompt_hash\tbenchmark\tpredictions\tevaluated\tno_gold\tparse_failed\t"
           "transport_failed\n";
  for (const auto& e : r.exclusions)
    out << r.config_hash << '\t' << r.corpus_label << '\t' << e.backend_id << '\t' << r.prompt_hash_of(e.backend_id)
        << '\t' << to_string(e.benchmark) << '\t' << e.predictions << '\t' << e.evaluated << '\t'
        << e.exclusions.no_gold << '\t' << e.exclusions.parse_failed << '\t' << e.exclusions.transport_failed
        << '\n';
}

/// Long format: one row per (source, manifesto); humans use source ids
/// "expert" and "crowd".
inline void write_scores_tsv(std::ostream& out, const RunReport& r, bool header = true) {
  std::map<std::string, const Manifesto*> by_id;
  for (const auto& m : r.manifestos) by_id.emplace(m.id, &m);
  if (header) out << "config_hash\tcorpus\tsource\tprompt_hash\tmanifesto\tparty\tyear\traw\tz\n";
  for (const auto& s : r.scores) {
    const auto* m = by_id.count(s.manifesto_id) ? by_id.at(s.manifesto_id) : nullptr;
    out << r.config_hash << '\t' << r.corpus_label << '\t' << s.source_id << '\t' << r.prompt_hash_of(s.source_id)
        << '\t' << s.manifesto_id << '\t' << (m ? m->party : "") << '\t' << (m ? std::to_string(m->year) : "")
        << '\t' << format_number(s.raw) << '\t' << format_number(s.z) << '\n';
  }
}

inline void write_correlations_tsv(std::ostream& out, const RunReport& r, bool header = true) {
  if (header) out << "config_hash\tcorpus\tbackend\tprompt_hash\tbenchmark\tscope\tn\tr\n";
  for (const auto& c : r.correlations)
    out << r.config_hash << '\t' << r.corpus_label << '\t' << c.model_id << '\t' << r.prompt_hash_of(c.model_id)
        << '\t' << to_string(c.benchmark) << '\t' << c.scope << '\t' << c.n << '\t' << format_number(c.r) << '\n';
}

inline void write_keyness_tsv(std::ostream& out, const RunReport& r, bool header = true) {
  if (header)
    out << "config_hash\tcorpus\tbackend\tprompt_hash\tclass\trank\tfeature\tchi2\ttarget_count\treference_count\t"
           "target_total\treference_total\n";
  for (const auto& k : r.keyness)
    out << r.config_hash << '\t' << r.corpus_label << '\t' << k.backend_id << '\t' << r.prompt_hash_of(k.backend_id)
        << '\t' << (k.row.target_class ? to_string(*k.row.target_class) : "-") << '\t' << k.rank << '\t'
        << k.row.feature << '\t' << format_number(k.row.chi2) << '\t' << k.row.target_count << '\t'
        << k.row.reference_count << '\t' << k.row.target_total << '\t' << k.row.reference_total << '\n';
}

/// Plain-text overview; contains no timestamps.
inline void write_summary(std::ostream& out, const RunReport& r) {
  out << "config " << r.config_hash << ", corpus " << r.corpus_label << ", seed " << r.seed << '\n';
  if (r.split)
    out << "split: " << r.split->train_ids.size() << " training sentences held out, " << r.split->eval_ids.size()
        << " evaluated\n";
  for (const auto& [src, g] : r.gold)
    out << "gold " << to_string(src) << ": " << g.labels.size() << " labelled, " << g.ties.size() << " ties, "
        << g.uncoded << " uncoded\n";
  out << '\n';
  for (const auto& b : r.backends) {
    out << b.backend_id << " (" << to_string(b.kind) << ", prompt " << (b.prompt_hash.empty() ? "-" : b.prompt_hash)
        << "): " << b.predictions.count(PredictionStatus::Ok) << " ok, "
        << b.predictions.count(PredictionStatus::ParseFailed) << " parse_failed, "
        << b.predictions.count(PredictionStatus::TransportFailed) << " transport_failed\n";
    for (const auto& m : r.metrics) {
      if (m.model_id != b.backend_id) continue;
      out << "  " << std::left << std::setw(7) << to_string(m.benchmark) << std::setw(8) << to_string(m.cls)
          << "F1 " << format_number(m.f1) << "  acc " << format_number(m.accuracy) << "  P "
          << format_number(m.precision) << "  R " << format_number(m.recall) << (m.degenerate ? "  (degenerate)" : "")
          << '\n';
    }
    for (const auto& c : r.correlations) {
      if (c.model_id != b.backend_id || c.scope != "overall") continue;
      out << "  r vs " << to_string(c.benchmark) << ": " << format_number(c.r) << " (n=" << c.n << ")\n";
    }
  }
  if (!r.notes.empty()) {
    out << "\nnotes:\n";
    for (const auto& n : r.notes) out << "  " << n << '\n';
  }
  if (r.partial) out << "\nresult is partial: some predictions failed in transport\n";
}

inline nlohmann::json run_metadata(const RunReport& r) {
  nlohmann::json backends = nlohmann::json::array();
  for (const auto& b : r.backends)
    backends.push_back({{"id", b.backend_id},
                        {"kind", std::string(to_string(b.kind))},
                        {"prompt_hash", b.prompt_hash},
                        {"requests", b.stats.requests},
                        {"retries", b.stats.retries},
                        {"cache_hits", b.stats.cache_hits},
                        {"seconds", b.seconds},
                        {"trained_model", b.trained_model},
                        {"temperature", 0}});
  return {{"config_hash", r.config_hash},
          {"corpus", r.corpus_label},
          {"seed", r.seed},
          {"started_at", r.started_at},
          {"finished_at", r.finished_at},
          {"stage_seconds", r.stage_seconds},
          {"stopword_list", std::string(kStopwordListVersion)},
          {"partial", r.partial},
          {"backends", backends}};
}

namespace detail {
template <class Fn>
void write_file(const std::filesystem::path& path, std::vector<std::string>& written, Fn&& fn) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw Error("report: cannot write " + path.string());
  fn(out);
  if (!out) throw Error("report: write failed for " + path.string());
  written.push_back(path.filename().string());
}
}  // namespace detail

/// Writes every table of `r` into `dir`; returns the file names written.
inline std::vector<std::string> export_report(const std::filesystem::path& dir, const RunReport& r) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  for (const auto& [src, g] : r.gold) {
    detail::write_file(dir / ("gold_" + std::string(to_string(src)) + ".tsv"), written,
                       [&](std::ostream& o) { write_gold_labels(o, g); });
    detail::write_file(dir / ("gold_ties_" + std::string(to_string(src)) + ".tsv"), written,
                       [&](std::ostream& o) { write_gold_ties(o, g); });
  }
  if (!r.backends.empty()) {
    std::filesystem::create_directories(dir / "predictions");
    for (const auto& b : r.backends) {
      std::ofstream out(dir / "predictions" / (b.backend_id + ".jsonl"), std::ios::trunc | std::ios::binary);
      if (!out) throw Error("report: cannot write predictions for " + b.backend_id);
      write_predictions(out, b.predictions);
      written.push_back("predictions/" + b.backend_id + ".jsonl");
    }
  }
  detail::write_file(dir / "metrics.tsv", written, [&](std::ostream& o) { write_metrics_tsv(o, r); });
  detail::write_file(dir / "exclusions.tsv", written, [&](std::ostream& o) { write_exclusions_tsv(o, r); });
  detail::write_file(dir / "scores.tsv", written, [&](std::ostream& o) { write_scores_tsv(o, r); });
  detail::write_file(dir / "correlations.tsv", written, [&](std::ostream& o) { write_correlations_tsv(o, r); });
  detail::write_file(dir / "keyness.tsv", written, [&](std::ostream& o) { write_keyness_tsv(o, r); });
  detail::write_file(dir / "summary.txt", written, [&](std::ostream& o) { write_summary(o, r); });
  detail::write_file(dir / "run_metadata.json", written,
                     [&](std::ostream& o) { o << run_metadata(r).dump(2) << '\n'; });
  return written;
}

/// Status file written at the end of every run, including failed ones.
inline void write_manifest(const std::filesystem::path& dir, std::string_view status, const std::string& config_hash,
                           const std::vector<std::string>& completed_stages, const std::vector<std::string>& files,
                           const std::string& error = {}) {
  std::filesystem::create_directories(dir);
  nlohmann::json j{{"status", status},
                   {"config_hash", config_hash},
                   {"completed_stages", completed_stages},
                   {"files", files}};
  if (!error.empty()) j["error"] = error;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  out << j.dump(2) << '\n';
}

}  // namespace ideoscale
