#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ideoscale/backends.hpp"
#include "ideoscale/corpus.hpp"
#include "ideoscale/gold.hpp"
#include "ideoscale/hash.hpp"
#include "ideoscale/keyness.hpp"
#include "ideoscale/prompts.hpp"
#include "ideoscale/scaling.hpp"

namespace ideoscale {

struct SplitConfig {
  std::size_t n = 0;
  std::uint64_t seed = 0;
};

struct SweepConfig {
  std::vector<std::size_t> sizes;
  std::string backend;
  bool nested = true;
};

struct PromptVariantConfig {
  std::string backend;
  std::vector<std::string> templates;
};

/// A whole experiment, loaded from JSON. Relative paths are resolved
/// against the directory of the config file.
struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::optional<std::filesystem::path> schema_path;
  std::string corpus_label = "primary";
  std::uint64_t seed = 0;
  std::vector<CoderSource> benchmarks{CoderSource::Expert, CoderSource::Crowd};
  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  bool resume = true;
  VotingMode voting = VotingMode::TriClass;
  LogBase log_base = LogBase::Natural;
  Grouping grouping = Grouping::Both;
  KeynessConfig keyness;
  bool run_keyness = true;
  std::map<std::string, PromptTemplate> prompts = builtin_prompts();
  std::vector<BackendConfig> backends;
  std::optional<SplitConfig> split;
  std::optional<SweepConfig> sweep;
  std::optional<PromptVariantConfig> prompt_variants;
  nlohmann::json source = nlohmann::json::object();

  /// Short content hash of the canonical (key-sorted, compact) config JSON.
  std::string hash() const { return short_hash(source.dump()); }

  const BackendConfig& backend(const std::string& id) const {
    for (const auto& b : backends)
      if (b.id == id) return b;
    throw Error("config: unknown backend '" + id + "'");
  }

  SchemaConfig schema() const { return schema_path ? SchemaConfig::load(*schema_path) : SchemaConfig{}; }

  void validate() const {
    if (corpus_path.empty()) throw Error("config: corpus.path is required");
    if (benchmarks.empty()) throw Error("config: at least one benchmark is required");
    std::set<std::string> ids;
    for (const auto& b : backends) {
      if (!ids.insert(b.id).second) throw Error("config: duplicate backend id '" + b.id + "'");
      if (b.id == "expert" || b.id == "crowd") throw Error("config: backend id '" + b.id + "' is reserved");
      b.validate(prompts);
    }
    for (const auto& [id, p] : prompts) p.validate();
    keyness.tokenizer.validate();
    if (keyness.top_n == 0) throw Error("config: keyness.top_n must be >= 1");
    if (split && split->n == 0) throw Error("config: split.n must be >= 1");
    if (sweep) {
      if (sweep->sizes.empty()) throw Error("config: sweep.sizes is empty");
      for (auto n : sweep->sizes)
        if (n == 0) throw Error("config: sweep size 0 would leave an empty training set");
      if (backend(sweep->backend).kind != BackendKind::FineTuned)
        throw Error("config: sweep backend '" + sweep->backend + "' is not a fine_tuned backend");
    }
    if (prompt_variants) {
      const auto& b = backend(prompt_variants->backend);
      if (prompt_variants->templates.empty()) throw Error("config: prompt_variants.templates is empty");
      std::optional<PromptKind> kind;
      for (const auto& t : prompt_variants->templates) {
        auto it = prompts.find(t);
        if (it == prompts.end()) throw Error("config: unknown prompt template '" + t + "'");
        if (kind && *kind != it->second.kind) throw Error("config: prompt variants must share one template kind");
        kind = it->second.kind;
        auto probe = b;
        probe.prompt = t;
        probe.validate(prompts);
      }
    }
  }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

inline std::vector<CoderSource> parse_benchmarks(const nlohmann::json& j) {
  std::vector<CoderSource> out;
  for (const auto& v : j) {
    auto src = parse_source(v.get<std::string>());
    if (!src) throw Error("config: unknown benchmark '" + v.get<std::string>() + "'");
    if (std::find(out.begin(), out.end(), *src) == out.end()) out.push_back(*src);
  }
  return out;
}

}  // namespace detail

inline ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ExperimentConfig c;
  c.source = j;
  try {
    const auto& corpus = j.at("corpus");
    c.corpus_path = detail::resolve(base_dir, corpus.at("path").get<std::string>());
    if (corpus.contains("schema")) c.schema_path = detail::resolve(base_dir, corpus["schema"].get<std::string>());
    c.corpus_label = corpus.value("label", c.corpus_label);
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("benchmarks")) c.benchmarks = detail::parse_benchmarks(j["benchmarks"]);
    c.output_dir = detail::resolve(base_dir, j.value("output_dir", std::string("out")));
    if (j.contains("cache_dir")) c.cache_dir = detail::resolve(base_dir, j["cache_dir"].get<std::string>());
    c.resume = j.value("resume", true);

    const auto voting = j.value("voting", std::string("tri_class"));
    if (voting == "tri_class") c.voting = VotingMode::TriClass;
    else if (voting == "raw_code") c.voting = VotingMode::RawCode;
    else throw Error("config: unknown voting mode '" + voting + "'");

    const auto base = j.value("log_base", std::string("e"));
    if (base == "e" || base == "natural") c.log_base = LogBase::Natural;
    else if (base == "10") c.log_base = LogBase::Ten;
    else throw Error("config: unknown log_base '" + base + "'");

    const auto grouping = j.value("grouping", std::string("both"));
    if (grouping == "overall") c.grouping = Grouping::Overall;
    else if (grouping == "party") c.grouping = Grouping::ByParty;
    else if (grouping == "both") c.grouping = Grouping::Both;
    else throw Error("config: unknown grouping '" + grouping + "'");

    if (j.contains("keyness")) {
      const auto& k = j["keyness"];
      c.run_keyness = k.value("enabled", true);
      auto& tok = c.keyness.tokenizer;
      tok.min_token_length = k.value("min_token_length", tok.min_token_length);
      if (!k.value("stopwords", true)) tok.stopwords.clear();
      if (k.contains("extra_stopwords"))
        for (const auto& w : k["extra_stopwords"]) tok.stopwords.insert(lowercase(w.get<std::string>()));
      tok.compound_threshold = k.value("pmi_threshold", tok.compound_threshold);
      tok.compound_min_count = k.value("min_count", tok.compound_min_count);
      c.keyness.yates = k.value("yates", false);
      c.keyness.top_n = k.value("top_n", c.keyness.top_n);
      const auto ref = k.value("reference", std::string("rest"));
      if (ref == "rest") c.keyness.reference = KeynessReference::Rest;
      else if (ref == "opposite") c.keyness.reference = KeynessReference::Opposite;
      else throw Error("config: unknown keyness reference '" + ref + "'");
    }

    if (j.contains("prompts"))
      for (const auto& p : j["prompts"]) {
        auto t = prompt_from_json(p);
        c.prompts[t.id] = std::move(t);
      }

    if (j.contains("backends"))
      for (const auto& b : j["backends"]) {
        auto cfg = backend_from_json(b);
        if (!cfg.path.empty()) cfg.path = detail::resolve(base_dir, cfg.path).string();
        c.backends.push_back(std::move(cfg));
      }

    if (j.contains("split")) {
      const auto& s = j["split"];
      c.split = SplitConfig{s.at("n").get<std::size_t>(), s.value("seed", c.seed)};
    }
    if (j.contains("sweep")) {
      const auto& s = j["sweep"];
      c.sweep = SweepConfig{s.at("sizes").get<std::vector<std::size_t>>(), s.at("backend").get<std::string>(),
                            s.value("nested", true)};
    }
    if (j.contains("prompt_variants")) {
      const auto& s = j["prompt_variants"];
      c.prompt_variants =
          PromptVariantConfig{s.at("backend").get<std::string>(), s.at("templates").get<std::vector<std::string>>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("config: " + path.string() + ": " + e.what());
  }
  return experiment_from_json(j, std::filesystem::absolute(path).parent_path());
}

}  // namespace ideoscale
