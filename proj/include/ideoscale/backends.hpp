#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ideoscale/cache.hpp"
#include "ideoscale/prediction.hpp"
#include "ideoscale/prompts.hpp"
#include "ideoscale/rate_limiter.hpp"
#include "ideoscale/response_parser.hpp"
#include "ideoscale/transport.hpp"

namespace ideoscale {

enum class BackendKind { ChatCompletion, BatchGenerative, NliZeroShot, FineTuned, CachedFile, Mock };

inline std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::ChatCompletion: return "chat_completion";
    case BackendKind::BatchGenerative: return "batch_generative";
    case BackendKind::NliZeroShot: return "nli_zero_shot";
    case BackendKind::FineTuned: return "fine_tuned";
    case BackendKind::CachedFile: return "cached_file";
    case BackendKind::Mock: return "mock";
  }
  return "?";
}

inline BackendKind parse_backend_kind(std::string_view s) {
  if (s == "chat_completion") return BackendKind::ChatCompletion;
  if (s == "batch_generative") return BackendKind::BatchGenerative;
  if (s == "nli_zero_shot") return BackendKind::NliZeroShot;
  if (s == "fine_tuned") return BackendKind::FineTuned;
  if (s == "cached_file") return BackendKind::CachedFile;
  if (s == "mock") return BackendKind::Mock;
  throw Error("backend: unknown kind '" + std::string(s) + "'");
}

struct FineTuneParams {
  int epochs = 3;
  double learning_rate = 2e-5;
  int max_sequence_length = 128;
  std::uint64_t seed = 0;
};

/// Connection and batching settings for one model endpoint. Credentials are
/// never stored here, only the name of the environment variable holding them.
struct BackendConfig {
  std::string id;
  BackendKind kind = BackendKind::Mock;
  std::string endpoint_url;  // full URL for generative kinds, service base URL otherwise
  std::string model;         // model name; trained model id for fine_tuned
  std::string base_model;    // fine_tuned: checkpoint that training jobs start from
  std::string auth_token_env_var;
  std::size_t batch_size = 1;
  unsigned max_retries = 3;
  unsigned rate_limit = 0;  // requests per minute, 0 = unlimited
  unsigned timeout_seconds = 60;
  unsigned max_parallel = 1;
  std::chrono::milliseconds initial_backoff{1000};
  std::string prompt;  // PromptTemplate id
  std::vector<std::string> candidate_labels;  // Left, Neutral, Right order
  std::string response_path = "choices.0.message.content";
  std::string path;  // cached_file source
  CoderSource mock_source = CoderSource::Expert;
  FineTuneParams fine_tune;
  std::chrono::milliseconds poll_interval{5000};
  unsigned max_polls = 720;

  bool networked() const noexcept {
    return kind != BackendKind::CachedFile && kind != BackendKind::Mock;
  }

  void validate(const std::map<std::string, PromptTemplate>& prompts) const {
    if (id.empty()) throw Error("backend: missing id");
    if (batch_size < 1) throw Error("backend " + id + ": batch_size must be >= 1");
    const bool nli = kind == BackendKind::NliZeroShot;
    if (nli != !candidate_labels.empty())
      throw Error("backend " + id + ": candidate_labels must be set exactly for nli_zero_shot backends");
    if (nli && candidate_labels.size() != 3)
      throw Error("backend " + id + ": candidate_labels needs exactly three strings");
    if (networked() && endpoint_url.empty()) throw Error("backend " + id + ": missing endpoint_url");
    if (kind == BackendKind::CachedFile && path.empty()) throw Error("backend " + id + ": missing path");
    if (kind == BackendKind::ChatCompletion || kind == BackendKind::BatchGenerative || nli) {
      auto it = prompts.find(prompt);
      if (it == prompts.end()) throw Error("backend " + id + ": unknown prompt '" + prompt + "'");
      const auto pk = it->second.kind;
      if (nli != (pk == PromptKind::NliHypothesis))
        throw Error("backend " + id + ": prompt kind " + std::string(to_string(pk)) + " does not fit backend kind");
      if (pk == PromptKind::SingleJson && batch_size != 1)
        throw Error("backend " + id + ": single_json prompts require batch_size 1");
    } else if (!prompt.empty() && !prompts.count(prompt)) {
      throw Error("backend " + id + ": unknown prompt '" + prompt + "'");
    }
  }
};

inline BackendConfig backend_from_json(const nlohmann::json& j) {
  BackendConfig b;
  b.id = j.at("id").get<std::string>();
  b.kind = parse_backend_kind(j.at("kind").get<std::string>());
  b.endpoint_url = j.value("endpoint_url", std::string());
  b.model = j.value("model", std::string());
  b.base_model = j.value("base_model", std::string());
  b.auth_token_env_var = j.value("auth_token_env_var", std::string());
  b.batch_size = j.value("batch_size", b.kind == BackendKind::BatchGenerative ? std::size_t{20} : std::size_t{1});
  b.max_retries = j.value("max_retries", 3u);
  b.rate_limit = j.value("rate_limit", 0u);
  b.timeout_seconds = j.value("timeout", 60u);
  b.max_parallel = std::max(1u, j.value("max_parallel", 1u));
  b.initial_backoff = std::chrono::milliseconds(j.value("initial_backoff_ms", 1000));
  b.prompt = j.value("prompt", std::string());
  if (j.contains("candidate_labels")) b.candidate_labels = j["candidate_labels"].get<std::vector<std::string>>();
  b.response_path = j.value("response_path", b.response_path);
  b.path = j.value("path", std::string());
  if (j.contains("mock_source")) {
    auto src = parse_source(j["mock_source"].get<std::string>());
    if (!src) throw Error("backend " + b.id + ": unknown mock_source");
    b.mock_source = *src;
  }
  if (j.contains("fine_tune")) {
    const auto& f = j["fine_tune"];
    b.fine_tune.epochs = f.value("epochs", b.fine_tune.epochs);
    b.fine_tune.learning_rate = f.value("learning_rate", b.fine_tune.learning_rate);
    b.fine_tune.max_sequence_length = f.value("max_sequence_length", b.fine_tune.max_sequence_length);
    b.fine_tune.seed = f.value("seed", b.fine_tune.seed);
  }
  b.poll_interval = std::chrono::milliseconds(j.value("poll_interval_ms", 5000));
  b.max_polls = j.value("max_polls", 720u);
  return b;
}

struct ClassifyItem {
  std::string sentence_id;
  std::string text;
};

/// Everything a backend call needs besides its config. The gold lookup
/// feeds mock backends; `read_cache` false forces fresh requests while
/// still refreshing the cache.
struct ClassifyContext {
  HttpTransport* transport = nullptr;
  Clock* clock = nullptr;
  const PredictionCache* cache = nullptr;
  bool read_cache = true;
  const std::map<std::string, PromptTemplate>* prompts = nullptr;
  std::function<std::optional<IdeologyClass>(const std::string&)> gold_lookup;
  std::function<const char*(const char*)> getenv = [](const char* name) { return std::getenv(name); };
};

struct ClassifyStats {
  std::size_t requests = 0;
  std::size_t retries = 0;
  std::size_t cache_hits = 0;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Walks a dotted path ("choices.0.message.content") through a JSON value.
inline std::optional<std::string> extract_path(const nlohmann::json& root, std::string_view path) {
  const nlohmann::json* node = &root;
  std::size_t start = 0;
  while (start <= path.size() && !path.empty()) {
    const auto dot = path.find('.', start);
    const std::string part(path.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start));
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        return std::nullopt;
      }
      if (idx >= node->size()) return std::nullopt;
      node = &(*node)[idx];
    } else if (node->is_object() && node->contains(part)) {
      node = &(*node)[part];
    } else {
      return std::nullopt;
    }
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  if (node->is_string()) return node->get<std::string>();
  return node->dump();
}

/// Uniform classification over every backend kind. Output always holds
/// exactly one prediction per input, in input order.
class Classifier {
public:
  Classifier(BackendConfig config, ClassifyContext ctx) : cfg_(std::move(config)), ctx_(std::move(ctx)) {
    if (cfg_.networked()) {
      if (!ctx_.transport) throw Error("backend " + cfg_.id + ": no HTTP transport");
      if (!ctx_.clock) throw Error("backend " + cfg_.id + ": no clock");
    }
    if (!cfg_.prompt.empty()) {
      if (!ctx_.prompts) throw Error("backend " + cfg_.id + ": no prompt catalog");
      auto it = ctx_.prompts->find(cfg_.prompt);
      if (it == ctx_.prompts->end()) throw Error("backend " + cfg_.id + ": unknown prompt '" + cfg_.prompt + "'");
      prompt_ = &it->second;
      prompt_hash_ = prompt_->hash();
    } else {
      prompt_hash_ = cfg_.kind == BackendKind::Mock ? "mock" : "";
    }
    if (cfg_.networked()) limiter_ = std::make_unique<RateLimiter>(*ctx_.clock, cfg_.rate_limit);
  }

  const BackendConfig& config() const noexcept { return cfg_; }
  const std::string& prompt_hash() const noexcept { return prompt_hash_; }
  ClassifyStats stats() const { return {requests_.load(), retries_.load(), cache_hits_.load()}; }

  PredictionSet classify(const std::vector<ClassifyItem>& items) {
    PredictionSet out;
    out.model_id = cfg_.id;
    out.prompt_hash = prompt_hash_;
    out.items.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      out.items[i].sentence_id = items[i].sentence_id;
      out.items[i].model_id = cfg_.id;
      out.items[i].prompt_hash = prompt_hash_;
    }
    switch (cfg_.kind) {
      case BackendKind::Mock: classify_mock(items, out); break;
      case BackendKind::CachedFile: classify_cached_file(items, out); break;
      default: classify_remote(items, out); break;
    }
    return out;
  }

private:
  std::string cache_key(const ClassifyItem& item) const {
    return PredictionCache::key(cfg_.id, prompt_hash_, item.text);
  }

  void classify_mock(const std::vector<ClassifyItem>& items, PredictionSet& out) const {
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto& p = out.items[i];
      auto label = ctx_.gold_lookup ? ctx_.gold_lookup(items[i].sentence_id) : std::nullopt;
      if (label) {
        p.label = label;
        p.status = PredictionStatus::Ok;
        p.raw_response = std::string(to_string(*label));
      } else {
        p.status = PredictionStatus::ParseFailed;
        p.raw_response = "mock: no gold label";
      }
    }
  }

  void classify_cached_file(const std::vector<ClassifyItem>& items, PredictionSet& out) const {
    const auto file = read_predictions(std::filesystem::path(cfg_.path), cfg_.id);
    std::unordered_map<std::string, const Prediction*> by_id;
    for (const auto& p : file.items) by_id.emplace(p.sentence_id, &p);
    if (prompt_hash_.empty()) out.prompt_hash = file.prompt_hash;
    for (std::size_t i = 0; i < items.size(); ++i) {
      auto& p = out.items[i];
      auto it = by_id.find(items[i].sentence_id);
      if (it == by_id.end()) {
        p.status = PredictionStatus::TransportFailed;
        p.raw_response = "not present in cached file";
        continue;
      }
      p.label = it->second->label;
      p.status = it->second->status;
      p.raw_response = it->second->raw_response;
      if (!it->second->prompt_hash.empty()) p.prompt_hash = it->second->prompt_hash;
    }
  }

  HttpHeaders auth_headers() const {
    HttpHeaders headers;
    if (cfg_.auth_token_env_var.empty()) return headers;
    const char* token = ctx_.getenv(cfg_.auth_token_env_var.c_str());
    if (!token || !*token)
      throw BackendError("backend " + cfg_.id + ": environment variable " + cfg_.auth_token_env_var +
                         " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + token);
    return headers;
  }

  /// POST with rate limiting and exponential backoff on retryable failures.
  HttpResponse post_with_retries(const std::string& url, const std::string& body, const HttpHeaders& headers) {
    HttpResponse res;
    for (unsigned attempt = 0;; ++attempt) {
      limiter_->acquire();
      ++requests_;
      res = ctx_.transport->post_json(url, body, headers);
      if (res.transport_ok() || !res.retryable() || attempt >= cfg_.max_retries) return res;
      ++retries_;
      ctx_.clock->sleep_for(cfg_.initial_backoff * (1LL << std::min(attempt, 20u)));
    }
  }

  static std::string describe_failure(const HttpResponse& res) {
    if (res.status == 0) return "transport error: " + res.error;
    return "HTTP " + std::to_string(res.status) + ": " + res.body;
  }

  void classify_remote(const std::vector<ClassifyItem>& items, PredictionSet& out) {
    const auto headers = auth_headers();

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (ctx_.cache && ctx_.read_cache) {
        if (auto hit = ctx_.cache->lookup(cache_key(items[i]))) {
          auto& p = out.items[i];
          p.label = hit->label;
          p.status = PredictionStatus::Ok;
          p.raw_response = hit->raw_response;
          p.timestamp = hit->timestamp;
          p.tie = hit->tie;
          ++cache_hits_;
          continue;
        }
      }
      pending.push_back(i);
    }

    const std::size_t per_request =
        (cfg_.kind == BackendKind::NliZeroShot) ? 1 : std::max<std::size_t>(1, cfg_.batch_size);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t k = 0; k < pending.size(); k += per_request)
      batches.emplace_back(pending.begin() + static_cast<std::ptrdiff_t>(k),
                           pending.begin() + static_cast<std::ptrdiff_t>(std::min(pending.size(), k + per_request)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    const auto worker = [&] {
      for (;;) {
        const std::size_t b = next++;
        if (b >= batches.size()) return;
        try {
          run_batch(items, batches[b], headers, out);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    };
    const unsigned workers = std::min<unsigned>(cfg_.max_parallel, static_cast<unsigned>(std::max<std::size_t>(1, batches.size())));
    if (workers <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
  }

  void store(const ClassifyItem& item, const Prediction& p, std::size_t batch_index) const {
    if (!ctx_.cache || !p.ok()) return;
    CacheEntry e;
    e.backend_id = cfg_.id;
    e.prompt_hash = prompt_hash_;
    e.text_hash = sha256_hex(item.text);
    e.sentence_id = item.sentence_id;
    e.label = *p.label;
    e.raw_response = p.raw_response;
    e.batch_index = batch_index;
    e.timestamp = p.timestamp;
    e.tie = p.tie;
    ctx_.cache->store(cache_key(item), e);
  }

  void run_batch(const std::vector<ClassifyItem>& items, const std::vector<std::size_t>& batch,
                 const HttpHeaders& headers, PredictionSet& out) {
    switch (cfg_.kind) {
      case BackendKind::NliZeroShot: run_nli(items[batch.front()], headers, out.items[batch.front()]); break;
      case BackendKind::FineTuned: run_fine_tuned(items, batch, headers, out); break;
      default: run_generative(items, batch, headers, out); break;
    }
  }

  void run_generative(const std::vector<ClassifyItem>& items, const std::vector<std::size_t>& batch,
                      const HttpHeaders& headers, PredictionSet& out) {
    std::vector<std::string> texts;
    for (auto i : batch) texts.push_back(items[i].text);
    const std::string prompt = render_prompt(*prompt_, texts);
    const nlohmann::json body{{"model", cfg_.model},
                              {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
                              {"temperature", 0}};
    const auto res = post_with_retries(cfg_.endpoint_url, body.dump(), headers);
    const std::string stamp = utc_timestamp();
    const auto fail_all = [&](PredictionStatus status, const std::string& raw) {
      for (auto i : batch) {
        out.items[i].status = status;
        out.items[i].raw_response = raw;
        out.items[i].timestamp = stamp;
      }
    };
    if (!res.transport_ok()) return fail_all(PredictionStatus::TransportFailed, describe_failure(res));

    std::optional<std::string> content;
    try {
      content = extract_path(nlohmann::json::parse(res.body), cfg_.response_path);
    } catch (const nlohmann::json::exception&) {
    }
    if (!content) return fail_all(PredictionStatus::ParseFailed, res.body);

    const auto parsed = parse_label_response(*content, prompt_->kind);
    if (const auto* pf = std::get_if<ParseFailure>(&parsed)) return fail_all(PredictionStatus::ParseFailed, pf->raw);
    const auto& labeled = std::get<std::vector<LabeledIndex>>(parsed);

    if (!prompt_->batched()) {
      auto& p = out.items[batch.front()];
      p.raw_response = *content;
      p.timestamp = stamp;
      p.label = labeled.front().label;
      p.status = p.label ? PredictionStatus::Ok : PredictionStatus::ParseFailed;
      store(items[batch.front()], p, 0);
      return;
    }

    // Match strictly by text_number; duplicates and gaps fail per item.
    std::vector<int> seen(batch.size() + 1, 0);
    std::vector<std::optional<IdeologyClass>> by_number(batch.size() + 1);
    for (const auto& li : labeled) {
      if (li.index < 1 || li.index > batch.size()) continue;
      ++seen[li.index];
      by_number[li.index] = li.label;
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
      auto& p = out.items[batch[k]];
      p.raw_response = *content;
      p.timestamp = stamp;
      const std::size_t number = k + 1;
      if (seen[number] == 1 && by_number[number]) {
        p.label = by_number[number];
        p.status = PredictionStatus::Ok;
        store(items[batch[k]], p, number);
      } else {
        p.label.reset();
        p.status = PredictionStatus::ParseFailed;
      }
    }
  }

  void run_nli(const ClassifyItem& item, const HttpHeaders& headers, Prediction& p) {
    p = nli_request(item, headers);
    store(item, p, 0);
  }

  Prediction nli_request(const ClassifyItem& item, const HttpHeaders& headers) {
    Prediction p;
    p.sentence_id = item.sentence_id;
    p.model_id = cfg_.id;
    p.prompt_hash = prompt_hash_;
    const nlohmann::json body{{"text", item.text},
                              {"hypothesis_template", prompt_->body},
                              {"candidate_labels", cfg_.candidate_labels}};
    const auto res = post_with_retries(join_url(cfg_.endpoint_url, "/zero-shot"), body.dump(), headers);
    p.timestamp = utc_timestamp();
    if (!res.transport_ok()) {
      p.status = PredictionStatus::TransportFailed;
      p.raw_response = describe_failure(res);
      return p;
    }
    p.raw_response = res.body;
    p.status = PredictionStatus::ParseFailed;
    try {
      const auto j = nlohmann::json::parse(res.body);
      const auto labels = j.at("labels").get<std::vector<std::string>>();
      const auto scores = j.at("scores").get<std::vector<double>>();
      if (labels.size() != scores.size()) return p;
      std::array<std::optional<double>, 3> by_class{};
      for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = std::find(cfg_.candidate_labels.begin(), cfg_.candidate_labels.end(), labels[i]);
        if (it == cfg_.candidate_labels.end()) return p;
        by_class[static_cast<std::size_t>(it - cfg_.candidate_labels.begin())] = scores[i];
      }
      std::optional<std::size_t> best;
      for (std::size_t k = 0; k < 3; ++k) {
        if (!by_class[k]) return p;
        if (!best || *by_class[k] > *by_class[*best]) {
          best = k;
          p.tie = false;
        } else if (*by_class[k] == *by_class[*best]) {
          p.tie = true;  // earlier class in Left < Neutral < Right order wins
        }
      }
      p.label = static_cast<IdeologyClass>(*best);
      p.status = PredictionStatus::Ok;
    } catch (const nlohmann::json::exception&) {
      p.label.reset();
    }
    return p;
  }

  void run_fine_tuned(const std::vector<ClassifyItem>& items, const std::vector<std::size_t>& batch,
                      const HttpHeaders& headers, PredictionSet& out) {
    nlohmann::json texts = nlohmann::json::array();
    for (auto i : batch) texts.push_back(items[i].text);
    const nlohmann::json body{{"model_id", cfg_.model}, {"texts", texts}};
    const auto res = post_with_retries(join_url(cfg_.endpoint_url, "/classify"), body.dump(), headers);
    const std::string stamp = utc_timestamp();
    std::vector<std::string> labels;
    bool parsed = false;
    if (res.transport_ok()) {
      try {
        labels = nlohmann::json::parse(res.body).at("labels").get<std::vector<std::string>>();
        parsed = labels.size() == batch.size();
      } catch (const nlohmann::json::exception&) {
      }
    }
    for (std::size_t k = 0; k < batch.size(); ++k) {
      auto& p = out.items[batch[k]];
      p.timestamp = stamp;
      if (!res.transport_ok()) {
        p.status = PredictionStatus::TransportFailed;
        p.raw_response = describe_failure(res);
        continue;
      }
      p.raw_response = res.body;
      p.label = parsed ? parse_class(labels[k]) : std::nullopt;
      p.status = p.label ? PredictionStatus::Ok : PredictionStatus::ParseFailed;
      store(items[batch[k]], p, k + 1);
    }
  }

  friend Prediction nli_classify(Classifier&, const ClassifyItem&);

  BackendConfig cfg_;
  ClassifyContext ctx_;
  const PromptTemplate* prompt_ = nullptr;
  std::string prompt_hash_;
  std::unique_ptr<RateLimiter> limiter_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> retries_{0};
  std::atomic<std::size_t> cache_hits_{0};
};

/// Single-sentence zero-shot call through an nli_zero_shot classifier:
/// posts premise, hypothesis template and candidates; label is the argmax.
inline Prediction nli_classify(Classifier& classifier, const ClassifyItem& item) {
  if (classifier.cfg_.kind != BackendKind::NliZeroShot) throw Error("nli_classify: backend is not nli_zero_shot");
  return classifier.nli_request(item, classifier.auth_headers());
}

struct FineTuneItem {
  std::string text;
  IdeologyClass label;
};

struct FineTuneResult {
  std::string job_id;
  std::string model_id;
  std::string training_hash;
};

/// Submits a fine-tuning job to the service behind a fine_tuned backend and
/// polls until it finishes. Throws BackendError on rejection, failure, or
/// when the poll budget runs out.
inline FineTuneResult request_fine_tune(const BackendConfig& cfg, const std::vector<FineTuneItem>& items,
                                        HttpTransport& transport, Clock& clock,
                                        const std::function<const char*(const char*)>& getenv_fn =
                                            [](const char* n) { return std::getenv(n); }) {
  HttpHeaders headers;
  if (!cfg.auth_token_env_var.empty()) {
    const char* token = getenv_fn(cfg.auth_token_env_var.c_str());
    if (!token || !*token) throw BackendError("backend " + cfg.id + ": " + cfg.auth_token_env_var + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  nlohmann::json training = nlohmann::json::array();
  for (const auto& it : items) training.push_back({{"text", it.text}, {"label", std::string(to_string(it.label))}});
  if (cfg.base_model.empty()) throw Error("backend " + cfg.id + ": fine-tuning needs base_model");
  const nlohmann::json body{{"base_model", cfg.base_model},
                            {"training_items", training},
                            {"hyperparams",
                             {{"epochs", cfg.fine_tune.epochs},
                              {"learning_rate", cfg.fine_tune.learning_rate},
                              {"max_sequence_length", cfg.fine_tune.max_sequence_length},
                              {"seed", cfg.fine_tune.seed}}}};
  const auto submitted = transport.post_json(join_url(cfg.endpoint_url, "/fine-tune"), body.dump(), headers);
  if (!submitted.transport_ok())
    throw BackendError("fine-tune submission failed: HTTP " + std::to_string(submitted.status) + " " +
                       submitted.body + submitted.error);
  FineTuneResult result;
  try {
    result.job_id = nlohmann::json::parse(submitted.body).at("job_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("fine-tune submission: malformed reply: ") + e.what());
  }
  for (unsigned poll = 0; poll < cfg.max_polls; ++poll) {
    const auto res = transport.get(join_url(cfg.endpoint_url, "/fine-tune/" + result.job_id), headers);
    if (!res.transport_ok())
      throw BackendError("fine-tune status failed: HTTP " + std::to_string(res.status) + " " + res.error);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(std::string("fine-tune status: malformed reply: ") + e.what());
    }
    const auto status = j.value("status", std::string());
    if (status == "done") {
      result.model_id = j.value("model_id", std::string());
      result.training_hash = j.value("training_hash", std::string());
      if (result.model_id.empty()) throw BackendError("fine-tune job " + result.job_id + " finished without model_id");
      return result;
    }
    if (status == "failed") throw BackendError("fine-tune job " + result.job_id + " failed");
    clock.sleep_for(cfg.poll_interval);
  }
  throw BackendError("fine-tune job " + result.job_id + " did not finish within the poll budget");
}

}  // namespace ideoscale
