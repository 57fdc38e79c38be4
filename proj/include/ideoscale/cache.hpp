#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "ideoscale/hash.hpp"
#include "ideoscale/types.hpp"

namespace ideoscale {

/// One stored model answer. The raw response is kept so that labels can be
/// re-derived after parser changes without re-querying.
struct CacheEntry {
  std::string backend_id;
  std::string prompt_hash;
  std::string text_hash;
  std::string sentence_id;
  IdeologyClass label = IdeologyClass::Neutral;
  std::string raw_response;
  std::size_t batch_index = 0;  // position inside the batch response (1-based), 0 for single requests
  std::string timestamp;
  bool tie = false;
};

/// Content-addressed on-disk store of ok predictions:
///   <root>/<key[0:2]>/<key>.json,  key = sha256(backend \0 prompt_hash \0 sha256(text)).
class PredictionCache {
public:
  explicit PredictionCache(std::filesystem::path root) : root_(std::move(root)) {}

  static std::string key(const std::string& backend_id, const std::string& prompt_hash, const std::string& text) {
    return sha256_hex(backend_id + '\0' + prompt_hash + '\0' + sha256_hex(text));
  }

  std::optional<CacheEntry> lookup(const std::string& key) const {
    std::lock_guard lock(stripe(key));
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
      const auto j = nlohmann::json::parse(in);
      CacheEntry e;
      e.backend_id = j.at("backend_id").get<std::string>();
      e.prompt_hash = j.at("prompt_hash").get<std::string>();
      e.text_hash = j.at("text_hash").get<std::string>();
      e.sentence_id = j.value("sentence_id", std::string());
      auto cls = parse_class(j.at("label").get<std::string>());
      if (!cls) return std::nullopt;
      e.label = *cls;
      e.raw_response = j.value("raw_response", std::string());
      e.batch_index = j.value("batch_index", std::size_t{0});
      e.timestamp = j.value("timestamp", std::string());
      e.tie = j.value("tie", false);
      return e;
    } catch (const nlohmann::json::exception&) {
      return std::nullopt;  // torn or foreign file: treat as a miss
    }
  }

  void store(const std::string& key, const CacheEntry& e) const {
    nlohmann::json j{{"backend_id", e.backend_id},   {"prompt_hash", e.prompt_hash},
                     {"text_hash", e.text_hash},     {"sentence_id", e.sentence_id},
                     {"label", to_string(e.label)},  {"raw_response", e.raw_response},
                     {"batch_index", e.batch_index}, {"timestamp", e.timestamp},
                     {"tie", e.tie}};
    const auto path = path_for(key);
    std::lock_guard lock(stripe(key));
    std::filesystem::create_directories(path.parent_path());
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw Error("cache: cannot write " + tmp);
      out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  const std::filesystem::path& root() const noexcept { return root_; }

private:
  std::filesystem::path path_for(const std::string& key) const { return root_ / key.substr(0, 2) / (key + ".json"); }

  std::mutex& stripe(const std::string& key) const { return stripes_[std::hash<std::string>{}(key) % stripes_.size()]; }

  std::filesystem::path root_;
  mutable std::array<std::mutex, 16> stripes_;
};

}  // namespace ideoscale
