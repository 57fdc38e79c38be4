#pragma once

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "ideoscale/types.hpp"

namespace ideoscale {

enum class PredictionStatus { Ok, ParseFailed, TransportFailed };

inline std::string_view to_string(PredictionStatus s) noexcept {
  switch (s) {
    case PredictionStatus::Ok: return "ok";
    case PredictionStatus::ParseFailed: return "parse_failed";
    case PredictionStatus::TransportFailed: return "transport_failed";
  }
  return "?";
}

inline std::optional<PredictionStatus> parse_status(std::string_view s) {
  if (s == "ok") return PredictionStatus::Ok;
  if (s == "parse_failed") return PredictionStatus::ParseFailed;
  if (s == "transport_failed") return PredictionStatus::TransportFailed;
  return std::nullopt;
}

/// One model decision. `label` is set iff `status == Ok`.
struct Prediction {
  std::string sentence_id;
  std::string model_id;
  std::optional<IdeologyClass> label;
  std::string raw_response;
  std::string prompt_hash;
  std::string timestamp;  // ISO-8601 UTC of the original request
  PredictionStatus status = PredictionStatus::TransportFailed;
  bool tie = false;  // zero-shot scores shared the top value

  bool ok() const noexcept { return status == PredictionStatus::Ok; }
};

struct PredictionSet {
  std::string model_id;
  std::string prompt_hash;
  std::vector<Prediction> items;  // input order

  std::size_t count(PredictionStatus s) const {
    std::size_t n = 0;
    for (const auto& p : items) n += p.status == s;
    return n;
  }

  /// sentence id -> label for ok predictions.
  std::unordered_map<std::string, IdeologyClass> ok_labels() const {
    std::unordered_map<std::string, IdeologyClass> out;
    for (const auto& p : items)
      if (p.ok()) out.emplace(p.sentence_id, *p.label);
    return out;
  }
};

inline Prediction make_ok(std::string sentence_id, IdeologyClass label) {
  Prediction p;
  p.sentence_id = std::move(sentence_id);
  p.label = label;
  p.status = PredictionStatus::Ok;
  return p;
}

/// Cached-file line: {sentence_id, label, raw_response, prompt_hash[, status]}.
/// Timestamps are deliberately omitted so exports are reproducible.
inline nlohmann::json to_json_line(const Prediction& p) {
  nlohmann::json j;
  j["sentence_id"] = p.sentence_id;
  j["label"] = p.label ? nlohmann::json(std::string(to_string(*p.label))) : nlohmann::json(nullptr);
  j["raw_response"] = p.raw_response;
  j["prompt_hash"] = p.prompt_hash;
  j["status"] = std::string(to_string(p.status));
  return j;
}

inline void write_predictions(std::ostream& out, const PredictionSet& set) {
  for (const auto& p : set.items) out << to_json_line(p).dump() << '\n';
}

/// Reads the cached-file format. A line without a usable label becomes a
/// parse_failed prediction; the status field, when present, wins.
inline PredictionSet read_predictions(std::istream& in, std::string model_id) {
  PredictionSet set;
  set.model_id = std::move(model_id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError("predictions: line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("sentence_id") || !j["sentence_id"].is_string())
      throw SchemaError("predictions: line " + std::to_string(lineno) + " lacks sentence_id");
    Prediction p;
    p.sentence_id = j["sentence_id"].get<std::string>();
    p.model_id = set.model_id;
    p.raw_response = j.value("raw_response", std::string());
    p.prompt_hash = j.value("prompt_hash", std::string());
    if (j.contains("label") && j["label"].is_string()) p.label = parse_class(j["label"].get<std::string>());
    std::optional<PredictionStatus> status;
    if (j.contains("status") && j["status"].is_string()) status = parse_status(j["status"].get<std::string>());
    p.status = status.value_or(p.label ? PredictionStatus::Ok : PredictionStatus::ParseFailed);
    if (p.status != PredictionStatus::Ok) p.label.reset();
    if (p.status == PredictionStatus::Ok && !p.label) p.status = PredictionStatus::ParseFailed;
    if (set.prompt_hash.empty()) set.prompt_hash = p.prompt_hash;
    set.items.push_back(std::move(p));
  }
  return set;
}

inline PredictionSet read_predictions(const std::filesystem::path& path, std::string model_id) {
  std::ifstream in(path);
  if (!in) throw SchemaError("predictions: cannot open " + path.string());
  return read_predictions(in, std::move(model_id));
}

}  // namespace ideoscale
