#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <regex>
#include <string>
#include <variant>
#include <vector>

#include "ideoscale/prompts.hpp"
#include "ideoscale/types.hpp"

namespace ideoscale {

/// One labelled item. `index` is the text_number for batch responses and 0
/// for single-text responses; `label` is empty when the item was found but
/// its label is outside the vocabulary.
struct LabeledIndex {
  std::size_t index = 0;
  std::optional<IdeologyClass> label;
};

struct ParseFailure {
  std::string raw;
  std::string reason;
};

using ParsedResponse = std::variant<std::vector<LabeledIndex>, ParseFailure>;

namespace detail {

inline std::string strip_code_fences(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    auto nl = raw.find('\n', pos);
    auto line = raw.substr(pos, nl == std::string_view::npos ? raw.size() - pos : nl - pos);
    if (trim(line).substr(0, 3) != "```") {
      out.append(line);
      out.push_back('\n');
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return std::string(trim(out));
}

inline std::optional<IdeologyClass> class_from_value(std::string value) {
  auto v = std::string(trim(value));
  while (!v.empty() && (v.back() == '.' || v.back() == '"' || v.back() == '\'')) v.pop_back();
  while (!v.empty() && (v.front() == '"' || v.front() == '\'')) v.erase(v.begin());
  return parse_class(v);
}

inline std::optional<std::string> json_label(const nlohmann::json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) {
    for (const auto& [k, v] : j.items())
      if (lowercase(k) == "label" && v.is_string()) return v.get<std::string>();
  }
  return std::nullopt;
}

inline std::optional<std::size_t> json_number(const nlohmann::json& j) {
  if (!j.is_object()) return std::nullopt;
  for (const auto& [k, v] : j.items()) {
    if (lowercase(k) != "text_number") continue;
    if (v.is_number_unsigned()) return v.get<std::size_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
    if (v.is_string()) {
      try {
        return static_cast<std::size_t>(std::stoul(v.get<std::string>()));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
  }
  return std::nullopt;
}

inline const std::regex& label_field_regex() {
  static const std::regex re(R"re(["']?label["']?\s*[:=]\s*["']?([^,}\n"']+))re", std::regex::icase);
  return re;
}

inline const std::regex& number_field_regex() {
  static const std::regex re(R"re(["']?text_number["']?\s*[:=]\s*["']?(\d{1,9}))re", std::regex::icase);
  return re;
}

}  // namespace detail

/// Tolerant reader for model replies. Accepts the requested JSON shapes
/// plus unquoted keys, code fences, case variants of the class names and
/// "neutral or procedural".
inline ParsedResponse parse_label_response(std::string_view raw, PromptKind kind) {
  const std::string text = detail::strip_code_fences(raw);
  if (text.empty()) return ParseFailure{std::string(raw), "empty response"};

  if (kind == PromptKind::SingleJson || kind == PromptKind::NliHypothesis) {
    try {
      auto j = nlohmann::json::parse(text);
      if (auto lbl = detail::json_label(j)) {
        if (auto cls = detail::class_from_value(*lbl)) return std::vector<LabeledIndex>{{0, cls}};
        return ParseFailure{std::string(raw), "unknown label '" + *lbl + "'"};
      }
    } catch (const nlohmann::json::exception&) {
    }
    std::smatch m;
    if (std::regex_search(text, m, detail::label_field_regex())) {
      if (auto cls = detail::class_from_value(m[1].str())) return std::vector<LabeledIndex>{{0, cls}};
      return ParseFailure{std::string(raw), "unknown label '" + m[1].str() + "'"};
    }
    if (auto cls = detail::class_from_value(text)) return std::vector<LabeledIndex>{{0, cls}};
    return ParseFailure{std::string(raw), "no label found"};
  }

  std::vector<LabeledIndex> items;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.size() == 1 && j.begin()->is_array()) j = *j.begin();
    if (j.is_array()) {
      for (const auto& el : j) {
        auto num = detail::json_number(el);
        auto lbl = detail::json_label(el);
        if (!num) continue;
        items.push_back({*num, lbl ? detail::class_from_value(*lbl) : std::nullopt});
      }
      if (!items.empty()) return items;
    }
  } catch (const nlohmann::json::exception&) {
  }

  static const std::regex block(R"(\{([^{}]*)\})");
  for (auto it = std::sregex_iterator(text.begin(), text.end(), block); it != std::sregex_iterator(); ++it) {
    const std::string inner = (*it)[1].str();
    std::smatch num, lbl;
    if (!std::regex_search(inner, num, detail::number_field_regex())) continue;
    const auto index = static_cast<std::size_t>(std::stoul(num[1].str()));
    std::optional<IdeologyClass> cls;
    if (std::regex_search(inner, lbl, detail::label_field_regex())) cls = detail::class_from_value(lbl[1].str());
    items.push_back({index, cls});
  }
  if (!items.empty()) return items;

  // "1. right-wing" / "2: label: left-wing" lines
  static const std::regex line_re(R"(^\s*(\d{1,9})\s*[.):-]\s*(?:label\s*[:=]\s*)?([A-Za-z][A-Za-z \-_/]*)\s*$)",
                                  std::regex::icase);
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    std::smatch m;
    if (std::regex_match(line, m, line_re)) {
      if (auto cls = detail::class_from_value(m[2].str()))
        items.push_back({static_cast<std::size_t>(std::stoul(m[1].str())), cls});
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  if (!items.empty()) return items;
  return ParseFailure{std::string(raw), "no numbered labels found"};
}

}  // namespace ideoscale
