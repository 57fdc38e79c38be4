#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ideoscale {

/// Base exception for every fatal condition raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when an input file does not match its declared layout.
class SchemaError : public Error {
public:
  using Error::Error;
};

/// Raised when a remote endpoint cannot be used at all (missing credentials,
/// service unavailable for a whole experiment stage).
class BackendError : public Error {
public:
  using Error::Error;
};

enum class IdeologyClass : std::uint8_t { Left = 0, Neutral = 1, Right = 2 };

inline constexpr std::array<IdeologyClass, 3> kAllClasses{
    IdeologyClass::Left, IdeologyClass::Neutral, IdeologyClass::Right};

inline constexpr std::size_t index_of(IdeologyClass c) noexcept {
  return static_cast<std::size_t>(c);
}

/// Short name used in exports and configs.
inline std::string_view to_string(IdeologyClass c) noexcept {
  switch (c) {
    case IdeologyClass::Left: return "left";
    case IdeologyClass::Neutral: return "neutral";
    case IdeologyClass::Right: return "right";
  }
  return "?";
}

/// Label as it appears in model prompts and the published tables.
inline std::string_view display_label(IdeologyClass c) noexcept {
  switch (c) {
    case IdeologyClass::Left: return "left-wing";
    case IdeologyClass::Neutral: return "neutral or procedural";
    case IdeologyClass::Right: return "right-wing";
  }
  return "?";
}

inline std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return out;
}

inline std::string_view trim(std::string_view s) noexcept {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

/// Accepts the short names ("left"), the display labels, and the usual
/// variants models produce ("Right Wing", "procedural").
inline std::optional<IdeologyClass> parse_class(std::string_view raw) {
  std::string s = lowercase(trim(raw));
  std::string norm;
  norm.reserve(s.size());
  for (char ch : s) {
    if (ch == '_' || ch == '-') ch = ' ';
    if (ch == ' ' && (norm.empty() || norm.back() == ' ')) continue;
    norm.push_back(ch);
  }
  while (!norm.empty() && norm.back() == ' ') norm.pop_back();
  if (norm == "left" || norm == "left wing" || norm == "leftwing") return IdeologyClass::Left;
  if (norm == "right" || norm == "right wing" || norm == "rightwing") return IdeologyClass::Right;
  if (norm == "neutral" || norm == "neutral or procedural" || norm == "procedural" ||
      norm == "neutral/procedural")
    return IdeologyClass::Neutral;
  return std::nullopt;
}

enum class CoderSource : std::uint8_t { Expert = 0, Crowd = 1 };

inline std::string_view to_string(CoderSource s) noexcept {
  return s == CoderSource::Expert ? "expert" : "crowd";
}

/// Column header used in the published tables.
inline std::string_view display_label(CoderSource s) noexcept {
  return s == CoderSource::Expert ? "Experts" : "Crowd";
}

inline std::optional<CoderSource> parse_source(std::string_view raw) {
  const std::string s = lowercase(trim(raw));
  if (s == "expert" || s == "experts") return CoderSource::Expert;
  if (s == "crowd") return CoderSource::Crowd;
  return std::nullopt;
}

}  // namespace ideoscale
