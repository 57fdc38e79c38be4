#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ideoscale/types.hpp"

namespace ideoscale {

enum class PolicyArea : std::uint8_t { Economic, Social, Other };

inline std::string_view to_string(PolicyArea p) noexcept {
  switch (p) {
    case PolicyArea::Economic: return "economic";
    case PolicyArea::Social: return "social";
    case PolicyArea::Other: return "other";
  }
  return "?";
}

struct Manifesto {
  std::string id;
  std::string party;
  int year = 0;
  std::string label;  // "Con 1987"
};

struct Sentence {
  std::string id;
  std::string manifesto_id;
  std::string text;
  PolicyArea policy_area = PolicyArea::Other;
};

struct Annotation {
  std::string sentence_id;
  std::string coder_id;
  CoderSource coder_source = CoderSource::Expert;
  int code = 0;
};

/// Maps corpus file columns and cell values onto the domain types.
///
/// Loaded from an INI file:
///
///     [format]       delimiter = comma | tab | <char>
///     [columns]      sentence_id, manifesto_id (optional), party, year, text,
///                    policy_area, coder_id, coder_source, code
///     [policy_area]  economic = 2   social = 3   other = 1
///     [coder_source] expert = Experts   crowd = Crowd
///     [codes]        values = -2,-1,0,1,2
///     [years]        min = 1900   max = 2100
///
/// Value entries may list comma-separated alternatives.
struct SchemaConfig {
  char delimiter = ',';
  std::string col_sentence_id = "sentenceid";
  std::string col_manifesto_id;  // empty: derived from party and year
  std::string col_party = "party";
  std::string col_year = "year";
  std::string col_text = "sentence_text";
  std::string col_policy_area = "policy_area";
  std::string col_coder_id = "coderid";
  std::string col_coder_source = "source";
  std::string col_code = "econ_scale";

  std::map<std::string, PolicyArea> policy_area_values{
      {"1", PolicyArea::Other}, {"2", PolicyArea::Economic}, {"3", PolicyArea::Social}};
  std::map<std::string, CoderSource> coder_source_values{
      {"Experts", CoderSource::Expert}, {"Crowd", CoderSource::Crowd}};
  std::set<int> codes{-2, -1, 0, 1, 2};
  int year_min = 1900;
  int year_max = 2100;

  static SchemaConfig load(const std::filesystem::path& path);
};

namespace detail {

inline std::vector<std::string> split_list(std::string_view s, char sep = ',') {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto piece = trim(s.substr(start, pos == std::string_view::npos ? s.size() - start : pos - start));
    if (!piece.empty()) out.emplace_back(piece);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<int> parse_int(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

inline SchemaConfig SchemaConfig::load(const std::filesystem::path& path) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw SchemaError("schema: " + std::string(e.what()));
  }
  SchemaConfig cfg;
  if (auto d = tree.get_optional<std::string>("format.delimiter")) {
    const std::string v = lowercase(trim(*d));
    if (v == "tab" || v == "\\t") cfg.delimiter = '\t';
    else if (v == "comma") cfg.delimiter = ',';
    else if (v == "semicolon") cfg.delimiter = ';';
    else if (v.size() == 1) cfg.delimiter = v[0];
    else throw SchemaError("schema: unsupported delimiter '" + *d + "'");
  }
  const auto col = [&](const char* key, std::string& field) {
    if (auto v = tree.get_optional<std::string>(std::string("columns.") + key)) field = std::string(trim(*v));
  };
  col("sentence_id", cfg.col_sentence_id);
  col("manifesto_id", cfg.col_manifesto_id);
  col("party", cfg.col_party);
  col("year", cfg.col_year);
  col("text", cfg.col_text);
  col("policy_area", cfg.col_policy_area);
  col("coder_id", cfg.col_coder_id);
  col("coder_source", cfg.col_coder_source);
  col("code", cfg.col_code);

  if (auto sec = tree.get_child_optional("policy_area")) {
    cfg.policy_area_values.clear();
    for (const auto& [key, node] : *sec) {
      PolicyArea area;
      if (key == "economic") area = PolicyArea::Economic;
      else if (key == "social") area = PolicyArea::Social;
      else if (key == "other") area = PolicyArea::Other;
      else throw SchemaError("schema: unknown policy area '" + key + "'");
      for (auto& v : detail::split_list(node.data())) cfg.policy_area_values[v] = area;
    }
  }
  if (auto sec = tree.get_child_optional("coder_source")) {
    cfg.coder_source_values.clear();
    for (const auto& [key, node] : *sec) {
      auto src = parse_source(key);
      if (!src) throw SchemaError("schema: unknown coder source '" + key + "'");
      for (auto& v : detail::split_list(node.data())) cfg.coder_source_values[v] = *src;
    }
  }
  if (auto v = tree.get_optional<std::string>("codes.values")) {
    cfg.codes.clear();
    for (auto& item : detail::split_list(*v)) {
      auto code = detail::parse_int(item);
      if (!code) throw SchemaError("schema: non-integer code '" + item + "'");
      cfg.codes.insert(*code);
    }
    if (cfg.codes.empty()) throw SchemaError("schema: empty code set");
  }
  if (auto v = tree.get_optional<int>("years.min")) cfg.year_min = *v;
  if (auto v = tree.get_optional<int>("years.max")) cfg.year_max = *v;
  return cfg;
}

struct DelimitedRow {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

/// RFC 4180 style reader: quoted fields may contain the delimiter, doubled
/// quotes and newlines. Empty records are skipped.
inline std::vector<DelimitedRow> read_delimited(std::istream& in, char delimiter) {
  std::vector<DelimitedRow> rows;
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.size() >= 3 && content.compare(0, 3, "\xEF\xBB\xBF") == 0) content.erase(0, 3);

  DelimitedRow row;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  row.line = 1;

  const auto end_record = [&] {
    if (field_started || !row.fields.empty() || !field.empty()) {
      row.fields.push_back(std::move(field));
      rows.push_back(std::move(row));
    }
    row = DelimitedRow{};
    field.clear();
    field_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char ch = content[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && field.empty()) {
      quoted = true;
      field_started = true;
    } else if (ch == delimiter) {
      row.fields.push_back(std::move(field));
      field.clear();
      field_started = true;
    } else if (ch == '\r') {
      // swallowed; CRLF handled by '\n'
    } else if (ch == '\n') {
      end_record();
      ++line;
      row.line = line;
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) throw SchemaError("unterminated quoted field starting near line " + std::to_string(row.line));
  end_record();
  return rows;
}

struct Rejection {
  std::size_t row = 0;  // 1-based line number in the input file
  std::string reason;
};

/// Immutable, validated corpus. Built only by `parse_corpus`.
class Corpus {
public:
  Corpus() = default;

  const std::vector<Manifesto>& manifestos() const noexcept { return manifestos_; }
  const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
  const std::vector<Annotation>& annotations() const noexcept { return annotations_; }

  const Manifesto* find_manifesto(std::string_view id) const {
    auto it = manifesto_index_.find(std::string(id));
    return it == manifesto_index_.end() ? nullptr : &manifestos_[it->second];
  }
  const Sentence* find_sentence(std::string_view id) const {
    auto it = sentence_index_.find(std::string(id));
    return it == sentence_index_.end() ? nullptr : &sentences_[it->second];
  }

  /// Sentences that enter downstream computation, in corpus order.
  std::vector<const Sentence*> economic_sentences() const {
    std::vector<const Sentence*> out;
    for (const auto& s : sentences_)
      if (s.policy_area == PolicyArea::Economic) out.push_back(&s);
    return out;
  }
  std::vector<std::string> economic_sentence_ids() const {
    std::vector<std::string> out;
    for (const auto* s : economic_sentences()) out.push_back(s->id);
    return out;
  }

  /// Annotations of one sentence by one coder source, in file order.
  std::vector<const Annotation*> annotations_for(std::string_view sentence_id, CoderSource source) const {
    std::vector<const Annotation*> out;
    auto it = annotations_by_sentence_.find(std::string(sentence_id));
    if (it == annotations_by_sentence_.end()) return out;
    for (auto idx : it->second)
      if (annotations_[idx].coder_source == source) out.push_back(&annotations_[idx]);
    return out;
  }

  /// Assembles a corpus from already-validated parts; throws on any
  /// referential-integrity or uniqueness violation.
  static Corpus from_parts(std::vector<Manifesto> manifestos, std::vector<Sentence> sentences,
                           std::vector<Annotation> annotations) {
    Corpus c;
    c.manifestos_ = std::move(manifestos);
    c.sentences_ = std::move(sentences);
    c.annotations_ = std::move(annotations);
    std::set<std::pair<std::string, int>> party_years;
    for (std::size_t i = 0; i < c.manifestos_.size(); ++i) {
      const auto& m = c.manifestos_[i];
      if (!c.manifesto_index_.emplace(m.id, i).second) throw Error("corpus: duplicate manifesto id " + m.id);
      if (!party_years.emplace(m.party, m.year).second)
        throw Error("corpus: duplicate (party, year) for manifesto " + m.id);
    }
    for (std::size_t i = 0; i < c.sentences_.size(); ++i) {
      const auto& s = c.sentences_[i];
      if (!c.manifesto_index_.count(s.manifesto_id))
        throw Error("corpus: sentence " + s.id + " references unknown manifesto " + s.manifesto_id);
      if (trim(s.text).empty()) throw Error("corpus: sentence " + s.id + " has empty text");
      if (!c.sentence_index_.emplace(s.id, i).second) throw Error("corpus: duplicate sentence id " + s.id);
    }
    std::set<std::tuple<std::string, std::string, CoderSource>> seen;
    for (std::size_t i = 0; i < c.annotations_.size(); ++i) {
      const auto& a = c.annotations_[i];
      if (!c.sentence_index_.count(a.sentence_id))
        throw Error("corpus: annotation references unknown sentence " + a.sentence_id);
      if (!seen.emplace(a.sentence_id, a.coder_id, a.coder_source).second)
        throw Error("corpus: duplicate annotation (" + a.sentence_id + ", " + a.coder_id + ")");
      c.annotations_by_sentence_[a.sentence_id].push_back(i);
    }
    return c;
  }

private:
  std::vector<Manifesto> manifestos_;
  std::vector<Sentence> sentences_;
  std::vector<Annotation> annotations_;
  std::unordered_map<std::string, std::size_t> manifesto_index_;
  std::unordered_map<std::string, std::size_t> sentence_index_;
  std::unordered_map<std::string, std::vector<std::size_t>> annotations_by_sentence_;
};

struct ParsedCorpus {
  Corpus corpus;
  std::vector<Rejection> rejections;
  std::size_t input_rows = 0;
  std::size_t accepted_rows = 0;
};

/// Validates every data row against `schema`. Rows that fail validation go
/// to the rejection list; a missing required column is fatal.
inline ParsedCorpus parse_corpus(std::istream& in, const SchemaConfig& schema) {
  auto rows = read_delimited(in, schema.delimiter);
  if (rows.empty()) throw SchemaError("corpus: file is empty (no header row)");

  const auto& header = rows.front().fields;
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) columns.emplace(std::string(trim(header[i])), i);
  const auto require = [&](const std::string& name, const char* role) -> std::size_t {
    auto it = columns.find(name);
    if (it == columns.end())
      throw SchemaError(std::string("corpus: missing required column '") + name + "' (" + role + ")");
    return it->second;
  };
  const std::size_t c_sid = require(schema.col_sentence_id, "sentence id");
  const std::size_t c_party = require(schema.col_party, "manifesto party");
  const std::size_t c_year = require(schema.col_year, "year");
  const std::size_t c_text = require(schema.col_text, "text");
  const std::size_t c_area = require(schema.col_policy_area, "policy area");
  const std::size_t c_coder = require(schema.col_coder_id, "coder id");
  const std::size_t c_source = require(schema.col_coder_source, "coder source");
  const std::size_t c_code = require(schema.col_code, "code");
  std::optional<std::size_t> c_mid;
  if (!schema.col_manifesto_id.empty()) c_mid = require(schema.col_manifesto_id, "manifesto id");

  ParsedCorpus result;
  std::vector<Manifesto> manifestos;
  std::unordered_map<std::string, std::size_t> manifesto_by_id;
  std::map<std::pair<std::string, int>, std::string> manifesto_by_party_year;
  std::vector<Sentence> sentences;
  std::unordered_map<std::string, std::size_t> sentence_by_id;
  std::vector<Annotation> annotations;
  std::set<std::tuple<std::string, std::string, CoderSource>> annotation_keys;

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    ++result.input_rows;
    const auto reject = [&](std::string reason) { result.rejections.push_back({row.line, std::move(reason)}); };
    if (row.fields.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " fields, found " + std::to_string(row.fields.size()));
      continue;
    }
    const auto cell = [&](std::size_t c) { return trim(row.fields[c]); };

    const std::string sid(cell(c_sid));
    if (sid.empty()) { reject("empty sentence id"); continue; }
    const std::string text(cell(c_text));
    if (text.empty()) { reject("empty text for sentence " + sid); continue; }
    const std::string party(cell(c_party));
    if (party.empty()) { reject("empty party"); continue; }
    const auto year = detail::parse_int(cell(c_year));
    if (!year) { reject("non-integer year '" + std::string(cell(c_year)) + "'"); continue; }
    if (*year < schema.year_min || *year > schema.year_max) {
      reject("year " + std::to_string(*year) + " outside configured range");
      continue;
    }
    const auto area_it = schema.policy_area_values.find(std::string(cell(c_area)));
    if (area_it == schema.policy_area_values.end()) {
      reject("unmappable policy area '" + std::string(cell(c_area)) + "'");
      continue;
    }
    const auto src_it = schema.coder_source_values.find(std::string(cell(c_source)));
    if (src_it == schema.coder_source_values.end()) {
      reject("unmappable coder source '" + std::string(cell(c_source)) + "'");
      continue;
    }
    const std::string coder(cell(c_coder));
    if (coder.empty()) { reject("empty coder id"); continue; }

    const std::string_view raw_code = cell(c_code);
    const bool code_missing = raw_code.empty() || raw_code == "NA";
    std::optional<int> code;
    if (!code_missing) {
      code = detail::parse_int(raw_code);
      if (!code || !schema.codes.count(*code)) {
        reject("unmappable code '" + std::string(raw_code) + "'");
        continue;
      }
    } else if (area_it->second == PolicyArea::Economic) {
      reject("missing code for economic sentence " + sid);
      continue;
    }

    std::string mid = c_mid ? std::string(cell(*c_mid)) : party + "_" + std::to_string(*year);
    if (mid.empty()) { reject("empty manifesto id"); continue; }
    if (auto it = manifesto_by_id.find(mid); it != manifesto_by_id.end()) {
      const auto& m = manifestos[it->second];
      if (m.party != party || m.year != *year) {
        reject("manifesto " + mid + " has conflicting party/year");
        continue;
      }
    } else if (auto py = manifesto_by_party_year.find({party, *year}); py != manifesto_by_party_year.end()) {
      reject("party " + party + " year " + std::to_string(*year) + " already belongs to manifesto " + py->second);
      continue;
    }
    if (auto it = sentence_by_id.find(sid); it != sentence_by_id.end()) {
      const auto& s = sentences[it->second];
      if (s.manifesto_id != mid || s.text != text || s.policy_area != area_it->second) {
        reject("sentence " + sid + " has conflicting attributes across rows");
        continue;
      }
    }
    if (code && !annotation_keys.emplace(sid, coder, src_it->second).second) {
      reject("duplicate annotation for sentence " + sid + " by coder " + coder);
      continue;
    }

    if (!manifesto_by_id.count(mid)) {
      manifesto_by_id.emplace(mid, manifestos.size());
      manifesto_by_party_year.emplace(std::pair{party, *year}, mid);
      manifestos.push_back({mid, party, *year, party + " " + std::to_string(*year)});
    }
    if (!sentence_by_id.count(sid)) {
      sentence_by_id.emplace(sid, sentences.size());
      sentences.push_back({sid, mid, text, area_it->second});
    }
    if (code) annotations.push_back({sid, coder, src_it->second, *code});
    ++result.accepted_rows;
  }
  result.corpus = Corpus::from_parts(std::move(manifestos), std::move(sentences), std::move(annotations));
  return result;
}

inline ParsedCorpus parse_corpus(const std::filesystem::path& path, const SchemaConfig& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("corpus: cannot open " + path.string());
  return parse_corpus(in, schema);
}

/// One JSON object per rejected row: {"row": N, "reason": "..."}.
inline void write_rejection_report(std::ostream& out, const std::vector<Rejection>& rejections) {
  for (const auto& r : rejections) out << nlohmann::json{{"row", r.row}, {"reason", r.reason}}.dump() << '\n';
}

struct CorpusSplit {
  std::vector<std::string> train_ids;  // draw order; prefixes are nested subsets
  std::vector<std::string> eval_ids;   // eligible order
  std::uint64_t seed = 0;
  std::size_t requested_n = 0;
};

namespace detail {

/// Uniform integer in [0, bound) from a 64-bit engine by rejection sampling.
/// Unlike std::uniform_int_distribution this is identical on every standard
/// library, so splits are reproducible across toolchains.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
  std::uint64_t x;
  do {
    x = gen();
  } while (x > limit);
  return x % bound;
}

}  // namespace detail

/// Draws `n` training ids uniformly without replacement from `eligible`
/// (partial Fisher-Yates over an mt19937_64 seeded with `seed`); the rest
/// become the evaluation set.
inline CorpusSplit split_training_subset(const std::vector<std::string>& eligible, std::size_t n,
                                         std::uint64_t seed) {
  if (n > eligible.size())
    throw Error("split: requested " + std::to_string(n) + " training sentences but only " +
                std::to_string(eligible.size()) + " are eligible");
  std::vector<std::size_t> order(eligible.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 gen(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + static_cast<std::size_t>(detail::uniform_below(gen, order.size() - i));
    std::swap(order[i], order[j]);
  }
  CorpusSplit split;
  split.seed = seed;
  split.requested_n = n;
  std::vector<bool> in_train(eligible.size(), false);
  for (std::size_t i = 0; i < n; ++i) {
    split.train_ids.push_back(eligible[order[i]]);
    in_train[order[i]] = true;
  }
  for (std::size_t i = 0; i < eligible.size(); ++i)
    if (!in_train[i]) split.eval_ids.push_back(eligible[i]);
  return split;
}

inline CorpusSplit split_training_subset(const Corpus& corpus, std::size_t n, std::uint64_t seed) {
  return split_training_subset(corpus.economic_sentence_ids(), n, seed);
}

}  // namespace ideoscale
