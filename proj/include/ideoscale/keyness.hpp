#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ideoscale/corpus.hpp"
#include "ideoscale/prediction.hpp"
#include "ideoscale/stopwords.hpp"

namespace ideoscale {

struct TokenizerConfig {
  bool lowercase = true;
  std::set<std::string> stopwords = default_stopwords();
  std::size_t min_token_length = 2;  // in code points
  double compound_threshold = 3.0;   // minimum pointwise mutual information (nats)
  long compound_min_count = 5;

  void validate() const {
    if (!(compound_threshold > 0.0)) throw Error("tokenizer: compound_threshold must be > 0");
    if (compound_min_count < 2) throw Error("tokenizer: compound_min_count must be >= 2");
  }
};

namespace detail {
inline bool is_token_byte(unsigned char ch) {
  return (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || ch >= 0x80 ||
         ch == '\'';
}
inline std::size_t codepoints(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char ch : s) n += (ch & 0xC0) != 0x80;
  return n;
}
}  // namespace detail

/// Splits on every ASCII character that is not a letter, digit or
/// apostrophe. Bytes >= 0x80 belong to tokens, so UTF-8 words stay whole.
/// A typographic apostrophe (U+2019) counts as an ASCII one; apostrophes at
/// token edges are dropped.
inline std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& cfg) {
  std::string normalized;
  normalized.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text.compare(i, 3, "\xE2\x80\x99") == 0) {
      normalized.push_back('\'');
      i += 2;
    } else {
      normalized.push_back(text[i]);
    }
  }
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    std::string_view tok = current;
    while (!tok.empty() && tok.front() == '\'') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == '\'') tok.remove_suffix(1);
    std::string t = cfg.lowercase ? ideoscale::lowercase(tok) : std::string(tok);
    if (!t.empty() && detail::codepoints(t) >= cfg.min_token_length && !cfg.stopwords.count(t))
      tokens.push_back(std::move(t));
    current.clear();
  };
  for (unsigned char ch : normalized) {
    if (detail::is_token_byte(ch)) current.push_back(static_cast<char>(ch));
    else if (!current.empty()) flush();
  }
  if (!current.empty()) flush();
  return tokens;
}

using Bigram = std::pair<std::string, std::string>;

/// Pointwise mutual information of every adjacent pair within documents,
/// ln(c(ab) * N / (c(a) * c(b))) with N the total token count.
inline std::map<Bigram, std::pair<long, double>> bigram_scores(const std::vector<std::vector<std::string>>& docs) {
  std::unordered_map<std::string, long> unigram;
  std::map<Bigram, std::pair<long, double>> bigrams;
  long n_tokens = 0;
  for (const auto& doc : docs) {
    for (std::size_t i = 0; i < doc.size(); ++i) {
      ++unigram[doc[i]];
      ++n_tokens;
      if (i + 1 < doc.size()) ++bigrams[{doc[i], doc[i + 1]}].first;
    }
  }
  for (auto& [bg, entry] : bigrams) {
    const double ca = static_cast<double>(unigram[bg.first]);
    const double cb = static_cast<double>(unigram[bg.second]);
    entry.second = std::log(static_cast<double>(entry.first) * static_cast<double>(n_tokens) / (ca * cb));
  }
  return bigrams;
}

/// Bigrams that pass both the count floor and the score threshold.
inline std::set<Bigram> compound_set(const std::vector<std::vector<std::string>>& docs, const TokenizerConfig& cfg) {
  cfg.validate();
  std::set<Bigram> out;
  for (const auto& [bg, entry] : bigram_scores(docs))
    if (entry.first >= cfg.compound_min_count && entry.second >= cfg.compound_threshold) out.insert(bg);
  return out;
}

/// Rewrites documents joining selected pairs with "_", scanning left to
/// right; a token consumed by a join cannot start another.
inline std::vector<std::vector<std::string>> apply_compounds(const std::vector<std::vector<std::string>>& docs,
                                                             const std::set<Bigram>& joins) {
  std::vector<std::vector<std::string>> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<std::string> rewritten;
    for (std::size_t i = 0; i < doc.size(); ++i) {
      if (i + 1 < doc.size() && joins.count({doc[i], doc[i + 1]})) {
        rewritten.push_back(doc[i] + "_" + doc[i + 1]);
        ++i;
      } else {
        rewritten.push_back(doc[i]);
      }
    }
    out.push_back(std::move(rewritten));
  }
  return out;
}

inline std::vector<std::vector<std::string>> compound_bigrams(const std::vector<std::vector<std::string>>& docs,
                                                              const TokenizerConfig& cfg) {
  return apply_compounds(docs, compound_set(docs, cfg));
}

struct ChiSquared {
  double chi2 = 0.0;
  double signed_chi2 = 0.0;  // positive when over-represented in the target
};

/// Pearson chi-squared of the 2x2 table
///   [a: feature in target,    c: other tokens in target]
///   [b: feature in reference, d: other tokens in reference]
/// via the closed form N (ad - bc)^2 / ((a+b)(c+d)(a+c)(b+d)).
inline ChiSquared chi_squared_2x2(double a, double b, double c, double d, bool yates = false) {
  const double n = a + b + c + d;
  const double den = (a + b) * (c + d) * (a + c) * (b + d);
  if (!(den > 0.0)) return {};
  const double diff = a * d - b * c;
  double num = std::abs(diff);
  if (yates) num = std::max(0.0, num - n / 2.0);
  const double chi2 = n * num * num / den;
  return {chi2, diff > 0.0 ? chi2 : (diff < 0.0 ? -chi2 : 0.0)};
}

struct KeynessRow {
  std::string feature;
  std::optional<IdeologyClass> target_class;
  double chi2 = 0.0;
  double signed_chi2 = 0.0;
  long target_count = 0;
  long reference_count = 0;
  long target_total = 0;
  long reference_total = 0;
};

/// Every feature of the union vocabulary, ranked by signed chi-squared
/// descending (ties by feature name).
inline std::vector<KeynessRow> keyness(const std::vector<std::vector<std::string>>& target_docs,
                                       const std::vector<std::vector<std::string>>& reference_docs,
                                       bool yates = false) {
  std::map<std::string, std::pair<long, long>> counts;
  long target_total = 0, reference_total = 0;
  for (const auto& doc : target_docs)
    for (const auto& t : doc) {
      ++counts[t].first;
      ++target_total;
    }
  for (const auto& doc : reference_docs)
    for (const auto& t : doc) {
      ++counts[t].second;
      ++reference_total;
    }
  if (target_total == 0) throw Error("keyness: target side has no tokens");
  if (reference_total == 0) throw Error("keyness: reference side has no tokens");

  std::vector<KeynessRow> rows;
  rows.reserve(counts.size());
  for (const auto& [feature, ab] : counts) {
    const auto [a, b] = ab;
    const auto stat = chi_squared_2x2(static_cast<double>(a), static_cast<double>(b),
                                      static_cast<double>(target_total - a),
                                      static_cast<double>(reference_total - b), yates);
    rows.push_back({feature, std::nullopt, stat.chi2, stat.signed_chi2, a, b, target_total, reference_total});
  }
  std::sort(rows.begin(), rows.end(), [](const KeynessRow& x, const KeynessRow& y) {
    if (x.signed_chi2 != y.signed_chi2) return x.signed_chi2 > y.signed_chi2;
    return x.feature < y.feature;
  });
  return rows;
}

enum class KeynessReference { Rest, Opposite };

struct KeynessConfig {
  TokenizerConfig tokenizer;
  bool yates = false;
  std::size_t top_n = 30;
  KeynessReference reference = KeynessReference::Rest;
};

/// Tokenized and compounded economic sentences, keyed by sentence id. The
/// compound pass runs over every economic sentence of the corpus.
class KeynessCorpus {
public:
  KeynessCorpus(const Corpus& corpus, const TokenizerConfig& cfg) {
    std::vector<std::vector<std::string>> docs;
    std::vector<std::string> ids;
    for (const auto* s : corpus.economic_sentences()) {
      ids.push_back(s->id);
      docs.push_back(tokenize(s->text, cfg));
    }
    docs = compound_bigrams(docs, cfg);
    for (std::size_t i = 0; i < ids.size(); ++i) docs_.emplace(ids[i], std::move(docs[i]));
  }

  const std::vector<std::string>* find(const std::string& sentence_id) const {
    auto it = docs_.find(sentence_id);
    return it == docs_.end() ? nullptr : &it->second;
  }

private:
  std::unordered_map<std::string, std::vector<std::string>> docs_;
};

/// Top positive keyness rows for sentences a model assigned to `cls`,
/// against the rest of its ok predictions (or only the opposite class).
inline std::vector<KeynessRow> keyness_by_class(const PredictionSet& predictions, const KeynessCorpus& docs,
                                                IdeologyClass cls, const KeynessConfig& cfg = {}) {
  std::vector<std::vector<std::string>> target, reference;
  for (const auto& p : predictions.items) {
    if (!p.ok()) continue;
    const auto* doc = docs.find(p.sentence_id);
    if (!doc) throw Error("keyness_by_class: prediction for unknown or non-economic sentence " + p.sentence_id);
    if (*p.label == cls) {
      target.push_back(*doc);
    } else if (cfg.reference == KeynessReference::Rest || cls == IdeologyClass::Neutral ||
               *p.label != IdeologyClass::Neutral) {
      reference.push_back(*doc);
    }
  }
  if (target.empty())
    throw Error("keyness_by_class: model " + predictions.model_id + " predicted no " +
                std::string(to_string(cls)) + " sentences");
  if (reference.empty()) throw Error("keyness_by_class: empty reference set for " + std::string(to_string(cls)));
  auto rows = keyness(target, reference, cfg.yates);
  std::vector<KeynessRow> out;
  for (auto& r : rows) {
    if (out.size() >= cfg.top_n) break;
    if (!(r.signed_chi2 > 0.0)) break;
    r.target_class = cls;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<KeynessRow> keyness_by_class(const PredictionSet& predictions, const Corpus& corpus,
                                                IdeologyClass cls, const KeynessConfig& cfg = {}) {
  return keyness_by_class(predictions, KeynessCorpus(corpus, cfg.tokenizer), cls, cfg);
}

}  // namespace ideoscale
