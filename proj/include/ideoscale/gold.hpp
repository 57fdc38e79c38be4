#pragma once

#include <array>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ideoscale/corpus.hpp"
#include "ideoscale/types.hpp"

namespace ideoscale {

/// Collapses the coders' numeric scale onto the three classes.
class CodeMapping {
public:
  CodeMapping() : CodeMapping(sign_convention({-2, -1, 0, 1, 2})) {}
  explicit CodeMapping(std::map<int, IdeologyClass> table) : table_(std::move(table)) {}

  /// Negative codes are Left, zero is Neutral, positive codes are Right.
  static CodeMapping sign_convention(const std::set<int>& codes) {
    std::map<int, IdeologyClass> table;
    for (int c : codes)
      table[c] = c < 0 ? IdeologyClass::Left : (c == 0 ? IdeologyClass::Neutral : IdeologyClass::Right);
    return CodeMapping(std::move(table));
  }

  IdeologyClass map(int code) const {
    auto it = table_.find(code);
    if (it == table_.end()) throw Error("code mapping: unmapped code " + std::to_string(code));
    return it->second;
  }

  const std::map<int, IdeologyClass>& table() const noexcept { return table_; }

private:
  std::map<int, IdeologyClass> table_;
};

inline IdeologyClass map_code(int code, const CodeMapping& mapping) { return mapping.map(code); }

/// Whether the vote is taken over mapped classes (default) or over raw codes.
enum class VotingMode { TriClass, RawCode };

struct GoldLabel {
  std::string sentence_id;
  CoderSource coder_source = CoderSource::Expert;
  IdeologyClass label = IdeologyClass::Neutral;
  int support = 0;
  int total = 0;
};

/// No strict plurality; the sentence is excluded rather than tie-broken.
struct Tie {
  std::string sentence_id;
  CoderSource coder_source = CoderSource::Expert;
  std::array<int, 3> class_counts{};  // indexed by IdeologyClass
  int top_count = 0;
  int total = 0;
};

using MajorityOutcome = std::variant<GoldLabel, Tie>;

/// Strict-plurality vote over one sentence's codes from one coder source.
inline MajorityOutcome majority_label(std::span<const int> codes, const CodeMapping& mapping,
                                      VotingMode mode = VotingMode::TriClass) {
  if (codes.empty()) throw Error("majority_label: empty annotation list");
  std::array<int, 3> class_counts{};
  for (int c : codes) ++class_counts[index_of(mapping.map(c))];
  const int total = static_cast<int>(codes.size());

  if (mode == VotingMode::TriClass) {
    int best = -1;
    bool shared = false;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      if (class_counts[k] > best) {
        best = class_counts[k];
        arg = k;
        shared = false;
      } else if (class_counts[k] == best) {
        shared = true;
      }
    }
    if (shared) return Tie{{}, {}, class_counts, best, total};
    return GoldLabel{{}, {}, static_cast<IdeologyClass>(arg), best, total};
  }

  std::map<int, int> raw_counts;
  for (int c : codes) ++raw_counts[c];
  int best = -1;
  int arg = 0;
  bool shared = false;
  for (auto [code, n] : raw_counts) {
    if (n > best) {
      best = n;
      arg = code;
      shared = false;
    } else if (n == best) {
      shared = true;
    }
  }
  if (shared) return Tie{{}, {}, class_counts, best, total};
  return GoldLabel{{}, {}, mapping.map(arg), best, total};
}

/// Annotation-level form; all annotations must share sentence and source.
inline MajorityOutcome majority_label(std::span<const Annotation* const> annotations, const CodeMapping& mapping,
                                      VotingMode mode = VotingMode::TriClass) {
  if (annotations.empty()) throw Error("majority_label: empty annotation list");
  std::vector<int> codes;
  codes.reserve(annotations.size());
  const auto& first = *annotations.front();
  for (const auto* a : annotations) {
    if (a->sentence_id != first.sentence_id || a->coder_source != first.coder_source)
      throw Error("majority_label: annotations span several sentences or sources");
    codes.push_back(a->code);
  }
  auto outcome = majority_label(std::span<const int>(codes), mapping, mode);
  std::visit(
      [&](auto& o) {
        o.sentence_id = first.sentence_id;
        o.coder_source = first.coder_source;
      },
      outcome);
  return outcome;
}

/// Gold labels of one coder source over the economic sentences, corpus order.
class GoldLabelSet {
public:
  CoderSource source = CoderSource::Expert;
  std::vector<GoldLabel> labels;
  std::vector<Tie> ties;
  std::size_t uncoded = 0;  // economic sentences with no annotation from this source

  const GoldLabel* find(std::string_view sentence_id) const {
    auto it = index_.find(std::string(sentence_id));
    return it == index_.end() ? nullptr : &labels[it->second];
  }
  std::size_t size() const noexcept { return labels.size(); }

  void add(GoldLabel g) {
    index_.emplace(g.sentence_id, labels.size());
    labels.push_back(std::move(g));
  }

private:
  std::unordered_map<std::string, std::size_t> index_;
};

inline GoldLabelSet gold_label_set(const Corpus& corpus, CoderSource source, const CodeMapping& mapping,
                                   VotingMode mode = VotingMode::TriClass) {
  GoldLabelSet out;
  out.source = source;
  for (const auto* s : corpus.economic_sentences()) {
    const auto anns = corpus.annotations_for(s->id, source);
    if (anns.empty()) {
      ++out.uncoded;
      continue;
    }
    auto outcome = majority_label(std::span<const Annotation* const>(anns), mapping, mode);
    if (auto* g = std::get_if<GoldLabel>(&outcome)) out.add(std::move(*g));
    else out.ties.push_back(std::get<Tie>(std::move(outcome)));
  }
  return out;
}

struct HumanManifestoScore {
  std::string manifesto_id;
  CoderSource coder_source = CoderSource::Expert;
  double mean_position = 0.0;  // negative = left
  std::size_t sentences = 0;
};

/// Mean over a manifesto's economic sentences of each sentence's mean code,
/// unweighted at both stages. Throws naming every manifesto with no coded
/// economic sentence for `source`.
inline std::vector<HumanManifestoScore> human_manifesto_scores(const Corpus& corpus, CoderSource source) {
  std::unordered_map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto* s : corpus.economic_sentences()) {
    const auto anns = corpus.annotations_for(s->id, source);
    if (anns.empty()) continue;
    double sum = 0.0;
    for (const auto* a : anns) sum += a->code;
    auto& [total, n] = acc[s->manifesto_id];
    total += sum / static_cast<double>(anns.size());
    ++n;
  }
  std::vector<HumanManifestoScore> out;
  std::string missing;
  for (const auto& m : corpus.manifestos()) {
    auto it = acc.find(m.id);
    if (it == acc.end()) {
      missing += (missing.empty() ? "" : ", ") + m.id;
      continue;
    }
    out.push_back({m.id, source, it->second.first / static_cast<double>(it->second.second), it->second.second});
  }
  if (!missing.empty())
    throw Error("human_manifesto_scores: no coded economic sentences from " + std::string(to_string(source)) +
                " coders for manifesto(s) " + missing);
  return out;
}

/// sentence_id, source, label, support, total (tab separated, with header).
inline void write_gold_labels(std::ostream& out, const GoldLabelSet& gold) {
  out << "sentence_id\tsource\tlabel\tsupport\ttotal\n";
  for (const auto& g : gold.labels)
    out << g.sentence_id << '\t' << to_string(g.coder_source) << '\t' << to_string(g.label) << '\t' << g.support
        << '\t' << g.total << '\n';
}

inline void write_gold_ties(std::ostream& out, const GoldLabelSet& gold) {
  out << "sentence_id\tsource\tn_left\tn_neutral\tn_right\ttotal\n";
  for (const auto& t : gold.ties)
    out << t.sentence_id << '\t' << to_string(t.coder_source) << '\t' << t.class_counts[0] << '\t'
        << t.class_counts[1] << '\t' << t.class_counts[2] << '\t' << t.total << '\n';
}

}  // namespace ideoscale
