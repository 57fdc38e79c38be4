#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ideoscale/corpus.hpp"
#include "ideoscale/gold.hpp"
#include "ideoscale/prediction.hpp"

namespace ideoscale {

struct LabelCounts {
  std::string manifesto_id;
  long n_right = 0;
  long n_left = 0;
  long n_neutral = 0;

  long total() const noexcept { return n_right + n_left + n_neutral; }
};

enum class LogBase { Natural, Ten };

/// Smoothed log-odds of right over left labels: log((R + 0.5) / (L + 0.5)).
/// Neutral labels never enter the score.
inline double ideology_score(long n_right, long n_left, LogBase base = LogBase::Natural) {
  if (n_right < 0 || n_left < 0) throw Error("ideology_score: negative count");
  const double ratio = (static_cast<double>(n_right) + 0.5) / (static_cast<double>(n_left) + 0.5);
  return base == LogBase::Natural ? std::log(ratio) : std::log10(ratio);
}

inline double ideology_score(const LabelCounts& c, LogBase base = LogBase::Natural) {
  return ideology_score(c.n_right, c.n_left, base);
}

/// Per-manifesto class tallies of the ok predictions, in corpus manifesto
/// order. Manifestos without any ok prediction are omitted.
inline std::vector<LabelCounts> count_labels(const PredictionSet& predictions, const Corpus& corpus) {
  std::unordered_map<std::string, LabelCounts> by_manifesto;
  for (const auto& p : predictions.items) {
    const auto* s = corpus.find_sentence(p.sentence_id);
    if (!s) throw Error("count_labels: prediction for unknown sentence " + p.sentence_id);
    if (!p.ok()) continue;
    auto& c = by_manifesto[s->manifesto_id];
    c.manifesto_id = s->manifesto_id;
    switch (*p.label) {
      case IdeologyClass::Right: ++c.n_right; break;
      case IdeologyClass::Left: ++c.n_left; break;
      case IdeologyClass::Neutral: ++c.n_neutral; break;
    }
  }
  std::vector<LabelCounts> out;
  for (const auto& m : corpus.manifestos())
    if (auto it = by_manifesto.find(m.id); it != by_manifesto.end()) out.push_back(it->second);
  return out;
}

/// z-scores with the sample (n - 1) standard deviation.
inline std::vector<double> standardize(std::span<const double> scores) {
  if (scores.size() < 2) throw Error("standardize: need at least two scores");
  double mean = 0.0;
  for (double v : scores) mean += v;
  mean /= static_cast<double>(scores.size());
  double ss = 0.0;
  for (double v : scores) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(scores.size() - 1));
  if (!(sd > 0.0) || !std::isfinite(sd)) throw Error("standardize: zero variance");
  std::vector<double> out;
  out.reserve(scores.size());
  for (double v : scores) out.push_back((v - mean) / sd);
  return out;
}

/// Pearson product-moment correlation, or nullopt when undefined (fewer than
/// two pairs or a constant vector).
inline std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw Error("pearson: need at least two pairs");
  auto r = try_pearson(x, y);
  if (!r) throw Error("pearson: constant vector");
  return *r;
}

struct IdeologyScore {
  std::string manifesto_id;
  std::string source_id;  // model id, or "expert" / "crowd"
  double raw = 0.0;
  std::optional<double> z;  // absent when the source's scores are constant
};

namespace detail {
inline void fill_z(std::vector<IdeologyScore>& scores) {
  std::vector<double> raw;
  for (const auto& s : scores) raw.push_back(s.raw);
  if (raw.size() < 2) return;
  try {
    const auto z = standardize(raw);
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i].z = z[i];
  } catch (const Error&) {
  }
}
}  // namespace detail

inline std::vector<IdeologyScore> model_ideology_scores(const std::vector<LabelCounts>& counts,
                                                        const std::string& model_id,
                                                        LogBase base = LogBase::Natural) {
  std::vector<IdeologyScore> out;
  for (const auto& c : counts) out.push_back({c.manifesto_id, model_id, ideology_score(c, base), std::nullopt});
  detail::fill_z(out);
  return out;
}

inline std::vector<IdeologyScore> human_ideology_scores(const std::vector<HumanManifestoScore>& human) {
  std::vector<IdeologyScore> out;
  for (const auto& h : human)
    out.push_back({h.manifesto_id, std::string(to_string(h.coder_source)), h.mean_position, std::nullopt});
  detail::fill_z(out);
  return out;
}

struct CorrelationReport {
  std::string model_id;
  CoderSource benchmark = CoderSource::Expert;
  std::string scope;  // "overall" or "party:<name>"
  std::optional<double> r;  // nullopt reported as "undefined"
  std::size_t n = 0;
};

enum class Grouping { Overall, ByParty, Both };

/// Correlates model and human manifesto positions on their standardized
/// values. Groups with fewer than two pairs or a constant side are reported
/// with an undefined coefficient rather than dropped.
inline std::vector<CorrelationReport> correlation_report(const std::string& model_id,
                                                         const std::vector<IdeologyScore>& model_scores,
                                                         CoderSource benchmark,
                                                         const std::vector<IdeologyScore>& human_scores,
                                                         const Corpus& corpus, Grouping grouping = Grouping::Both) {
  std::unordered_map<std::string, const IdeologyScore*> human;
  for (const auto& h : human_scores) human.emplace(h.manifesto_id, &h);

  struct Pair {
    std::string party;
    std::optional<double> x, y;
  };
  std::vector<Pair> pairs;
  for (const auto& m : model_scores) {
    auto it = human.find(m.manifesto_id);
    if (it == human.end()) continue;
    const auto* man = corpus.find_manifesto(m.manifesto_id);
    if (!man) throw Error("correlation_report: unknown manifesto " + m.manifesto_id);
    pairs.push_back({man->party, m.z, it->second->z});
  }

  const auto compute = [&](const std::string& scope, const std::optional<std::string>& party) {
    std::vector<double> xs, ys;
    bool undefined = false;
    std::size_t n = 0;
    for (const auto& p : pairs) {
      if (party && p.party != *party) continue;
      ++n;
      if (!p.x || !p.y) {
        undefined = true;
        continue;
      }
      xs.push_back(*p.x);
      ys.push_back(*p.y);
    }
    CorrelationReport rep{model_id, benchmark, scope, std::nullopt, n};
    if (!undefined) rep.r = try_pearson(xs, ys);
    return rep;
  };

  std::vector<CorrelationReport> out;
  if (grouping != Grouping::ByParty) out.push_back(compute("overall", std::nullopt));
  if (grouping != Grouping::Overall) {
    std::set<std::string> parties;
    for (const auto& m : corpus.manifestos()) parties.insert(m.party);
    for (const auto& party : parties) out.push_back(compute("party:" + party, party));
  }
  return out;
}

}  // namespace ideoscale
