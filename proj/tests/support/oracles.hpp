#pragma once

// Brute-force reference implementations for property tests. Written from
// the definitions, deliberately unlike the library's code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ideoscale/types.hpp"

namespace oracle {

/// Log-odds through the difference of logs of the doubled counts.
inline double log_odds(long right, long left) {
  return std::log(2.0 * static_cast<double>(right) + 1.0) - std::log(2.0 * static_cast<double>(left) + 1.0);
}

/// Majority class over sign-mapped codes, or nullopt on a shared maximum.
inline std::optional<ideoscale::IdeologyClass> majority(const std::vector<int>& codes) {
  std::array<int, 3> counts{};
  for (int c : codes) {
    if (c < 0) counts[0]++;
    else if (c == 0) counts[1]++;
    else counts[2]++;
  }
  std::array<int, 3> sorted = counts;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (sorted[0] == sorted[1]) return std::nullopt;
  for (int k = 0; k < 3; ++k)
    if (counts[k] == sorted[0]) return static_cast<ideoscale::IdeologyClass>(k);
  return std::nullopt;
}

/// 3x3 tally by scanning every (gold, predicted) cell for each pair.
inline std::array<std::array<long, 3>, 3> tally(const std::vector<std::pair<int, int>>& pairs) {
  std::array<std::array<long, 3>, 3> m{};
  for (int g = 0; g < 3; ++g)
    for (int p = 0; p < 3; ++p)
      m[g][p] = std::count(pairs.begin(), pairs.end(), std::pair<int, int>{g, p});
  return m;
}

struct BinaryCounts {
  long tp = 0, fp = 0, fn = 0, tn = 0;
};

inline BinaryCounts one_vs_rest(const std::vector<std::pair<int, int>>& pairs, int cls) {
  BinaryCounts b;
  for (auto [g, p] : pairs) {
    const bool gold_pos = g == cls, pred_pos = p == cls;
    if (gold_pos && pred_pos) ++b.tp;
    else if (!gold_pos && pred_pos) ++b.fp;
    else if (gold_pos && !pred_pos) ++b.fn;
    else ++b.tn;
  }
  return b;
}

/// Sum over cells of (observed - expected)^2 / expected.
inline double chi_squared(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double row[2] = {a + c, b + d};  // target, reference
  const double col[2] = {a + b, c + d};  // feature, other
  const double obs[2][2] = {{a, c}, {b, d}};
  double sum = 0.0;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double e = row[i] * col[j] / n;
      if (e == 0.0) return 0.0;
      sum += (obs[i][j] - e) * (obs[i][j] - e) / e;
    }
  return sum;
}

/// Textbook sample correlation in long double.
inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const long double mx = sx / n, my = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::nullopt;
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace oracle
