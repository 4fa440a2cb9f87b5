#pragma once

// Agreement between unit rankings: overlap of the k most prunable
// ("first-k") and k most preserved ("last-k") units, and Spearman rank
// correlation of complete orders.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lrpprune/criteria.hpp"
#include "lrpprune/error.hpp"
#include "lrpprune/network.hpp"

namespace lrpprune {

/// Units ordered least important first.
using Ranking = std::vector<UnitId>;

/// |S1 n S2| / min(|S1|, |S2|); duplicates are ignored.
inline double set_similarity(std::span<const UnitId> s1, std::span<const UnitId> s2) {
  if (s1.empty() || s2.empty()) throw ConfigError("set similarity of an empty set is undefined");
  std::vector<UnitId> a(s1.begin(), s1.end()), b(s2.begin(), s2.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  std::size_t common = 0;
  for (auto i = a.begin(), j = b.begin(); i != a.end() && j != b.end();) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common, ++i, ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(std::min(a.size(), b.size()));
}

inline std::span<const UnitId> first_k(const Ranking& r, std::size_t k) {
  if (k == 0 || k > r.size()) throw ConfigError("k must lie in [1, " + std::to_string(r.size()) + "]");
  return std::span<const UnitId>(r).first(k);
}

inline std::span<const UnitId> last_k(const Ranking& r, std::size_t k) {
  if (k == 0 || k > r.size()) throw ConfigError("k must lie in [1, " + std::to_string(r.size()) + "]");
  return std::span<const UnitId>(r).last(k);
}

/// Throws unless both rankings order the same set of units.
inline void check_same_universe(const Ranking& a, const Ranking& b) {
  if (a.size() != b.size()) throw ConfigError("rankings cover different unit sets");
  Ranking x = a, y = b;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x != y) throw ConfigError("rankings cover different unit sets");
  if (std::adjacent_find(x.begin(), x.end()) != x.end()) throw ConfigError("ranking lists a unit twice");
}

/// Spearman correlation of two complete, tie-free orders:
/// 1 - 6 sum d^2 / (m (m^2 - 1)).
inline double spearman(const Ranking& r1, const Ranking& r2) {
  check_same_universe(r1, r2);
  const auto m = r1.size();
  if (m < 2) throw ConfigError("spearman needs at least two units");
  std::vector<std::pair<UnitId, std::size_t>> p1, p2;
  p1.reserve(m);
  p2.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    p1.emplace_back(r1[i], i);
    p2.emplace_back(r2[i], i);
  }
  std::sort(p1.begin(), p1.end());
  std::sort(p2.begin(), p2.end());
  long double sum_d2 = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const long double d = static_cast<long double>(p1[i].second) - static_cast<long double>(p2[i].second);
    sum_d2 += d * d;
  }
  const long double mm = static_cast<long double>(m);
  return static_cast<double>(1.0L - 6.0L * sum_d2 / (mm * (mm * mm - 1.0L)));
}

struct RankingComparison {
  std::size_t k = 0;
  double first_k_similarity = 0.0;
  double last_k_similarity = 0.0;
  double spearman = 0.0;
  std::size_t pairs = 0;  // comparisons averaged
};

inline RankingComparison compare_rankings(const Ranking& a, const Ranking& b, std::size_t k) {
  RankingComparison c;
  c.k = k;
  c.spearman = spearman(a, b);
  c.first_k_similarity = set_similarity(first_k(a, k), first_k(b, k));
  c.last_k_similarity = set_similarity(last_k(a, k), last_k(b, k));
  c.pairs = 1;
  return c;
}

struct CrossCriterionRow {
  Criterion criterion = Criterion::weight;
  double first_k = 0.0;
  double last_k = 0.0;
};

/// Similarity of each criterion's selections to LRP's, averaged over
/// repetitions. Repetition r of a criterion is compared with repetition r of
/// LRP; a criterion with a single ranking (weight) is compared with every
/// LRP repetition.
inline std::vector<CrossCriterionRow> cross_criterion_similarity(const std::map<Criterion, std::vector<Ranking>>& rankings,
                                                                 std::size_t k) {
  const auto lrp = rankings.find(Criterion::lrp);
  if (lrp == rankings.end() || lrp->second.empty()) throw ConfigError("cross-criterion similarity needs LRP rankings");
  const auto& ref = lrp->second;
  std::vector<CrossCriterionRow> out;
  for (const auto& [crit, reps] : rankings) {
    if (reps.empty()) throw ConfigError("criterion " + std::string(to_string(crit)) + " has no rankings");
    if (reps.size() != 1 && reps.size() != ref.size())
      throw ConfigError("criterion " + std::string(to_string(crit)) + " has a different repetition count than LRP");
    CrossCriterionRow row{crit, 0.0, 0.0};
    for (std::size_t r = 0; r < ref.size(); ++r) {
      const auto& mine = reps.size() == 1 ? reps.front() : reps[r];
      check_same_universe(mine, ref[r]);
      row.first_k += set_similarity(first_k(mine, k), first_k(ref[r], k));
      row.last_k += set_similarity(last_k(mine, k), last_k(ref[r], k));
    }
    row.first_k /= static_cast<double>(ref.size());
    row.last_k /= static_cast<double>(ref.size());
    out.push_back(row);
  }
  return out;
}

/// Mean first-k, last-k and Spearman agreement over all unordered pairs of
/// seeds (50 seeds give 1225 pairs).
inline RankingComparison self_consistency(const std::map<std::uint64_t, Ranking>& rankings_by_seed, std::size_t k) {
  if (rankings_by_seed.size() < 2) throw ConfigError("self-consistency needs at least two seeds");
  std::vector<const Ranking*> rs;
  for (const auto& [seed, r] : rankings_by_seed) rs.push_back(&r);
  RankingComparison acc;
  acc.k = k;
  for (std::size_t i = 0; i < rs.size(); ++i)
    for (std::size_t j = i + 1; j < rs.size(); ++j) {
      const auto c = compare_rankings(*rs[i], *rs[j], k);
      acc.first_k_similarity += c.first_k_similarity;
      acc.last_k_similarity += c.last_k_similarity;
      acc.spearman += c.spearman;
      ++acc.pairs;
    }
  const double n = static_cast<double>(acc.pairs);
  acc.first_k_similarity /= n;
  acc.last_k_similarity /= n;
  acc.spearman /= n;
  return acc;
}

struct CrossNRow {
  std::size_t anchor_n = 0;
  std::size_t m = 0;
  double first_k = 0.0;
  double last_k = 0.0;
  std::size_t pairs = 0;
};

/// Agreement between rankings computed with n_anchor references per class
/// and rankings computed with m references, for every m present. Averages
/// over every (anchor seed, m seed) combination, self-pairs included.
inline std::vector<CrossNRow> cross_n_consistency(
    const std::map<std::pair<std::size_t, std::uint64_t>, Ranking>& rankings, std::size_t n_anchor, std::size_t k) {
  std::map<std::size_t, std::vector<const Ranking*>> by_n;
  for (const auto& [key, r] : rankings) by_n[key.first].push_back(&r);
  const auto anchor = by_n.find(n_anchor);
  if (anchor == by_n.end()) throw ConfigError("no rankings for anchor n=" + std::to_string(n_anchor));
  std::vector<CrossNRow> out;
  for (const auto& [m, rs] : by_n) {
    CrossNRow row{n_anchor, m, 0.0, 0.0, 0};
    for (const auto* a : anchor->second)
      for (const auto* b : rs) {
        check_same_universe(*a, *b);
        row.first_k += set_similarity(first_k(*a, k), first_k(*b, k));
        row.last_k += set_similarity(last_k(*a, k), last_k(*b, k));
        ++row.pairs;
      }
    row.first_k /= static_cast<double>(row.pairs);
    row.last_k /= static_cast<double>(row.pairs);
    out.push_back(row);
  }
  return out;
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) throw ConfigError("mean of an empty sample");
  MeanStd s;
  s.count = xs.size();
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  for (double x : xs) s.std += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(s.std / static_cast<double>(xs.size()));
  return s;
}

}  // namespace lrpprune
