#ifndef FSR_PERTURBATION_HPP
#define FSR_PERTURBATION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fsr/core_types.hpp"

namespace fsr {

/// Dataset indices in decreasing order of performance value.
struct Ordering {
  std::vector<std::size_t> indices;
  bool operator==(const Ordering&) const = default;
  auto operator<=>(const Ordering&) const = default;
};

struct RankedOrdering {
  Ordering ordering;
  std::size_t rank = 0;  // 1-based position of index 0
};

/// Unbiased draw from [0, bound) by rejection on the raw engine output.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

/// Fisher-Yates over 0..k-1.
inline Permutation random_permutation(std::mt19937_64& rng, std::size_t k) {
  Permutation p = identity_permutation(k);
  for (std::size_t i = k; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(p[i - 1], p[j]);
  }
  return p;
}

/// Draws the random setup. Deterministic in (method, m, n, seed).
inline PerturbationSetup gen_setup(Method method, std::size_t m, std::size_t n, std::uint64_t seed) {
  if (m < 2) throw DomainError("gen_setup needs m >= 2");
  if (n < 1) throw DomainError("gen_setup needs n >= 1");

  std::mt19937_64 rng(seed);
  PerturbationSetup s;
  s.method = method;
  s.m = m;
  s.n = n;
  s.seed = seed;
  s.rng = "mt19937_64";
  if (method == Method::SignFlip) {
    s.sign_matrix.assign(m, std::vector<int>(n, 1));
    for (std::size_t i = 1; i < m; ++i) {
      for (std::size_t k = 0; k < n; ++k) s.sign_matrix[i][k] = (rng() >> 63) ? -1 : 1;
    }
  } else {
    s.permutations.reserve(m);
    s.permutations.push_back(identity_permutation(n));
    for (std::size_t i = 1; i < m; ++i) s.permutations.push_back(random_permutation(rng, n));
  }
  s.tie_perm = random_permutation(rng, m);
  return s;
}

/// Sorts indices by decreasing value. Equal values are resolved by
/// tie_perm: the index that appears earlier in tie_perm counts as larger.
inline RankedOrdering rank_of_one(const PerformanceVector& z, const Permutation& tie_perm) {
  if (z.size() != tie_perm.size()) {
    throw DomainError("performance vector length " + std::to_string(z.size()) +
                      " != tie permutation length " + std::to_string(tie_perm.size()));
  }
  if (z.empty()) throw DomainError("empty performance vector");
  if (!is_permutation_of_range(tie_perm)) throw DomainError("tie_perm is not a permutation");

  std::vector<std::size_t> pos(tie_perm.size());
  for (std::size_t k = 0; k < tie_perm.size(); ++k) pos[tie_perm[k]] = k;

  RankedOrdering out;
  out.ordering.indices = identity_permutation(z.size());
  std::sort(out.ordering.indices.begin(), out.ordering.indices.end(), [&](std::size_t a, std::size_t b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return pos[a] < pos[b];
  });
  const auto it = std::find(out.ordering.indices.begin(), out.ordering.indices.end(), std::size_t{0});
  out.rank = static_cast<std::size_t>(it - out.ordering.indices.begin()) + 1;
  return out;
}

/// Verdict from a performance vector under a rank rule. Non-finite values
/// reject with a diagnostic (rank reported as 1).
inline TestVerdict verdict_from(PerformanceVector z, const Permutation& tie_perm, const RankRule& rule) {
  if (z.size() != rule.m()) throw DomainError("rank rule m does not match number of datasets");
  TestVerdict v;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!std::isfinite(z[i])) {
      v.rank_of_one = 1;
      v.accepted = false;
      v.diagnostic = "non-finite performance value Z_" + std::to_string(i + 1);
      v.z_values = std::move(z);
      return v;
    }
  }
  v.rank_of_one = rank_of_one(z, tie_perm).rank;
  v.accepted = rule.accepts(v.rank_of_one);
  v.z_values = std::move(z);
  return v;
}

/// Largest m for which accepted_orderings enumerates S_m.
inline constexpr std::size_t kMaxEnumeratedM = 10;

/// The r orderings with index 0 placed as late as possible; among equal
/// positions the lexicographically smaller ordering comes first.
inline std::vector<Ordering> accepted_orderings(std::size_t m, std::size_t r) {
  if (m < 1 || m > kMaxEnumeratedM) {
    throw DomainError("accepted_orderings supports 1 <= m <= " + std::to_string(kMaxEnumeratedM));
  }
  std::size_t total = 1;
  for (std::size_t k = 2; k <= m; ++k) total *= k;
  if (r < 1 || r > total) {
    throw DomainError("r must satisfy 1 <= r <= m! = " + std::to_string(total));
  }

  // Walk positions of index 0 from last to first; within one position the
  // orderings are the lexicographically sorted arrangements of the rest.
  std::vector<Ordering> out;
  out.reserve(r);
  for (std::size_t pos = m; pos-- > 0 && out.size() < r;) {
    std::vector<std::size_t> rest;
    for (std::size_t k = 1; k < m; ++k) rest.push_back(k);
    do {
      Ordering o;
      o.indices = rest;
      o.indices.insert(o.indices.begin() + static_cast<std::ptrdiff_t>(pos), 0);
      out.push_back(std::move(o));
    } while (out.size() < r && std::next_permutation(rest.begin(), rest.end()));
  }
  return out;
}

inline double ordering_set_confidence(std::size_t m, std::size_t r) {
  double total = 1.0;
  for (std::size_t k = 2; k <= m; ++k) total *= static_cast<double>(k);
  return static_cast<double>(r) / total;
}

/// Result of applying `first` then `second`: result[i] = first[second[i]].
inline Permutation compose_permutation(const Permutation& first, const Permutation& second) {
  if (first.size() != second.size()) throw DomainError("cannot compose permutations of different lengths");
  Permutation out(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) out[i] = first[second[i]];
  return out;
}

inline Permutation inverse_permutation(const Permutation& p) {
  Permutation inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[p[i]] = i;
  return inv;
}

/// w[i] = v[p[i]], i.e. P v for the permutation matrix of p.
inline Eigen::VectorXd apply_permutation(const Permutation& p, const Eigen::VectorXd& v) {
  if (static_cast<Eigen::Index>(p.size()) != v.size()) throw DomainError("permutation length mismatch");
  Eigen::VectorXd w(v.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = v(static_cast<Eigen::Index>(p[i]));
  }
  return w;
}

}  // namespace fsr

#endif  // FSR_PERTURBATION_HPP
