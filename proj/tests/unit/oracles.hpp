#pragma once

// Literal O(n^2) transcriptions of the decision rules, used as test oracles.
// Nothing here shares code with the library.

#include <algorithm>
#include <cstddef>
#include <vector>

namespace oracle {

inline std::vector<bool> reject_at_or_below(const std::vector<double>& p, double tau) {
  std::vector<bool> out(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] <= tau;
  return out;
}

inline std::vector<double> sorted(std::vector<double> p) {
  std::sort(p.begin(), p.end());
  return p;
}

// m1 = max{i : P_(j) <= u_j for all j <= i}.
inline std::vector<bool> step_down(const std::vector<double>& p, const std::vector<double>& u) {
  const auto s = sorted(p);
  const std::size_t n = p.size();
  std::size_t m1 = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    bool all = true;
    for (std::size_t j = 1; j <= i; ++j) all = all && s[j - 1] <= u[j - 1];
    if (all) m1 = i;
  }
  if (m1 == 0) return std::vector<bool>(n, false);
  return reject_at_or_below(p, s[m1 - 1]);
}

// m2 = max{i : P_(i) <= u_i}.
inline std::vector<bool> step_up(const std::vector<double>& p, const std::vector<double>& u) {
  const auto s = sorted(p);
  const std::size_t n = p.size();
  std::size_t m2 = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    if (s[i - 1] <= u[i - 1]) m2 = i;
  }
  if (m2 == 0) return std::vector<bool>(n, false);
  return reject_at_or_below(p, s[m2 - 1]);
}

// j = max{i : P_(n-i+k) > k alpha / i for k = 1..i}; none -> reject all,
// otherwise reject P_i <= alpha / j.
inline std::vector<bool> hommel(const std::vector<double>& p, double alpha) {
  const auto s = sorted(p);
  const std::size_t n = p.size();
  std::size_t j = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    bool all = true;
    for (std::size_t k = 1; k <= i; ++k) {
      all = all && s[n - i + k - 1] > static_cast<double>(k) * alpha / static_cast<double>(i);
    }
    if (all) j = i;
  }
  if (j == 0) return std::vector<bool>(n, true);
  return reject_at_or_below(p, alpha / static_cast<double>(j));
}

}  // namespace oracle
