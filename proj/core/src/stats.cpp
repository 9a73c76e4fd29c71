#include "g2p/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "g2p/error.hpp"

namespace g2p {

double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double rank_sum_exact_p(double w, int n, int m) {
  // count[k][s]: subsets of size k of {1..N} with rank sum s.
  const int total = n + m;
  const int max_sum = total * (total + 1) / 2;
  std::vector<std::vector<double>> count(n + 1, std::vector<double>(max_sum + 1, 0.0));
  count[0][0] = 1.0;
  for (int r = 1; r <= total; ++r) {
    for (int k = std::min(r, n); k >= 1; --k) {
      for (int s = max_sum; s >= r; --s) count[k][s] += count[k - 1][s - r];
    }
  }
  double all = 0.0, low = 0.0, high = 0.0;
  for (int s = 0; s <= max_sum; ++s) {
    const double c = count[n][s];
    all += c;
    if (s <= w + 1e-9) low += c;
    if (s >= w - 1e-9) high += c;
  }
  return std::min(1.0, 2.0 * std::min(low, high) / all);
}

RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) throw ConfigError("rank-sum test needs two non-empty samples");
  std::vector<std::pair<double, int>> all;
  for (double v : a) all.emplace_back(v, 0);
  for (double v : b) all.emplace_back(v, 1);
  std::sort(all.begin(), all.end());

  RankSumResult r;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < all.size();) {
    std::size_t j = i;
    while (j < all.size() && all[j].first == all[i].first) ++j;
    const double t = static_cast<double>(j - i);
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (all[k].second == 0) r.rank_sum += midrank;
    }
    if (t > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    i = j;
  }
  const double dn = static_cast<double>(n), dm = static_cast<double>(m), N = dn + dm;
  r.u = r.rank_sum - dn * (dn + 1.0) / 2.0;

  if (!ties && n + m <= 40) {
    r.exact = true;
    r.p_value = rank_sum_exact_p(r.rank_sum, static_cast<int>(n), static_cast<int>(m));
    return r;
  }
  const double mu = dn * (N + 1.0) / 2.0;
  const double var = dn * dm / 12.0 * ((N + 1.0) - tie_term / (N * (N - 1.0)));
  if (var <= 0.0) {
    r.p_value = 1.0;
    return r;
  }
  const double diff = r.rank_sum - mu;
  const double corrected = std::max(0.0, std::abs(diff) - 0.5);
  r.z = std::copysign(corrected / std::sqrt(var), diff);
  const boost::math::normal_distribution<double> norm;
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(r.z))));
  return r;
}

double bonferroni(double p, int comparisons) { return std::min(1.0, p * std::max(1, comparisons)); }

}  // namespace g2p
