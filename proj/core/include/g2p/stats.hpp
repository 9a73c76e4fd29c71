#pragma once

#include <span>

namespace g2p {

double mean(std::span<const double> x);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double stddev(std::span<const double> x);

struct RankSumResult {
  double rank_sum = 0.0;  // W, rank sum of the first sample (midranks on ties)
  double u = 0.0;         // W - n(n+1)/2
  double z = 0.0;         // normal score (0 when exact)
  double p_value = 1.0;   // two-sided
  bool exact = false;
};

/// Wilcoxon rank-sum test. Exact null distribution when there are no ties and
/// n + m <= 40, normal approximation with tie and continuity corrections
/// otherwise.
RankSumResult rank_sum_test(std::span<const double> a, std::span<const double> b);

/// Exact two-sided p-value of rank sum `w` for samples of sizes n and m.
double rank_sum_exact_p(double w, int n, int m);

double bonferroni(double p, int comparisons);

}  // namespace g2p
