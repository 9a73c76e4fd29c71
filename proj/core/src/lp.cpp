#include "g2p/lp.hpp"

#include <cmath>
#include <limits>

#include "g2p/error.hpp"

namespace g2p {

namespace {

struct Tableau {
  // rows_[i] holds the constraint row, last entry is the right-hand side.
  std::vector<std::vector<double>> rows;
  std::vector<int> basis;
  int cols = 0;  // number of structural + slack + artificial columns

  void pivot(int r, int col) {
    auto& pr = rows[r];
    const double p = pr[col];
    for (double& v : pr) v /= p;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (static_cast<int>(i) == r) continue;
      const double f = rows[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= cols; ++j) rows[i][j] -= f * pr[j];
    }
    basis[r] = col;
  }

  // Maximizes obj·x over the current basis. Columns with allowed[j] == false
  // never enter. Returns false when unbounded.
  bool optimize(const std::vector<double>& obj, const std::vector<char>& allowed, double tol) {
    const int m = static_cast<int>(rows.size());
    for (int iter = 0; iter < 100000; ++iter) {
      int enter = -1;
      for (int j = 0; j < cols && enter < 0; ++j) {
        if (!allowed[j]) continue;
        double reduced = obj[j];
        for (int i = 0; i < m; ++i) reduced -= obj[basis[i]] * rows[i][j];
        if (reduced > tol) enter = j;
      }
      if (enter < 0) return true;
      int leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        const double a = rows[i][enter];
        if (a <= tol) continue;
        const double ratio = rows[i][cols] / a;
        if (ratio < best - tol || (std::abs(ratio - best) <= tol && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    throw Error("simplex iteration limit reached");
  }
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, double tol) {
  const int m = static_cast<int>(lp.b.size());
  const int n = static_cast<int>(lp.c.size());
  if (static_cast<int>(lp.a.size()) != m) throw Error("LP row count mismatch");
  for (const auto& row : lp.a) {
    if (static_cast<int>(row.size()) != n) throw Error("LP column count mismatch");
  }

  // Columns: n structural, m slacks, then one artificial per negative-rhs row.
  int artificials = 0;
  for (double v : lp.b) artificials += v < 0.0 ? 1 : 0;
  Tableau t;
  t.cols = n + m + artificials;
  t.rows.assign(m, std::vector<double>(t.cols + 1, 0.0));
  t.basis.assign(m, -1);
  int next_art = n + m;
  for (int i = 0; i < m; ++i) {
    const double sign = lp.b[i] < 0.0 ? -1.0 : 1.0;
    auto& row = t.rows[i];
    for (int j = 0; j < n; ++j) row[j] = sign * lp.a[i][j];
    row[n + i] = sign;
    row[t.cols] = sign * lp.b[i];
    if (sign < 0.0) {
      row[next_art] = 1.0;
      t.basis[i] = next_art++;
    } else {
      t.basis[i] = n + i;
    }
  }

  std::vector<char> allowed(t.cols, 1);
  if (artificials > 0) {
    std::vector<double> phase1(t.cols, 0.0);
    for (int j = n + m; j < t.cols; ++j) phase1[j] = -1.0;
    t.optimize(phase1, allowed, tol);
    double infeasibility = 0.0;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= n + m) infeasibility += t.rows[i][t.cols];
    }
    if (infeasibility > 1e-9) return {};
    // Drive remaining (zero-valued) artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < n + m) continue;
      for (int j = 0; j < n + m; ++j) {
        if (std::abs(t.rows[i][j]) > tol) {
          t.pivot(i, j);
          break;
        }
      }
    }
    for (int j = n + m; j < t.cols; ++j) allowed[j] = 0;
  }

  std::vector<double> obj(t.cols, 0.0);
  for (int j = 0; j < n; ++j) obj[j] = lp.c[j];
  LpResult r;
  if (!t.optimize(obj, allowed, tol)) {
    r.status = LpStatus::unbounded;
    return r;
  }
  r.status = LpStatus::optimal;
  r.x.assign(n, 0.0);
  for (int i = 0; i < m; ++i) {
    if (t.basis[i] < n) r.x[t.basis[i]] = t.rows[i][t.cols];
  }
  for (int j = 0; j < n; ++j) r.objective += lp.c[j] * r.x[j];
  return r;
}

}  // namespace g2p
