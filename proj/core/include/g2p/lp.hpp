#pragma once

#include <vector>

namespace g2p {

/// maximize c·x  subject to  A x <= b,  x >= 0.
struct LinearProgram {
  std::vector<std::vector<double>> a;
  std::vector<double> b;
  std::vector<double> c;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
  LpStatus status = LpStatus::infeasible;
  double objective = 0.0;
  std::vector<double> x;
};

/// Dense two-phase simplex with Bland's rule. Meant for the tiny per-intersection
/// programs of the feasibility check; cost is O(m·n) per pivot.
LpResult solve_lp(const LinearProgram& lp, double tol = 1e-10);

}  // namespace g2p
