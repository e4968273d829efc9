#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pdp {

// Dense two-phase primal simplex for small linear programs in standard form:
//   minimize c.x  subject to  A x = b, x >= 0.
// Bland's rule everywhere (lowest eligible index enters and leaves), which
// prevents cycling and makes the pivot sequence deterministic. Intended for
// problems with tens of variables; clarity and reproducibility over speed.
class SimplexLp {
 public:
  enum class Status { optimal, infeasible, unbounded };

  struct Result {
    Status status = Status::infeasible;
    std::vector<double> x;
    double value = 0.0;
    // Dual certificate at the final basis: reduced costs of all structural
    // variables (>= -tol at optimality) and the row multipliers.
    std::vector<double> reduced_costs;
    std::vector<double> duals;
  };

  static Result solve(std::vector<std::vector<double>> A, std::vector<double> b,
                      std::vector<double> c) {
    const int m = int(A.size());
    const int n = m > 0 ? int(A[0].size()) : int(c.size());
    if (int(b.size()) != m || int(c.size()) != n)
      throw std::invalid_argument("simplex: inconsistent dimensions");
    for (int i = 0; i < m; ++i)
      if (int(A[i].size()) != n) throw std::invalid_argument("simplex: ragged matrix");

    // Make b nonnegative so the artificial basis is feasible.
    for (int i = 0; i < m; ++i) {
      if (b[i] < 0.0) {
        b[i] = -b[i];
        for (int j = 0; j < n; ++j) A[i][j] = -A[i][j];
      }
    }

    // Tableau with one artificial variable per row.
    const int total = n + m;
    std::vector<std::vector<double>> tab(m, std::vector<double>(total + 1, 0.0));
    std::vector<int> basis(m);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) tab[i][j] = A[i][j];
      tab[i][n + i] = 1.0;
      tab[i][total] = b[i];
      basis[i] = n + i;
    }

    // Phase 1: minimize the sum of artificials.
    std::vector<double> phase1(total, 0.0);
    for (int j = n; j < total; ++j) phase1[j] = 1.0;
    double art_value = run(tab, basis, phase1, total);
    if (art_value > 1e-9) {
      Result r;
      r.status = Status::infeasible;
      return r;
    }
    // Pivot out any artificial still basic at zero level.
    for (int i = 0; i < m; ++i) {
      if (basis[i] < n) continue;
      int pivot_col = -1;
      for (int j = 0; j < n; ++j) {
        if (std::fabs(tab[i][j]) > 1e-9) {
          pivot_col = j;
          break;
        }
      }
      if (pivot_col >= 0)
        pivot(tab, basis, i, pivot_col, total);
      // Otherwise the row is redundant; the artificial stays basic at zero.
    }

    // Phase 2: original objective, artificials barred from entering.
    std::vector<double> cost(total, 0.0);
    for (int j = 0; j < n; ++j) cost[j] = c[j];
    double value = run(tab, basis, cost, n);
    if (std::isinf(value)) {
      Result r;
      r.status = Status::unbounded;
      return r;
    }

    Result r;
    r.status = Status::optimal;
    r.x.assign(n, 0.0);
    for (int i = 0; i < m; ++i)
      if (basis[i] < n) r.x[basis[i]] = tab[i][total];
    r.value = value;
    r.reduced_costs.assign(n, 0.0);
    for (int j = 0; j < n; ++j) {
      double rc = cost[j];
      for (int i = 0; i < m; ++i) rc -= costed(cost, basis[i]) * tab[i][j];
      r.reduced_costs[j] = rc;
    }
    r.duals.assign(m, 0.0);
    // y_i = c_B B^{-1} e_i, read off the artificial columns.
    for (int i = 0; i < m; ++i) {
      double y = 0.0;
      for (int k = 0; k < m; ++k) y += costed(cost, basis[k]) * tab[k][n + i];
      r.duals[i] = y;
    }
    return r;
  }

 private:
  static double costed(const std::vector<double>& cost, int j) {
    return j < int(cost.size()) ? cost[j] : 0.0;
  }

  static void pivot(std::vector<std::vector<double>>& tab, std::vector<int>& basis, int row,
                    int col, int total) {
    const int m = int(tab.size());
    double piv = tab[row][col];
    for (int j = 0; j <= total; ++j) tab[row][j] /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      double f = tab[i][col];
      if (f == 0.0) continue;
      for (int j = 0; j <= total; ++j) tab[i][j] -= f * tab[row][j];
    }
    basis[row] = col;
  }

  // Runs simplex iterations on the current tableau; only columns with index
  // below enter_limit may enter the basis. Returns the objective value, or
  // +inf when unbounded.
  static double run(std::vector<std::vector<double>>& tab, std::vector<int>& basis,
                    const std::vector<double>& cost, int enter_limit) {
    const int m = int(tab.size());
    const int total = int(tab[0].size()) - 1;
    const double tol = 1e-10;
    while (true) {
      // Reduced costs; Bland: first negative index enters.
      int enter = -1;
      for (int j = 0; j < enter_limit; ++j) {
        double rc = costed(cost, j);
        for (int i = 0; i < m; ++i) rc -= costed(cost, basis[i]) * tab[i][j];
        if (rc < -tol) {
          bool basic = false;
          for (int i = 0; i < m; ++i)
            if (basis[i] == j) basic = true;
          if (!basic) {
            enter = j;
            break;
          }
        }
      }
      if (enter < 0) break;
      // Ratio test; Bland: smallest basis index among ties.
      int leave = -1;
      double best = 0.0;
      for (int i = 0; i < m; ++i) {
        if (tab[i][enter] > tol) {
          double ratio = tab[i][total] / tab[i][enter];
          if (leave < 0 || ratio < best - tol ||
              (ratio < best + tol && basis[i] < basis[leave])) {
            leave = i;
            best = ratio;
          }
        }
      }
      if (leave < 0) return std::numeric_limits<double>::infinity();
      pivot(tab, basis, leave, enter, total);
    }
    double value = 0.0;
    for (int i = 0; i < m; ++i) value += costed(cost, basis[i]) * tab[i][total];
    return value;
  }
};

}  // namespace pdp
