// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0

#include "macopt/simplex.hpp"

#include <cmath>
#include <limits>

#include "macopt/errors.hpp"

namespace macopt {

namespace {

constexpr double kPivotEps = 1e-12;

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), t_((rows + 1) * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return t_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return t_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& cost(std::size_t c) { return at(rows_, c); }

  void pivot(std::size_t pr, std::size_t pc) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r <= rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::size_t rows_, cols_;
  std::vector<double> t_;
};

enum class Outcome { kOptimal, kUnbounded };

// Bland's rule: lowest-index improving column, lowest-index leaving basic
// variable among ratio ties.
Outcome run_simplex(Tableau& t, std::vector<std::size_t>& basis, std::size_t allowed_cols, int& pivots) {
  const int max_pivots = 50000;
  while (pivots < max_pivots) {
    std::size_t enter = allowed_cols;
    for (std::size_t c = 0; c < allowed_cols; ++c) {
      if (t.cost(c) < -kPivotEps) {
        enter = c;
        break;
      }
    }
    if (enter == allowed_cols) return Outcome::kOptimal;

    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= kPivotEps) continue;
      const double ratio = t.rhs(r) / a;
      if (leave == t.rows() || ratio < best - 1e-15 ||
          (std::abs(ratio - best) <= 1e-15 && basis[r] < basis[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == t.rows()) return Outcome::kUnbounded;
    t.pivot(leave, enter);
    basis[leave] = enter;
    ++pivots;
  }
  throw NumericalError("simplex: pivot limit reached");
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, double feasibility_tol) {
  const std::size_t n = lp.c.size();
  const std::size_t m_ge = lp.a_ge.size();
  const std::size_t m_eq = lp.a_eq.size();
  if (lp.b_ge.size() != m_ge || lp.b_eq.size() != m_eq) throw DimensionError("solve_lp: rhs size mismatch");
  for (const auto& row : lp.a_ge)
    if (row.size() != n) throw DimensionError("solve_lp: ragged constraint row");
  for (const auto& row : lp.a_eq)
    if (row.size() != n) throw DimensionError("solve_lp: ragged constraint row");

  const std::size_t m = m_ge + m_eq;
  // Columns: structural | surplus (one per >= row) | artificial (one per row).
  const std::size_t art0 = n + m_ge;
  const std::size_t cols = art0 + m;
  Tableau t(m, cols);
  std::vector<std::size_t> basis(m);

  for (std::size_t r = 0; r < m; ++r) {
    const bool ge = r < m_ge;
    const auto& row = ge ? lp.a_ge[r] : lp.a_eq[r - m_ge];
    double rhs = ge ? lp.b_ge[r] : lp.b_eq[r - m_ge];
    const double sign = rhs < 0 ? -1.0 : 1.0;
    for (std::size_t c = 0; c < n; ++c) t.at(r, c) = sign * row[c];
    if (ge) t.at(r, n + r) = -sign;
    t.at(r, art0 + r) = 1.0;
    t.rhs(r) = sign * rhs;
    basis[r] = art0 + r;
  }

  // Phase one: minimize the sum of artificials.
  for (std::size_t c = 0; c <= cols; ++c) {
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += t.at(r, c);
    t.at(m, c) = (c >= art0 && c < cols) ? 0.0 : -s;
  }
  LpSolution sol;
  run_simplex(t, basis, cols, sol.pivots);
  const double infeasibility = -t.rhs(m);
  double scale = 1.0;
  for (double b : lp.b_ge) scale = std::max(scale, std::abs(b));
  for (double b : lp.b_eq) scale = std::max(scale, std::abs(b));
  if (infeasibility > feasibility_tol * scale) {
    sol.status = LpSolution::Status::kInfeasible;
    return sol;
  }

  // Drive remaining artificials out of the basis where possible.
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < art0) continue;
    for (std::size_t c = 0; c < art0; ++c) {
      if (std::abs(t.at(r, c)) > 1e-9) {
        t.pivot(r, c);
        basis[r] = c;
        ++sol.pivots;
        break;
      }
    }
  }

  // Phase two objective row: reduced costs of c relative to the basis.
  for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) = (c < n) ? lp.c[c] : 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = basis[r];
    const double cb = b < n ? lp.c[b] : 0.0;
    if (cb == 0.0) continue;
    for (std::size_t c = 0; c <= cols; ++c) t.at(m, c) -= cb * t.at(r, c);
  }
  if (run_simplex(t, basis, art0, sol.pivots) == Outcome::kUnbounded) {
    sol.status = LpSolution::Status::kUnbounded;
    return sol;
  }

  sol.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    if (basis[r] < n) sol.x[basis[r]] = std::max(0.0, t.rhs(r));
  }
  sol.objective = 0.0;
  for (std::size_t c = 0; c < n; ++c) sol.objective += lp.c[c] * sol.x[c];
  sol.status = LpSolution::Status::kOptimal;
  return sol;
}

}  // namespace macopt
