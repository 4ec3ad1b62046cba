#pragma once

#include <limits>
#include <vector>

#include "rotec/linalg.hpp"

namespace rotec::lp {

enum class Status { Optimal, Unbounded, Infeasible };

struct Result {
  Status status = Status::Infeasible;
  Vector x;
  double value = -std::numeric_limits<double>::infinity();
};

/// maximize c'x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,
/// with x_j >= 0 where nonneg[j] is true and x_j free otherwise.
struct Problem {
  Vector c;
  Matrix A_ub;
  Vector b_ub;
  Matrix A_eq;
  Vector b_eq;
  std::vector<bool> nonneg;  // empty means every variable is free
};

namespace detail {

/// Dense two-phase tableau simplex with Bland's anti-cycling rule. Sized for
/// desk-scale problems (tens of variables, a few hundred rows).
class Tableau {
 public:
  Tableau(Eigen::Index rows, Eigen::Index cols) : t_(Matrix::Zero(rows + 1, cols + 1)), basis_(rows, -1) {}

  double& at(Eigen::Index i, Eigen::Index j) { return t_(i, j); }
  double& rhs(Eigen::Index i) { return t_(i, t_.cols() - 1); }
  double& obj(Eigen::Index j) { return t_(t_.rows() - 1, j); }
  double obj_value() const { return t_(t_.rows() - 1, t_.cols() - 1); }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index cols() const { return t_.cols() - 1; }
  std::vector<Eigen::Index>& basis() { return basis_; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t_.row(r) /= t_(r, c);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, c);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = c;
  }

  /// Runs simplex iterations on the current objective row over the allowed
  /// columns. Returns false on unboundedness.
  bool optimize(const std::vector<bool>& allowed, double tol) {
    for (int iter = 0; iter < 50000; ++iter) {
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (allowed[static_cast<std::size_t>(j)] && obj(j) < -tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = t_(i, enter);
        if (a > tol) {
          const double ratio = rhs(i) / a;
          if (ratio < best - 1e-12 ||
              (ratio <= best + 1e-12 && leave >= 0 &&
               basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
            best = std::min(best, ratio);
            leave = i;
          }
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
    fail(ErrorKind::Design, "simplex iteration limit reached");
  }

 private:
  Matrix t_;
  std::vector<Eigen::Index> basis_;
};

}  // namespace detail

inline Result solve(const Problem& p, double tol = 1e-10) {
  const Eigen::Index n = p.c.size();
  const Eigen::Index m_ub = p.A_ub.rows();
  const Eigen::Index m_eq = p.A_eq.rows();
  require(m_ub == 0 || p.A_ub.cols() == n, ErrorKind::InvalidInput, "lp: A_ub column count");
  require(m_eq == 0 || p.A_eq.cols() == n, ErrorKind::InvalidInput, "lp: A_eq column count");
  require(p.b_ub.size() == m_ub && p.b_eq.size() == m_eq, ErrorKind::InvalidInput, "lp: rhs size");
  require(p.nonneg.empty() || static_cast<Eigen::Index>(p.nonneg.size()) == n, ErrorKind::InvalidInput,
          "lp: sign vector size");

  // Column layout: [split structural vars | slacks | artificials]
  std::vector<Eigen::Index> pos(static_cast<std::size_t>(n)), neg(static_cast<std::size_t>(n), -1);
  Eigen::Index ny = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    pos[static_cast<std::size_t>(j)] = ny++;
    const bool free = p.nonneg.empty() || !p.nonneg[static_cast<std::size_t>(j)];
    if (free) neg[static_cast<std::size_t>(j)] = ny++;
  }
  const Eigen::Index m = m_ub + m_eq;
  const Eigen::Index slack0 = ny;
  const Eigen::Index art0 = slack0 + m_ub;
  const Eigen::Index ncols = art0 + m;

  detail::Tableau tab(m, ncols);
  auto fill_row = [&](Eigen::Index i, const RowVector& a, double b, bool has_slack, Eigen::Index slack_col) {
    const double sgn = b < 0.0 ? -1.0 : 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      tab.at(i, pos[static_cast<std::size_t>(j)]) = sgn * a(j);
      if (neg[static_cast<std::size_t>(j)] >= 0) tab.at(i, neg[static_cast<std::size_t>(j)]) = -sgn * a(j);
    }
    if (has_slack) tab.at(i, slack_col) = sgn;
    tab.rhs(i) = sgn * b;
  };
  for (Eigen::Index i = 0; i < m_ub; ++i) fill_row(i, p.A_ub.row(i), p.b_ub(i), true, slack0 + i);
  for (Eigen::Index i = 0; i < m_eq; ++i) fill_row(m_ub + i, p.A_eq.row(i), p.b_eq(i), false, -1);

  // Start basis: slack where its coefficient is +1, artificial otherwise.
  std::vector<bool> use_art(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i < m_ub && tab.at(i, slack0 + i) > 0.0) {
      tab.basis()[static_cast<std::size_t>(i)] = slack0 + i;
    } else {
      tab.at(i, art0 + i) = 1.0;
      tab.basis()[static_cast<std::size_t>(i)] = art0 + i;
      use_art[static_cast<std::size_t>(i)] = true;
    }
  }

  std::vector<bool> allowed(static_cast<std::size_t>(ncols), true);
  for (Eigen::Index i = 0; i < m; ++i)
    if (!use_art[static_cast<std::size_t>(i)]) allowed[static_cast<std::size_t>(art0 + i)] = false;

  double scale = 1.0;
  for (Eigen::Index i = 0; i < m; ++i) scale = std::max(scale, std::abs(tab.rhs(i)));

  // Phase 1: maximize -sum(artificials)
  bool any_art = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!use_art[static_cast<std::size_t>(i)]) continue;
    any_art = true;
    for (Eigen::Index j = 0; j <= ncols; ++j) {
      const double v = (j == ncols) ? tab.rhs(i) : tab.at(i, j);
      if (j == ncols)
        tab.obj(ncols) -= v;
      else
        tab.obj(j) -= v;
    }
    tab.obj(art0 + i) += 1.0;
  }
  if (any_art) {
    tab.optimize(allowed, tol);
    if (-tab.obj_value() > 1e-9 * scale) return Result{Status::Infeasible, Vector(), 0.0};
    // Drive zero-level artificials out of the basis where possible.
    for (Eigen::Index i = 0; i < m; ++i) {
      if (tab.basis()[static_cast<std::size_t>(i)] < art0) continue;
      for (Eigen::Index j = 0; j < art0; ++j) {
        if (std::abs(tab.at(i, j)) > 1e-9) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }
  for (Eigen::Index j = art0; j < ncols; ++j) allowed[static_cast<std::size_t>(j)] = false;

  // Phase 2 objective row: -c, then price out the basis.
  for (Eigen::Index j = 0; j <= ncols; ++j) tab.obj(j) = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    tab.obj(pos[static_cast<std::size_t>(j)]) = -p.c(j);
    if (neg[static_cast<std::size_t>(j)] >= 0) tab.obj(neg[static_cast<std::size_t>(j)]) = p.c(j);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index b = tab.basis()[static_cast<std::size_t>(i)];
    const double f = tab.obj(b);
    if (f == 0.0) continue;
    for (Eigen::Index j = 0; j < ncols; ++j) tab.obj(j) -= f * tab.at(i, j);
    tab.obj(ncols) -= f * tab.rhs(i);
  }
  if (!tab.optimize(allowed, tol)) return Result{Status::Unbounded, Vector(), std::numeric_limits<double>::infinity()};

  Vector y = Vector::Zero(ncols);
  for (Eigen::Index i = 0; i < m; ++i) y(tab.basis()[static_cast<std::size_t>(i)]) = tab.rhs(i);
  Result res;
  res.status = Status::Optimal;
  res.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    res.x(j) = y(pos[static_cast<std::size_t>(j)]);
    if (neg[static_cast<std::size_t>(j)] >= 0) res.x(j) -= y(neg[static_cast<std::size_t>(j)]);
  }
  res.value = p.c.dot(res.x);
  return res;
}

/// maximize c'x over {x free : A x <= b}
inline Result maximize(const Vector& c, const Matrix& a, const Vector& b) {
  Problem p;
  p.c = c;
  p.A_ub = a;
  p.b_ub = b;
  p.A_eq = Matrix(0, c.size());
  p.b_eq = Vector(0);
  return solve(p);
}

}  // namespace rotec::lp
