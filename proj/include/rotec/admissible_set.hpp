#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rotec/lp.hpp"
#include "rotec/plant.hpp"

namespace rotec {

/// Horizon tag of the steady-state row.
inline constexpr int kInfiniteHorizon = -1;

/// One inequality c z + h v <= bound of the admissible set.
struct ConstraintRow {
  int output = 0;   // 0-based output index
  int horizon = 0;  // prediction step, or kInfiniteHorizon
  RowVector c;
  RowVector h;
  double bound = 0.0;

  bool infinite() const { return horizon == kInfiniteHorizon; }
};

/// Prediction row for output i at step s (s = kInfiniteHorizon for the limit):
///   c = C_i A_c^s,  h = C_i (I - A_c)^-1 (I - A_c^s) B G + D_i.
/// The steady-state row keeps c = 0 and uses bound (1 - epsilon) * ybar.
inline ConstraintRow prediction_row(const AugmentedSystem& sys, int i, int s, double ybar, double epsilon) {
  require(i >= 0 && i < sys.ny(), ErrorKind::InvalidInput, "prediction_row: output index out of range");
  require(s >= 0 || s == kInfiniteHorizon, ErrorKind::InvalidInput, "prediction_row: negative horizon");
  const Eigen::Index nz = sys.nz();
  const Matrix id = Matrix::Identity(nz, nz);
  const Eigen::PartialPivLU<Matrix> lu(id - sys.Ac);
  ConstraintRow row;
  row.output = i;
  row.horizon = s;
  if (s == kInfiniteHorizon) {
    row.c = RowVector::Zero(nz);
    row.h = sys.C.row(i) * lu.solve(sys.B * sys.G) + sys.D.row(i);
    row.bound = (1.0 - epsilon) * ybar;
    return row;
  }
  Matrix acs = id;
  for (int k = 0; k < s; ++k) acs = acs * sys.Ac;
  row.c = sys.C.row(i) * acs;
  row.h = sys.C.row(i) * lu.solve((id - acs) * sys.B * sys.G) + sys.D.row(i);
  row.bound = ybar;
  return row;
}

/// Polyhedral set {(z, v) : c_j z + h_j v <= b_j} with rows ordered output by
/// output as s = 0..s*, then the steady-state row. When beta > 0 the set is
/// the tightened one: membership reads f_j = c_j z + h_j v - b_j + 1/beta <= 0.
class AdmissibleSet {
 public:
  AdmissibleSet() = default;

  /// Assemble from explicit rows; used by the builder and by deserialization.
  static AdmissibleSet from_rows(int n_outputs, int s_star, double epsilon, double beta, double vartheta,
                                 const Matrix& c, const Matrix& h, const Vector& b) {
    require(n_outputs > 0 && s_star >= 0, ErrorKind::InvalidInput, "set needs outputs and s* >= 0");
    const Eigen::Index nrows = static_cast<Eigen::Index>(n_outputs) * (s_star + 2);
    require(c.rows() == nrows && h.rows() == nrows && b.size() == nrows, ErrorKind::InvalidInput,
            "row count must equal m * (s* + 2)");
    require(beta >= 0.0 && vartheta >= 0.0 && epsilon > 0.0, ErrorKind::InvalidInput, "bad set parameters");
    AdmissibleSet set;
    set.m_ = n_outputs;
    set.s_star_ = s_star;
    set.epsilon_ = epsilon;
    set.beta_ = beta;
    set.vartheta_ = vartheta;
    set.c_ = c;
    set.h_ = h;
    set.b_ = b;
    return set;
  }

  int n_outputs() const { return m_; }
  int s_star() const { return s_star_; }
  double epsilon() const { return epsilon_; }
  double beta() const { return beta_; }
  double vartheta() const { return vartheta_; }
  bool tightened() const { return beta_ > 0.0; }
  /// 1/beta, or zero for the nominal set.
  double shift() const { return beta_ > 0.0 ? 1.0 / beta_ : 0.0; }

  Eigen::Index size() const { return b_.size(); }
  Eigen::Index nz() const { return c_.cols(); }
  Eigen::Index nv() const { return h_.cols(); }
  int block() const { return s_star_ + 2; }

  const Matrix& c() const { return c_; }
  const Matrix& h() const { return h_; }
  const Vector& b() const { return b_; }

  int output_of(Eigen::Index j) const { return static_cast<int>(j / block()); }
  int horizon_of(Eigen::Index j) const {
    const int s = static_cast<int>(j % block());
    return s == s_star_ + 1 ? kInfiniteHorizon : s;
  }

  ConstraintRow row(Eigen::Index j) const {
    return ConstraintRow{output_of(j), horizon_of(j), c_.row(j), h_.row(j), b_(j)};
  }

  std::vector<ConstraintRow> rows() const {
    std::vector<ConstraintRow> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (Eigen::Index j = 0; j < size(); ++j) out.push_back(row(j));
    return out;
  }

 private:
  int m_ = 0;
  int s_star_ = 0;
  double epsilon_ = 0.01;
  double beta_ = 0.0;
  double vartheta_ = 0.0;
  Matrix c_;
  Matrix h_;
  Vector b_;
};

struct SStarOptions {
  int max_horizon = 1000;
};

namespace detail {

inline void check_bounds(const AugmentedSystem& sys, const Vector& ybar, double epsilon) {
  require(ybar.size() == sys.ny(), ErrorKind::InvalidInput, "one bound per output is required");
  require((ybar.array() >= 0.0).all() && ybar.allFinite(), ErrorKind::InvalidInput, "bounds must be finite and >= 0");
  require(epsilon > 0.0 && epsilon < 1.0, ErrorKind::InvalidInput, "epsilon must lie in (0, 1)");
  require(spectral_radius(sys.Ac) < 1.0, ErrorKind::Design, "closed loop is not Schur");
}

}  // namespace detail

/// Smallest horizon s* such that every row at s*+1 is redundant with respect to
/// rows 0..s* plus the steady-state rows. Redundancy is certified by the LP
///   max c_{i,s*+1} z + h_{i,s*+1} v  over the retained rows  <=  ybar_i + tol.
inline int compute_s_star(const AugmentedSystem& sys, const Vector& ybar, double epsilon,
                          const SStarOptions& opts = {}) {
  detail::check_bounds(sys, ybar, epsilon);
  const Eigen::Index nz = sys.nz(), nv = sys.nv(), m = sys.ny();
  const Eigen::Index nx = nz + nv;
  const Matrix id = Matrix::Identity(nz, nz);
  const Eigen::PartialPivLU<Matrix> lu(id - sys.Ac);
  const Matrix steady = lu.solve(sys.B * sys.G);

  // Retained rows grow by m per horizon; steady-state rows come first.
  std::vector<RowVector> rows;
  std::vector<double> rhs;
  for (Eigen::Index i = 0; i < m; ++i) {
    RowVector r(nx);
    r << RowVector::Zero(nz), sys.C.row(i) * steady + sys.D.row(i);
    rows.push_back(r);
    rhs.push_back((1.0 - epsilon) * ybar(i));
  }
  Matrix acs = id;  // A_c^t
  auto row_at = [&](Eigen::Index i, const Matrix& power) {
    RowVector r(nx);
    r << sys.C.row(i) * power, sys.C.row(i) * lu.solve((id - power) * sys.B * sys.G) + sys.D.row(i);
    return r;
  };

  Eigen::Index last_failing = 0;
  for (int t = 0; t <= opts.max_horizon; ++t) {
    for (Eigen::Index i = 0; i < m; ++i) {
      rows.push_back(row_at(i, acs));
      rhs.push_back(ybar(i));
    }
    const Matrix next_power = acs * sys.Ac;
    Matrix a(static_cast<Eigen::Index>(rows.size()), nx);
    Vector b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      a.row(static_cast<Eigen::Index>(k)) = rows[k];
      b(static_cast<Eigen::Index>(k)) = rhs[k];
    }
    bool redundant = true;
    for (Eigen::Index i = 0; i < m && redundant; ++i) {
      const RowVector obj = row_at(i, next_power);
      const auto res = lp::maximize(obj.transpose(), a, b);
      if (res.status == lp::Status::Unbounded) {
        require(t < nz + 1, ErrorKind::Design,
                "redundancy LP unbounded for output " + std::to_string(i) + " at horizon " + std::to_string(t + 1) +
                    "; (A, C) is likely unobservable");
        redundant = false;
        last_failing = i;
      } else if (res.status == lp::Status::Infeasible) {
        fail(ErrorKind::Design, "admissible set is empty");
      } else if (res.value > ybar(i) + 1e-9 * std::max(1.0, std::abs(ybar(i)))) {
        redundant = false;
        last_failing = i;
      }
    }
    if (redundant) return t;
    acs = next_power;
  }
  fail(ErrorKind::HorizonOverflow,
       "s* exceeds the horizon cap of " + std::to_string(opts.max_horizon) + " (output " +
           std::to_string(last_failing) + " still has non-redundant rows; check the feedback design)");
}

/// Nominal finitely-determined set for horizon s_star.
inline AdmissibleSet build_admissible_set(const AugmentedSystem& sys, const Vector& ybar, double epsilon,
                                          int s_star) {
  detail::check_bounds(sys, ybar, epsilon);
  const int m = static_cast<int>(sys.ny());
  const int blk = s_star + 2;
  const Eigen::Index nrows = static_cast<Eigen::Index>(m) * blk;
  Matrix c(nrows, sys.nz());
  Matrix h(nrows, sys.nv());
  Vector b(nrows);
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < blk; ++k) {
      const int s = (k == s_star + 1) ? kInfiniteHorizon : k;
      const auto row = prediction_row(sys, i, s, ybar(i), epsilon);
      const Eigen::Index j = static_cast<Eigen::Index>(i) * blk + k;
      c.row(j) = row.c;
      h.row(j) = row.h;
      b(j) = row.bound;
    }
  }
  return AdmissibleSet::from_rows(m, s_star, epsilon, 0.0, 0.0, c, h, b);
}

inline AdmissibleSet build_admissible_set(const AugmentedSystem& sys, const Vector& ybar, double epsilon,
                                          const SStarOptions& opts = {}) {
  return build_admissible_set(sys, ybar, epsilon, compute_s_star(sys, ybar, epsilon, opts));
}

/// Largest t with c z + h v + t <= b for all rows (capped at 1e6); the
/// uniform interior margin of the polyhedron.
inline double interior_margin(const AdmissibleSet& set) {
  const Eigen::Index nz = set.nz(), nv = set.nv(), n = set.size();
  Matrix a(n + 1, nz + nv + 1);
  Vector b(n + 1);
  a.setZero();
  a.topLeftCorner(n, nz) = set.c();
  a.block(0, nz, n, nv) = set.h();
  a.block(0, nz + nv, n, 1).setOnes();
  b.head(n) = set.b();
  a(n, nz + nv) = 1.0;
  b(n) = 1e6;
  Vector obj = Vector::Zero(nz + nv + 1);
  obj(nz + nv) = 1.0;
  const auto res = lp::maximize(obj, a, b);
  require(res.status == lp::Status::Optimal, ErrorKind::Design, "interior-margin LP failed");
  return res.value;
}

/// Shift every bound by 1/beta and record the discretization margin vartheta.
/// A point with log(-beta f + 1) >= vartheta must exist strictly, i.e. the
/// uniform interior margin must exceed e^vartheta / beta.
inline AdmissibleSet tighten(const AdmissibleSet& set, double beta, double vartheta) {
  require(beta > 0.0 && std::isfinite(beta), ErrorKind::InvalidInput, "beta must be positive");
  require(vartheta >= 0.0 && std::isfinite(vartheta), ErrorKind::InvalidInput, "vartheta must be >= 0");
  const double margin = interior_margin(set);
  const double required = std::exp(vartheta) / beta;
  if (!(margin > required)) {
    std::string culprits;
    for (int i = 0; i < set.n_outputs(); ++i) {
      const Eigen::Index base = static_cast<Eigen::Index>(i) * set.block();
      const auto sub = AdmissibleSet::from_rows(1, set.s_star(), set.epsilon(), 0.0, 0.0,
                                                set.c().middleRows(base, set.block()),
                                                set.h().middleRows(base, set.block()), set.b().segment(base, set.block()));
      if (!(interior_margin(sub) > required)) culprits += (culprits.empty() ? "" : ", ") + std::to_string(i);
    }
    fail(ErrorKind::InfeasibleTightening, "interior margin " + std::to_string(margin) + " does not exceed " +
                                              std::to_string(required) + " required by beta/vartheta" +
                                              (culprits.empty() ? std::string(" (outputs jointly)")
                                                                : " (output " + culprits + ")"));
  }
  return AdmissibleSet::from_rows(set.n_outputs(), set.s_star(), set.epsilon(), beta, vartheta, set.c(), set.h(),
                                  set.b());
}

/// f_j(z, v) = c_j z + h_j v - b_j + 1/beta (the 1/beta term vanishes on a
/// nominal set).
inline Vector residuals(const AdmissibleSet& set, const Vector& z, const Vector& v) {
  require(z.size() == set.nz() && v.size() == set.nv(), ErrorKind::InvalidInput, "residuals: dimension mismatch");
  Vector f = set.c() * z + set.h() * v - set.b();
  f.array() += set.shift();
  return f;
}

/// Membership with log(-beta f + 1) >= margin on every row. Rows with
/// -beta f + 1 <= 0 make the answer false without evaluating the logarithm.
/// On a nominal set the test degenerates to f <= 0 (margin is ignored).
inline bool contains(const AdmissibleSet& set, const Vector& z, const Vector& v, double margin = 0.0) {
  const Vector f = residuals(set, z, v);
  if (!set.tightened()) return (f.array() <= 0.0).all();
  const double beta = set.beta();
  for (Eigen::Index j = 0; j < f.size(); ++j) {
    const double phi = -beta * f(j) + 1.0;
    if (!(phi > 0.0)) return false;
    if (std::log(phi) < margin) return false;
  }
  return true;
}

}  // namespace rotec
