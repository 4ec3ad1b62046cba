#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "rotec/admissible_set.hpp"

namespace rotec {

/// min 1/2 ||v - r||_Q^2 over an admissible set at the current augmented state.
struct GovernorProblem {
  AugmentedSystem sys;
  AdmissibleSet set;
  Matrix Q;

  GovernorProblem() = default;
  GovernorProblem(AugmentedSystem s, AdmissibleSet a, Matrix q) : sys(std::move(s)), set(std::move(a)), Q(std::move(q)) {
    validate();
  }

  void validate() const {
    require(Q.rows() == set.nv() && Q.cols() == set.nv(), ErrorKind::InvalidInput, "Q must be m x m");
    require((Q - Q.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()),
            ErrorKind::InvalidInput, "Q must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    require(es.eigenvalues().minCoeff() > 0.0, ErrorKind::InvalidInput, "Q must be positive definite");
    require(sys.nz() == set.nz() && sys.nv() == set.nv(), ErrorKind::InvalidInput, "system and set disagree");
  }

  double min_eig_Q() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Q);
    return es.eigenvalues().minCoeff();
  }
};

inline double q_norm2(const Matrix& q, const Vector& x) { return x.dot(q * x); }

/// Solution of the tightened problem together with both multiplier vectors:
/// mu for f_j <= 0 and lambda for log(-beta f_j + 1) >= 0.
struct TightenedSolution {
  Vector v;
  Vector lambda;
  Vector mu;
};

struct KktReport {
  std::vector<Eigen::Index> active;  // row indices with f_j = 0 (within tolerance)
  double stationarity = 0.0;         // ||grad_v B||
  double complementarity = 0.0;      // max_j |lambda_j log(-beta f_j + 1)|
  bool dual_feasible = true;         // lambda >= 0
};

namespace detail {

/// Visits index subsets of {0..n-1} of size k in lexicographic order.
template <class F>
bool for_each_subset(int n, int k, F&& f) {
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  if (k > n) return true;
  while (true) {
    if (!f(idx)) return false;
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return true;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

struct QpCandidate {
  Vector v;
  double cost = std::numeric_limits<double>::infinity();
};

/// Exact QP by enumerating active subsets of size <= nv among the rows that
/// depend on v. rhs_j = b_j - c_j z - shift.
inline std::optional<QpCandidate> enumerate_qp(const Matrix& q, const Matrix& h, const Vector& rhs, const Vector& r) {
  const Eigen::Index nv = h.cols();
  require(nv <= 6, ErrorKind::InvalidInput, "oracle enumeration is limited to m <= 6");
  const double tol = 1e-9;
  std::vector<int> live;
  for (Eigen::Index j = 0; j < h.rows(); ++j) {
    if (h.row(j).norm() > 1e-12) {
      live.push_back(static_cast<int>(j));
    } else if (rhs(j) < -tol * std::max(1.0, std::abs(rhs(j)))) {
      return std::nullopt;  // state-only row already violated
    }
  }
  const Eigen::LLT<Matrix> qllt(q);
  auto feasible = [&](const Vector& v) {
    const Vector slack = rhs - h * v;
    for (int j : live)
      if (slack(j) < -tol * std::max(1.0, std::abs(rhs(j)))) return false;
    return true;
  };

  QpCandidate best;
  bool found = false;
  auto consider = [&](const Vector& v) {
    if (!feasible(v)) return;
    const double cost = 0.5 * q_norm2(q, v - r);
    if (!found || cost < best.cost) {
      best.v = v;
      best.cost = cost;
      found = true;
    }
  };
  consider(r);
  const int n_live = static_cast<int>(live.size());
  for (int k = 1; k <= static_cast<int>(nv); ++k) {
    for_each_subset(n_live, k, [&](const std::vector<int>& sub) {
      Matrix hs(k, nv);
      Vector ds(k);
      for (int a = 0; a < k; ++a) {
        hs.row(a) = h.row(live[static_cast<std::size_t>(sub[static_cast<std::size_t>(a)])]);
        ds(a) = rhs(live[static_cast<std::size_t>(sub[static_cast<std::size_t>(a)])]);
      }
      // Dependent rows are covered by a smaller subset.
      Eigen::ColPivHouseholderQR<Matrix> qr(hs.transpose());
      qr.setThreshold(1e-10);
      if (qr.rank() < k) return true;
      const Matrix qinv_ht = qllt.solve(hs.transpose());
      const Vector mu = (hs * qinv_ht).ldlt().solve(hs * r - ds);
      consider(r - qinv_ht * mu);
      return true;
    });
  }
  if (!found) return std::nullopt;
  return best;
}

inline Vector rhs_at(const AdmissibleSet& set, const Vector& z, double shift) {
  Vector rhs = set.b() - set.c() * z;
  rhs.array() -= shift;
  return rhs;
}

}  // namespace detail

/// Exact minimizer over the nominal (untightened) rows.
inline Vector solve_cg_oracle(const GovernorProblem& prob, const Vector& z, const Vector& r) {
  require(z.size() == prob.set.nz() && r.size() == prob.set.nv(), ErrorKind::InvalidInput, "oracle: dimension mismatch");
  const auto cand = detail::enumerate_qp(prob.Q, prob.set.h(), detail::rhs_at(prob.set, z, 0.0), r);
  if (!cand) fail(ErrorKind::Infeasible, "no feasible command at the current state");
  return cand->v;
}

/// Exact minimizer over the tightened rows log(-beta f_j + 1) >= vartheta,
/// i.e. c_j z + h_j v <= b_j - e^vartheta / beta, with multipliers.
///
/// The affine multipliers mu solve Q(v - r) + sum_j mu_j h_j' = 0 on the
/// active rows (non-negative least squares). The log-form problem has
/// stationarity Q(v - r) + sum_j lambda_j beta h_j' / phi_j = 0 with
/// phi_j = -beta f_j + 1, so lambda_j = mu_j phi_j / beta.
inline TightenedSolution solve_tightened_oracle(const GovernorProblem& prob, const Vector& z, const Vector& r) {
  require(prob.set.tightened(), ErrorKind::InvalidInput, "tightened oracle needs a tightened set");
  require(z.size() == prob.set.nz() && r.size() == prob.set.nv(), ErrorKind::InvalidInput, "oracle: dimension mismatch");
  const double beta = prob.set.beta();
  const Vector nominal = detail::rhs_at(prob.set, z, 0.0);
  const Vector rhs = detail::rhs_at(prob.set, z, std::exp(prob.set.vartheta()) / beta);
  const auto cand = detail::enumerate_qp(prob.Q, prob.set.h(), rhs, r);
  if (!cand) fail(ErrorKind::Infeasible, "no feasible command for the tightened set");

  TightenedSolution sol;
  sol.v = cand->v;
  const Eigen::Index n = prob.set.size();
  sol.mu = Vector::Zero(n);
  sol.lambda = Vector::Zero(n);
  const Vector gap = rhs - prob.set.h() * sol.v;
  std::vector<Eigen::Index> active;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (prob.set.h().row(j).norm() > 1e-12 && std::abs(gap(j)) <= 1e-8 * std::max(1.0, std::abs(prob.set.b()(j))))
      active.push_back(j);
  }
  if (!active.empty()) {
    Matrix ht(prob.set.nv(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t k = 0; k < active.size(); ++k)
      ht.col(static_cast<Eigen::Index>(k)) = prob.set.h().row(active[k]).transpose();
    const Vector mu_act = nnls(ht, -(prob.Q * (sol.v - r)));
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Eigen::Index j = active[k];
      const double phi = beta * (nominal(j) - prob.set.h().row(j).dot(sol.v));
      sol.mu(j) = mu_act(static_cast<Eigen::Index>(k));
      sol.lambda(j) = sol.mu(j) * phi / beta;
    }
  }
  return sol;
}

/// phi_j = -beta f_j + 1 for every row; requires a tightened set.
inline Vector barrier_phi(const GovernorProblem& prob, const Vector& z, const Vector& v) {
  require(prob.set.tightened(), ErrorKind::InvalidInput, "barrier needs a tightened set");
  return (-prob.set.beta() * residuals(prob.set, z, v)).array() + 1.0;
}

namespace detail {
inline Vector checked_phi(const GovernorProblem& prob, const Vector& z, const Vector& v, const Vector& lambda) {
  require(lambda.size() == prob.set.size(), ErrorKind::InvalidInput, "lambda length must equal the row count");
  require((lambda.array() >= 0.0).all(), ErrorKind::Domain, "lambda must be non-negative");
  const Vector phi = barrier_phi(prob, z, v);
  require((phi.array() > 0.0).all(), ErrorKind::Domain, "point is outside the barrier domain");
  return phi;
}
}  // namespace detail

/// B(z, v, lambda) = 1/2 ||v - r||_Q^2 - sum_j lambda_j log(-beta f_j + 1)
inline double barrier(const GovernorProblem& prob, const Vector& z, const Vector& r, const Vector& v,
                      const Vector& lambda) {
  const Vector phi = detail::checked_phi(prob, z, v, lambda);
  return 0.5 * q_norm2(prob.Q, v - r) - lambda.dot(phi.array().log().matrix());
}

inline Vector barrier_grad_v(const GovernorProblem& prob, const Vector& z, const Vector& r, const Vector& v,
                             const Vector& lambda) {
  const Vector phi = detail::checked_phi(prob, z, v, lambda);
  const Vector w = prob.set.beta() * lambda.cwiseQuotient(phi);
  return prob.Q * (v - r) + prob.set.h().transpose() * w;
}

/// Entries -log(-beta f_j + 1).
inline Vector barrier_grad_lambda(const GovernorProblem& prob, const Vector& z, const Vector& v) {
  const Vector phi = barrier_phi(prob, z, v);
  require((phi.array() > 0.0).all(), ErrorKind::Domain, "point is outside the barrier domain");
  return -phi.array().log().matrix();
}

/// Q + beta^2 sum_j lambda_j h_j' h_j / phi_j^2
inline Matrix hessian_vv(const GovernorProblem& prob, const Vector& z, const Vector& v, const Vector& lambda) {
  const Vector phi = detail::checked_phi(prob, z, v, lambda);
  const double beta = prob.set.beta();
  const Vector w = (beta * beta) * lambda.cwiseQuotient(phi.cwiseProduct(phi));
  Matrix hess = prob.Q + prob.set.h().transpose() * w.asDiagonal() * prob.set.h();
  return 0.5 * (hess + hess.transpose());
}

/// Mixed block d/dlambda (grad_v B): column j is beta h_j' / phi_j.
inline Matrix hessian_v_lambda(const GovernorProblem& prob, const Vector& z, const Vector& v) {
  const Vector phi = barrier_phi(prob, z, v);
  require((phi.array() > 0.0).all(), ErrorKind::Domain, "point is outside the barrier domain");
  return prob.set.h().transpose() * (prob.set.beta() * phi.cwiseInverse()).asDiagonal();
}

inline KktReport kkt_report(const GovernorProblem& prob, const Vector& z, const Vector& r, const Vector& v,
                            const Vector& lambda, double active_tol = 1e-8) {
  KktReport rep;
  const Vector f = residuals(prob.set, z, v);
  const Vector phi = detail::checked_phi(prob, z, v, lambda);
  for (Eigen::Index j = 0; j < f.size(); ++j)
    if (std::abs(f(j)) <= active_tol) rep.active.push_back(j);
  rep.stationarity = barrier_grad_v(prob, z, r, v, lambda).norm();
  rep.complementarity = lambda.cwiseProduct(phi.array().log().matrix()).cwiseAbs().maxCoeff();
  rep.dual_feasible = (lambda.array() >= 0.0).all();
  return rep;
}

// ---------------------------------------------------------------------------
// Cone bound used in the feasibility argument for the flow.

struct ConeBound {
  double J = 0.0;
  double epsilon = 0.0;     // squared distance from -M_{i*} to the cone of the others
  double bound = 0.0;       // epsilon * m_lower^2
  std::size_t pivot = 0;    // i*
  bool holds = false;       // J >= bound (with roundoff allowance)
};

/// True when -target lies in cone{others} (LP feasibility, a >= 0).
inline bool in_cone(const Vector& target, std::span<const Vector> generators) {
  const Eigen::Index d = target.size();
  if (generators.empty()) return target.norm() == 0.0;
  lp::Problem p;
  const Eigen::Index q = static_cast<Eigen::Index>(generators.size());
  p.c = Vector::Zero(q);
  p.A_ub = Matrix(0, q);
  p.b_ub = Vector(0);
  p.A_eq.resize(d, q);
  for (Eigen::Index j = 0; j < q; ++j) p.A_eq.col(j) = generators[static_cast<std::size_t>(j)];
  p.b_eq = target;
  p.nonneg.assign(static_cast<std::size_t>(q), true);
  return lp::solve(p).status == lp::Status::Optimal;
}

/// Squared Euclidean distance from a point to cone{generators} (projection by NNLS).
inline double cone_distance2(const Vector& point, std::span<const Vector> generators) {
  if (generators.empty()) return point.squaredNorm();
  Matrix g(point.size(), static_cast<Eigen::Index>(generators.size()));
  for (std::size_t j = 0; j < generators.size(); ++j) g.col(static_cast<Eigen::Index>(j)) = generators[j];
  const Vector a = nnls(g, point);
  return (g * a - point).squaredNorm();
}

inline ConeBound appendix_bound_check(std::span<const Vector> M, std::span<const double> weights, double m_lower) {
  require(!M.empty() && M.size() == weights.size(), ErrorKind::InvalidInput, "need one weight per vector");
  require(m_lower > 0.0, ErrorKind::Precondition, "m_lower must be positive");
  for (double w : weights) require(w >= 0.0, ErrorKind::Precondition, "weights must be non-negative");
  const Eigen::Index d = M[0].size();
  for (const auto& mi : M) require(mi.size() == d, ErrorKind::InvalidInput, "vectors must share a dimension");

  std::optional<std::size_t> pivot;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] >= m_lower) {
      pivot = i;
      break;
    }
  }
  require(pivot.has_value(), ErrorKind::Precondition, "no weight reaches m_lower");

  auto others = [&](std::size_t i) {
    std::vector<Vector> out;
    for (std::size_t j = 0; j < M.size(); ++j)
      if (j != i) out.push_back(M[j]);
    return out;
  };
  for (std::size_t i = 0; i < M.size(); ++i) {
    const auto rest = others(i);
    require(!in_cone(-M[i], rest), ErrorKind::Precondition,
            "-M_" + std::to_string(i) + " lies in the cone of the remaining vectors");
  }

  Vector sum = Vector::Zero(d);
  for (std::size_t i = 0; i < M.size(); ++i) sum += weights[i] * M[i];
  ConeBound out;
  out.J = sum.squaredNorm();
  out.pivot = *pivot;
  out.epsilon = cone_distance2(-M[*pivot], others(*pivot));
  out.bound = out.epsilon * m_lower * m_lower;
  out.holds = out.J >= out.bound * (1.0 - 1e-9) - 1e-12;
  return out;
}

}  // namespace rotec
