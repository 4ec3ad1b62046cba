#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <vector>

#include "rotec/error.hpp"

namespace rotec {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

inline double spectral_radius(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> es(a, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Rank with singular values counted above rel_tol * (largest singular value).
inline int numerical_rank(const Matrix& m, double rel_tol = 1e-9) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(m);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rel_tol * s(0)) ++r;
  return r;
}

/// Matrix exponential by scaling and squaring with a diagonal Pade(6,6)
/// approximant. The argument is scaled until its 1-norm is at most 1/2.
inline Matrix expm(const Matrix& a) {
  require(a.rows() == a.cols(), ErrorKind::InvalidInput, "expm needs a square matrix");
  require(a.allFinite(), ErrorKind::InvalidInput, "expm argument has non-finite entries");
  const Eigen::Index n = a.rows();
  if (n == 0) return a;

  // c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 6
  constexpr double c[7] = {1.0,
                           1.0 / 2.0,
                           5.0 / 44.0,
                           1.0 / 66.0,
                           1.0 / 792.0,
                           1.0 / 15840.0,
                           1.0 / 665280.0};

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Matrix x = a / std::ldexp(1.0, squarings);

  const Matrix id = Matrix::Identity(n, n);
  Matrix power = id;
  Matrix num = c[0] * id;
  Matrix den = c[0] * id;
  for (int k = 1; k <= 6; ++k) {
    power = power * x;
    num += c[k] * power;
    den += ((k % 2) ? -c[k] : c[k]) * power;
  }
  Matrix e = den.partialPivLu().solve(num);
  for (int i = 0; i < squarings; ++i) e = e * e;
  return e;
}

/// Non-negative least squares min ||A x - b||, x >= 0 (Lawson-Hanson).
inline Vector nnls(const Matrix& a, const Vector& b, int max_iter = 0) {
  const Eigen::Index n = a.cols();
  Vector x = Vector::Zero(n);
  if (n == 0) return x;
  if (max_iter <= 0) max_iter = static_cast<int>(30 * n + 50);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * std::max(1.0, a.norm() * b.norm());

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    z = Vector::Zero(n);
    if (idx.empty()) return;
    Matrix ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Vector zp = ap.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };

  for (int outer = 0; outer < max_iter; ++outer) {
    const Vector w = a.transpose() * (b - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;

    for (int inner = 0; inner < max_iter; ++inner) {
      Vector z;
      solve_passive(z);
      bool ok = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) ok = false;
      if (ok) {
        x = z;
        break;
      }
      double alpha = 1.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0.0) {
          const double denom = x(j) - z(j);
          if (denom > 0.0) alpha = std::min(alpha, x(j) / denom);
        }
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[static_cast<std::size_t>(j)] && x(j) <= 1e-15) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      }
    }
  }
  return x;
}

/// Discrete-time LQR gain for u = K x (note the sign: K already includes the
/// minus), from the stabilizing solution of the discrete Riccati equation.
/// Solved by the structure-preserving doubling iteration.
inline Matrix dlqr(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
  const Eigen::Index n = a.rows();
  require(a.cols() == n && b.rows() == n && q.rows() == n && q.cols() == n &&
              r.rows() == b.cols() && r.cols() == b.cols(),
          ErrorKind::InvalidInput, "dlqr dimension mismatch");
  const Matrix id = Matrix::Identity(n, n);
  Matrix ak = a;
  Matrix gk = b * r.llt().solve(b.transpose());
  Matrix hk = q;
  for (int it = 0; it < 200; ++it) {
    const Matrix w = id + gk * hk;
    Eigen::PartialPivLU<Matrix> lu(w);
    const Matrix w_inv_a = lu.solve(ak);
    const Matrix a_next = ak * w_inv_a;
    const Matrix g_next = gk + ak * lu.solve(gk) * ak.transpose();
    const Matrix h_next = hk + ak.transpose() * hk * w_inv_a;
    const double change = (h_next - hk).norm();
    ak = a_next;
    gk = g_next;
    hk = 0.5 * (h_next + h_next.transpose());
    if (change <= 1e-13 * std::max(1.0, hk.norm())) break;
  }
  require(hk.allFinite(), ErrorKind::Design, "Riccati iteration diverged");
  const Matrix btp = b.transpose() * hk;
  return -(r + btp * b).ldlt().solve(btp * a);
}

}  // namespace rotec
