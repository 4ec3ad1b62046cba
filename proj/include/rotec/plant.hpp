#pragma once

#include <complex>
#include <string>
#include <variant>
#include <vector>

#include "rotec/linalg.hpp"

namespace rotec {

/// x' = A_o x + B_o u
struct ContinuousPlant {
  Matrix A;
  Matrix B;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index p() const { return B.cols(); }

  void validate() const {
    require(A.rows() == A.cols(), ErrorKind::InvalidInput, "plant A must be square");
    require(B.rows() == A.rows(), ErrorKind::InvalidInput, "plant B row count must match A");
    require(A.allFinite() && B.allFinite(), ErrorKind::InvalidInput, "plant matrices must be finite");
  }
};

/// x(k+1) = A_d x(k) + B_d u(k-1), sampled every delta_t seconds.
struct DiscretePlant {
  Matrix A;
  Matrix B;
  double delta_t = 0.0;

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index p() const { return B.cols(); }
};

/// Exact zero-order-hold discretization through the Van Loan block exponential
/// exp([[A_o, B_o], [0, 0]] * dt) = [[A_d, B_d], [0, I]].
inline DiscretePlant discretize(const ContinuousPlant& plant, double delta_t) {
  plant.validate();
  require(delta_t > 0.0 && std::isfinite(delta_t), ErrorKind::InvalidInput, "delta_t must be positive");
  const Eigen::Index n = plant.n();
  const Eigen::Index p = plant.p();
  Matrix block = Matrix::Zero(n + p, n + p);
  block.topLeftCorner(n, n) = plant.A;
  block.topRightCorner(n, p) = plant.B;
  const Matrix e = expm(block * delta_t);
  return DiscretePlant{e.topLeftCorner(n, n), e.topRightCorner(n, p), delta_t};
}

inline DiscretePlant euler_discretize(const ContinuousPlant& plant, double delta_t) {
  plant.validate();
  require(delta_t > 0.0 && std::isfinite(delta_t), ErrorKind::InvalidInput, "delta_t must be positive");
  const Eigen::Index n = plant.n();
  return DiscretePlant{Matrix::Identity(n, n) + delta_t * plant.A, delta_t * plant.B, delta_t};
}

/// Closed loop with one-sample actuation delay, z = [x; u(k-1)]:
///   z(k+1) = A z(k) + B u(k),  u(k) = K z(k) + G v(k),  y(k) = C z(k) + D v(k).
struct AugmentedSystem {
  Matrix A;
  Matrix B;
  Matrix K;
  Matrix G;
  Matrix C;
  Matrix D;
  Matrix Ac;

  Eigen::Index nz() const { return A.rows(); }
  Eigen::Index p() const { return B.cols(); }
  Eigen::Index nv() const { return G.cols(); }
  Eigen::Index ny() const { return C.rows(); }
};

inline Matrix augmented_A(const DiscretePlant& dp) {
  const Eigen::Index n = dp.n(), p = dp.p();
  Matrix a = Matrix::Zero(n + p, n + p);
  a.topLeftCorner(n, n) = dp.A;
  a.topRightCorner(n, p) = dp.B;
  return a;
}

inline Matrix augmented_B(const DiscretePlant& dp) {
  const Eigen::Index n = dp.n(), p = dp.p();
  Matrix b = Matrix::Zero(n + p, p);
  b.bottomRows(p).setIdentity();
  return b;
}

/// Kalman-matrix rank test with threshold 1e-9 * largest singular value.
inline bool controllable(const Matrix& a, const Matrix& b) {
  const Eigen::Index n = a.rows();
  Matrix ctrb(n, n * b.cols());
  Matrix block = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.middleCols(i * b.cols(), b.cols()) = block;
    block = a * block;
  }
  return numerical_rank(ctrb) == n;
}

inline bool observable(const Matrix& a, const Matrix& c) {
  return controllable(a.transpose(), c.transpose());
}

inline AugmentedSystem augment(const DiscretePlant& dp, const Matrix& K, const Matrix& G, const Matrix& C,
                               const Matrix& D) {
  const Eigen::Index n = dp.n(), p = dp.p(), nz = n + p;
  require(dp.A.rows() == n && dp.A.cols() == n && dp.B.rows() == n, ErrorKind::InvalidInput,
          "discrete plant dimensions inconsistent");
  require(K.rows() == p && K.cols() == nz, ErrorKind::InvalidInput, "K must be p x (n+p)");
  require(G.rows() == p && G.cols() >= 1, ErrorKind::InvalidInput, "G must be p x m");
  require(C.cols() == nz, ErrorKind::InvalidInput, "C must have n+p columns");
  require(D.rows() == C.rows() && D.cols() == G.cols(), ErrorKind::InvalidInput,
          "D must be (outputs) x (commands)");
  require(dp.A.allFinite() && dp.B.allFinite() && K.allFinite() && G.allFinite() && C.allFinite() &&
              D.allFinite(),
          ErrorKind::InvalidInput, "non-finite system matrix");

  AugmentedSystem sys;
  sys.A = augmented_A(dp);
  sys.B = augmented_B(dp);
  sys.K = K;
  sys.G = G;
  sys.C = C;
  sys.D = D;
  sys.Ac = sys.A + sys.B * K;
  const double rho = spectral_radius(sys.Ac);
  require(rho < 1.0 - 1e-9, ErrorKind::Design,
          "closed loop A + BK is not Schur (spectral radius " + std::to_string(rho) + ")");
  return sys;
}

inline Vector control(const AugmentedSystem& sys, const Vector& z, const Vector& v) {
  require(z.size() == sys.nz() && v.size() == sys.nv(), ErrorKind::InvalidInput, "control: dimension mismatch");
  return sys.K * z + sys.G * v;
}

inline Vector step(const AugmentedSystem& sys, const Vector& z, const Vector& u) {
  require(z.size() == sys.nz() && u.size() == sys.p(), ErrorKind::InvalidInput, "step: dimension mismatch");
  return sys.A * z + sys.B * u;
}

inline Vector output(const AugmentedSystem& sys, const Vector& z, const Vector& v) {
  require(z.size() == sys.nz() && v.size() == sys.nv(), ErrorKind::InvalidInput, "output: dimension mismatch");
  return sys.C * z + sys.D * v;
}

struct PolePlacement {
  std::vector<std::complex<double>> poles;
};

struct LqrWeights {
  Matrix Q;
  Matrix R;
};

using GainSpec = std::variant<PolePlacement, LqrWeights>;

struct TrackingGains {
  Matrix K;
  Matrix G;
};

namespace detail {

/// Real coefficients of prod (s - p_i), highest power first (leading 1).
inline std::vector<double> monic_polynomial(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> coeffs{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= r * coeffs[i];
    }
    coeffs = std::move(next);
  }
  std::vector<double> out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    require(std::abs(coeffs[i].imag()) <= 1e-9 * std::max(1.0, std::abs(coeffs[i])), ErrorKind::InvalidInput,
            "complex poles must come in conjugate pairs");
    out[i] = coeffs[i].real();
  }
  return out;
}

/// Ackermann's formula for single-input pairs; returns K with eig(A + B K) = poles.
inline Matrix ackermann(const Matrix& a, const Matrix& b, const std::vector<std::complex<double>>& poles) {
  const Eigen::Index n = a.rows();
  require(b.cols() == 1, ErrorKind::Design, "pole placement is only implemented for single-input systems");
  require(static_cast<Eigen::Index>(poles.size()) == n, ErrorKind::InvalidInput,
          "pole placement needs exactly n+p poles");
  Matrix ctrb(n, n);
  Matrix col = b;
  for (Eigen::Index i = 0; i < n; ++i) {
    ctrb.col(i) = col;
    col = a * col;
  }
  require(numerical_rank(ctrb) == n, ErrorKind::Design, "pair (A_d, B_d) is not controllable");
  const auto coeffs = monic_polynomial(poles);
  // phi(A) = A^n + a1 A^(n-1) + ... + an I, evaluated by Horner's rule
  Matrix phi = Matrix::Identity(n, n) * coeffs[0];
  for (std::size_t i = 1; i < coeffs.size(); ++i) phi = phi * a + coeffs[i] * Matrix::Identity(n, n);
  RowVector last = RowVector::Zero(n);
  last(n - 1) = 1.0;
  const RowVector t = ctrb.transpose().partialPivLu().solve(last.transpose()).transpose();
  return -(t * phi);
}

}  // namespace detail

/// Feedback K from the pole specification on the augmented pair, then the
/// feedforward G that makes the steady-state tracked output equal the command:
/// C_t (I - A_c)^-1 B G + D_t = I.
inline TrackingGains design_tracking_gains(const DiscretePlant& dp, const Matrix& c_track, const Matrix& d_track,
                                           const GainSpec& spec) {
  const Matrix a = augmented_A(dp);
  const Matrix b = augmented_B(dp);
  const Eigen::Index nz = a.rows();
  require(c_track.cols() == nz, ErrorKind::InvalidInput, "tracking C must have n+p columns");
  require(d_track.rows() == c_track.rows(), ErrorKind::InvalidInput, "tracking D row count must match C");
  require(controllable(dp.A, dp.B), ErrorKind::Design, "pair (A_d, B_d) is not controllable");

  TrackingGains gains;
  if (const auto* pp = std::get_if<PolePlacement>(&spec)) {
    gains.K = detail::ackermann(a, b, pp->poles);
  } else {
    const auto& w = std::get<LqrWeights>(spec);
    gains.K = dlqr(a, b, w.Q, w.R);
  }
  const Matrix ac = a + b * gains.K;
  require(spectral_radius(ac) < 1.0 - 1e-9, ErrorKind::Design, "designed feedback is not Schur");

  const Matrix dc = c_track * (Matrix::Identity(nz, nz) - ac).partialPivLu().solve(b);
  require(dc.rows() == dc.cols(), ErrorKind::Design, "tracking output count must equal the input count");
  require(d_track.cols() == dc.rows(), ErrorKind::InvalidInput, "tracking D must be square");
  Eigen::FullPivLU<Matrix> lu(dc);
  require(lu.isInvertible() && std::abs(lu.determinant()) > 1e-12, ErrorKind::Design, "closed-loop DC gain is singular");
  gains.G = lu.solve(Matrix::Identity(dc.rows(), dc.rows()) - d_track);
  return gains;
}

}  // namespace rotec
