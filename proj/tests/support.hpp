#pragma once

#include <cmath>
#include <string>

#include "rotec/rotec.hpp"

namespace rotec::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(ROTEC_SCENARIO_DIR) + "/" + name + ".cfg";
}

inline double uniform(SplitMix64& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

inline Matrix random_matrix(SplitMix64& rng, Eigen::Index rows, Eigen::Index cols, double lo = -1.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = uniform(rng, lo, hi);
  return m;
}

inline Vector random_vector(SplitMix64& rng, Eigen::Index n, double lo = -1.0, double hi = 1.0) {
  return random_matrix(rng, n, 1, lo, hi);
}

/// Random plant under LQR feedback; the command tracks the applied input and
/// ny random outputs are bounded symmetrically by 1.
struct Instance {
  AugmentedSystem sys;
  AdmissibleSet nominal;
  GovernorProblem prob;
  Vector ybar;
};

inline Instance random_instance(SplitMix64& rng, int nx, int p, int ny, double beta = 1e4, double vartheta = 1e-2) {
  for (;;) {
    DiscretePlant dp{random_matrix(rng, nx, nx, -0.8, 0.8), random_matrix(rng, nx, p), 0.1};
    if (!controllable(dp.A, dp.B)) continue;
    const Eigen::Index nz = nx + p;
    Matrix ct = Matrix::Zero(p, nz);
    ct.rightCols(p) = Matrix::Identity(p, p);
    const auto gains =
        design_tracking_gains(dp, ct, Matrix::Zero(p, p), LqrWeights{Matrix::Identity(nz, nz), Matrix::Identity(p, p)});
    if (spectral_radius(augmented_A(dp) + augmented_B(dp) * gains.K) > 0.8) continue;
    const Matrix half = random_matrix(rng, ny, nz);
    Matrix c(2 * ny, nz);
    c << half, -half;
    const AugmentedSystem sys = augment(dp, gains.K, gains.G, c, Matrix::Zero(2 * ny, p));
    Instance inst;
    inst.sys = sys;
    inst.ybar = Vector::Ones(2 * ny);
    try {
      inst.nominal = build_admissible_set(sys, inst.ybar, 0.05);
      inst.prob = GovernorProblem(sys, tighten(inst.nominal, beta, vartheta), Matrix::Identity(p, p));
    } catch (const Error&) {
      continue;
    }
    return inst;
  }
}

/// Steady state of the closed loop under a constant command.
inline Vector steady_state(const AugmentedSystem& sys, const Vector& v) {
  const Eigen::Index nz = sys.nz();
  return (Matrix::Identity(nz, nz) - sys.Ac).partialPivLu().solve(sys.B * sys.G * v);
}

/// (z, v) with every barrier ratio phi_j above phi_min on the tightened set.
struct Pair {
  Vector z;
  Vector v;
};

inline Pair feasible_pair(SplitMix64& rng, const Instance& inst, double phi_min = 2.0) {
  double scale = 1.0;
  for (int attempt = 0;; ++attempt) {
    if (attempt % 50 == 49) scale *= 0.5;
    const Vector v = scale * random_vector(rng, inst.sys.nv(), -3.0, 3.0);
    const Vector z = steady_state(inst.sys, v) + scale * random_vector(rng, inst.sys.nz(), -0.5, 0.5);
    const Vector phi = barrier_phi(inst.prob, z, v);
    if ((phi.array() > phi_min).all()) return Pair{z, v};
  }
}

}  // namespace rotec::testing
