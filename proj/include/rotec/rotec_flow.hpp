#pragma once

#include <chrono>
#include <cmath>
#include <functional>

#include "rotec/governor.hpp"

namespace rotec {

enum class Integrator {
  /// v += -d sigma grad_v, lambda += d sigma (drift)
  ForwardEuler,
  /// (I - d J) dx = d F(x) with J the flow Jacobian; same fixed points, stable
  /// for the stiff coupling that large beta creates.
  LinearlyImplicitEuler,
};

struct FlowParams {
  double sigma = 100.0;
  double delta_eta = 1e-3;
  Integrator integrator = Integrator::LinearlyImplicitEuler;
  int max_backtracks = 30;
  /// A step may shrink any phi_j to no less than this fraction of its value.
  double boundary_fraction = 0.1;

  void validate() const {
    require(sigma > 0.0 && std::isfinite(sigma), ErrorKind::InvalidInput, "sigma must be positive");
    require(delta_eta > 0.0 && std::isfinite(delta_eta), ErrorKind::InvalidInput, "delta_eta must be positive");
    require(max_backtracks >= 0, ErrorKind::InvalidInput, "max_backtracks must be >= 0");
    require(boundary_fraction > 0.0 && boundary_fraction < 1.0, ErrorKind::InvalidInput,
            "boundary_fraction must lie in (0, 1)");
  }
};

struct FlowState {
  Vector v_hat;
  Vector lambda_hat;
  double eta = 0.0;
};

struct FlowStepOutcome {
  FlowState state;
  bool stalled = false;
  int halvings = 0;
};

struct GovernorResult {
  Vector v_applied;
  Vector lambda_out;
  Vector u;
  bool accepted = false;       // some flow iterate passed the acceptance test
  bool last_rejected = false;  // the terminal iterate failed it
  long long flow_steps = 0;
  double eta_spent = 0.0;
  long long stalls = 0;
};

/// Normal-cone correction for one multiplier. grad_lambda is the barrier
/// gradient entry -(log(-beta f + 1) - vartheta); the correction cancels it
/// exactly when lambda sits at zero and the constraint is strictly inactive.
inline double psi(double lambda_val, double grad_lambda_val) {
  const double slack_log = -grad_lambda_val;
  if (lambda_val == 0.0 && slack_log > 0.0) return slack_log;
  return 0.0;
}

/// ||v - r||_Q^2 <= ||v_prev - r||_Q^2 - ||v - v_prev||_Q^2, evaluated as
/// ||v - r||^2 + ||v - v_prev||^2 <= ||v_prev - r||^2 with a relative
/// allowance of 1e-12 for roundoff.
inline bool acceptance(const Vector& v_candidate, const Vector& v_prev, const Vector& r, const Matrix& Q) {
  const double lhs = q_norm2(Q, v_candidate - r) + q_norm2(Q, v_candidate - v_prev);
  const double rhs = q_norm2(Q, v_prev - r);
  return lhs <= rhs + 1e-12 * rhs;
}

/// Per output block [l_0 .. l_s*, l_inf] -> [l_1 .. l_s*, l_s*, l_inf].
inline Vector warm_start_lambda(const Vector& lambda_prev, int n_outputs, int s_star) {
  const int blk = s_star + 2;
  require(lambda_prev.size() == static_cast<Eigen::Index>(n_outputs) * blk, ErrorKind::InvalidInput,
          "warm start: lambda length must be m * (s* + 2)");
  Vector out(lambda_prev.size());
  for (int i = 0; i < n_outputs; ++i) {
    const Eigen::Index base = static_cast<Eigen::Index>(i) * blk;
    for (int s = 0; s < s_star; ++s) out(base + s) = lambda_prev(base + s + 1);
    out(base + s_star) = lambda_prev(base + s_star);
    out(base + s_star + 1) = lambda_prev(base + s_star + 1);
  }
  return out;
}

namespace detail {

/// Data fixed during one sampling instant: f(v) = h v - rhs.
struct FlowFrame {
  const GovernorProblem* prob = nullptr;
  Vector r;
  Vector rhs;

  FlowFrame(const GovernorProblem& p, const Vector& z, const Vector& ref) : prob(&p), r(ref) {
    require(p.set.tightened(), ErrorKind::InvalidInput, "the flow needs a tightened set");
    require(z.size() == p.set.nz() && ref.size() == p.set.nv(), ErrorKind::InvalidInput, "flow: dimension mismatch");
    rhs = p.set.b() - p.set.c() * z;
    rhs.array() -= p.set.shift();
  }

  Vector phi(const Vector& v) const { return ((prob->set.h() * v - rhs) * -prob->set.beta()).array() + 1.0; }
};

inline FlowStepOutcome advance(const FlowFrame& fr, const FlowState& s, const FlowParams& p) {
  const GovernorProblem& prob = *fr.prob;
  const Matrix& h = prob.set.h();
  const double beta = prob.set.beta();
  const double vartheta = prob.set.vartheta();
  const Eigen::Index n = h.rows();
  const Eigen::Index nv = h.cols();

  const Vector phi = fr.phi(s.v_hat);
  require((phi.array() > 0.0).all(), ErrorKind::Domain, "flow state left the barrier domain");
  const Vector logphi = phi.array().log().matrix();

  const Vector w = beta * s.lambda_hat.cwiseQuotient(phi);
  const Vector grad_v = prob.Q * (s.v_hat - fr.r) + h.transpose() * w;

  Vector drift(n);
  std::vector<bool> pinned(static_cast<std::size_t>(n), false);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double grad_l = -(logphi(j) - vartheta);
    const double corr = psi(s.lambda_hat(j), grad_l);
    drift(j) = grad_l + corr;
    pinned[static_cast<std::size_t>(j)] = (s.lambda_hat(j) == 0.0 && corr != 0.0);
  }

  Vector dv, dl;
  const double d = p.delta_eta;
  if (p.integrator == Integrator::ForwardEuler) {
    dv = -d * p.sigma * grad_v;
    dl = d * p.sigma * drift;
  } else {
    // Block elimination of (I - d J) dx = d F with
    //   J = sigma [[-H_vv, -G'], [G, 0]],  G_j = beta h_j / phi_j.
    // The projection onto lambda >= 0 is taken inside the implicit step: a
    // row is free when its implicit update stays non-negative, otherwise its
    // multiplier is set to zero. The free set is found by a short active-set
    // iteration seeded with the rows the normal cone does not pin.
    const double hs = d * p.sigma;
    const Vector fv = -p.sigma * grad_v;
    Vector fl(n);
    for (Eigen::Index j = 0; j < n; ++j) fl(j) = -p.sigma * (logphi(j) - vartheta);
    const Vector curv = (beta * beta) * s.lambda_hat.cwiseQuotient(phi.cwiseProduct(phi));
    const Matrix base = Matrix::Identity(nv, nv) + hs * (prob.Q + h.transpose() * curv.asDiagonal() * h);
    std::vector<bool> free(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) free[static_cast<std::size_t>(j)] = !pinned[static_cast<std::size_t>(j)];
    dl.resize(n);
    for (int iter = 0; iter < 2 * static_cast<int>(n) + 2; ++iter) {
      Matrix lhs = base;
      Vector rhs = d * fv;
      for (Eigen::Index j = 0; j < n; ++j) {
        const RowVector g = (beta / phi(j)) * h.row(j);
        if (free[static_cast<std::size_t>(j)]) {
          lhs.noalias() += (hs * hs) * g.transpose() * g;
          rhs.noalias() -= (hs * d * fl(j)) * g.transpose();
        } else {
          rhs.noalias() += hs * s.lambda_hat(j) * g.transpose();
        }
      }
      dv = lhs.ldlt().solve(rhs);
      bool changed = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double trial = d * fl(j) + hs * (beta / phi(j)) * h.row(j).dot(dv);
        const bool want = s.lambda_hat(j) + trial > 0.0;
        if (free[static_cast<std::size_t>(j)]) {
          dl(j) = trial;
          if (!want) {
            free[static_cast<std::size_t>(j)] = false;
            changed = true;
          }
        } else {
          dl(j) = -s.lambda_hat(j);
          if (want) {
            free[static_cast<std::size_t>(j)] = true;
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
  }

  FlowStepOutcome out;
  double t = 1.0;
  for (int k = 0; k <= p.max_backtracks; ++k) {
    const Vector v_new = s.v_hat + t * dv;
    const Vector phi_new = fr.phi(v_new);
    if ((phi_new.array() >= p.boundary_fraction * phi.array()).all() && (phi_new.array() > 0.0).all()) {
      out.state.v_hat = v_new;
      out.state.lambda_hat = (s.lambda_hat + t * dl).cwiseMax(0.0);
      out.state.eta = s.eta + t * d;
      out.halvings = k;
      return out;
    }
    t *= 0.5;
  }
  out.state = s;
  out.stalled = true;
  out.halvings = p.max_backtracks;
  return out;
}

}  // namespace detail

/// One integration step of the primal-dual flow at fixed (z, r).
inline FlowStepOutcome flow_step(const GovernorProblem& prob, const Vector& z, const Vector& r, const FlowState& state,
                                 const FlowParams& params) {
  params.validate();
  require(state.v_hat.size() == prob.set.nv() && state.lambda_hat.size() == prob.set.size(), ErrorKind::InvalidInput,
          "flow state has the wrong dimensions");
  require((state.lambda_hat.array() >= 0.0).all(), ErrorKind::InvalidInput, "lambda must be non-negative");
  const detail::FlowFrame frame(prob, z, r);
  return detail::advance(frame, state, params);
}

/// Compute budget for one sampling instant: a step count (reproducible) or a
/// wall-clock deadline. A step already in progress when the deadline passes
/// is completed.
struct Budget {
  enum class Kind { Steps, Deadline };
  Kind kind = Kind::Steps;
  long long steps = 0;
  std::chrono::steady_clock::time_point deadline{};

  static Budget of_steps(long long n) {
    require(n >= 0, ErrorKind::InvalidInput, "step budget must be >= 0");
    return Budget{Kind::Steps, n, {}};
  }
  static Budget until(std::chrono::steady_clock::time_point t) { return Budget{Kind::Deadline, 0, t}; }
  static Budget for_duration(std::chrono::nanoseconds d) { return until(std::chrono::steady_clock::now() + d); }
};

using FlowObserver = std::function<void(const FlowState&)>;

/// One sampling instant of the governor: warm start, run the flow until the
/// budget is spent, screening every iterate with the acceptance test and
/// keeping the latest accepted command (and its control input) ready.
inline GovernorResult rotec_step(const GovernorProblem& prob, const Vector& z, const Vector& r, const Vector& v_prev,
                                 const Vector& lambda_prev, const Budget& budget, const FlowParams& params,
                                 const FlowObserver& observer = {}) {
  params.validate();
  const detail::FlowFrame frame(prob, z, r);
  require(v_prev.size() == prob.set.nv(), ErrorKind::InvalidInput, "v_prev has the wrong dimension");
  if (!(frame.phi(v_prev).array() > 0.0).all())
    fail(ErrorKind::InvarianceViolation, "previous command is outside the barrier domain at the current state");

  GovernorResult res;
  res.v_applied = v_prev;
  res.u = control(prob.sys, z, v_prev);

  FlowState state;
  state.v_hat = v_prev;
  state.lambda_hat = warm_start_lambda(lambda_prev, prob.set.n_outputs(), prob.set.s_star());
  state.eta = 0.0;

  auto exhausted = [&](long long done) {
    if (budget.kind == Budget::Kind::Steps) return done >= budget.steps;
    return std::chrono::steady_clock::now() >= budget.deadline;
  };

  long long steps = 0;
  while (!exhausted(steps)) {
    const auto out = detail::advance(frame, state, params);
    ++steps;
    if (out.stalled) {
      ++res.stalls;
      continue;
    }
    state = out.state;
    if (observer) observer(state);
    if (acceptance(state.v_hat, v_prev, r, prob.Q) && (frame.phi(state.v_hat).array() >= 1.0).all()) {
      res.v_applied = state.v_hat;
      res.u = control(prob.sys, z, state.v_hat);
      res.accepted = true;
      res.last_rejected = false;
    } else {
      res.last_rejected = true;
    }
  }
  res.lambda_out = state.lambda_hat;
  res.flow_steps = steps;
  res.eta_spent = state.eta;
  return res;
}

/// Strict nominal feasibility, phi_j > 0 on every row.
inline bool in_barrier_domain(const GovernorProblem& prob, const Vector& z, const Vector& v) {
  return (barrier_phi(prob, z, v).array() > 0.0).all();
}

}  // namespace rotec
