#pragma once

#include <complex>
#include <filesystem>
#include <string>

#include "rotec/config.hpp"
#include "rotec/simulation.hpp"

namespace rotec {

/// Everything derived from a scenario config before simulation.
struct BuiltScenario {
  Scenario scenario;
  AdmissibleSet nominal;
  std::pair<long long, long long> seeds{1, 1};
};

namespace detail {

/// Accepts n or n+p columns; n-column rows get a zero weight on the held input.
inline Matrix pad_to_augmented(const Matrix& m, Eigen::Index n, Eigen::Index p, const std::string& key) {
  if (m.cols() == n + p) return m;
  require(m.cols() == n, ErrorKind::Config, key + " must have n or n+p columns");
  Matrix out = Matrix::Zero(m.rows(), n + p);
  out.leftCols(n) = m;
  return out;
}

inline Integrator parse_integrator(const std::string& s) {
  if (s == "implicit" || s == "linearly_implicit") return Integrator::LinearlyImplicitEuler;
  if (s == "explicit" || s == "forward_euler") return Integrator::ForwardEuler;
  fail(ErrorKind::Config, "flow.integrator must be 'implicit' or 'explicit', got '" + s + "'");
}

inline GovernorMode parse_mode(const std::string& s) {
  if (s == "rotec") return GovernorMode::Rotec;
  if (s == "oracle_cg") return GovernorMode::OracleCg;
  if (s == "oracle_tightened") return GovernorMode::OracleTightened;
  fail(ErrorKind::Config, "governor.mode must be rotec, oracle_cg or oracle_tightened, got '" + s + "'");
}

inline ExecModel parse_exec(const std::string& text, const std::string& key) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const Vector args = colon == std::string::npos ? Vector() : Vector(Config::parse_matrix(text.substr(colon + 1), ".").reshaped());
  if (kind == "fixed") {
    require(args.size() == 1, ErrorKind::Config, key + ": fixed:<seconds>");
    return FixedExec{args(0)};
  }
  if (kind == "weibull") {
    require(args.size() == 4, ErrorKind::Config, key + ": weibull:<shape>,<location>,<scale>,<truncation> (seconds)");
    return WeibullExec{args(0), args(1), args(2), args(3)};
  }
  fail(ErrorKind::Config, key + ": unknown execution model '" + kind + "'");
}

inline ReferenceProfile parse_reference(const Config& cfg, Eigen::Index nv) {
  const std::string kind = cfg.get_string("reference.kind", "constant");
  auto vec = [&](const std::string& key) {
    const Vector v = cfg.get_vector(key);
    require(v.size() == nv, ErrorKind::Config, key + " must have one entry per command");
    return v;
  };
  if (kind == "constant") return ConstantReference{vec("reference.value")};
  if (kind == "steps") {
    // reference.steps = t0 v0; t1 v1; ...   (time first, then the command)
    const Matrix m = cfg.get_matrix("reference.steps");
    require(m.cols() == nv + 1, ErrorKind::Config, "reference.steps rows are 'time value...'");
    StepReference r;
    for (Eigen::Index i = 0; i < m.rows(); ++i) r.breakpoints.emplace_back(m(i, 0), m.row(i).tail(nv).transpose());
    return r;
  }
  if (kind == "sinusoid") {
    SinusoidReference r;
    r.amplitude = vec("reference.amplitude");
    r.offset = cfg.get_vector("reference.offset", Vector::Zero(nv));
    require(r.offset.size() == nv, ErrorKind::Config, "reference.offset must have one entry per command");
    r.frequency = cfg.get_double("reference.frequency");
    r.phase = cfg.get_double("reference.phase", 0.0);
    return r;
  }
  if (kind == "fishhook") {
    FishhookReference r;
    r.steer = vec("reference.steer");
    r.countersteer = vec("reference.countersteer");
    r.start = cfg.get_double("reference.start", 0.0);
    r.rate_index = static_cast<int>(cfg.get_int("reference.rate_index", 1));
    return r;
  }
  fail(ErrorKind::Config, "reference.kind must be constant, steps, sinusoid or fishhook, got '" + kind + "'");
}

}  // namespace detail

/// Build plant, gains, admissible set, task set and run settings from a config.
///
/// Keys (defaults in parentheses):
///   name; period [s]
///   plant.A, plant.B; plant.discretization = zoh | euler | discrete (zoh)
///   gains.method = poles | lqr | explicit; gains.poles; gains.Q, gains.R; gains.K, gains.G
///   track.C, track.D (zero)
///   constraints.C, constraints.D (zero), constraints.ybar, constraints.symmetric (false),
///   constraints.input_bound (none); epsilon (0.01); sstar.max_horizon (1000)
///   governor.mode (rotec); governor.Q (I); governor.beta (1e5); governor.vartheta (1e-6 * beta)
///   flow.sigma (100); flow.delta_eta (1e-3); flow.integrator (implicit);
///   flow.max_backtracks (30); flow.boundary_fraction (0.1)
///   tasks = id, ...; task.<id>.period, .wcet, .exec, .governor
///   budget.override_us; budget.step_cost_us (10); budget.deterministic (true)
///   reference.*; run.duration; run.pi_dt (0); run.z0 (0); run.v0 (0); run.seeds (1)
inline BuiltScenario build_scenario(const Config& cfg) {
  BuiltScenario out;
  Scenario& sc = out.scenario;
  sc.name = cfg.get_string("name", "scenario");
  sc.period = cfg.get_double("period");
  require(sc.period > 0.0, ErrorKind::Config, "period must be positive");

  const std::string disc = cfg.get_string("plant.discretization", "zoh");
  DiscretePlant dp;
  if (disc == "discrete") {
    dp = DiscretePlant{cfg.get_matrix("plant.A"), cfg.get_matrix("plant.B"), sc.period};
  } else {
    ContinuousPlant cp{cfg.get_matrix("plant.A"), cfg.get_matrix("plant.B")};
    try {
      cp.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Config, e.what());
    }
    if (disc == "zoh") {
      dp = discretize(cp, sc.period);
    } else if (disc == "euler") {
      dp = euler_discretize(cp, sc.period);
    } else {
      fail(ErrorKind::Config, "plant.discretization must be zoh, euler or discrete");
    }
  }
  const Eigen::Index n = dp.n(), p = dp.p();
  require(dp.A.rows() == n && dp.A.cols() == n && dp.B.rows() == n, ErrorKind::Config, "plant dimensions disagree");

  const Matrix c_track = detail::pad_to_augmented(cfg.get_matrix("track.C"), n, p, "track.C");
  const Matrix d_track = cfg.get_matrix("track.D", Matrix::Zero(c_track.rows(), c_track.rows()));

  const std::string method = cfg.get_string("gains.method", "poles");
  TrackingGains gains;
  if (method == "explicit") {
    gains.K = cfg.get_matrix("gains.K");
    gains.G = cfg.get_matrix("gains.G");
  } else if (method == "poles") {
    std::vector<std::complex<double>> poles;
    const Vector pv = cfg.get_vector("gains.poles");
    for (Eigen::Index i = 0; i < pv.size(); ++i) poles.emplace_back(pv(i), 0.0);
    gains = design_tracking_gains(dp, c_track, d_track, PolePlacement{poles});
  } else if (method == "lqr") {
    gains = design_tracking_gains(dp, c_track, d_track, LqrWeights{cfg.get_matrix("gains.Q"), cfg.get_matrix("gains.R")});
  } else {
    fail(ErrorKind::Config, "gains.method must be poles, lqr or explicit");
  }
  const Eigen::Index nv = gains.G.cols();

  Matrix cy(0, n + p), dy(0, nv);
  Vector yb(0);
  auto append = [&](const Matrix& c, const Matrix& d, const Vector& b) {
    Matrix c2(cy.rows() + c.rows(), n + p), d2(dy.rows() + d.rows(), nv);
    Vector b2(yb.size() + b.size());
    c2 << cy, c;
    d2 << dy, d;
    b2 << yb, b;
    cy = c2;
    dy = d2;
    yb = b2;
  };
  const bool symmetric = cfg.get_bool("constraints.symmetric", false);
  if (cfg.has("constraints.input_bound")) {
    const Vector ub = cfg.get_vector("constraints.input_bound");
    require(ub.size() == p || ub.size() == 1, ErrorKind::Config, "constraints.input_bound: one bound or one per input");
    const Vector bound = ub.size() == p ? ub : Vector::Constant(p, ub(0));
    append(gains.K, gains.G, bound);
    append(-gains.K, -gains.G, bound);
  }
  if (cfg.has("constraints.C")) {
    const Matrix c = detail::pad_to_augmented(cfg.get_matrix("constraints.C"), n, p, "constraints.C");
    const Matrix d = cfg.get_matrix("constraints.D", Matrix::Zero(c.rows(), nv));
    require(d.rows() == c.rows() && d.cols() == nv, ErrorKind::Config, "constraints.D must be rows x commands");
    const Vector b = cfg.get_vector("constraints.ybar");
    require(b.size() == c.rows(), ErrorKind::Config, "constraints.ybar needs one bound per row of constraints.C");
    append(c, d, b);
    if (symmetric) append(-c, -d, b);
  }
  require(cy.rows() > 0, ErrorKind::Config, "no constraints configured");

  const AugmentedSystem sys = augment(dp, gains.K, gains.G, cy, dy);
  const double epsilon = cfg.get_double("epsilon", 0.01);
  SStarOptions so;
  so.max_horizon = static_cast<int>(cfg.get_int("sstar.max_horizon", 1000));
  out.nominal = build_admissible_set(sys, yb, epsilon, so);
  const double beta = cfg.get_double("governor.beta", 1e5);
  const double vartheta = cfg.get_double("governor.vartheta", 1e-6 * beta);
  const AdmissibleSet tightened = tighten(out.nominal, beta, vartheta);
  const Matrix q = cfg.get_matrix("governor.Q", Matrix::Identity(nv, nv));
  try {
    sc.problem = GovernorProblem(sys, tightened, q);
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  sc.ybar = yb;
  sc.mode = detail::parse_mode(cfg.get_string("governor.mode", "rotec"));

  sc.flow.sigma = cfg.get_double("flow.sigma", 100.0);
  sc.flow.delta_eta = cfg.get_double("flow.delta_eta", 1e-3);
  sc.flow.integrator = detail::parse_integrator(cfg.get_string("flow.integrator", "implicit"));
  sc.flow.max_backtracks = static_cast<int>(cfg.get_int("flow.max_backtracks", 30));
  sc.flow.boundary_fraction = cfg.get_double("flow.boundary_fraction", 0.1);

  // The governor task always runs at the scenario period.
  if (cfg.has("tasks")) {
    for (const auto& id : cfg.get_list("tasks")) {
      TaskSpec t;
      t.id = id;
      const std::string pre = "task." + id + ".";
      t.governor = cfg.get_bool(pre + "governor", false);
      t.period = t.governor ? sc.period : cfg.get_double(pre + "period");
      t.wcet = cfg.get_double(pre + "wcet", t.period);
      t.exec = detail::parse_exec(cfg.get_string(pre + "exec", "fixed:0"), pre + "exec");
      sc.tasks.tasks.push_back(t);
    }
  } else {
    sc.tasks.tasks.push_back(TaskSpec{"governor", sc.period, sc.period, FixedExec{0.0}, true});
  }
  if (cfg.has("budget.override_us")) sc.budget.fixed_override = cfg.get_double("budget.override_us") * 1e-6;
  sc.budget.step_cost = cfg.get_double("budget.step_cost_us", 10.0) * 1e-6;
  require(sc.budget.step_cost > 0.0, ErrorKind::Config, "budget.step_cost_us must be positive");
  sc.budget.deterministic = cfg.get_bool("budget.deterministic", true);

  sc.reference = detail::parse_reference(cfg, nv);
  sc.duration = cfg.get_double("run.duration");
  sc.pi_dt = cfg.get_double("run.pi_dt", 0.0);
  sc.z0 = cfg.get_vector("run.z0", Vector::Zero(n + p));
  if (sc.z0.size() == n) {
    Vector z(n + p);
    z << sc.z0, Vector::Zero(p);
    sc.z0 = z;
  }
  sc.v0 = cfg.get_vector("run.v0", Vector::Zero(nv));
  out.seeds = Config::parse_range(cfg.get_string("run.seeds", "1"));
  try {
    sc.validate();
    utilization(sc.tasks);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidInput) fail(ErrorKind::Config, e.what());
    throw;
  }
  if (sc.mode == GovernorMode::Rotec)
    require(in_barrier_domain(sc.problem, sc.z0, sc.v0), ErrorKind::Config,
            "run.v0 is not admissible at run.z0");
  return out;
}

inline BuiltScenario load_scenario(const std::filesystem::path& file) { return build_scenario(Config::load(file)); }

}  // namespace rotec
