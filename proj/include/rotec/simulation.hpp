#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rotec/rotec_flow.hpp"
#include "rotec/scheduler.hpp"

namespace rotec {

struct ConstantReference {
  Vector value;
};

/// Piecewise constant: value of the last breakpoint with time <= t (zero
/// before the first one).
struct StepReference {
  std::vector<std::pair<double, Vector>> breakpoints;
};

/// offset + amplitude * sin(2 pi frequency t + phase), elementwise.
struct SinusoidReference {
  Vector amplitude;
  Vector offset;
  double frequency = 0.0;
  double phase = 0.0;
};

/// Zero before `start`, then `steer` until the first sign change of state
/// component `rate_index` (sampled), then `countersteer`.
struct FishhookReference {
  Vector steer;
  Vector countersteer;
  double start = 0.0;
  int rate_index = 1;
};

using ReferenceProfile = std::variant<ConstantReference, StepReference, SinusoidReference, FishhookReference>;

inline Eigen::Index reference_size(const ReferenceProfile& p) {
  return std::visit(
      [](const auto& r) -> Eigen::Index {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ConstantReference>) return r.value.size();
        if constexpr (std::is_same_v<T, StepReference>) return r.breakpoints.empty() ? 0 : r.breakpoints.front().second.size();
        if constexpr (std::is_same_v<T, SinusoidReference>) return r.amplitude.size();
        if constexpr (std::is_same_v<T, FishhookReference>) return r.steer.size();
      },
      p);
}

/// Evaluates a profile along one run; holds the fishhook switch state.
class ReferenceTracker {
 public:
  explicit ReferenceTracker(ReferenceProfile p) : profile_(std::move(p)) {}

  /// Reference applied at sample time t given the state z(k).
  Vector at_sample(double t, const Vector& z) {
    if (const auto* f = std::get_if<FishhookReference>(&profile_)) {
      require(f->rate_index >= 0 && f->rate_index < z.size(), ErrorKind::Config, "fishhook rate index out of range");
      if (t + 1e-12 < f->start) return Vector::Zero(f->steer.size());
      const double rate = z(f->rate_index);
      if (!switched_) {
        if (started_ && prev_rate_ != 0.0 && rate != 0.0 && (rate > 0.0) != (prev_rate_ > 0.0)) {
          switched_ = true;
          switch_time_ = t;
        }
        if (rate != 0.0) prev_rate_ = rate;
        started_ = true;
      }
      return switched_ ? f->countersteer : f->steer;
    }
    return value(t);
  }

  /// Time-defined profiles between samples; fishhook holds its sample value.
  Vector between(double t, const Vector& held) const {
    if (std::holds_alternative<FishhookReference>(profile_)) return held;
    return value(t);
  }

  bool switched() const { return switched_; }
  std::optional<double> switch_time() const { return switched_ ? std::optional<double>(switch_time_) : std::nullopt; }

 private:
  Vector value(double t) const {
    return std::visit(
        [t](const auto& r) -> Vector {
          using T = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<T, ConstantReference>) {
            return r.value;
          } else if constexpr (std::is_same_v<T, StepReference>) {
            Vector out = Vector::Zero(r.breakpoints.front().second.size());
            for (const auto& [bt, bv] : r.breakpoints)
              if (bt <= t + 1e-12) out = bv;
            return out;
          } else if constexpr (std::is_same_v<T, SinusoidReference>) {
            return r.offset + r.amplitude * std::sin(2.0 * std::numbers::pi * r.frequency * t + r.phase);
          } else {
            return Vector::Zero(r.steer.size());
          }
        },
        profile_);
  }

  ReferenceProfile profile_;
  bool started_ = false;
  bool switched_ = false;
  double prev_rate_ = 0.0;
  double switch_time_ = 0.0;
};

enum class GovernorMode {
  Rotec,            // flow under the per-sample budget
  OracleCg,         // exact solution over the nominal rows, no budget
  OracleTightened,  // exact solution over the tightened rows, no budget
};

inline const char* to_string(GovernorMode m) {
  switch (m) {
    case GovernorMode::Rotec: return "rotec";
    case GovernorMode::OracleCg: return "oracle_cg";
    case GovernorMode::OracleTightened: return "oracle_tightened";
  }
  return "?";
}

struct BudgetSettings {
  std::optional<double> fixed_override;  // seconds
  double step_cost = 1e-5;               // seconds per flow step in deterministic mode
  bool deterministic = true;
};

struct Scenario {
  std::string name;
  GovernorProblem problem;  // tightened set for the flow
  Vector ybar;              // output bounds, for violation counting
  GovernorMode mode = GovernorMode::Rotec;
  FlowParams flow;
  TaskSet tasks;
  BudgetSettings budget;
  ReferenceProfile reference = ConstantReference{};
  Vector z0;
  Vector v0;
  double period = 0.1;
  double duration = 10.0;
  double pi_dt = 0.0;  // 0: rectangle rule at the sampling period

  long long n_samples() const { return static_cast<long long>(std::llround(duration / period)); }

  void validate() const {
    problem.validate();
    require(period > 0.0 && duration > 0.0, ErrorKind::Config, "period and duration must be positive");
    require(z0.size() == problem.set.nz() && v0.size() == problem.set.nv(), ErrorKind::Config,
            "initial state or command has the wrong size");
    require(ybar.size() == problem.sys.ny(), ErrorKind::Config, "ybar length must equal the output count");
    require(reference_size(reference) == problem.set.nv(), ErrorKind::Config,
            "reference length must equal the command dimension");
    require(pi_dt >= 0.0, ErrorKind::Config, "pi_dt must be >= 0");
    flow.validate();
  }
};

struct SampleRecord {
  long long k = 0;
  double t = 0.0;
  Vector z;
  Vector r;
  Vector v;
  Vector u;
  Vector y;
  bool accepted = false;
  bool rejected = false;  // the flow ran but no iterate was accepted; v(k-1) kept
  double budget = 0.0;    // seconds granted
  long long flow_steps = 0;
  long long stalls = 0;
};

struct SimTrace {
  std::string scenario;
  std::uint64_t seed = 0;
  std::string rng = SplitMix64::kName;
  std::vector<SampleRecord> records;
  long long violations = 0;
  double pi = 0.0;
  long long rejections = 0;
  long long flow_steps = 0;
  long long stalls = 0;
  double max_output_ratio = 0.0;  // max_k max_i y_i(k) / ybar_i
  std::optional<double> switch_time;
};

/// Observer for every exposed flow state, with the state z it was computed at.
using SimObserver = std::function<void(const Vector& z, const FlowState&)>;

/// Output above its bound beyond 1e-9 * max(1, ybar).
inline bool violates(const Vector& y, const Vector& ybar) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y(i) > ybar(i) + 1e-9 * std::max(1.0, std::abs(ybar(i)))) return true;
  return false;
}

/// sum_k ||v(k) - r(k)||^2 * dt.
inline double performance_index(const std::vector<Vector>& v, const std::vector<Vector>& r, double dt) {
  require(v.size() == r.size(), ErrorKind::InvalidInput, "v and r sequences must have equal length");
  double pi = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) pi += (v[k] - r[k]).squaredNorm() * dt;
  return pi;
}

inline double performance_index(const SimTrace& trace, double dt) {
  require(!trace.records.empty(), ErrorKind::InvalidInput, "trace is empty");
  std::vector<Vector> v, r;
  for (const auto& rec : trace.records) {
    v.push_back(rec.v);
    r.push_back(rec.r);
  }
  return performance_index(v, r, dt);
}

inline SimTrace simulate(const Scenario& sc, std::uint64_t seed, const SimObserver& observer = {}) {
  sc.validate();
  const GovernorProblem& prob = sc.problem;
  const AugmentedSystem& sys = prob.sys;
  EdfBudgetModel budgets(sc.tasks, seed, sc.budget.fixed_override);
  ReferenceTracker ref(sc.reference);

  SimTrace tr;
  tr.scenario = sc.name;
  tr.seed = seed;
  const long long n = sc.n_samples();
  tr.records.reserve(static_cast<std::size_t>(n));

  const int nsub = sc.pi_dt > 0.0 ? std::max(1, static_cast<int>(std::llround(sc.period / sc.pi_dt))) : 1;
  const double sub_dt = sc.period / nsub;

  Vector z = sc.z0;
  Vector v = sc.v0;
  Vector lambda = Vector::Zero(prob.set.size());
  FlowObserver flow_obs;
  const Vector* z_ptr = &z;
  if (observer) flow_obs = [&observer, z_ptr](const FlowState& s) { observer(*z_ptr, s); };

  for (long long k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * sc.period;
    SampleRecord rec;
    rec.k = k;
    rec.t = t;
    rec.z = z;
    rec.r = ref.at_sample(t, z);

    if (sc.mode == GovernorMode::Rotec) {
      rec.budget = budgets.budget(k);
      Budget b;
      if (sc.budget.deterministic) {
        b = Budget::of_steps(budget_to_steps(rec.budget, sc.budget.step_cost));
      } else {
        b = Budget::for_duration(std::chrono::nanoseconds(static_cast<long long>(rec.budget * 1e9)));
      }
      const GovernorResult res = rotec_step(prob, z, rec.r, v, lambda, b, sc.flow, flow_obs);
      v = res.v_applied;
      lambda = res.lambda_out;
      rec.u = res.u;
      rec.accepted = res.accepted;
      rec.rejected = res.flow_steps > 0 && !res.accepted;
      rec.flow_steps = res.flow_steps;
      rec.stalls = res.stalls;
    } else {
      rec.budget = std::numeric_limits<double>::infinity();
      v = sc.mode == GovernorMode::OracleCg ? solve_cg_oracle(prob, z, rec.r) : solve_tightened_oracle(prob, z, rec.r).v;
      rec.u = control(sys, z, v);
      rec.accepted = true;
    }
    rec.v = v;
    rec.y = output(sys, z, v);

    if (violates(rec.y, sc.ybar)) ++tr.violations;
    for (Eigen::Index i = 0; i < rec.y.size(); ++i)
      tr.max_output_ratio = std::max(tr.max_output_ratio, rec.y(i) / sc.ybar(i));
    for (int j = 0; j < nsub; ++j) tr.pi += (v - ref.between(t + j * sub_dt, rec.r)).squaredNorm() * sub_dt;
    tr.rejections += rec.rejected ? 1 : 0;
    tr.flow_steps += rec.flow_steps;
    tr.stalls += rec.stalls;

    z = step(sys, z, rec.u);
    tr.records.push_back(std::move(rec));
  }
  tr.switch_time = ref.switch_time();
  return tr;
}

}  // namespace rotec
