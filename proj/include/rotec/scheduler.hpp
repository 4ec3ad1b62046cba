#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rotec/error.hpp"
#include "rotec/rng.hpp"

namespace rotec {

struct FixedExec {
  double time = 0.0;  // seconds
};

/// location + scale * (-ln(1 - u))^(1/shape), resampled above truncation.
struct WeibullExec {
  double shape = 2.0;
  double location = 0.020;
  double scale = 0.004;
  double truncation = 0.030;
};

using ExecModel = std::variant<FixedExec, WeibullExec>;

struct TaskSpec {
  std::string id;
  double wcet = 0.0;    // seconds
  double period = 0.0;  // seconds
  ExecModel exec = FixedExec{};
  bool governor = false;

  void validate() const {
    require(period > 0.0 && std::isfinite(period), ErrorKind::InvalidInput, "task " + id + ": period must be positive");
    require(wcet > 0.0 && wcet <= period, ErrorKind::InvalidInput, "task " + id + ": need 0 < wcet <= period");
    if (const auto* w = std::get_if<WeibullExec>(&exec)) {
      require(w->shape > 0.0 && w->scale > 0.0 && w->location >= 0.0, ErrorKind::InvalidInput,
              "task " + id + ": bad Weibull parameters");
      require(w->truncation > w->location, ErrorKind::InvalidInput,
              "task " + id + ": Weibull truncation must exceed the location");
    } else {
      const double t = std::get<FixedExec>(exec).time;
      require(t >= 0.0 && t <= wcet, ErrorKind::InvalidInput, "task " + id + ": fixed execution time outside [0, wcet]");
    }
  }
};

struct TaskSet {
  std::vector<TaskSpec> tasks;

  const TaskSpec* governor() const {
    for (const auto& t : tasks)
      if (t.governor) return &t;
    return nullptr;
  }
};

struct Utilization {
  double U = 0.0;
  bool schedulable = true;
};

/// U = sum wcet_i / period_i; schedulable when U <= 1.
inline Utilization utilization(const TaskSet& ts) {
  Utilization out;
  for (const auto& t : ts.tasks) {
    require(t.period > 0.0, ErrorKind::InvalidInput, "task " + t.id + ": period must be positive");
    out.U += t.wcet / t.period;
  }
  out.schedulable = out.U <= 1.0;
  return out;
}

/// Smallest period for a task of the given wcet that keeps the set
/// schedulable next to tasks of utilization `other_utilization`.
inline double min_schedulable_period(double other_utilization, double wcet) {
  require(wcet > 0.0, ErrorKind::InvalidInput, "wcet must be positive");
  require(other_utilization >= 0.0 && other_utilization < 1.0, ErrorKind::InvalidInput,
          "other tasks must leave spare utilization");
  return wcet / (1.0 - other_utilization);
}

/// Untruncated Weibull quantile at u in [0, 1).
inline double weibull_quantile(const WeibullExec& w, double u) {
  return w.location + w.scale * std::pow(-std::log1p(-u), 1.0 / w.shape);
}

inline double sample_exec_time(const TaskSpec& spec, SplitMix64& rng) {
  if (const auto* f = std::get_if<FixedExec>(&spec.exec)) return f->time;
  const auto& w = std::get<WeibullExec>(spec.exec);
  for (;;) {
    const double x = weibull_quantile(w, rng.uniform());
    if (x <= w.truncation) return x;
  }
}

/// Processor time left for the governor job of each sample under EDF.
///
/// The governor job k is released at k*P and due at (k+1)*P. Jobs of the
/// other tasks released in that window with a deadline no later than the
/// governor's preempt it (ties go to the other task); execution times are
/// quantized up to 1 us. The governor then runs in every remaining slot,
/// capped at its own wcet. A fixed override returns the same budget for
/// every sample.
class EdfBudgetModel {
 public:
  EdfBudgetModel(TaskSet ts, std::uint64_t seed, std::optional<double> fixed_override = std::nullopt)
      : ts_(std::move(ts)), fixed_(fixed_override) {
    if (fixed_) {
      require(*fixed_ >= 0.0 && std::isfinite(*fixed_), ErrorKind::InvalidInput, "budget override must be >= 0");
      return;
    }
    require(ts_.governor() != nullptr, ErrorKind::Config, "task set has no governor task");
    int n_gov = 0;
    for (const auto& t : ts_.tasks) {
      t.validate();
      n_gov += t.governor ? 1 : 0;
    }
    require(n_gov == 1, ErrorKind::Config, "exactly one task must be marked as the governor");
    const SplitMix64 root(seed);
    for (std::size_t i = 0; i < ts_.tasks.size(); ++i) {
      streams_.push_back(root.split(i));
      next_job_.push_back(0);
    }
  }

  /// Budget in seconds for governor sample k; k must not decrease between calls.
  double budget(long long k) {
    if (fixed_) return *fixed_;
    require(k >= last_k_, ErrorKind::Precondition, "budget samples must be requested in order");
    last_k_ = k;
    const TaskSpec& gov = *ts_.governor();
    const std::int64_t P = to_us(gov.period);
    const std::int64_t release = k * P;
    const std::int64_t deadline = release + P;
    std::int64_t interference = 0;
    for (std::size_t i = 0; i < ts_.tasks.size(); ++i) {
      const TaskSpec& t = ts_.tasks[i];
      if (t.governor) continue;
      const std::int64_t Ti = to_us(t.period);
      // jobs j with release in [release, deadline)
      const long long first = (release + Ti - 1) / Ti;
      while (next_job_[i] < first) {  // jobs outside any window still consume their draw
        (void)sample_exec_time(t, streams_[i]);
        ++next_job_[i];
      }
      for (long long j = first; j * Ti < deadline; ++j) {
        const double e = sample_exec_time(t, streams_[i]);
        ++next_job_[i];
        if ((j + 1) * Ti <= deadline) interference += static_cast<std::int64_t>(std::ceil(e * 1e6 - 1e-9));
      }
    }
    const std::int64_t left = std::max<std::int64_t>(0, P - interference);
    return std::min(static_cast<double>(left) * 1e-6, gov.wcet);
  }

  bool fixed() const { return fixed_.has_value(); }

 private:
  static std::int64_t to_us(double s) { return static_cast<std::int64_t>(std::llround(s * 1e6)); }

  TaskSet ts_;
  std::optional<double> fixed_;
  std::vector<SplitMix64> streams_;
  std::vector<long long> next_job_;
  long long last_k_ = 0;
};

/// Deterministic-mode conversion: ceil(budget / step_cost) steps, 0 for an
/// empty budget. A step already in progress at the deadline completes.
inline long long budget_to_steps(double budget_s, double step_cost_s) {
  require(step_cost_s > 0.0, ErrorKind::InvalidInput, "step cost must be positive");
  if (!(budget_s > 0.0)) return 0;
  return static_cast<long long>(std::ceil(budget_s / step_cost_s - 1e-12));
}

}  // namespace rotec
