#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rotec/rotec.hpp"

namespace fs = std::filesystem;
using namespace rotec;

namespace {

struct CommonOptions {
  std::string scenario;
  std::string seeds;
  std::string out = "out";
  bool deterministic = false;
  bool wall_clock = false;
  std::optional<double> budget_override_us;
  std::string baseline;
  unsigned threads = 0;
  bool no_trace = false;
};

unsigned worker_count(unsigned requested, std::size_t jobs) {
  unsigned n = requested > 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("ROTEC_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return std::max(1u, std::min<unsigned>(n, static_cast<unsigned>(std::max<std::size_t>(1, jobs))));
}

/// Runs every seed on a worker pool; results come back in seed order.
std::vector<SimTrace> run_seeds(const Scenario& sc, long long first, long long last, unsigned threads) {
  const std::size_t n = static_cast<std::size_t>(last - first + 1);
  std::vector<SimTrace> out(n);
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        out[i] = simulate(sc, static_cast<std::uint64_t>(first) + i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned w = worker_count(threads, n);
  for (unsigned t = 0; t < w; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  return out;
}

Config load_config(const CommonOptions& o) {
  Config cfg = Config::load(o.scenario);
  if (o.budget_override_us) cfg.set("budget.override_us", io::fmt(*o.budget_override_us));
  if (o.deterministic) cfg.set("budget.deterministic", "true");
  if (o.wall_clock) cfg.set("budget.deterministic", "false");
  return cfg;
}

std::pair<long long, long long> seed_range(const CommonOptions& o, const BuiltScenario& b) {
  return o.seeds.empty() ? b.seeds : Config::parse_range(o.seeds);
}

/// Mean PI of the baseline: a summary CSV, or a scenario run on the first seed.
double baseline_pi(const CommonOptions& o, long long first_seed) {
  if (o.baseline.empty()) return 0.0;
  const fs::path p(o.baseline);
  if (p.extension() == ".csv") {
    const auto pis = io::read_summary_pi(p);
    return io::describe(pis).mean;
  }
  const BuiltScenario b = load_scenario(p);
  return simulate(b.scenario, static_cast<std::uint64_t>(first_seed)).pi;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec && fs::is_directory(dir), ErrorKind::Config, "cannot create output directory " + dir.string());
}

std::ofstream open_out(const fs::path& file) {
  std::ofstream os(file);
  require(static_cast<bool>(os), ErrorKind::Config, "cannot write " + file.string());
  return os;
}

int cmd_sstar(const CommonOptions& o) {
  const BuiltScenario b = load_scenario(o.scenario);
  const AdmissibleSet& set = b.scenario.problem.set;
  std::cout << "scenario " << b.scenario.name << "\n";
  std::cout << "s_star " << set.s_star() << "\n";
  std::cout << "rows " << set.size() << " (" << set.n_outputs() << " x " << set.block() << ")\n";
  ensure_dir(o.out);
  const fs::path file = fs::path(o.out) / (b.scenario.name + ".set");
  io::save_set(file, set);
  const AdmissibleSet back = io::load_set(file);
  require(io::bit_equal(set, back), ErrorKind::Design, "set cache did not round-trip bit-exactly");
  std::cout << "cache " << file.string() << " (round-trip verified)\n";
  return 0;
}

int cmd_run(const CommonOptions& o) {
  const BuiltScenario b = build_scenario(load_config(o));
  const auto [first, last] = seed_range(o, b);
  const double base = baseline_pi(o, first);
  const auto traces = run_seeds(b.scenario, first, last, o.threads);

  ensure_dir(o.out);
  const fs::path dir(o.out);
  if (!o.no_trace) {
    auto os = open_out(dir / (b.scenario.name + "_trace.csv"));
    io::write_trace_header(os, b.scenario);
    for (const auto& t : traces) io::write_trace_rows(os, t);
  }
  std::vector<io::SummaryRow> rows;
  long long violations = 0, rejections = 0;
  std::vector<double> pis;
  for (const auto& t : traces) {
    rows.push_back(io::summarize(t, base));
    violations += t.violations;
    rejections += t.rejections;
    pis.push_back(t.pi);
  }
  {
    auto os = open_out(dir / (b.scenario.name + "_summary.csv"));
    io::write_summary(os, b.scenario.name, rows);
  }
  const auto d = io::describe(pis);
  std::cout << "scenario " << b.scenario.name << " seeds " << first << ".." << last << "\n";
  std::cout << "mean_pi " << io::fmt(d.mean) << "\n";
  if (base > 0.0) std::cout << "mean_normalized_pi " << io::fmt(d.mean / base) << "\n";
  std::cout << "violations " << violations << "\n";
  std::cout << "rejections " << rejections << "\n";
  return 0;
}

int cmd_sweep(const CommonOptions& o, const std::string& param, const std::string& grid) {
  static const std::map<std::string, std::string> keys = {
      {"sigma", "flow.sigma"}, {"period", "period"}, {"budget", "budget.override_us"}};
  const auto it = keys.find(param);
  require(it != keys.end(), ErrorKind::Config, "--sweep must be sigma, period or budget");
  std::vector<std::string> values;
  {
    std::stringstream ss(grid);
    std::string v;
    while (std::getline(ss, v, ',')) {
      v.erase(std::remove_if(v.begin(), v.end(), ::isspace), v.end());
      if (!v.empty()) {
        (void)Config::parse_number(v);
        values.push_back(v);
      }
    }
  }
  require(!values.empty(), ErrorKind::Config, "--grid is empty");

  const Config base_cfg = load_config(o);
  std::vector<io::SweepRow> rows;
  std::string name;
  double base = -1.0;
  for (const auto& v : values) {
    Config cfg = base_cfg;
    cfg.set(it->second, v);
    const BuiltScenario b = build_scenario(cfg);
    name = b.scenario.name;
    const auto [first, last] = seed_range(o, b);
    if (base < 0.0) base = baseline_pi(o, first);
    const auto traces = run_seeds(b.scenario, first, last, o.threads);
    io::SweepRow row;
    row.param = param;
    row.value = v;
    std::vector<double> pis;
    double rej = 0.0;
    for (const auto& t : traces) {
      pis.push_back(t.pi);
      rej += static_cast<double>(t.rejections);
      row.violations += t.violations;
    }
    row.pi = io::describe(pis);
    row.mean_rejections = rej / static_cast<double>(traces.size());
    if (base > 0.0) row.mean_normalized_pi = row.pi.mean / base;
    rows.push_back(row);
    std::cout << param << "=" << v << " mean_pi " << io::fmt(row.pi.mean) << " mean_rejections "
              << io::fmt(row.mean_rejections) << " violations " << row.violations << "\n";
  }
  ensure_dir(o.out);
  auto os = open_out(fs::path(o.out) / (name + "_sweep_" + param + ".csv"));
  io::write_sweep(os, name, rows);
  return 0;
}

void add_common(CLI::App* cmd, CommonOptions& o, bool campaign) {
  cmd->add_option("--scenario", o.scenario, "Scenario config file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "Output directory");
  if (!campaign) return;
  cmd->add_option("--seeds", o.seeds, "Seed range A..B (default: run.seeds)");
  cmd->add_flag("--deterministic", o.deterministic, "Step-count budgets from the calibrated step cost");
  cmd->add_flag("--wall-clock", o.wall_clock, "Wall-clock deadlines instead of step counts");
  cmd->add_option("--budget-override", o.budget_override_us, "Fixed per-sample budget in microseconds");
  cmd->add_option("--baseline", o.baseline, "Baseline for normalized PI: summary CSV or scenario config");
  cmd->add_option("--threads", o.threads, "Worker threads (ROTEC_THREADS caps)");
  cmd->add_flag("--no-trace", o.no_trace, "Skip the per-sample trace CSV");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Early-termination-robust command governor: set construction, runs and sweeps"};
  app.require_subcommand(1);
  CommonOptions o;
  std::string sweep_param, grid;

  auto* sstar = app.add_subcommand("sstar", "Compute s*, report the row count and write the set cache");
  add_common(sstar, o, false);
  auto* run = app.add_subcommand("run", "Simulate a scenario over a seed range");
  add_common(run, o, true);
  auto* sweep = app.add_subcommand("sweep", "Repeat a campaign over a parameter grid");
  add_common(sweep, o, true);
  sweep->add_option("--sweep", sweep_param, "sigma | period | budget")->required();
  sweep->add_option("--grid", grid, "Comma-separated values v1,v2,...")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (o.deterministic && o.wall_clock) fail(ErrorKind::Config, "--deterministic and --wall-clock are exclusive");
    if (*sstar) return cmd_sstar(o);
    if (*run) return cmd_run(o);
    return cmd_sweep(o, sweep_param, grid);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
