#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "rotec/admissible_set.hpp"
#include "rotec/config.hpp"
#include "rotec/simulation.hpp"

namespace rotec::io {

inline constexpr int kSchemaVersion = 1;

/// Shortest text that parses back to the same double.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return Config::parse_number(s);
}

// ---------------------------------------------------------------------------
// Admissible-set cache

inline void write_set(std::ostream& os, const AdmissibleSet& set) {
  os << "# rotec admissible set\n# schema_version=" << kSchemaVersion << "\n";
  os << "outputs " << set.n_outputs() << "\n";
  os << "s_star " << set.s_star() << "\n";
  os << "epsilon " << fmt(set.epsilon()) << "\n";
  os << "beta " << fmt(set.beta()) << "\n";
  os << "vartheta " << fmt(set.vartheta()) << "\n";
  os << "nz " << set.nz() << "\nnv " << set.nv() << "\nrows " << set.size() << "\n";
  os << "# output horizon c[0..nz) h[0..nv) bound\n";
  for (Eigen::Index j = 0; j < set.size(); ++j) {
    os << set.output_of(j) << ' ' << set.horizon_of(j);
    for (Eigen::Index a = 0; a < set.nz(); ++a) os << ' ' << fmt(set.c()(j, a));
    for (Eigen::Index a = 0; a < set.nv(); ++a) os << ' ' << fmt(set.h()(j, a));
    os << ' ' << fmt(set.b()(j)) << '\n';
  }
}

inline AdmissibleSet read_set(std::istream& is) {
  std::string line;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    body.push_back(line);
  }
  std::size_t at = 0;
  auto header = [&](const std::string& key) {
    require(at < body.size(), ErrorKind::Config, "set file truncated before '" + key + "'");
    std::istringstream ss(body[at++]);
    std::string k, v;
    ss >> k >> v;
    require(k == key, ErrorKind::Config, "set file: expected '" + key + "', got '" + k + "'");
    return v;
  };
  const int m = std::stoi(header("outputs"));
  const int s_star = std::stoi(header("s_star"));
  const double eps = parse_double(header("epsilon"));
  const double beta = parse_double(header("beta"));
  const double vartheta = parse_double(header("vartheta"));
  const Eigen::Index nz = std::stol(header("nz"));
  const Eigen::Index nv = std::stol(header("nv"));
  const Eigen::Index n = std::stol(header("rows"));
  require(body.size() - at == static_cast<std::size_t>(n), ErrorKind::Config, "set file: row count mismatch");
  Matrix c(n, nz), h(n, nv);
  Vector b(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    std::istringstream ss(body[at++]);
    int out = 0, hor = 0;
    ss >> out >> hor;
    std::string tok;
    for (Eigen::Index a = 0; a < nz; ++a) {
      ss >> tok;
      c(j, a) = parse_double(tok);
    }
    for (Eigen::Index a = 0; a < nv; ++a) {
      ss >> tok;
      h(j, a) = parse_double(tok);
    }
    ss >> tok;
    b(j) = parse_double(tok);
    require(!ss.fail(), ErrorKind::Config, "set file: short row " + std::to_string(j));
  }
  auto set = AdmissibleSet::from_rows(m, s_star, eps, beta, vartheta, c, h, b);
  for (Eigen::Index j = 0; j < n; ++j) (void)set.row(j);
  return set;
}

inline void save_set(const std::filesystem::path& file, const AdmissibleSet& set) {
  std::ofstream os(file);
  require(static_cast<bool>(os), ErrorKind::Config, "cannot write " + file.string());
  write_set(os, set);
}

inline AdmissibleSet load_set(const std::filesystem::path& file) {
  std::ifstream is(file);
  require(static_cast<bool>(is), ErrorKind::Config, "cannot read " + file.string());
  return read_set(is);
}

inline bool bit_equal(const AdmissibleSet& a, const AdmissibleSet& b) {
  auto same = [](const Matrix& x, const Matrix& y) {
    if (x.rows() != y.rows() || x.cols() != y.cols()) return false;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      if (std::bit_cast<std::uint64_t>(x.data()[i]) != std::bit_cast<std::uint64_t>(y.data()[i])) return false;
    return true;
  };
  return a.n_outputs() == b.n_outputs() && a.s_star() == b.s_star() &&
         std::bit_cast<std::uint64_t>(a.epsilon()) == std::bit_cast<std::uint64_t>(b.epsilon()) &&
         std::bit_cast<std::uint64_t>(a.beta()) == std::bit_cast<std::uint64_t>(b.beta()) &&
         std::bit_cast<std::uint64_t>(a.vartheta()) == std::bit_cast<std::uint64_t>(b.vartheta()) && same(a.c(), b.c()) &&
         same(a.h(), b.h()) && same(Matrix(a.b()), Matrix(b.b()));
}

// ---------------------------------------------------------------------------
// CSV

inline std::string trace_header(Eigen::Index nz, Eigen::Index nv, Eigen::Index p, Eigen::Index ny) {
  std::string h = "seed,k,t";
  for (Eigen::Index i = 0; i < nz; ++i) h += ",z" + std::to_string(i);
  for (Eigen::Index i = 0; i < nv; ++i) h += ",r" + std::to_string(i);
  for (Eigen::Index i = 0; i < nv; ++i) h += ",v" + std::to_string(i);
  for (Eigen::Index i = 0; i < p; ++i) h += ",u" + std::to_string(i);
  for (Eigen::Index i = 0; i < ny; ++i) h += ",y" + std::to_string(i);
  h += ",accepted,rejected,budget_s,flow_steps,stalls";
  return h;
}

inline void write_trace_header(std::ostream& os, const Scenario& sc) {
  os << "# schema_version=" << kSchemaVersion << " scenario=" << sc.name << " rng=" << SplitMix64::kName
     << " mode=" << to_string(sc.mode) << "\n";
  os << trace_header(sc.problem.set.nz(), sc.problem.set.nv(), sc.problem.sys.p(), sc.problem.sys.ny()) << "\n";
}

inline void write_trace_rows(std::ostream& os, const SimTrace& tr) {
  auto put = [&os](const Vector& x) {
    for (Eigen::Index i = 0; i < x.size(); ++i) os << ',' << fmt(x(i));
  };
  for (const auto& r : tr.records) {
    os << tr.seed << ',' << r.k << ',' << fmt(r.t);
    put(r.z);
    put(r.r);
    put(r.v);
    put(r.u);
    put(r.y);
    os << ',' << (r.accepted ? 1 : 0) << ',' << (r.rejected ? 1 : 0) << ',' << fmt(r.budget) << ',' << r.flow_steps
       << ',' << r.stalls << '\n';
  }
}

inline const char* kSummaryHeader =
    "seed,pi,normalized_pi,violations,rejections,flow_steps,stalls,max_output_ratio,switch_time";

struct SummaryRow {
  std::uint64_t seed = 0;
  double pi = 0.0;
  double normalized_pi = std::numeric_limits<double>::quiet_NaN();
  long long violations = 0;
  long long rejections = 0;
  long long flow_steps = 0;
  long long stalls = 0;
  double max_output_ratio = 0.0;
  double switch_time = std::numeric_limits<double>::quiet_NaN();
};

inline SummaryRow summarize(const SimTrace& tr, double baseline_pi) {
  SummaryRow s;
  s.seed = tr.seed;
  s.pi = tr.pi;
  if (baseline_pi > 0.0) s.normalized_pi = tr.pi / baseline_pi;
  s.violations = tr.violations;
  s.rejections = tr.rejections;
  s.flow_steps = tr.flow_steps;
  s.stalls = tr.stalls;
  s.max_output_ratio = tr.max_output_ratio;
  if (tr.switch_time) s.switch_time = *tr.switch_time;
  return s;
}

inline void write_summary(std::ostream& os, const std::string& scenario, const std::vector<SummaryRow>& rows) {
  os << "# schema_version=" << kSchemaVersion << " scenario=" << scenario << "\n" << kSummaryHeader << "\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << fmt(r.pi) << ',' << fmt(r.normalized_pi) << ',' << r.violations << ',' << r.rejections << ','
       << r.flow_steps << ',' << r.stalls << ',' << fmt(r.max_output_ratio) << ',' << fmt(r.switch_time) << '\n';
  }
}

/// Reads the pi column of a summary CSV (comment lines skipped).
inline std::vector<double> read_summary_pi(const std::filesystem::path& file) {
  std::ifstream is(file);
  require(static_cast<bool>(is), ErrorKind::Config, "cannot read baseline summary " + file.string());
  std::string line;
  std::vector<double> out;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      require(line == kSummaryHeader, ErrorKind::Config, "baseline file is not a summary CSV: " + file.string());
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string seed, pi;
    std::getline(ss, seed, ',');
    std::getline(ss, pi, ',');
    out.push_back(parse_double(pi));
  }
  require(!out.empty(), ErrorKind::Config, "baseline summary has no rows");
  return out;
}

struct Distribution {
  std::size_t n = 0;
  double mean = 0.0, min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// Quartiles by linear interpolation between order statistics.
inline Distribution describe(std::vector<double> x) {
  Distribution d;
  d.n = x.size();
  if (x.empty()) return d;
  std::sort(x.begin(), x.end());
  double sum = 0.0;
  for (double v : x) sum += v;
  d.mean = sum / static_cast<double>(x.size());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(x.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
  };
  d.min = x.front();
  d.q1 = q(0.25);
  d.median = q(0.5);
  d.q3 = q(0.75);
  d.max = x.back();
  return d;
}

inline const char* kSweepHeader =
    "param,value,n_seeds,mean_pi,min_pi,q1_pi,median_pi,q3_pi,max_pi,mean_normalized_pi,mean_rejections,violations";

struct SweepRow {
  std::string param;
  std::string value;
  Distribution pi;
  double mean_normalized_pi = std::numeric_limits<double>::quiet_NaN();
  double mean_rejections = 0.0;
  long long violations = 0;
};

inline void write_sweep(std::ostream& os, const std::string& scenario, const std::vector<SweepRow>& rows) {
  os << "# schema_version=" << kSchemaVersion << " scenario=" << scenario << "\n" << kSweepHeader << "\n";
  for (const auto& r : rows) {
    os << r.param << ',' << r.value << ',' << r.pi.n << ',' << fmt(r.pi.mean) << ',' << fmt(r.pi.min) << ','
       << fmt(r.pi.q1) << ',' << fmt(r.pi.median) << ',' << fmt(r.pi.q3) << ',' << fmt(r.pi.max) << ','
       << fmt(r.mean_normalized_pi) << ',' << fmt(r.mean_rejections) << ',' << r.violations << '\n';
  }
}

}  // namespace rotec::io
