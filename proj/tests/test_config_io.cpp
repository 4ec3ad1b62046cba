#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace rotec;

namespace {

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("rotec_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream os(file);
  os << text;
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidInput;
}

}  // namespace

TEST(Config, MatrixForms) {
  const auto cfg = Config::parse(
      "a = [1 2; 3 4]\n"
      "b = [1, 2, 3]\n"
      "c = diag(1, 2)\n"
      "d = 1 2 3\n"
      "e = -2.5e-3\n"
      "f = [1 2\n"
      "     3 4;  # trailing comment\n"
      "     5 6 7 8]\n");
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  EXPECT_EQ(cfg.get_matrix("a"), a);
  EXPECT_EQ(cfg.get_vector("b"), Vector::LinSpaced(3, 1, 3));
  EXPECT_EQ(cfg.get_matrix("c"), Vector::LinSpaced(2, 1, 2).asDiagonal().toDenseMatrix());
  EXPECT_EQ(cfg.get_vector("d").size(), 3);
  EXPECT_EQ(cfg.get_double("e"), -2.5e-3);
  const Matrix f = cfg.get_matrix("f");
  EXPECT_EQ(f.rows(), 2);
  EXPECT_EQ(f.cols(), 4);
  EXPECT_EQ(f(1, 3), 8.0);
}

TEST(Config, ScalarsBooleansAndLists) {
  const auto cfg = Config::parse("n = 12\nx = 1.5\nflag = Yes\noff = 0\nl = a, b ,, c\n");
  EXPECT_EQ(cfg.get_int("n"), 12);
  EXPECT_EQ(kind_of([&] { (void)cfg.get_int("x"); }), ErrorKind::Config);
  EXPECT_TRUE(cfg.get_bool("flag", false));
  EXPECT_FALSE(cfg.get_bool("off", true));
  EXPECT_TRUE(cfg.get_bool("missing", true));
  EXPECT_EQ(cfg.get_list("l"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(cfg.get_double("missing", 3.0), 3.0);
  EXPECT_EQ(kind_of([&] { (void)cfg.get_double("missing"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([&] { (void)cfg.get_bool("l", false); }), ErrorKind::Config);
}

TEST(Config, Ranges) {
  EXPECT_EQ(Config::parse_range("1..2000"), (std::pair<long long, long long>{1, 2000}));
  EXPECT_EQ(Config::parse_range(" 7 "), (std::pair<long long, long long>{7, 7}));
  EXPECT_THROW(Config::parse_range("5..3"), Error);
  EXPECT_THROW(Config::parse_range("1.5..3"), Error);
  EXPECT_THROW(Config::parse_range("-1..3"), Error);
}

TEST(Config, Numbers) {
  EXPECT_EQ(Config::parse_number("+3"), 3.0);
  EXPECT_EQ(Config::parse_number(" 1e5 "), 1e5);
  EXPECT_THROW(Config::parse_number("1e5x"), Error);
  EXPECT_THROW(Config::parse_number(""), Error);
}

TEST(Config, MalformedInputIsAConfigError) {
  EXPECT_EQ(kind_of([] { (void)Config::parse("novalue\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)Config::parse("a = [1 2\n"); }), ErrorKind::Config);
  EXPECT_EQ(kind_of([] { (void)Config::parse("= 3\n"); }), ErrorKind::Config);
  const auto cfg = Config::parse("a = [1 2; 3]\nb = [1 x]\nc = diag()\nd = @missing.txt\n");
  for (const char* k : {"a", "b", "c", "d"}) EXPECT_EQ(kind_of([&] { (void)cfg.get_matrix(k); }), ErrorKind::Config) << k;
  EXPECT_EQ(kind_of([] { (void)Config::load("/nonexistent/file.cfg"); }), ErrorKind::Config);
}

TEST(Config, IncludeAndFileMatrices) {
  const auto dir = temp_dir("include");
  std::filesystem::create_directories(dir / "sub");
  write_file(dir / "sub" / "base.cfg", "x = 1\ny = 2\nm = @table.txt\n");
  write_file(dir / "sub" / "table.txt", "# header\n1 2\n3 4\n");
  write_file(dir / "top.cfg", "include = sub/base.cfg\ny = 5\n");
  const auto cfg = Config::load(dir / "top.cfg");
  EXPECT_EQ(cfg.get_double("x"), 1.0);
  EXPECT_EQ(cfg.get_double("y"), 5.0);
  EXPECT_EQ(cfg.get_matrix("m")(1, 0), 3.0);
  write_file(dir / "loop.cfg", "include = loop.cfg\n");
  EXPECT_EQ(kind_of([&] { (void)Config::load(dir / "loop.cfg"); }), ErrorKind::Config);
  std::filesystem::remove_all(dir);
}

TEST(Config, EveryShippedScenarioBuilds) {
  int n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(ROTEC_SCENARIO_DIR)) {
    if (entry.path().extension() != ".cfg" || entry.path().stem() == "vehicle_plant") continue;
    EXPECT_NO_THROW((void)load_scenario(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 9);
}

TEST(SetCache, RoundTripIsBitExact) {
  const auto b = load_scenario(rotec::testing::scenario_path("vehicle_base"));
  for (const AdmissibleSet* set : {&b.nominal, &b.scenario.problem.set}) {
    std::stringstream ss;
    io::write_set(ss, *set);
    const auto back = io::read_set(ss);
    EXPECT_TRUE(io::bit_equal(*set, back));
  }
  const auto dir = temp_dir("set");
  io::save_set(dir / "set.txt", b.nominal);
  EXPECT_TRUE(io::bit_equal(io::load_set(dir / "set.txt"), b.nominal));
  EXPECT_FALSE(io::bit_equal(b.nominal, b.scenario.problem.set));
  std::filesystem::remove_all(dir);
}

TEST(SetCache, DamagedFilesAreRejected) {
  const auto b = load_scenario(rotec::testing::scenario_path("deadbeat"));
  std::stringstream ss;
  io::write_set(ss, b.nominal);
  const std::string text = ss.str();
  {
    std::stringstream cut(text.substr(0, text.size() / 2));
    EXPECT_EQ(kind_of([&] { (void)io::read_set(cut); }), ErrorKind::Config);
  }
  {
    std::string t = text;
    t.replace(t.find("s_star"), 6, "sstar_");
    std::stringstream bad(t);
    EXPECT_EQ(kind_of([&] { (void)io::read_set(bad); }), ErrorKind::Config);
  }
  {
    std::string t = text;
    t.pop_back();
    t = t.substr(0, t.rfind(' '));
    t += "\n";
    std::stringstream shortrow(t);
    EXPECT_EQ(kind_of([&] { (void)io::read_set(shortrow); }), ErrorKind::Config);
  }
}

TEST(Io, FormatRoundTrips) {
  SplitMix64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const double x = (rng.uniform() - 0.5) * std::pow(10.0, rng.uniform() * 40 - 20);
    EXPECT_EQ(io::parse_double(io::fmt(x)), x);
  }
  EXPECT_TRUE(std::isnan(io::parse_double(io::fmt(std::nan("")))));
  EXPECT_EQ(io::parse_double(io::fmt(-INFINITY)), -INFINITY);
}

TEST(Io, Headers) {
  EXPECT_EQ(io::trace_header(2, 1, 1, 2), "seed,k,t,z0,z1,r0,v0,u0,y0,y1,accepted,rejected,budget_s,flow_steps,stalls");
  EXPECT_EQ(std::string(io::kSummaryHeader),
            "seed,pi,normalized_pi,violations,rejections,flow_steps,stalls,max_output_ratio,switch_time");
  EXPECT_EQ(std::string(io::kSweepHeader).substr(0, 18), "param,value,n_seed");
}

TEST(Io, SummaryRoundTrip) {
  const auto dir = temp_dir("summary");
  std::vector<io::SummaryRow> rows(3);
  for (int i = 0; i < 3; ++i) {
    rows[i].seed = i + 1;
    rows[i].pi = 0.1 * (i + 1);
  }
  {
    std::ofstream os(dir / "s.csv");
    io::write_summary(os, "x", rows);
  }
  const auto pi = io::read_summary_pi(dir / "s.csv");
  ASSERT_EQ(pi.size(), 3u);
  EXPECT_EQ(pi[2], 0.1 * 3);
  write_file(dir / "bad.csv", "a,b\n1,2\n");
  EXPECT_EQ(kind_of([&] { (void)io::read_summary_pi(dir / "bad.csv"); }), ErrorKind::Config);
  std::filesystem::remove_all(dir);
}

TEST(Io, DescribeQuartiles) {
  const auto d = io::describe({4.0, 1.0, 3.0, 2.0, 5.0});
  EXPECT_EQ(d.n, 5u);
  EXPECT_EQ(d.mean, 3.0);
  EXPECT_EQ(d.min, 1.0);
  EXPECT_EQ(d.q1, 2.0);
  EXPECT_EQ(d.median, 3.0);
  EXPECT_EQ(d.q3, 4.0);
  EXPECT_EQ(d.max, 5.0);
  const auto e = io::describe({1.0, 2.0});
  EXPECT_EQ(e.median, 1.5);
  EXPECT_EQ(e.q1, 1.25);
  EXPECT_EQ(io::describe({}).n, 0u);
}
