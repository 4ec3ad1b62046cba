#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rotec/linalg.hpp"

namespace rotec {

/// Flat `key = value` configuration.
///
///   # comment
///   include = common.cfg          (path relative to the including file)
///   plant.A = [0 1; 0 0]          (rows split by ';', entries by space or ',')
///   plant.B = @b_matrix.txt       (whitespace table, one row per line)
///   governor.Q = diag(1, 2)
///   run.seeds = 1..2000
///
/// A bracketed value may continue over several lines until its ']' closes.
/// Later assignments override earlier ones, including included ones.
class Config {
 public:
  static Config load(const std::filesystem::path& file) {
    Config cfg;
    cfg.read_file(file, 0);
    return cfg;
  }

  static Config parse(const std::string& text, const std::filesystem::path& base_dir = ".") {
    Config cfg;
    std::istringstream in(text);
    cfg.read_stream(in, base_dir, "<string>", 0);
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  void set(const std::string& key, const std::string& value, const std::filesystem::path& base_dir = ".") {
    values_[key] = Entry{value, base_dir};
  }

  std::vector<std::string> keys() const {
    std::vector<std::string> out;
    for (const auto& [k, _] : values_) out.push_back(k);
    return out;
  }

  std::string get_string(const std::string& key) const { return entry(key).value; }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const Matrix m = get_matrix(key);
    require(m.size() == 1, ErrorKind::Config, "key '" + key + "' must be a scalar");
    return m(0, 0);
  }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  long long get_int(const std::string& key) const {
    const double d = get_double(key);
    require(std::floor(d) == d && std::abs(d) < 9e15, ErrorKind::Config, "key '" + key + "' must be an integer");
    return static_cast<long long>(d);
  }
  long long get_int(const std::string& key, long long fallback) const { return has(key) ? get_int(key) : fallback; }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    std::string s = lower(trim(get_string(key)));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    fail(ErrorKind::Config, "key '" + key + "' must be a boolean");
  }

  Matrix get_matrix(const std::string& key) const {
    const Entry& e = entry(key);
    try {
      return parse_matrix(e.value, e.base_dir);
    } catch (const Error& err) {
      fail(ErrorKind::Config, "key '" + key + "': " + err.what());
    }
  }
  Matrix get_matrix(const std::string& key, const Matrix& fallback) const {
    return has(key) ? get_matrix(key) : fallback;
  }

  /// Any matrix value flattened row by row.
  Vector get_vector(const std::string& key) const {
    const Matrix m = get_matrix(key);
    Vector v(m.size());
    Eigen::Index i = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) v(i++) = m(r, c);
    return v;
  }
  Vector get_vector(const std::string& key, const Vector& fallback) const {
    return has(key) ? get_vector(key) : fallback;
  }

  /// Comma-separated items, trimmed.
  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(get_string(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  static double parse_number(const std::string& text) {
    const std::string s = trim(text);
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (!s.empty() && *b == '+') ++b;
    const auto res = std::from_chars(b, e, v);
    if (s.empty() || res.ec != std::errc() || res.ptr != e) fail(ErrorKind::Config, "not a number: '" + s + "'");
    return v;
  }

  /// "A..B" inclusive integer range, or a single integer.
  static std::pair<long long, long long> parse_range(const std::string& text) {
    const std::string s = trim(text);
    const auto dots = s.find("..");
    auto as_int = [&](const std::string& t) {
      const double d = parse_number(t);
      require(std::floor(d) == d && d >= 0, ErrorKind::Config, "range bounds must be non-negative integers: " + s);
      return static_cast<long long>(d);
    };
    if (dots == std::string::npos) {
      const long long v = as_int(s);
      return {v, v};
    }
    const long long a = as_int(s.substr(0, dots));
    const long long b = as_int(s.substr(dots + 2));
    require(a <= b, ErrorKind::Config, "empty range: " + s);
    return {a, b};
  }

  static Matrix parse_matrix(const std::string& text, const std::filesystem::path& base_dir) {
    const std::string s = trim(text);
    require(!s.empty(), ErrorKind::Config, "empty value");
    if (s.front() == '@') return read_table(base_dir / trim(s.substr(1)));
    if (lower(s.substr(0, 5)) == "diag(") {
      require(s.back() == ')', ErrorKind::Config, "unterminated diag(");
      const auto row = split_numbers(s.substr(5, s.size() - 6));
      require(!row.empty(), ErrorKind::Config, "diag() needs entries");
      Matrix m = Matrix::Zero(static_cast<Eigen::Index>(row.size()), static_cast<Eigen::Index>(row.size()));
      for (std::size_t i = 0; i < row.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = row[i];
      return m;
    }
    std::string body = s;
    if (s.front() == '[') {
      require(s.back() == ']', ErrorKind::Config, "unterminated '['");
      body = s.substr(1, s.size() - 2);
    }
    std::vector<std::vector<double>> rows;
    std::stringstream ss(body);
    std::string row;
    while (std::getline(ss, row, ';')) {
      if (trim(row).empty()) continue;
      rows.push_back(split_numbers(row));
    }
    return to_matrix(rows);
  }

 private:
  struct Entry {
    std::string value;
    std::filesystem::path base_dir;
  };

  std::map<std::string, Entry> values_;

  const Entry& entry(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) fail(ErrorKind::Config, "missing key '" + key + "'");
    return it->second;
  }

  void read_file(const std::filesystem::path& file, int depth) {
    require(depth < 16, ErrorKind::Config, "include nesting too deep at " + file.string());
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Config, "cannot open config file " + file.string());
    read_stream(in, file.parent_path(), file.string(), depth);
  }

  void read_stream(std::istream& in, const std::filesystem::path& dir, const std::string& name, int depth) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip_comment(line);
      if (trim(line).empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        fail(ErrorKind::Config, name + ":" + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      while (std::count(value.begin(), value.end(), '[') > std::count(value.begin(), value.end(), ']')) {
        std::string more;
        if (!std::getline(in, more)) fail(ErrorKind::Config, name + ": unterminated '[' for key '" + key + "'");
        ++lineno;
        value += " " + trim(strip_comment(more));
      }
      require(!key.empty(), ErrorKind::Config, name + ":" + std::to_string(lineno) + ": empty key");
      if (key == "include") {
        read_file(dir / value, depth + 1);
      } else {
        values_[key] = Entry{value, dir};
      }
    }
  }

  static std::string strip_comment(const std::string& s) {
    const auto hash = s.find('#');
    return hash == std::string::npos ? s : s.substr(0, hash);
  }

  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  static std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
  }

  static std::vector<double> split_numbers(const std::string& row) {
    std::string r = row;
    std::replace(r.begin(), r.end(), ',', ' ');
    std::stringstream ss(r);
    std::vector<double> out;
    std::string tok;
    while (ss >> tok) out.push_back(parse_number(tok));
    return out;
  }

  static Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), ErrorKind::Config, "matrix has no rows");
    const std::size_t cols = rows.front().size();
    for (const auto& r : rows) require(r.size() == cols && cols > 0, ErrorKind::Config, "ragged matrix rows");
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
  }

  static Matrix read_table(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) fail(ErrorKind::Config, "cannot open matrix file " + file.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      line = strip_comment(line);
      if (trim(line).empty()) continue;
      rows.push_back(split_numbers(line));
    }
    return to_matrix(rows);
  }
};

}  // namespace rotec
