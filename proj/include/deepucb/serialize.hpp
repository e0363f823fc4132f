#pragma once

// Portable text snapshots: whitespace-separated tokens, doubles printed with
// 17 significant digits so values round-trip exactly.

#include <Eigen/Dense>

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace deepucb {

class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& token) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &used);
  } catch (const std::exception&) {
    throw SnapshotError("bad number '" + token + "'");
  }
  if (used != token.size()) throw SnapshotError("bad number '" + token + "'");
  return v;
}

inline void expect_token(std::istream& is, const std::string& expected) {
  std::string token;
  if (!(is >> token) || token != expected)
    throw SnapshotError("expected '" + expected + "' but found '" + token + "'");
}

inline double read_double(std::istream& is) {
  std::string token;
  if (!(is >> token)) throw SnapshotError("truncated snapshot");
  return parse_double(token);
}

template <typename Derived>
void write_matrix(std::ostream& os, const std::string& name, const Eigen::MatrixBase<Derived>& m) {
  os << "matrix " << name << " " << m.rows() << " " << m.cols() << "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << format_double(m(i, j));
    os << "\n";
  }
}

inline Eigen::MatrixXd read_matrix(std::istream& is, const std::string& name) {
  expect_token(is, "matrix");
  expect_token(is, name);
  Eigen::Index rows = 0, cols = 0;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) throw SnapshotError("bad shape for matrix " + name);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_double(is);
  return m;
}

inline Eigen::VectorXd read_vector(std::istream& is, const std::string& name) {
  Eigen::MatrixXd m = read_matrix(is, name);
  if (m.cols() != 1) throw SnapshotError("matrix " + name + " is not a column vector");
  return m.col(0);
}

template <typename T>
void write_list(std::ostream& os, const std::string& name, const std::vector<T>& values) {
  os << "list " << name << " " << values.size() << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if constexpr (std::is_floating_point_v<T>)
      os << (i ? " " : "") << format_double(values[i]);
    else
      os << (i ? " " : "") << values[i];
  }
  os << "\n";
}

template <typename T>
std::vector<T> read_list(std::istream& is, const std::string& name) {
  expect_token(is, "list");
  expect_token(is, name);
  std::size_t n = 0;
  if (!(is >> n)) throw SnapshotError("bad length for list " + name);
  std::vector<T> out(n);
  for (auto& v : out) {
    if constexpr (std::is_floating_point_v<T>) {
      v = read_double(is);
    } else if (!(is >> v)) {
      throw SnapshotError("truncated list " + name);
    }
  }
  return out;
}

inline void write_section(std::ostream& os, const std::string& name) { os << "section " << name << "\n"; }
inline void read_section(std::istream& is, const std::string& name) {
  expect_token(is, "section");
  expect_token(is, name);
}

template <typename RngT>
void write_rng(std::ostream& os, const std::string& name, const RngT& rng) {
  std::ostringstream tmp;
  tmp << rng;
  os << "rng " << name << " " << tmp.str() << "\n";
}

template <typename RngT>
void read_rng(std::istream& is, const std::string& name, RngT& rng) {
  expect_token(is, "rng");
  expect_token(is, name);
  if (!(is >> rng)) throw SnapshotError("bad rng state for " + name);
}

}  // namespace deepucb
