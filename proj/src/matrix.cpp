// Copyright 2026 The thermokfac Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "thermokfac/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "thermokfac/errors.hpp"

namespace thermokfac {

namespace {

bool finite_range(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream oss;
    oss << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
        << b.rows() << "x" << b.cols();
    throw InvalidArgument(oss.str());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// DenseVector

DenseVector::DenseVector(std::size_t dim, double fill) : data_(dim, fill) {}

DenseVector::DenseVector(std::vector<double> data) : data_(std::move(data)) {
  if (!finite_range(data_)) {
    throw InvalidArgument("DenseVector: non-finite entry");
  }
}

DenseVector::DenseVector(std::initializer_list<double> values)
    : DenseVector(std::vector<double>(values)) {}

double DenseVector::norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

bool DenseVector::all_finite() const { return finite_range(data_); }

// ---------------------------------------------------------------------------
// DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidArgument("DenseMatrix: data length " +
                          std::to_string(data_.size()) + " != " +
                          std::to_string(rows_) + "x" + std::to_string(cols_));
  }
  if (!finite_range(data_)) {
    throw InvalidArgument("DenseMatrix: non-finite entry");
  }
}

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() == 0 ? 0 : rows.begin()->size()) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InvalidArgument("DenseMatrix: ragged rows");
    data_.insert(data_.end(), r.begin(), r.end());
  }
  if (!finite_range(data_)) {
    throw InvalidArgument("DenseMatrix: non-finite entry");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> diag) {
  DenseMatrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()));
}

DenseVector DenseMatrix::column(std::size_t c) const {
  DenseVector v(rows_);
  for (std::size_t r = 0; r < rows_; ++r) v[r] = (*this)(r, c);
  return v;
}

void DenseMatrix::set_column(std::size_t c, const DenseVector& v) {
  if (v.dim() != rows_) throw InvalidArgument("set_column: length mismatch");
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

double DenseMatrix::frobenius_norm() const {
  double acc = 0.0;
  for (double v : data_) acc += v * v;
  return std::sqrt(acc);
}

double DenseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

bool DenseMatrix::all_finite() const { return finite_range(data_); }

double DenseMatrix::asymmetry() const {
  if (!is_square()) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = i + 1; j < cols_; ++j) {
      worst = std::max(worst, std::abs((*this)(i, j) - (*this)(j, i)));
    }
  }
  return worst;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

DenseMatrix& DenseMatrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

// ---------------------------------------------------------------------------
// Products and helpers

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul: inner dimensions " +
                          std::to_string(a.cols()) + " and " +
                          std::to_string(b.rows()));
  }
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aik * brow[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw InvalidArgument("matmul_tn: row counts " + std::to_string(a.rows()) +
                          " and " + std::to_string(b.rows()));
  }
  DenseMatrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto arow = a.row(k);
    auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      if (aki == 0.0) continue;
      auto out = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) out[j] += aki * brow[j];
    }
  }
  return c;
}

DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
  if (a.cols() != x.dim()) {
    throw InvalidArgument("matvec: dimension mismatch");
  }
  DenseVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto r = a.row(i);
    double acc = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
  return y;
}

DenseMatrix symmetrize(const DenseMatrix& m) {
  if (!m.is_square()) throw InvalidArgument("symmetrize: matrix not square");
  DenseMatrix s(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    s(i, i) = m(i, i);
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

DenseMatrix add_diagonal(DenseMatrix m, double shift) {
  if (!m.is_square()) throw InvalidArgument("add_diagonal: matrix not square");
  for (std::size_t i = 0; i < m.rows(); ++i) m(i, i) += shift;
  return m;
}

DenseVector vec(const DenseMatrix& m) {
  DenseVector v(m.size());
  std::size_t k = 0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    for (std::size_t r = 0; r < m.rows(); ++r) v[k++] = m(r, c);
  }
  return v;
}

DenseMatrix unvec(const DenseVector& v, std::size_t rows, std::size_t cols) {
  if (v.dim() != rows * cols) {
    throw InvalidArgument("unvec: length " + std::to_string(v.dim()) +
                          " != " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  DenseMatrix m(rows, cols);
  std::size_t k = 0;
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) m(r, c) = v[k++];
  }
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double worst = 0.0;
  auto x = a.span();
  auto y = b.span();
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(x[i] - y[i]));
  }
  return worst;
}

double relative_frobenius_error(const DenseMatrix& estimate,
                                const DenseMatrix& reference) {
  return (estimate - reference).frobenius_norm() / reference.frobenius_norm();
}

double relative_l2_error(const DenseVector& estimate,
                         const DenseVector& reference) {
  if (estimate.dim() != reference.dim()) {
    throw InvalidArgument("relative_l2_error: dimension mismatch");
  }
  double num = 0.0;
  for (std::size_t i = 0; i < estimate.dim(); ++i) {
    const double d = estimate[i] - reference[i];
    num += d * d;
  }
  return std::sqrt(num) / reference.norm();
}

// ---------------------------------------------------------------------------
// Text interchange

DenseMatrix read_matrix(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) {
    throw InvalidArgument("read_matrix: missing header line");
  }
  std::istringstream hs(header);
  long long rows = -1;
  long long cols = -1;
  if (!(hs >> rows >> cols) || rows < 0 || cols < 0) {
    throw InvalidArgument("read_matrix: header must be \"rows cols\", got \"" +
                          header + "\"");
  }
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(rows * cols));
  std::string token;
  while (in >> token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != token.size()) {
      throw InvalidArgument("read_matrix: bad value \"" + token + "\"");
    }
    data.push_back(v);
  }
  if (data.size() != static_cast<std::size_t>(rows * cols)) {
    throw InvalidArgument("read_matrix: expected " +
                          std::to_string(rows * cols) + " values, found " +
                          std::to_string(data.size()));
  }
  return DenseMatrix(static_cast<std::size_t>(rows),
                     static_cast<std::size_t>(cols), std::move(data));
}

void write_matrix(std::ostream& out, const DenseMatrix& m) {
  out << m.rows() << ' ' << m.cols() << '\n';
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c != 0) out << ' ';
      out << m(r, c);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

DenseMatrix load_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path);
  return read_matrix(in);
}

void save_matrix(const std::string& path, const DenseMatrix& m) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write matrix file " + path);
  write_matrix(out, m);
}

}  // namespace thermokfac
