#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "ocitune/error.hpp"

namespace ocitune {

/// Dense row-major matrix of ring elements (polynomials, rational functions,
/// polynomials carrying gradients). Only the ring operations +, -, * of T are
/// used by the algorithms below.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, const T& fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

template <class T>
T minor_det(const Grid<T>& m, std::vector<std::size_t>& rows, std::vector<std::size_t>& cols,
            const T& one) {
  const std::size_t n = rows.size();
  if (n == 0) return one;
  if (n == 1) return m(rows[0], cols[0]);
  if (n == 2)
    return m(rows[0], cols[0]) * m(rows[1], cols[1]) - m(rows[0], cols[1]) * m(rows[1], cols[0]);
  // Laplace expansion along the first remaining row.
  const std::size_t r0 = rows.front();
  std::vector<std::size_t> sub_rows(rows.begin() + 1, rows.end());
  T acc = one - one;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<std::size_t> sub_cols;
    sub_cols.reserve(n - 1);
    for (std::size_t c = 0; c < n; ++c)
      if (c != k) sub_cols.push_back(cols[c]);
    T term = m(r0, cols[k]) * minor_det(m, sub_rows, sub_cols, one);
    if (k % 2 == 0) acc = acc + term;
    else acc = acc - term;
  }
  return acc;
}

}  // namespace detail

/// Determinant by cofactor expansion; `one` supplies the ring identity.
template <class T>
T determinant(const Grid<T>& m, const T& one) {
  if (m.rows() != m.cols()) fail(ErrorCode::DimensionMismatch, "determinant of a non-square matrix");
  std::vector<std::size_t> rows(m.rows()), cols(m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = cols[i] = i;
  return detail::minor_det(m, rows, cols, one);
}

/// Classical adjugate: adj(M)(j, i) = (-1)^{i+j} det(M without row i, col j).
template <class T>
Grid<T> adjugate(const Grid<T>& m, const T& one) {
  const std::size_t n = m.rows();
  if (n != m.cols()) fail(ErrorCode::DimensionMismatch, "adjugate of a non-square matrix");
  Grid<T> out(n, n, one - one);
  if (n == 1) {
    out(0, 0) = one;
    return out;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::size_t> rows, cols;
      for (std::size_t r = 0; r < n; ++r)
        if (r != i) rows.push_back(r);
      for (std::size_t c = 0; c < n; ++c)
        if (c != j) cols.push_back(c);
      T cof = detail::minor_det(m, rows, cols, one);
      out(j, i) = ((i + j) % 2 == 0) ? cof : (one - one) - cof;
    }
  }
  return out;
}

template <class T>
Grid<T> matmul(const Grid<T>& a, const Grid<T>& b, const T& zero) {
  if (a.cols() != b.rows()) fail(ErrorCode::DimensionMismatch, "matrix product shape mismatch");
  Grid<T> out(a.rows(), b.cols(), zero);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T acc = zero;
      for (std::size_t k = 0; k < a.cols(); ++k) acc = acc + a(i, k) * b(k, j);
      out(i, j) = std::move(acc);
    }
  return out;
}

}  // namespace ocitune
