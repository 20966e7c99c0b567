/* Copyright 2026 The ntk Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef NTK_MAT_HPP
#define NTK_MAT_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "ntk/alloc_stats.hpp"
#include "ntk/errors.hpp"
#include "ntk/parallel.hpp"

namespace ntk {

/// Dense real matrix, column-major. A "column per datapoint" layout makes the
/// Gram products below tall-times-skinny with unit-stride columns.
///
/// Shapes are at least 1x1 by construction. Storage is tracked by the global
/// allocation counters (see alloc_stats.hpp).
template <class T>
class MatT {
 public:
  MatT(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) {
      throw ShapeMismatch("matrix dimensions must be >= 1, got " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    }
    if (cols > std::numeric_limits<std::size_t>::max() / rows) {
      throw ShapeOverflow("matrix shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + " overflows");
    }
    data_.assign(rows * cols, T{0});
  }

  static MatT ones(std::size_t rows, std::size_t cols) {
    MatT m(rows, cols);
    std::fill(m.data_.begin(), m.data_.end(), T{1});
    return m;
  }

  static MatT identity(std::size_t n) {
    MatT m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
    return m;
  }

  /// Builds from row-major nested lists; handy for small literals in tests.
  static MatT from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    MatT m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeMismatch("ragged row in matrix literal");
      std::size_t j = 0;
      for (const T v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }
  const T& operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }

  T* col(std::size_t j) { return data_.data() + j * rows_; }
  const T* col(std::size_t j) const { return data_.data() + j * rows_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_shape(const MatT& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<T, TrackingAllocator<T>> data_;
};

using Mat = MatT<double>;
using MatF = MatT<float>;

namespace detail {

// Panel sizes for the blocked Gram kernels. KC keeps a panel of NB columns
// inside L2 while the inner dimension streams in chunks.
inline constexpr std::size_t kPanelCols = 48;
inline constexpr std::size_t kChunkRows = 2048;

// s[0..3] accumulate dot(a.col(i..i+3)[k0:k1), cj[k0:k1)). Eight independent
// accumulation chains so the FMA ports stay busy without reassociation.
template <class T>
inline void dot4(const T* c0, const T* c1, const T* c2, const T* c3, const T* cj,
                 std::size_t k0, std::size_t k1, T out[4]) {
  T s0a{0}, s0b{0}, s1a{0}, s1b{0}, s2a{0}, s2b{0}, s3a{0}, s3b{0};
  std::size_t k = k0;
  for (; k + 2 <= k1; k += 2) {
    const T ja = cj[k], jb = cj[k + 1];
    s0a += c0[k] * ja;
    s0b += c0[k + 1] * jb;
    s1a += c1[k] * ja;
    s1b += c1[k + 1] * jb;
    s2a += c2[k] * ja;
    s2b += c2[k + 1] * jb;
    s3a += c3[k] * ja;
    s3b += c3[k + 1] * jb;
  }
  if (k < k1) {
    const T ja = cj[k];
    s0a += c0[k] * ja;
    s1a += c1[k] * ja;
    s2a += c2[k] * ja;
    s3a += c3[k] * ja;
  }
  out[0] = s0a + s0b;
  out[1] = s1a + s1b;
  out[2] = s2a + s2b;
  out[3] = s3a + s3b;
}

template <class T>
inline T dot1(const T* ci, const T* cj, std::size_t k0, std::size_t k1) {
  T sa{0}, sb{0};
  std::size_t k = k0;
  for (; k + 2 <= k1; k += 2) {
    sa += ci[k] * cj[k];
    sb += ci[k + 1] * cj[k + 1];
  }
  if (k < k1) sa += ci[k] * cj[k];
  return sa + sb;
}

}  // namespace detail

/// Gram product A^T A for A of shape p x n; returns n x n.
///
/// The upper triangle is computed once and mirrored, so the result is exactly
/// symmetric as stored. Accumulation order over the inner dimension is fixed
/// (ascending chunks), which keeps results identical for any thread count.
template <class T>
MatT<T> gram(const MatT<T>& a) {
  const std::size_t p = a.rows();
  const std::size_t n = a.cols();
  MatT<T> k(n, n);
  for (std::size_t kk = 0; kk < p; kk += detail::kChunkRows) {
    const std::size_t kend = std::min(p, kk + detail::kChunkRows);
    const std::size_t npanels = (n + detail::kPanelCols - 1) / detail::kPanelCols;
    parallel_for(npanels, [&](std::size_t pb, std::size_t pe) {
      for (std::size_t panel = pb; panel < pe; ++panel) {
        const std::size_t jb = panel * detail::kPanelCols;
        const std::size_t jend = std::min(n, jb + detail::kPanelCols);
        for (std::size_t j = jb; j < jend; ++j) {
          const T* cj = a.col(j);
          std::size_t i = 0;
          for (; i + 4 <= j + 1; i += 4) {
            T out[4];
            detail::dot4(a.col(i), a.col(i + 1), a.col(i + 2), a.col(i + 3), cj,
                         kk, kend, out);
            k(i, j) += out[0];
            k(i + 1, j) += out[1];
            k(i + 2, j) += out[2];
            k(i + 3, j) += out[3];
          }
          for (; i <= j; ++i) k(i, j) += detail::dot1(a.col(i), cj, kk, kend);
        }
      }
    });
  }
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < j; ++i) k(j, i) = k(i, j);
  return k;
}

/// C = A^T B for A of shape p x m and B of shape p x n; returns m x n.
template <class T>
MatT<T> multiply_at_b(const MatT<T>& a, const MatT<T>& b) {
  if (a.rows() != b.rows()) {
    throw ShapeMismatch("multiply_at_b: inner dimensions " + std::to_string(a.rows()) +
                        " vs " + std::to_string(b.rows()));
  }
  const std::size_t p = a.rows();
  const std::size_t m = a.cols();
  const std::size_t n = b.cols();
  MatT<T> c(m, n);
  for (std::size_t kk = 0; kk < p; kk += detail::kChunkRows) {
    const std::size_t kend = std::min(p, kk + detail::kChunkRows);
    parallel_for(n, [&](std::size_t jbeg, std::size_t jendp) {
      for (std::size_t j = jbeg; j < jendp; ++j) {
        const T* cj = b.col(j);
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
          T out[4];
          detail::dot4(a.col(i), a.col(i + 1), a.col(i + 2), a.col(i + 3), cj, kk,
                       kend, out);
          c(i, j) += out[0];
          c(i + 1, j) += out[1];
          c(i + 2, j) += out[2];
          c(i + 3, j) += out[3];
        }
        for (; i < m; ++i) c(i, j) += detail::dot1(a.col(i), cj, kk, kend);
      }
    });
  }
  return c;
}

/// C = A B for A of shape m x p and B of shape p x n; returns m x n.
template <class T>
MatT<T> multiply_a_b(const MatT<T>& a, const MatT<T>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeMismatch("multiply_a_b: inner dimensions " + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.rows()));
  }
  const std::size_t m = a.rows();
  const std::size_t p = a.cols();
  const std::size_t n = b.cols();
  MatT<T> c(m, n);
  parallel_for(n, [&](std::size_t jbeg, std::size_t jend) {
    for (std::size_t j = jbeg; j < jend; ++j) {
      T* cj = c.col(j);
      const T* bj = b.col(j);
      for (std::size_t k = 0; k < p; ++k) {
        const T bkj = bj[k];
        const T* ak = a.col(k);
        for (std::size_t i = 0; i < m; ++i) cj[i] += bkj * ak[i];
      }
    }
  });
  return c;
}

/// C = A B^T for A of shape m x p and B of shape n x p; returns m x n.
template <class T>
MatT<T> multiply_a_bt(const MatT<T>& a, const MatT<T>& b) {
  if (a.cols() != b.cols()) {
    throw ShapeMismatch("multiply_a_bt: inner dimensions " + std::to_string(a.cols()) +
                        " vs " + std::to_string(b.cols()));
  }
  const std::size_t m = a.rows();
  const std::size_t p = a.cols();
  const std::size_t n = b.rows();
  MatT<T> c(m, n);
  // Chunk k so the streamed panel of A is reused across all output columns.
  constexpr std::size_t kc = 64;
  for (std::size_t kk = 0; kk < p; kk += kc) {
    const std::size_t kend = std::min(p, kk + kc);
    parallel_for(n, [&](std::size_t jbeg, std::size_t jend) {
      for (std::size_t j = jbeg; j < jend; ++j) {
        T* cj = c.col(j);
        for (std::size_t k = kk; k < kend; ++k) {
          const T bjk = b(j, k);
          const T* ak = a.col(k);
          for (std::size_t i = 0; i < m; ++i) cj[i] += bjk * ak[i];
        }
      }
    });
  }
  return c;
}

/// Elementwise product; shapes must match.
template <class T>
MatT<T> hadamard(const MatT<T>& a, const MatT<T>& b) {
  if (!a.same_shape(b)) {
    throw ShapeMismatch("hadamard: " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                        "x" + std::to_string(b.cols()));
  }
  MatT<T> c(a.rows(), a.cols());
  const T* pa = a.data();
  const T* pb = b.data();
  T* pc = c.data();
  for (std::size_t i = 0; i < a.size(); ++i) pc[i] = pa[i] * pb[i];
  return c;
}

template <class T>
MatT<T> transpose(const MatT<T>& a) {
  MatT<T> t(a.cols(), a.rows());
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
  return t;
}

template <class T>
void add_inplace(MatT<T>& a, const MatT<T>& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("add_inplace: shape mismatch");
  T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] += pb[i];
}

template <class T>
void scale_inplace(MatT<T>& a, T s) {
  T* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) pa[i] *= s;
}

template <class T>
MatT<T> slice(const MatT<T>& a, std::size_t row0, std::size_t nrows, std::size_t col0,
              std::size_t ncols) {
  if (row0 + nrows > a.rows() || col0 + ncols > a.cols()) {
    throw IndexOutOfRange("slice exceeds matrix bounds");
  }
  MatT<T> s(nrows, ncols);
  for (std::size_t j = 0; j < ncols; ++j)
    for (std::size_t i = 0; i < nrows; ++i) s(i, j) = a(row0 + i, col0 + j);
  return s;
}

template <class T>
T frobenius_norm(const MatT<T>& a) {
  T acc{0};
  const T* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += p[i] * p[i];
  return std::sqrt(acc);
}

template <class T>
T max_abs(const MatT<T>& a) {
  T m{0};
  const T* p = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(p[i]));
  return m;
}

template <class T>
T max_abs_diff(const MatT<T>& a, const MatT<T>& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("max_abs_diff: shape mismatch");
  T m{0};
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
  return m;
}

/// ||a - b||_F / ||b||_F, with a zero-norm reference falling back to the
/// absolute norm of the difference.
template <class T>
T rel_frobenius_diff(const MatT<T>& a, const MatT<T>& b) {
  if (!a.same_shape(b)) throw ShapeMismatch("rel_frobenius_diff: shape mismatch");
  T num{0}, den{0};
  const T* pa = a.data();
  const T* pb = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T d = pa[i] - pb[i];
    num += d * d;
    den += pb[i] * pb[i];
  }
  if (den == T{0}) return std::sqrt(num);
  return std::sqrt(num / den);
}

template <class T>
T max_asymmetry(const MatT<T>& a) {
  T m{0};
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < j; ++i) m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

template <class T>
struct SymEig {
  std::vector<T> values;  ///< descending
  MatT<T> vectors;        ///< column k pairs with values[k]
};

namespace detail {

// One cyclic Jacobi pass over all (p, q) pairs; returns the rotations applied.
template <class T>
std::size_t jacobi_sweep(MatT<T>& a, MatT<T>* v, T skip_below) {
  const std::size_t n = a.rows();
  std::size_t rotations = 0;
  for (std::size_t p = 0; p + 1 < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      const T apq = a(p, q);
      if (std::abs(apq) <= skip_below) continue;
      ++rotations;
      const T app = a(p, p);
      const T aqq = a(q, q);
      const T tau = (aqq - app) / (2 * apq);
      // Smaller-angle root, standard stable form.
      const T t = (tau >= T{0}) ? T{1} / (tau + std::sqrt(T{1} + tau * tau))
                                : T{-1} / (-tau + std::sqrt(T{1} + tau * tau));
      const T c = T{1} / std::sqrt(T{1} + t * t);
      const T s = t * c;
      a(p, p) = app - t * apq;
      a(q, q) = aqq + t * apq;
      a(p, q) = T{0};
      a(q, p) = T{0};
      for (std::size_t r = 0; r < n; ++r) {
        if (r == p || r == q) continue;
        const T arp = a(r, p);
        const T arq = a(r, q);
        a(r, p) = c * arp - s * arq;
        a(p, r) = a(r, p);
        a(r, q) = s * arp + c * arq;
        a(q, r) = a(r, q);
      }
      if (v) {
        for (std::size_t r = 0; r < n; ++r) {
          const T vrp = (*v)(r, p);
          const T vrq = (*v)(r, q);
          (*v)(r, p) = c * vrp - s * vrq;
          (*v)(r, q) = s * vrp + c * vrq;
        }
      }
    }
  }
  return rotations;
}

template <class T>
T offdiag_norm(const MatT<T>& a) {
  T acc{0};
  for (std::size_t j = 0; j < a.cols(); ++j)
    for (std::size_t i = 0; i < a.rows(); ++i)
      if (i != j) acc += a(i, j) * a(i, j);
  return std::sqrt(acc);
}

}  // namespace detail

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Converges when the
/// off-diagonal Frobenius norm drops below 1e-12 * ||A||_F.
///
/// The input must be square and symmetric within `tol` (max |a - a^T| entry).
template <class T>
SymEig<T> sym_eig(const MatT<T>& a, T tol, bool want_vectors) {
  if (a.rows() != a.cols()) {
    throw ShapeMismatch("sym_eig: matrix is " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));
  }
  const T asym = max_asymmetry(a);
  if (asym > tol) {
    throw NotSymmetric("sym_eig: max |a - a^T| = " + std::to_string(asym) +
                       " exceeds tol");
  }
  const std::size_t n = a.rows();
  MatT<T> work(n, n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) work(i, j) = (a(i, j) + a(j, i)) / T{2};
  MatT<T> vecs = MatT<T>::identity(n);
  MatT<T>* vptr = want_vectors ? &vecs : nullptr;

  const T fro = frobenius_norm(work);
  const T stop = T{1e-12} * fro;
  if (fro > T{0}) {
    for (int sweep = 0; sweep < 100; ++sweep) {
      if (detail::offdiag_norm(work) <= stop) break;
      if (detail::jacobi_sweep(work, vptr, stop / (n * n + 1)) == 0) break;
    }
  }

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return work(x, x) > work(y, y); });

  SymEig<T> out{std::vector<T>(n), MatT<T>(n, want_vectors ? n : 1)};
  for (std::size_t k = 0; k < n; ++k) out.values[k] = work(order[k], order[k]);
  if (want_vectors) {
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = vecs(r, order[k]);
  }
  return out;
}

/// Eigenvalues of a symmetric matrix, descending.
template <class T>
std::vector<T> sym_eigvals(const MatT<T>& a, T tol) {
  return sym_eig(a, tol, /*want_vectors=*/false).values;
}

}  // namespace ntk

#endif  // NTK_MAT_HPP
