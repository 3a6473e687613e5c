#pragma once

// Dense linear-algebra kernels sized for small problems (n <= ~16):
// LU and QR factorizations, singular values by one-sided Jacobi,
// eigenvalues by Hessenberg reduction + Francis double-shift QR,
// and the derived quantities the condition checks need:
// nu(A) (smallest singular value), wedge norms, tangent projection.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fibcheck {

class LinalgError : public std::runtime_error {
 public:
  explicit LinalgError(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major dense matrix of binary64 entries.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 1 || cols < 1) throw LinalgError("matrix dimensions must be >= 1");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw LinalgError("from_rows: empty input");
    Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int i = 0; i < m.rows(); ++i) {
      if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m.cols())
        throw LinalgError("from_rows: ragged rows");
      for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j)]; }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Matrix operator*(const Matrix& b) const {
    if (cols_ != b.rows_) throw LinalgError("matmul: shape mismatch");
    Matrix c(rows_, b.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += a * b(k, j);
      }
    return c;
  }

  std::vector<double> apply(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != cols_) throw LinalgError("apply: shape mismatch");
    std::vector<double> y(static_cast<std::size_t>(rows_), 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (int j = 0; j < cols_; ++j) s += (*this)(i, j) * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// LU with partial pivoting; returns determinant (0 on exact singularity).
inline double determinant(Matrix a) {
  if (a.rows() != a.cols()) throw LinalgError("determinant: square matrix required");
  const int n = a.rows();
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(k, j));
      det = -det;
    }
    det *= a(k, k);
    for (int i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

/// Solves the square system a*x = b by LU with partial pivoting.
inline std::vector<double> solve_square(Matrix a, std::vector<double> b) {
  if (a.rows() != a.cols() || a.rows() != static_cast<int>(b.size()))
    throw LinalgError("solve_square: shape mismatch");
  const int n = a.rows();
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) throw LinalgError("solve_square: singular matrix");
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(k, j));
      std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(k)]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a(i, k) / a(k, k);
      for (int j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      b[static_cast<std::size_t>(i)] -= f * b[static_cast<std::size_t>(k)];
    }
  }
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < n; ++j) s -= a(i, j) * x[static_cast<std::size_t>(j)];
    x[static_cast<std::size_t>(i)] = s / a(i, i);
  }
  return x;
}

inline Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw LinalgError("inverse: square matrix required");
  const int n = a.rows();
  Matrix inv(n, n);
  for (int col = 0; col < n; ++col) {
    std::vector<double> e(static_cast<std::size_t>(n), 0.0);
    e[static_cast<std::size_t>(col)] = 1.0;
    auto x = solve_square(a, std::move(e));
    for (int i = 0; i < n; ++i) inv(i, col) = x[static_cast<std::size_t>(i)];
  }
  return inv;
}

namespace detail {

// One-sided Jacobi on the columns of a tall matrix (rows >= cols):
// rotations orthogonalize column pairs; at convergence the column norms
// are the singular values.
inline std::vector<double> jacobi_singular_values(Matrix b) {
  const int rows = b.rows();
  const int cols = b.cols();
  const int max_sweeps = 60;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool converged = true;
    for (int p = 0; p < cols - 1; ++p) {
      for (int q = p + 1; q < cols; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (int i = 0; i < rows; ++i) {
          app += b(i, p) * b(i, p);
          aqq += b(i, q) * b(i, q);
          apq += b(i, p) * b(i, q);
        }
        if (std::abs(apq) <= 1e-30 + 1e-15 * std::sqrt(app * aqq)) continue;
        converged = false;
        double tau = (aqq - app) / (2.0 * apq);
        double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        double c = 1.0 / std::sqrt(1.0 + t * t);
        double s = c * t;
        for (int i = 0; i < rows; ++i) {
          double vp = b(i, p), vq = b(i, q);
          b(i, p) = c * vp - s * vq;
          b(i, q) = s * vp + c * vq;
        }
      }
    }
    if (converged) break;
  }
  std::vector<double> sv(static_cast<std::size_t>(cols));
  for (int j = 0; j < cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) s += b(i, j) * b(i, j);
    sv[static_cast<std::size_t>(j)] = std::sqrt(s);
  }
  std::sort(sv.begin(), sv.end(), std::greater<double>());
  return sv;
}

}  // namespace detail

/// All singular values of a (any shape), descending.
inline std::vector<double> singular_values(const Matrix& a) {
  if (!a.all_finite()) throw LinalgError("singular_values: non-finite entries");
  // One-sided Jacobi wants a tall operand.
  return a.rows() >= a.cols() ? detail::jacobi_singular_values(a)
                              : detail::jacobi_singular_values(a.transposed());
}

/// nu(A) = inf over unit covectors psi of |A^T psi| = smallest singular value.
/// Defined here for submersion-shaped maps only (m <= n).
inline double nu(const Matrix& a) {
  if (a.rows() > a.cols()) throw LinalgError("nu: requires rows <= cols (submersion shape)");
  auto sv = singular_values(a);
  return sv.back();
}

/// Declared clamp for Gram determinants that go slightly negative in rounding.
inline constexpr double kGramClamp = 1e-12;

/// Norm of v1 ^ ... ^ vk via the Gram determinant: sqrt(det <v_i, v_j>).
inline double wedge_norm(const std::vector<std::vector<double>>& vectors) {
  if (vectors.empty()) return 1.0;
  const std::size_t n = vectors.front().size();
  if (vectors.size() > n) throw LinalgError("wedge_norm: more vectors than ambient dimension");
  const int k = static_cast<int>(vectors.size());
  Matrix gram(k, k);
  for (int i = 0; i < k; ++i) {
    if (vectors[static_cast<std::size_t>(i)].size() != n) throw LinalgError("wedge_norm: mixed vector lengths");
    for (int j = i; j < k; ++j) {
      double g = dot(vectors[static_cast<std::size_t>(i)], vectors[static_cast<std::size_t>(j)]);
      gram(i, j) = g;
      gram(j, i) = g;
    }
  }
  double det = determinant(gram);
  if (det < 0.0) {
    if (det >= -kGramClamp) return 0.0;
    // Larger negative determinants still mean a numerically dependent frame.
    return 0.0;
  }
  return std::sqrt(det);
}

/// Removes from `grad` its orthogonal projection onto the row space of
/// `constraints` (the result is tangent to the joint level set).
inline std::vector<double> tangent_project(std::span<const double> grad, const Matrix& constraints) {
  std::vector<double> out(grad.begin(), grad.end());
  const int k = constraints.rows();
  if (k == 0) return out;
  if (constraints.cols() != static_cast<int>(grad.size()))
    throw LinalgError("tangent_project: dimension mismatch");
  if (nu(constraints) <= 1e-10) throw LinalgError("tangent_project: rank-deficient constraints");
  // Solve (C C^T) lambda = C grad, subtract C^T lambda.
  Matrix cct(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) {
      double s = 0.0;
      for (int c = 0; c < constraints.cols(); ++c) s += constraints(i, c) * constraints(j, c);
      cct(i, j) = s;
    }
  std::vector<double> cg(static_cast<std::size_t>(k), 0.0);
  for (int i = 0; i < k; ++i) {
    double s = 0.0;
    for (int c = 0; c < constraints.cols(); ++c) s += constraints(i, c) * grad[static_cast<std::size_t>(c)];
    cg[static_cast<std::size_t>(i)] = s;
  }
  auto lambda = solve_square(cct, std::move(cg));
  for (int c = 0; c < constraints.cols(); ++c) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += constraints(i, c) * lambda[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(c)] -= s;
  }
  return out;
}

/// Overload for a row list; an empty list means no constraints.
inline std::vector<double> tangent_project(std::span<const double> grad,
                                           const std::vector<std::vector<double>>& constraint_rows) {
  if (constraint_rows.empty()) return std::vector<double>(grad.begin(), grad.end());
  return tangent_project(grad, Matrix::from_rows(constraint_rows));
}

/// Orthonormal basis of the null space of `constraints` (k x n, full rank),
/// as columns of an n x (n-k) matrix. Computed from the full QR of C^T.
inline Matrix null_space_basis(const Matrix& constraints) {
  const int k = constraints.rows();
  const int n = constraints.cols();
  if (k >= n) throw LinalgError("null_space_basis: no null space");
  // Householder QR of C^T (n x k); Q columns k..n-1 span the null space.
  Matrix a = constraints.transposed();
  Matrix q = Matrix::identity(n);
  for (int col = 0; col < k; ++col) {
    double norm = 0.0;
    for (int i = col; i < n; ++i) norm += a(i, col) * a(i, col);
    norm = std::sqrt(norm);
    if (norm == 0.0) throw LinalgError("null_space_basis: rank-deficient constraints");
    double alpha = a(col, col) >= 0.0 ? -norm : norm;
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(col)] = a(col, col) - alpha;
    for (int i = col + 1; i < n; ++i) v[static_cast<std::size_t>(i)] = a(i, col);
    double vnorm2 = 0.0;
    for (int i = col; i < n; ++i) vnorm2 += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    if (vnorm2 == 0.0) continue;
    // Apply H = I - 2 v v^T / (v^T v) to A (left) and accumulate into Q (right).
    for (int j = col; j < k; ++j) {
      double s = 0.0;
      for (int i = col; i < n; ++i) s += v[static_cast<std::size_t>(i)] * a(i, j);
      s = 2.0 * s / vnorm2;
      for (int i = col; i < n; ++i) a(i, j) -= s * v[static_cast<std::size_t>(i)];
    }
    for (int r = 0; r < n; ++r) {
      double s = 0.0;
      for (int i = col; i < n; ++i) s += q(r, i) * v[static_cast<std::size_t>(i)];
      s = 2.0 * s / vnorm2;
      for (int i = col; i < n; ++i) q(r, i) -= s * v[static_cast<std::size_t>(i)];
    }
  }
  Matrix basis(n, n - k);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n - k; ++c) basis(r, c) = q(r, k + c);
  return basis;
}

/// Smallest singular value of Dg restricted to the null space of the
/// constraint Jacobian: sigma_min(Dg * N) with N an orthonormal null basis.
inline double nu_restricted(const Matrix& dg, const Matrix& constraints) {
  if (constraints.rows() == 0) return nu(dg);
  Matrix basis = null_space_basis(constraints);
  Matrix restricted = dg * basis;
  if (restricted.rows() > restricted.cols())
    throw LinalgError("nu_restricted: map rank exceeds tangent dimension");
  return nu(restricted);
}

// ---------------------------------------------------------------------------
// Eigenvalues: Hessenberg reduction + Francis double-shift QR.
// ---------------------------------------------------------------------------

namespace detail {

inline void hessenberg_reduce(Matrix& a) {
  const int n = a.rows();
  for (int k = 0; k < n - 2; ++k) {
    double norm = 0.0;
    for (int i = k + 1; i < n; ++i) norm += a(i, k) * a(i, k);
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;
    double alpha = a(k + 1, k) >= 0.0 ? -norm : norm;
    std::vector<double> v(static_cast<std::size_t>(n), 0.0);
    v[static_cast<std::size_t>(k + 1)] = a(k + 1, k) - alpha;
    for (int i = k + 2; i < n; ++i) v[static_cast<std::size_t>(i)] = a(i, k);
    double vnorm2 = 0.0;
    for (int i = k + 1; i < n; ++i) vnorm2 += v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(i)];
    if (vnorm2 == 0.0) continue;
    for (int j = 0; j < n; ++j) {  // left: A <- H A
      double s = 0.0;
      for (int i = k + 1; i < n; ++i) s += v[static_cast<std::size_t>(i)] * a(i, j);
      s = 2.0 * s / vnorm2;
      for (int i = k + 1; i < n; ++i) a(i, j) -= s * v[static_cast<std::size_t>(i)];
    }
    for (int i = 0; i < n; ++i) {  // right: A <- A H
      double s = 0.0;
      for (int j = k + 1; j < n; ++j) s += a(i, j) * v[static_cast<std::size_t>(j)];
      s = 2.0 * s / vnorm2;
      for (int j = k + 1; j < n; ++j) a(i, j) -= s * v[static_cast<std::size_t>(j)];
    }
    for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
    a(k + 1, k) = alpha;
  }
}

inline void eigen_2x2(double a, double b, double c, double d, std::vector<std::complex<double>>& out) {
  double tr = a + d;
  double det = a * d - b * c;
  double disc = tr * tr / 4.0 - det;
  if (disc >= 0.0) {
    double root = std::sqrt(disc);
    // Stable split: larger-magnitude root first, companion via the product.
    double l1 = tr / 2.0 + (tr >= 0.0 ? root : -root);
    double l2 = (l1 != 0.0) ? det / l1 : tr / 2.0 - (tr >= 0.0 ? root : -root);
    out.emplace_back(l1, 0.0);
    out.emplace_back(l2, 0.0);
  } else {
    double im = std::sqrt(-disc);
    out.emplace_back(tr / 2.0, im);
    out.emplace_back(tr / 2.0, -im);
  }
}

}  // namespace detail

/// All eigenvalues of a square matrix, with multiplicity.
/// Throws LinalgError when the QR iteration hits its 10*n^2 cap.
inline std::vector<std::complex<double>> eigenvalues(Matrix a) {
  if (a.rows() != a.cols()) throw LinalgError("eigenvalues: square matrix required");
  if (!a.all_finite()) throw LinalgError("eigenvalues: non-finite entries");
  const int n = a.rows();
  std::vector<std::complex<double>> out;
  out.reserve(static_cast<std::size_t>(n));
  if (n == 1) {
    out.emplace_back(a(0, 0), 0.0);
    return out;
  }
  detail::hessenberg_reduce(a);

  const int iter_cap = 10 * n * n;
  int iters_total = 0;
  int hi = n - 1;
  int stuck = 0;
  while (hi >= 0) {
    // Deflate converged trailing blocks.
    int lo = hi;
    while (lo > 0) {
      double s = std::abs(a(lo - 1, lo - 1)) + std::abs(a(lo, lo));
      if (s == 0.0) s = 1.0;
      if (std::abs(a(lo, lo - 1)) <= 1e-15 * s) {
        a(lo, lo - 1) = 0.0;
        break;
      }
      --lo;
    }
    if (lo == hi) {
      out.emplace_back(a(hi, hi), 0.0);
      --hi;
      stuck = 0;
      continue;
    }
    if (lo == hi - 1) {
      detail::eigen_2x2(a(lo, lo), a(lo, hi), a(hi, lo), a(hi, hi), out);
      hi -= 2;
      stuck = 0;
      continue;
    }
    if (++iters_total > iter_cap) throw LinalgError("eigenvalues: QR iteration did not converge");

    // Francis double shift from the trailing 2x2 (exceptional shift when stuck).
    double s, t;
    if (++stuck % 16 == 0) {
      double w = std::abs(a(hi, hi - 1)) + std::abs(a(hi - 1, hi - 2));
      s = 1.5 * w;
      t = w * w;
    } else {
      s = a(hi - 1, hi - 1) + a(hi, hi);
      t = a(hi - 1, hi - 1) * a(hi, hi) - a(hi - 1, hi) * a(hi, hi - 1);
    }

    // First column of (H - l1)(H - l2) restricted to rows lo..lo+2.
    double x = a(lo, lo) * a(lo, lo) + a(lo, lo + 1) * a(lo + 1, lo) - s * a(lo, lo) + t;
    double y = a(lo + 1, lo) * (a(lo, lo) + a(lo + 1, lo + 1) - s);
    double z = (lo + 2 <= hi) ? a(lo + 2, lo + 1) * a(lo + 1, lo) : 0.0;

    for (int k = lo; k <= hi - 1; ++k) {
      // Householder on (x,y,z) to chase the bulge one step down.
      double scale = std::abs(x) + std::abs(y) + std::abs(z);
      if (scale == 0.0) {
        x = a(k + 1, k);
        y = (k + 2 <= hi) ? a(k + 2, k) : 0.0;
        z = (k + 3 <= hi) ? a(k + 3, k) : 0.0;
        continue;
      }
      double xs = x / scale, ys = y / scale, zs = z / scale;
      double norm = std::sqrt(xs * xs + ys * ys + zs * zs);
      double alpha = xs >= 0.0 ? -norm : norm;
      double v0 = xs - alpha, v1 = ys, v2 = zs;
      double vnorm2 = v0 * v0 + v1 * v1 + v2 * v2;
      if (vnorm2 > 0.0) {
        int last = std::min(k + 2, hi);
        int nv = last - k + 1;  // 2 or 3 rows involved
        double vv[3] = {v0, v1, v2};
        int jlo = std::max(lo, k - 1);
        for (int j = jlo; j < n; ++j) {
          double acc = 0.0;
          for (int i = 0; i < nv; ++i) acc += vv[i] * a(k + i, j);
          acc = 2.0 * acc / vnorm2;
          for (int i = 0; i < nv; ++i) a(k + i, j) -= acc * vv[i];
        }
        int ihi = std::min(hi, k + 3);
        for (int i = 0; i <= ihi; ++i) {
          double acc = 0.0;
          for (int jj = 0; jj < nv; ++jj) acc += a(i, k + jj) * vv[jj];
          acc = 2.0 * acc / vnorm2;
          for (int jj = 0; jj < nv; ++jj) a(i, k + jj) -= acc * vv[jj];
        }
      }
      x = a(k + 1, k);
      y = (k + 2 <= hi) ? a(k + 2, k) : 0.0;
      z = (k + 3 <= hi) ? a(k + 3, k) : 0.0;
    }
    // Restore exact Hessenberg zeros below the first subdiagonal.
    for (int i = lo + 2; i <= hi; ++i)
      for (int j = lo; j <= i - 2; ++j) a(i, j) = 0.0;
  }

  std::sort(out.begin(), out.end(), [](const std::complex<double>& p, const std::complex<double>& q) {
    if (p.real() != q.real()) return p.real() < q.real();
    return p.imag() < q.imag();
  });
  return out;
}

/// Distance of a complex value to the real half-open interval [0, eps).
inline double distance_to_interval(std::complex<double> lambda, double eps) {
  double re = lambda.real();
  double im = lambda.imag();
  double dre = 0.0;
  if (re < 0.0)
    dre = -re;
  else if (re >= eps)
    dre = re - eps;
  return std::hypot(dre, im);
}

}  // namespace fibcheck
