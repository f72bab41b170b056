#pragma once

// Small dense linear algebra, fixed-step RK4 with stiffness sub-stepping,
// and the stability primitives (Routh-Hurwitz, Lyapunov, symmetric eigs).
// Sizes in this library never exceed a few dozen rows, so everything is
// plain row-major storage and O(n^3) direct methods.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "mhgo/error.hpp"

namespace mhgo {

using Vec = std::vector<double>;

class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw Error(ErrorKind::invalid_dimension, "matrix with zero rows or columns");
    }
  }
  Mat(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    if (rows_ == 0 || cols_ == 0) {
      throw Error(ErrorKind::invalid_dimension, "matrix with zero rows or columns");
    }
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw Error(ErrorKind::invalid_dimension, "ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Mat identity(std::size_t n) {
    Mat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static Mat diagonal(std::span<const double> d) {
    Mat m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }
  static Mat column(std::span<const double> v) {
    Mat m(v.size(), 1);
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }
  static Mat row(std::span<const double> v) {
    Mat m(1, v.size());
    std::copy(v.begin(), v.end(), m.data_.begin());
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  Vec col(std::size_t j) const {
    Vec c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }
  Vec row_vec(std::size_t i) const {
    return Vec(data_.begin() + static_cast<std::ptrdiff_t>(i * cols_),
               data_.begin() + static_cast<std::ptrdiff_t>((i + 1) * cols_));
  }

  bool operator==(const Mat&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

inline Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw Error(ErrorKind::invalid_dimension, "matrix product shape mismatch");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  return c;
}

inline Vec operator*(const Mat& a, std::span<const double> v) {
  if (a.cols() != v.size()) throw Error(ErrorKind::invalid_dimension, "matrix-vector shape mismatch");
  Vec r(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * v[j];
    r[i] = s;
  }
  return r;
}
inline Vec operator*(const Mat& a, const Vec& v) { return a * std::span<const double>(v); }

inline Mat operator*(double s, Mat a) {
  for (double& x : a.data()) x *= s;
  return a;
}

inline Mat operator+(Mat a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::invalid_dimension, "matrix sum shape mismatch");
  auto bd = b.data();
  auto ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] += bd[i];
  return a;
}

inline Mat operator-(Mat a, const Mat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorKind::invalid_dimension, "matrix difference shape mismatch");
  auto bd = b.data();
  auto ad = a.data();
  for (std::size_t i = 0; i < ad.size(); ++i) ad[i] -= bd[i];
  return a;
}

inline double max_abs(const Mat& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

inline double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double norm_inf(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

inline bool is_symmetric(const Mat& p, double tol = 1e-12) {
  if (p.rows() != p.cols()) return false;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = i + 1; j < p.cols(); ++j)
      if (std::abs(p(i, j) - p(j, i)) > tol) return false;
  return true;
}

// LU with partial pivoting; solves A X = B for every column of B.
// Throws conditioning when a pivot is negligible relative to the largest one.
inline Mat lu_solve(Mat a, Mat b, double rel_pivot_tol = 1e-14) {
  const std::size_t n = a.rows();
  if (a.cols() != n || b.rows() != n) throw Error(ErrorKind::invalid_dimension, "lu_solve shape mismatch");
  double scale = max_abs(a);
  if (scale == 0.0) throw Error(ErrorKind::conditioning, "singular (zero) matrix");
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (std::abs(a(piv, k)) <= rel_pivot_tol * scale)
      throw Error(ErrorKind::conditioning, "matrix is singular to working precision");
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      for (std::size_t j = 0; j < b.cols(); ++j) std::swap(b(k, j), b(piv, j));
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= f * a(k, j);
      for (std::size_t j = 0; j < b.cols(); ++j) b(i, j) -= f * b(k, j);
    }
  }
  for (std::size_t jj = 0; jj < b.cols(); ++jj) {
    for (std::size_t ii = n; ii-- > 0;) {
      double s = b(ii, jj);
      for (std::size_t j = ii + 1; j < n; ++j) s -= a(ii, j) * b(j, jj);
      b(ii, jj) = s / a(ii, ii);
    }
  }
  return b;
}

inline Vec lu_solve(const Mat& a, std::span<const double> rhs, double rel_pivot_tol = 1e-14) {
  return lu_solve(a, Mat::column(rhs), rel_pivot_tol).col(0);
}

inline Mat inverse(const Mat& a) { return lu_solve(a, Mat::identity(a.rows())); }

// In-place Cholesky of a symmetric positive-definite matrix (lower factor).
// Returns false if a non-positive pivot is met.
inline bool cholesky_factor(std::span<double> a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) return false;
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  return true;
}

// Solves L L^T z = b given the lower factor produced by cholesky_factor.
inline void cholesky_solve(std::span<const double> l, std::size_t n, std::span<double> b) {
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l[i * n + k] * b[k];
    b[i] = s / l[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l[k * n + i] * b[k];
    b[i] = s / l[i * n + i];
  }
}

struct CompanionTriplet {
  Mat A;
  Mat B;
  Mat C;
};

// Chain-of-integrators realisation: shift matrix A, B = e_n, C = e_1^T.
inline CompanionTriplet companion_triplet(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::invalid_dimension, "companion_triplet requires n >= 1");
  CompanionTriplet t{Mat(n, n), Mat(n, 1), Mat(1, n)};
  for (std::size_t i = 0; i + 1 < n; ++i) t.A(i, i + 1) = 1.0;
  t.B(n - 1, 0) = 1.0;
  t.C(0, 0) = 1.0;
  return t;
}

// diag(1, eps, ..., eps^(n-1))
inline Mat scaling_matrix(double eps, std::size_t n) {
  if (!(eps > 0.0)) throw Error(ErrorKind::invalid_parameter, "scaling_matrix requires eps > 0");
  if (n == 0) throw Error(ErrorKind::invalid_dimension, "scaling_matrix requires n >= 1");
  Mat d(n, n);
  double p = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = p;
    p *= eps;
  }
  return d;
}

// Companion-form matrix with first column -kappa and superdiagonal ones.
inline Mat observer_error_matrix(std::span<const double> kappa) {
  const std::size_t n = kappa.size();
  if (n == 0) throw Error(ErrorKind::invalid_dimension, "empty kappa");
  Mat a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, 0) = -kappa[i];
  for (std::size_t i = 0; i + 1 < n; ++i) a(i, i + 1) += 1.0;
  return a;
}

// Routh-Hurwitz test on s^n + k1 s^(n-1) + ... + kn. A zero in the first
// column (or any non-positive coefficient) means some root has Re >= 0.
inline bool is_hurwitz_poly(std::span<const double> kappa) {
  const std::size_t n = kappa.size();
  if (n == 0) return true;
  Vec coeffs(n + 1);
  coeffs[0] = 1.0;
  std::copy(kappa.begin(), kappa.end(), coeffs.begin() + 1);
  for (double c : coeffs)
    if (!(c > 0.0)) return false;

  const std::size_t width = n / 2 + 1;
  std::vector<Vec> table;
  Vec r0(width, 0.0), r1(width, 0.0);
  for (std::size_t i = 0; i <= n; ++i) (i % 2 == 0 ? r0 : r1)[i / 2] = coeffs[i];
  table.push_back(r0);
  table.push_back(r1);
  for (std::size_t row = 2; row <= n; ++row) {
    const Vec& a = table[row - 2];
    const Vec& b = table[row - 1];
    if (!(b[0] > 0.0)) return false;
    Vec c(width, 0.0);
    for (std::size_t j = 0; j + 1 < width; ++j) c[j] = (b[0] * a[j + 1] - a[0] * b[j + 1]) / b[0];
    table.push_back(c);
  }
  for (const Vec& r : table)
    if (!(r[0] > 0.0)) return false;
  return true;
}

// Monic characteristic polynomial coefficients [c1..cn] of det(sI - A)
// via Faddeev-LeVerrier. Adequate for n <= 8.
inline Vec characteristic_polynomial(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::invalid_dimension, "characteristic polynomial of non-square matrix");
  Vec c(n, 0.0);
  Mat m(n, n);
  double ck = 1.0;
  for (std::size_t k = 1; k <= n; ++k) {
    Mat next = a * m;
    for (std::size_t i = 0; i < n; ++i) next(i, i) += ck;
    m = next;
    Mat am = a * m;
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += am(i, i);
    ck = -tr / static_cast<double>(k);
    c[k - 1] = ck;
  }
  return c;
}

inline bool is_hurwitz_matrix(const Mat& a) {
  const Vec p = characteristic_polynomial(a);
  return is_hurwitz_poly(p);
}

struct EigRange {
  double lambda_min;
  double lambda_max;
};

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
inline Vec symmetric_eigenvalues(const Mat& p) {
  if (!is_symmetric(p, 1e-12)) throw Error(ErrorKind::invalid_input, "matrix is not symmetric");
  const std::size_t n = p.rows();
  if (n == 1) return {p(0, 0)};
  if (n == 2) {
    const double m = 0.5 * (p(0, 0) + p(1, 1));
    const double h = 0.5 * (p(0, 0) - p(1, 1));
    const double r = std::hypot(h, p(0, 1));
    return {m - r, m + r};
  }
  Mat a = p;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        total += a(i, j) * a(i, j);
        if (i != j) off += a(i, j) * a(i, j);
      }
    if (off <= 1e-30 * total || off == 0.0) break;
    for (std::size_t pi = 0; pi + 1 < n; ++pi)
      for (std::size_t q = pi + 1; q < n; ++q) {
        const double apq = a(pi, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(pi, pi)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, pi), akq = a(k, q);
          a(k, pi) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(pi, k), aqk = a(q, k);
          a(pi, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
  }
  Vec ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

inline EigRange min_max_eig_sym(const Mat& p) {
  const Vec ev = symmetric_eigenvalues(p);
  return {ev.front(), ev.back()};
}

// Induced 2-norm, sqrt(lambda_max(A^T A)).
inline double spectral_norm(const Mat& a) {
  const Mat ata = transpose(a) * a;
  Mat sym = ata;
  for (std::size_t i = 0; i < sym.rows(); ++i)
    for (std::size_t j = i + 1; j < sym.cols(); ++j) sym(i, j) = sym(j, i) = 0.5 * (ata(i, j) + ata(j, i));
  return std::sqrt(std::max(0.0, min_max_eig_sym(sym).lambda_max));
}

// Solves A^T P + P A = -I for symmetric P by vectorising the n(n+1)/2
// upper-triangular unknowns.
inline Mat solve_lyapunov(const Mat& a) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw Error(ErrorKind::invalid_dimension, "solve_lyapunov needs a square matrix");
  if (!is_hurwitz_matrix(a)) throw Error(ErrorKind::no_solution, "matrix is not Hurwitz");

  const std::size_t m = n * (n + 1) / 2;
  std::vector<std::size_t> index(n * n);
  {
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) index[i * n + j] = index[j * n + i] = k++;
  }
  Mat sys(m, m);
  Mat rhs(m, 1);
  std::size_t row = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j, ++row) {
      // (A^T P)_ij + (P A)_ij = sum_k A_ki P_kj + P_ik A_kj
      for (std::size_t k = 0; k < n; ++k) {
        sys(row, index[k * n + j]) += a(k, i);
        sys(row, index[i * n + k]) += a(k, j);
      }
      rhs(row, 0) = (i == j) ? -1.0 : 0.0;
    }
  const Mat sol = lu_solve(sys, rhs);
  Mat p(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = sol(index[i * n + j], 0);

  const Mat residual = transpose(a) * p + p * a + Mat::identity(n);
  if (max_abs(residual) > 1e-10 * std::max(1.0, max_abs(p)))
    throw Error(ErrorKind::conditioning, "Lyapunov residual too large");
  return p;
}

// exp(A) by scaling and squaring with a truncated Taylor series.
inline Mat matrix_exponential(const Mat& a) {
  if (a.rows() != a.cols()) throw Error(ErrorKind::invalid_dimension, "matrix_exponential needs a square matrix");
  const std::size_t n = a.rows();
  double norm1 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < n; ++i) c += std::abs(a(i, j));
    norm1 = std::max(norm1, c);
  }
  if (!std::isfinite(norm1)) throw Error(ErrorKind::invalid_input, "matrix_exponential of non-finite matrix");
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Mat x = std::ldexp(1.0, -squarings) * a;
  Mat result = Mat::identity(n);
  Mat term = Mat::identity(n);
  for (int k = 1; k <= 20; ++k) {
    term = (1.0 / k) * (term * x);
    result = result + term;
  }
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

// ---------------------------------------------------------------------------
// Integration

struct OdeProblem {
  std::size_t dim = 0;
  std::function<Vec(double, const Vec&)> derivative;
  double stiffness_scale = 0.0;  // largest expected |eigenvalue|, 1/s
};

// Number of equal RK4 substeps so that |lambda| * h <= 0.5.
inline std::size_t substeps_for(double dt, double stiffness_scale) {
  if (!(stiffness_scale > 0.0) || !std::isfinite(stiffness_scale)) return 1;
  const double k = std::ceil(dt * stiffness_scale / 0.5);
  return static_cast<std::size_t>(std::max(1.0, std::min(k, 1e7)));
}

// Workspace-reusing classical RK4 step. f(t, x, dx) writes dx in place.
class Rk4Stepper {
 public:
  explicit Rk4Stepper(std::size_t dim) : k1_(dim), k2_(dim), k3_(dim), k4_(dim), tmp_(dim) {}

  template <class F>
  void step(F&& f, double t, std::span<double> x, double h) {
    const std::size_t n = x.size();
    f(t, std::span<const double>(x), std::span<double>(k1_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k2_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    f(t + 0.5 * h, std::span<const double>(tmp_), std::span<double>(k3_));
    for (std::size_t i = 0; i < n; ++i) tmp_[i] = x[i] + h * k3_[i];
    f(t + h, std::span<const double>(tmp_), std::span<double>(k4_));
    for (std::size_t i = 0; i < n; ++i) x[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  // One macro step of length dt split into `substeps` RK4 steps.
  template <class F>
  void macro_step(F&& f, double t, std::span<double> x, double dt, std::size_t substeps) {
    const double h = dt / static_cast<double>(substeps);
    for (std::size_t s = 0; s < substeps; ++s) {
      step(f, t + static_cast<double>(s) * h, x, h);
      if (!all_finite(x)) throw DivergenceError(t + static_cast<double>(s + 1) * h);
    }
  }

 private:
  Vec k1_, k2_, k3_, k4_, tmp_;
};

inline std::vector<Vec> rk4_integrate(const OdeProblem& problem, double t0, const Vec& x0, double dt_macro,
                                      std::size_t steps) {
  if (!(dt_macro > 0.0)) throw Error(ErrorKind::invalid_parameter, "dt_macro must be positive");
  if (x0.size() != problem.dim) throw Error(ErrorKind::invalid_dimension, "x0 does not match problem dimension");
  if (!all_finite(x0)) throw Error(ErrorKind::invalid_input, "x0 is not finite");
  const std::size_t sub = substeps_for(dt_macro, problem.stiffness_scale);
  auto f = [&](double t, std::span<const double> x, std::span<double> dx) {
    const Vec d = problem.derivative(t, Vec(x.begin(), x.end()));
    if (d.size() != dx.size()) throw Error(ErrorKind::invalid_dimension, "derivative has wrong dimension");
    std::copy(d.begin(), d.end(), dx.begin());
  };
  Rk4Stepper stepper(problem.dim);
  std::vector<Vec> traj;
  traj.reserve(steps + 1);
  traj.push_back(x0);
  Vec x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    stepper.macro_step(f, t0 + static_cast<double>(k) * dt_macro, x, dt_macro, sub);
    traj.push_back(x);
  }
  return traj;
}

}  // namespace mhgo
