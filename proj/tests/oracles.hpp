#pragma once

// Reference computations used only by the tests. None of these call into
// the library, so they can serve as independent checks.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

using cplx = std::complex<long double>;

// Roots of s^n + c[0] s^(n-1) + ... + c[n-1] by Durand-Kerner, then Newton polish.
inline std::vector<cplx> poly_roots(const std::vector<double>& c) {
  const std::size_t n = c.size();
  std::vector<cplx> r(n);
  if (n == 0) return r;
  auto eval = [&](cplx s) {
    cplx p = 1.0L;
    for (double ci : c) p = p * s + static_cast<long double>(ci);
    return p;
  };
  auto deriv = [&](cplx s) {
    cplx p = 0.0L, d = 0.0L;
    p = 1.0L;
    for (double ci : c) {
      d = d * s + p;
      p = p * s + static_cast<long double>(ci);
    }
    return d;
  };
  const cplx seed(0.4L, 0.9L);
  cplx z = 1.0L;
  for (std::size_t i = 0; i < n; ++i, z *= seed) r[i] = z;
  for (int it = 0; it < 5000; ++it) {
    long double change = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
      cplx den = 1.0L;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) den *= (r[i] - r[j]);
      const cplx step = eval(r[i]) / den;
      r[i] -= step;
      change = std::max(change, std::abs(step));
    }
    if (change < 1e-18L) break;
  }
  for (auto& s : r)
    for (int it = 0; it < 5; ++it) {
      const cplx d = deriv(s);
      if (std::abs(d) < 1e-12L) break;
      s -= eval(s) / d;
    }
  return r;
}

// exp(A) by an unscaled long-double Taylor series. Fine for ||A|| up to ~20.
inline std::vector<std::vector<long double>> expm(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::vector<long double>> res(n, std::vector<long double>(n, 0.0L)), term = res;
  for (std::size_t i = 0; i < n; ++i) res[i][i] = term[i][i] = 1.0L;
  for (int k = 1; k < 200; ++k) {
    std::vector<std::vector<long double>> next(n, std::vector<long double>(n, 0.0L));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = 0; m < n; ++m) next[i][j] += term[i][m] * a[m][j];
    for (auto& row : next)
      for (auto& v : row) v /= k;
    term = next;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) res[i][j] += term[i][j];
  }
  return res;
}

// Monic coefficients [k1..kn] of prod (s - root) for a random set of roots
// with real parts in [-re_max, -re_min]; complex roots come in pairs.
inline std::vector<double> random_hurwitz(std::mt19937_64& rng, std::size_t n, double re_min = 0.3,
                                          double re_max = 4.0) {
  std::uniform_real_distribution<double> re(re_min, re_max), im(0.0, 3.0), coin(0.0, 1.0);
  std::vector<cplx> roots;
  while (roots.size() < n) {
    if (n - roots.size() >= 2 && coin(rng) < 0.5) {
      const double a = -re(rng), b = im(rng);
      roots.emplace_back(a, b);
      roots.emplace_back(a, -b);
    } else {
      roots.emplace_back(-re(rng), 0.0);
    }
  }
  std::vector<cplx> p{1.0L};
  for (const cplx& r : roots) {
    std::vector<cplx> q(p.size() + 1, 0.0L);
    for (std::size_t i = 0; i < p.size(); ++i) {
      q[i] += p[i];
      q[i + 1] -= r * p[i];
    }
    p = q;
  }
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i) k[i] = static_cast<double>(p[i + 1].real());
  return k;
}

}  // namespace oracle
