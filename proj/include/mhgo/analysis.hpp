#pragma once

// Closed-form quantities of the noise/gain trade-off:
//   h(eps, nu) = (4 eps^n f + 2 (a1 eps + a2) nu) / eps^(n-1)
// its minimiser, the admissible noise level, the admissible eps interval,
// the ultimate error bounds and the time to enter the invariant set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"

namespace mhgo {

struct BoundInputs {
  std::size_t n = 2;
  Vec kappa;
  double eps = 1.0;
  double f_bar = 0.0;   // ||P0|| * f_bar0
  double nu_bar = 0.0;
  double a1 = 0.0;      // bound of 2 ||P0 E_o P E_o^T C^T||
  double a2 = 0.0;      // 2 ||P0 H_o||
  double h_bar = 0.0;   // admissible level for h
  double V1_0 = 0.0;    // eta_o(0)^T P0 eta_o(0)
  double l3 = 1.0;      // transient inflation constant

  void validate() const {
    if (n == 0) throw Error(ErrorKind::invalid_dimension, "n must be positive");
    for (double v : {f_bar, nu_bar, a1, a2, h_bar, V1_0})
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::invalid_parameter, "bound inputs must be non-negative");
  }
};

// Lyapunov data derived from kappa alone.
struct P0Quantities {
  Mat P0;
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double norm_P0 = 0.0;
  double norm_P0Ho = 0.0;
};

inline P0Quantities p0_quantities(std::span<const double> kappa) {
  P0Quantities q;
  q.P0 = solve_lyapunov(observer_error_matrix(kappa));
  const EigRange er = min_max_eig_sym(q.P0);
  q.lambda_min = er.lambda_min;
  q.lambda_max = er.lambda_max;
  q.norm_P0 = er.lambda_max;  // symmetric positive definite
  Vec ho(kappa.size());
  for (std::size_t i = 0; i < ho.size(); ++i) ho[i] = -kappa[i];
  q.norm_P0Ho = norm2(q.P0 * ho);
  return q;
}

inline double h_value_at(const BoundInputs& in, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorKind::invalid_parameter, "eps must be positive");
  const double nn = static_cast<double>(in.n);
  return (4.0 * std::pow(eps, nn) * in.f_bar + 2.0 * (in.a1 * eps + in.a2) * in.nu_bar) / std::pow(eps, nn - 1.0);
}

inline double h_value(const BoundInputs& in) { return h_value_at(in, in.eps); }

// Numerator of dh/deps.
inline double h1_value(const BoundInputs& in, double eps) {
  const double nn = static_cast<double>(in.n);
  return 4.0 * in.f_bar * std::pow(eps, nn) - 2.0 * (nn - 2.0) * in.a1 * in.nu_bar * eps -
         2.0 * (nn - 1.0) * in.a2 * in.nu_bar;
}

enum class MinimizerKind {
  interior,         // stationary point inside (0, 1]
  clamped,          // stationary point beyond 1 (or none: h decreasing); eps* = 1
  infimum_at_zero,  // h increasing on (0, inf): no interior minimum
};

struct MinimizerResult {
  double eps_star = 1.0;
  MinimizerKind kind = MinimizerKind::interior;
  double stationary_point = 1.0;  // unclamped root of h1 (inf if none)
};

namespace detail {
template <class F>
double bisect(F&& f, double lo, double hi, double tol = 0.0, int max_iter = 1100) {
  double flo = f(lo);
  for (int it = 0; it < max_iter && hi - lo > tol * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if ((fm < 0.0) == (flo < 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}
}  // namespace detail

inline MinimizerResult h_minimizer(const BoundInputs& in) {
  in.validate();
  const double fn = in.f_bar, a1n = in.a1 * in.nu_bar, a2n = in.a2 * in.nu_bar;
  if (fn == 0.0 && a1n == 0.0 && a2n == 0.0)
    throw Error(ErrorKind::invalid_parameter, "h is identically zero; no minimiser");

  auto h1 = [&](double e) { return h1_value(in, e); };
  // h1 < 0 just above zero exactly when an interior minimum exists.
  const double tiny = 1e-12;
  if (!(h1(tiny) < 0.0)) {
    return {0.0, MinimizerKind::infimum_at_zero, 0.0};
  }
  if (fn == 0.0) {
    // h is strictly decreasing; the constrained minimum sits at 1.
    return {1.0, MinimizerKind::clamped, std::numeric_limits<double>::infinity()};
  }
  double hi = 1.0;
  for (int i = 0; i < 200 && h1(hi) < 0.0; ++i) hi *= 2.0;
  if (h1(hi) < 0.0) throw Error(ErrorKind::numerical, "failed to bracket the minimiser");
  const double root = detail::bisect(h1, tiny, hi);
  if (root > 1.0) return {1.0, MinimizerKind::clamped, root};
  return {root, MinimizerKind::interior, root};
}

// Largest admissible noise bound for level h_bar at eps_star, floored at 0.
inline double nu_star(const BoundInputs& in, double eps_star) {
  const double nn = static_cast<double>(in.n);
  const double den = 2.0 * (in.a1 * eps_star + in.a2);
  if (den == 0.0) throw Error(ErrorKind::undefined, "a1 eps* + a2 = 0; noise bound undefined");
  const double num = std::pow(eps_star, nn - 1.0) * in.h_bar - 4.0 * std::pow(eps_star, nn) * in.f_bar;
  return std::max(0.0, num / den);
}

struct EpsInterval {
  double eps1 = 0.0;
  double eps2 = 0.0;
};

// The sub-interval of (0, 1] on which h(eps, nu_bar) <= h_bar.
inline EpsInterval eps_interval(const BoundInputs& in, const MinimizerResult& mr) {
  in.validate();
  if (mr.kind == MinimizerKind::infimum_at_zero) {
    // h increasing: interval is (0, eps2].
    auto g = [&](double e) { return h_value_at(in, e) - in.h_bar; };
    if (g(1.0) <= 0.0) return {0.0, 1.0};
    return {0.0, detail::bisect(g, 1e-300, 1.0)};
  }
  const double es = mr.eps_star;
  const double nu_max = (in.a1 * es + in.a2) > 0.0 ? nu_star(in, es) : std::numeric_limits<double>::infinity();
  if (in.nu_bar > nu_max * (1.0 + 1e-12) + 1e-300)
    throw Error(ErrorKind::empty_interval, "nu_bar exceeds the admissible bound nu*");
  if (in.nu_bar >= nu_max * (1.0 - 1e-12) && std::isfinite(nu_max)) return {es, es};

  auto g = [&](double e) { return h_value_at(in, e) - in.h_bar; };
  EpsInterval r;
  if (g(es * 1e-15) <= 0.0) {
    r.eps1 = 0.0;
  } else {
    double left = es * 0.5;
    while (g(left) <= 0.0) left *= 0.5;
    r.eps1 = detail::bisect(g, left, es);
  }
  if (g(1.0) <= 0.0) {
    r.eps2 = 1.0;
  } else {
    r.eps2 = detail::bisect(g, es, 1.0);
  }
  return r;
}

enum class BoundVariant {
  single_observer,  // fixed true weights: sqrt(lmax/lmin) (4 eps^n f + 4 ||P0 Ho|| nu) / eps^(n-1)
  fused,            // sqrt(lmax/lmin) h(eps, nu)
};

inline double ultimate_bound(const BoundInputs& in, const P0Quantities& q, BoundVariant variant) {
  const double ratio = std::sqrt(q.lambda_max / q.lambda_min);
  if (variant == BoundVariant::fused) return ratio * h_value(in);
  const double nn = static_cast<double>(in.n);
  return ratio * (4.0 * std::pow(in.eps, nn) * in.f_bar + 4.0 * q.norm_P0Ho * in.nu_bar) / std::pow(in.eps, nn - 1.0);
}

// T(eps) = 4 eps lmax ln( sqrt(V1(0) l3) / (4 eps^n f sqrt(lmax)) ), floored at 0.
inline double convergence_time(const BoundInputs& in, double lambda_max) {
  const double nn = static_cast<double>(in.n);
  const double den = 4.0 * std::pow(in.eps, nn) * in.f_bar * std::sqrt(lambda_max);
  if (den == 0.0) throw Error(ErrorKind::undefined, "f_bar = 0: the invariant set collapses and T is unbounded");
  const double arg = std::sqrt(in.V1_0 * in.l3) / den;
  if (!(arg > 1.0)) return 0.0;
  return 4.0 * in.eps * lambda_max * std::log(arg);
}

// Assembles BoundInputs for a profile: f = ||P0|| f0, a2 = 2 ||P0 Ho||.
inline BoundInputs make_bound_inputs(const ObserverGainProfile& profile, const P0Quantities& q, double f_bar0,
                                     double nu_bar, double a1) {
  BoundInputs in;
  in.n = profile.n();
  in.kappa = profile.kappa;
  in.eps = profile.eps;
  in.f_bar = q.norm_P0 * f_bar0;
  in.nu_bar = nu_bar;
  in.a1 = a1;
  in.a2 = 2.0 * q.norm_P0Ho;
  return in;
}

// 2 ||P0 E_o P E_o^T C^T|| at one MHGO state, with E_o = D(eps) E and
// P E_o^T C^T = R^{-1} (CE)^T.
inline double a1_sample(const Mhgo& mhgo, std::span<const double> s, const P0Quantities& q) {
  if (mhgo.frozen()) return 0.0;
  const std::size_t N = mhgo.count(), n = mhgo.n();
  const Vec z = mhgo.gain_direction(s);
  Vec ez(n, 0.0);
  const auto last = s.subspan((N - 1) * n, n);
  for (std::size_t i = 0; i + 1 < N; ++i)
    for (std::size_t r = 0; r < n; ++r) ez[r] += z[i] * (last[r] - s[i * n + r]);
  double scale = 1.0;
  for (std::size_t r = 0; r < n; ++r, scale *= mhgo.profile().eps) ez[r] *= scale;
  return 2.0 * norm2(q.P0 * ez);
}

// The bank error matrix evolves on its own (eps E_o' = A_o E_o), and so does
// the information matrix R = I/gamma + int (CE)^T (CE). This evaluates the
// fusion-side constants on a time grid without simulating the plant.
struct FusionTransient {
  double lambda = 0.0;  // decay rate: ||exp(A_o t)|| <= sqrt(lmax/lmin) exp(-lambda t)
  double l1 = 0.0;      // sup ||E_o(t)|| exp(lambda t / eps)
  double l2 = 0.0;      // 2 l1^2 ||P0|| gamma
  double l3 = 1.0;      // min(10, exp(l2 eps / (2 lambda lmin)))
  double a1_sup = 0.0;  // sup of 2 ||P0 E_o P E_o^T C^T||
  Vec times;
  Vec a1;
  Vec eo_norm;
};

inline Mat bank_error_matrix(const std::vector<Vec>& inits, double eps) {
  const std::size_t N = inits.size();
  if (N < 2) throw Error(ErrorKind::invalid_input, "bank needs at least two observers");
  const std::size_t n = inits[0].size();
  Mat e(n, N - 1);
  double scale = 1.0;
  for (std::size_t r = 0; r < n; ++r, scale *= eps)
    for (std::size_t i = 0; i + 1 < N; ++i) e(r, i) = scale * (inits[N - 1][r] - inits[i][r]);
  return e;
}

inline FusionTransient fusion_transient(const ObserverGainProfile& profile, const std::vector<Vec>& inits,
                                        double gamma, double horizon, double sample_dt, const P0Quantities& q) {
  profile.validate();
  if (!(gamma > 0.0)) throw Error(ErrorKind::invalid_parameter, "gamma must be positive");
  if (!(horizon > 0.0) || !(sample_dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "horizon and step must be positive");
  const std::size_t n = profile.n(), p = inits.size() - 1;
  const double eps = profile.eps;
  const Mat eo0 = bank_error_matrix(inits, eps);
  const Mat ao = observer_error_matrix(profile.kappa);

  FusionTransient ft;
  ft.lambda = 1.0 / (2.0 * q.lambda_max);

  // Psi(t) = exp(A_o t / eps); phi = Psi^T e1; Phi(t) = int phi phi^T.
  // R(t) = I/gamma + E_o(0)^T Phi(t) E_o(0).
  const std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / sample_dt));
  const std::size_t sub = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(sample_dt / (0.05 * eps))));
  const double h = sample_dt / static_cast<double>(sub);
  const Mat step_exp = matrix_exponential((h / eps) * ao);
  const Mat half_exp = matrix_exponential((0.5 * h / eps) * ao);
  Mat psi = Mat::identity(n);
  Mat phi_int(n, n);
  auto phi_outer = [&](const Mat& m) {
    Mat o(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) o(i, j) = m(0, i) * m(0, j);
    return o;
  };
  Vec chol(p * p);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * sample_dt;
    const Mat eo = psi * eo0;
    const double eon = spectral_norm(eo);
    ft.l1 = std::max(ft.l1, eon * std::exp(ft.lambda * t / eps));
    const Mat r = (1.0 / gamma) * Mat::identity(p) + transpose(eo0) * phi_int * eo0;
    std::copy(r.data().begin(), r.data().end(), chol.begin());
    if (!cholesky_factor(chol, p)) throw Error(ErrorKind::numerical, "information matrix not positive definite");
    Vec z = eo.row_vec(0);
    cholesky_solve(chol, p, z);
    const double a1 = 2.0 * norm2(q.P0 * (eo * z));
    ft.a1_sup = std::max(ft.a1_sup, a1);
    ft.times.push_back(t);
    ft.a1.push_back(a1);
    ft.eo_norm.push_back(eon);
    if (k == steps) break;
    // Simpson on each substep; Psi is advanced exactly.
    for (std::size_t j = 0; j < sub; ++j) {
      const Mat mid = half_exp * psi;
      const Mat end = step_exp * psi;
      phi_int = phi_int + (h / 6.0) * (phi_outer(psi) + 4.0 * phi_outer(mid) + phi_outer(end));
      psi = end;
    }
  }
  ft.l2 = 2.0 * ft.l1 * ft.l1 * q.norm_P0 * gamma;
  ft.l3 = std::min(10.0, std::exp(std::min(50.0, ft.l2 * eps / (2.0 * ft.lambda * q.lambda_min))));
  return ft;
}

}  // namespace mhgo
