#pragma once

// High-gain observers and the strategies built on them:
//   * single HGO            x^' = A x^ + B f_o(x^, u) + H (y - C x^)
//   * switching-gain HGO    fast profile until t_switch, slow afterwards
//   * multi-observer        N HGOs, pick argmin of a filtered residual
//   * MHGO                  N linear HGOs fused by continuous-time RLS
//
// Every strategy is an Estimator: a stateless configuration object whose
// dynamic state lives in a flat span owned by the closed-loop integrator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"

namespace mhgo {

using NominalModel = std::function<double(std::span<const double> xhat, double u)>;

struct ObserverGainProfile {
  Vec kappa;
  double eps = 1.0;

  std::size_t n() const { return kappa.size(); }

  void validate() const {
    if (kappa.empty()) throw Error(ErrorKind::invalid_dimension, "kappa must not be empty");
    if (!(eps > 0.0 && eps <= 1.0)) throw Error(ErrorKind::invalid_parameter, "eps must lie in (0, 1]");
    if (!is_hurwitz_poly(kappa)) throw Error(ErrorKind::invalid_parameter, "kappa polynomial is not Hurwitz");
  }

  // Upper bound on the observer's fastest eigenvalue magnitude (Cauchy bound / eps).
  double speed() const {
    double m = 0.0;
    for (double k : kappa) m = std::max(m, std::abs(k));
    return (1.0 + m) / eps;
  }
};

// H_i = kappa_i / eps^i
inline Vec hgo_gain(const ObserverGainProfile& profile) {
  Vec h(profile.n());
  double p = 1.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    p *= profile.eps;
    h[i] = profile.kappa[i] / p;
  }
  return h;
}

// Scaled injection gain H_o = -eps D(eps) H = -kappa.
inline Vec scaled_gain(const ObserverGainProfile& profile) {
  Vec ho(profile.n());
  for (std::size_t i = 0; i < ho.size(); ++i) ho[i] = -profile.kappa[i];
  return ho;
}

namespace detail {
inline void hgo_rhs(std::span<const double> xhat, double y, double u, std::span<const double> gain,
                    const NominalModel* f_o, std::span<double> out) {
  const std::size_t n = xhat.size();
  const double innovation = y - xhat[0];
  for (std::size_t i = 0; i + 1 < n; ++i) out[i] = xhat[i + 1] + gain[i] * innovation;
  out[n - 1] = gain[n - 1] * innovation;
  if (f_o && *f_o) out[n - 1] += (*f_o)(xhat, u);
}
}  // namespace detail

inline Vec hgo_derivative(std::span<const double> xhat, double y, double u, const ObserverGainProfile& profile,
                          const NominalModel& f_o = {}) {
  if (xhat.size() != profile.n()) throw Error(ErrorKind::invalid_dimension, "estimate does not match profile");
  const Vec h = hgo_gain(profile);
  Vec d(xhat.size());
  detail::hgo_rhs(xhat, y, u, h, &f_o, d);
  return d;
}

struct ObserverBankState {
  std::vector<Vec> estimates;

  std::size_t size() const { return estimates.size(); }
  std::size_t n() const { return estimates.empty() ? 0 : estimates.front().size(); }
};

// Linear bank: no nominal model is injected into the individual observers.
inline std::vector<Vec> mhgo_bank_derivative(const ObserverBankState& bank, double y,
                                             const ObserverGainProfile& profile) {
  const Vec h = hgo_gain(profile);
  std::vector<Vec> d;
  d.reserve(bank.size());
  for (const Vec& xi : bank.estimates) {
    if (xi.size() != profile.n()) throw Error(ErrorKind::invalid_dimension, "bank member does not match profile");
    Vec di(xi.size());
    detail::hgo_rhs(xi, y, 0.0, h, nullptr, di);
    d.push_back(std::move(di));
  }
  return d;
}

// Column i is x^_N - x^_i, i = 1..N-1.
inline Mat build_E(const ObserverBankState& bank) {
  const std::size_t N = bank.size();
  if (N < 2) throw Error(ErrorKind::invalid_input, "build_E requires at least two observers");
  const std::size_t n = bank.n();
  Mat e(n, N - 1);
  const Vec& last = bank.estimates.back();
  for (std::size_t i = 0; i + 1 < N; ++i)
    for (std::size_t r = 0; r < n; ++r) e(r, i) = last[r] - bank.estimates[i][r];
  return e;
}

// RLS in information form: R = P^-1 evolves as R' = (CE)^T (CE).
struct RlsState {
  Vec beta_hat;  // beta_1 .. beta_{N-1}; beta_N is implied
  Mat info;
  double gamma = 1e3;

  static RlsState initial(std::size_t N, double gamma, Vec beta0 = {}) {
    if (N < 2) throw Error(ErrorKind::invalid_input, "RLS needs at least two observers");
    if (!(gamma > 0.0)) throw Error(ErrorKind::invalid_parameter, "gamma must be positive");
    if (beta0.empty()) beta0.assign(N - 1, 1.0 / static_cast<double>(N));
    if (beta0.size() != N - 1) throw Error(ErrorKind::invalid_dimension, "beta0 must have N-1 entries");
    return RlsState{std::move(beta0), (1.0 / gamma) * Mat::identity(N - 1), gamma};
  }

  Vec weights() const {
    Vec w = beta_hat;
    double s = 0.0;
    for (double b : beta_hat) s += b;
    w.push_back(1.0 - s);
    return w;
  }
};

struct RlsDerivative {
  Vec beta_hat;
  Mat info;
};

inline RlsDerivative rls_derivative(const RlsState& rls, const Mat& E, double y_tilde_N) {
  const std::size_t p = rls.beta_hat.size();
  if (E.cols() != p || rls.info.rows() != p || rls.info.cols() != p)
    throw Error(ErrorKind::invalid_dimension, "RLS dimensions are inconsistent");
  const Vec ce = E.row_vec(0);
  Vec z = ce;
  Vec l(rls.info.data().begin(), rls.info.data().end());
  if (!cholesky_factor(l, p)) throw Error(ErrorKind::numerical, "information matrix is not positive definite");
  cholesky_solve(l, p, z);  // z = P (CE)^T
  const double residual = y_tilde_N + dot(ce, rls.beta_hat);
  RlsDerivative d{Vec(p), Mat(p, p)};
  for (std::size_t i = 0; i < p; ++i) d.beta_hat[i] = -z[i] * residual;
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < p; ++j) d.info(i, j) = ce[i] * ce[j];
  return d;
}

// x^_o = sum_{i<N} beta_i x^_i + (1 - sum beta_i) x^_N
inline Vec combine_weights(const ObserverBankState& bank, std::span<const double> weights) {
  if (weights.size() != bank.size()) throw Error(ErrorKind::invalid_dimension, "weights do not match bank");
  Vec xo(bank.n(), 0.0);
  for (std::size_t i = 0; i < bank.size(); ++i)
    for (std::size_t r = 0; r < xo.size(); ++r) xo[r] += weights[i] * bank.estimates[i][r];
  return xo;
}

inline Vec combine(const ObserverBankState& bank, const RlsState& rls) {
  if (rls.beta_hat.size() + 1 != bank.size()) throw Error(ErrorKind::invalid_dimension, "RLS does not match bank");
  return combine_weights(bank, rls.weights());
}

// Barycentric weights placing x0 in the convex hull of the initial
// estimates. nullopt means x0 lies outside the hull.
inline std::optional<Vec> convex_weights(const std::vector<Vec>& inits, std::span<const double> x0) {
  const std::size_t N = inits.size();
  const std::size_t n = x0.size();
  if (N < n + 1) throw Error(ErrorKind::invalid_input, "convex_weights requires N >= n+1");
  for (const Vec& v : inits)
    if (v.size() != n) throw Error(ErrorKind::invalid_dimension, "initial estimate has wrong dimension");

  constexpr double neg_tol = 1e-12;
  constexpr double fit_tol = 1e-9;

  // Solve [X_S; 1^T] b = [x0; 1] in the least-squares sense for subset S.
  auto try_subset = [&](const std::vector<std::size_t>& s) -> std::optional<Vec> {
    const std::size_t m = s.size();
    Mat g(m, m);
    Vec rhs(m, 0.0);
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) g(a, b) = dot(inits[s[a]], inits[s[b]]) + 1.0;
      rhs[a] = dot(inits[s[a]], x0) + 1.0;
    }
    Vec b;
    try {
      b = lu_solve(g, rhs);
    } catch (const Error&) {
      return std::nullopt;
    }
    for (double v : b)
      if (v < -neg_tol) return std::nullopt;
    Vec fit(n, 0.0);
    double sum = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      sum += b[a];
      for (std::size_t r = 0; r < n; ++r) fit[r] += b[a] * inits[s[a]][r];
    }
    for (std::size_t r = 0; r < n; ++r)
      if (std::abs(fit[r] - x0[r]) > fit_tol) return std::nullopt;
    if (std::abs(sum - 1.0) > fit_tol) return std::nullopt;
    Vec beta(N, 0.0);
    for (std::size_t a = 0; a < m; ++a) beta[s[a]] = std::max(0.0, b[a]);
    return beta;
  };

  std::vector<std::size_t> subset;
  std::optional<Vec> found;
  std::function<bool(std::size_t, std::size_t)> search = [&](std::size_t start, std::size_t size) {
    if (subset.size() == size) {
      found = try_subset(subset);
      return found.has_value();
    }
    for (std::size_t i = start; i < N; ++i) {
      subset.push_back(i);
      if (search(i + 1, size)) return true;
      subset.pop_back();
    }
    return false;
  };
  // Caratheodory: some subset of at most n+1 vertices suffices.
  auto hull_search = [&]() -> std::optional<Vec> {
    for (std::size_t size = 1; size <= n + 1; ++size) {
      subset.clear();
      if (search(0, size)) return found;
    }
    return std::nullopt;
  };

  if (N == n + 1) {
    Mat sys(n + 1, n + 1);
    Vec rhs(n + 1);
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t r = 0; r < n; ++r) sys(r, i) = inits[i][r];
      sys(n, i) = 1.0;
    }
    for (std::size_t r = 0; r < n; ++r) rhs[r] = x0[r];
    rhs[n] = 1.0;
    Vec beta;
    try {
      beta = lu_solve(sys, rhs, 1e-12);
    } catch (const Error&) {
      // Flat simplex: outside its hull is plain infeasibility, inside it
      // the barycentric coordinates are not unique.
      if (!hull_search()) return std::nullopt;
      throw Error(ErrorKind::degenerate_simplex, "initial estimates are affinely dependent");
    }
    for (double b : beta)
      if (b < -neg_tol) return std::nullopt;
    for (double& b : beta) b = std::max(0.0, b);
    return beta;
  }
  return hull_search();
}

inline const ObserverGainProfile& switching_schedule(double t, double t_switch, const ObserverGainProfile& fast,
                                                     const ObserverGainProfile& slow) {
  if (t_switch < 0.0) throw Error(ErrorKind::invalid_parameter, "t_switch must be non-negative");
  return t < t_switch ? fast : slow;
}

// Filtered residual mu_i' = -alpha mu_i + (y - y^_i)^2, sigma = argmin mu.
// sigma is a zero-based index here; reports print it one-based.
struct SelectorState {
  Vec mu;
  double alpha = 0.1;
  std::size_t sigma = 0;
};

inline std::size_t argmin_lowest(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}

// Advances mu over dt with residuals held constant (exact exponential
// update), then re-selects.
inline SelectorState selector_step(const SelectorState& sel, std::span<const double> residuals, double dt) {
  if (!(dt > 0.0)) throw Error(ErrorKind::invalid_parameter, "selector dt must be positive");
  if (residuals.size() != sel.mu.size()) throw Error(ErrorKind::invalid_dimension, "residual count mismatch");
  SelectorState next = sel;
  const double decay = std::exp(-sel.alpha * dt);
  const double gain = sel.alpha > 0.0 ? -std::expm1(-sel.alpha * dt) / sel.alpha : dt;
  for (std::size_t i = 0; i < next.mu.size(); ++i)
    next.mu[i] = sel.mu[i] * decay + residuals[i] * residuals[i] * gain;
  next.sigma = argmin_lowest(next.mu);
  return next;
}

// ---------------------------------------------------------------------------
// Interchangeable estimators

class Estimator {
 public:
  virtual ~Estimator() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t n() const = 0;
  virtual std::size_t state_size() const = 0;
  virtual Vec initial_state() const = 0;

  // Estimate handed to the controller. x_true is only read by the
  // state-feedback bypass.
  virtual void estimate(std::span<const double> s, std::span<const double> x_true, std::span<double> out) const = 0;

  virtual void derivative(double t, std::span<const double> s, double y, double u, std::span<double> ds) const = 0;

  // Largest eigenvalue magnitude expected over the next macro step.
  virtual double stiffness(double t, std::span<const double> s) const = 0;

  // Discrete bookkeeping after each macro step.
  virtual void after_step(double /*t*/, std::span<double> /*s*/) const {}

  virtual Vec weights(std::span<const double> /*s*/) const { return {}; }
  virtual std::optional<std::size_t> selection(std::span<const double> /*s*/) const { return std::nullopt; }
};

class StateFeedbackBypass final : public Estimator {
 public:
  explicit StateFeedbackBypass(std::size_t n) : n_(n) {}
  std::string_view kind() const override { return "state-feedback"; }
  std::size_t n() const override { return n_; }
  std::size_t state_size() const override { return 0; }
  Vec initial_state() const override { return {}; }
  void estimate(std::span<const double>, std::span<const double> x_true, std::span<double> out) const override {
    std::copy(x_true.begin(), x_true.end(), out.begin());
  }
  void derivative(double, std::span<const double>, double, double, std::span<double>) const override {}
  double stiffness(double, std::span<const double>) const override { return 0.0; }

 private:
  std::size_t n_;
};

class HighGainObserver final : public Estimator {
 public:
  HighGainObserver(ObserverGainProfile profile, Vec init, NominalModel f_o = {})
      : profile_(std::move(profile)), init_(std::move(init)), f_o_(std::move(f_o)), gain_(hgo_gain(profile_)) {
    profile_.validate();
    if (init_.size() != profile_.n()) throw Error(ErrorKind::invalid_dimension, "HGO initial estimate dimension");
  }
  std::string_view kind() const override { return "hgo"; }
  std::size_t n() const override { return profile_.n(); }
  std::size_t state_size() const override { return profile_.n(); }
  Vec initial_state() const override { return init_; }
  void estimate(std::span<const double> s, std::span<const double>, std::span<double> out) const override {
    std::copy(s.begin(), s.end(), out.begin());
  }
  void derivative(double, std::span<const double> s, double y, double u, std::span<double> ds) const override {
    detail::hgo_rhs(s, y, u, gain_, &f_o_, ds);
  }
  double stiffness(double, std::span<const double>) const override { return profile_.speed(); }

 private:
  ObserverGainProfile profile_;
  Vec init_;
  NominalModel f_o_;
  Vec gain_;
};

class SwitchingHgo final : public Estimator {
 public:
  SwitchingHgo(ObserverGainProfile fast, ObserverGainProfile slow, double t_switch, Vec init)
      : fast_(std::move(fast)), slow_(std::move(slow)), t_switch_(t_switch), init_(std::move(init)),
        fast_gain_(hgo_gain(fast_)), slow_gain_(hgo_gain(slow_)) {
    fast_.validate();
    slow_.validate();
    if (fast_.n() != slow_.n() || init_.size() != fast_.n())
      throw Error(ErrorKind::invalid_dimension, "switching HGO profiles disagree on dimension");
    if (t_switch_ < 0.0) throw Error(ErrorKind::invalid_parameter, "t_switch must be non-negative");
  }
  std::string_view kind() const override { return "switching-hgo"; }
  std::size_t n() const override { return fast_.n(); }
  std::size_t state_size() const override { return fast_.n(); }
  Vec initial_state() const override { return init_; }
  void estimate(std::span<const double> s, std::span<const double>, std::span<double> out) const override {
    std::copy(s.begin(), s.end(), out.begin());
  }
  void derivative(double t, std::span<const double> s, double y, double u, std::span<double> ds) const override {
    const bool fast = &switching_schedule(t, t_switch_, fast_, slow_) == &fast_;
    detail::hgo_rhs(s, y, u, fast ? fast_gain_ : slow_gain_, nullptr, ds);
  }
  double stiffness(double t, std::span<const double>) const override {
    return switching_schedule(t, t_switch_, fast_, slow_).speed();
  }

  const ObserverGainProfile& fast() const { return fast_; }
  const ObserverGainProfile& slow() const { return slow_; }

 private:
  ObserverGainProfile fast_, slow_;
  double t_switch_;
  Vec init_;
  Vec fast_gain_, slow_gain_;
};

// State layout: [x^_1 .. x^_N | mu_1 .. mu_N | sigma]
class MultiObserver final : public Estimator {
 public:
  MultiObserver(ObserverGainProfile profile, std::vector<Vec> inits, double alpha, std::size_t sigma0)
      : profile_(std::move(profile)), inits_(std::move(inits)), alpha_(alpha), sigma0_(sigma0),
        gain_(hgo_gain(profile_)) {
    profile_.validate();
    if (inits_.empty()) throw Error(ErrorKind::invalid_input, "multi-observer needs at least one observer");
    for (const Vec& v : inits_)
      if (v.size() != profile_.n()) throw Error(ErrorKind::invalid_dimension, "observer init dimension");
    if (!(alpha_ > 0.0)) throw Error(ErrorKind::invalid_parameter, "alpha must be positive");
    if (sigma0_ >= inits_.size()) throw Error(ErrorKind::invalid_parameter, "initial selection out of range");
  }
  std::string_view kind() const override { return "multi-observer"; }
  std::size_t n() const override { return profile_.n(); }
  std::size_t count() const { return inits_.size(); }
  std::size_t state_size() const override { return count() * n() + count() + 1; }
  Vec initial_state() const override {
    Vec s;
    s.reserve(state_size());
    for (const Vec& v : inits_) s.insert(s.end(), v.begin(), v.end());
    s.insert(s.end(), count(), 0.0);
    s.push_back(static_cast<double>(sigma0_));
    return s;
  }
  void estimate(std::span<const double> s, std::span<const double>, std::span<double> out) const override {
    const auto xs = s.subspan(sigma_of(s) * n(), n());
    std::copy(xs.begin(), xs.end(), out.begin());
  }
  void derivative(double, std::span<const double> s, double y, double u, std::span<double> ds) const override {
    const std::size_t N = count(), nn = n();
    for (std::size_t i = 0; i < N; ++i) {
      detail::hgo_rhs(s.subspan(i * nn, nn), y, u, gain_, nullptr, ds.subspan(i * nn, nn));
      const double r = y - s[i * nn];
      ds[N * nn + i] = -alpha_ * s[N * nn + i] + r * r;
    }
    ds[N * nn + N] = 0.0;
  }
  double stiffness(double, std::span<const double>) const override { return std::max(profile_.speed(), alpha_); }
  void after_step(double, std::span<double> s) const override {
    const std::size_t N = count();
    s[N * n() + N] = static_cast<double>(argmin_lowest(s.subspan(N * n(), N)));
  }
  std::optional<std::size_t> selection(std::span<const double> s) const override { return sigma_of(s); }

 private:
  std::size_t sigma_of(std::span<const double> s) const {
    return static_cast<std::size_t>(s[count() * n() + count()]);
  }

  ObserverGainProfile profile_;
  std::vector<Vec> inits_;
  double alpha_;
  std::size_t sigma0_;
  Vec gain_;
};

struct MhgoOptions {
  double gamma = 1e3;
  Vec beta0;                          // N-1 entries; empty means equal weights 1/N
  std::optional<Vec> frozen_weights;  // N entries; disables RLS
  NominalModel nominal_model;         // injected into every observer when set
};

// State layout: [x^_1 .. x^_N | beta_1 .. beta_{N-1} | R (row-major, (N-1)^2)]
// With frozen weights only the bank is integrated.
class Mhgo final : public Estimator {
 public:
  Mhgo(ObserverGainProfile profile, std::vector<Vec> inits, MhgoOptions options)
      : profile_(std::move(profile)), inits_(std::move(inits)), options_(std::move(options)),
        gain_(hgo_gain(profile_)) {
    profile_.validate();
    const std::size_t N = inits_.size();
    if (N < profile_.n() + 1) throw Error(ErrorKind::validation, "N >= n+1 required");
    for (const Vec& v : inits_)
      if (v.size() != profile_.n()) throw Error(ErrorKind::invalid_dimension, "observer init dimension");
    if (options_.frozen_weights) {
      if (options_.frozen_weights->size() != N)
        throw Error(ErrorKind::invalid_dimension, "frozen weights must have N entries");
    } else {
      // Validates gamma and beta0.
      rls0_ = RlsState::initial(N, options_.gamma, options_.beta0);
    }
    const std::size_t p = N - 1;
    chol_.resize(p * p);
    work_.resize(p);
  }

  std::string_view kind() const override { return "mhgo"; }
  std::size_t n() const override { return profile_.n(); }
  std::size_t count() const { return inits_.size(); }
  bool frozen() const { return options_.frozen_weights.has_value(); }
  const ObserverGainProfile& profile() const { return profile_; }
  double gamma() const { return options_.gamma; }

  std::size_t state_size() const override {
    const std::size_t p = count() - 1;
    return count() * n() + (frozen() ? 0 : p + p * p);
  }

  Vec initial_state() const override {
    Vec s;
    s.reserve(state_size());
    for (const Vec& v : inits_) s.insert(s.end(), v.begin(), v.end());
    if (!frozen()) {
      s.insert(s.end(), rls0_.beta_hat.begin(), rls0_.beta_hat.end());
      s.insert(s.end(), rls0_.info.data().begin(), rls0_.info.data().end());
    }
    return s;
  }

  ObserverBankState bank(std::span<const double> s) const {
    ObserverBankState b;
    for (std::size_t i = 0; i < count(); ++i) {
      auto xi = s.subspan(i * n(), n());
      b.estimates.emplace_back(xi.begin(), xi.end());
    }
    return b;
  }

  RlsState rls(std::span<const double> s) const {
    if (frozen()) throw Error(ErrorKind::invalid_input, "frozen MHGO has no RLS state");
    const std::size_t p = count() - 1;
    RlsState r;
    r.gamma = options_.gamma;
    auto b = s.subspan(count() * n(), p);
    r.beta_hat.assign(b.begin(), b.end());
    r.info = Mat(p, p);
    auto inf = s.subspan(count() * n() + p, p * p);
    std::copy(inf.begin(), inf.end(), r.info.data().begin());
    return r;
  }

  Vec weights(std::span<const double> s) const override {
    if (frozen()) return *options_.frozen_weights;
    const std::size_t p = count() - 1;
    auto b = s.subspan(count() * n(), p);
    Vec w(b.begin(), b.end());
    double sum = 0.0;
    for (double v : b) sum += v;
    w.push_back(1.0 - sum);
    return w;
  }

  void estimate(std::span<const double> s, std::span<const double>, std::span<double> out) const override {
    const std::size_t N = count(), nn = n();
    std::fill(out.begin(), out.end(), 0.0);
    if (frozen()) {
      const Vec& w = *options_.frozen_weights;
      for (std::size_t i = 0; i < N; ++i)
        for (std::size_t r = 0; r < nn; ++r) out[r] += w[i] * s[i * nn + r];
      return;
    }
    // x^_N + sum_{i<N} beta_i (x^_i - x^_N), algebraically equal to the
    // weighted sum with beta_N = 1 - sum beta_i.
    auto beta = s.subspan(N * nn, N - 1);
    const auto last = s.subspan((N - 1) * nn, nn);
    for (std::size_t r = 0; r < nn; ++r) {
      double acc = last[r];
      for (std::size_t i = 0; i + 1 < N; ++i) acc += beta[i] * (s[i * nn + r] - last[r]);
      out[r] = acc;
    }
  }

  void derivative(double, std::span<const double> s, double y, double u, std::span<double> ds) const override {
    const std::size_t N = count(), nn = n();
    const NominalModel* fo = options_.nominal_model ? &options_.nominal_model : nullptr;
    for (std::size_t i = 0; i < N; ++i)
      detail::hgo_rhs(s.subspan(i * nn, nn), y, u, gain_, fo, ds.subspan(i * nn, nn));
    if (frozen()) return;

    const std::size_t p = N - 1;
    const double last1 = s[(N - 1) * nn];
    Vec& ce = work_;
    for (std::size_t i = 0; i < p; ++i) ce[i] = last1 - s[i * nn];
    auto beta = s.subspan(N * nn, p);
    const double residual = (y - last1) + dot(ce, beta);
    const Vec z = solve_info(s, ce);
    auto dbeta = ds.subspan(N * nn, p);
    for (std::size_t i = 0; i < p; ++i) dbeta[i] = -z[i] * residual;
    auto dinfo = ds.subspan(N * nn + p, p * p);
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) dinfo[i * p + j] = ce[i] * ce[j];
  }

  double stiffness(double, std::span<const double> s) const override {
    double rate = profile_.speed();
    if (!frozen()) rate = std::max(rate, fusion_rate(s));
    return rate;
  }

  // (CE) P (CE)^T: the only non-zero eigenvalue of the beta^ dynamics.
  double fusion_rate(std::span<const double> s) const {
    const std::size_t N = count(), nn = n(), p = N - 1;
    Vec ce(p);
    for (std::size_t i = 0; i < p; ++i) ce[i] = s[(N - 1) * nn] - s[i * nn];
    const Vec z = solve_info(s, ce);
    return dot(ce, z);
  }

  // P (CE)^T at state s.
  Vec gain_direction(std::span<const double> s) const {
    const std::size_t N = count(), nn = n(), p = N - 1;
    Vec ce(p);
    for (std::size_t i = 0; i < p; ++i) ce[i] = s[(N - 1) * nn] - s[i * nn];
    return solve_info(s, ce);
  }

 private:
  Vec solve_info(std::span<const double> s, std::span<const double> rhs) const {
    const std::size_t N = count(), nn = n(), p = N - 1;
    auto info = s.subspan(N * nn + p, p * p);
    // Once the regressor has decayed, R stops changing in floating point and
    // the factor can be reused bit for bit.
    if (!chol_valid_ || !std::equal(info.begin(), info.end(), factored_.begin())) {
      factored_.assign(info.begin(), info.end());
      std::copy(info.begin(), info.end(), chol_.begin());
      chol_valid_ = cholesky_factor(chol_, p);
      if (!chol_valid_) throw Error(ErrorKind::numerical, "information matrix lost positive definiteness");
    }
    Vec z(rhs.begin(), rhs.end());
    cholesky_solve(chol_, p, z);
    return z;
  }

  ObserverGainProfile profile_;
  std::vector<Vec> inits_;
  MhgoOptions options_;
  Vec gain_;
  RlsState rls0_;
  mutable Vec chol_;
  mutable Vec factored_;
  mutable bool chol_valid_ = false;
  mutable Vec work_;
};

}  // namespace mhgo
