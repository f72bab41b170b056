#pragma once

// Plain-text run summaries and the closed-form bounds report.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhgo/analysis.hpp"
#include "mhgo/csv.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/scenario.hpp"
#include "mhgo/simulation.hpp"

namespace mhgo {

inline std::string summary_text(const Scenario& sc, const MetricsSummary& m) {
  std::ostringstream os;
  auto num = [](double v) { return format_number(v); };
  os << "scenario: " << sc.name << "\n";
  if (!sc.description.empty()) os << "description: " << sc.description << "\n";
  os << "plant: " << to_string(sc.plant.kind) << "\n";
  os << "estimator: " << to_string(sc.estimator.kind) << "\n";
  os << "noise bound: " << num(sc.noise.bound) << "  seed: " << sc.noise.seed << "\n";
  os << "horizon: " << num(sc.horizon) << " s  dt: " << num(sc.dt) << " s  steps: " << m.steps
     << "  records: " << m.records << "\n";
  if (m.diverged) {
    os << "status: diverged at t=" << num(m.escape_time) << "\n";
    return os.str();
  }
  os << "status: completed\n";
  os << "rms tracking error (t >= " << num(m.window_start) << "): " << num(m.rms_tracking) << "\n";
  os << "time to band " << num(m.band) << " (||x - xhat||_inf): " << num(m.time_to_band) << "\n";
  os << "peak |xhat|: " << num(m.peak_estimate) << "  per component:";
  for (double v : m.peak_components) os << " " << num(v);
  os << "\n";
  os << "steady estimation error sup (t >= " << num(m.window_start) << "): " << num(m.steady_error_sup) << "\n";
  for (const ChannelBound& b : m.bounds) {
    os << "bound check, channel " << b.channel + 1 << " ("
       << (b.variant == BoundVariant::fused ? "fused" : "fixed weights") << "):\n";
    os << "  measured sup ||x - xhat_o||_2 = " << num(b.measured) << "\n";
    os << "  trajectory a1 = " << num(b.a1) << ", f0 = " << num(b.f_bar0) << " -> bound " << num(b.bound)
       << (b.satisfied ? "  satisfied" : "  VIOLATED") << "\n";
    os << "  window a1 = " << num(b.a1_window) << ", f0 = " << num(b.f_bar0_window) << " -> bound "
       << num(b.bound_window) << (b.satisfied_window ? "  satisfied" : "  violated") << "\n";
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Bounds report

struct ChannelBoundsReport {
  std::size_t channel = 0;
  ObserverGainProfile profile;
  P0Quantities q;
  BoundInputs inputs;
  std::optional<FusionTransient> fusion;
  double h = 0.0;
  MinimizerResult minimizer;
  std::optional<double> nu_star;
  std::optional<EpsInterval> interval;
  std::string interval_note;
  std::optional<double> time;
  std::string time_note;
  double upper0 = 0.0;
  double upper = 0.0;
};

// Initial fused estimate of channel k.
inline Vec initial_estimate(const Scenario& sc, std::size_t k) {
  const EstimatorConfig& e = sc.estimator;
  const std::size_t n = sc.plant.channel_dim();
  switch (e.kind) {
    case EstimatorKind::state_feedback: return Vec(sc.plant.x0.begin() + k * n, sc.plant.x0.begin() + (k + 1) * n);
    case EstimatorKind::hgo:
    case EstimatorKind::switching_hgo: return e.init;
    case EstimatorKind::multi_observer: return e.inits[e.sigma0];
    case EstimatorKind::mhgo: {
      Vec w;
      if (e.weights_mode == "rls") {
        w = e.beta0;
        double sum = 0.0;
        for (double v : w) sum += v;
        w.push_back(1.0 - sum);
      } else {
        w = resolved_frozen_weights(sc, k);
      }
      Vec x(n, 0.0);
      for (std::size_t i = 0; i < e.inits.size(); ++i)
        for (std::size_t r = 0; r < n; ++r) x[r] += w[i] * e.inits[i][r];
      return x;
    }
  }
  return {};
}

inline std::vector<ChannelBoundsReport> bounds_report(const Scenario& sc) {
  const EstimatorConfig& e = sc.estimator;
  if (e.kind == EstimatorKind::state_feedback)
    throw Error(ErrorKind::validation, "estimator.kind: bounds need an observer-based estimator");
  const Plant plant = build_plant(sc);
  const std::size_t n = sc.plant.channel_dim();
  std::vector<ChannelBoundsReport> out;
  for (std::size_t k = 0; k < plant.channels(); ++k) {
    ChannelBoundsReport r;
    r.channel = k;
    r.profile = e.profile;
    r.q = p0_quantities(r.profile.kappa);
    double a1 = 0.0;
    const bool fused = e.kind == EstimatorKind::mhgo && e.weights_mode == "rls";
    if (fused) {
      r.fusion = fusion_transient(r.profile, e.inits, e.gamma, sc.horizon, std::max(sc.dt, 1e-3), r.q);
      a1 = r.fusion->a1_sup;
    }
    r.inputs = make_bound_inputs(r.profile, r.q, plant.f_bounds[k], sc.noise.bound, a1);
    r.h = h_value(r.inputs);
    r.inputs.h_bar = sc.analysis.h_bar.value_or(2.0 * r.h);

    const Vec xhat0 = initial_estimate(sc, k);
    Vec eta(n);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i, scale *= r.profile.eps) eta[i] = scale * (sc.plant.x0[k * n + i] - xhat0[i]);
    r.inputs.V1_0 = dot(eta, r.q.P0 * eta);
    r.inputs.l3 = sc.analysis.l3.value_or(r.fusion ? r.fusion->l3 : 1.0);

    r.minimizer = h_minimizer(r.inputs);
    try {
      r.nu_star = nu_star(r.inputs, r.minimizer.eps_star);
    } catch (const Error& err) {
      r.interval_note = err.what();
    }
    try {
      r.interval = eps_interval(r.inputs, r.minimizer);
    } catch (const Error& err) {
      r.interval_note = err.what();
    }
    try {
      r.time = convergence_time(r.inputs, r.q.lambda_max);
    } catch (const Error& err) {
      r.time_note = err.what();
    }
    r.upper0 = ultimate_bound(r.inputs, r.q, BoundVariant::single_observer);
    r.upper = ultimate_bound(r.inputs, r.q, BoundVariant::fused);
    out.push_back(std::move(r));
  }
  return out;
}

inline std::string bounds_text(const Scenario& sc, const std::vector<ChannelBoundsReport>& reports) {
  std::ostringstream os;
  auto num = [](double v) { return format_number(v); };
  os << "scenario: " << sc.name << "\n";
  os << "estimator: " << to_string(sc.estimator.kind) << "\n";
  for (const auto& r : reports) {
    const BoundInputs& in = r.inputs;
    os << "channel " << r.channel + 1 << "\n";
    os << "  kappa:";
    for (double v : r.profile.kappa) os << " " << num(v);
    os << "  eps: " << num(in.eps) << "  n: " << in.n << "\n";
    os << "  P0 eigenvalues: [" << num(r.q.lambda_min) << ", " << num(r.q.lambda_max) << "]  ||P0 Ho||: "
       << num(r.q.norm_P0Ho) << "\n";
    os << "  f_bar = ||P0|| f0: " << num(in.f_bar) << "  nu_bar: " << num(in.nu_bar) << "  a1: " << num(in.a1)
       << "  a2: " << num(in.a2) << "\n";
    if (r.fusion)
      os << "  fusion transient: lambda " << num(r.fusion->lambda) << "  l1 " << num(r.fusion->l1) << "  l2 "
         << num(r.fusion->l2) << "  l3 " << num(r.fusion->l3) << "\n";
    os << "  V1(0): " << num(in.V1_0) << "  l3: " << num(in.l3) << "  h_bar: " << num(in.h_bar) << "\n";
    os << "  h(eps, nu_bar): " << num(r.h) << "\n";
    switch (r.minimizer.kind) {
      case MinimizerKind::interior: os << "  eps*: " << num(r.minimizer.eps_star) << " (interior minimum)\n"; break;
      case MinimizerKind::clamped:
        os << "  eps*: 1 (clamped; stationary point " << num(r.minimizer.stationary_point) << ")\n";
        break;
      case MinimizerKind::infimum_at_zero: os << "  eps*: -> 0 (h increasing; no interior minimum)\n"; break;
    }
    if (r.nu_star) os << "  nu*: " << num(*r.nu_star) << "\n";
    if (r.interval)
      os << "  [eps1*, eps2*]: [" << num(r.interval->eps1) << ", " << num(r.interval->eps2) << "]\n";
    if (!r.interval_note.empty()) os << "  note: " << r.interval_note << "\n";
    if (r.time) os << "  T(eps): " << num(*r.time) << " s\n";
    else os << "  T(eps): undefined (" << r.time_note << ")\n";
    os << "  ultimate bound, fixed weights: " << num(r.upper0) << "\n";
    os << "  ultimate bound, fused: " << num(r.upper) << "\n";
  }
  os << "separation-level constants (eps3*, eps4*, eps5*, nu1*, nu2*, T1, a5): existence-level only, not computed\n";
  return os.str();
}

}  // namespace mhgo
