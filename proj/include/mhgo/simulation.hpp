#pragma once

// Fixed-step closed-loop simulation, decimated trajectory records and the
// metrics extracted from them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mhgo/analysis.hpp"
#include "mhgo/closed_loop.hpp"
#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"
#include "mhgo/scenario.hpp"

namespace mhgo {

struct TrajectoryRecord {
  double t = 0.0;
  Vec x;
  Vec xhat;
  Vec u;
  Vec y;
  std::vector<Vec> beta;                   // per channel, all N weights (MHGO only)
  std::vector<std::size_t> sigma;          // per channel, 0-based (multi-observer only)
  std::vector<Vec> info;                   // per channel R, row-major (only when requested)
};

// Ultimate-bound check for one MHGO channel.
struct ChannelBound {
  std::size_t channel = 0;
  BoundVariant variant = BoundVariant::fused;
  double nu_bar = 0.0;
  double a1 = 0.0;        // sup over the trajectory
  double f_bar0 = 0.0;    // sup |f| over the trajectory
  double bound = 0.0;
  double a1_window = 0.0;  // the same quantities restricted to the steady window
  double f_bar0_window = 0.0;
  double bound_window = 0.0;
  double measured = 0.0;   // sup ||x_k - xhat_k||_2 over the steady window
  bool satisfied = false;
  bool satisfied_window = false;
};

struct MetricsSummary {
  double band = 0.2;
  double window_start = 0.0;
  double rms_tracking = std::numeric_limits<double>::quiet_NaN();
  double time_to_band = std::numeric_limits<double>::quiet_NaN();
  double peak_estimate = 0.0;  // max |xhat_i| over all components and steps
  Vec peak_components;         // max |xhat_i| per stacked component
  double steady_error_sup = std::numeric_limits<double>::quiet_NaN();  // ||x - xhat||_inf
  std::vector<ChannelBound> bounds;
  bool diverged = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  std::size_t steps = 0;
  std::size_t records = 0;

  bool bounds_satisfied() const {
    return std::all_of(bounds.begin(), bounds.end(), [](const ChannelBound& b) { return b.satisfied; });
  }
};

// First time after which err stays strictly below band; +inf if the last
// sample is still outside.
inline double time_to_band(std::span<const double> t, std::span<const double> err, double band) {
  if (t.size() != err.size()) throw Error(ErrorKind::invalid_dimension, "time and error series differ in length");
  if (t.empty()) throw Error(ErrorKind::invalid_input, "empty series");
  std::size_t i = err.size();
  while (i > 0 && err[i - 1] < band) --i;
  if (i == 0) return t[0];
  if (i == err.size()) return std::numeric_limits<double>::infinity();
  return t[i];
}

struct RunOptions {
  bool keep_records = true;
  bool keep_info = false;
  std::function<void(const TrajectoryRecord&)> sink;
};

struct RunResult {
  MetricsSummary metrics;
  std::vector<TrajectoryRecord> records;
  Vec step_times;   // every macro step
  Vec step_errors;  // ||x - xhat||_inf at every macro step
};

struct ColumnLayout {
  std::vector<std::string> names;
};

inline ColumnLayout csv_columns(const ClosedLoop& loop) {
  ColumnLayout c;
  const std::size_t K = loop.channels();
  const std::size_t nx = loop.plant().state_dim();
  for (std::size_t i = 0; i < nx; ++i) c.names.push_back("x" + std::to_string(i + 1));
  for (std::size_t i = 0; i < nx; ++i) c.names.push_back("xhat" + std::to_string(i + 1));
  auto suffix = [K](std::size_t k) { return K == 1 ? std::string() : std::to_string(k + 1); };
  for (std::size_t k = 0; k < K; ++k) c.names.push_back("u" + suffix(k));
  for (std::size_t k = 0; k < K; ++k) c.names.push_back("y" + suffix(k));
  for (std::size_t k = 0; k < K; ++k) {
    const auto* m = dynamic_cast<const Mhgo*>(&loop.estimator(k));
    if (!m) continue;
    for (std::size_t i = 0; i < m->count(); ++i) c.names.push_back("beta" + suffix(k) + "_" + std::to_string(i + 1));
  }
  for (std::size_t k = 0; k < K; ++k)
    if (dynamic_cast<const MultiObserver*>(&loop.estimator(k))) c.names.push_back("sigma" + suffix(k));
  return c;
}

namespace detail {

struct ChannelAccumulator {
  const Mhgo* mhgo = nullptr;
  P0Quantities q;
  double a1 = 0.0, a1_window = 0.0;
  double f = 0.0, f_window = 0.0;
  double err_window = 0.0;
};

}  // namespace detail

inline RunResult run(const Scenario& sc, const RunOptions& opt = {}) {
  ClosedLoop loop = build_closed_loop(sc);
  const std::size_t K = loop.channels();
  const std::size_t nx = loop.plant().state_dim();
  const std::size_t N = sc.steps();
  const double dt = sc.dt;

  RunResult res;
  MetricsSummary& m = res.metrics;
  m.band = sc.output.band;
  m.window_start = sc.output.window_start;
  m.peak_components.assign(nx, 0.0);
  res.step_times.reserve(N + 1);
  res.step_errors.reserve(N + 1);

  std::vector<detail::ChannelAccumulator> acc(K);
  for (std::size_t k = 0; k < K; ++k) {
    acc[k].mhgo = dynamic_cast<const Mhgo*>(&loop.estimator(k));
    if (acc[k].mhgo) acc[k].q = p0_quantities(acc[k].mhgo->profile().kappa);
  }

  Vec s = loop.initial_state(sc.plant.x0);
  Rk4Stepper stepper(loop.state_dim());
  double track_sq = 0.0;
  std::size_t track_n = 0;
  double steady_sup = 0.0;
  std::vector<ReferenceSignal> refs;
  if (sc.controller.kind == ControllerKind::tracking) refs = build_controller(sc).references;

  auto observe = [&](std::size_t step, double t) {
    const LoopOutputs o = loop.outputs(t, t, s);
    const auto x = loop.plant_state(s);
    double err = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      err = std::max(err, std::abs(x[i] - o.xhat[i]));
      m.peak_components[i] = std::max(m.peak_components[i], std::abs(o.xhat[i]));
    }
    res.step_times.push_back(t);
    res.step_errors.push_back(err);
    const bool in_window = t >= sc.output.window_start - 1e-12;
    if (in_window) {
      steady_sup = std::max(steady_sup, err);
      if (!refs.empty()) {
        double sq = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
          const double d = x[loop.plant().offset(k)] - refs[k].y(t);
          sq += d * d;
        }
        track_sq += sq;
        ++track_n;
      }
    }
    const bool log = step % sc.output.stride == 0;
    for (std::size_t k = 0; k < K; ++k) {
      auto& a = acc[k];
      if (!a.mhgo) continue;
      a.f = std::max(a.f, std::abs(o.f[k]));
      const std::size_t off = loop.plant().offset(k), n = loop.plant().dims[k];
      if (in_window) {
        a.f_window = std::max(a.f_window, std::abs(o.f[k]));
        double e2 = 0.0;
        for (std::size_t r = 0; r < n; ++r) e2 += (x[off + r] - o.xhat[off + r]) * (x[off + r] - o.xhat[off + r]);
        a.err_window = std::max(a.err_window, std::sqrt(e2));
      }
      if (log && !a.mhgo->frozen()) {
        const double a1 = a1_sample(*a.mhgo, loop.estimator_state(k, s), a.q);
        a.a1 = std::max(a.a1, a1);
        if (in_window) a.a1_window = std::max(a.a1_window, a1);
      }
    }
    if (!log) return;
    TrajectoryRecord rec;
    rec.t = t;
    rec.x.assign(x.begin(), x.end());
    rec.xhat = o.xhat;
    rec.u = o.u;
    rec.y = o.y;
    for (std::size_t k = 0; k < K; ++k) {
      const Estimator& e = loop.estimator(k);
      const auto es = loop.estimator_state(k, s);
      if (acc[k].mhgo) {
        rec.beta.push_back(e.weights(es));
        if (opt.keep_info && !acc[k].mhgo->frozen()) {
          const RlsState r = acc[k].mhgo->rls(es);
          rec.info.emplace_back(r.info.data().begin(), r.info.data().end());
        }
      }
      if (auto sel = e.selection(es)) rec.sigma.push_back(*sel);
    }
    ++m.records;
    if (opt.sink) opt.sink(rec);
    if (opt.keep_records) res.records.push_back(std::move(rec));
  };

  observe(0, 0.0);
  for (std::size_t step = 0; step < N; ++step) {
    const double t = static_cast<double>(step) * dt;
    const double hold = t;
    auto f = [&](double tt, std::span<const double> xs, std::span<double> dxs) { loop.derivative(tt, hold, xs, dxs); };
    const std::size_t sub = substeps_for(dt, loop.stiffness(t, s));
    try {
      stepper.macro_step(f, t, s, dt, sub);
    } catch (const DivergenceError& e) {
      m.diverged = true;
      m.escape_time = e.time();
      m.steps = step;
      return res;
    }
    const double t_next = static_cast<double>(step + 1) * dt;
    loop.after_step(t_next, s);
    observe(step + 1, t_next);
  }
  m.steps = N;

  m.peak_estimate = m.peak_components.empty() ? 0.0 : *std::max_element(m.peak_components.begin(), m.peak_components.end());
  m.time_to_band = time_to_band(res.step_times, res.step_errors, m.band);
  m.steady_error_sup = steady_sup;
  if (track_n > 0) m.rms_tracking = std::sqrt(track_sq / static_cast<double>(track_n));

  for (std::size_t k = 0; k < K; ++k) {
    const auto& a = acc[k];
    if (!a.mhgo) continue;
    ChannelBound b;
    b.channel = k;
    b.variant = a.mhgo->frozen() ? BoundVariant::single_observer : BoundVariant::fused;
    b.nu_bar = sc.noise.bound;
    b.a1 = a.a1;
    b.f_bar0 = a.f;
    b.a1_window = a.a1_window;
    b.f_bar0_window = a.f_window;
    const ObserverGainProfile& prof = a.mhgo->profile();
    b.bound = ultimate_bound(make_bound_inputs(prof, a.q, b.f_bar0, b.nu_bar, b.a1), a.q, b.variant);
    b.bound_window =
        ultimate_bound(make_bound_inputs(prof, a.q, b.f_bar0_window, b.nu_bar, b.a1_window), a.q, b.variant);
    b.measured = a.err_window;
    b.satisfied = b.measured <= b.bound;
    b.satisfied_window = b.measured <= b.bound_window;
    m.bounds.push_back(b);
  }
  return res;
}

}  // namespace mhgo
