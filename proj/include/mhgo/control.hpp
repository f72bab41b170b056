#pragma once

// Benchmark state-feedback laws and the saturation that keeps them
// globally bounded. Output feedback is obtained by handing these laws an
// estimate instead of the true state (see closed_loop.hpp).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/plant.hpp"

namespace mhgo {

inline double saturate(double u, double limit) {
  if (!(limit > 0.0)) throw Error(ErrorKind::invalid_parameter, "saturation limit must be positive");
  return std::clamp(u, -limit, limit);
}

struct ReferenceSignal {
  std::function<double(double)> y;
  std::function<double(double)> dy;
  std::function<double(double)> ddy;
};

inline ReferenceSignal underwater_reference() {
  return {[](double t) { return 5.0 + std::sin(2.0 * t); }, [](double t) { return 2.0 * std::cos(2.0 * t); },
          [](double t) { return -4.0 * std::sin(2.0 * t); }};
}

// y_1d = 0.3 sin t, y_2d = 0.3 cos t
inline ReferenceSignal pendulum_reference(int k_index) {
  if (k_index == 1)
    return {[](double t) { return 0.3 * std::sin(t); }, [](double t) { return 0.3 * std::cos(t); },
            [](double t) { return -0.3 * std::sin(t); }};
  if (k_index == 2)
    return {[](double t) { return 0.3 * std::cos(t); }, [](double t) { return -0.3 * std::sin(t); },
            [](double t) { return -0.3 * std::cos(t); }};
  throw Error(ErrorKind::invalid_parameter, "pendulum index must be 1 or 2");
}

struct UnderwaterControllerOptions {
  double a = 1.0;
  double saturation = 500.0;
  // The published law adds +4(psi' - y_d') + 4(psi - y_d), which makes the
  // tracking error unstable. Default is the stabilising sign; this flag
  // restores the literal expression.
  bool literal_signs = false;
};

// u = a psi'|psi'| + y_d'' - 4 (psi' - y_d') - 4 (psi - y_d), saturated.
inline double underwater_controller(std::span<const double> x, double t, const UnderwaterControllerOptions& opt = {}) {
  const ReferenceSignal ref = underwater_reference();
  const double sign = opt.literal_signs ? 1.0 : -1.0;
  const double u = opt.a * x[1] * std::abs(x[1]) + ref.ddy(t) + sign * 4.0 * (x[1] - ref.dy(t)) +
                   sign * 4.0 * (x[0] - ref.y(t));
  return saturate(u, opt.saturation);
}

// Feedback-linearising tracking law for pendulum k in {1, 2}.
inline double pendulum_controller(std::span<const double> x_k, double x_j1, double t, const PendulumParams& params,
                                  int k_index, double limit = 50.0) {
  const ReferenceSignal ref = pendulum_reference(k_index);
  const double f1 = pendulum_subsystem_f(params, x_k, x_j1, 0.0);
  const double v = -f1 + ref.ddy(t) - 7.0 * (x_k[1] - ref.dy(t)) - 12.0 * (x_k[0] - ref.y(t));
  return saturate(v / params.input_gain(), limit);
}

// u_k = g_k(x^, theta, t), theta' = h(x^, theta, t). Both benchmarks are
// static laws, so theta_dim is 0 there and h is never called.
struct ControllerSpec {
  std::size_t channels = 1;
  std::function<double(std::size_t k, std::span<const double> xhat, std::span<const double> theta, double t)> g;
  std::function<void(std::span<const double> xhat, std::span<const double> theta, double t, std::span<double> dtheta)>
      h;
  std::size_t theta_dim = 0;
  Vec theta0;
  double saturation = 1.0;
  std::vector<ReferenceSignal> references;  // one per channel, for tracking metrics
};

inline ControllerSpec underwater_tracking(const UnderwaterControllerOptions& opt) {
  ControllerSpec c;
  c.channels = 1;
  c.saturation = opt.saturation;
  c.g = [opt](std::size_t, std::span<const double> xhat, std::span<const double>, double t) {
    return underwater_controller(xhat, t, opt);
  };
  c.references = {underwater_reference()};
  return c;
}

inline ControllerSpec pendulum_tracking(const PendulumParams& params, double limit) {
  ControllerSpec c;
  c.channels = 2;
  c.saturation = limit;
  c.g = [params, limit](std::size_t k, std::span<const double> xhat, std::span<const double>, double t) {
    const std::size_t j = 1 - k;
    return pendulum_controller(xhat.subspan(2 * k, 2), xhat[2 * j], t, params, static_cast<int>(k + 1), limit);
  };
  c.references = {pendulum_reference(1), pendulum_reference(2)};
  return c;
}

inline ControllerSpec zero_controller(std::size_t channels) {
  ControllerSpec c;
  c.channels = channels;
  c.saturation = 1.0;
  c.g = [](std::size_t, std::span<const double>, std::span<const double>, double) { return 0.0; };
  return c;
}

}  // namespace mhgo
