#pragma once

// Canonical-form plants  x' = A x + B f(x, u),  y = x1 + nu(t),
// the two benchmark systems, and the sampled bounded measurement noise.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"

namespace mhgo {

struct PlantDefinition {
  std::size_t n = 0;
  std::function<double(std::span<const double> x, double u)> f;
  double f_bound = 0.0;  // bound of |f| over the operating region
  std::string label;
  // Optional |df/dx| scale (1/s) used to size integration substeps.
  std::function<double(std::span<const double> x)> stiffness;
};

inline Vec canonical_derivative(const PlantDefinition& plant, std::span<const double> x, double u) {
  if (x.size() != plant.n) throw Error(ErrorKind::invalid_dimension, "state dimension does not match plant");
  Vec dx(plant.n);
  for (std::size_t i = 0; i + 1 < plant.n; ++i) dx[i] = x[i + 1];
  dx[plant.n - 1] = plant.f(x, u);
  return dx;
}

// ---------------------------------------------------------------------------
// Noise

namespace detail {
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
}  // namespace detail

// Zero-order-hold uniform noise on [-bound, bound]. Sample j is a pure
// function of (seed, j), so replay does not depend on how the integrator
// subdivides time.
struct NoiseModel {
  double bound = 0.0;
  double sample_period = 1e-4;
  std::uint64_t seed = 0;

  std::uint64_t index_at(double t) const {
    if (t <= 0.0) return 0;
    // The small offset keeps t = j * period on sample j despite rounding.
    return static_cast<std::uint64_t>(std::floor(t / sample_period + 1e-9));
  }

  double sample(std::uint64_t j) const {
    if (bound == 0.0) return 0.0;
    const std::uint64_t h =
        detail::mix64(detail::mix64(seed) ^ (j * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
    const double unit = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
    return bound * (2.0 * unit - 1.0);
  }

  double at(double t) const { return sample(index_at(t)); }

  // Independent stream for measurement channel k.
  NoiseModel channel(std::size_t k) const {
    NoiseModel c = *this;
    c.seed = detail::mix64(seed ^ ((k + 1) * 0xA0761D6478BD642Full));
    return c;
  }
};

inline double measure(std::span<const double> x, const NoiseModel& noise, double t) {
  if (t < 0.0) throw Error(ErrorKind::invalid_parameter, "measurement time must be non-negative");
  if (x.empty()) throw Error(ErrorKind::invalid_dimension, "empty state");
  return x[0] + noise.at(t);
}

// ---------------------------------------------------------------------------
// Benchmarks

// psi'' + a psi' |psi'| = u
inline PlantDefinition underwater_vehicle(double a, double max_rate = 5.0, double input_limit = 500.0) {
  PlantDefinition p;
  p.n = 2;
  p.f = [a](std::span<const double> x, double u) { return u - a * x[1] * std::abs(x[1]); };
  p.f_bound = input_limit + a * max_rate * max_rate;
  p.label = "underwater_vehicle";
  p.stiffness = [a](std::span<const double> x) { return 2.0 * a * std::abs(x[1]); };
  return p;
}

inline PlantDefinition integrator_chain(std::size_t n) {
  PlantDefinition p;
  p.n = n;
  p.f = [](std::span<const double>, double) { return 0.0; };
  p.f_bound = 0.0;
  p.label = "integrator_chain";
  return p;
}

struct PendulumParams {
  double m = 1.0;   // kg, pendulum
  double M = 5.0;   // kg, cart
  double a = 0.2;   // m, spring attachment along the bar
  double l = 1.0;   // m
  double k = 1.0;   // N/m
  double g = 9.8;   // m/s^2

  double c() const { return m / (m + M); }

  void validate() const {
    for (double v : {m, M, a, l, k, g})
      if (!(v > 0.0)) throw Error(ErrorKind::invalid_parameter, "pendulum parameters must be positive");
  }

  double input_gain() const { return 1.0 / (c() * m * l * l); }
  double coupling() const { return k * a * (a - c() * l) / (c() * m * l * l); }
  double stiffness_term() const { return g / (c() * l) - coupling(); }
};

// F_k1(x) + F_k2 u_k for pendulum k, with x_j1 the other pendulum's angle.
inline double pendulum_subsystem_f(const PendulumParams& p, std::span<const double> x_k, double x_j1, double u_k) {
  const double f1 = p.stiffness_term() * x_k[0] - (p.m / p.M) * std::sin(x_k[0]) * x_k[1] * x_k[1] +
                    p.coupling() * x_j1;
  return f1 + p.input_gain() * u_k;
}

// ---------------------------------------------------------------------------
// Multi-channel plant: K canonical chains stacked in one state vector.
// Channel k's nonlinearity may read any component of the stacked state.

struct Plant {
  std::string label;
  std::vector<std::size_t> dims;
  std::function<double(std::size_t k, std::span<const double> x, double u_k)> f;
  std::vector<double> f_bounds;
  std::function<double(std::span<const double> x)> stiffness;

  std::size_t channels() const { return dims.size(); }
  std::size_t state_dim() const { return std::accumulate(dims.begin(), dims.end(), std::size_t{0}); }
  std::size_t offset(std::size_t k) const {
    return std::accumulate(dims.begin(), dims.begin() + static_cast<std::ptrdiff_t>(k), std::size_t{0});
  }

  void derivative(std::span<const double> x, std::span<const double> u, std::span<double> dx) const {
    std::size_t off = 0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
      const std::size_t n = dims[k];
      for (std::size_t i = 0; i + 1 < n; ++i) dx[off + i] = x[off + i + 1];
      dx[off + n - 1] = f(k, x, u[k]);
      off += n;
    }
  }

  static Plant single(PlantDefinition def) {
    Plant p;
    p.label = def.label;
    p.dims = {def.n};
    p.f_bounds = {def.f_bound};
    p.stiffness = def.stiffness;
    p.f = [fn = std::move(def.f)](std::size_t, std::span<const double> x, double u) { return fn(x, u); };
    return p;
  }
};

// Two pendulums on carts coupled by a spring; each is a 2-state chain.
// The bound assumes |angle| <= 1.5 rad, |rate| <= 5 rad/s and |u| <= 50.
inline Plant coupled_pendulums(const PendulumParams& params, double input_limit = 50.0) {
  params.validate();
  Plant p;
  p.label = "coupled_pendulums";
  p.dims = {2, 2};
  p.f = [params](std::size_t k, std::span<const double> x, double u) {
    const std::size_t j = 1 - k;
    return pendulum_subsystem_f(params, x.subspan(2 * k, 2), x[2 * j], u);
  };
  const double bound = params.input_gain() * input_limit + std::abs(params.stiffness_term()) * 1.5 +
                       (params.m / params.M) * 25.0 + std::abs(params.coupling()) * 1.5;
  p.f_bounds = {bound, bound};
  const double rate = std::sqrt(std::abs(params.stiffness_term()) + std::abs(params.coupling()));
  p.stiffness = [rate](std::span<const double>) { return rate; };
  return p;
}

}  // namespace mhgo
