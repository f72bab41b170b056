#pragma once

// Output-feedback closed loop: plant, one estimator per measured channel,
// and a controller fed with the estimates.
//
// Joint state layout: [x | s_1 | ... | s_K | theta]

#include <algorithm>
#include <cstddef>
#include <memory>
#include <span>
#include <utility>
#include <vector>

#include "mhgo/control.hpp"
#include "mhgo/error.hpp"
#include "mhgo/numerics.hpp"
#include "mhgo/observers.hpp"
#include "mhgo/plant.hpp"

namespace mhgo {

struct LoopOutputs {
  Vec xhat;  // stacked estimates, same layout as x
  Vec u;     // one per channel
  Vec y;     // one per channel
  Vec f;     // f_k(x, u_k), one per channel
};

class ClosedLoop {
 public:
  ClosedLoop(Plant plant, std::vector<std::unique_ptr<Estimator>> estimators, ControllerSpec controller,
             NoiseModel noise)
      : plant_(std::move(plant)), estimators_(std::move(estimators)), controller_(std::move(controller)),
        noise_(noise) {
    const std::size_t K = plant_.channels();
    if (estimators_.size() != K) throw Error(ErrorKind::invalid_dimension, "need one estimator per channel");
    if (controller_.channels != K) throw Error(ErrorKind::invalid_dimension, "controller channel count");
    for (std::size_t k = 0; k < K; ++k) {
      if (!estimators_[k]) throw Error(ErrorKind::invalid_input, "null estimator");
      if (estimators_[k]->n() != plant_.dims[k]) throw Error(ErrorKind::invalid_dimension, "estimator order");
      channel_noise_.push_back(noise_.channel(k));
    }
    std::size_t off = plant_.state_dim();
    for (const auto& e : estimators_) {
      est_offset_.push_back(off);
      off += e->state_size();
    }
    theta_offset_ = off;
    dim_ = off + controller_.theta_dim;
    if (controller_.theta0.size() != controller_.theta_dim)
      throw Error(ErrorKind::invalid_dimension, "theta0 does not match theta_dim");
    xhat_.resize(plant_.state_dim());
    u_.resize(K);
    y_.resize(K);
  }

  const Plant& plant() const { return plant_; }
  const Estimator& estimator(std::size_t k) const { return *estimators_.at(k); }
  std::size_t channels() const { return plant_.channels(); }
  std::size_t state_dim() const { return dim_; }

  Vec initial_state(std::span<const double> x0) const {
    if (x0.size() != plant_.state_dim()) throw Error(ErrorKind::invalid_dimension, "x0 does not match plant");
    Vec s(x0.begin(), x0.end());
    for (const auto& e : estimators_) {
      const Vec si = e->initial_state();
      s.insert(s.end(), si.begin(), si.end());
    }
    s.insert(s.end(), controller_.theta0.begin(), controller_.theta0.end());
    return s;
  }

  std::span<const double> plant_state(std::span<const double> s) const { return s.first(plant_.state_dim()); }
  std::span<const double> estimator_state(std::size_t k, std::span<const double> s) const {
    return s.subspan(est_offset_[k], estimators_[k]->state_size());
  }

  // Measurements use the noise sample held at hold_time (the macro-step start).
  void derivative(double t, double hold_time, std::span<const double> s, std::span<double> ds) const {
    evaluate(t, hold_time, s);
    const std::size_t K = channels();
    plant_.derivative(plant_state(s), u_, ds.first(plant_.state_dim()));
    for (std::size_t k = 0; k < K; ++k) {
      const auto& e = *estimators_[k];
      e.derivative(t, estimator_state(k, s), y_[k], u_[k], ds.subspan(est_offset_[k], e.state_size()));
    }
    if (controller_.theta_dim > 0)
      controller_.h(xhat_, s.subspan(theta_offset_, controller_.theta_dim), t,
                    ds.subspan(theta_offset_, controller_.theta_dim));
  }

  LoopOutputs outputs(double t, double hold_time, std::span<const double> s) const {
    evaluate(t, hold_time, s);
    LoopOutputs o{xhat_, u_, y_, Vec(channels())};
    for (std::size_t k = 0; k < channels(); ++k) o.f[k] = plant_.f(k, plant_state(s), u_[k]);
    return o;
  }

  double stiffness(double t, std::span<const double> s) const {
    double r = plant_.stiffness ? plant_.stiffness(plant_state(s)) : 0.0;
    for (std::size_t k = 0; k < channels(); ++k) r = std::max(r, estimators_[k]->stiffness(t, estimator_state(k, s)));
    return r;
  }

  void after_step(double t, std::span<double> s) const {
    for (std::size_t k = 0; k < channels(); ++k)
      estimators_[k]->after_step(t, s.subspan(est_offset_[k], estimators_[k]->state_size()));
  }

 private:
  void evaluate(double t, double hold_time, std::span<const double> s) const {
    const auto x = plant_state(s);
    for (std::size_t k = 0; k < channels(); ++k) {
      const std::size_t off = plant_.offset(k), n = plant_.dims[k];
      y_[k] = measure(x.subspan(off, n), channel_noise_[k], hold_time);
      estimators_[k]->estimate(estimator_state(k, s), x.subspan(off, n), std::span<double>(xhat_).subspan(off, n));
    }
    const auto theta = s.subspan(theta_offset_, controller_.theta_dim);
    for (std::size_t k = 0; k < channels(); ++k)
      u_[k] = saturate(controller_.g(k, xhat_, theta, t), controller_.saturation);
  }

  Plant plant_;
  std::vector<std::unique_ptr<Estimator>> estimators_;
  ControllerSpec controller_;
  NoiseModel noise_;
  std::vector<NoiseModel> channel_noise_;
  std::vector<std::size_t> est_offset_;
  std::size_t theta_offset_ = 0;
  std::size_t dim_ = 0;
  mutable Vec xhat_, u_, y_;
};

}  // namespace mhgo
