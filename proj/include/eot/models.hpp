#pragma once

// Dynamic and measurement models: the zero-inflated Poisson (ZIP) object
// measurement set density, its split into a Bernoulli detection factor and a
// conditional Poisson factor, Gaussian single-measurement likelihood, uniform
// clutter and the nearly-constant-velocity transition.

#include <cmath>
#include <numbers>
#include <random>
#include <span>

#include "eot/stats.hpp"
#include "eot/types.hpp"

namespace eot {

/// Binary detection variable of an existing Bernoulli component.
enum class DetectionFlag : int { Missed = 0, Detected = 1 };

/// l(z | x) = N(z; position, extent).
inline double log_meas_likelihood(const Vec2& z, const ObjectState& x) {
  const Mat2& e = x.extent;
  const double det = e(0, 0) * e(1, 1) - e(0, 1) * e(1, 0);
  if (!(det > 0.0)) throw InvalidArgument("meas_likelihood: singular extent");
  const Vec2 d = z - x.kinematics.position;
  const double q = (e(1, 1) * d.x() * d.x() - (e(0, 1) + e(1, 0)) * d.x() * d.y() + e(0, 0) * d.y() * d.y()) / det;
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det) - 0.5 * q;
}

inline double meas_likelihood(const Measurement& z, const ObjectState& x) {
  return std::exp(log_meas_likelihood(z.value, x));
}

/// Probability that the object produces no measurement: 1 - pD + pD e^{-rate}.
inline double empty_set_likelihood(const ObjectState& x, const ModelParams& p) {
  const double pd = p.detection_probability(x);
  return 1.0 - pd + pd * std::exp(-x.rate);
}

inline double zip_set_log_density(std::span<const Measurement> w, const ObjectState& x, const ModelParams& p) {
  if (w.empty()) return std::log(empty_set_likelihood(x, p));
  const double pd = p.detection_probability(x);
  double out = safe_log(pd) - x.rate;
  const double log_rate = std::log(x.rate);
  for (const auto& z : w) out += log_rate + log_meas_likelihood(z.value, x);
  return out;
}

/// Detection factor: (present, D=1) -> pD e^{-rate}; (present, D=0) -> 1 - pD;
/// (absent, D=0) -> 1; (absent, D=1) -> 0.
inline double zip_factor_detection(DetectionFlag d, const ObjectState* x, const ModelParams& p) {
  if (x == nullptr) return d == DetectionFlag::Missed ? 1.0 : 0.0;
  const double pd = p.detection_probability(*x);
  return d == DetectionFlag::Detected ? pd * std::exp(-x->rate) : 1.0 - pd;
}

/// Conditional set density given the detection variable.
inline double zip_factor_conditional(std::span<const Measurement> w, DetectionFlag d, const ObjectState* x,
                                     const ModelParams&) {
  if (d == DetectionFlag::Missed) return w.empty() ? 1.0 : 0.0;
  if (x == nullptr) return 0.0;
  double log_v = 0.0;
  for (const auto& z : w) log_v += std::log(x->rate) + log_meas_likelihood(z.value, *x);
  return std::exp(log_v);
}

inline double clutter_intensity_at(const Vec2& z, const ModelParams& p) {
  if (p.region.degenerate()) throw InvalidArgument("clutter_intensity_at: degenerate region");
  return p.region.contains(z) ? p.clutter_rate / p.region.area() : 0.0;
}

inline MeasurementSet sample_object_measurements(const ObjectState& x, const ModelParams& p, Rng& rng) {
  MeasurementSet out;
  std::bernoulli_distribution detect(p.detection_probability(x));
  if (!detect(rng)) return out;
  std::poisson_distribution<int> count(x.rate);
  const int n = count(rng);
  out.reserve(n);
  for (int i = 0; i < n; ++i)
    out.push_back({sample_normal2(x.kinematics.position, x.extent, rng), i + 1});
  return out;
}

inline MeasurementSet sample_clutter(const ModelParams& p, Rng& rng) {
  MeasurementSet out;
  if (p.clutter_rate <= 0.0) return out;
  std::poisson_distribution<int> count(p.clutter_rate);
  std::uniform_real_distribution<double> ux(p.region.x_min, p.region.x_max), uy(p.region.y_min, p.region.y_max);
  const int n = count(rng);
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double x = ux(rng);
    out.push_back({Vec2(x, uy(rng)), i + 1});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Nearly constant velocity motion, applied independently per axis:
// F = [[1, T], [0, 1]], Q = q^2 [[T^3/3, T^2/2], [T^2/2, T]].

struct AxisTransition {
  Eigen::Matrix2d f;
  Eigen::Matrix2d q;
};

inline AxisTransition axis_transition(const ModelParams& p) {
  const double t = p.sampling_interval;
  if (!(t > 0.0)) throw InvalidArgument("transition: sampling interval must be positive");
  const double s2 = p.process_noise_std * p.process_noise_std;
  AxisTransition a;
  a.f << 1.0, t, 0.0, 1.0;
  a.q << t * t * t / 3.0, t * t / 2.0, t * t / 2.0, t;
  a.q *= s2;
  return a;
}

inline KinematicState transition_mean(const KinematicState& e, const ModelParams& p) {
  const double t = p.sampling_interval;
  return {e.position + t * e.velocity, e.velocity};
}

inline KinematicState transition_sample(const KinematicState& e, const ModelParams& p, Rng& rng) {
  KinematicState out = transition_mean(e, p);
  if (p.process_noise_std == 0.0) return out;
  const AxisTransition a = axis_transition(p);
  for (int axis = 0; axis < 2; ++axis) {
    const Vec2 n = sample_normal2(Vec2::Zero(), a.q, rng);
    out.position[axis] += n[0];
    out.velocity[axis] += n[1];
  }
  return out;
}

inline double transition_log_density(const KinematicState& next, const KinematicState& prev, const ModelParams& p) {
  const KinematicState mean = transition_mean(prev, p);
  if (p.process_noise_std == 0.0) {
    const bool same = next.position == mean.position && next.velocity == mean.velocity;
    return same ? std::numeric_limits<double>::infinity() : kNegInf;
  }
  const AxisTransition a = axis_transition(p);
  double out = 0.0;
  for (int axis = 0; axis < 2; ++axis) {
    const Vec2 x(next.position[axis], next.velocity[axis]);
    const Vec2 m(mean.position[axis], mean.velocity[axis]);
    out += log_normal2(x, m, a.q);
  }
  return out;
}

/// E[1 - pD + pD e^{-rate}] for rate ~ Gamma(shape, rate_param); uses the gamma
/// moment generating function at -1.
inline double expected_empty_likelihood_gamma(double p_detect, double shape, double rate_param) {
  if (!(shape > 0.0) || !(rate_param > 0.0)) throw InvalidArgument("expected_empty_likelihood_gamma: bad gamma");
  return 1.0 - p_detect + p_detect * std::exp(shape * std::log(rate_param / (rate_param + 1.0)));
}

}  // namespace eot
