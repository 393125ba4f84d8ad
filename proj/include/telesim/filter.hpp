#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/types.hpp"

namespace telesim {

struct KalmanConfig {
  double dt_s = 1.0 / 90.0;  // command period
  double q = 100.0;          // white-accel process noise, (mm/s^2)^2
  double r = 0.01;           // measurement noise, mm^2
};

// Three independent per-axis constant-velocity filters.
// State per axis: [position mm, velocity mm/s], 2x2 covariance.
struct KalmanState {
  std::array<Eigen::Vector2d, 3> x = {Eigen::Vector2d::Zero(),
                                      Eigen::Vector2d::Zero(),
                                      Eigen::Vector2d::Zero()};
  std::array<Eigen::Matrix2d, 3> cov = {Eigen::Matrix2d::Zero(),
                                        Eigen::Matrix2d::Zero(),
                                        Eigen::Matrix2d::Zero()};
  bool initialized = false;

  Vec3 position() const { return {x[0](0), x[1](0), x[2](0)}; }
  Vec3 velocity() const { return {x[0](1), x[1](1), x[2](1)}; }
};

// State = first measurement, zero velocity, covariance diag(r, large): no
// startup transient leaks into the increments.
inline KalmanState kalman_init(const Vec3& first_measurement,
                               const KalmanConfig& cfg) {
  if (!is_finite(first_measurement))
    throw NonFiniteMeasurement("non-finite initial measurement");
  KalmanState s;
  for (int a = 0; a < 3; ++a) {
    s.x[a] << first_measurement(a), 0.0;
    s.cov[a] << cfg.r, 0.0, 0.0, 1e6;
  }
  s.initialized = true;
  return s;
}

// One predict+update cycle. Joseph-form update keeps the covariance PSD.
inline KalmanState kf_step(const KalmanState& state, const Vec3& measurement,
                           const KalmanConfig& cfg) {
  if (!is_finite(measurement))
    throw NonFiniteMeasurement("non-finite measurement");
  if (!state.initialized) return kalman_init(measurement, cfg);

  const double dt = cfg.dt_s;
  Eigen::Matrix2d f;
  f << 1.0, dt, 0.0, 1.0;
  Eigen::Matrix2d q_mat;
  const double dt2 = dt * dt;
  q_mat << dt2 * dt2 / 4.0, dt2 * dt / 2.0, dt2 * dt / 2.0, dt2;
  q_mat *= cfg.q;

  KalmanState out = state;
  for (int a = 0; a < 3; ++a) {
    Eigen::Vector2d x = f * state.x[a];
    Eigen::Matrix2d p = f * state.cov[a] * f.transpose() + q_mat;

    const double innovation = measurement(a) - x(0);
    const double s_var = p(0, 0) + cfg.r;
    if (s_var > 0.0) {
      const Eigen::Vector2d gain = p.col(0) / s_var;
      x += gain * innovation;
      Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity();
      ikh(0, 0) -= gain(0);
      ikh(1, 0) -= gain(1);
      p = ikh * p * ikh.transpose() + gain * cfg.r * gain.transpose();
    }
    out.x[a] = x;
    out.cov[a] = 0.5 * (p + p.transpose());  // keep symmetric
  }
  return out;
}

// Posterior positions after consuming measurements 0..i.
inline std::vector<Vec3> filter_stream(const std::vector<Vec3>& measurements,
                                       const KalmanConfig& cfg) {
  std::vector<Vec3> out;
  out.reserve(measurements.size());
  KalmanState s;
  for (const Vec3& m : measurements) {
    s = s.initialized ? kf_step(s, m, cfg) : kalman_init(m, cfg);
    out.push_back(s.position());
  }
  return out;
}

}  // namespace telesim
