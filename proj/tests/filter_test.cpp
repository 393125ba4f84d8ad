#include "telesim/filter.hpp"

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>
#include <vector>

namespace telesim {
namespace {

// Independent brute-force oracle: plain (non-Joseph) scalar-array Riccati
// iteration for the same constant-velocity model.
struct RiccatiOracle {
  double p00, p01, p11;

  void predict(double dt, double q) {
    // P <- F P F^T + Q
    const double n00 = p00 + dt * (p01 + p01) + dt * dt * p11;
    const double n01 = p01 + dt * p11;
    const double n11 = p11;
    const double dt2 = dt * dt;
    p00 = n00 + q * dt2 * dt2 / 4.0;
    p01 = n01 + q * dt2 * dt / 2.0;
    p11 = n11 + q * dt2;
  }

  void update(double r) {
    const double s = p00 + r;
    const double k0 = p00 / s;
    const double k1 = p01 / s;
    const double n00 = (1.0 - k0) * p00;
    const double n01 = (1.0 - k0) * p01;
    const double n11 = p11 - k1 * p01;
    p00 = n00;
    p01 = n01;
    p11 = n11;
  }
};

TEST(KfStep, ZeroMeasurementNoiseSnapsToMeasurement) {
  KalmanConfig cfg;
  cfg.r = 0.0;
  KalmanState s = kalman_init(Vec3(1.0, 2.0, 3.0), cfg);
  const Vec3 z(4.0, 5.0, 6.0);
  s = kf_step(s, z, cfg);
  EXPECT_EQ(s.position(), z);
}

TEST(KfStep, ConstantStreamConverges) {
  KalmanConfig cfg;
  const Vec3 c(7.0, -2.0, 0.5);
  KalmanState s = kalman_init(c, cfg);
  for (int i = 0; i < 2000; ++i) s = kf_step(s, c, cfg);
  EXPECT_LT((s.position() - c).norm(), 1e-9);
  EXPECT_LT(s.velocity().norm(), 1e-9);
}

TEST(KfStep, SteadyStateCovarianceMatchesRiccatiOracle) {
  KalmanConfig cfg;
  KalmanState s = kalman_init(Vec3::Zero(), cfg);
  RiccatiOracle oracle{cfg.r, 0.0, 1e6};
  for (int i = 0; i < 10000; ++i) {
    s = kf_step(s, Vec3::Zero(), cfg);
    oracle.predict(cfg.dt_s, cfg.q);
    oracle.update(cfg.r);
  }
  for (int a = 0; a < 3; ++a) {
    EXPECT_NEAR(s.cov[a](0, 0), oracle.p00, 1e-8);
    EXPECT_NEAR(s.cov[a](0, 1), oracle.p01, 1e-8);
    EXPECT_NEAR(s.cov[a](1, 1), oracle.p11, 1e-8);
  }
}

TEST(KfStep, CovariancePsdAfterEveryStep) {
  KalmanConfig cfg;
  std::mt19937_64 rng(21);
  KalmanState s = kalman_init(Vec3::Zero(), cfg);
  for (int i = 0; i < 500; ++i) {
    s = kf_step(s, Vec3(uniform(rng, -50, 50), uniform(rng, -50, 50),
                        uniform(rng, -50, 50)),
                cfg);
    for (int a = 0; a < 3; ++a) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(s.cov[a]);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
      EXPECT_NEAR(s.cov[a](0, 1), s.cov[a](1, 0), 1e-12);
    }
  }
}

TEST(KfStep, RejectsNonFiniteMeasurement) {
  KalmanConfig cfg;
  KalmanState s = kalman_init(Vec3::Zero(), cfg);
  EXPECT_THROW(kf_step(s, Vec3(std::nan(""), 0, 0), cfg), NonFiniteMeasurement);
  EXPECT_THROW(kalman_init(Vec3(INFINITY, 0, 0), cfg), NonFiniteMeasurement);
}

TEST(FilterStream, SingleMeasurementZeroNoise) {
  KalmanConfig cfg;
  cfg.r = 0.0;
  const auto out = filter_stream({Vec3(1.5, 0, -2)}, cfg);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], Vec3(1.5, 0, -2));
}

TEST(FilterStream, AllZeroStream) {
  KalmanConfig cfg;
  const std::vector<Vec3> in(20, Vec3::Zero());
  for (const Vec3& v : filter_stream(in, cfg)) EXPECT_LT(v.norm(), 1e-12);
}

TEST(FilterStream, SmoothsNoisyRamp) {
  KalmanConfig cfg;
  std::mt19937_64 rng(5);
  const double slope = 20.0;  // mm/s
  std::vector<Vec3> truth, noisy;
  for (int i = 0; i < 600; ++i) {
    const double t = i * cfg.dt_s;
    const Vec3 p(slope * t, 0.0, 0.0);
    truth.push_back(p);
    noisy.push_back(p + Vec3(0.3 * gaussian(rng), 0.3 * gaussian(rng),
                             0.3 * gaussian(rng)));
  }
  const auto filtered = filter_stream(noisy, cfg);
  double raw_sq = 0.0, filt_sq = 0.0;
  for (std::size_t i = 100; i < truth.size(); ++i) {  // skip settle-in
    raw_sq += (noisy[i] - truth[i]).squaredNorm();
    filt_sq += (filtered[i] - truth[i]).squaredNorm();
  }
  EXPECT_LT(std::sqrt(filt_sq), std::sqrt(raw_sq));
}

TEST(FilterStream, Deterministic) {
  KalmanConfig cfg;
  std::mt19937_64 rng(9);
  std::vector<Vec3> in;
  for (int i = 0; i < 200; ++i)
    in.push_back(Vec3(uniform(rng, -10, 10), uniform(rng, -10, 10),
                      uniform(rng, -10, 10)));
  const auto a = filter_stream(in, cfg);
  const auto b = filter_stream(in, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
}

TEST(FilterStream, VarianceReducedOnNoisyConstant) {
  KalmanConfig cfg;
  std::mt19937_64 rng(31);
  std::vector<Vec3> in;
  for (int i = 0; i < 2000; ++i)
    in.push_back(Vec3(0.5 * gaussian(rng), 0, 0));
  const auto out = filter_stream(in, cfg);
  const auto var_x = [](const std::vector<Vec3>& v, std::size_t from) {
    double mean = 0.0;
    for (std::size_t i = from; i < v.size(); ++i) mean += v[i].x();
    mean /= static_cast<double>(v.size() - from);
    double acc = 0.0;
    for (std::size_t i = from; i < v.size(); ++i)
      acc += (v[i].x() - mean) * (v[i].x() - mean);
    return acc / static_cast<double>(v.size() - from);
  };
  EXPECT_LE(var_x(out, 200), var_x(in, 200));
}

}  // namespace
}  // namespace telesim
