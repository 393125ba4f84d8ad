#include "telesim/metrics.hpp"

#include <gtest/gtest.h>

#include <random>

#include "test_util.hpp"

namespace telesim {
namespace {

using testutil::random_rigid_transform;
using testutil::random_vec3;

TrajectorySample make_sample(double t_ms, Hand hand, const Vec3& p,
                             double clearance = 10.0, bool contact = false,
                             std::uint64_t punctures = 0, double frame_ms = 0.0) {
  TrajectorySample s;
  s.t_ms = t_ms;
  s.hand = hand;
  s.p = p;
  s.clearance_mm = clearance;
  s.in_contact = contact;
  s.punctures_cum = punctures;
  s.frame_ms = frame_ms;
  return s;
}

TEST(PathLength, ClosedSquare) {
  std::vector<TrajectorySample> log;
  const Vec3 corners[5] = {{0, 0, 0}, {10, 0, 0}, {10, 10, 0}, {0, 10, 0}, {0, 0, 0}};
  for (int i = 0; i < 5; ++i)
    log.push_back(make_sample(i * 100.0, Hand::Right, corners[i]));
  EXPECT_NEAR(path_length(log), 40.0, 1e-12);
}

TEST(PathLength, SingleSampleIsZero) {
  EXPECT_EQ(path_length({make_sample(0, Hand::Left, Vec3::Zero())}), 0.0);
}

TEST(PathLength, EmptyLogThrows) { EXPECT_THROW(path_length({}), EmptyLog); }

TEST(PathLength, MatchesBruteForceSum) {
  std::mt19937_64 rng(89);
  std::vector<TrajectorySample> log;
  Vec3 p = Vec3::Zero();
  double oracle = 0.0;
  for (int i = 0; i < 500; ++i) {
    log.push_back(make_sample(i * 11.0, Hand::Right, p));
    const Vec3 step = random_vec3(rng, -2.0, 2.0);
    if (i + 1 < 500) oracle += step.norm();
    p += step;
  }
  EXPECT_NEAR(path_length(log), oracle, 1e-9);
}

TEST(PathLength, InvariantUnderRigidTransform) {
  std::mt19937_64 rng(97);
  std::vector<TrajectorySample> log;
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < 200; ++i) {
    log.push_back(make_sample(i * 11.0, Hand::Right, p));
    p += random_vec3(rng, -3.0, 3.0);
  }
  const double base = path_length(log);
  const RigidTransform t = random_rigid_transform(rng);
  auto moved = log;
  for (auto& s : moved) s.p = t.apply(s.p);
  EXPECT_NEAR(path_length(moved), base, 1e-9);
}

TEST(Kinematics, UniformMotion) {
  std::vector<TrajectorySample> log;
  const double dt_ms = 100.0;
  for (int i = 0; i <= 20; ++i)  // 10 mm/s along x for 2 s
    log.push_back(make_sample(i * dt_ms, Hand::Right, Vec3(i * 1.0, 0, 0)));
  const Kinematics k = kinematics(log);
  EXPECT_NEAR(k.duration_s, 2.0, 1e-12);
  EXPECT_NEAR(k.v_mean_mm_s, 10.0, 1e-9);
  EXPECT_NEAR(k.v_max_mm_s, 10.0, 1e-9);
  EXPECT_NEAR(k.speed_sd_mm_s, 0.0, 1e-9);
}

TEST(Kinematics, StationaryAllZero) {
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 10; ++i)
    log.push_back(make_sample(i * 100.0, Hand::Left, Vec3(1, 2, 3)));
  const Kinematics k = kinematics(log);
  EXPECT_EQ(k.v_mean_mm_s, 0.0);
  EXPECT_EQ(k.v_max_mm_s, 0.0);
  EXPECT_EQ(k.speed_sd_mm_s, 0.0);
}

TEST(Kinematics, TwoPhaseSpeedProfile) {
  // equal sample counts at 5 mm/s then 15 mm/s: mean 10, population SD 5
  std::vector<TrajectorySample> log;
  double x = 0.0;
  double t = 0.0;
  log.push_back(make_sample(t, Hand::Right, Vec3(x, 0, 0)));
  for (int i = 0; i < 10; ++i) {
    t += 100.0;
    x += 0.5;
    log.push_back(make_sample(t, Hand::Right, Vec3(x, 0, 0)));
  }
  for (int i = 0; i < 10; ++i) {
    t += 100.0;
    x += 1.5;
    log.push_back(make_sample(t, Hand::Right, Vec3(x, 0, 0)));
  }
  const Kinematics k = kinematics(log);
  EXPECT_NEAR(k.v_mean_mm_s, 10.0, 1e-9);
  EXPECT_NEAR(k.speed_sd_mm_s, 5.0, 1e-9);
}

TEST(CollisionMetrics, NoContactIsZero) {
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 50; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Right, Vec3::Zero()));
  const CollisionMetrics c = collision_metrics(log);
  EXPECT_EQ(c.collision_time_s, 0.0);
  EXPECT_EQ(c.puncture_count, 0u);
}

TEST(CollisionMetrics, ThirtyContactSamplesAtNinetyHz) {
  const double period_ms = 1000.0 / 90.0;
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 100; ++i) {
    const bool contact = i >= 10 && i < 40;  // 30 samples
    log.push_back(
        make_sample(i * period_ms, Hand::Right, Vec3::Zero(), 0.0, contact));
  }
  EXPECT_NEAR(collision_metrics(log).collision_time_s, 30.0 / 90.0, 1e-9);
}

TEST(CollisionMetrics, PunctureCountFromCumulativeColumn) {
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 10; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Right, Vec3::Zero(), 10.0, false,
                              i < 4 ? 0 : (i < 8 ? 1 : 2)));
  EXPECT_EQ(collision_metrics(log).puncture_count, 2u);
}

TEST(CollisionMetrics, CollisionTimeNeverExceedsDuration) {
  std::mt19937_64 rng(101);
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 300; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Right, Vec3::Zero(), 0.0,
                              uniform01(rng) < 0.5));
  const double tau = collision_metrics(log).collision_time_s;
  const double total = kinematics(log).duration_s;
  EXPECT_LE(tau, total + 1e-9);
}

TEST(ClearanceMetrics, CountsStrictSubMillimeterProximity) {
  std::vector<TrajectorySample> log;
  log.push_back(make_sample(0, Hand::Right, Vec3::Zero(), 2.0));
  log.push_back(make_sample(11, Hand::Right, Vec3::Zero(), 0.5));
  log.push_back(make_sample(22, Hand::Right, Vec3::Zero(), 1.5));
  const ClearanceMetrics c = clearance_metrics(log);
  ASSERT_TRUE(c.min_right_mm.has_value());
  EXPECT_NEAR(*c.min_right_mm, 0.5, 1e-12);
  EXPECT_FALSE(c.min_left_mm.has_value());
  EXPECT_NEAR(c.rho_sub_mm, 1.0 / 3.0, 1e-12);
}

TEST(ClearanceMetrics, AllFarIsZeroRho) {
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 10; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Left, Vec3::Zero(), 5.0));
  EXPECT_EQ(clearance_metrics(log).rho_sub_mm, 0.0);
}

TEST(ClearanceMetrics, ContactCountsAsCollisionNotProximity) {
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 10; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Right, Vec3::Zero(), 0.0, true));
  const ClearanceMetrics c = clearance_metrics(log);
  EXPECT_EQ(*c.min_right_mm, 0.0);
  EXPECT_EQ(c.rho_sub_mm, 0.0);
}

TEST(AnchorDistance, HeldAtApex) {
  const Vec3 apex(5, 5, 5);
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 5; ++i) log.push_back(make_sample(i * 11.0, Hand::Left, apex));
  const AnchorStats a = anchor_distance(log, apex, Hand::Left);
  EXPECT_EQ(a.d_min_mm, 0.0);
  EXPECT_EQ(a.d_mean_mm, 0.0);
}

TEST(AnchorDistance, ConstantOffset) {
  const Vec3 apex(0, 0, 0);
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 5; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Left, Vec3(3, 0, 0)));
  const AnchorStats a = anchor_distance(log, apex, Hand::Left);
  EXPECT_NEAR(a.d_min_mm, 3.0, 1e-12);
  EXPECT_NEAR(a.d_mean_mm, 3.0, 1e-12);
}

TEST(AnchorDistance, MinNeverExceedsMean) {
  std::mt19937_64 rng(103);
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 100; ++i)
    log.push_back(make_sample(i * 11.0, Hand::Right, random_vec3(rng, -20, 20)));
  const AnchorStats a = anchor_distance(log, Vec3(1, 2, 3), Hand::Right);
  EXPECT_LE(a.d_min_mm, a.d_mean_mm);
}

TEST(AnchorAccuracy, DeltaPerTableDefinition) {
  const Vec3 apex(0, 0, 0);
  std::vector<TrajectorySample> baseline, treatment;
  for (int i = 0; i < 4; ++i) {
    baseline.push_back(make_sample(i * 11.0, Hand::Left, Vec3(5, 0, 0)));
    treatment.push_back(make_sample(i * 11.0, Hand::Left, Vec3(3, 0, 0)));
  }
  const AnchorAccuracy acc = anchor_accuracy(baseline, treatment, apex, Hand::Left);
  EXPECT_NEAR(acc.delta_d_mm, 2.0, 1e-12);  // mean(baseline) - mean(treatment)
}

TEST(AnchorAccuracy, MissingHandThrows) {
  std::vector<TrajectorySample> right_only = {
      make_sample(0, Hand::Right, Vec3::Zero())};
  EXPECT_THROW(anchor_distance(right_only, Vec3::Zero(), Hand::Left),
               MissingCondition);
}

TEST(FpsStats, ConstantFrameTime) {
  const std::vector<double> frames(50, 1000.0 / 90.0);
  const FpsStats f = fps_stats(frames);
  EXPECT_NEAR(f.fps_avg, 90.0, 1e-9);
  EXPECT_NEAR(f.fps_p1, 90.0, 1e-9);
}

TEST(FpsStats, WorstOnePercentFrame) {
  // 99 frames at 10 ms plus one 50 ms stall: p1% low = 20 Hz
  std::vector<double> frames(99, 10.0);
  frames.push_back(50.0);
  const FpsStats f = fps_stats(frames);
  EXPECT_NEAR(f.fps_avg, 1000.0 / 10.4, 1e-9);
  EXPECT_NEAR(f.fps_p1, 20.0, 1e-9);
}

TEST(FpsStats, EmptyThrows) { EXPECT_THROW(fps_stats({}), EmptyLog); }

TEST(ComputeMetrics, DeterministicOverRepeatedCalls) {
  std::mt19937_64 rng(107);
  std::vector<TrajectorySample> log;
  for (int i = 0; i < 200; ++i)
    log.push_back(make_sample(i * 11.0,
                              i % 2 == 0 ? Hand::Left : Hand::Right,
                              random_vec3(rng, -20, 20),
                              uniform(rng, 0.0, 3.0), uniform01(rng) < 0.2, 0,
                              1000.0 / 90.0));
  const MetricsReport a = compute_metrics(log, Vec3(0, 0, 0));
  const MetricsReport b = compute_metrics(log, Vec3(0, 0, 0));
  EXPECT_EQ(a.path_length_mm, b.path_length_mm);
  EXPECT_EQ(a.v_mean_mm_s, b.v_mean_mm_s);
  EXPECT_EQ(a.speed_sd_mm_s, b.speed_sd_mm_s);
  EXPECT_EQ(a.collision_time_s, b.collision_time_s);
  EXPECT_EQ(a.rho_sub_mm, b.rho_sub_mm);
  EXPECT_EQ(a.anchor_left->d_mean_mm, b.anchor_left->d_mean_mm);
}

}  // namespace
}  // namespace telesim
