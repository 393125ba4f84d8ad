#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/types.hpp"

namespace telesim {

// One 90 Hz row of the run log.
struct TrajectorySample {
  double t_ms = 0.0;
  Hand hand = Hand::Right;
  Vec3 p = Vec3::Zero();  // follower pose, workspace frame, mm
  Vec3 f = Vec3::Zero();  // rendered force, N
  double clearance_mm = 0.0;
  bool in_contact = false;
  std::uint64_t punctures_cum = 0;
  std::uint32_t seq = 0;
  double frame_ms = 0.0;  // render frame time
};

struct AnchorStats {
  double d_min_mm = 0.0;
  double d_mean_mm = 0.0;
};

// Every Table-style outcome computed from one run log.
struct MetricsReport {
  double duration_s = 0.0;
  double path_length_mm = 0.0;  // summed across hands
  double v_mean_mm_s = 0.0;
  double v_max_mm_s = 0.0;
  double speed_sd_mm_s = 0.0;
  double collision_time_s = 0.0;
  std::uint64_t puncture_count = 0;
  std::optional<double> min_clearance_left_mm;
  std::optional<double> min_clearance_right_mm;
  double rho_sub_mm = 0.0;  // fraction of samples with 0 < clearance < 1 mm
  double fps_avg = 0.0;
  double fps_p1 = 0.0;
  std::optional<AnchorStats> anchor_left;
  std::optional<AnchorStats> anchor_right;
};

namespace detail {

inline std::vector<const TrajectorySample*> hand_stream(
    const std::vector<TrajectorySample>& samples, Hand hand) {
  std::vector<const TrajectorySample*> out;
  for (const auto& s : samples)
    if (s.hand == hand) out.push_back(&s);
  return out;
}

// Ceiling-method percentile ('higher'): smallest sample covering quantile q.
inline double percentile_higher(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t idx =
      std::min(values.size() - 1, static_cast<std::size_t>(std::ceil(pos)));
  return values[idx];
}

}  // namespace detail

// Sum of consecutive displacement norms, per hand, summed across hands.
inline double path_length(const std::vector<TrajectorySample>& samples) {
  if (samples.empty()) throw EmptyLog("no samples");
  double total = 0.0;
  for (Hand hand : {Hand::Left, Hand::Right}) {
    const auto stream = detail::hand_stream(samples, hand);
    for (std::size_t i = 1; i < stream.size(); ++i)
      total += (stream[i]->p - stream[i - 1]->p).norm();
  }
  return total;
}

struct Kinematics {
  double duration_s = 0.0;
  double v_mean_mm_s = 0.0;
  double v_max_mm_s = 0.0;
  double speed_sd_mm_s = 0.0;  // population SD of frame speeds
};

inline Kinematics kinematics(const std::vector<TrajectorySample>& samples) {
  if (samples.size() < 2) throw EmptyLog("need at least 2 samples");
  Kinematics k;
  double t_first = samples.front().t_ms, t_last = samples.front().t_ms;
  std::vector<double> speeds;
  for (Hand hand : {Hand::Left, Hand::Right}) {
    const auto stream = detail::hand_stream(samples, hand);
    for (std::size_t i = 0; i < stream.size(); ++i) {
      t_first = std::min(t_first, stream[i]->t_ms);
      t_last = std::max(t_last, stream[i]->t_ms);
      if (i == 0) continue;
      const double dt_s = (stream[i]->t_ms - stream[i - 1]->t_ms) / 1000.0;
      if (dt_s <= 0.0) continue;
      speeds.push_back((stream[i]->p - stream[i - 1]->p).norm() / dt_s);
    }
  }
  k.duration_s = (t_last - t_first) / 1000.0;
  if (speeds.empty()) return k;
  double sum = 0.0;
  for (double v : speeds) {
    sum += v;
    k.v_max_mm_s = std::max(k.v_max_mm_s, v);
  }
  k.v_mean_mm_s = sum / static_cast<double>(speeds.size());
  double sq = 0.0;
  for (double v : speeds) sq += (v - k.v_mean_mm_s) * (v - k.v_mean_mm_s);
  k.speed_sd_mm_s = std::sqrt(sq / static_cast<double>(speeds.size()));
  return k;
}

struct CollisionMetrics {
  double collision_time_s = 0.0;
  std::uint64_t puncture_count = 0;
};

// Each in-contact sample contributes its own frame duration (gap to the next
// sample; the last sample reuses the preceding gap). dt comes from actual
// timestamps so dropped frames are handled honestly.
inline CollisionMetrics collision_metrics(
    const std::vector<TrajectorySample>& samples) {
  if (samples.empty()) throw EmptyLog("no samples");
  CollisionMetrics out;
  for (Hand hand : {Hand::Left, Hand::Right}) {
    const auto stream = detail::hand_stream(samples, hand);
    if (stream.empty()) continue;
    out.puncture_count += stream.back()->punctures_cum;
    for (std::size_t i = 0; i < stream.size(); ++i) {
      if (!stream[i]->in_contact) continue;
      double dt_ms = 0.0;
      if (i + 1 < stream.size())
        dt_ms = stream[i + 1]->t_ms - stream[i]->t_ms;
      else if (i > 0)
        dt_ms = stream[i]->t_ms - stream[i - 1]->t_ms;
      out.collision_time_s += dt_ms / 1000.0;
    }
  }
  return out;
}

struct ClearanceMetrics {
  std::optional<double> min_left_mm;
  std::optional<double> min_right_mm;
  double rho_sub_mm = 0.0;
};

// rho counts strictly-outside proximity (0 < clearance < 1 mm); in-contact
// samples belong to collision time, not proximity.
inline ClearanceMetrics clearance_metrics(
    const std::vector<TrajectorySample>& samples) {
  if (samples.empty()) throw EmptyLog("no samples");
  ClearanceMetrics out;
  std::size_t sub_mm = 0;
  for (const auto& s : samples) {
    auto& slot = s.hand == Hand::Left ? out.min_left_mm : out.min_right_mm;
    slot = slot ? std::min(*slot, s.clearance_mm) : s.clearance_mm;
    if (s.clearance_mm > 0.0 && s.clearance_mm < 1.0) ++sub_mm;
  }
  out.rho_sub_mm = static_cast<double>(sub_mm) / static_cast<double>(samples.size());
  return out;
}

// Distance of one hand's tool tip to a fixed apex point.
inline AnchorStats anchor_distance(const std::vector<TrajectorySample>& samples,
                                   const Vec3& apex, Hand hand) {
  const auto stream = detail::hand_stream(samples, hand);
  if (stream.empty()) throw MissingCondition("no samples for requested hand");
  AnchorStats out;
  out.d_min_mm = std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (const auto* s : stream) {
    const double d = (s->p - apex).norm();
    out.d_min_mm = std::min(out.d_min_mm, d);
    sum += d;
  }
  out.d_mean_mm = sum / static_cast<double>(stream.size());
  return out;
}

struct AnchorAccuracy {
  AnchorStats baseline;
  AnchorStats treatment;
  double delta_d_mm = 0.0;  // mean(baseline) - mean(treatment)
};

inline AnchorAccuracy anchor_accuracy(
    const std::vector<TrajectorySample>& baseline,
    const std::vector<TrajectorySample>& treatment, const Vec3& apex,
    Hand support_hand) {
  AnchorAccuracy out;
  out.baseline = anchor_distance(baseline, apex, support_hand);
  out.treatment = anchor_distance(treatment, apex, support_hand);
  out.delta_d_mm = out.baseline.d_mean_mm - out.treatment.d_mean_mm;
  return out;
}

struct FpsStats {
  double fps_avg = 0.0;
  double fps_p1 = 0.0;  // 1000 / p99 frame time (worst 1% of frames)
};

inline FpsStats fps_stats(const std::vector<double>& frame_ms) {
  if (frame_ms.empty()) throw EmptyLog("no frame times");
  double sum = 0.0;
  for (double f : frame_ms) sum += f;
  FpsStats out;
  out.fps_avg = 1000.0 / (sum / static_cast<double>(frame_ms.size()));
  out.fps_p1 = 1000.0 / detail::percentile_higher(frame_ms, 0.99);
  return out;
}

// All metrics from one sample log. Anchor stats are filled when an apex is
// supplied and the hand is present.
inline MetricsReport compute_metrics(const std::vector<TrajectorySample>& samples,
                                     const std::optional<Vec3>& apex = {}) {
  if (samples.empty()) throw EmptyLog("no samples");
  MetricsReport rep;
  rep.path_length_mm = path_length(samples);
  if (samples.size() >= 2) {
    const Kinematics k = kinematics(samples);
    rep.duration_s = k.duration_s;
    rep.v_mean_mm_s = k.v_mean_mm_s;
    rep.v_max_mm_s = k.v_max_mm_s;
    rep.speed_sd_mm_s = k.speed_sd_mm_s;
  }
  const CollisionMetrics cm = collision_metrics(samples);
  rep.collision_time_s = cm.collision_time_s;
  rep.puncture_count = cm.puncture_count;
  const ClearanceMetrics cl = clearance_metrics(samples);
  rep.min_clearance_left_mm = cl.min_left_mm;
  rep.min_clearance_right_mm = cl.min_right_mm;
  rep.rho_sub_mm = cl.rho_sub_mm;
  std::vector<double> frame_ms;
  frame_ms.reserve(samples.size());
  for (const auto& s : samples)
    if (s.frame_ms > 0.0) frame_ms.push_back(s.frame_ms);
  if (!frame_ms.empty()) {
    const FpsStats fps = fps_stats(frame_ms);
    rep.fps_avg = fps.fps_avg;
    rep.fps_p1 = fps.fps_p1;
  }
  if (apex) {
    for (Hand hand : {Hand::Left, Hand::Right}) {
      if (detail::hand_stream(samples, hand).empty()) continue;
      const AnchorStats a = anchor_distance(samples, *apex, hand);
      (hand == Hand::Left ? rep.anchor_left : rep.anchor_right) = a;
    }
  }
  return rep;
}

}  // namespace telesim
