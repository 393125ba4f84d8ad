#pragma once

#include <algorithm>

#include "telesim/frames.hpp"
#include "telesim/types.hpp"

namespace telesim {

struct WorkspaceBounds {
  Vec3 min_mm = Vec3(-300.0, -200.0, -100.0);
  Vec3 max_mm = Vec3(300.0, 200.0, 100.0);

  bool contains(const Vec3& p, double tol = 0.0) const {
    for (int i = 0; i < 3; ++i)
      if (p(i) < min_mm(i) - tol || p(i) > max_mm(i) + tol) return false;
    return true;
  }

  Vec3 clamp(const Vec3& p) const {
    Vec3 out;
    for (int i = 0; i < 3; ++i) out(i) = std::clamp(p(i), min_mm(i), max_mm(i));
    return out;
  }

  Vec3 center() const { return 0.5 * (min_mm + max_mm); }

  bool non_degenerate() const {
    return (max_mm - min_mm).minCoeff() > 0.0;
  }
};

struct TeleopConfig {
  double alpha = 1.0;  // motion scale, > 0
  RigidTransform hand_to_workspace;
  WorkspaceBounds bounds;
  double max_speed_mm_s = 200.0;
};

enum class GateState { Normal, SafeHold };

struct FollowerState {
  Vec3 pose = Vec3::Zero();  // workspace frame, mm
  bool clutch_engaged = true;
  GateState gate = GateState::Normal;
};

struct GateResult {
  Vec3 pose;
  GateState gate;
};

// Clamp into the workspace box, then shorten the step along its direction to
// respect the speed limit; a SafeHold link freezes at prev. prev is assumed
// in-bounds, so the shortened point stays in-bounds (box is convex).
inline GateResult safety_gate(const Vec3& candidate, const Vec3& prev,
                              const TeleopConfig& cfg, double dt_s,
                              LinkMode link = LinkMode::Live) {
  if (link == LinkMode::SafeHold) return {prev, GateState::SafeHold};
  Vec3 pose = cfg.bounds.clamp(candidate);
  const Vec3 step = pose - prev;
  const double len = step.norm();
  const double max_len = cfg.max_speed_mm_s * dt_s;
  if (len > max_len && len > 0.0) pose = prev + step * (max_len / len);
  return {pose, GateState::Normal};
}

// p_f += alpha * R_HW * delta_hand, then gated. A disengaged clutch leaves the
// state untouched, so re-engagement resumes from the current pose with no jump.
inline FollowerState apply_increment(const FollowerState& state,
                                     const Vec3& delta_hand,
                                     const TeleopConfig& cfg,
                                     double dt_s = 1.0 / 90.0,
                                     LinkMode link = LinkMode::Live) {
  if (!state.clutch_engaged) return state;
  FollowerState out = state;
  const Vec3 candidate =
      state.pose + cfg.alpha * (cfg.hand_to_workspace.rotation * delta_hand);
  const GateResult gated = safety_gate(candidate, state.pose, cfg, dt_s, link);
  out.pose = gated.pose;
  out.gate = gated.gate;
  return out;
}

inline FollowerState clutch(const FollowerState& state, bool engage) {
  FollowerState out = state;
  out.clutch_engaged = engage;
  return out;
}

}  // namespace telesim
