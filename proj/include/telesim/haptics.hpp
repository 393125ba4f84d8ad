#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "telesim/geometry.hpp"
#include "telesim/types.hpp"

namespace telesim {

// Per-tissue interaction profile. Units in comments; defaults are the
// parenchyma tuning.
struct HapticMaterial {
  double k0 = 0.5;     // base stiffness, N/mm
  double u_gain = 0.3; // depth stiffness gain, N/mm^2: k(d) = k0 + u_gain*d
  bool quadratic_stiffness = false;  // alternative reading: k(d) = k0 + u_gain*d^2
  double b = 0.02;     // normal damping, N*s/mm
  double c0 = 0.005;   // tangential drag base, N*s/mm
  double c1 = 0.002;   // tangential drag depth gain, N*s/mm^2
  double q_t = 0.0002; // quadratic tangential drag, N*s^2/mm^2
  double c_g = 0.001;  // global viscous damping while in contact, N*s/mm

  double mu_s = 0.4;      // static friction coefficient
  double mu_k = 0.3;      // kinetic friction coefficient
  double v_s = 5.0;       // Stribeck velocity, mm/s
  double v_stick = 0.1;   // stick-regime regularization velocity, mm/s

  double f_thresh = 2.5;          // rupture threshold, N
  double puncture_drop = 0.5;     // stiffness multiplier held after rupture
  double puncture_window_ms = 50.0;
  double sigmoid_width = 0.1;     // rupture transition width, N
  double recovery_ms = 200.0;     // unloading-branch ramp back to intact

  double k_adh = 0.05;    // adhesion gain, N/mm
  double adh_range = 1.0; // adhesion range outside the surface, mm
};

inline double stiffness_gain(double d, const HapticMaterial& m) {
  return m.quadratic_stiffness ? m.k0 + m.u_gain * d * d : m.k0 + m.u_gain * d;
}

using MaterialRegistry = std::map<std::string, HapticMaterial, std::less<>>;

// Presets spanning the soft-tissue stiffness range 0.1-1.0 N/mm.
inline MaterialRegistry default_materials() {
  MaterialRegistry reg;
  HapticMaterial membrane;
  membrane.k0 = 0.3;
  membrane.u_gain = 0.3;
  membrane.b = 0.02;
  membrane.f_thresh = 1.0;
  reg.emplace("membrane", membrane);

  HapticMaterial parenchyma;  // defaults
  reg.emplace("parenchyma", parenchyma);

  HapticMaterial vessel_wall;
  vessel_wall.k0 = 1.0;
  vessel_wall.u_gain = 0.5;
  vessel_wall.b = 0.03;
  vessel_wall.c0 = 0.008;
  vessel_wall.f_thresh = 1.8;
  vessel_wall.mu_s = 0.5;
  vessel_wall.mu_k = 0.35;
  reg.emplace("vessel_wall", vessel_wall);
  return reg;
}

// ---------- Puncture hysteresis ----------

enum class PuncturePhase { Intact, Ruptured, Recovering };

struct PunctureState {
  PuncturePhase phase = PuncturePhase::Intact;
  double elapsed_ms = 0.0;          // time since rupture (Ruptured phase)
  double progress = 0.0;            // 0..1 through the recovery ramp
  double stiffness_modifier = 1.0;  // in [puncture_drop, 1]
  double hold_modifier = 1.0;       // modifier frozen at recovery start
  std::uint64_t rupture_count = 0;
};

namespace detail {

inline double smoothstep01(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Loading-branch stiffness modifier: sigmoid-shaped softening across
// [f_thresh - width, f_thresh + width]. Exactly 1 below the ramp (the intact
// branch is pure elastic there), exactly drop above it; slope w.r.t. force is
// bounded by 0.75*(1-drop)/width.
inline double puncture_load_modifier(double f_n, const HapticMaterial& m) {
  const double t = (f_n - m.f_thresh + m.sigmoid_width) / (2.0 * m.sigmoid_width);
  return 1.0 - (1.0 - m.puncture_drop) * smoothstep01(t);
}

}  // namespace detail

// Advance the hysteresis state one tick. f_n_mag is the loading-branch
// (intact-equivalent) elastic normal magnitude. A crossing of f_thresh while
// Intact counts one rupture; the modifier then holds its running minimum for
// puncture_window_ms (a broken membrane does not restiffen) and recovers to
// the loading branch along a smoothstep over recovery_ms.
inline PunctureState puncture_update(const PunctureState& state, double f_n_mag,
                                     const HapticMaterial& mat, double dt_ms) {
  PunctureState s = state;
  const double branch = detail::puncture_load_modifier(f_n_mag, mat);
  switch (s.phase) {
    case PuncturePhase::Intact:
      s.stiffness_modifier = branch;
      if (f_n_mag >= mat.f_thresh) {
        s.phase = PuncturePhase::Ruptured;
        s.elapsed_ms = 0.0;
        ++s.rupture_count;
      }
      break;
    case PuncturePhase::Ruptured:
      s.stiffness_modifier = std::min(s.stiffness_modifier, branch);
      s.elapsed_ms += dt_ms;
      if (s.elapsed_ms >= mat.puncture_window_ms) {
        s.phase = PuncturePhase::Recovering;
        s.progress = 0.0;
        s.hold_modifier = s.stiffness_modifier;
      }
      break;
    case PuncturePhase::Recovering:
      s.progress = std::min(1.0, s.progress + dt_ms / mat.recovery_ms);
      s.stiffness_modifier =
          s.hold_modifier +
          (branch - s.hold_modifier) * detail::smoothstep01(s.progress);
      if (s.progress >= 1.0) {
        s.phase = PuncturePhase::Intact;
        s.elapsed_ms = 0.0;
      }
      break;
  }
  return s;
}

// ---------- Force terms ----------

// modifier * (k0 + U*d) * d * n
inline Vec3 elastic_normal(double d, const Vec3& n, const HapticMaterial& mat,
                           const PunctureState& punct) {
  if (d <= 0.0) return Vec3::Zero();
  return punct.stiffness_modifier * stiffness_gain(d, mat) * d * n;
}

// -(c0 + c1*d)*v_t - q_t*|v_t|*v_t
inline Vec3 tangential_drag(double d, const Vec3& v_t, const HapticMaterial& mat) {
  return -(mat.c0 + mat.c1 * d) * v_t - mat.q_t * v_t.norm() * v_t;
}

// mu(v) = mu_k + (mu_s - mu_k) * exp(-(v/v_s)^2)
inline double stribeck_mu(double speed, const HapticMaterial& mat) {
  const double ratio = speed / mat.v_s;
  return mat.mu_k + (mat.mu_s - mat.mu_k) * std::exp(-ratio * ratio);
}

// Coulomb friction opposing v_t, magnitude mu(|v_t|)*F_n. Below v_stick the
// magnitude ramps linearly from zero (stick regime, capped at mu_s*F_n).
inline Vec3 friction_force(const ContactState& contact, double f_n_mag,
                           const HapticMaterial& mat) {
  if (contact.depth_mm <= 0.0 || f_n_mag <= 0.0) return Vec3::Zero();
  const double speed = contact.v_tangent.norm();
  if (speed < 1e-15) return Vec3::Zero();
  const Vec3 dir = contact.v_tangent / speed;
  double magnitude;
  if (speed < mat.v_stick) {
    magnitude = mat.mu_s * f_n_mag * (speed / mat.v_stick);
  } else {
    magnitude = stribeck_mu(speed, mat) * f_n_mag;
  }
  return -magnitude * dir;
}

// Short-range surface adhesion: zero inside and beyond adh_range, C0 at both
// ends, pulling toward the surface (against the outward normal).
inline Vec3 adhesion_force(double phi, const Vec3& n, const HapticMaterial& mat) {
  if (phi < 0.0 || phi >= mat.adh_range || mat.adh_range <= 0.0)
    return Vec3::Zero();
  const double magnitude = mat.k_adh * phi * (1.0 - phi / mat.adh_range);
  return -magnitude * n;
}

// ---------- Assembly and limiting ----------

struct ForceLimits {
  double f_max = 3.3;      // device limit, N
  double slew_max = 500.0; // N/s
};

// Per-term decomposition; total is the exact sum of the terms (pre-limit).
struct ForceBreakdown {
  Vec3 elastic = Vec3::Zero();   // intact-equivalent (k0+U*d)*d*n
  Vec3 damp_n = Vec3::Zero();    // -b(v.n)n
  Vec3 drag_t = Vec3::Zero();    // -(c0+c1*d)v_t
  Vec3 drag_quad = Vec3::Zero(); // -q_t|v_t|v_t
  Vec3 viscous_g = Vec3::Zero(); // -c_g*v
  Vec3 friction = Vec3::Zero();
  Vec3 puncture = Vec3::Zero();  // (modifier-1) * elastic
  Vec3 adhesion = Vec3::Zero();
  Vec3 total = Vec3::Zero();
};

// Magnitude clamp preserving direction, then slew clamp along the difference
// from the previous output.
inline Vec3 limit_force(const Vec3& f, const Vec3& prev,
                        const ForceLimits& limits, double dt_s) {
  Vec3 out = f;
  const double mag = out.norm();
  if (mag > limits.f_max && mag > 0.0) out *= limits.f_max / mag;
  const Vec3 delta = out - prev;
  const double step = delta.norm();
  const double max_step = limits.slew_max * dt_s;
  if (step > max_step && step > 0.0) out = prev + delta * (max_step / step);
  return out;
}

struct AssembledForce {
  ForceBreakdown breakdown;
  Vec3 output = Vec3::Zero();  // post-limit device command
  PunctureState puncture;
};

// Full force assembly for one servo tick. Velocity-dependent terms act only
// in contact; adhesion acts just outside the surface.
inline AssembledForce assemble_force(const ContactState& contact,
                                     const HapticMaterial& mat,
                                     const PunctureState& punct,
                                     const Vec3& prev_force,
                                     const ForceLimits& limits, double dt_s) {
  AssembledForce out;
  const double d = contact.depth_mm;
  const double f_elastic_intact = d > 0.0 ? stiffness_gain(d, mat) * d : 0.0;
  out.puncture = puncture_update(punct, f_elastic_intact, mat, dt_s * 1000.0);

  ForceBreakdown& b = out.breakdown;
  if (d > 0.0) {
    b.elastic = f_elastic_intact * contact.normal;
    b.puncture = (out.puncture.stiffness_modifier - 1.0) * b.elastic;
    b.damp_n = -mat.b * contact.velocity.dot(contact.normal) * contact.normal;
    b.drag_t = -(mat.c0 + mat.c1 * d) * contact.v_tangent;
    b.drag_quad = -mat.q_t * contact.v_tangent.norm() * contact.v_tangent;
    b.viscous_g = -mat.c_g * contact.velocity;
    const double f_n =
        std::max(0.0, (b.elastic + b.puncture + b.damp_n).dot(contact.normal));
    b.friction = friction_force(contact, f_n, mat);
  } else {
    b.adhesion = adhesion_force(contact.clearance_mm, contact.normal, mat);
  }
  b.total = b.elastic + b.damp_n + b.drag_t + b.drag_quad + b.viscous_g +
            b.friction + b.puncture + b.adhesion;
  out.output = limit_force(b.total, prev_force, limits, dt_s);
  return out;
}

// ---------- 1 kHz tick ----------

struct HapticToolState {
  PunctureState puncture;
  // Latest device command; the 90 Hz consumer reads this latest value
  // (decimation without averaging preserves onset transients).
  Vec3 last_output = Vec3::Zero();
};

struct HapticTickResult {
  ContactState contact;
  ForceBreakdown breakdown;
  Vec3 force = Vec3::Zero();
  bool rupture_event = false;
  HapticToolState state;
};

inline HapticTickResult haptic_tick(const Scene& scene, const Vec3& tool_pos,
                                    const Vec3& tool_vel,
                                    const MaterialRegistry& registry,
                                    const HapticToolState& state,
                                    const ForceLimits& limits,
                                    double dt_s = 1e-3) {
  HapticTickResult result;
  result.contact = contact_state(scene, tool_pos, tool_vel);
  const auto it = registry.find(result.contact.material_id);
  if (it == registry.end())
    throw Error("unknown material: " + std::string(result.contact.material_id));

  const AssembledForce assembled = assemble_force(
      result.contact, it->second, state.puncture, state.last_output, limits, dt_s);
  result.breakdown = assembled.breakdown;
  result.force = assembled.output;
  result.rupture_event =
      assembled.puncture.rupture_count > state.puncture.rupture_count;
  result.state.puncture = assembled.puncture;
  result.state.last_output = assembled.output;
  return result;
}

}  // namespace telesim
