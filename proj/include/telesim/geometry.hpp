#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/types.hpp"

namespace telesim {

// ---------- Signed-distance primitives (all mm, exact SDFs) ----------

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

// Occupied half is the side the normal points away from: phi = (p-point).n
struct HalfSpace {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct Capsule {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::UnitZ();
  double radius = 1.0;
};

struct RoundedBox {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  double radius = 0.5;
};

using SdfPrimitive = std::variant<Sphere, HalfSpace, Capsule, RoundedBox>;

// Depth band of a stratified tissue. Bands are contiguous from depth 0; the
// last band may be unbounded (max_depth_mm = +inf).
struct LayerBand {
  double max_depth_mm = std::numeric_limits<double>::infinity();
  std::string material;
};

struct SceneObject {
  SdfPrimitive shape;
  std::string material_id;
  std::vector<LayerBand> layers;  // empty = material_id throughout
};

struct Scene {
  std::vector<SceneObject> objects;
};

namespace detail {

struct PrimEval {
  double phi;
  Vec3 normal;
};

inline PrimEval eval_sdf(const Sphere& s, const Vec3& p) {
  const Vec3 d = p - s.center;
  const double len = d.norm();
  if (len < 1e-12) return {-s.radius, Vec3::UnitZ()};
  return {len - s.radius, d / len};
}

inline PrimEval eval_sdf(const HalfSpace& h, const Vec3& p) {
  return {(p - h.point).dot(h.normal), h.normal};
}

inline PrimEval eval_sdf(const Capsule& c, const Vec3& p) {
  const Vec3 pa = p - c.a;
  const Vec3 ba = c.b - c.a;
  const double denom = ba.squaredNorm();
  const double h = denom > 0.0 ? std::clamp(pa.dot(ba) / denom, 0.0, 1.0) : 0.0;
  const Vec3 d = pa - ba * h;
  const double len = d.norm();
  if (len < 1e-12) return {-c.radius, Vec3::UnitZ()};
  return {len - c.radius, d / len};
}

inline PrimEval eval_sdf(const RoundedBox& rb, const Vec3& p) {
  const Vec3 local = p - rb.center;
  const Vec3 q = local.cwiseAbs() - rb.half_extents;
  const Vec3 outside = q.cwiseMax(0.0);
  const double outside_len = outside.norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  const double phi = outside_len + inside - rb.radius;

  Vec3 n;
  if (outside_len > 1e-12) {
    n = outside.cwiseProduct(local.cwiseSign()) / outside_len;
    // cwiseSign is 0 on a face plane; fall through if that zeroed everything
    if (n.squaredNorm() < 1e-24) n = Vec3::UnitZ();
    n.normalize();
  } else {
    // interior core: toward the nearest face, lowest axis wins ties
    int axis = 0;
    for (int i = 1; i < 3; ++i)
      if (q(i) > q(axis)) axis = i;
    n = Vec3::Zero();
    n(axis) = local(axis) >= 0.0 ? 1.0 : -1.0;
  }
  return {phi, n};
}

inline PrimEval eval_sdf(const SdfPrimitive& prim, const Vec3& p) {
  return std::visit([&](const auto& s) { return eval_sdf(s, p); }, prim);
}

inline std::string_view resolve_material(const SceneObject& obj, double depth_mm) {
  if (obj.layers.empty()) return obj.material_id;
  for (const auto& band : obj.layers)
    if (depth_mm < band.max_depth_mm) return band.material;
  return obj.material_id;
}

}  // namespace detail

struct SdfHit {
  double phi = 0.0;  // signed distance, mm (negative inside)
  Vec3 normal = Vec3::UnitZ();
  std::size_t object_index = 0;
  std::string_view material_id;  // resolved through the layer stack at |phi| depth
};

// Min-union over primitives; lowest-index primitive wins SDF ties.
inline SdfHit signed_distance(const Scene& scene, const Vec3& p) {
  if (scene.objects.empty()) throw EmptyScene("scene has no primitives");
  SdfHit best;
  best.phi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto eval = detail::eval_sdf(scene.objects[i].shape, p);
    if (eval.phi < best.phi) {
      best.phi = eval.phi;
      best.normal = eval.normal;
      best.object_index = i;
    }
  }
  const double depth = std::max(0.0, -best.phi);
  best.material_id =
      detail::resolve_material(scene.objects[best.object_index], depth);
  return best;
}

// Per-tick geometric contact summary feeding haptics and metrics.
struct ContactState {
  double depth_mm = 0.0;      // penetration, >= 0
  double clearance_mm = 0.0;  // outside distance, >= 0; depth*clearance == 0
  Vec3 normal = Vec3::UnitZ();
  Vec3 velocity = Vec3::Zero();  // tool velocity, mm/s
  Vec3 v_normal = Vec3::Zero();
  Vec3 v_tangent = Vec3::Zero();  // velocity - v_normal, exactly
  std::string_view material_id;
  std::size_t object_index = 0;

  bool in_contact() const { return depth_mm > 0.0; }
};

inline ContactState contact_state(const Scene& scene, const Vec3& p,
                                  const Vec3& v) {
  if (!is_finite(v)) throw NonFiniteMeasurement("non-finite tool velocity");
  const SdfHit hit = signed_distance(scene, p);
  ContactState c;
  c.depth_mm = std::max(0.0, -hit.phi);
  c.clearance_mm = std::max(0.0, hit.phi);
  c.normal = hit.normal;
  c.velocity = v;
  c.v_normal = v.dot(hit.normal) * hit.normal;
  c.v_tangent = v - c.v_normal;
  c.material_id = hit.material_id;
  c.object_index = hit.object_index;
  return c;
}

inline double clearance(const Scene& scene, const Vec3& p) {
  return std::max(0.0, signed_distance(scene, p).phi);
}

}  // namespace telesim
