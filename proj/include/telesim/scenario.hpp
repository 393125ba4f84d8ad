#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "telesim/errors.hpp"
#include "telesim/filter.hpp"
#include "telesim/frames.hpp"
#include "telesim/geometry.hpp"
#include "telesim/haptics.hpp"
#include "telesim/teleop.hpp"
#include "telesim/transport.hpp"
#include "telesim/types.hpp"

namespace telesim {

struct Waypoint {
  double t_s = 0.0;
  Vec3 p_mm = Vec3::Zero();
};

struct ClutchEvent {
  double t_s = 0.0;
  bool engaged = true;
};

// Scripted leader trajectory for one hand.
struct HandScript {
  std::vector<Waypoint> waypoints;
  double noise_mm = 0.0;  // seeded gaussian noise on the measured leader pose
  std::vector<ClutchEvent> clutch;  // engaged from t=0 unless scripted
  std::optional<Vec3> follower_start_mm;  // default: workspace bounds center

  bool clutch_engaged_at(double t_s) const {
    bool engaged = true;
    for (const auto& e : clutch) {
      if (e.t_s > t_s) break;
      engaged = e.engaged;
    }
    return engaged;
  }
};

struct OutageWindow {
  double start_s = 0.0;
  double end_s = 0.0;
};

struct NetConfig {
  ChannelModel channel;
  double t_wd_ms = 100.0;
  std::uint64_t seed = 0;  // substream id mixed into the master seed
  std::vector<OutageWindow> outages;  // loss forced to 1 inside
};

struct ScenarioConfig {
  std::string name;
  WorkspaceCalibration calibration;
  Scene scene;
  MaterialRegistry materials;
  TeleopConfig teleop;
  KalmanConfig kalman;
  NetConfig net;
  ForceLimits limits;
  std::optional<HandScript> left;
  std::optional<HandScript> right;
  double duration_s = 1.0;
  std::uint64_t seed = 0;
  std::string config_hash;  // FNV-1a of the source text

  const HandScript* script(Hand h) const {
    const auto& slot = h == Hand::Left ? left : right;
    return slot ? &*slot : nullptr;
  }
};

inline std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace detail {

using nlohmann::json;

inline const json& member(const json& j, const std::string& key,
                          const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key, "missing field");
  return *it;
}

inline double num(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  return j.get<double>();
}

inline double num_field(const json& j, const std::string& key,
                        const std::string& path) {
  return num(member(j, key, path), path + "." + key);
}

inline double num_or(const json& j, const std::string& key, double fallback,
                     const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return num(j.at(key), path + "." + key);
}

inline bool bool_or(const json& j, const std::string& key, bool fallback,
                    const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(path + "." + key, "expected a boolean");
  return v.get<bool>();
}

inline Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3)
    throw ConfigError(path, "expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) v(i) = num(j.at(i), path + "[" + std::to_string(i) + "]");
  if (!is_finite(v)) throw ConfigError(path, "non-finite component");
  return v;
}

inline RigidTransform rigid_transform(const json& j, const std::string& path) {
  RigidTransform t;
  if (j.contains("rotation")) {
    const auto& rows = j.at("rotation");
    if (!rows.is_array() || rows.size() != 3)
      throw ConfigError(path + ".rotation", "expected 3 rows of 3");
    for (int r = 0; r < 3; ++r) {
      const Vec3 row = vec3(rows.at(r), path + ".rotation[" + std::to_string(r) + "]");
      t.rotation.row(r) = row.transpose();
    }
  }
  if (j.contains("translation_mm"))
    t.translation = vec3(j.at("translation_mm"), path + ".translation_mm");
  if (!t.is_valid(1e-6))
    throw ConfigError(path + ".rotation", "not a rotation matrix (R^T R != I)");
  return t;
}

inline void apply_material_overrides(HapticMaterial& m, const json& j,
                                     const std::string& path) {
  m.k0 = num_or(j, "k0", m.k0, path);
  m.u_gain = num_or(j, "u", m.u_gain, path);
  m.quadratic_stiffness = bool_or(j, "quadratic_stiffness", m.quadratic_stiffness, path);
  m.b = num_or(j, "b", m.b, path);
  m.c0 = num_or(j, "c0", m.c0, path);
  m.c1 = num_or(j, "c1", m.c1, path);
  m.q_t = num_or(j, "q_t", m.q_t, path);
  m.c_g = num_or(j, "c_g", m.c_g, path);
  m.mu_s = num_or(j, "mu_s", m.mu_s, path);
  m.mu_k = num_or(j, "mu_k", m.mu_k, path);
  m.v_s = num_or(j, "v_s", m.v_s, path);
  m.v_stick = num_or(j, "v_stick", m.v_stick, path);
  m.f_thresh = num_or(j, "f_thresh", m.f_thresh, path);
  m.puncture_drop = num_or(j, "puncture_drop", m.puncture_drop, path);
  m.puncture_window_ms = num_or(j, "puncture_window_ms", m.puncture_window_ms, path);
  m.sigmoid_width = num_or(j, "sigmoid_width", m.sigmoid_width, path);
  m.recovery_ms = num_or(j, "recovery_ms", m.recovery_ms, path);
  m.k_adh = num_or(j, "k_adh", m.k_adh, path);
  m.adh_range = num_or(j, "adh_range", m.adh_range, path);

  if (m.k0 < 0 || m.b < 0 || m.c_g < 0 || m.u_gain < 0)
    throw ConfigError(path, "stiffness/damping coefficients must be >= 0");
  if (m.mu_s < m.mu_k || m.mu_k < 0)
    throw ConfigError(path, "need mu_s >= mu_k >= 0");
  if (m.f_thresh <= 0) throw ConfigError(path + ".f_thresh", "must be > 0");
  if (m.puncture_drop <= 0 || m.puncture_drop > 1)
    throw ConfigError(path + ".puncture_drop", "must be in (0, 1]");
  if (m.adh_range < 0) throw ConfigError(path + ".adh_range", "must be >= 0");
  if (m.sigmoid_width <= 0) throw ConfigError(path + ".sigmoid_width", "must be > 0");
  if (m.v_s <= 0 || m.v_stick <= 0)
    throw ConfigError(path, "v_s and v_stick must be > 0");
}

inline void merge_materials(MaterialRegistry& reg, const json& j,
                            const std::string& path) {
  if (!j.is_object()) throw ConfigError(path, "expected an object of materials");
  for (const auto& [name, body] : j.items()) {
    auto it = reg.find(name);
    HapticMaterial m = it != reg.end() ? it->second : HapticMaterial{};
    apply_material_overrides(m, body, path + "." + name);
    reg[name] = m;
  }
}

inline SceneObject scene_object(const json& j, const std::string& path) {
  SceneObject obj;
  const auto& type_j = member(j, "type", path);
  if (!type_j.is_string()) throw ConfigError(path + ".type", "expected a string");
  const std::string type = type_j.get<std::string>();

  if (type == "sphere") {
    Sphere s;
    s.center = vec3(member(j, "center_mm", path), path + ".center_mm");
    s.radius = num_field(j, "radius_mm", path);
    if (s.radius <= 0) throw ConfigError(path + ".radius_mm", "must be > 0");
    obj.shape = s;
  } else if (type == "half_space") {
    HalfSpace h;
    h.point = vec3(member(j, "point_mm", path), path + ".point_mm");
    h.normal = vec3(member(j, "normal", path), path + ".normal");
    const double len = h.normal.norm();
    if (len < 1e-9) throw ConfigError(path + ".normal", "zero normal");
    h.normal /= len;
    obj.shape = h;
  } else if (type == "capsule") {
    Capsule c;
    c.a = vec3(member(j, "a_mm", path), path + ".a_mm");
    c.b = vec3(member(j, "b_mm", path), path + ".b_mm");
    c.radius = num_field(j, "radius_mm", path);
    if (c.radius <= 0) throw ConfigError(path + ".radius_mm", "must be > 0");
    obj.shape = c;
  } else if (type == "rounded_box") {
    RoundedBox rb;
    rb.center = vec3(member(j, "center_mm", path), path + ".center_mm");
    rb.half_extents = vec3(member(j, "half_extents_mm", path), path + ".half_extents_mm");
    if (rb.half_extents.minCoeff() <= 0)
      throw ConfigError(path + ".half_extents_mm", "must be > 0");
    rb.radius = num_field(j, "radius_mm", path);
    if (rb.radius <= 0) throw ConfigError(path + ".radius_mm", "must be > 0");
    obj.shape = rb;
  } else {
    throw ConfigError(path + ".type", "unknown primitive type '" + type + "'");
  }

  const auto& mat_j = member(j, "material", path);
  if (!mat_j.is_string()) throw ConfigError(path + ".material", "expected a string");
  obj.material_id = mat_j.get<std::string>();

  if (j.contains("layers")) {
    const auto& layers = j.at("layers");
    if (!layers.is_array()) throw ConfigError(path + ".layers", "expected an array");
    double prev = 0.0;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const std::string lpath = path + ".layers[" + std::to_string(i) + "]";
      LayerBand band;
      if (layers.at(i).contains("max_depth_mm")) {
        band.max_depth_mm = num_field(layers.at(i), "max_depth_mm", lpath);
        if (band.max_depth_mm <= prev)
          throw ConfigError(lpath + ".max_depth_mm", "bands must increase from 0");
        prev = band.max_depth_mm;
      } else if (i + 1 != layers.size()) {
        throw ConfigError(lpath, "only the last band may omit max_depth_mm");
      }
      const auto& lm = member(layers.at(i), "material", lpath);
      if (!lm.is_string()) throw ConfigError(lpath + ".material", "expected a string");
      band.material = lm.get<std::string>();
      obj.layers.push_back(band);
    }
  }
  return obj;
}

inline HandScript hand_script(const json& j, const std::string& path) {
  HandScript script;
  const auto& wps = member(j, "waypoints", path);
  if (!wps.is_array() || wps.empty())
    throw ConfigError(path + ".waypoints", "expected a nonempty array");
  double prev_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < wps.size(); ++i) {
    const std::string wpath = path + ".waypoints[" + std::to_string(i) + "]";
    Waypoint w;
    w.t_s = num_field(wps.at(i), "t_s", wpath);
    w.p_mm = vec3(member(wps.at(i), "p_mm", wpath), wpath + ".p_mm");
    if (w.t_s <= prev_t)
      throw ConfigError(wpath + ".t_s", "waypoint times must strictly increase");
    prev_t = w.t_s;
    script.waypoints.push_back(w);
  }
  script.noise_mm = num_or(j, "noise_mm", 0.0, path);
  if (script.noise_mm < 0) throw ConfigError(path + ".noise_mm", "must be >= 0");
  if (j.contains("clutch")) {
    const auto& cl = j.at("clutch");
    if (!cl.is_array()) throw ConfigError(path + ".clutch", "expected an array");
    double prev = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cl.size(); ++i) {
      const std::string cpath = path + ".clutch[" + std::to_string(i) + "]";
      ClutchEvent e;
      e.t_s = num_field(cl.at(i), "t_s", cpath);
      e.engaged = bool_or(cl.at(i), "engaged", true, cpath);
      if (e.t_s <= prev)
        throw ConfigError(cpath + ".t_s", "clutch times must strictly increase");
      prev = e.t_s;
      script.clutch.push_back(e);
    }
  }
  if (j.contains("follower_start_mm"))
    script.follower_start_mm =
        vec3(j.at("follower_start_mm"), path + ".follower_start_mm");
  return script;
}

}  // namespace detail

// Parse and validate a scenario. base_dir resolves materials_file references.
inline ScenarioConfig parse_scenario(const std::string& text,
                                     const std::filesystem::path& base_dir = ".",
                                     const std::string& fallback_name = "scenario") {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }

  ScenarioConfig cfg;
  cfg.config_hash = fnv1a_hex(text);
  cfg.name = j.contains("name") && j.at("name").is_string()
                 ? j.at("name").get<std::string>()
                 : fallback_name;

  cfg.duration_s = detail::num_field(j, "duration_s", "");
  if (cfg.duration_s <= 0) throw ConfigError("duration_s", "must be > 0");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("seed", "expected an integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }

  if (j.contains("calibration")) {
    const auto& c = j.at("calibration");
    cfg.calibration.needle_length_mm =
        detail::num_or(c, "needle_length_mm", 35.0, "calibration");
    if (c.contains("table_extent_mm")) {
      const auto& te = c.at("table_extent_mm");
      if (!te.is_array() || te.size() != 2)
        throw ConfigError("calibration.table_extent_mm", "expected [x, y]");
      cfg.calibration.table_extent_mm = {
          detail::num(te.at(0), "calibration.table_extent_mm[0]"),
          detail::num(te.at(1), "calibration.table_extent_mm[1]")};
    }
    cfg.calibration.units_per_mm =
        detail::num_or(c, "units_per_mm", 0.01, "calibration");
    if (cfg.calibration.units_per_mm <= 0)
      throw ConfigError("calibration.units_per_mm", "must be > 0");
    if (cfg.calibration.table_extent_mm[0] <= 0 ||
        cfg.calibration.table_extent_mm[1] <= 0)
      throw ConfigError("calibration.table_extent_mm", "must be > 0");
    if (c.contains("hand_to_workspace"))
      cfg.calibration.hand_to_workspace = detail::rigid_transform(
          c.at("hand_to_workspace"), "calibration.hand_to_workspace");
  }

  cfg.materials = default_materials();
  if (j.contains("materials_file")) {
    const auto& mf = j.at("materials_file");
    if (!mf.is_string()) throw ConfigError("materials_file", "expected a path string");
    const std::filesystem::path p = base_dir / mf.get<std::string>();
    std::ifstream in(p);
    if (!in) throw ConfigError("materials_file", "cannot open " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    json mj;
    try {
      mj = json::parse(ss.str());
    } catch (const std::exception& e) {
      throw ConfigError("materials_file", std::string("invalid JSON: ") + e.what());
    }
    detail::merge_materials(cfg.materials, mj, "materials_file");
  }
  if (j.contains("materials"))
    detail::merge_materials(cfg.materials, j.at("materials"), "materials");

  const auto& scene_j = detail::member(j, "scene", "");
  const auto& prims = detail::member(scene_j, "primitives", "scene");
  if (!prims.is_array() || prims.empty())
    throw ConfigError("scene.primitives", "expected a nonempty array");
  for (std::size_t i = 0; i < prims.size(); ++i)
    cfg.scene.objects.push_back(detail::scene_object(
        prims.at(i), "scene.primitives[" + std::to_string(i) + "]"));

  // every referenced material must resolve
  for (std::size_t i = 0; i < cfg.scene.objects.size(); ++i) {
    const auto& obj = cfg.scene.objects[i];
    const std::string path = "scene.primitives[" + std::to_string(i) + "]";
    if (!cfg.materials.count(obj.material_id))
      throw ConfigError(path + ".material", "unknown material '" + obj.material_id + "'");
    for (const auto& band : obj.layers)
      if (!cfg.materials.count(band.material))
        throw ConfigError(path + ".layers", "unknown material '" + band.material + "'");
  }

  if (j.contains("teleop")) {
    const auto& t = j.at("teleop");
    cfg.teleop.alpha = detail::num_or(t, "alpha", 1.0, "teleop");
    if (cfg.teleop.alpha <= 0) throw ConfigError("teleop.alpha", "must be > 0");
    if (t.contains("bounds_mm")) {
      const auto& b = t.at("bounds_mm");
      if (!b.is_array() || b.size() != 2)
        throw ConfigError("teleop.bounds_mm", "expected [[min],[max]]");
      cfg.teleop.bounds.min_mm = detail::vec3(b.at(0), "teleop.bounds_mm[0]");
      cfg.teleop.bounds.max_mm = detail::vec3(b.at(1), "teleop.bounds_mm[1]");
    }
    if (!cfg.teleop.bounds.non_degenerate())
      throw ConfigError("teleop.bounds_mm", "degenerate box");
    cfg.teleop.max_speed_mm_s = detail::num_or(t, "max_speed_mm_s", 200.0, "teleop");
    if (cfg.teleop.max_speed_mm_s <= 0)
      throw ConfigError("teleop.max_speed_mm_s", "must be > 0");
  }
  cfg.teleop.hand_to_workspace = cfg.calibration.hand_to_workspace;

  if (j.contains("kalman")) {
    const auto& k = j.at("kalman");
    cfg.kalman.q = detail::num_or(k, "q", 100.0, "kalman");
    cfg.kalman.r = detail::num_or(k, "r", 0.01, "kalman");
    if (cfg.kalman.q <= 0) throw ConfigError("kalman.q", "must be > 0");
    if (cfg.kalman.r < 0) throw ConfigError("kalman.r", "must be >= 0");
  }
  cfg.kalman.dt_s = 1.0 / 90.0;

  if (j.contains("net")) {
    const auto& n = j.at("net");
    cfg.net.channel.loss_prob = detail::num_or(n, "loss", 0.0, "net");
    cfg.net.channel.delay_ms = detail::num_or(n, "delay_ms", 0.0, "net");
    cfg.net.channel.jitter_ms = detail::num_or(n, "jitter_ms", 0.0, "net");
    cfg.net.channel.reorder = detail::bool_or(n, "reorder", false, "net");
    cfg.net.t_wd_ms = detail::num_or(n, "t_wd_ms", 100.0, "net");
    cfg.net.seed = static_cast<std::uint64_t>(detail::num_or(n, "seed", 0.0, "net"));
    if (cfg.net.channel.loss_prob < 0 || cfg.net.channel.loss_prob > 1)
      throw ConfigError("net.loss", "must be in [0, 1]");
    if (cfg.net.channel.delay_ms < 0 || cfg.net.channel.jitter_ms < 0)
      throw ConfigError("net.delay_ms", "delays must be >= 0");
    if (cfg.net.t_wd_ms * 1e-3 <= 1.0 / 90.0)
      throw ConfigError("net.t_wd_ms", "watchdog must exceed the command period");
    if (n.contains("outages")) {
      const auto& ow = n.at("outages");
      if (!ow.is_array()) throw ConfigError("net.outages", "expected an array");
      for (std::size_t i = 0; i < ow.size(); ++i) {
        const std::string opath = "net.outages[" + std::to_string(i) + "]";
        OutageWindow w;
        w.start_s = detail::num_field(ow.at(i), "start_s", opath);
        w.end_s = detail::num_field(ow.at(i), "end_s", opath);
        if (w.end_s <= w.start_s) throw ConfigError(opath, "end_s must exceed start_s");
        cfg.net.outages.push_back(w);
      }
    }
  }

  if (j.contains("haptics")) {
    const auto& h = j.at("haptics");
    cfg.limits.f_max = detail::num_or(h, "f_max_n", 3.3, "haptics");
    cfg.limits.slew_max = detail::num_or(h, "slew_max_n_per_s", 500.0, "haptics");
    if (cfg.limits.f_max <= 0 || cfg.limits.slew_max <= 0)
      throw ConfigError("haptics", "limits must be > 0");
  }

  const auto& traj = detail::member(j, "trajectories", "");
  if (traj.contains("left"))
    cfg.left = detail::hand_script(traj.at("left"), "trajectories.left");
  if (traj.contains("right"))
    cfg.right = detail::hand_script(traj.at("right"), "trajectories.right");
  if (!cfg.left && !cfg.right)
    throw ConfigError("trajectories", "need at least one hand");

  for (Hand hand : {Hand::Left, Hand::Right}) {
    const HandScript* s = cfg.script(hand);
    if (!s) continue;
    const Vec3 start = s->follower_start_mm.value_or(cfg.teleop.bounds.center());
    if (!cfg.teleop.bounds.contains(start))
      throw ConfigError(std::string("trajectories.") +
                            (hand == Hand::Left ? "left" : "right") +
                            ".follower_start_mm",
                        "outside workspace bounds");
  }
  return cfg;
}

inline ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open scenario file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path.parent_path(), path.stem().string());
}

}  // namespace telesim
