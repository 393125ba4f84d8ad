#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>

namespace telesim {

// Positions and increments are millimeters in the named frame; directions are
// unit vectors; forces are newtons.
using Vec3 = Eigen::Vector3d;

enum class Hand { Left, Right };

inline const char* to_string(Hand h) { return h == Hand::Left ? "L" : "R"; }

// Link health as seen by the follower side (watchdog verdict).
enum class LinkMode { Live, SampleHold, SafeHold };

inline const char* to_string(LinkMode m) {
  switch (m) {
    case LinkMode::Live: return "live";
    case LinkMode::SampleHold: return "sample_hold";
    case LinkMode::SafeHold: return "safe_hold";
  }
  return "?";
}

// ---------- Simulation clock ----------
// Integer clock at 9 MHz: both the 90 Hz command grid (100000 ticks) and the
// 1 kHz servo grid (9000 ticks) are exact, so long runs cannot drift.
using SimTicks = std::int64_t;

inline constexpr SimTicks kTicksPerMicrosecond = 9;
inline constexpr SimTicks kTicksPerMillisecond = 9'000;
inline constexpr SimTicks kTicksPerSecond = 9'000'000;
inline constexpr SimTicks kCommandPeriodTicks = kTicksPerSecond / 90;  // exact
inline constexpr SimTicks kServoPeriodTicks = kTicksPerMillisecond;

inline std::uint64_t ticks_to_us(SimTicks t) {
  return static_cast<std::uint64_t>(t / kTicksPerMicrosecond);
}
inline double ticks_to_ms(SimTicks t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerMillisecond);
}
inline double ticks_to_s(SimTicks t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerSecond);
}
inline SimTicks ticks_from_ms(double ms) {
  return static_cast<SimTicks>(std::llround(ms * static_cast<double>(kTicksPerMillisecond)));
}
inline SimTicks ticks_from_s(double s) {
  return static_cast<SimTicks>(std::llround(s * static_cast<double>(kTicksPerSecond)));
}

// ---------- Deterministic randomness ----------
// std:: distributions are implementation-defined, so anything that must be
// reproducible across toolchains draws through these helpers.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Decorrelated seed for a named substream of a master seed.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0xa0761d6478bd642fULL * (stream + 1));
  splitmix64(s);
  return splitmix64(s);
}

inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;  // [0,1)
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform01(g);
}

// Box-Muller, cosine branch only.
inline double gaussian(std::mt19937_64& g) {
  double u1 = uniform01(g);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

inline bool is_finite(const Vec3& v) {
  return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z());
}

}  // namespace telesim
