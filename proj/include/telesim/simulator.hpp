#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "telesim/filter.hpp"
#include "telesim/geometry.hpp"
#include "telesim/haptics.hpp"
#include "telesim/metrics.hpp"
#include "telesim/run_log.hpp"
#include "telesim/scenario.hpp"
#include "telesim/teleop.hpp"
#include "telesim/transport.hpp"
#include "telesim/types.hpp"

namespace telesim {

// Time-parameterized cubic Hermite through the waypoints with Catmull-Rom
// tangents; clamped to the end positions outside the scripted range.
class LeaderPath {
 public:
  explicit LeaderPath(const std::vector<Waypoint>& waypoints)
      : wps_(waypoints) {}

  Vec3 sample(double t_s) const {
    if (wps_.size() == 1 || t_s <= wps_.front().t_s) return wps_.front().p_mm;
    if (t_s >= wps_.back().t_s) return wps_.back().p_mm;
    std::size_t i = 0;
    while (i + 2 < wps_.size() && wps_[i + 1].t_s <= t_s) ++i;
    const double t0 = wps_[i].t_s;
    const double t1 = wps_[i + 1].t_s;
    const double h = t1 - t0;
    const double s = (t_s - t0) / h;
    const double s2 = s * s;
    const double s3 = s2 * s;
    const Vec3 m0 = tangent(i);
    const Vec3 m1 = tangent(i + 1);
    return (2.0 * s3 - 3.0 * s2 + 1.0) * wps_[i].p_mm +
           (s3 - 2.0 * s2 + s) * h * m0 +
           (-2.0 * s3 + 3.0 * s2) * wps_[i + 1].p_mm + (s3 - s2) * h * m1;
  }

 private:
  Vec3 tangent(std::size_t i) const {
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = std::min(i + 1, wps_.size() - 1);
    const double dt = wps_[hi].t_s - wps_[lo].t_s;
    if (dt <= 0.0) return Vec3::Zero();
    return (wps_[hi].p_mm - wps_[lo].p_mm) / dt;
  }

  std::vector<Waypoint> wps_;
};

// Per-servo-tick view for invariant checkers (force bounds, slew, work).
struct TickObservation {
  SimTicks t = 0;
  Hand hand = Hand::Right;
  double dt_s = 1e-3;
  Vec3 tool_pos = Vec3::Zero();
  Vec3 tool_vel = Vec3::Zero();
  double depth_mm = 0.0;
  Vec3 pre_limit_force = Vec3::Zero();
  Vec3 force = Vec3::Zero();
  Vec3 prev_force = Vec3::Zero();
};

using TickObserver = std::function<void(const TickObservation&)>;

namespace detail {

struct HandRuntime {
  Hand hand = Hand::Right;
  const HandScript* script = nullptr;
  LeaderPath path{std::vector<Waypoint>{Waypoint{}}};
  std::mt19937_64 noise_rng;

  KalmanState kf;
  Vec3 prev_filtered = Vec3::Zero();
  std::uint32_t next_seq = 1;

  SimChannel channel;
  LatestValidReceiver rx;
  WatchdogConfig wd;
  LinkMode link = LinkMode::Live;
  std::uint32_t last_applied_seq = 0;
  SimTicks last_apply = -1;

  FollowerState follower;   // commanded pose (gated)
  Vec3 tool_pos = Vec3::Zero();  // actuator output, continuous
  Vec3 tool_vel = Vec3::Zero();
  Vec3 target = Vec3::Zero();

  HapticToolState haptic;
};

inline bool in_outage(const NetConfig& net, double t_s) {
  for (const auto& w : net.outages)
    if (t_s >= w.start_s && t_s < w.end_s) return true;
  return false;
}

}  // namespace detail

// Fixed-timestep simulation of the full loop: scripted leader -> Kalman filter
// -> datagram -> lossy channel -> latest-valid receive -> watchdog -> gated
// follower -> 1 kHz haptic servo. Deterministic per (config, seed).
inline RunLog run_scenario(const ScenarioConfig& cfg,
                           const TickObserver& observer = {}) {
  RunLog log;
  log.header.scenario = cfg.name;
  log.header.config_hash = cfg.config_hash;
  log.header.seed = cfg.seed;

  std::vector<detail::HandRuntime> hands;
  for (Hand hand : {Hand::Left, Hand::Right}) {
    const HandScript* script = cfg.script(hand);
    if (!script) continue;
    detail::HandRuntime h;
    h.hand = hand;
    h.script = script;
    h.path = LeaderPath(script->waypoints);
    const std::uint64_t stream_base = hand == Hand::Left ? 0 : 100;
    h.noise_rng.seed(substream_seed(cfg.seed, stream_base + 1));
    h.channel = SimChannel(cfg.net.channel,
                           substream_seed(cfg.seed ^ cfg.net.seed, stream_base + 2));
    h.wd.t_wd_ms = cfg.net.t_wd_ms;
    const Vec3 start = script->follower_start_mm.value_or(cfg.teleop.bounds.center());
    h.follower.pose = start;
    h.tool_pos = start;
    h.target = start;
    hands.push_back(std::move(h));
  }

  const auto log_event = [&](SimTicks t, std::optional<Hand> hand,
                             const char* kind, std::string detail_str) {
    log.events.push_back(LogEvent{ticks_to_ms(t), hand, kind, std::move(detail_str)});
  };

  const auto apply_payload = [&](detail::HandRuntime& h, const Datagram& dg,
                                 SimTicks now) {
    h.follower.clutch_engaged = dg.clutch_engaged;
    // increments are produced at the command rate, so the speed gate budgets
    // one command period per applied step
    const FollowerState next = apply_increment(
        h.follower, dg.delta_mm, cfg.teleop, 1.0 / 90.0, h.link);
    h.follower = next;
    h.last_apply = now;
    h.last_applied_seq = dg.seq;
    if (h.follower.gate == GateState::Normal) {
      h.target = next.pose;
      // first-order hold: execute the step over one command period
      h.tool_vel = (h.target - h.tool_pos) * 90.0;
    }
  };

  const SimTicks duration_ticks = ticks_from_s(cfg.duration_s);
  const SimTicks frame_ticks = kCommandPeriodTicks;
  constexpr SimTicks kNoEvent = std::numeric_limits<SimTicks>::max();
  SimTicks next_frame = 0;
  SimTicks next_servo = 0;

  while (next_frame <= duration_ticks || next_servo <= duration_ticks) {
    const SimTicks frame_t = next_frame <= duration_ticks ? next_frame : kNoEvent;
    const SimTicks servo_t = next_servo <= duration_ticks ? next_servo : kNoEvent;
    const SimTicks t = std::min(frame_t, servo_t);
    const bool is_frame = t == frame_t;
    const bool is_servo = t == servo_t;
    const double t_s = ticks_to_s(t);

    // 1. leader command frames: sample, filter, difference, send
    if (is_frame) {
      for (auto& h : hands) {
        Vec3 measured = h.path.sample(t_s);
        if (h.script->noise_mm > 0.0) {
          for (int i = 0; i < 3; ++i)
            measured(i) += h.script->noise_mm * gaussian(h.noise_rng);
        }
        Vec3 delta = Vec3::Zero();
        if (!h.kf.initialized) {
          h.kf = kalman_init(measured, cfg.kalman);
        } else {
          h.kf = kf_step(h.kf, measured, cfg.kalman);
          delta = h.kf.position() - h.prev_filtered;
        }
        h.prev_filtered = h.kf.position();

        Datagram dg;
        dg.seq = h.next_seq++;
        dg.send_time_us = ticks_to_us(t);
        dg.delta_mm = delta;
        dg.clutch_engaged = h.script->clutch_engaged_at(t_s);
        h.channel.set_outage(detail::in_outage(cfg.net, t_s));
        // round-trip the wire layout so the sim exercises the real encoding
        const auto bytes = encode_datagram(dg);
        h.channel.send(decode_datagram(bytes.data(), bytes.size()), t);
      }
    }

    // 2. deliveries: latest-valid acceptance, immediate application
    for (auto& h : hands) {
      for (const auto& delivery : h.channel.poll(t)) {
        if (receive(h.rx, delivery.dg, delivery.deliver_time) ==
            ReceiveVerdict::Accept) {
          h.link = LinkMode::Live;
          apply_payload(h, delivery.dg, t);
        } else {
          log_event(t, h.hand, "discard",
                    "seq=" + std::to_string(delivery.dg.seq));
        }
      }
    }

    // 3. watchdog: sample-and-hold inside T_wd, safe-hold beyond
    for (auto& h : hands) {
      h.link = watchdog_poll(h.rx, t, h.wd);
      if (h.link == LinkMode::SafeHold) {
        if (h.follower.gate != GateState::SafeHold) {
          h.follower.gate = GateState::SafeHold;
          h.target = h.tool_pos;
          h.tool_vel = Vec3::Zero();
          h.follower.pose = h.tool_pos;
          log_event(t, h.hand, "gate", "safe_hold");
        }
      } else {
        if (h.follower.gate == GateState::SafeHold) {
          h.follower.gate = GateState::Normal;
          h.follower.pose = h.tool_pos;
          log_event(t, h.hand, "gate", "normal");
        }
        if (h.link == LinkMode::SampleHold && h.rx.last_seq &&
            h.last_apply >= 0 && t - h.last_apply >= h.wd.period_ticks()) {
          apply_payload(h, h.rx.last_payload, t);
        }
      }
    }

    // 4. 1 kHz servo: actuator integration + haptic rendering
    if (is_servo) {
      const double dt_s = 1e-3;
      for (auto& h : hands) {
        const Vec3 old_pos = h.tool_pos;
        const Vec3 remaining = h.target - h.tool_pos;
        const Vec3 step = h.tool_vel * dt_s;
        if (step.norm() >= remaining.norm()) {
          h.tool_pos = h.target;
          h.tool_vel = Vec3::Zero();
        } else {
          h.tool_pos += step;
        }
        const Vec3 vel = (h.tool_pos - old_pos) / dt_s;
        const Vec3 prev_force = h.haptic.last_output;
        const HapticTickResult tick = haptic_tick(
            cfg.scene, h.tool_pos, vel, cfg.materials, h.haptic, cfg.limits, dt_s);
        h.haptic = tick.state;
        if (tick.rupture_event)
          log_event(t, h.hand, "rupture",
                    "count=" + std::to_string(tick.state.puncture.rupture_count));
        if (tick.force.norm() > cfg.limits.f_max + 1e-9)
          log_event(t, h.hand, "violation", "force_bound");
        if (observer) {
          TickObservation obs;
          obs.t = t;
          obs.hand = h.hand;
          obs.dt_s = dt_s;
          obs.tool_pos = h.tool_pos;
          obs.tool_vel = vel;
          obs.depth_mm = tick.contact.depth_mm;
          obs.pre_limit_force = tick.breakdown.total;
          obs.force = tick.force;
          obs.prev_force = prev_force;
          observer(obs);
        }
      }
    }

    // 5. 90 Hz log rows (latest-value decimation of the servo stream)
    if (is_frame) {
      for (auto& h : hands) {
        TrajectorySample s;
        s.t_ms = ticks_to_ms(t);
        s.hand = h.hand;
        s.p = h.tool_pos;
        s.f = h.haptic.last_output;
        const SdfHit hit = signed_distance(cfg.scene, h.tool_pos);
        s.clearance_mm = std::max(0.0, hit.phi);
        s.in_contact = hit.phi < 0.0;
        s.punctures_cum = h.haptic.puncture.rupture_count;
        s.seq = h.last_applied_seq;
        s.frame_ms = ticks_to_ms(frame_ticks);
        log.samples.push_back(s);
      }
    }

    if (is_frame) next_frame += frame_ticks;
    if (is_servo) next_servo += kServoPeriodTicks;
  }
  return log;
}

// Pure function of the log; repeated calls are identical.
inline MetricsReport replay_metrics(const RunLog& log,
                                    const std::optional<Vec3>& apex = {}) {
  if (log.header.config_hash.empty() || log.header.scenario.empty())
    throw CorruptLog("log header incomplete");
  return compute_metrics(log.samples, apex);
}

// ---------- Transport-only check (netcheck CLI) ----------

struct NetcheckReport {
  bool traffic = false;
  LatencyReport latency;
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;
  std::uint64_t accepted = 0;
  std::uint64_t discarded = 0;
  std::uint64_t safe_hold_transitions = 0;
  double first_safe_hold_ms = -1.0;
  std::vector<ClockSyncState> sync_rounds;
  LinkMode final_mode = LinkMode::Live;
};

// Streams synthetic 90 Hz command datagrams through the configured channel and
// reports latency, watchdog behavior, and periodic clock-sync rounds.
inline NetcheckReport run_netcheck(const ScenarioConfig& cfg) {
  NetcheckReport rep;
  SimChannel channel(cfg.net.channel, substream_seed(cfg.seed ^ cfg.net.seed, 11));
  std::mt19937_64 sync_rng(substream_seed(cfg.seed ^ cfg.net.seed, 12));
  LatestValidReceiver rx;
  WatchdogConfig wd;
  wd.t_wd_ms = cfg.net.t_wd_ms;

  std::vector<std::pair<std::uint64_t, std::uint64_t>> trace;
  const SimTicks duration_ticks = ticks_from_s(cfg.duration_s);
  SimTicks next_frame = 0;
  SimTicks next_sync = kTicksPerSecond;
  std::uint32_t seq = 1;
  LinkMode prev_mode = LinkMode::Live;

  for (SimTicks t = 0; t <= duration_ticks; t += kServoPeriodTicks) {
    if (t >= next_frame) {
      Datagram dg;
      dg.seq = seq++;
      dg.send_time_us = ticks_to_us(t);
      channel.set_outage(detail::in_outage(cfg.net, ticks_to_s(t)));
      channel.send(dg, t);
      next_frame += kCommandPeriodTicks;
    }
    for (const auto& delivery : channel.poll(t)) {
      if (receive(rx, delivery.dg, delivery.deliver_time) == ReceiveVerdict::Accept)
        trace.emplace_back(delivery.dg.send_time_us, ticks_to_us(t));
    }
    const LinkMode mode = watchdog_poll(rx, t, wd);
    if (mode == LinkMode::SafeHold && prev_mode != LinkMode::SafeHold) {
      ++rep.safe_hold_transitions;
      if (rep.first_safe_hold_ms < 0.0) rep.first_safe_hold_ms = ticks_to_ms(t);
    }
    prev_mode = mode;

    if (t >= next_sync) {
      // two-way exchange with channel-model delays; remote clock offset 0
      const double d1_ms =
          cfg.net.channel.delay_ms + cfg.net.channel.jitter_ms * uniform01(sync_rng);
      const double d2_ms =
          cfg.net.channel.delay_ms + cfg.net.channel.jitter_ms * uniform01(sync_rng);
      const std::int64_t t1 = static_cast<std::int64_t>(ticks_to_us(t));
      const std::int64_t t2 = t1 + static_cast<std::int64_t>(d1_ms * 1000.0);
      const std::int64_t t3 = t2;
      const std::int64_t t4 = t3 + static_cast<std::int64_t>(d2_ms * 1000.0);
      rep.sync_rounds.push_back(clock_sync_round(t1, t2, t3, t4));
      next_sync += kTicksPerSecond;
    }
  }

  rep.sent = channel.sent();
  rep.dropped = channel.dropped();
  rep.accepted = rx.accepted;
  rep.discarded = rx.discarded;
  rep.final_mode = rx.mode;
  rep.traffic = !trace.empty();
  if (rep.traffic) rep.latency = latency_report(trace);
  return rep;
}

}  // namespace telesim
