#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <queue>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/types.hpp"

namespace telesim {

// ---------- Wire format ----------
// Fixed 38-byte little-endian layout:
//   u32 seq | u64 send_time_us | 3 x f64 increment mm | u8 clutch | u8 reserved

struct Datagram {
  std::uint32_t seq = 0;
  std::uint64_t send_time_us = 0;
  Vec3 delta_mm = Vec3::Zero();
  bool clutch_engaged = true;
};

inline constexpr std::size_t kDatagramSize = 38;

namespace detail {

template <typename T>
inline void put_le(std::uint8_t* dst, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    dst[i] = static_cast<std::uint8_t>((value >> (8 * i)) & 0xff);
}

template <typename T>
inline T get_le(const std::uint8_t* src) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    value |= static_cast<T>(src[i]) << (8 * i);
  return value;
}

inline void put_f64_le(std::uint8_t* dst, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_le<std::uint64_t>(dst, bits);
}

inline double get_f64_le(const std::uint8_t* src) {
  const std::uint64_t bits = get_le<std::uint64_t>(src);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace detail

inline std::array<std::uint8_t, kDatagramSize> encode_datagram(const Datagram& dg) {
  std::array<std::uint8_t, kDatagramSize> buf{};
  detail::put_le<std::uint32_t>(buf.data(), dg.seq);
  detail::put_le<std::uint64_t>(buf.data() + 4, dg.send_time_us);
  detail::put_f64_le(buf.data() + 12, dg.delta_mm.x());
  detail::put_f64_le(buf.data() + 20, dg.delta_mm.y());
  detail::put_f64_le(buf.data() + 28, dg.delta_mm.z());
  buf[36] = dg.clutch_engaged ? 1 : 0;
  buf[37] = 0;  // reserved
  return buf;
}

inline Datagram decode_datagram(const std::uint8_t* data, std::size_t size) {
  if (size != kDatagramSize)
    throw MalformedDatagram("expected 38 bytes, got " + std::to_string(size));
  Datagram dg;
  dg.seq = detail::get_le<std::uint32_t>(data);
  dg.send_time_us = detail::get_le<std::uint64_t>(data + 4);
  dg.delta_mm.x() = detail::get_f64_le(data + 12);
  dg.delta_mm.y() = detail::get_f64_le(data + 20);
  dg.delta_mm.z() = detail::get_f64_le(data + 28);
  dg.clutch_engaged = data[36] != 0;
  return dg;
}

inline Datagram decode_datagram(const std::vector<std::uint8_t>& buf) {
  return decode_datagram(buf.data(), buf.size());
}

// Serial-number comparison over half-range (RFC 1982): multi-hour runs
// survive the u32 wrap.
inline bool seq_greater(std::uint32_t a, std::uint32_t b) {
  return static_cast<std::int32_t>(a - b) > 0;
}

// ---------- Latest-valid receiver ----------

enum class ReceiveVerdict { Accept, DiscardStale };

struct LatestValidReceiver {
  std::optional<std::uint32_t> last_seq;
  Datagram last_payload;
  SimTicks last_recv_time = 0;  // stream start until the first packet
  LinkMode mode = LinkMode::Live;
  std::uint64_t accepted = 0;
  std::uint64_t discarded = 0;
};

// Accept iff strictly newer than everything seen (duplicates are stale).
inline ReceiveVerdict receive(LatestValidReceiver& rx, const Datagram& dg,
                              SimTicks now) {
  if (rx.last_seq && !seq_greater(dg.seq, *rx.last_seq)) {
    ++rx.discarded;
    return ReceiveVerdict::DiscardStale;
  }
  rx.last_seq = dg.seq;
  rx.last_payload = dg;
  rx.last_recv_time = now;
  rx.mode = LinkMode::Live;
  ++rx.accepted;
  return ReceiveVerdict::Accept;
}

struct WatchdogConfig {
  double t_wd_ms = 100.0;
  double command_period_s = 1.0 / 90.0;

  SimTicks t_wd_ticks() const { return ticks_from_ms(t_wd_ms); }
  SimTicks period_ticks() const { return ticks_from_s(command_period_s); }
};

// silence <= one command period: Live; <= T_wd: SampleHold (reuse the last
// payload); beyond T_wd: SafeHold (freeze the follower).
inline LinkMode watchdog_poll(LatestValidReceiver& rx, SimTicks now,
                              const WatchdogConfig& cfg) {
  const SimTicks silence = now - rx.last_recv_time;
  if (silence <= cfg.period_ticks())
    rx.mode = LinkMode::Live;
  else if (silence <= cfg.t_wd_ticks())
    rx.mode = LinkMode::SampleHold;
  else
    rx.mode = LinkMode::SafeHold;
  return rx.mode;
}

// ---------- Clock synchronization ----------

struct ClockSyncState {
  double offset_us = 0.0;  // remote clock minus local clock
  double rtt_us = 0.0;
  std::int64_t last_round_time_us = 0;
};

// Two-way four-timestamp exchange (t1 local send, t2 remote receive, t3
// remote send, t4 local receive). Offset error is bounded by rtt/2.
inline ClockSyncState clock_sync_round(std::int64_t t1_us, std::int64_t t2_us,
                                       std::int64_t t3_us, std::int64_t t4_us) {
  if (t4_us < t1_us || t3_us < t2_us)
    throw NonCausalTimestamps("clock sync round violates causality");
  ClockSyncState s;
  s.offset_us = (static_cast<double>(t2_us - t1_us) +
                 static_cast<double>(t3_us - t4_us)) /
                2.0;
  s.rtt_us = static_cast<double>((t4_us - t1_us) - (t3_us - t2_us));
  s.last_round_time_us = t4_us;
  return s;
}

// ---------- Simulated channel ----------

struct ChannelModel {
  double loss_prob = 0.0;
  double delay_ms = 0.0;
  double jitter_ms = 0.0;  // uniform [0, jitter_ms) added per packet
  bool reorder = false;    // without it, delivery is forced FIFO
};

class SimChannel {
 public:
  struct Delivery {
    Datagram dg;
    SimTicks deliver_time = 0;
  };

  SimChannel() : rng_(0) {}
  SimChannel(const ChannelModel& model, std::uint64_t seed)
      : model_(model), rng_(seed) {}

  void set_outage(bool active) { outage_ = active; }
  const ChannelModel& model() const { return model_; }

  void send(const Datagram& dg, SimTicks now) {
    ++sent_;
    // rng draws happen for every packet so outages do not shift the stream
    const double loss_draw = uniform01(rng_);
    const double jitter_draw = uniform01(rng_);
    if (outage_ || loss_draw < model_.loss_prob) {
      ++dropped_;
      return;
    }
    const double delay_ms = model_.delay_ms + model_.jitter_ms * jitter_draw;
    SimTicks deliver = now + ticks_from_ms(delay_ms);
    if (!model_.reorder) deliver = std::max(deliver, last_fifo_time_);
    last_fifo_time_ = deliver;
    pending_.push(Entry{deliver, order_++, dg});
  }

  // All datagrams due by `now`, ordered by delivery time (send order on ties).
  std::vector<Delivery> poll(SimTicks now) {
    std::vector<Delivery> out;
    while (!pending_.empty() && pending_.top().deliver_time <= now) {
      out.push_back({pending_.top().dg, pending_.top().deliver_time});
      pending_.pop();
    }
    return out;
  }

  std::uint64_t sent() const { return sent_; }
  std::uint64_t dropped() const { return dropped_; }
  std::size_t in_flight() const { return pending_.size(); }

 private:
  struct Entry {
    SimTicks deliver_time;
    std::uint64_t order;
    Datagram dg;
    bool operator>(const Entry& other) const {
      if (deliver_time != other.deliver_time)
        return deliver_time > other.deliver_time;
      return order > other.order;
    }
  };

  ChannelModel model_;
  std::mt19937_64 rng_;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pending_;
  SimTicks last_fifo_time_ = 0;
  std::uint64_t order_ = 0;
  std::uint64_t sent_ = 0;
  std::uint64_t dropped_ = 0;
  bool outage_ = false;
};

// ---------- Latency accounting ----------

struct LatencyReport {
  std::size_t count = 0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
  double budget_ms = 1000.0 / 90.0;  // one command frame
  bool pass = false;
  std::vector<std::size_t> violations;  // indices of over-budget samples
};

// trace entries are (send_time_us, apply_time_us) pairs.
inline LatencyReport latency_report(
    const std::vector<std::pair<std::uint64_t, std::uint64_t>>& trace,
    double budget_ms = 1000.0 / 90.0) {
  if (trace.empty()) throw EmptyTrace("latency trace is empty");
  LatencyReport rep;
  rep.count = trace.size();
  rep.budget_ms = budget_ms;
  std::vector<double> lat_ms;
  lat_ms.reserve(trace.size());
  double sum = 0.0, max_v = 0.0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& [send_us, apply_us] = trace[i];
    const double ms =
        (static_cast<double>(apply_us) - static_cast<double>(send_us)) / 1000.0;
    lat_ms.push_back(ms);
    sum += ms;
    max_v = std::max(max_v, ms);
    if (ms > budget_ms) rep.violations.push_back(i);
  }
  rep.mean_ms = sum / static_cast<double>(lat_ms.size());
  rep.max_ms = max_v;
  std::sort(lat_ms.begin(), lat_ms.end());
  const double rank = 0.95 * static_cast<double>(lat_ms.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  const std::size_t hi = std::min(lo + 1, lat_ms.size() - 1);
  rep.p95_ms = lat_ms[lo] + (rank - static_cast<double>(lo)) * (lat_ms[hi] - lat_ms[lo]);
  rep.pass = rep.max_ms <= budget_ms;
  return rep;
}

}  // namespace telesim
