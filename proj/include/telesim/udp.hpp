#pragma once

// Real-socket loopback mode for integration checks. The simulated channel is
// the default everywhere; this path exists to prove the wire format and the
// latest-valid policy against an actual UDP stack.

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstring>
#include <optional>
#include <thread>
#include <vector>

#include "telesim/transport.hpp"

namespace telesim {

class UdpSocket {
 public:
  UdpSocket() = default;
  UdpSocket(const UdpSocket&) = delete;
  UdpSocket& operator=(const UdpSocket&) = delete;
  UdpSocket(UdpSocket&& other) noexcept { *this = std::move(other); }
  UdpSocket& operator=(UdpSocket&& other) noexcept {
    close_socket();
    fd_ = other.fd_;
    port_ = other.port_;
    other.fd_ = -1;
    other.port_ = 0;
    return *this;
  }
  ~UdpSocket() { close_socket(); }

  // Bind a non-blocking socket to 127.0.0.1 on an ephemeral port.
  bool open_loopback() {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) return false;
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      close_socket();
      return false;
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      close_socket();
      return false;
    }
    port_ = ntohs(addr.sin_port);
    const int flags = ::fcntl(fd_, F_GETFL, 0);
    ::fcntl(fd_, F_SETFL, flags | O_NONBLOCK);
    return true;
  }

  bool is_open() const { return fd_ >= 0; }
  std::uint16_t port() const { return port_; }

  bool send_to(std::uint16_t port, const std::uint8_t* data, std::size_t size) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = htons(port);
    return ::sendto(fd_, data, size, 0, reinterpret_cast<sockaddr*>(&addr),
                    sizeof(addr)) == static_cast<ssize_t>(size);
  }

  std::optional<std::vector<std::uint8_t>> try_recv() {
    std::uint8_t buf[128];
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0) return std::nullopt;
    return std::vector<std::uint8_t>(buf, buf + n);
  }

 private:
  void close_socket() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
    port_ = 0;
  }

  int fd_ = -1;
  std::uint16_t port_ = 0;
};

struct UdpLoopbackResult {
  bool sockets_ok = false;
  std::uint64_t sent = 0;
  std::uint64_t accepted = 0;
  std::uint64_t discarded = 0;
  bool traffic = false;
  LatencyReport latency;  // wall-clock one-way latency
};

inline std::uint64_t monotonic_us() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

// Streams command datagrams from one loopback socket to another at the given
// pace, running the receiver under the latest-valid policy.
inline UdpLoopbackResult run_udp_loopback(std::size_t n_packets,
                                          int pace_us = 11111) {
  UdpLoopbackResult result;
  UdpSocket sender, receiver;
  if (!sender.open_loopback() || !receiver.open_loopback()) return result;
  result.sockets_ok = true;

  LatestValidReceiver rx;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> trace;
  bool measuring = false;
  const auto drain = [&]() {
    while (auto bytes = receiver.try_recv()) {
      const std::uint64_t now_us = monotonic_us();
      const Datagram dg = decode_datagram(*bytes);
      if (receive(rx, dg, static_cast<SimTicks>(now_us) * kTicksPerMicrosecond) ==
              ReceiveVerdict::Accept &&
          measuring)
        trace.emplace_back(dg.send_time_us, now_us);
    }
  };

  // a few unmeasured packets absorb cold-start costs
  for (std::uint32_t warmup = 0; warmup < 5; ++warmup) {
    Datagram dg;
    dg.seq = warmup + 1;
    dg.send_time_us = monotonic_us();
    const auto bytes = encode_datagram(dg);
    if (sender.send_to(receiver.port(), bytes.data(), bytes.size()))
      ++result.sent;
    std::this_thread::sleep_for(std::chrono::microseconds(500));
    drain();
  }
  measuring = true;

  for (std::uint32_t seq = 6; seq < 6 + n_packets; ++seq) {
    Datagram dg;
    dg.seq = seq;
    dg.send_time_us = monotonic_us();
    dg.delta_mm = Vec3(0.1, 0.0, 0.0);
    const auto bytes = encode_datagram(dg);
    if (sender.send_to(receiver.port(), bytes.data(), bytes.size())) ++result.sent;
    // keep draining across the pace window so queueing time is not billed
    // as network latency
    const std::uint64_t pace_end = dg.send_time_us + static_cast<std::uint64_t>(pace_us);
    while (monotonic_us() < pace_end) {
      drain();
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
    drain();
  }
  // settle window for stragglers
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  drain();

  result.accepted = rx.accepted;
  result.discarded = rx.discarded;
  result.traffic = !trace.empty();
  if (result.traffic) result.latency = latency_report(trace);
  return result;
}

}  // namespace telesim
