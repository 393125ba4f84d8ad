#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "telesim/errors.hpp"
#include "telesim/metrics.hpp"
#include "telesim/types.hpp"

namespace telesim {

// Events that matter for replay and audit, interleaved with samples in time.
struct LogEvent {
  double t_ms = 0.0;
  std::optional<Hand> hand;
  std::string kind;    // rupture | gate | discard | violation
  std::string detail;  // no commas
};

struct RunLogHeader {
  std::string scenario;
  std::string config_hash;
  std::uint64_t seed = 0;
};

// Append-only record of one simulation run. CSV with a '#'-prefixed header
// block and '#E,' event rows; diffable and byte-stable on round trips.
struct RunLog {
  RunLogHeader header;
  std::vector<TrajectorySample> samples;  // chronological
  std::vector<LogEvent> events;           // chronological
};

inline constexpr std::string_view kRunLogVersion = "telesim-runlog v1";
inline constexpr std::string_view kRunLogColumns =
    "t_ms,hand,px,py,pz,fx,fy,fz,clearance_mm,contact,punctures_cum,seq,frame_ms";

namespace detail {

// Shortest representation that parses back exactly.
inline void append_double(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

inline double parse_double(std::string_view s, const char* what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw CorruptLog(std::string("bad ") + what + ": '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const char* what) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw CorruptLog(std::string("bad ") + what + ": '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

inline void append_sample(std::string& out, const TrajectorySample& s) {
  append_double(out, s.t_ms);
  out.push_back(',');
  out.append(to_string(s.hand));
  for (int i = 0; i < 3; ++i) {
    out.push_back(',');
    append_double(out, s.p(i));
  }
  for (int i = 0; i < 3; ++i) {
    out.push_back(',');
    append_double(out, s.f(i));
  }
  out.push_back(',');
  append_double(out, s.clearance_mm);
  out.push_back(',');
  out.push_back(s.in_contact ? '1' : '0');
  out.push_back(',');
  out.append(std::to_string(s.punctures_cum));
  out.push_back(',');
  out.append(std::to_string(s.seq));
  out.push_back(',');
  append_double(out, s.frame_ms);
  out.push_back('\n');
}

inline void append_event(std::string& out, const LogEvent& e) {
  out.append("#E,");
  append_double(out, e.t_ms);
  out.push_back(',');
  out.append(e.hand ? to_string(*e.hand) : "-");
  out.push_back(',');
  out.append(e.kind);
  out.push_back(',');
  out.append(e.detail);
  out.push_back('\n');
}

inline Hand parse_hand(std::string_view s, const char* what) {
  if (s == "L") return Hand::Left;
  if (s == "R") return Hand::Right;
  throw CorruptLog(std::string("bad ") + what + ": '" + std::string(s) + "'");
}

}  // namespace detail

inline std::string serialize_run_log(const RunLog& log) {
  std::string out;
  out.reserve(96 * (log.samples.size() + log.events.size()) + 256);
  out.append("# ").append(kRunLogVersion).push_back('\n');
  out.append("# scenario: ").append(log.header.scenario).push_back('\n');
  out.append("# config_hash: ").append(log.header.config_hash).push_back('\n');
  out.append("# seed: ").append(std::to_string(log.header.seed)).push_back('\n');
  out.append("# columns: ").append(kRunLogColumns).push_back('\n');

  // merge events and samples chronologically; events first on ties
  std::size_t ei = 0, si = 0;
  while (ei < log.events.size() || si < log.samples.size()) {
    const bool take_event =
        ei < log.events.size() &&
        (si >= log.samples.size() || log.events[ei].t_ms <= log.samples[si].t_ms);
    if (take_event)
      detail::append_event(out, log.events[ei++]);
    else
      detail::append_sample(out, log.samples[si++]);
  }
  return out;
}

inline void write_run_log(const RunLog& log, std::ostream& os) {
  os << serialize_run_log(log);
}

inline void write_run_log(const RunLog& log, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path.string());
  write_run_log(log, os);
}

inline RunLog parse_run_log(const std::string& text) {
  RunLog log;
  std::istringstream in(text);
  std::string line;
  bool version_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("#E,", 0) == 0) {
      const auto fields = detail::split_csv(std::string_view(line).substr(3));
      if (fields.size() < 4) throw CorruptLog("event row needs 4 fields");
      LogEvent e;
      e.t_ms = detail::parse_double(fields[0], "event t_ms");
      if (fields[1] != "-") e.hand = detail::parse_hand(fields[1], "event hand");
      e.kind = std::string(fields[2]);
      e.detail = std::string(fields[3]);
      for (std::size_t i = 4; i < fields.size(); ++i)
        e.detail += "," + std::string(fields[i]);
      log.events.push_back(std::move(e));
      continue;
    }
    if (line[0] == '#') {
      const std::string_view body = std::string_view(line).substr(1);
      const std::string_view trimmed =
          body.substr(body.find_first_not_of(' '));
      if (trimmed == kRunLogVersion) {
        version_seen = true;
      } else if (trimmed.rfind("scenario: ", 0) == 0) {
        log.header.scenario = std::string(trimmed.substr(10));
      } else if (trimmed.rfind("config_hash: ", 0) == 0) {
        log.header.config_hash = std::string(trimmed.substr(13));
      } else if (trimmed.rfind("seed: ", 0) == 0) {
        log.header.seed = detail::parse_u64(trimmed.substr(6), "seed");
      } else if (trimmed.rfind("columns: ", 0) == 0) {
        if (trimmed.substr(9) != kRunLogColumns)
          throw CorruptLog("unexpected column layout");
      } else {
        throw CorruptLog("unknown header line: " + line);
      }
      continue;
    }
    const auto fields = detail::split_csv(line);
    if (fields.size() != 13) throw CorruptLog("sample row needs 13 columns");
    TrajectorySample s;
    s.t_ms = detail::parse_double(fields[0], "t_ms");
    s.hand = detail::parse_hand(fields[1], "hand");
    for (int i = 0; i < 3; ++i) s.p(i) = detail::parse_double(fields[2 + i], "p");
    for (int i = 0; i < 3; ++i) s.f(i) = detail::parse_double(fields[5 + i], "f");
    s.clearance_mm = detail::parse_double(fields[8], "clearance_mm");
    if (fields[9] == "1")
      s.in_contact = true;
    else if (fields[9] == "0")
      s.in_contact = false;
    else
      throw CorruptLog("bad contact flag");
    s.punctures_cum = detail::parse_u64(fields[10], "punctures_cum");
    s.seq = static_cast<std::uint32_t>(detail::parse_u64(fields[11], "seq"));
    s.frame_ms = detail::parse_double(fields[12], "frame_ms");
    log.samples.push_back(s);
  }
  if (!version_seen) throw CorruptLog("missing version header");
  return log;
}

inline RunLog read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorruptLog("cannot open log: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_log(ss.str());
}

}  // namespace telesim
