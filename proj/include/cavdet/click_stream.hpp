#pragma once

// Windowed, time-tagged detector clicks and their on-disk form.
//
// File format: CSV with header `window_id,channel,t_ns`, channel is `s`
// (signal) or `p` (probe), LF line endings. A sidecar `<file>.meta` holds a
// [stream] section with the window layout and seed followed by the resolved
// generating configuration.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cavdet/errors.hpp"
#include "cavdet/keyvalue.hpp"

namespace cavdet {

enum class Channel : std::uint8_t { signal = 0, probe = 1 };

inline char channel_code(Channel c) { return c == Channel::signal ? 's' : 'p'; }

struct ClickEvent {
  std::uint64_t window_id = 0;
  std::int64_t t_ns = 0;
  Channel channel = Channel::signal;

  friend bool operator==(const ClickEvent&, const ClickEvent&) = default;
  friend bool operator<(const ClickEvent& a, const ClickEvent& b) {
    if (a.window_id != b.window_id) return a.window_id < b.window_id;
    if (a.t_ns != b.t_ns) return a.t_ns < b.t_ns;
    return a.channel < b.channel;
  }
};

struct StreamMetadata {
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  std::uint64_t n_cycles = 1;
  std::uint32_t windows_per_cycle = 1;
  std::int64_t window_ns = 20000;

  std::uint64_t n_windows() const { return n_cycles * windows_per_cycle; }
  std::uint64_t cycle_of(std::uint64_t window_id) const { return window_id / windows_per_cycle; }
  std::uint32_t slot_of(std::uint64_t window_id) const {
    return static_cast<std::uint32_t>(window_id % windows_per_cycle);
  }
  double window_us() const { return static_cast<double>(window_ns) * 1e-3; }
  double total_time_us() const { return static_cast<double>(n_windows()) * window_us(); }

  friend bool operator==(const StreamMetadata&, const StreamMetadata&) = default;
};

struct ClickStream {
  StreamMetadata meta;
  std::vector<ClickEvent> events;  // sorted by (window_id, t_ns, channel)

  std::size_t count(Channel c) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [c](const ClickEvent& e) { return e.channel == c; }));
  }

  /// Checks ordering and window bounds.
  void validate() const {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (e.t_ns < 0 || e.t_ns >= meta.window_ns) throw DomainError("click outside its window");
      if (e.window_id >= meta.n_windows()) throw DomainError("window_id beyond stream length");
      if (i > 0 && events[i] < events[i - 1]) throw DomainError("clicks not sorted");
    }
  }
};

inline void write_stream_csv(std::ostream& out, const ClickStream& stream) {
  std::string buf;
  buf.reserve(1 << 20);
  buf += "window_id,channel,t_ns\n";
  char num[32];
  for (const auto& e : stream.events) {
    auto r = std::to_chars(num, num + sizeof num, e.window_id);
    buf.append(num, r.ptr);
    buf += ',';
    buf += channel_code(e.channel);
    buf += ',';
    r = std::to_chars(num, num + sizeof num, e.t_ns);
    buf.append(num, r.ptr);
    buf += '\n';
    if (buf.size() > (1 << 20) - 64) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

inline std::vector<ClickEvent> read_stream_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != "window_id,channel,t_ns")
    throw ConfigError(1, "", "click stream must start with 'window_id,channel,t_ns'");
  std::vector<ClickEvent> events;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos || c2 != c1 + 2) throw ConfigError(line_no, "", "malformed click line");
    ClickEvent e;
    auto r1 = std::from_chars(line.data(), line.data() + c1, e.window_id);
    auto r2 = std::from_chars(line.data() + c2 + 1, line.data() + line.size(), e.t_ns);
    if (r1.ec != std::errc{} || r1.ptr != line.data() + c1 || r2.ec != std::errc{} ||
        r2.ptr != line.data() + line.size())
      throw ConfigError(line_no, "", "malformed number in click line");
    const char ch = line[c1 + 1];
    if (ch == 's') {
      e.channel = Channel::signal;
    } else if (ch == 'p') {
      e.channel = Channel::probe;
    } else {
      throw ConfigError(line_no, "", "channel must be 's' or 'p'");
    }
    events.push_back(e);
  }
  return events;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  return std::filesystem::path(csv.string() + ".meta");
}

inline KeyValueDocument stream_sidecar(const ClickStream& stream, const KeyValueDocument& config) {
  KeyValueDocument doc;
  doc.set("stream.seed", stream.meta.seed);
  doc.set("stream.config_hash", stream.meta.config_hash);
  doc.set("stream.n_cycles", stream.meta.n_cycles);
  doc.set("stream.windows_per_cycle", std::uint64_t{stream.meta.windows_per_cycle});
  doc.set("stream.window_ns", static_cast<std::uint64_t>(stream.meta.window_ns));
  doc.set("stream.event_count", static_cast<std::uint64_t>(stream.events.size()));
  doc.merge(config);
  return doc;
}

inline void save_stream(const std::filesystem::path& csv, const ClickStream& stream,
                        const KeyValueDocument& config) {
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    write_stream_csv(out, stream);
  }
  stream_sidecar(stream, config).save(sidecar_path(csv));
}

inline StreamMetadata metadata_from_sidecar(const KeyValueDocument& doc) {
  auto need = [&](const char* key) {
    auto v = doc.get_uint(key);
    if (!v) throw ConfigError(0, key, "missing from stream sidecar");
    return *v;
  };
  StreamMetadata m;
  m.seed = need("stream.seed");
  m.config_hash = need("stream.config_hash");
  m.n_cycles = need("stream.n_cycles");
  m.windows_per_cycle = static_cast<std::uint32_t>(need("stream.windows_per_cycle"));
  m.window_ns = static_cast<std::int64_t>(need("stream.window_ns"));
  if (m.n_cycles == 0 || m.windows_per_cycle == 0 || m.window_ns <= 0)
    throw ConfigError(0, "stream", "degenerate window layout in sidecar");
  return m;
}

/// Loads a stream and its sidecar; the sidecar document is returned through
/// `sidecar` when non-null.
inline ClickStream load_stream(const std::filesystem::path& csv, KeyValueDocument* sidecar = nullptr) {
  const auto doc = KeyValueDocument::load(sidecar_path(csv));
  ClickStream s;
  s.meta = metadata_from_sidecar(doc);
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw ConfigError(0, csv.string(), "cannot open click stream");
  s.events = read_stream_csv(in);
  s.validate();
  if (sidecar) *sidecar = doc;
  return s;
}

}  // namespace cavdet
