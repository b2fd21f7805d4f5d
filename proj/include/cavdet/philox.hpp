#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// keyed per-window draw stream used by the simulator. Draws depend only on
// (seed, cycle, window, tag, draw index), so windows can be generated in any
// order or on any thread.

#include <array>
#include <cmath>
#include <cstdint>

namespace cavdet {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

// Sequential uniform draws for one (cycle, window, tag) triple. Each Philox
// block yields two 53-bit doubles.
class WindowStream {
 public:
  WindowStream(std::uint64_t seed, std::uint64_t cycle, std::uint32_t window, std::uint32_t tag)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        cycle_lo_(static_cast<std::uint32_t>(cycle)),
        cycle_hi_tag_((static_cast<std::uint32_t>(cycle >> 32) & 0x00FFFFFFu) | (tag << 24)),
        window_(window) {}

  /// Uniform on the open interval (0, 1).
  double uniform() {
    if (cursor_ == 2) refill();
    const std::uint64_t bits = (std::uint64_t{block_[2 * cursor_]} << 32 | block_[2 * cursor_ + 1]) >> 11;
    ++cursor_;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
  }

  double exponential(double mean) { return -mean * std::log(uniform()); }

 private:
  void refill() {
    block_ = philox4x32_10({block_index_, window_, cycle_lo_, cycle_hi_tag_}, key_);
    ++block_index_;
    cursor_ = 0;
  }

  PhiloxKey key_;
  std::uint32_t cycle_lo_;
  std::uint32_t cycle_hi_tag_;
  std::uint32_t window_;
  std::uint32_t block_index_ = 0;
  PhiloxCounter block_{};
  int cursor_ = 2;
};

}  // namespace cavdet
