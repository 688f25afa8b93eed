#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <unordered_map>
#include <vector>

#include "xshift/simplex.hpp"

namespace xshift {

inline constexpr std::size_t kDefaultLatticeCap = 1'000'000;

/// C(M + d - 1, d - 1), saturating at the largest uint64.
inline std::uint64_t composition_count(std::size_t d, int M) {
  if (d == 0 || M < 0) return 0;
  const std::uint64_t k = d - 1;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    const std::uint64_t num = static_cast<std::uint64_t>(M) + i;
    if (r > std::numeric_limits<std::uint64_t>::max() / num) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r = r * num / i;  // exact: r * num is divisible by i at every step
  }
  return r;
}

/// All compositions of M into d nonnegative parts, lexicographic order.
inline std::vector<LatticeState> enumerate_lattice(std::size_t d, int M,
                                                   std::size_t cap = kDefaultLatticeCap) {
  if (d < 2) throw Error("lattice dimension must be at least 2");
  if (M < 1) throw Error("particle count must be at least 1");
  const std::uint64_t count = composition_count(d, M);
  if (count > cap) {
    throw Error("lattice with " + std::to_string(count) + " states exceeds the cap of " +
                std::to_string(cap));
  }
  std::vector<LatticeState> out;
  out.reserve(count);
  Counts c(d, 0);
  // Depth-first fill in increasing order of each leading coordinate.
  auto rec = [&](auto&& self, std::size_t pos, int remaining) -> void {
    if (pos + 1 == d) {
      c[pos] = remaining;
      out.emplace_back(c);
      return;
    }
    for (int k = 0; k <= remaining; ++k) {
      c[pos] = k;
      self(self, pos + 1, remaining - k);
    }
  };
  rec(rec, 0, M);
  return out;
}

/// Hash lookup from lattice state to its position in an enumeration.
class LatticeIndex {
 public:
  LatticeIndex() = default;
  explicit LatticeIndex(const std::vector<LatticeState>& states) {
    if (states.empty()) return;
    base_ = static_cast<std::uint64_t>(states.front().total()) + 1;
    map_.reserve(states.size());
    for (std::size_t k = 0; k < states.size(); ++k) map_.emplace(key(states[k]), k);
  }

  std::optional<std::size_t> find(const LatticeState& s) const {
    auto it = map_.find(key(s));
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::uint64_t key(const LatticeState& s) const {
    std::uint64_t k = 0;
    for (int c : s.counts()) k = k * base_ + static_cast<std::uint64_t>(c);
    return k;
  }

  std::uint64_t base_ = 1;
  std::unordered_map<std::uint64_t, std::size_t> map_;
};

}  // namespace xshift
