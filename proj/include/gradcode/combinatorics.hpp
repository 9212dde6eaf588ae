#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <type_traits>
#include <vector>

namespace gradcode {

// C(n, r), saturating at UINT64_MAX.
inline std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  std::uint64_t acc = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    const std::uint64_t num = n - r + i;
    const std::uint64_t g = std::gcd(acc, i);
    const std::uint64_t a = acc / g;
    const std::uint64_t den = i / g;
    // den divides num since gcd(a, den) = 1 and the result is integral.
    const std::uint64_t factor = num / den;
    if (a > std::numeric_limits<std::uint64_t>::max() / factor)
      return std::numeric_limits<std::uint64_t>::max();
    acc = a * factor;
  }
  return acc;
}

// Calls fn(const std::vector<size_t>&) for every r-subset of [0, n) in
// lexicographic order. fn may return false to stop early.
template <class Fn>
void for_each_combination(std::size_t n, std::size_t r, Fn&& fn) {
  if (r > n) return;
  std::vector<std::size_t> idx(r);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  while (true) {
    if constexpr (std::is_same_v<decltype(fn(idx)), bool>) {
      if (!fn(static_cast<const std::vector<std::size_t>&>(idx))) return;
    } else {
      fn(static_cast<const std::vector<std::size_t>&>(idx));
    }
    std::size_t i = r;
    while (i > 0 && idx[i - 1] == n - r + (i - 1)) --i;
    if (i == 0) return;
    ++idx[i - 1];
    for (std::size_t j = i; j < r; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace gradcode
