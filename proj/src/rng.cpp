#include "minfer/rng.hpp"

#include <cmath>

namespace minfer {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream)
    : key_(mix64(mix64(seed + kGolden) ^ mix64(stream * 0xda942042e4dd58b5ULL))) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + kGolden * ++ctr_); }

double RngStream::uniform() {
  // 53-bit mantissa in [0,1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  // Box-Muller; u1 nudged away from 0 so log stays finite
  double u1 = uniform();
  double u2 = uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

std::uint64_t RngStream::uniform_int(std::uint64_t n) {
  // fixed-cost multiply-shift map; bias ~ n / 2^64 is far below Monte-Carlo noise
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double RngStream::beta22() {
  double a = uniform(), b = uniform(), c = uniform();
  // median of three
  double lo = std::fmin(a, b), hi = std::fmax(a, b);
  return std::fmax(lo, std::fmin(hi, c));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index) {
  return mix64(mix64(seed + kGolden) ^ mix64(tag * 0xda942042e4dd58b5ULL) ^
               mix64(index * 0x8bb84b93962eacc9ULL));
}

void resample_indices(std::uint64_t seed, std::uint64_t index, int n, std::vector<int>& out) {
  RngStream rs(derive_seed(seed, streams::kResample, index), index);
  out.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    out[static_cast<std::size_t>(j)] = static_cast<int>(rs.uniform_int(static_cast<std::uint64_t>(n)));
}

}  // namespace minfer
