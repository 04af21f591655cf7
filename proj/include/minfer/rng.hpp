#ifndef MINFER_RNG_H
#define MINFER_RNG_H

#include <cstdint>
#include <vector>

namespace minfer {

/* Counter-based generator: every draw is a pure function of
 * (seed, stream, counter), so replicate i / epoch e can be handed its own
 * stream and produce identical values no matter which thread runs it or in
 * what order. SplitMix64 finalizer over a golden-ratio stride. */
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t next_u64();
  double uniform();                    // [0, 1)
  double normal();                     // standard normal (Box-Muller, pair not cached)
  std::uint64_t uniform_int(std::uint64_t n);  // {0, ..., n-1}
  double beta22();                     // Beta(2,2): median of three uniforms

 private:
  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

/* Stable stream ids for the work decomposition. */
namespace streams {
constexpr std::uint64_t kDataset = 0x01;
constexpr std::uint64_t kResample = 0x02;
constexpr std::uint64_t kEpoch = 0x03;
constexpr std::uint64_t kInit = 0x04;
constexpr std::uint64_t kTest = 0x05;
}  // namespace streams

/* Derive a child seed; used to key per-epoch datasets, per-replicate
 * resampling, and similar nested work. */
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t index);

/* n with-replacement draws from {0,...,n-1} for replicate `index`. */
void resample_indices(std::uint64_t seed, std::uint64_t index, int n, std::vector<int>& out);

}  // namespace minfer

#endif
