#pragma once

#include <array>
#include <cstdint>

namespace adamlab {

// Philox 4x32-10 block cipher (Salmon et al., SC 2011). Counter-based: every
// (counter, key) pair maps to four independent 32-bit words, so streams can be
// indexed rather than advanced. Used everywhere noise has to be reproducible
// and scheduling-independent.
std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key);

/// Gaussian stream keyed by (seed, stream_id); draws are indexed by (step, coordinate).
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, std::uint32_t stream_id) : seed_(seed), stream_(stream_id) {}

  /// Standard normal, a pure function of (seed, stream_id, step, coord).
  double normal(std::uint64_t step, std::uint32_t coord) const;

  /// Uniform in (0, 1), same indexing.
  double uniform(std::uint64_t step, std::uint32_t coord) const;

  std::uint64_t seed() const { return seed_; }
  std::uint32_t stream_id() const { return stream_; }

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t step, std::uint32_t coord) const;

  std::uint64_t seed_;
  std::uint32_t stream_;
};

/// Sequential convenience wrapper over a GaussianStream (distinct draw per call).
class SequentialRng {
 public:
  SequentialRng(std::uint64_t seed, std::uint32_t stream_id = 0) : stream_(seed, stream_id) {}

  double normal() { return stream_.normal(n_++, 0); }
  double uniform() { return stream_.uniform(n_++, 0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  GaussianStream stream_;
  std::uint64_t n_ = 0;
};

}  // namespace adamlab
