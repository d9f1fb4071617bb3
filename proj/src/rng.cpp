#include "adamlab/rng.hpp"

#include <cmath>
#include <numbers>

namespace adamlab {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mul_hi_lo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  lo = static_cast<std::uint32_t>(p);
  hi = static_cast<std::uint32_t>(p >> 32);
}

inline void round_once(std::array<std::uint32_t, 4>& c, const std::array<std::uint32_t, 2>& k) {
  std::uint32_t lo0, hi0, lo1, hi1;
  mul_hi_lo(kPhiloxM0, c[0], lo0, hi0);
  mul_hi_lo(kPhiloxM1, c[2], lo1, hi1);
  c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32(const std::array<std::uint32_t, 4>& counter,
                                        const std::array<std::uint32_t, 2>& key) {
  std::array<std::uint32_t, 4> c = counter;
  std::array<std::uint32_t, 2> k = key;
  round_once(c, k);
  for (int r = 1; r < 10; ++r) {
    k[0] += kWeyl0;
    k[1] += kWeyl1;
    round_once(c, k);
  }
  return c;
}

std::array<std::uint32_t, 4> GaussianStream::block(std::uint64_t step, std::uint32_t coord) const {
  const std::array<std::uint32_t, 4> counter = {
      coord,
      static_cast<std::uint32_t>(step),
      static_cast<std::uint32_t>(step >> 32),
      stream_,
  };
  const std::array<std::uint32_t, 2> key = {
      static_cast<std::uint32_t>(seed_),
      static_cast<std::uint32_t>(seed_ >> 32),
  };
  return philox4x32(counter, key);
}

double GaussianStream::uniform(std::uint64_t step, std::uint32_t coord) const {
  const auto b = block(step, coord);
  const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  // 53 significand bits, shifted into (0, 1).
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::normal(std::uint64_t step, std::uint32_t coord) const {
  const auto b = block(step, coord);
  const std::uint64_t bits0 = (static_cast<std::uint64_t>(b[0]) << 32) | b[1];
  const double u1 = (static_cast<double>(bits0 >> 11) + 0.5) * 0x1.0p-53;
  const double u2 = (static_cast<double>(b[2]) + 0.5) * 0x1.0p-32;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace adamlab
