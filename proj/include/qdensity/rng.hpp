#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qdensity {

// Counter-based normal/uniform streams. A draw is a pure function of
// (seed, stream, index), so draws can be produced in any order, by any
// number of workers, with identical results.
namespace rng {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

// Uniform in the open interval (0, 1), 53 bits.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

class CounterStream {
 public:
  constexpr CounterStream(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_(derive_key(seed, stream)) {}

  constexpr std::uint64_t bits(std::uint64_t index, std::uint64_t lane = 0) const noexcept {
    return mix64(key_ ^ mix64(2 * index + lane));
  }

  constexpr double uniform(std::uint64_t index) const noexcept {
    return to_open_unit(bits(index));
  }

  // Standard normal via Box-Muller, one value per index.
  double normal(std::uint64_t index) const noexcept {
    const double u1 = to_open_unit(bits(index, 0));
    const double u2 = to_open_unit(bits(index, 1));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace rng
}  // namespace qdensity
