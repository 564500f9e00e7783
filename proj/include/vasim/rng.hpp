#ifndef VASIM_RNG_HPP_
#define VASIM_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>

namespace vasim {

// Seeded random source with explicitly specified sampling algorithms.
// The engine is std::mt19937_64, whose output sequence is pinned by the
// standard, and every derived draw below is an explicit formula on raw
// 64-bit words, so traces are reproducible across compilers and platforms.
// (std::uniform_real_distribution / std::normal_distribution give no such
// guarantee and are not used anywhere in this project.)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0,1) with 53-bit resolution. Consumes one draw.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Consumes one draw (multiply-shift reduction;
  // bias is O(n/2^64) and irrelevant for the small n used here).
  std::uint32_t uniform_int(std::uint32_t n) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via the Box-Muller transform (trigonometric form).
  // Always consumes exactly two draws; the second variate of the pair is
  // discarded so the draw count per call is fixed.
  double normal() {
    const double u1 = 1.0 - uniform01();  // (0,1], keeps log() finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.141592653589793238462643383279502884 * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vasim

#endif  // VASIM_RNG_HPP_
