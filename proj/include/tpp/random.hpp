#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace tpp {

// Deterministic RNG used throughout the toolkit. mt19937_64 is bit-exact by
// the standard; the variate transforms are hand-rolled because the standard
// library distributions are implementation-defined and would break
// reproducibility of seeds across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be positive");
    return -std::log(1.0 - uniform()) / rate;
  }

  // Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("integer: n must be positive");
    return static_cast<std::uint64_t>((static_cast<__uint128_t>(engine_()) * n) >> 64);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tpp
