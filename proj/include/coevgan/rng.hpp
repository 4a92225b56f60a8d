#ifndef COEVGAN_RNG_HPP
#define COEVGAN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace coevgan {

// splitmix64 finalizer; used to derive independent seeds from (seed, tags).
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                                    std::uint64_t b = 0, std::uint64_t c = 0) {
  return mix64(seed ^ mix64(a ^ mix64(b ^ mix64(c))));
}

// Deterministic RNG wrapper. Every draw is a pure function of the engine
// state: normal() uses Box-Muller with no cached spare, so streams never
// depend on call history the way std::normal_distribution's pair cache does.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // [0, 1) with 53 random bits
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // uniform in [0, n), rejection sampled to avoid modulo bias
  std::uint64_t below(std::uint64_t n) {
    if (n < 2) return 0;
    const std::uint64_t rem = (UINT64_MAX % n + 1) % n;
    const std::uint64_t bound = UINT64_MAX - rem;
    std::uint64_t r = eng_();
    while (r > bound) r = eng_();
    return r % n;
  }

  int index(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // independent child stream
  Rng fork(std::uint64_t tag) { return Rng(mix64(next_u64() ^ mix64(tag))); }

 private:
  std::mt19937_64 eng_;
};

}  // namespace coevgan

#endif  // COEVGAN_RNG_HPP
