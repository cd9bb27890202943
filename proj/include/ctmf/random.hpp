#pragma once

#include <cstdint>
#include <random>

namespace ctmf {

/// Purpose tags that keep independently consumed random streams from
/// colliding when they are derived from the same root seed.
enum class StreamKind : std::uint64_t {
  init = 1,
  predict = 2,
  resample = 3,
  loop_noise = 4,
  probe_noise = 5,
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Engine seeded from (seed, kind, a, b). Consumers that derive their own
/// stream this way produce the same values no matter in which order they
/// run, which is what makes particle-parallel execution reproducible.
inline std::mt19937_64 make_stream(std::uint64_t seed, StreamKind kind,
                                   std::uint64_t a, std::uint64_t b) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(kind));
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  return std::mt19937_64(h);
}

/// Beta(a, b) variate via two gamma draws. Shape pairs with a + b above
/// roughly 1e12 are treated as a point mass at the mean a/(a+b), which is
/// also the exact zero-noise limit.
inline double sample_beta(std::mt19937_64& rng, double a, double b) {
  constexpr double point_mass_concentration = 1e12;
  if (!(a + b < point_mass_concentration)) return a / (a + b);
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  const double s = x + y;
  return s > 0.0 ? x / s : a / (a + b);
}

}  // namespace ctmf
