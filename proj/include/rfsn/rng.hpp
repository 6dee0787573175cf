#pragma once

#include <cstdint>
#include <random>

namespace rfsn {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer; decorrelates nearby seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent engine for (seed, stream, index). Streams name the purpose
/// (symbols, noise, bursts) so that changing one never shifts another.
inline Engine make_engine(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t index = 0) {
  return Engine(mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index));
}

namespace stream {
inline constexpr std::uint64_t symbols = 0x53594d42;  // "SYMB"
inline constexpr std::uint64_t noise = 0x4e4f4953;    // "NOIS"
inline constexpr std::uint64_t bursts = 0x42525354;   // "BRST"
inline constexpr std::uint64_t jitter = 0x4a495454;   // "JITT"
}  // namespace stream

}  // namespace rfsn
