#include "crumple/rng.hpp"

namespace crumple {
namespace {

// splitmix64 step, used to whiten (master_seed, stream_index) into seed
// material for the engine.
std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(RngStream id) {
  std::uint64_t state = id.master_seed;
  std::uint64_t a = splitmix64(state);
  state ^= id.stream_index * 0xda942042e4dd58b5ULL;
  std::uint64_t b = splitmix64(state);
  std::uint64_t c = splitmix64(state);
  std::uint64_t d = splitmix64(state);
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(d >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RandomSource::RandomSource(RngStream id)
    : engine_(make_engine(id)), normal_(0.0, 1.0) {}

double RandomSource::uniform01() {
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  double v = dist(engine_);
  while (v >= 1.0) v = dist(engine_);
  return v;
}

}  // namespace crumple
