#pragma once

#include <cstdint>
#include <random>

namespace crumple {

// Identifies one reproducible random stream. The same (master_seed,
// stream_index) always reproduces the same sequence; distinct stream
// indices give statistically independent streams, so sample batches can
// be assigned streams by index without coordination.
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_index = 0;

  RngStream with_index(std::uint64_t index) const {
    return {master_seed, index};
  }
  RngStream offset(std::uint64_t delta) const {
    return {master_seed, stream_index + delta};
  }
};

// Instantiated generator for one stream.
class RandomSource {
 public:
  explicit RandomSource(RngStream id);

  double normal() { return normal_(engine_); }
  // Uniform on [0,1).
  double uniform01();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace crumple
