#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace crumple {

// Uniform grid t_j = j/N, j = 0..N, on [0,1].
struct TimeGrid {
  std::int64_t steps = 0;  // N
  double dt = 0.0;         // 1/N

  TimeGrid() = default;
  explicit TimeGrid(std::int64_t n)
      : steps(n), dt(1.0 / static_cast<double>(n)) {
    if (n < 1)
      throw std::invalid_argument("TimeGrid: steps must be >= 1, got " +
                                  std::to_string(n));
  }

  double point(std::int64_t j) const {
    return static_cast<double>(j) / static_cast<double>(steps);
  }

  bool operator==(const TimeGrid& other) const {
    return steps == other.steps;
  }
};

// Throws unless n is a positive multiple of divisor.
inline void require_divides(std::int64_t divisor, std::int64_t n,
                            const std::string& context) {
  if (divisor < 1 || n < 1 || n % divisor != 0)
    throw std::invalid_argument(context + ": grid size " + std::to_string(n) +
                                " is not a multiple of " +
                                std::to_string(divisor));
}

}  // namespace crumple
