#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crumple/grid.hpp"
#include "crumple/rng.hpp"

namespace crumple {

// A d-dimensional Brownian path on a uniform grid of [0,1], stored as N
// increments with law N(0, dt I_d). Values start at 0 and are prefix sums
// of the increments. Immutable after construction.
class BrownianPath {
 public:
  // increments: step-major, increments[j*dim + c].
  BrownianPath(TimeGrid grid, int dim, std::vector<double> increments);

  const TimeGrid& grid() const { return grid_; }
  int dim() const { return dim_; }

  // Increment over [t_j, t_{j+1}), coordinate c.
  double increment(std::int64_t j, int c = 0) const {
    return inc_[j * dim_ + c];
  }
  std::span<const double> increments() const { return inc_; }

  // Cumulative value at grid index j in 0..N.
  double value(std::int64_t j, int c = 0) const { return cum_[j * dim_ + c]; }

  // Value at the grid point floor(t*N)/N (left lookup), t in [0,1].
  double value_at_time(double t, int c = 0) const;

 private:
  TimeGrid grid_;
  int dim_ = 1;
  std::vector<double> inc_;  // N * dim
  std::vector<double> cum_;  // (N+1) * dim
};

// Draws a path with i.i.d. N(0, dt) increments per coordinate.
BrownianPath sample_brownian(RandomSource& source, TimeGrid grid, int dim);

}  // namespace crumple
