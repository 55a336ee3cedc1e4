#include "crumple/brownian.hpp"

#include <cmath>
#include <stdexcept>

namespace crumple {

BrownianPath::BrownianPath(TimeGrid grid, int dim,
                           std::vector<double> increments)
    : grid_(grid), dim_(dim), inc_(std::move(increments)) {
  if (dim_ < 1) throw std::invalid_argument("BrownianPath: dim must be >= 1");
  if (static_cast<std::int64_t>(inc_.size()) != grid_.steps * dim_)
    throw std::invalid_argument("BrownianPath: increment count mismatch");
  cum_.assign(static_cast<std::size_t>((grid_.steps + 1) * dim_), 0.0);
  for (std::int64_t j = 0; j < grid_.steps; ++j)
    for (int c = 0; c < dim_; ++c)
      cum_[(j + 1) * dim_ + c] = cum_[j * dim_ + c] + inc_[j * dim_ + c];
}

double BrownianPath::value_at_time(double t, int c) const {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("BrownianPath: time outside [0,1]");
  auto j = static_cast<std::int64_t>(
      std::floor(t * static_cast<double>(grid_.steps)));
  if (j > grid_.steps) j = grid_.steps;
  return value(j, c);
}

BrownianPath sample_brownian(RandomSource& source, TimeGrid grid, int dim) {
  if (dim < 1) throw std::invalid_argument("sample_brownian: dim must be >= 1");
  const double root_dt = std::sqrt(grid.dt);
  std::vector<double> inc(static_cast<std::size_t>(grid.steps * dim));
  for (auto& v : inc) v = root_dt * source.normal();
  return BrownianPath(grid, dim, std::move(inc));
}

}  // namespace crumple
