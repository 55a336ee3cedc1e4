#include "crumple/isometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crumple::isometry {

SmallMatrix SmallMatrix::identity(int d) {
  SmallMatrix m = zero(d);
  for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
  return m;
}

SmallMatrix SmallMatrix::zero(int d) {
  SmallMatrix m;
  m.dim = d;
  m.a.assign(static_cast<std::size_t>(d) * d, 0.0);
  return m;
}

void SmallMatrix::apply(std::span<const double> x,
                        std::span<double> out) const {
  for (int r = 0; r < dim; ++r) {
    double s = 0.0;
    for (int c = 0; c < dim; ++c) s += at(r, c) * x[c];
    out[r] = s;
  }
}

double SmallMatrix::orthogonality_defect() const {
  double worst = 0.0;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int r = 0; r < dim; ++r) s += at(r, i) * at(r, j);
      worst = std::max(worst, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  return worst;
}

double SmallMatrix::max_abs() const {
  double worst = 0.0;
  for (double v : a) worst = std::max(worst, std::abs(v));
  return worst;
}

PeriodicOrthogonalMap PeriodicOrthogonalMap::rotation2d() {
  PeriodicOrthogonalMap m;
  m.variant_ = MapVariant::Rotation2d;
  m.dim_ = 2;
  return m;
}

PeriodicOrthogonalMap PeriodicOrthogonalMap::sign1d() {
  PeriodicOrthogonalMap m;
  m.variant_ = MapVariant::Sign1d;
  m.dim_ = 1;
  return m;
}

PeriodicOrthogonalMap PeriodicOrthogonalMap::identity(int dim) {
  PeriodicOrthogonalMap m;
  m.variant_ = MapVariant::Identity;
  m.dim_ = dim;
  return m;
}

PeriodicOrthogonalMap PeriodicOrthogonalMap::piecewise_constant(
    std::vector<SmallMatrix> pieces) {
  if (pieces.empty())
    throw std::invalid_argument("piecewise_constant: no pieces");
  const int d = pieces.front().dim;
  for (const auto& p : pieces) {
    if (p.dim != d)
      throw std::invalid_argument("piecewise_constant: mixed dimensions");
    if (p.orthogonality_defect() > 1e-12)
      throw std::invalid_argument("piecewise_constant: piece not orthogonal");
  }
  PeriodicOrthogonalMap m;
  m.variant_ = MapVariant::PiecewiseConstant;
  m.dim_ = d;
  m.pieces_ = std::move(pieces);
  return m;
}

std::int64_t PeriodicOrthogonalMap::alignment_factor() const {
  switch (variant_) {
    case MapVariant::Rotation2d:
    case MapVariant::Identity:
      return 1;
    case MapVariant::Sign1d:
      return 2;
    case MapVariant::PiecewiseConstant:
      return static_cast<std::int64_t>(pieces_.size());
  }
  return 1;
}

SmallMatrix PeriodicOrthogonalMap::at(double t) const {
  double s = t - std::floor(t);
  switch (variant_) {
    case MapVariant::Rotation2d: {
      SmallMatrix m = SmallMatrix::zero(2);
      const double a = 2.0 * std::numbers::pi * s;
      m.at(0, 0) = std::cos(a);
      m.at(0, 1) = -std::sin(a);
      m.at(1, 0) = std::sin(a);
      m.at(1, 1) = std::cos(a);
      return m;
    }
    case MapVariant::Sign1d: {
      SmallMatrix m = SmallMatrix::zero(1);
      m.at(0, 0) = s < 0.5 ? 1.0 : -1.0;
      return m;
    }
    case MapVariant::Identity:
      return SmallMatrix::identity(dim_);
    case MapVariant::PiecewiseConstant: {
      auto p = static_cast<std::size_t>(s * static_cast<double>(pieces_.size()));
      if (p >= pieces_.size()) p = pieces_.size() - 1;
      return pieces_[p];
    }
  }
  return SmallMatrix::identity(dim_);
}

SmallMatrix PeriodicOrthogonalMap::mean_integral() const {
  switch (variant_) {
    case MapVariant::Rotation2d:
      return SmallMatrix::zero(2);
    case MapVariant::Sign1d:
      return SmallMatrix::zero(1);
    case MapVariant::Identity:
      return SmallMatrix::identity(dim_);
    case MapVariant::PiecewiseConstant: {
      SmallMatrix m = SmallMatrix::zero(dim_);
      for (const auto& p : pieces_)
        for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] += p.a[i];
      for (auto& v : m.a) v /= static_cast<double>(pieces_.size());
      return m;
    }
  }
  return SmallMatrix::identity(dim_);
}

BrownianPath crumple_path(const BrownianPath& path,
                          const PeriodicOrthogonalMap& map, std::int64_t n) {
  if (path.dim() != map.dim())
    throw std::invalid_argument("crumple_path: dimension mismatch");
  if (n < 1) throw std::invalid_argument("crumple_path: n must be >= 1");
  const std::int64_t N = path.grid().steps;
  require_divides(n * map.alignment_factor(), N, "crumple_path");

  const int d = map.dim();
  std::vector<double> out(static_cast<std::size_t>(N) * d);
  std::vector<double> in(d), res(d);
  const double nd = static_cast<double>(n);
  for (std::int64_t j = 0; j < N; ++j) {
    const SmallMatrix m = map.at(nd * path.grid().point(j));
    for (int c = 0; c < d; ++c) in[c] = path.increment(j, c);
    m.apply(in, res);
    for (int c = 0; c < d; ++c) out[j * d + c] = res[c];
  }
  return BrownianPath(path.grid(), d, std::move(out));
}

SmallMatrix mean_matrix_integral(const PeriodicOrthogonalMap& map,
                                 std::int64_t n) {
  if (n < 1)
    throw std::invalid_argument("mean_matrix_integral: n must be >= 1");
  // M has unit period, so the mean of M(n s) over [0,1] equals the mean of
  // M over one period for every integer n.
  return map.mean_integral();
}

TransformedSamples transform_rv(const PathFunctional& x,
                                const PeriodicOrthogonalMap& map,
                                std::int64_t n, TimeGrid grid,
                                RngStream stream, std::int64_t samples) {
  TransformedSamples out;
  RandomSource rs(stream);
  for (std::int64_t i = 0; i < samples; ++i) {
    BrownianPath b = sample_brownian(rs, grid, map.dim());
    std::vector<double> v = x(crumple_path(b, map, n));
    if (i == 0) {
      out.out_dim = static_cast<int>(v.size());
      out.values.reserve(static_cast<std::size_t>(samples) * out.out_dim);
    }
    if (static_cast<int>(v.size()) != out.out_dim)
      throw std::runtime_error("transform_rv: functional dimension changed");
    out.values.insert(out.values.end(), v.begin(), v.end());
  }
  return out;
}

std::vector<StableConvergenceResult> stable_convergence_experiment(
    const PathFunctional& x, const PeriodicOrthogonalMap& map,
    std::span<const std::int64_t> n_list, std::int64_t samples,
    std::int64_t grid_steps, std::span<const double> probe_times,
    std::span<const std::vector<double>> probes, const PathWeight& tilt,
    RngStream stream) {
  if (probe_times.empty())
    throw std::invalid_argument("stable_convergence: no probe times");
  const int d = map.dim();
  std::vector<StableConvergenceResult> out;
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const std::int64_t n = n_list[idx];
    const std::int64_t N =
        grid_steps > 0 ? grid_steps : 16 * n * map.alignment_factor();
    require_divides(n * map.alignment_factor(), N, "stable_convergence");
    TimeGrid grid(N);

    RandomSource rs(stream.offset(3 * idx));
    RandomSource rs_x(stream.offset(3 * idx + 1));
    RandomSource rs_b(stream.offset(3 * idx + 2));

    int out_dim = -1;
    std::vector<double> emp, ref, weights, ref_weights;
    // Covariance accumulators sized after the first draw.
    std::vector<double> cov_samples;
    for (std::int64_t i = 0; i < samples; ++i) {
      BrownianPath b = sample_brownian(rs, grid, d);
      std::vector<double> tx = x(crumple_path(b, map, n));
      if (out_dim < 0) {
        out_dim = static_cast<int>(tx.size());
        emp.reserve(static_cast<std::size_t>(samples) *
                    (out_dim + probe_times.size() * d));
        cov_samples.reserve(static_cast<std::size_t>(samples) * out_dim * d);
      }
      emp.insert(emp.end(), tx.begin(), tx.end());
      for (double t : probe_times)
        for (int c = 0; c < d; ++c) emp.push_back(b.value_at_time(t, c));
      for (int a = 0; a < out_dim; ++a)
        for (int c = 0; c < d; ++c)
          cov_samples.push_back(tx[a] * b.value(N, c));
      if (tilt) weights.push_back(tilt(b));

      // Independent copy of X and an independent Brownian block realize the
      // limit pair. Under a tilt the copy of X keeps the untilted law while
      // the Brownian block changes law, so the reference weights depend on
      // its own B only.
      BrownianPath w = sample_brownian(rs_x, grid, d);
      BrownianPath b2 = sample_brownian(rs_b, grid, d);
      std::vector<double> xw = x(w);
      ref.insert(ref.end(), xw.begin(), xw.end());
      for (double t : probe_times)
        for (int c = 0; c < d; ++c) ref.push_back(b2.value_at_time(t, c));
      if (tilt) ref_weights.push_back(tilt(b2));
    }
    const int dim = out_dim + static_cast<int>(probe_times.size()) * d;

    StableConvergenceResult res;
    res.n = n;
    res.ecf = stattest::ecf_two_sample_compare(emp, ref, dim, probes, weights,
                                               ref_weights);
    const int cov_dim = out_dim * d;
    for (int e = 0; e < cov_dim; ++e) {
      auto m = stattest::batch_mean_real(samples, [&](std::int64_t i) {
        return cov_samples[i * cov_dim + e];
      });
      res.cov.push_back(m.mean);
      res.cov_se.push_back(m.se);
    }
    out.push_back(std::move(res));
  }
  return out;
}

}  // namespace crumple::isometry
