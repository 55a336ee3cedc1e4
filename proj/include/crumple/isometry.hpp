#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crumple/brownian.hpp"
#include "crumple/stattest.hpp"

// Crumpling isometries of the stochastic measure: B maps to the path with
// increments M(n t_j) dB_j for a unit-period orthogonal-matrix map M with
// zero mean integral. The transform preserves the Wiener law for every n
// and decorrelates from B as n grows.
namespace crumple::isometry {

// Small dense square matrix, row-major.
struct SmallMatrix {
  int dim = 0;
  std::vector<double> a;

  static SmallMatrix identity(int d);
  static SmallMatrix zero(int d);

  double& at(int r, int c) { return a[static_cast<std::size_t>(r) * dim + c]; }
  double at(int r, int c) const {
    return a[static_cast<std::size_t>(r) * dim + c];
  }
  void apply(std::span<const double> x, std::span<double> out) const;
  // max |M^T M - I| entry
  double orthogonality_defect() const;
  double max_abs() const;
};

enum class MapVariant { Rotation2d, Sign1d, PiecewiseConstant, Identity };

class PeriodicOrthogonalMap {
 public:
  // Planar rotation by angle 2*pi*t.
  static PeriodicOrthogonalMap rotation2d();
  // +1 on [0,1/2), -1 on [1/2,1).
  static PeriodicOrthogonalMap sign1d();
  // Constant identity; fails the zero-mean-integral property, kept for
  // plumbing tests only.
  static PeriodicOrthogonalMap identity(int dim);
  // User-supplied orthogonal matrices on a uniform partition of [0,1].
  static PeriodicOrthogonalMap piecewise_constant(
      std::vector<SmallMatrix> pieces);

  int dim() const { return dim_; }
  MapVariant variant() const { return variant_; }
  // Grid subintervals per period needed so M(n s) is exactly resolved by
  // left-endpoint evaluation (1 where closed forms make the discrete mean
  // vanish exactly).
  std::int64_t alignment_factor() const;

  SmallMatrix at(double t) const;  // M(t mod 1)
  // Exact unit-period mean: closed-form zero for rotation2d/sign1d,
  // per-piece average for piecewise maps.
  SmallMatrix mean_integral() const;

 private:
  MapVariant variant_ = MapVariant::Identity;
  int dim_ = 1;
  std::vector<SmallMatrix> pieces_;
};

// Increments dTheta_j = M(n t_j) dB_j, left endpoints. The grid must be a
// multiple of n * alignment_factor; misalignment is rejected, never
// silently approximated.
BrownianPath crumple_path(const BrownianPath& path,
                          const PeriodicOrthogonalMap& map, std::int64_t n);

// Exact value of the unit-interval mean of M(n s) for integer n >= 1.
SmallMatrix mean_matrix_integral(const PeriodicOrthogonalMap& map,
                                 std::int64_t n);

// Path functional with a small vector output (scalar = single entry).
using PathFunctional =
    std::function<std::vector<double>(const BrownianPath&)>;
using PathWeight = std::function<double(const BrownianPath&)>;

// Draws of X evaluated on crumpled paths; row-major samples x out_dim.
struct TransformedSamples {
  std::vector<double> values;
  int out_dim = 1;
};
TransformedSamples transform_rv(const PathFunctional& x,
                                const PeriodicOrthogonalMap& map,
                                std::int64_t n, TimeGrid grid,
                                RngStream stream, std::int64_t samples);

struct StableConvergenceResult {
  std::int64_t n;
  stattest::EcfReport ecf;
  // Cov(T_n X_a, B_1(c)) entries, row-major out_dim x d, with batch SEs.
  std::vector<double> cov;
  std::vector<double> cov_se;
};

// Joint ECF of (T_n X, B at probe times) against an independently
// simulated copy of (X, B). grid_steps == 0 selects the default
// oversampling 16 * n * alignment per n. An optional tilt weights the
// empirical side (the limit is invariant under absolutely continuous
// changes of measure).
std::vector<StableConvergenceResult> stable_convergence_experiment(
    const PathFunctional& x, const PeriodicOrthogonalMap& map,
    std::span<const std::int64_t> n_list, std::int64_t samples,
    std::int64_t grid_steps, std::span<const double> probe_times,
    std::span<const std::vector<double>> probes, const PathWeight& tilt,
    RngStream stream);

}  // namespace crumple::isometry
