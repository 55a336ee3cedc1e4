#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "crumple/rng.hpp"
#include "crumple/stattest.hpp"

// Fractional-part limit laws: the law of {nX} tends to Uniform[0,1]
// independent of everything else when X has a density, and the grid
// rounding X_n = [nX]/n admits first-order limit and second-moment
// expansions driven by that uniform variable.
namespace crumple::afp {

struct GridDecomposition {
  double rounded;  // [n x] / n
  double frac;     // {n x} in [0,1)
};

// Floor convention: [x] is the greatest integer <= x, so the fractional
// part lies in [0,1) also for negative x. Rejects non-finite x.
GridDecomposition grid_decompose(double x, std::int64_t n);

struct ScalarDistribution {
  std::function<double(RandomSource&)> sampler;
  bool has_density = true;
  // Optional density dP~/dP with E[tilt(X)] = 1 under the sampling law.
  std::function<double(double)> tilt;

  static ScalarDistribution normal01();
  static ScalarDistribution uniform01();
  static ScalarDistribution exponential1();
  static ScalarDistribution degenerate(double value);
};

struct SmoothTestFunction {
  std::function<double(double)> phi;
  std::function<double(double)> dphi;
  double lipschitz_bound = 1.0;

  static SmoothTestFunction identity();
  static SmoothTestFunction sine();
  static SmoothTestFunction constant(double c);
};

// Joint sampler producing one coupled draw (X, Y).
using JointSampler = std::function<std::pair<double, double>(RandomSource&)>;

struct UniformityResult {
  std::int64_t n;
  stattest::KsReport ks;
};

// KS of the empirical law of {nX} against Uniform[0,1], per n.
std::vector<UniformityResult> uniformity_experiment(
    const ScalarDistribution& dist, std::span<const std::int64_t> n_list,
    std::int64_t samples, RngStream stream);

struct JointIndependenceResult {
  std::int64_t n;
  stattest::EcfReport ecf;
};

// Joint ECF of ({nX}, Y) against the product of the closed-form uniform CF
// and the same-sample ECF of Y; the z per probe comes from batch means of
// the paired difference, which cancels the shared sampling noise.
std::vector<JointIndependenceResult> joint_independence_experiment(
    const JointSampler& xy, std::span<const std::int64_t> n_list,
    std::int64_t samples, std::span<const std::vector<double>> probes,
    RngStream stream);

struct BiasRow {
  std::int64_t n;
  double estimate;  // n^2 E[(phi(X_n) - phi(X))^2 Z]
  double stderr_;
  double target;    // (1/3) E[phi'(X)^2 Z], common random numbers
  double z;         // paired-difference z
};

std::vector<BiasRow> bias_experiment(
    const SmoothTestFunction& phi,
    const std::function<double(RandomSource&)>& z_sampler,  // null: Z == 1
    const ScalarDistribution& dist, std::span<const std::int64_t> n_list,
    std::int64_t samples, RngStream stream);

// ECF comparison of (n(phi(X_n) - phi(X)), Y) against a direct simulation
// of (-U phi'(X), Y) with fresh U independent of a fresh (X, Y).
stattest::EcfReport first_order_limit_experiment(
    const SmoothTestFunction& phi, const JointSampler& xy, std::int64_t n,
    std::int64_t samples, std::span<const std::vector<double>> probes,
    RngStream stream);

struct PsiReport {
  double estimate = 0.0;  // (weighted) mean of psi(n(X_n - X)) = psi(-{nX})
  double se = 0.0;
  double target = 0.0;    // mean of psi(-U) on an independent stream
  double target_se = 0.0;
  double z = 0.0;
  double ess = 0.0;
  stattest::EcfReport ecf;
};

// psi is integrable on [-1,0] (may be discontinuous); n(X_n - X) = -{nX}.
// With use_tilt the distribution's tilt acts as importance weight; refuses
// to report when the effective sample size drops below 100.
PsiReport psi_experiment(const std::function<double(double)>& psi,
                         const ScalarDistribution& dist, bool use_tilt,
                         std::int64_t n, std::int64_t samples,
                         RngStream stream);

}  // namespace crumple::afp
