#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace crumple::stattest {

using cplx = std::complex<double>;

// Batch-means batches used for all standard errors.
inline constexpr int kBatchCount = 32;
// Verdict threshold: max |z| <= 3 is declared PASS. Calibration choice,
// echoed in every report that uses it.
inline constexpr double kMaxZPass = 3.0;

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

struct KsReport {
  double d_stat = 0.0;
  std::int64_t sample_size = 0;
  double p_value = 0.0;
};

// Survival function P(K > lambda) of the asymptotic Kolmogorov distribution,
// 2 * sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2), truncated at j = 100.
double kolmogorov_sf(double lambda);

// One-sample KS test against Uniform[0,1). Requires >= 20 samples, all in
// [0,1). Asymptotic p-value (valid for the sample sizes in use here).
KsReport ks_uniform(std::span<const double> samples);

// ---------------------------------------------------------------------------
// Empirical characteristic functions

struct EcfValue {
  cplx value{};
  double se = 0.0;  // batch-means SE, re/im combined in quadrature
};

struct EcfRow {
  std::vector<double> freq;
  cplx emp{};
  double emp_se = 0.0;
  cplx ref{};
  double ref_se = 0.0;
  double z = 0.0;  // |emp - ref| / sqrt(emp_se^2 + ref_se^2)
};

struct EcfReport {
  std::vector<EcfRow> rows;
  double max_abs_z = 0.0;
  double ess = 0.0;  // effective sample size of the empirical side
};

double effective_sample_size(std::span<const double> weights);

// ECF of row-major samples (count x dim) at the probe frequencies.
// Optional nonnegative weights are normalized internally; requires
// effective sample size >= 100 when weighting. The zero frequency is
// exactly 1 with zero SE.
std::vector<EcfValue> ecf(std::span<const double> samples, int dim,
                          std::span<const std::vector<double>> probes,
                          std::span<const double> weights = {});

// Joint-law comparison of two sample sets of the same dimension; the
// reference side is an independently simulated realization of the limit
// (weighted as well when the limit is stated under a tilted measure).
EcfReport ecf_two_sample_compare(std::span<const double> emp,
                                 std::span<const double> ref, int dim,
                                 std::span<const std::vector<double>> probes,
                                 std::span<const double> emp_weights = {},
                                 std::span<const double> ref_weights = {});

// Product-law comparison: the reference value per probe is the product of
// the blocks' ECFs computed from `reference`, blocks given by coordinate
// index groups in `split`.
EcfReport ecf_product_compare(std::span<const double> joint, int dim,
                              const std::vector<std::vector<int>>& split,
                              std::span<const std::vector<double>> probes,
                              std::span<const double> reference,
                              std::span<const double> joint_weights = {});

// Default probe grid: {-amp, 0, amp}^2 over every coordinate pair,
// deduplicated (9 points for dim == 2).
std::vector<std::vector<double>> pair_probe_grid(int dim,
                                                 double amplitude = 2.0);

// Characteristic function of Uniform[0,1] at real frequency u.
cplx uniform_cf(double u);

// ---------------------------------------------------------------------------
// Batch means

struct MeanSe {
  cplx mean{};
  double se = 0.0;
};
struct MeanSeReal {
  double mean = 0.0;
  double se = 0.0;
};

// Mean and batch-means SE over kBatchCount contiguous batches of the
// per-sample statistic f(i). Weights, when given, must have length
// `samples` and are normalized internally.
template <class F>
MeanSe batch_mean(std::int64_t samples, F&& f,
                  std::span<const double> weights = {}) {
  if (samples < kBatchCount)
    throw std::invalid_argument("batch_mean: needs >= 32 samples");
  cplx batch_value[kBatchCount];
  double batch_weight[kBatchCount];
  std::int64_t start = 0;
  for (int b = 0; b < kBatchCount; ++b) {
    std::int64_t stop = samples * (b + 1) / kBatchCount;
    cplx sum = 0.0;
    double wsum = 0.0;
    for (std::int64_t i = start; i < stop; ++i) {
      double w = weights.empty() ? 1.0 : weights[i];
      sum += w * cplx(f(i));
      wsum += w;
    }
    batch_value[b] = wsum > 0.0 ? sum / wsum : cplx(0.0);
    batch_weight[b] = wsum;
    start = stop;
  }
  double total = 0.0;
  for (double w : batch_weight) total += w;
  MeanSe out;
  if (total <= 0.0) return out;
  for (int b = 0; b < kBatchCount; ++b)
    out.mean += (batch_weight[b] / total) * batch_value[b];
  double var = 0.0;
  for (int b = 0; b < kBatchCount; ++b) {
    double wb = batch_weight[b] / total;
    var += wb * wb * std::norm(batch_value[b] - out.mean);
  }
  out.se = std::sqrt(var);
  return out;
}

template <class F>
MeanSeReal batch_mean_real(std::int64_t samples, F&& f,
                           std::span<const double> weights = {}) {
  MeanSe m = batch_mean(
      samples, [&](std::int64_t i) { return cplx(f(i), 0.0); }, weights);
  return {m.mean.real(), m.se};
}

// ---------------------------------------------------------------------------
// Rate fitting

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

// Least squares of log(error) against log(n). Requires >= 3 pairs with
// strictly positive errors.
RateFit fit_rate(std::span<const std::pair<double, double>> pairs);

}  // namespace crumple::stattest
