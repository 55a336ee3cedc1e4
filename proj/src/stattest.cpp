#include "crumple/stattest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace crumple::stattest {

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  // Below 0.2 the survival probability is 1 to double precision and the
  // truncated alternating series would be inaccurate.
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
  }
  double p = 2.0 * sum;
  return std::clamp(p, 0.0, 1.0);
}

KsReport ks_uniform(std::span<const double> samples) {
  if (samples.size() < 20)
    throw std::invalid_argument("ks_uniform: needs at least 20 samples");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double v : sorted)
    if (!(v >= 0.0 && v < 1.0))
      throw std::invalid_argument("ks_uniform: sample outside [0,1)");
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double lo = sorted[i] - static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n - sorted[i];
    d = std::max(d, std::max(lo, hi));
  }
  KsReport report;
  report.d_stat = d;
  report.sample_size = static_cast<std::int64_t>(sorted.size());
  report.p_value = kolmogorov_sf(d * std::sqrt(n));
  return report;
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

namespace {

bool is_zero_probe(const std::vector<double>& u) {
  for (double v : u)
    if (v != 0.0) return false;
  return true;
}

void check_weights(std::span<const double> samples, int dim,
                   std::span<const double> weights) {
  const std::int64_t count = static_cast<std::int64_t>(samples.size()) / dim;
  if (!weights.empty()) {
    if (static_cast<std::int64_t>(weights.size()) != count)
      throw std::invalid_argument("ecf: weight count mismatch");
    for (double w : weights)
      if (!(w >= 0.0)) throw std::invalid_argument("ecf: negative weight");
    if (effective_sample_size(weights) < 100.0)
      throw std::invalid_argument("ecf: effective sample size below 100");
  }
}

}  // namespace

std::vector<EcfValue> ecf(std::span<const double> samples, int dim,
                          std::span<const std::vector<double>> probes,
                          std::span<const double> weights) {
  if (dim < 1 || samples.size() % dim != 0)
    throw std::invalid_argument("ecf: bad sample layout");
  const std::int64_t count = static_cast<std::int64_t>(samples.size()) / dim;
  check_weights(samples, dim, weights);
  std::vector<EcfValue> out;
  out.reserve(probes.size());
  for (const auto& u : probes) {
    if (static_cast<int>(u.size()) != dim)
      throw std::invalid_argument("ecf: probe dimension mismatch");
    if (is_zero_probe(u)) {
      out.push_back({cplx(1.0, 0.0), 0.0});
      continue;
    }
    MeanSe m = batch_mean(
        count,
        [&](std::int64_t i) {
          double phase = 0.0;
          for (int c = 0; c < dim; ++c) phase += u[c] * samples[i * dim + c];
          return cplx(std::cos(phase), std::sin(phase));
        },
        weights);
    out.push_back({m.mean, m.se});
  }
  return out;
}

namespace {

double z_score(cplx emp, double emp_se, cplx ref, double ref_se) {
  const double num = std::abs(emp - ref);
  const double den = std::sqrt(emp_se * emp_se + ref_se * ref_se);
  if (den == 0.0) return num < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

EcfReport assemble(std::span<const std::vector<double>> probes,
                   const std::vector<EcfValue>& emp,
                   const std::vector<EcfValue>& ref, double ess) {
  EcfReport report;
  report.ess = ess;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    EcfRow row;
    row.freq = probes[i];
    row.emp = emp[i].value;
    row.emp_se = emp[i].se;
    row.ref = ref[i].value;
    row.ref_se = ref[i].se;
    row.z = z_score(row.emp, row.emp_se, row.ref, row.ref_se);
    report.max_abs_z = std::max(report.max_abs_z, row.z);
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace

EcfReport ecf_two_sample_compare(std::span<const double> emp,
                                 std::span<const double> ref, int dim,
                                 std::span<const std::vector<double>> probes,
                                 std::span<const double> emp_weights,
                                 std::span<const double> ref_weights) {
  auto e = ecf(emp, dim, probes, emp_weights);
  auto r = ecf(ref, dim, probes, ref_weights);
  double ess = emp_weights.empty()
                   ? static_cast<double>(emp.size() / dim)
                   : effective_sample_size(emp_weights);
  return assemble(probes, e, r, ess);
}

EcfReport ecf_product_compare(std::span<const double> joint, int dim,
                              const std::vector<std::vector<int>>& split,
                              std::span<const std::vector<double>> probes,
                              std::span<const double> reference,
                              std::span<const double> joint_weights) {
  if (probes.empty())
    throw std::invalid_argument("ecf_product_compare: empty probe set");
  auto e = ecf(joint, dim, probes, joint_weights);

  // Per probe, the reference is the product over blocks of the block ECFs
  // of `reference`; its SE comes from batch means of the per-batch product.
  const std::int64_t count = static_cast<std::int64_t>(reference.size()) / dim;
  std::vector<EcfValue> r;
  r.reserve(probes.size());
  for (const auto& u : probes) {
    if (is_zero_probe(u)) {
      r.push_back({cplx(1.0, 0.0), 0.0});
      continue;
    }
    // Per-batch product of block ECFs, then batch means of the product.
    MeanSe m;
    cplx batch_value[kBatchCount];
    std::int64_t start = 0;
    for (int b = 0; b < kBatchCount; ++b) {
      std::int64_t stop = count * (b + 1) / kBatchCount;
      cplx prod(1.0, 0.0);
      for (const auto& block : split) {
        cplx sum = 0.0;
        for (std::int64_t i = start; i < stop; ++i) {
          double phase = 0.0;
          for (int c : block) phase += u[c] * reference[i * dim + c];
          sum += cplx(std::cos(phase), std::sin(phase));
        }
        prod *= sum / static_cast<double>(stop - start);
      }
      batch_value[b] = prod;
      start = stop;
    }
    m.mean = 0.0;
    for (int b = 0; b < kBatchCount; ++b)
      m.mean += batch_value[b] / static_cast<double>(kBatchCount);
    double var = 0.0;
    for (int b = 0; b < kBatchCount; ++b)
      var += std::norm(batch_value[b] - m.mean) /
             static_cast<double>(kBatchCount) /
             static_cast<double>(kBatchCount);
    m.se = std::sqrt(var);
    r.push_back({m.mean, m.se});
  }
  double ess = joint_weights.empty()
                   ? static_cast<double>(joint.size() / dim)
                   : effective_sample_size(joint_weights);
  return assemble(probes, e, r, ess);
}

std::vector<std::vector<double>> pair_probe_grid(int dim, double amplitude) {
  std::set<std::vector<double>> seen;
  std::vector<std::vector<double>> probes;
  const double levels[3] = {-amplitude, 0.0, amplitude};
  auto push = [&](std::vector<double> u) {
    if (seen.insert(u).second) probes.push_back(std::move(u));
  };
  if (dim == 1) {
    for (double a : levels) push({a});
    return probes;
  }
  for (int i = 0; i < dim; ++i)
    for (int j = i + 1; j < dim; ++j)
      for (double a : levels)
        for (double b : levels) {
          std::vector<double> u(dim, 0.0);
          u[i] = a;
          u[j] = b;
          push(std::move(u));
        }
  return probes;
}

cplx uniform_cf(double u) {
  if (u == 0.0) return cplx(1.0, 0.0);
  // (e^{iu} - 1) / (iu)
  return (cplx(std::cos(u), std::sin(u)) - cplx(1.0, 0.0)) / cplx(0.0, u);
}

RateFit fit_rate(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3)
    throw std::invalid_argument("fit_rate: needs at least 3 pairs");
  const std::size_t m = pairs.size();
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(pairs[i].second > 0.0))
      throw std::invalid_argument("fit_rate: errors must be positive");
    x[i] = std::log(pairs[i].first);
    y[i] = std::log(pairs[i].second);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    xbar += x[i];
    ybar += y[i];
  }
  xbar /= static_cast<double>(m);
  ybar /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xbar) * (x[i] - xbar);
    sxy += (x[i] - xbar) * (y[i] - ybar);
    syy += (y[i] - ybar) * (y[i] - ybar);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_rate: degenerate n values");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = y[i] - (fit.intercept + fit.slope * x[i]);
    rss += r * r;
  }
  fit.slope_stderr =
      std::sqrt(std::max(rss, 0.0) / static_cast<double>(m - 2) / sxx);
  fit.r_squared = syy > 1e-300 ? std::clamp(1.0 - rss / syy, 0.0, 1.0) : 1.0;
  return fit;
}

}  // namespace crumple::stattest
