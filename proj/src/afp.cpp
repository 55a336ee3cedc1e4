#include "crumple/afp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace crumple::afp {

using stattest::cplx;

GridDecomposition grid_decompose(double x, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("grid_decompose: n must be >= 1");
  if (!std::isfinite(x))
    throw std::invalid_argument("grid_decompose: non-finite input");
  const double nd = static_cast<double>(n);
  const double y = x * nd;
  double fl = std::floor(y);
  double frac = y - fl;
  if (frac >= 1.0) {  // y epsilon-below an integer can round frac up to 1
    fl += 1.0;
    frac = 0.0;
  }
  return {fl / nd, frac};
}

ScalarDistribution ScalarDistribution::normal01() {
  ScalarDistribution d;
  d.sampler = [](RandomSource& rs) { return rs.normal(); };
  d.has_density = true;
  return d;
}

ScalarDistribution ScalarDistribution::uniform01() {
  ScalarDistribution d;
  d.sampler = [](RandomSource& rs) { return rs.uniform01(); };
  d.has_density = true;
  return d;
}

ScalarDistribution ScalarDistribution::exponential1() {
  ScalarDistribution d;
  d.sampler = [](RandomSource& rs) {
    return -std::log1p(-rs.uniform01());
  };
  d.has_density = true;
  return d;
}

ScalarDistribution ScalarDistribution::degenerate(double value) {
  ScalarDistribution d;
  d.sampler = [value](RandomSource&) { return value; };
  d.has_density = false;
  return d;
}

SmoothTestFunction SmoothTestFunction::identity() {
  return {[](double x) { return x; }, [](double) { return 1.0; }, 1.0};
}

SmoothTestFunction SmoothTestFunction::sine() {
  return {[](double x) { return std::sin(x); },
          [](double x) { return std::cos(x); }, 1.0};
}

SmoothTestFunction SmoothTestFunction::constant(double c) {
  return {[c](double) { return c; }, [](double) { return 0.0; }, 0.0};
}

std::vector<UniformityResult> uniformity_experiment(
    const ScalarDistribution& dist, std::span<const std::int64_t> n_list,
    std::int64_t samples, RngStream stream) {
  if (samples < 1000)
    throw std::invalid_argument("uniformity_experiment: samples < 1000");
  std::vector<UniformityResult> out;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const std::int64_t n = n_list[k];
    RandomSource rs(stream.offset(k));
    std::vector<double> fracs(static_cast<std::size_t>(samples));
    for (auto& f : fracs) f = grid_decompose(dist.sampler(rs), n).frac;
    out.push_back({n, stattest::ks_uniform(fracs)});
  }
  return out;
}

std::vector<JointIndependenceResult> joint_independence_experiment(
    const JointSampler& xy, std::span<const std::int64_t> n_list,
    std::int64_t samples, std::span<const std::vector<double>> probes,
    RngStream stream) {
  if (probes.empty())
    throw std::invalid_argument("joint_independence_experiment: empty probes");
  std::vector<JointIndependenceResult> out;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const std::int64_t n = n_list[k];
    RandomSource rs(stream.offset(k));
    std::vector<double> frac(static_cast<std::size_t>(samples));
    std::vector<double> y(static_cast<std::size_t>(samples));
    for (std::int64_t i = 0; i < samples; ++i) {
      auto [xv, yv] = xy(rs);
      frac[i] = grid_decompose(xv, n).frac;
      y[i] = yv;
    }
    stattest::EcfReport report;
    report.ess = static_cast<double>(samples);
    for (const auto& u : probes) {
      if (u.size() != 2)
        throw std::invalid_argument("joint_independence: probes must be 2-d");
      const cplx cf_u = stattest::uniform_cf(u[0]);
      // Paired difference e^{i(u frac + v y)} - cf_U(u) e^{i v y}; its mean
      // is zero in the limit and the batch SE absorbs the shared noise in Y.
      auto diff = stattest::batch_mean(samples, [&](std::int64_t i) {
        const cplx ey(std::cos(u[1] * y[i]), std::sin(u[1] * y[i]));
        const cplx joint(std::cos(u[0] * frac[i] + u[1] * y[i]),
                         std::sin(u[0] * frac[i] + u[1] * y[i]));
        return joint - cf_u * ey;
      });
      auto joint_val = stattest::batch_mean(samples, [&](std::int64_t i) {
        return cplx(std::cos(u[0] * frac[i] + u[1] * y[i]),
                    std::sin(u[0] * frac[i] + u[1] * y[i]));
      });
      stattest::EcfRow row;
      row.freq = u;
      row.emp = joint_val.mean;
      row.emp_se = joint_val.se;
      row.ref = joint_val.mean - diff.mean;
      row.ref_se = 0.0;
      row.z = diff.se > 0.0
                  ? std::abs(diff.mean) / diff.se
                  : (std::abs(diff.mean) < 1e-12
                         ? 0.0
                         : std::numeric_limits<double>::infinity());
      report.max_abs_z = std::max(report.max_abs_z, row.z);
      report.rows.push_back(std::move(row));
    }
    out.push_back({n, std::move(report)});
  }
  return out;
}

std::vector<BiasRow> bias_experiment(
    const SmoothTestFunction& phi,
    const std::function<double(RandomSource&)>& z_sampler,
    const ScalarDistribution& dist, std::span<const std::int64_t> n_list,
    std::int64_t samples, RngStream stream) {
  std::vector<BiasRow> out;
  for (std::size_t k = 0; k < n_list.size(); ++k) {
    const std::int64_t n = n_list[k];
    const double nd = static_cast<double>(n);
    RandomSource rs(stream.offset(k));
    std::vector<double> est(static_cast<std::size_t>(samples));
    std::vector<double> tgt(static_cast<std::size_t>(samples));
    for (std::int64_t i = 0; i < samples; ++i) {
      const double x = dist.sampler(rs);
      const double z = z_sampler ? z_sampler(rs) : 1.0;
      const auto dec = grid_decompose(x, n);
      const double d = phi.phi(dec.rounded) - phi.phi(x);
      const double dp = phi.dphi(x);
      est[i] = nd * nd * d * d * z;
      tgt[i] = dp * dp * z / 3.0;
    }
    auto m_est = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return est[i]; });
    auto m_diff = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return est[i] - tgt[i]; });
    BiasRow row;
    row.n = n;
    row.estimate = m_est.mean;
    row.stderr_ = m_est.se;
    row.target = m_est.mean - m_diff.mean;
    row.z = m_diff.se > 0.0 ? std::abs(m_diff.mean) / m_diff.se
                            : (std::abs(m_diff.mean) < 1e-12 ? 0.0 : 1e30);
    out.push_back(row);
  }
  return out;
}

stattest::EcfReport first_order_limit_experiment(
    const SmoothTestFunction& phi, const JointSampler& xy, std::int64_t n,
    std::int64_t samples, std::span<const std::vector<double>> probes,
    RngStream stream) {
  if (probes.empty())
    throw std::invalid_argument("first_order_limit_experiment: empty probes");
  const double nd = static_cast<double>(n);
  std::vector<double> emp(static_cast<std::size_t>(2 * samples));
  std::vector<double> ref(static_cast<std::size_t>(2 * samples));
  RandomSource rs(stream);
  RandomSource rs_ref(stream.offset(1));
  for (std::int64_t i = 0; i < samples; ++i) {
    auto [x, y] = xy(rs);
    const auto dec = grid_decompose(x, n);
    emp[2 * i] = nd * (phi.phi(dec.rounded) - phi.phi(x));
    emp[2 * i + 1] = y;
  }
  for (std::int64_t i = 0; i < samples; ++i) {
    auto [x, y] = xy(rs_ref);
    const double u = rs_ref.uniform01();
    ref[2 * i] = -u * phi.dphi(x);
    ref[2 * i + 1] = y;
  }
  return stattest::ecf_two_sample_compare(emp, ref, 2, probes);
}

PsiReport psi_experiment(const std::function<double(double)>& psi,
                         const ScalarDistribution& dist, bool use_tilt,
                         std::int64_t n, std::int64_t samples,
                         RngStream stream) {
  if (use_tilt && !dist.tilt)
    throw std::invalid_argument("psi_experiment: distribution has no tilt");
  RandomSource rs(stream);
  std::vector<double> values(static_cast<std::size_t>(samples));
  std::vector<double> weights;
  if (use_tilt) weights.resize(static_cast<std::size_t>(samples));
  for (std::int64_t i = 0; i < samples; ++i) {
    const double x = dist.sampler(rs);
    values[i] = psi(-grid_decompose(x, n).frac);
    if (use_tilt) weights[i] = dist.tilt(x);
  }
  double ess = use_tilt ? stattest::effective_sample_size(weights)
                        : static_cast<double>(samples);
  if (ess < 100.0)
    throw std::runtime_error(
        "psi_experiment: effective sample size below 100 under tilt");

  RandomSource rs_ref(stream.offset(1));
  std::vector<double> ref(static_cast<std::size_t>(samples));
  for (auto& v : ref) v = psi(-rs_ref.uniform01());

  PsiReport report;
  auto m = stattest::batch_mean_real(
      samples, [&](std::int64_t i) { return values[i]; }, weights);
  auto t = stattest::batch_mean_real(samples,
                                     [&](std::int64_t i) { return ref[i]; });
  report.estimate = m.mean;
  report.se = m.se;
  report.target = t.mean;
  report.target_se = t.se;
  const double den = std::sqrt(m.se * m.se + t.se * t.se);
  report.z = den > 0.0 ? std::abs(m.mean - t.mean) / den : 0.0;
  report.ess = ess;
  auto probes = stattest::pair_probe_grid(1);
  report.ecf =
      stattest::ecf_two_sample_compare(values, ref, 1, probes, weights);
  return report;
}

}  // namespace crumple::afp
