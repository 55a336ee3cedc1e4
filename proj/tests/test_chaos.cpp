#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "crumple/chaos.hpp"

using namespace crumple;
using chaos::cplx;
using chaos::PeriodicScalarTheta;

namespace {

std::vector<cplx> grid_fn(const TimeGrid& g, double (*f)(double)) {
  std::vector<cplx> v(static_cast<std::size_t>(g.steps));
  for (std::int64_t j = 0; j < g.steps; ++j) v[j] = f(g.point(j));
  return v;
}

double sqrt3_t(double t) { return std::sqrt(3.0) * t; }
double const_sqrt2(double) { return std::numbers::sqrt2; }
double const_one(double) { return 1.0; }

chaos::ChaosElement mixed_element(const TimeGrid& g) {
  chaos::ChaosElement x(cplx(0.4, -0.1), g);
  x.set_kernel(chaos::OrderedKernel::rank_one(g, {grid_fn(g, sqrt3_t)}));
  x.set_kernel(chaos::OrderedKernel::rank_one(
      g, {grid_fn(g, const_sqrt2), grid_fn(g, const_one)}));
  std::vector<cplx> g1(static_cast<std::size_t>(g.steps)),
      g2(static_cast<std::size_t>(g.steps)), g3(static_cast<std::size_t>(g.steps));
  for (std::int64_t j = 0; j < g.steps; ++j) {
    const double t = g.point(j);
    g1[j] = cplx(1.0, 0.3 * t);
    g2[j] = cplx(std::cos(t), 0.0);
    g3[j] = cplx(0.5 + t, -0.2);
  }
  x.set_kernel(chaos::OrderedKernel::rank_one(g, {g1, g2, g3}));
  return x;
}

}  // namespace

TEST_CASE("theta variants have zero mean and unit mean square") {
  for (auto theta : {PeriodicScalarTheta::cosine(), PeriodicScalarTheta::sine(),
                     PeriodicScalarTheta::rademacher()}) {
    double mean = 0.0, mean_sq = 0.0;
    const int q = 1000000;
    for (int i = 0; i < q; ++i) {
      const double v = theta((i + 0.5) / static_cast<double>(q));
      mean += v / q;
      mean_sq += v * v / q;
    }
    CHECK(std::abs(mean) <= 1e-10);
    CHECK(std::abs(mean_sq - 1.0) <= 1e-10);
    CHECK(theta.sup_norm() <= std::numbers::sqrt2 + 1e-15);
  }
}

TEST_CASE("first chaos of the constant kernel is the terminal value") {
  const TimeGrid g(64);
  const auto x = chaos::make_order1(g, std::vector<cplx>(64, 1.0));
  RandomSource rs({700, 0});
  for (int i = 0; i < 5; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    CHECK(std::abs(chaos::eval_chaos(x, b) - cplx(b.value(64), 0.0)) <= 1e-14);
  }
}

TEST_CASE("constant elements evaluate to their constant") {
  const TimeGrid g(16);
  const chaos::ChaosElement x(cplx(1.5, -2.0), g);
  RandomSource rs({701, 0});
  const BrownianPath b = sample_brownian(rs, g, 1);
  CHECK(chaos::eval_chaos(x, b) == cplx(1.5, -2.0));
}

TEST_CASE("rank-one and dense evaluation agree for orders 2 and 3") {
  const TimeGrid g(32);
  RandomSource rs({702, 0});
  auto random_fn = [&rs](std::int64_t n) {
    std::vector<cplx> v(static_cast<std::size_t>(n));
    for (auto& c : v) c = cplx(rs.normal(), rs.normal());
    return v;
  };
  chaos::ChaosElement x(0.0, g);
  x.set_kernel(chaos::OrderedKernel::rank_one(g, {random_fn(32), random_fn(32)}));
  chaos::ChaosElement x3(0.0, g);
  x3.set_kernel(chaos::OrderedKernel::rank_one(
      g, {random_fn(32), random_fn(32), random_fn(32)}));

  chaos::ChaosElement xd(0.0, g), x3d(0.0, g);
  xd.set_kernel(x.kernel(2)->densified());
  x3d.set_kernel(x3.kernel(3)->densified());
  for (int i = 0; i < 5; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    CHECK(std::abs(chaos::eval_chaos(x, b) - chaos::eval_chaos(xd, b)) <= 1e-12);
    CHECK(std::abs(chaos::eval_chaos(x3, b) - chaos::eval_chaos(x3d, b)) <=
          1e-12);
  }
  CHECK(std::abs(x.norm2() - xd.norm2()) <= 1e-14);
  CHECK(std::abs(x3.norm2() - x3d.norm2()) <= 1e-14);
}

TEST_CASE("second chaos with constant kernel has the simplex-volume norm") {
  const TimeGrid g(128);
  const auto x = chaos::make_order2_rank1(
      g, grid_fn(g, const_sqrt2), grid_fn(g, const_one));
  // discrete ordered norm: 2 * C(N,2) / N^2 = 1 - 1/N
  CHECK(x.norm2() == doctest::Approx(1.0 - 1.0 / 128.0).epsilon(1e-12));

  RandomSource rs({703, 0});
  const std::int64_t S = 20000;
  double sum2 = 0.0, sum4 = 0.0;
  for (std::int64_t i = 0; i < S; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const double v = std::norm(chaos::eval_chaos(x, b));
    sum2 += v;
    sum4 += v * v;
  }
  const double mean = sum2 / static_cast<double>(S);
  const double se =
      std::sqrt((sum4 / S - mean * mean) / static_cast<double>(S));
  CHECK(std::abs(mean - x.norm2()) <= 3.0 * se);
}

TEST_CASE("monte carlo second moment matches the exact norm for a mixed element") {
  const TimeGrid g(64);
  const auto x = mixed_element(g);
  RandomSource rs({704, 0});
  const std::int64_t S = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t i = 0; i < S; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const double v = std::norm(chaos::eval_chaos(x, b));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / static_cast<double>(S);
  const double se = std::sqrt((sum2 / S - mean * mean) / static_cast<double>(S));
  CHECK(std::abs(mean - x.norm2()) <= 3.0 * se);
}

TEST_CASE("phase operator at order one multiplies the kernel by unit phases") {
  const TimeGrid g(64);
  const auto theta = PeriodicScalarTheta::cosine();
  const std::int64_t n = 8;
  const auto x = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  const auto rx = chaos::apply_Rn(x, theta, n);
  const auto& slots = rx.kernel(1)->rank_one_data().slots;
  for (std::int64_t j = 0; j < 64; ++j) {
    const double a = theta(8.0 * g.point(j)) / 8.0;
    const cplx expected = std::sqrt(3.0) * g.point(j) * cplx(std::cos(a), std::sin(a));
    CHECK(std::abs(slots[0][j] - expected) <= 1e-14);
  }
}

TEST_CASE("phase operator is an exact isometry and fixes constants") {
  const TimeGrid g(256);
  const auto x = mixed_element(g);
  for (auto theta : {PeriodicScalarTheta::cosine(), PeriodicScalarTheta::sine(),
                     PeriodicScalarTheta::rademacher()}) {
    for (std::int64_t n : {4, 16, 64}) {
      const auto rx = chaos::apply_Rn(x, theta, n);
      CHECK(std::abs(rx.norm2() - x.norm2()) <= 1e-12);
      CHECK(rx.constant() == x.constant());
    }
  }
  // dense path
  chaos::ChaosElement xd(0.0, g);
  xd.set_kernel(x.kernel(2)->densified());
  const auto rxd = chaos::apply_Rn(xd, PeriodicScalarTheta::cosine(), 16);
  CHECK(std::abs(rxd.norm2() - xd.norm2()) <= 1e-12);
}

TEST_CASE("phase operator rejects misaligned grids") {
  const TimeGrid g(96);
  const auto x = chaos::make_order1(g, std::vector<cplx>(96, 1.0));
  CHECK_THROWS_AS(chaos::apply_Rn(x, PeriodicScalarTheta::cosine(), 64),
                  std::invalid_argument);
  // rademacher needs a multiple of 2n: 2 * 36 = 72 does not divide 96
  CHECK_THROWS_AS(chaos::apply_Rn(x, PeriodicScalarTheta::rademacher(), 36),
                  std::invalid_argument);
}

TEST_CASE("fluctuation moments obey both operator bounds on exact kernels") {
  const TimeGrid g(256);
  std::vector<chaos::ChaosElement> elements;
  elements.push_back(chaos::make_order1(g, grid_fn(g, sqrt3_t)));
  elements.push_back(chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                              grid_fn(g, const_one)));
  elements.push_back(mixed_element(g));
  for (auto theta :
       {PeriodicScalarTheta::cosine(), PeriodicScalarTheta::rademacher()}) {
    for (const auto& x : elements) {
      for (std::int64_t n : {4, 16, 64}) {
        const double moment = chaos::exact_fluctuation_moment(x, theta, n);
        const int k = x.max_order();
        const double sup2 = theta.sup_norm() * theta.sup_norm();
        CHECK(moment <=
              static_cast<double>(k) * k * x.norm2() * sup2 + 1e-12);
        const double ax = std::sqrt(chaos::apply_A(x).norm2());
        CHECK(std::sqrt(moment) <= 2.0 * ax * theta.sup_norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("ornstein-uhlenbeck operator scales each order by -k/2") {
  const TimeGrid g(32);
  const auto x1 = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  const auto a1 = chaos::apply_A(x1);
  CHECK(std::abs(chaos::inner(a1, x1) - cplx(-0.5) * x1.norm2()) <= 1e-14);

  const auto x2 = chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                           grid_fn(g, const_one));
  const auto a2 = chaos::apply_A(x2);
  CHECK(std::abs(chaos::inner(a2, x2) - cplx(-1.0) * x2.norm2()) <= 1e-14);

  const chaos::ChaosElement c(cplx(3.0, 1.0), g);
  const auto ac = chaos::apply_A(c);
  CHECK(ac.constant() == cplx(0.0, 0.0));
  CHECK(ac.norm2() == 0.0);
}

TEST_CASE("dirichlet energy equals the quadratic form of -A exactly") {
  const TimeGrid g(64);
  const auto x = mixed_element(g);
  const double energy = chaos::dirichlet_energy(x);
  const cplx quad = chaos::inner(chaos::apply_A(x), x);
  CHECK(std::abs(energy + quad.real()) <= 1e-12);
  CHECK(std::abs(quad.imag()) <= 1e-12);

  const chaos::ChaosElement c(cplx(2.0, 0.0), g);
  CHECK(chaos::dirichlet_energy(c) == 0.0);

  const auto x1 = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  CHECK(chaos::dirichlet_energy(x1) ==
        doctest::Approx(0.5 * x1.norm2()).epsilon(1e-14));
}

TEST_CASE("malliavin derivative of the first chaos is the kernel value") {
  const TimeGrid g(32);
  const auto x = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  const auto d = chaos::malliavin_derivative(x, 7);
  CHECK(std::abs(d.constant() - cplx(std::sqrt(3.0) * g.point(7), 0.0)) <=
        1e-14);
  CHECK(d.max_order() == 0);

  const chaos::ChaosElement c(cplx(5.0, 0.0), g);
  const auto dc = chaos::malliavin_derivative(c, 3);
  CHECK(dc.norm2() == 0.0);

  CHECK_THROWS_AS(chaos::malliavin_derivative(x, 32), std::invalid_argument);
}

TEST_CASE("malliavin derivative of the flat second chaos sums both sides of t") {
  const TimeGrid g(16);
  const auto x = chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                          grid_fn(g, const_one));
  RandomSource rs({705, 0});
  const std::int64_t jt = 5;
  const auto d = chaos::malliavin_derivative(x, jt);
  for (int i = 0; i < 5; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const cplx expected =
        std::numbers::sqrt2 * (b.value(16) - b.increment(jt));
    CHECK(std::abs(chaos::eval_chaos(d, b) - expected) <= 1e-12);
  }
}

TEST_CASE("derivative energy identity holds exactly on the grid") {
  const TimeGrid g(24);
  const auto x = mixed_element(g);
  double energy_from_d = 0.0;
  for (std::int64_t j = 0; j < g.steps; ++j)
    energy_from_d += chaos::malliavin_derivative(x, j).norm2() * g.dt;
  double expected = 0.0;
  for (int k = 1; k <= 3; ++k)
    if (const auto* kern = x.kernel(k)) expected += k * kern->norm2();
  CHECK(energy_from_d == doctest::Approx(expected).epsilon(1e-12));
  CHECK(energy_from_d ==
        doctest::Approx(2.0 * chaos::dirichlet_energy(x)).epsilon(1e-12));
}

TEST_CASE("sharp operator equals the derivative integrated against the extra path") {
  const TimeGrid g(24);
  const auto x = mixed_element(g);
  RandomSource rs({706, 0});
  for (int i = 0; i < 5; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const BrownianPath w = sample_brownian(rs, g, 1);
    cplx via_d = 0.0;
    for (std::int64_t j = 0; j < g.steps; ++j)
      via_d += chaos::eval_chaos(chaos::malliavin_derivative(x, j), b) *
               w.increment(j);
    CHECK(std::abs(chaos::sharp_sample(x, b, w) - via_d) <= 1e-12);
  }
  const chaos::ChaosElement c(cplx(4.0, 0.0), g);
  const BrownianPath b = sample_brownian(rs, g, 1);
  const BrownianPath w = sample_brownian(rs, g, 1);
  CHECK(chaos::sharp_sample(c, b, w) == cplx(0.0, 0.0));
}

TEST_CASE("sharp of the first chaos is gaussian with the kernel norm as variance") {
  const TimeGrid g(64);
  const auto x = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  RandomSource rs({707, 0});
  RandomSource rs2({707, 1});
  const std::int64_t S = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t i = 0; i < S; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const BrownianPath w = sample_brownian(rs2, g, 1);
    const double v = chaos::sharp_sample(x, b, w).real();
    sum += v;
    sum2 += v * v;
  }
  const double var = sum2 / S - (sum / S) * (sum / S);
  CHECK(std::abs(var - x.norm2()) <=
        3.0 * std::numbers::sqrt2 * x.norm2() / std::sqrt(static_cast<double>(S)));
}

TEST_CASE("sharp second moment is twice the dirichlet energy") {
  const TimeGrid g(64);
  const auto x = mixed_element(g);
  RandomSource rs({708, 0});
  RandomSource rs2({708, 1});
  const std::int64_t S = 20000;
  double sum = 0.0, sum2 = 0.0;
  for (std::int64_t i = 0; i < S; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    const BrownianPath w = sample_brownian(rs2, g, 1);
    const double v = std::norm(chaos::sharp_sample(x, b, w));
    sum += v;
    sum2 += v * v;
  }
  const double mean = sum / S;
  const double se = std::sqrt((sum2 / S - mean * mean) / static_cast<double>(S));
  CHECK(std::abs(mean - 2.0 * chaos::dirichlet_energy(x)) <= 3.0 * se);
}

TEST_CASE("exact fluctuation moment approaches twice the energy at the stated rates") {
  const auto theta = PeriodicScalarTheta::cosine();
  {
    const TimeGrid g(4096);
    const auto x = chaos::make_order1(g, grid_fn(g, sqrt3_t));
    const double moment = chaos::exact_fluctuation_moment(x, theta, 128);
    const double target = 2.0 * chaos::dirichlet_energy(x);
    CHECK(std::abs(moment - target) / target <= 0.02);
  }
  {
    const TimeGrid g(2048);
    const auto x = chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                            grid_fn(g, const_one));
    const double moment = chaos::exact_fluctuation_moment(x, theta, 64);
    const double target = 2.0 * chaos::dirichlet_energy(x);
    CHECK(std::abs(moment - target) / target <= 0.05);
  }
}

TEST_CASE("fluctuation experiment: exact and monte carlo moments agree") {
  const TimeGrid g(512);
  const auto x = chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                          grid_fn(g, const_one));
  const auto theta = PeriodicScalarTheta::cosine();
  const std::vector<double> times{0.5, 1.0};
  const auto probes = stattest::pair_probe_grid(3);
  auto result = chaos::fluctuation_experiment(
      x, theta, std::vector<std::int64_t>{32}, 5000, times, probes, {709, 0});
  const auto& row = result.rows[0];
  CHECK(row.z <= 3.0);
  CHECK(row.exact_moment > 0.0);
  // imaginary part: exact value obeys the remainder bound, MC agrees
  CHECK(row.im_exact <= row.remainder_bound + 1e-12);
  CHECK(std::abs(row.im_moment - row.im_exact) <= 3.0 * row.im_se);
  // constants produce no fluctuation at all
  const chaos::ChaosElement c(cplx(2.0, 1.0), g);
  auto zero = chaos::fluctuation_experiment(
      c, theta, std::vector<std::int64_t>{32}, 1000, times, probes, {710, 0});
  CHECK(zero.rows[0].exact_moment == 0.0);
  CHECK(zero.rows[0].mc_moment == 0.0);
  CHECK(zero.rows[0].target == 0.0);
}

TEST_CASE("fluctuation law matches the sharp limit at moderate n") {
  const TimeGrid g(512);
  const auto theta = PeriodicScalarTheta::cosine();
  const std::vector<double> times{0.5, 1.0};
  const auto probes = stattest::pair_probe_grid(3);
  for (int which : {1, 2}) {
    chaos::ChaosElement x =
        which == 1 ? chaos::make_order1(g, grid_fn(g, sqrt3_t))
                   : chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                              grid_fn(g, const_one));
    auto result = chaos::fluctuation_experiment(
        x, theta, std::vector<std::int64_t>{64}, 20000, times, probes,
        {711, static_cast<std::uint64_t>(which)});
    CHECK(result.ecf[0].second.max_abs_z <= stattest::kMaxZPass);
  }
}

TEST_CASE("exponential vectors expand with exact discrete tails") {
  const TimeGrid g(1024);
  chaos::ExponentialVector v{g, std::vector<double>(1024, 0.0)};
  auto zero = chaos::expand_exponential(v, 3);
  CHECK(zero.element.constant() == cplx(1.0, 0.0));
  CHECK(zero.element.max_order() == 0);
  CHECK(zero.tail_norm == 0.0);

  chaos::ExponentialVector half{g, std::vector<double>(1024, 0.5)};
  auto exp_half = chaos::expand_exponential(half, 3);
  CHECK(exp_half.tail_fraction <= 0.10);

  // Monte Carlo oracle: the discrete stochastic exponential
  // prod_j (1 + xi_j dB_j) has the expansion as its exact chaos truncation,
  // so the L2 distance must match the exact tail.
  RandomSource rs({712, 0});
  const std::int64_t S = 20000;
  double d2 = 0.0, d4 = 0.0, dc2 = 0.0;
  for (std::int64_t i = 0; i < S; ++i) {
    const BrownianPath b = sample_brownian(rs, g, 1);
    double prod = 1.0, ito = 0.0;
    for (std::int64_t j = 0; j < 1024; ++j) {
      prod *= 1.0 + 0.5 * b.increment(j);
      ito += 0.5 * b.increment(j);
    }
    const double cont = std::exp(ito - 0.5 * 0.25);
    const cplx eval = chaos::eval_chaos(exp_half.element, b);
    const double diff = std::norm(cplx(prod, 0.0) - eval);
    d2 += diff;
    d4 += diff * diff;
    dc2 += std::norm(cplx(cont, 0.0) - eval);
  }
  const double mean = d2 / S;
  const double se = std::sqrt((d4 / S - mean * mean) / static_cast<double>(S));
  const double tail2 = exp_half.tail_norm * exp_half.tail_norm;
  CHECK(std::abs(mean - tail2) <= 3.0 * se);
  // the continuum-form exponential differs only by Ito corrections of
  // order sqrt(dt)
  CHECK(std::sqrt(dc2 / S) <= exp_half.tail_norm + 0.01);

  chaos::ExponentialVector big{g, std::vector<double>(1024, 1.2)};
  CHECK_THROWS_AS(chaos::expand_exponential(big, 3), std::domain_error);
}

TEST_CASE("exponential inner products follow the truncated exponential series") {
  const TimeGrid g(1024);
  std::vector<double> xi(1024), eta(1024);
  for (std::int64_t j = 0; j < 1024; ++j) {
    xi[j] = 0.5;
    eta[j] = 0.4 * std::cos(2.0 * std::numbers::pi * g.point(j));
  }
  auto ex = chaos::expand_exponential({g, xi}, 3);
  auto ey = chaos::expand_exponential({g, eta}, 3);
  double dot = 0.0;
  for (std::int64_t j = 0; j < 1024; ++j) dot += xi[j] * eta[j] * g.dt;
  double series = 0.0, fact = 1.0;
  for (int k = 0; k <= 3; ++k) {
    if (k > 0) fact *= k;
    series += std::pow(dot, k) / fact;
  }
  CHECK(std::abs(chaos::inner(ex.element, ey.element) - cplx(series, 0.0)) <=
        1e-3);
}

TEST_CASE("bias forms converge to the ornstein-uhlenbeck pairing") {
  const TimeGrid g(4096);
  const auto theta = PeriodicScalarTheta::cosine();
  const auto x = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  auto rows = chaos::bias_form_experiment(x, x, theta,
                                          std::vector<std::int64_t>{64, 256});
  const auto& last = rows.back();
  CHECK(last.target.real() == doctest::Approx(-0.5 * x.norm2()).epsilon(1e-12));
  CHECK(std::abs(last.theoretical.real() - last.target.real()) <=
        0.01 * std::abs(last.target.real()));
  CHECK(std::abs(last.practical.real() - last.target.real()) <=
        0.01 * std::abs(last.target.real()));
  // the two forms are conjugate up to the phase square, so their
  // imaginary parts mirror each other
  CHECK(std::abs(last.theoretical.imag() + last.practical.imag()) <= 1e-6);
}

TEST_CASE("bias forms vanish identically across chaos orders") {
  const TimeGrid g(256);
  const auto theta = PeriodicScalarTheta::cosine();
  const auto x1 = chaos::make_order1(g, grid_fn(g, sqrt3_t));
  const auto x2 = chaos::make_order2_rank1(g, grid_fn(g, const_sqrt2),
                                           grid_fn(g, const_one));
  auto rows =
      chaos::bias_form_experiment(x1, x2, theta, std::vector<std::int64_t>{16});
  CHECK(std::abs(rows[0].theoretical) <= 1e-12);
  CHECK(std::abs(rows[0].practical) <= 1e-12);
  CHECK(std::abs(rows[0].target) <= 1e-12);

  const chaos::ChaosElement cx(cplx(1.0, 0.0), g);
  const chaos::ChaosElement cy(cplx(2.0, 0.0), g);
  auto const_rows =
      chaos::bias_form_experiment(cx, cy, theta, std::vector<std::int64_t>{16});
  CHECK(std::abs(const_rows[0].theoretical) <= 1e-14);
  CHECK(std::abs(const_rows[0].practical) <= 1e-14);
}
