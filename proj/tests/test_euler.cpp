#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "crumple/euler.hpp"

using namespace crumple;

namespace {

euler::SdeSystem zero_system() {
  euler::GenericSdeSystem g;
  g.m = 1;
  g.d = 1;
  g.drift = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  g.sigma = [](std::span<const double>, std::span<double> out) { out[0] = 0.0; };
  g.x0 = {3.25};
  return g;
}

}  // namespace

TEST_CASE("zero drift and diffusion keep the state constant") {
  RandomSource rs({800, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(64), 1);
  const auto traj = euler::euler_solve(zero_system(), p, 8);
  for (int i = 0; i <= 8; ++i) CHECK(traj[i] == 3.25);
}

TEST_CASE("pure noise is integrated exactly at every resolution") {
  RandomSource rs({801, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(256), 1);
  const auto sys = euler::make_system("pure_noise");
  for (std::int64_t n : {4, 16, 256}) {
    const auto traj = euler::euler_solve(sys, p, n);
    CHECK(traj[n] == doctest::Approx(p.value(256)).epsilon(1e-14));
  }
}

TEST_CASE("special system with constant diffusion block is exact") {
  euler::SpecialSdeSystem s;
  s.k1 = 1;
  s.k2 = 1;
  s.d = 1;
  s.f11 = [](std::span<const double>, std::span<double> out) { out[0] = 1.0; };
  s.f12 = [](std::span<const double>, std::span<const double>,
             std::span<double> out) { out[0] = 0.0; };
  s.f22 = [](std::span<const double>, std::span<const double>,
             std::span<double> out) { out[0] = 0.0; };
  s.x0 = {2.0, -1.0};
  RandomSource rs({802, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(128), 1);
  const auto traj = euler::euler_solve(euler::SdeSystem(s), p, 16);
  CHECK(traj[16 * 2] == doctest::Approx(2.0 + p.value(128)).epsilon(1e-14));
  CHECK(traj[16 * 2 + 1] == -1.0);
}

TEST_CASE("deterministic linear drift matches the closed-form solution") {
  // x' = x, x(0) = 1: Euler at N steps lands within 3e/N of e.
  const std::int64_t N = 1024;
  BrownianPath flat(TimeGrid(N), 1, std::vector<double>(N, 0.0));
  const auto sys = euler::make_system("linear_drift");
  const auto x = euler::reference_solve(sys, flat);
  const double e = std::exp(1.0);
  CHECK(std::abs(x[0] - e) <= 3.0 * e / static_cast<double>(N));
}

TEST_CASE("solves are deterministic functions of the path") {
  RandomSource rs({803, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(128), 1);
  const auto sys = euler::make_system("special");
  const auto a = euler::euler_solve(sys, p, 16);
  const auto b = euler::euler_solve(sys, p, 16);
  CHECK(a == b);
}

TEST_CASE("coarse solve at the fine resolution telescopes to the reference") {
  RandomSource rs({804, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(256), 1);
  for (const char* name : {"special", "generic"}) {
    const auto sys = euler::make_system(name);
    const int m = euler::state_dim(sys);
    const auto traj = euler::euler_solve(sys, p, 256);
    const auto ref = euler::reference_solve(sys, p);
    for (int c = 0; c < m; ++c)
      CHECK(traj[256 * m + c] == doctest::Approx(ref[c]).epsilon(1e-14));
  }
}

TEST_CASE("divisibility violations and blow-ups are reported") {
  RandomSource rs({805, 0});
  const BrownianPath p = sample_brownian(rs, TimeGrid(100), 1);
  CHECK_THROWS_AS(euler::euler_solve(euler::make_system("generic"), p, 16),
                  std::invalid_argument);

  euler::GenericSdeSystem quad;
  quad.m = 1;
  quad.d = 1;
  quad.drift = [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0];
  };
  quad.sigma = [](std::span<const double>, std::span<double> out) {
    out[0] = 0.0;
  };
  quad.x0 = {1e200};
  try {
    euler::euler_solve(euler::SdeSystem(quad), p, 4);
    CHECK(false);
  } catch (const euler::BlowupError& e) {
    CHECK(e.step >= 1);
  }
}

TEST_CASE("rate experiment recovers the two strong-error slopes") {
  const std::vector<std::int64_t> ns{16, 32, 64};
  const std::int64_t n_fine = 4096;
  auto g = [](std::span<const double> x) { return x[0] * x[0]; };

  auto special = euler::rate_experiment(euler::make_system("special"), ns,
                                        2000, n_fine, g, {806, 0});
  REQUIRE(special.fit.has_value());
  CHECK(std::abs(special.fit->slope + 1.0) <= 0.2);

  auto generic = euler::rate_experiment(euler::make_system("generic"), ns,
                                        2000, n_fine, g, {807, 0});
  REQUIRE(generic.fit.has_value());
  CHECK(std::abs(generic.fit->slope + 0.5) <= 0.15);

  CHECK(special.fit->slope - generic.fit->slope <= -0.25);

  // strong errors decrease within statistical bands
  for (const auto& res : {special, generic})
    for (std::size_t i = 1; i < res.points.size(); ++i)
      CHECK(res.points[i].strong_err <=
            res.points[i - 1].strong_err +
                3.0 * (res.points[i].strong_se + res.points[i - 1].strong_se));
}

TEST_CASE("the experiment agrees with itself across resolutions") {
  auto g = [](std::span<const double> x) { return x[0] * x[0]; };
  auto a = euler::rate_experiment(euler::make_system("special"),
                                  std::vector<std::int64_t>{16, 32, 64}, 2000,
                                  4096, g, {808, 0});
  auto b = euler::rate_experiment(euler::make_system("special"),
                                  std::vector<std::int64_t>{32, 64, 128}, 2000,
                                  8192, g, {809, 0});
  REQUIRE(a.fit.has_value());
  REQUIRE(b.fit.has_value());
  CHECK(std::abs(a.fit->slope - b.fit->slope) <= 0.15);
}

TEST_CASE("degenerate errors refuse the slope fit with a diagnostic") {
  auto g = [](std::span<const double> x) { return x[0]; };
  auto res = euler::rate_experiment(euler::make_system("pure_noise"),
                                    std::vector<std::int64_t>{16, 32, 64}, 1000,
                                    4096, g, {810, 0});
  CHECK_FALSE(res.fit.has_value());
  CHECK(res.diagnostic.find("degenerate") != std::string::npos);
}

TEST_CASE("rate experiment validates its configuration") {
  auto g = [](std::span<const double> x) { return x[0]; };
  CHECK_THROWS_AS(
      euler::rate_experiment(euler::make_system("generic"),
                             std::vector<std::int64_t>{16, 32}, 1000, 4096, g,
                             {811, 0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      euler::rate_experiment(euler::make_system("generic"),
                             std::vector<std::int64_t>{16, 32, 100}, 1000, 4096,
                             g, {812, 0}),
      std::invalid_argument);
  CHECK_THROWS_AS(
      euler::rate_experiment(euler::make_system("generic"),
                             std::vector<std::int64_t>{16, 32, 128}, 1000, 4096,
                             g, {813, 0}),
      std::invalid_argument);
}
