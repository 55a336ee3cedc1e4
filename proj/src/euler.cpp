#include "crumple/euler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace crumple::euler {

int state_dim(const SdeSystem& sys) {
  if (const auto* s = std::get_if<SpecialSdeSystem>(&sys)) return s->k1 + s->k2;
  return std::get<GenericSdeSystem>(sys).m;
}

int noise_dim(const SdeSystem& sys) {
  if (const auto* s = std::get_if<SpecialSdeSystem>(&sys)) return s->d;
  return std::get<GenericSdeSystem>(sys).d;
}

SdeSystem make_system(const std::string& name) {
  if (name == "special") {
    SpecialSdeSystem s;
    s.k1 = 1;
    s.k2 = 1;
    s.d = 1;
    s.f11 = [](std::span<const double> x2, std::span<double> out) {
      out[0] = std::sin(x2[0]);
    };
    s.f12 = [](std::span<const double>, std::span<const double>,
               std::span<double> out) { out[0] = 0.0; };
    s.f22 = [](std::span<const double> x1, std::span<const double>,
               std::span<double> out) { out[0] = x1[0]; };
    s.x0 = {1.0, 0.0};
    return s;
  }
  if (name == "generic") {
    GenericSdeSystem g;
    g.m = 1;
    g.d = 1;
    g.drift = [](std::span<const double>, std::span<double> out) {
      out[0] = 0.0;
    };
    g.sigma = [](std::span<const double> x, std::span<double> out) {
      out[0] = std::sin(x[0]);
    };
    g.x0 = {1.0};
    return g;
  }
  if (name == "pure_noise") {
    GenericSdeSystem g;
    g.m = 1;
    g.d = 1;
    g.drift = [](std::span<const double>, std::span<double> out) {
      out[0] = 0.0;
    };
    g.sigma = [](std::span<const double>, std::span<double> out) {
      out[0] = 1.0;
    };
    g.x0 = {0.0};
    return g;
  }
  if (name == "linear_drift") {
    GenericSdeSystem g;
    g.m = 1;
    g.d = 1;
    g.drift = [](std::span<const double> x, std::span<double> out) {
      out[0] = x[0];
    };
    g.sigma = [](std::span<const double>, std::span<double> out) {
      out[0] = 0.0;
    };
    g.x0 = {1.0};
    return g;
  }
  throw std::invalid_argument("make_system: unknown system '" + name + "'");
}

namespace {

// One Euler step x <- x + b dt + sigma dW, writing into x.
void step(const SdeSystem& sys, std::span<double> x, double dt,
          std::span<const double> dw, std::vector<double>& scratch) {
  if (const auto* s = std::get_if<SpecialSdeSystem>(&sys)) {
    const int k1 = s->k1, k2 = s->k2, d = s->d;
    scratch.resize(static_cast<std::size_t>(k1) * d + k1 + k2);
    std::span<double> a11(scratch.data(), static_cast<std::size_t>(k1) * d);
    std::span<double> a12(scratch.data() + k1 * d, k1);
    std::span<double> a22(scratch.data() + k1 * d + k1, k2);
    std::span<const double> x1(x.data(), k1);
    std::span<const double> x2(x.data() + k1, k2);
    s->f11(x2, a11);
    s->f12(x1, x2, a12);
    s->f22(x1, x2, a22);
    for (int r = 0; r < k1; ++r) {
      double noise = 0.0;
      for (int c = 0; c < d; ++c) noise += a11[r * d + c] * dw[c];
      x[r] += a12[r] * dt + noise;
    }
    for (int r = 0; r < k2; ++r) x[k1 + r] += a22[r] * dt;
    return;
  }
  const auto& g = std::get<GenericSdeSystem>(sys);
  const int m = g.m, d = g.d;
  scratch.resize(static_cast<std::size_t>(m) * d + m);
  std::span<double> sig(scratch.data(), static_cast<std::size_t>(m) * d);
  std::span<double> b(scratch.data() + m * d, m);
  g.drift(x, b);
  g.sigma(x, sig);
  for (int r = 0; r < m; ++r) {
    double noise = 0.0;
    for (int c = 0; c < d; ++c) noise += sig[r * d + c] * dw[c];
    x[r] += b[r] * dt + noise;
  }
}

std::vector<double> initial_state(const SdeSystem& sys) {
  if (const auto* s = std::get_if<SpecialSdeSystem>(&sys)) return s->x0;
  return std::get<GenericSdeSystem>(sys).x0;
}

bool finite(std::span<const double> x) {
  for (double v : x)
    if (!std::isfinite(v)) return false;
  return true;
}

}  // namespace

std::vector<double> euler_solve(const SdeSystem& sys, const BrownianPath& path,
                                std::int64_t n) {
  const int m = state_dim(sys);
  const int d = noise_dim(sys);
  if (path.dim() != d)
    throw std::invalid_argument("euler_solve: noise dimension mismatch");
  const std::int64_t fine = path.grid().steps;
  require_divides(n, fine, "euler_solve");
  const std::int64_t block = fine / n;
  const double dt = 1.0 / static_cast<double>(n);

  std::vector<double> traj(static_cast<std::size_t>(n + 1) * m);
  std::vector<double> x = initial_state(sys);
  if (static_cast<int>(x.size()) != m)
    throw std::invalid_argument("euler_solve: x0 dimension mismatch");
  std::copy(x.begin(), x.end(), traj.begin());
  std::vector<double> dw(static_cast<std::size_t>(d));
  std::vector<double> scratch;
  for (std::int64_t i = 0; i < n; ++i) {
    std::fill(dw.begin(), dw.end(), 0.0);
    for (std::int64_t j = i * block; j < (i + 1) * block; ++j)
      for (int c = 0; c < d; ++c) dw[c] += path.increment(j, c);
    step(sys, x, dt, dw, scratch);
    if (!finite(x)) throw BlowupError(i + 1);
    std::copy(x.begin(), x.end(), traj.begin() + (i + 1) * m);
  }
  return traj;
}

std::vector<double> reference_solve(const SdeSystem& sys,
                                    const BrownianPath& path) {
  const int d = noise_dim(sys);
  if (path.dim() != d)
    throw std::invalid_argument("reference_solve: noise dimension mismatch");
  const std::int64_t n = path.grid().steps;
  const double dt = path.grid().dt;
  std::vector<double> x = initial_state(sys);
  std::vector<double> dw(static_cast<std::size_t>(d));
  std::vector<double> scratch;
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) dw[c] = path.increment(i, c);
    step(sys, x, dt, dw, scratch);
    if (!finite(x)) throw BlowupError(i + 1);
  }
  return x;
}

RateResult rate_experiment(
    const SdeSystem& sys, std::span<const std::int64_t> n_list,
    std::int64_t samples, std::int64_t n_fine,
    const std::function<double(std::span<const double>)>& g,
    RngStream stream) {
  if (n_list.size() < 3)
    throw std::invalid_argument("rate_experiment: needs >= 3 n values");
  std::int64_t max_n = 0;
  for (std::int64_t n : n_list) {
    require_divides(n, n_fine, "rate_experiment");
    max_n = std::max(max_n, n);
  }
  if (n_fine < 64 * max_n)
    throw std::invalid_argument(
        "rate_experiment: n_fine must be >= 64 * max(n)");

  const int m = state_dim(sys);
  const int d = noise_dim(sys);
  const TimeGrid grid(n_fine);
  const std::size_t kn = n_list.size();

  std::vector<std::vector<double>> abs_err(kn), g_coarse(kn), nerr(kn);
  for (auto& v : abs_err) v.resize(static_cast<std::size_t>(samples));
  for (auto& v : g_coarse) v.resize(static_cast<std::size_t>(samples));
  for (auto& v : nerr) v.resize(static_cast<std::size_t>(samples));
  std::vector<double> g_ref(static_cast<std::size_t>(samples));

  RandomSource rs(stream);
  for (std::int64_t i = 0; i < samples; ++i) {
    const BrownianPath path = sample_brownian(rs, grid, d);
    const std::vector<double> ref = reference_solve(sys, path);
    g_ref[i] = g(ref);
    for (std::size_t a = 0; a < kn; ++a) {
      const std::vector<double> traj = euler_solve(sys, path, n_list[a]);
      std::span<const double> terminal(traj.data() + n_list[a] * m, m);
      double err2 = 0.0;
      for (int c = 0; c < m; ++c) {
        const double e = terminal[c] - ref[c];
        err2 += e * e;
      }
      abs_err[a][i] = std::sqrt(err2);
      g_coarse[a][i] = g(terminal);
      nerr[a][i] = terminal[0] - ref[0];
    }
  }

  RateResult out;
  std::vector<std::pair<double, double>> fit_pairs;
  bool degenerate = false;
  for (std::size_t a = 0; a < kn; ++a) {
    auto strong = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return abs_err[a][i]; });
    auto gc = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return g_coarse[a][i]; });
    auto gr = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return g_ref[i]; });
    RatePoint p;
    p.n = n_list[a];
    p.strong_err = strong.mean;
    p.strong_se = strong.se;
    p.weak_err = std::abs(gc.mean - gr.mean);
    out.points.push_back(p);
    if (strong.mean <= 1e-14)
      degenerate = true;
    else
      fit_pairs.emplace_back(static_cast<double>(n_list[a]), strong.mean);

    const double nd = static_cast<double>(n_list[a]);
    for (double scale : {nd, std::sqrt(nd)}) {
      auto v = stattest::batch_mean(samples, [&](std::int64_t i) {
        const double ph = scale * nerr[a][i];
        return stattest::cplx(std::cos(ph), std::sin(ph));
      });
      EcfStabRow row{n_list[a], scale, v.mean, v.se};
      (scale == nd ? out.ecf_n : out.ecf_sqrtn).push_back(row);
    }
  }
  if (degenerate || fit_pairs.size() < 3) {
    out.diagnostic = "degenerate errors: slope fit refused";
  } else {
    out.fit = stattest::fit_rate(fit_pairs);
  }
  return out;
}

}  // namespace crumple::euler
