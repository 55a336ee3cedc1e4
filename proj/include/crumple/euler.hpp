#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "crumple/brownian.hpp"
#include "crumple/stattest.hpp"

// Euler scheme error rates for two SDE classes on [0,1]: the block
// triangular class whose diffusion coefficient depends only on the
// non-noisy block (strong error of order 1/n) against a generic diffusion
// (order 1/sqrt(n)). Coarse solutions are coupled to a fine reference by
// aggregating the same Brownian increments.
namespace crumple::euler {

// X1' driven by f11(X2) dB + f12(X1,X2) dt, X2' = f22(X1,X2) dt.
struct SpecialSdeSystem {
  int k1 = 1, k2 = 1, d = 1;
  // f11: (x2) -> k1 x d row-major
  std::function<void(std::span<const double>, std::span<double>)> f11;
  // f12, f22: (x1, x2) -> vector
  std::function<void(std::span<const double>, std::span<const double>,
                     std::span<double>)>
      f12, f22;
  std::vector<double> x0;  // size k1 + k2
};

struct GenericSdeSystem {
  int m = 1, d = 1;
  std::function<void(std::span<const double>, std::span<double>)> drift;
  // sigma: (x) -> m x d row-major
  std::function<void(std::span<const double>, std::span<double>)> sigma;
  std::vector<double> x0;
};

using SdeSystem = std::variant<SpecialSdeSystem, GenericSdeSystem>;

int state_dim(const SdeSystem& sys);
int noise_dim(const SdeSystem& sys);

// Built-in test systems selected by name: "special" (f11 = sin x2,
// f12 = 0, f22 = x1, x0 = (1,0)), "generic" (dX = sin(X) dB, x0 = 1),
// "pure_noise" (dX = dB), "linear_drift" (dX = X dt, x0 = 1).
SdeSystem make_system(const std::string& name);

struct BlowupError : std::runtime_error {
  explicit BlowupError(std::int64_t at_step)
      : std::runtime_error("euler_solve: non-finite state at step " +
                           std::to_string(at_step)),
        step(at_step) {}
  std::int64_t step;
};

// Explicit Euler with n coarse steps, Brownian increments aggregated from
// the fine path (the grid must be a multiple of n). Returns the
// trajectory, (n+1) x m row-major.
std::vector<double> euler_solve(const SdeSystem& sys, const BrownianPath& path,
                                std::int64_t n);

// Euler at the path's own grid; terminal state only. Serves as the coupled
// reference for the coarse solves.
std::vector<double> reference_solve(const SdeSystem& sys,
                                    const BrownianPath& path);

struct RatePoint {
  std::int64_t n = 0;
  double strong_err = 0.0;  // E |X^n_1 - X^ref_1|
  double strong_se = 0.0;
  double weak_err = 0.0;    // |E g(X^n_1) - E g(X^ref_1)|
};

struct EcfStabRow {
  std::int64_t n = 0;
  double scale = 1.0;  // n or sqrt(n)
  stattest::cplx value{};
  double se = 0.0;
};

struct RateResult {
  std::vector<RatePoint> points;
  std::optional<stattest::RateFit> fit;  // empty when refused
  std::string diagnostic;
  // ECF at u = 1 of scale * (X^n_1 - X^ref_1), first coordinate: the n
  // scaling stabilizes for the special class, only sqrt(n) does for the
  // generic one.
  std::vector<EcfStabRow> ecf_n;
  std::vector<EcfStabRow> ecf_sqrtn;
};

// Requires >= 3 dyadic n values, every n dividing n_fine, and
// n_fine >= 64 * max(n) so the reference bias is negligible against the
// Monte Carlo bands.
RateResult rate_experiment(const SdeSystem& sys,
                           std::span<const std::int64_t> n_list,
                           std::int64_t samples, std::int64_t n_fine,
                           const std::function<double(std::span<const double>)>& g,
                           RngStream stream);

}  // namespace crumple::euler
