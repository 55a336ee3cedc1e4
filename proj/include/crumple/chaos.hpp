#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "crumple/brownian.hpp"
#include "crumple/stattest.hpp"

// Discrete Wiener chaos over a one-dimensional Brownian path: iterated Ito
// integrals over ordered index tuples, the phase operator R_n inserting
// e^{i theta(n s)/n} per integration slot, the Ornstein-Uhlenbeck operator
// and its Dirichlet form, the Malliavin derivative, and the sharp operator
// built from an independent Brownian motion. All L2 identities hold exactly
// on the discrete space; Monte Carlo enters only through path sampling.
namespace crumple::chaos {

using cplx = std::complex<double>;

inline constexpr int kMaxOrder = 3;
inline constexpr std::int64_t kMaxDenseGrid = 512;

// Unit-period scalar with zero mean and unit mean square.
class PeriodicScalarTheta {
 public:
  enum class Variant { Cosine, Sine, Rademacher };

  static PeriodicScalarTheta cosine();      // sqrt(2) cos(2 pi s)
  static PeriodicScalarTheta sine();        // sqrt(2) sin(2 pi s)
  static PeriodicScalarTheta rademacher();  // +1 on [0,1/2), -1 on [1/2,1)

  double operator()(double s) const;
  double sup_norm() const;
  std::int64_t alignment_factor() const;  // 2 for rademacher, else 1
  Variant variant() const { return variant_; }

 private:
  explicit PeriodicScalarTheta(Variant v) : variant_(v) {}
  Variant variant_;
};

// Product kernel g_1(s_1) ... g_k(s_k) restricted to the ordered simplex.
struct RankOneKernel {
  std::vector<std::vector<cplx>> slots;  // k vectors of length N
};

// Explicit values on ordered tuples j_1 < ... < j_k in colex rank order.
struct DenseKernel {
  std::vector<cplx> values;
};

// Complex kernel of one chaos order on a TimeGrid.
class OrderedKernel {
 public:
  static OrderedKernel rank_one(TimeGrid grid,
                                std::vector<std::vector<cplx>> slots);
  static OrderedKernel dense(TimeGrid grid, int order,
                             std::vector<cplx> values);

  int order() const { return order_; }
  const TimeGrid& grid() const { return grid_; }
  bool is_rank_one() const {
    return std::holds_alternative<RankOneKernel>(data_);
  }
  const RankOneKernel& rank_one_data() const {
    return std::get<RankOneKernel>(data_);
  }
  const DenseKernel& dense_data() const { return std::get<DenseKernel>(data_); }

  // sum over ordered tuples of |f|^2 dt^k
  double norm2() const;
  // Hermitian pairing: sum f conj(g) dt^k; the second argument is
  // conjugated so the induced norm is norm2.
  cplx inner(const OrderedKernel& rhs) const;

  OrderedKernel scaled(cplx factor) const;
  // Multiplies the kernel by prod_p phase[j_p] (the same per-slot phase
  // applied to every slot).
  OrderedKernel phased(std::span<const cplx> phase) const;
  OrderedKernel densified() const;

  cplx value_at(std::span<const std::int64_t> tuple) const;

  // Number of ordered tuples for this order and grid.
  std::int64_t tuple_count() const;

 private:
  OrderedKernel() = default;
  TimeGrid grid_;
  int order_ = 1;
  std::variant<RankOneKernel, DenseKernel> data_;
};

// Finite chaos expansion: constant plus at most one kernel per order 1..3.
class ChaosElement {
 public:
  ChaosElement() = default;
  ChaosElement(cplx constant, TimeGrid grid)
      : constant_(constant), grid_(grid) {}

  static ChaosElement constant_element(cplx c, TimeGrid grid) {
    return ChaosElement(c, grid);
  }

  void set_kernel(OrderedKernel kernel);
  const OrderedKernel* kernel(int order) const;
  cplx constant() const { return constant_; }
  void set_constant(cplx c) { constant_ = c; }
  void add_to_constant(cplx c) { constant_ += c; }
  const TimeGrid& grid() const { return grid_; }
  int max_order() const;

  // |c|^2 + sum of kernel norms (chaos orthogonality).
  double norm2() const;

 private:
  cplx constant_ = 0.0;
  TimeGrid grid_;
  std::vector<OrderedKernel> kernels_;  // at most one per order
};

// Convenience builders.
ChaosElement make_order1(TimeGrid grid, const std::vector<cplx>& h);
ChaosElement make_order2_rank1(TimeGrid grid, const std::vector<cplx>& g1,
                               const std::vector<cplx>& g2);
ChaosElement make_order3_rank1(TimeGrid grid, const std::vector<cplx>& g1,
                               const std::vector<cplx>& g2,
                               const std::vector<cplx>& g3);

// c + sum_k sum_{j1<...<jk} f(j1..jk) dB_{j1} ... dB_{jk}.
cplx eval_chaos(const ChaosElement& x, const BrownianPath& path);

// Phase operator: kernel values gain exp(i/n * sum_p theta(n t_{j_p})),
// left endpoints. Exact isometry of the discrete L2 space. The grid must
// be a multiple of n * alignment_factor(theta).
ChaosElement apply_Rn(const ChaosElement& x, const PeriodicScalarTheta& theta,
                      std::int64_t n);

// Ornstein-Uhlenbeck operator: multiplies the order-k part by -k/2 and
// kills the constant.
ChaosElement apply_A(const ChaosElement& x);

// Dirichlet form E[X] = sum_k (k/2) |f_k|^2 = <-A X, X>.
double dirichlet_energy(const ChaosElement& x);

// Hermitian inner product c_x conj(c_y) + sum_k <f_k, g_k>.
cplx inner(const ChaosElement& x, const ChaosElement& y);

// Kernel-insertion derivative at grid index t: the order-k part
// contributes the order-(k-1) kernel with t inserted in sorted position
// (tuples containing t itself contribute nothing).
ChaosElement malliavin_derivative(const ChaosElement& x, std::int64_t t_index);

// X^# = sum over orders and slots of the iterated integral with one slot
// driven by the independent path w; equals sum_t eval(D_t X)(b) dW_t.
cplx sharp_sample(const ChaosElement& x, const BrownianPath& b,
                  const BrownianPath& w);

// Exact second moment |n (R_n X - X)|^2 computed from kernels.
double exact_fluctuation_moment(const ChaosElement& x,
                                const PeriodicScalarTheta& theta,
                                std::int64_t n);

// L2 norm^2 of the imaginary part of -i n (R_n X - X), exact.
double exact_imaginary_moment(const ChaosElement& x,
                              const PeriodicScalarTheta& theta,
                              std::int64_t n);

// L2 bound on the Taylor remainder of the phase expansion:
// sum_k k^2 |theta|_inf^2 |X_k|^2 / (4 n).
double taylor_remainder_bound(const ChaosElement& x,
                              const PeriodicScalarTheta& theta,
                              std::int64_t n);

// ---------------------------------------------------------------------------
// Exponential vectors

struct ExponentialVector {
  TimeGrid grid;
  std::vector<double> xi;  // values at left endpoints
  double norm2() const;    // sum xi^2 dt
};

struct ExpansionResult {
  ChaosElement element;   // 1 + sum_{k<=K} ordered rank-one xi tensors
  double tail_norm;       // L2 mass of the discarded orders, exact discrete
  double tail_fraction;   // tail / norm of the full discrete exponential
};

// Chaos expansion of the normalized exponential; refuses truncations whose
// tail exceeds 10% of the norm.
ExpansionResult expand_exponential(const ExponentialVector& v,
                                   int truncation_order);

// ---------------------------------------------------------------------------
// Experiments

struct FluctuationRow {
  std::int64_t n = 0;
  double exact_moment = 0.0;  // |n(R_n X - X)|^2 from kernels
  double mc_moment = 0.0;
  double mc_se = 0.0;
  double target = 0.0;  // 2 E[X]
  double z = 0.0;       // (mc - exact) / se
  double im_moment = 0.0;         // MC second moment of the imaginary part
  double im_se = 0.0;
  double im_exact = 0.0;          // exact counterpart
  double remainder_bound = 0.0;   // Taylor remainder L2 bound
};

struct FluctuationResult {
  std::vector<FluctuationRow> rows;
  std::vector<std::pair<std::int64_t, stattest::EcfReport>> ecf;
};

// Per n: (i) joint ECF of (Re(-i n (R_n X - X)), B at probe times) against
// a direct simulation of (X^#, B) on independent streams — the limit is
// real for real kernels, and the imaginary part is reported through its
// exact second moment next to the remainder bound; (ii) the exact second
// moment against 2 E[X] and against the Monte Carlo estimate.
FluctuationResult fluctuation_experiment(
    const ChaosElement& x, const PeriodicScalarTheta& theta,
    std::span<const std::int64_t> n_list, std::int64_t samples,
    std::span<const double> probe_times,
    std::span<const std::vector<double>> probes, RngStream stream);

struct BiasFormRow {
  std::int64_t n = 0;
  cplx theoretical{};  // n^2 <(phase - 1) f_k, g_k> summed over orders
  cplx practical{};    // n^2 <(1 - phase) f_k, phase g_k>
  cplx target{};       // <A X, Y>
};

// Both bias forms evaluated exactly via kernel inner products, no Monte
// Carlo. Real parts converge to <A X, Y>; imaginary parts are reported,
// not asserted.
std::vector<BiasFormRow> bias_form_experiment(
    const ChaosElement& x, const ChaosElement& y,
    const PeriodicScalarTheta& theta, std::span<const std::int64_t> n_list);

}  // namespace crumple::chaos
