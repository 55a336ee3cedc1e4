#include "crumple/chaos.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace crumple::chaos {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::int64_t choose2(std::int64_t j) { return j * (j - 1) / 2; }
std::int64_t choose3(std::int64_t j) { return j * (j - 1) * (j - 2) / 6; }

std::int64_t ordered_tuple_count(std::int64_t n, int order) {
  switch (order) {
    case 1:
      return n;
    case 2:
      return choose2(n);
    case 3:
      return choose3(n);
    default:
      throw std::invalid_argument("chaos: order must be 1..3");
  }
}

std::int64_t tuple_rank(std::span<const std::int64_t> t) {
  switch (t.size()) {
    case 1:
      return t[0];
    case 2:
      return choose2(t[1]) + t[0];
    case 3:
      return choose3(t[2]) + choose2(t[1]) + t[0];
    default:
      throw std::invalid_argument("chaos: tuple size must be 1..3");
  }
}

// sum over ordered tuples j1 < ... < jk of prod_p v(p, j_p), one forward
// sweep with k running accumulators.
template <class SlotFn>
cplx ordered_sum(int order, std::int64_t n, SlotFn&& v) {
  cplx acc[kMaxOrder + 1] = {cplx(1.0, 0.0)};
  for (std::int64_t j = 0; j < n; ++j)
    for (int p = order; p >= 1; --p) acc[p] += v(p - 1, j) * acc[p - 1];
  return acc[order];
}

}  // namespace

// ---------------------------------------------------------------------------
// PeriodicScalarTheta

PeriodicScalarTheta PeriodicScalarTheta::cosine() {
  return PeriodicScalarTheta(Variant::Cosine);
}
PeriodicScalarTheta PeriodicScalarTheta::sine() {
  return PeriodicScalarTheta(Variant::Sine);
}
PeriodicScalarTheta PeriodicScalarTheta::rademacher() {
  return PeriodicScalarTheta(Variant::Rademacher);
}

double PeriodicScalarTheta::operator()(double s) const {
  const double u = s - std::floor(s);
  switch (variant_) {
    case Variant::Cosine:
      return std::numbers::sqrt2 * std::cos(kTwoPi * u);
    case Variant::Sine:
      return std::numbers::sqrt2 * std::sin(kTwoPi * u);
    case Variant::Rademacher:
      return u < 0.5 ? 1.0 : -1.0;
  }
  return 0.0;
}

double PeriodicScalarTheta::sup_norm() const {
  return variant_ == Variant::Rademacher ? 1.0 : std::numbers::sqrt2;
}

std::int64_t PeriodicScalarTheta::alignment_factor() const {
  return variant_ == Variant::Rademacher ? 2 : 1;
}

// ---------------------------------------------------------------------------
// OrderedKernel

OrderedKernel OrderedKernel::rank_one(TimeGrid grid,
                                      std::vector<std::vector<cplx>> slots) {
  if (slots.empty() || slots.size() > kMaxOrder)
    throw std::invalid_argument("OrderedKernel: order must be 1..3");
  for (const auto& s : slots)
    if (static_cast<std::int64_t>(s.size()) != grid.steps)
      throw std::invalid_argument("OrderedKernel: slot length mismatch");
  OrderedKernel k;
  k.grid_ = grid;
  k.order_ = static_cast<int>(slots.size());
  k.data_ = RankOneKernel{std::move(slots)};
  return k;
}

OrderedKernel OrderedKernel::dense(TimeGrid grid, int order,
                                   std::vector<cplx> values) {
  if (order < 1 || order > kMaxOrder)
    throw std::invalid_argument("OrderedKernel: order must be 1..3");
  if (grid.steps > kMaxDenseGrid)
    throw std::invalid_argument("OrderedKernel: dense grid capped at 512");
  if (static_cast<std::int64_t>(values.size()) !=
      ordered_tuple_count(grid.steps, order))
    throw std::invalid_argument("OrderedKernel: dense value count mismatch");
  OrderedKernel k;
  k.grid_ = grid;
  k.order_ = order;
  k.data_ = DenseKernel{std::move(values)};
  return k;
}

std::int64_t OrderedKernel::tuple_count() const {
  return ordered_tuple_count(grid_.steps, order_);
}

double OrderedKernel::norm2() const {
  const double dt = grid_.dt;
  if (is_rank_one()) {
    const auto& slots = rank_one_data().slots;
    cplx s = ordered_sum(order_, grid_.steps, [&](int p, std::int64_t j) {
      return cplx(std::norm(slots[p][j]) * dt, 0.0);
    });
    return s.real();
  }
  double dtk = 1.0;
  for (int p = 0; p < order_; ++p) dtk *= dt;
  double s = 0.0;
  for (const cplx& v : dense_data().values) s += std::norm(v);
  return s * dtk;
}

cplx OrderedKernel::inner(const OrderedKernel& rhs) const {
  if (!(grid_ == rhs.grid_) || order_ != rhs.order_)
    throw std::invalid_argument("OrderedKernel::inner: shape mismatch");
  const double dt = grid_.dt;
  const std::int64_t n = grid_.steps;
  if (is_rank_one() && rhs.is_rank_one()) {
    const auto& f = rank_one_data().slots;
    const auto& g = rhs.rank_one_data().slots;
    return ordered_sum(order_, n, [&](int p, std::int64_t j) {
      return f[p][j] * std::conj(g[p][j]) * dt;
    });
  }
  // At least one side is dense; iterate tuples directly.
  double dtk = 1.0;
  for (int p = 0; p < order_; ++p) dtk *= dt;
  cplx s = 0.0;
  std::int64_t t[3] = {0, 0, 0};
  auto term = [&](std::int64_t rank) {
    std::span<const std::int64_t> tup(t, static_cast<std::size_t>(order_));
    cplx a = is_rank_one() ? value_at(tup) : dense_data().values[rank];
    cplx b = rhs.is_rank_one() ? rhs.value_at(tup) : rhs.dense_data().values[rank];
    s += a * std::conj(b);
  };
  std::int64_t rank = 0;
  if (order_ == 1) {
    for (t[0] = 0; t[0] < n; ++t[0]) term(rank++);
  } else if (order_ == 2) {
    for (t[1] = 1; t[1] < n; ++t[1])
      for (t[0] = 0; t[0] < t[1]; ++t[0]) term(rank++);
  } else {
    for (t[2] = 2; t[2] < n; ++t[2])
      for (t[1] = 1; t[1] < t[2]; ++t[1])
        for (t[0] = 0; t[0] < t[1]; ++t[0]) term(rank++);
  }
  return s * dtk;
}

OrderedKernel OrderedKernel::scaled(cplx factor) const {
  OrderedKernel k = *this;
  if (k.is_rank_one()) {
    auto& slots = std::get<RankOneKernel>(k.data_).slots;
    for (auto& v : slots[0]) v *= factor;
  } else {
    for (auto& v : std::get<DenseKernel>(k.data_).values) v *= factor;
  }
  return k;
}

OrderedKernel OrderedKernel::phased(std::span<const cplx> phase) const {
  if (static_cast<std::int64_t>(phase.size()) != grid_.steps)
    throw std::invalid_argument("OrderedKernel::phased: phase length mismatch");
  OrderedKernel k = *this;
  if (k.is_rank_one()) {
    for (auto& slot : std::get<RankOneKernel>(k.data_).slots)
      for (std::int64_t j = 0; j < grid_.steps; ++j) slot[j] *= phase[j];
    return k;
  }
  auto& values = std::get<DenseKernel>(k.data_).values;
  const std::int64_t n = grid_.steps;
  std::int64_t rank = 0;
  if (order_ == 1) {
    for (std::int64_t j = 0; j < n; ++j) values[rank++] *= phase[j];
  } else if (order_ == 2) {
    for (std::int64_t j2 = 1; j2 < n; ++j2)
      for (std::int64_t j1 = 0; j1 < j2; ++j1)
        values[rank++] *= phase[j1] * phase[j2];
  } else {
    for (std::int64_t j3 = 2; j3 < n; ++j3)
      for (std::int64_t j2 = 1; j2 < j3; ++j2)
        for (std::int64_t j1 = 0; j1 < j2; ++j1)
          values[rank++] *= phase[j1] * phase[j2] * phase[j3];
  }
  return k;
}

OrderedKernel OrderedKernel::densified() const {
  if (!is_rank_one()) return *this;
  if (grid_.steps > kMaxDenseGrid)
    throw std::invalid_argument("OrderedKernel: dense grid capped at 512");
  const auto& slots = rank_one_data().slots;
  const std::int64_t n = grid_.steps;
  std::vector<cplx> values;
  values.reserve(static_cast<std::size_t>(tuple_count()));
  if (order_ == 1) {
    for (std::int64_t j = 0; j < n; ++j) values.push_back(slots[0][j]);
  } else if (order_ == 2) {
    for (std::int64_t j2 = 1; j2 < n; ++j2)
      for (std::int64_t j1 = 0; j1 < j2; ++j1)
        values.push_back(slots[0][j1] * slots[1][j2]);
  } else {
    for (std::int64_t j3 = 2; j3 < n; ++j3)
      for (std::int64_t j2 = 1; j2 < j3; ++j2)
        for (std::int64_t j1 = 0; j1 < j2; ++j1)
          values.push_back(slots[0][j1] * slots[1][j2] * slots[2][j3]);
  }
  return dense(grid_, order_, std::move(values));
}

cplx OrderedKernel::value_at(std::span<const std::int64_t> tuple) const {
  if (static_cast<int>(tuple.size()) != order_)
    throw std::invalid_argument("OrderedKernel::value_at: arity mismatch");
  if (is_rank_one()) {
    const auto& slots = rank_one_data().slots;
    cplx v(1.0, 0.0);
    for (int p = 0; p < order_; ++p) v *= slots[p][tuple[p]];
    return v;
  }
  return dense_data().values[tuple_rank(tuple)];
}

// ---------------------------------------------------------------------------
// ChaosElement

void ChaosElement::set_kernel(OrderedKernel kernel) {
  if (grid_.steps == 0) grid_ = kernel.grid();
  if (!(kernel.grid() == grid_))
    throw std::invalid_argument("ChaosElement: kernel grid mismatch");
  for (const auto& k : kernels_)
    if (k.order() == kernel.order())
      throw std::invalid_argument("ChaosElement: duplicate kernel order");
  kernels_.push_back(std::move(kernel));
}

const OrderedKernel* ChaosElement::kernel(int order) const {
  for (const auto& k : kernels_)
    if (k.order() == order) return &k;
  return nullptr;
}

int ChaosElement::max_order() const {
  int m = 0;
  for (const auto& k : kernels_) m = std::max(m, k.order());
  return m;
}

double ChaosElement::norm2() const {
  double s = std::norm(constant_);
  for (const auto& k : kernels_) s += k.norm2();
  return s;
}

ChaosElement make_order1(TimeGrid grid, const std::vector<cplx>& h) {
  ChaosElement x(0.0, grid);
  x.set_kernel(OrderedKernel::rank_one(grid, {h}));
  return x;
}

ChaosElement make_order2_rank1(TimeGrid grid, const std::vector<cplx>& g1,
                               const std::vector<cplx>& g2) {
  ChaosElement x(0.0, grid);
  x.set_kernel(OrderedKernel::rank_one(grid, {g1, g2}));
  return x;
}

ChaosElement make_order3_rank1(TimeGrid grid, const std::vector<cplx>& g1,
                               const std::vector<cplx>& g2,
                               const std::vector<cplx>& g3) {
  ChaosElement x(0.0, grid);
  x.set_kernel(OrderedKernel::rank_one(grid, {g1, g2, g3}));
  return x;
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

cplx eval_kernel(const OrderedKernel& k, const BrownianPath& path) {
  const std::int64_t n = k.grid().steps;
  if (k.is_rank_one()) {
    const auto& slots = k.rank_one_data().slots;
    const int order = k.order();
    cplx acc[kMaxOrder + 1] = {cplx(1.0, 0.0)};
    for (std::int64_t j = 0; j < n; ++j) {
      const double db = path.increment(j);
      for (int p = order; p >= 1; --p)
        acc[p] += slots[p - 1][j] * db * acc[p - 1];
    }
    return acc[order];
  }
  const auto& values = k.dense_data().values;
  cplx total = 0.0;
  std::int64_t rank = 0;
  if (k.order() == 1) {
    for (std::int64_t j = 0; j < n; ++j)
      total += values[rank++] * path.increment(j);
  } else if (k.order() == 2) {
    for (std::int64_t j2 = 1; j2 < n; ++j2) {
      cplx inner_sum = 0.0;
      for (std::int64_t j1 = 0; j1 < j2; ++j1)
        inner_sum += values[rank++] * path.increment(j1);
      total += inner_sum * path.increment(j2);
    }
  } else {
    for (std::int64_t j3 = 2; j3 < n; ++j3) {
      cplx mid = 0.0;
      for (std::int64_t j2 = 1; j2 < j3; ++j2) {
        cplx inner_sum = 0.0;
        for (std::int64_t j1 = 0; j1 < j2; ++j1)
          inner_sum += values[rank++] * path.increment(j1);
        mid += inner_sum * path.increment(j2);
      }
      total += mid * path.increment(j3);
    }
  }
  return total;
}

}  // namespace

cplx eval_chaos(const ChaosElement& x, const BrownianPath& path) {
  if (x.max_order() > 0 && !(path.grid() == x.grid()))
    throw std::invalid_argument("eval_chaos: grid mismatch");
  if (path.dim() != 1)
    throw std::invalid_argument("eval_chaos: path must be one-dimensional");
  cplx total = x.constant();
  for (int order = 1; order <= kMaxOrder; ++order)
    if (const OrderedKernel* k = x.kernel(order))
      total += eval_kernel(*k, path);
  return total;
}

// ---------------------------------------------------------------------------
// Operators

namespace {

std::vector<cplx> phase_vector(const PeriodicScalarTheta& theta,
                               std::int64_t n, TimeGrid grid) {
  require_divides(n * theta.alignment_factor(), grid.steps, "apply_Rn");
  std::vector<cplx> phase(static_cast<std::size_t>(grid.steps));
  const double nd = static_cast<double>(n);
  for (std::int64_t j = 0; j < grid.steps; ++j) {
    const double a = theta(nd * grid.point(j)) / nd;
    phase[j] = cplx(std::cos(a), std::sin(a));
  }
  return phase;
}

}  // namespace

ChaosElement apply_Rn(const ChaosElement& x, const PeriodicScalarTheta& theta,
                      std::int64_t n) {
  if (x.max_order() == 0) return x;
  const std::vector<cplx> phase = phase_vector(theta, n, x.grid());
  ChaosElement out(x.constant(), x.grid());
  for (int order = 1; order <= kMaxOrder; ++order)
    if (const OrderedKernel* k = x.kernel(order))
      out.set_kernel(k->phased(phase));
  return out;
}

ChaosElement apply_A(const ChaosElement& x) {
  ChaosElement out(0.0, x.grid());
  for (int order = 1; order <= kMaxOrder; ++order)
    if (const OrderedKernel* k = x.kernel(order))
      out.set_kernel(k->scaled(cplx(-0.5 * order, 0.0)));
  return out;
}

double dirichlet_energy(const ChaosElement& x) {
  double e = 0.0;
  for (int order = 1; order <= kMaxOrder; ++order)
    if (const OrderedKernel* k = x.kernel(order))
      e += 0.5 * order * k->norm2();
  return e;
}

cplx inner(const ChaosElement& x, const ChaosElement& y) {
  cplx s = x.constant() * std::conj(y.constant());
  for (int order = 1; order <= kMaxOrder; ++order) {
    const OrderedKernel* a = x.kernel(order);
    const OrderedKernel* b = y.kernel(order);
    if (a && b) s += a->inner(*b);
  }
  return s;
}

ChaosElement malliavin_derivative(const ChaosElement& x,
                                  std::int64_t t_index) {
  if (x.max_order() == 0)
    return ChaosElement(0.0, x.grid());
  const std::int64_t n = x.grid().steps;
  if (t_index < 0 || t_index >= n)
    throw std::invalid_argument("malliavin_derivative: index off grid");
  ChaosElement out(0.0, x.grid());
  for (int order = 1; order <= kMaxOrder; ++order) {
    const OrderedKernel* k = x.kernel(order);
    if (!k) continue;
    if (order == 1) {
      std::int64_t t[1] = {t_index};
      out.add_to_constant(k->value_at(t));
      continue;
    }
    const OrderedKernel dense_k = k->densified();
    if (order == 2) {
      std::vector<cplx> values(static_cast<std::size_t>(n), 0.0);
      for (std::int64_t j = 0; j < n; ++j) {
        if (j == t_index) continue;
        std::int64_t t[2] = {std::min(j, t_index), std::max(j, t_index)};
        values[j] = dense_k.value_at(t);
      }
      out.set_kernel(OrderedKernel::dense(x.grid(), 1, std::move(values)));
    } else {
      std::vector<cplx> values(
          static_cast<std::size_t>(ordered_tuple_count(n, 2)), 0.0);
      std::int64_t rank = 0;
      for (std::int64_t i2 = 1; i2 < n; ++i2)
        for (std::int64_t i1 = 0; i1 < i2; ++i1, ++rank) {
          if (i1 == t_index || i2 == t_index) continue;
          std::int64_t t[3] = {i1, i2, t_index};
          std::sort(t, t + 3);
          values[rank] = dense_k.value_at(t);
        }
      out.set_kernel(OrderedKernel::dense(x.grid(), 2, std::move(values)));
    }
  }
  return out;
}

cplx sharp_sample(const ChaosElement& x, const BrownianPath& b,
                  const BrownianPath& w) {
  if (!(b.grid() == w.grid()))
    throw std::invalid_argument("sharp_sample: grid mismatch");
  if (x.max_order() == 0) return 0.0;
  if (!(b.grid() == x.grid()))
    throw std::invalid_argument("sharp_sample: grid mismatch");
  const std::int64_t n = x.grid().steps;
  cplx total = 0.0;
  for (int order = 1; order <= kMaxOrder; ++order) {
    const OrderedKernel* k = x.kernel(order);
    if (!k) continue;
    for (int wp = 0; wp < order; ++wp) {
      if (k->is_rank_one()) {
        const auto& slots = k->rank_one_data().slots;
        cplx acc[kMaxOrder + 1] = {cplx(1.0, 0.0)};
        for (std::int64_t j = 0; j < n; ++j) {
          for (int p = order; p >= 1; --p) {
            const double d =
                (p - 1 == wp) ? w.increment(j) : b.increment(j);
            acc[p] += slots[p - 1][j] * d * acc[p - 1];
          }
        }
        total += acc[order];
      } else {
        const auto& values = k->dense_data().values;
        std::int64_t rank = 0;
        auto drv = [&](int p, std::int64_t j) {
          return p == wp ? w.increment(j) : b.increment(j);
        };
        if (order == 1) {
          for (std::int64_t j = 0; j < n; ++j)
            total += values[rank++] * drv(0, j);
        } else if (order == 2) {
          for (std::int64_t j2 = 1; j2 < n; ++j2) {
            cplx inner_sum = 0.0;
            for (std::int64_t j1 = 0; j1 < j2; ++j1)
              inner_sum += values[rank++] * drv(0, j1);
            total += inner_sum * drv(1, j2);
          }
        } else {
          for (std::int64_t j3 = 2; j3 < n; ++j3) {
            cplx mid = 0.0;
            for (std::int64_t j2 = 1; j2 < j3; ++j2) {
              cplx inner_sum = 0.0;
              for (std::int64_t j1 = 0; j1 < j2; ++j1)
                inner_sum += values[rank++] * drv(0, j1);
              mid += inner_sum * drv(1, j2);
            }
            total += mid * drv(2, j3);
          }
        }
      }
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Exact fluctuation moments

double exact_fluctuation_moment(const ChaosElement& x,
                                const PeriodicScalarTheta& theta,
                                std::int64_t n) {
  if (x.max_order() == 0) return 0.0;
  const std::vector<cplx> phase = phase_vector(theta, n, x.grid());
  const double n2 = static_cast<double>(n) * static_cast<double>(n);
  double total = 0.0;
  for (int order = 1; order <= kMaxOrder; ++order) {
    const OrderedKernel* k = x.kernel(order);
    if (!k) continue;
    const OrderedKernel rk = k->phased(phase);
    // |(phase-1) f|^2 = 2 |f|^2 - 2 Re <phase f, f>
    total += n2 * (2.0 * k->norm2() - 2.0 * rk.inner(*k).real());
  }
  return total;
}

double exact_imaginary_moment(const ChaosElement& x,
                              const PeriodicScalarTheta& theta,
                              std::int64_t n) {
  if (x.max_order() == 0) return 0.0;
  const std::vector<cplx> phase = phase_vector(theta, n, x.grid());
  const double nd = static_cast<double>(n);
  const double n2 = nd * nd;
  const double dt = x.grid().dt;
  const std::int64_t steps = x.grid().steps;
  double total = 0.0;
  for (int order = 1; order <= kMaxOrder; ++order) {
    const OrderedKernel* k = x.kernel(order);
    if (!k) continue;
    // (Im z)^2 = (|z|^2 - Re z^2)/2 with z = -i n f (phase - 1).
    // z^2 = -n^2 f^2 (phase^2 - 2 phase + 1) factorizes per slot for
    // rank-one kernels; dense kernels are summed tuple by tuple.
    if (k->is_rank_one()) {
      const auto& slots = k->rank_one_data().slots;
      auto weighted = [&](int power) {
        return ordered_sum(order, steps, [&](int p, std::int64_t j) {
          cplx ph = power == 0 ? cplx(1.0, 0.0)
                               : (power == 1 ? phase[j] : phase[j] * phase[j]);
          return slots[p][j] * slots[p][j] * ph * dt;
        });
      };
      const cplx s = -n2 * (weighted(2) - 2.0 * weighted(1) + weighted(0));
      const double norm_part =
          n2 * (2.0 * k->norm2() - 2.0 * k->phased(phase).inner(*k).real());
      total += 0.5 * (norm_part - s.real());
    } else {
      const auto& values = k->dense_data().values;
      double dtk = 1.0;
      for (int p = 0; p < order; ++p) dtk *= dt;
      double s = 0.0;
      std::int64_t rank = 0;
      auto accumulate = [&](cplx tuple_phase) {
        const cplx z = cplx(0.0, -nd) * values[rank] * (tuple_phase - 1.0);
        const double im = z.imag();
        s += im * im;
        ++rank;
      };
      if (order == 1) {
        for (std::int64_t j = 0; j < steps; ++j) accumulate(phase[j]);
      } else if (order == 2) {
        for (std::int64_t j2 = 1; j2 < steps; ++j2)
          for (std::int64_t j1 = 0; j1 < j2; ++j1)
            accumulate(phase[j1] * phase[j2]);
      } else {
        for (std::int64_t j3 = 2; j3 < steps; ++j3)
          for (std::int64_t j2 = 1; j2 < j3; ++j2)
            for (std::int64_t j1 = 0; j1 < j2; ++j1)
              accumulate(phase[j1] * phase[j2] * phase[j3]);
      }
      total += s * dtk;
    }
  }
  return total;
}

double taylor_remainder_bound(const ChaosElement& x,
                              const PeriodicScalarTheta& theta,
                              std::int64_t n) {
  double bound = 0.0;
  const double sup2 = theta.sup_norm() * theta.sup_norm();
  for (int order = 1; order <= kMaxOrder; ++order)
    if (const OrderedKernel* k = x.kernel(order))
      bound += static_cast<double>(order) * order * sup2 * k->norm2() /
               (4.0 * static_cast<double>(n));
  return bound;
}

// ---------------------------------------------------------------------------
// Exponential vectors

double ExponentialVector::norm2() const {
  double s = 0.0;
  for (double v : xi) s += v * v;
  return s * grid.dt;
}

ExpansionResult expand_exponential(const ExponentialVector& v,
                                   int truncation_order) {
  if (truncation_order < 0 || truncation_order > kMaxOrder)
    throw std::invalid_argument("expand_exponential: truncation must be 0..3");
  if (static_cast<std::int64_t>(v.xi.size()) != v.grid.steps)
    throw std::invalid_argument("expand_exponential: xi length mismatch");
  std::vector<cplx> slot(v.xi.size());
  for (std::size_t j = 0; j < v.xi.size(); ++j) slot[j] = v.xi[j];

  ExpansionResult out;
  out.element = ChaosElement(1.0, v.grid);
  double partial = 1.0;
  for (int k = 1; k <= truncation_order; ++k) {
    std::vector<std::vector<cplx>> slots(static_cast<std::size_t>(k), slot);
    OrderedKernel kernel = OrderedKernel::rank_one(v.grid, std::move(slots));
    const double mass = kernel.norm2();
    if (mass == 0.0) continue;
    partial += mass;
    out.element.set_kernel(std::move(kernel));
  }
  // The discrete exponential prod_j (1 + xi_j dB_j) has squared norm
  // prod (1 + xi_j^2 dt) and its chaos mass below each order is exactly the
  // partial sum above, so the tail is exact.
  double full = 1.0;
  for (double x : v.xi) full *= 1.0 + x * x * v.grid.dt;
  const double tail2 = std::max(full - partial, 0.0);
  out.tail_norm = std::sqrt(tail2);
  out.tail_fraction = out.tail_norm / std::sqrt(full);
  if (out.tail_fraction > 0.10)
    throw std::domain_error(
        "expand_exponential: truncation tail exceeds 10% of the norm");
  return out;
}

// ---------------------------------------------------------------------------
// Experiments

FluctuationResult fluctuation_experiment(
    const ChaosElement& x, const PeriodicScalarTheta& theta,
    std::span<const std::int64_t> n_list, std::int64_t samples,
    std::span<const double> probe_times,
    std::span<const std::vector<double>> probes, RngStream stream) {
  FluctuationResult out;
  const int dim = 1 + static_cast<int>(probe_times.size());
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const std::int64_t n = n_list[idx];
    const ChaosElement rx = apply_Rn(x, theta, n);
    FluctuationRow row;
    row.n = n;
    row.exact_moment = exact_fluctuation_moment(x, theta, n);
    row.target = 2.0 * dirichlet_energy(x);
    row.im_exact = exact_imaginary_moment(x, theta, n);
    row.remainder_bound = taylor_remainder_bound(x, theta, n);

    // An empty probe set asks for the moment comparison only; the oracle
    // side is then skipped entirely.
    const bool with_ecf = !probes.empty();
    RandomSource rs(stream.offset(3 * idx));
    RandomSource rs_b(stream.offset(3 * idx + 1));
    RandomSource rs_w(stream.offset(3 * idx + 2));
    std::vector<double> emp, ref;
    if (with_ecf) {
      emp.reserve(static_cast<std::size_t>(samples) * dim);
      ref.reserve(static_cast<std::size_t>(samples) * dim);
    }
    std::vector<double> sq(static_cast<std::size_t>(samples));
    std::vector<double> imsq(static_cast<std::size_t>(samples));
    const cplx minus_i_n(0.0, -static_cast<double>(n));
    for (std::int64_t i = 0; i < samples; ++i) {
      const BrownianPath b = sample_brownian(rs, x.grid(), 1);
      const cplx v = minus_i_n * (eval_chaos(rx, b) - eval_chaos(x, b));
      sq[i] = std::norm(v);
      imsq[i] = v.imag() * v.imag();
      if (!with_ecf) continue;
      emp.push_back(v.real());
      for (double t : probe_times) emp.push_back(b.value_at_time(t));

      const BrownianPath b2 = sample_brownian(rs_b, x.grid(), 1);
      const BrownianPath w2 = sample_brownian(rs_w, x.grid(), 1);
      ref.push_back(sharp_sample(x, b2, w2).real());
      for (double t : probe_times) ref.push_back(b2.value_at_time(t));
    }
    auto mc = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return sq[i]; });
    auto mi = stattest::batch_mean_real(
        samples, [&](std::int64_t i) { return imsq[i]; });
    row.mc_moment = mc.mean;
    row.mc_se = mc.se;
    row.im_moment = mi.mean;
    row.im_se = mi.se;
    row.z = mc.se > 0.0 ? std::abs(mc.mean - row.exact_moment) / mc.se : 0.0;
    out.rows.push_back(row);
    if (with_ecf)
      out.ecf.emplace_back(
          n, stattest::ecf_two_sample_compare(emp, ref, dim, probes));
  }
  return out;
}

std::vector<BiasFormRow> bias_form_experiment(
    const ChaosElement& x, const ChaosElement& y,
    const PeriodicScalarTheta& theta, std::span<const std::int64_t> n_list) {
  std::vector<BiasFormRow> out;
  const cplx target = inner(apply_A(x), y);
  for (std::int64_t n : n_list) {
    const ChaosElement rx = apply_Rn(x, theta, n);
    const ChaosElement ry = apply_Rn(y, theta, n);
    const double n2 = static_cast<double>(n) * static_cast<double>(n);
    BiasFormRow row;
    row.n = n;
    row.theoretical = n2 * (inner(rx, y) - inner(x, y));
    row.practical = n2 * (inner(x, ry) - inner(rx, ry));
    row.target = target;
    out.push_back(row);
  }
  return out;
}

}  // namespace crumple::chaos
