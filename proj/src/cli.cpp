#include "crumple/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <span>
#include <sstream>

#include <json.hpp>

#include "crumple/afp.hpp"
#include "crumple/chaos.hpp"
#include "crumple/euler.hpp"
#include "crumple/isometry.hpp"
#include "crumple/stattest.hpp"

namespace crumple::cli {

namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_probe(const std::vector<double>& u) {
  std::string s;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i) s += ';';
    s += fmt(u[i]);
  }
  return s;
}

class CsvFile {
 public:
  CsvFile(const std::filesystem::path& path, const std::string& header) {
    out_.open(path);
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << header << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

class Timer {
 public:
  Timer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

struct Context {
  const ExperimentConfig& cfg;
  RunReport& report;
  std::filesystem::path out;
  CsvFile* ks = nullptr;
  CsvFile* ecf = nullptr;

  void criterion(const std::string& id, double value, double target,
                 double tolerance, bool pass) {
    report.criteria.push_back({id, value, target, tolerance, pass});
    report.all_pass = report.all_pass && pass;
  }
  // pass iff |value - target| <= tolerance
  void band(const std::string& id, double value, double target,
            double tolerance) {
    criterion(id, value, target, tolerance,
              std::abs(value - target) <= tolerance);
  }
  // pass iff value > threshold (or < with above=false)
  void threshold(const std::string& id, double value, double thr, bool above) {
    criterion(id, value, thr, 0.0, above ? value > thr : value < thr);
  }

  void ks_row(const std::string& experiment, std::int64_t n,
              const stattest::KsReport& r) {
    ks->row({experiment, std::to_string(n), fmt(r.d_stat), fmt(r.p_value),
             std::to_string(r.sample_size)});
  }
  void ecf_rows(const std::string& experiment, std::int64_t n,
                const stattest::EcfReport& r) {
    for (const auto& row : r.rows) {
      const double se =
          std::sqrt(row.emp_se * row.emp_se + row.ref_se * row.ref_se);
      ecf->row({experiment, std::to_string(n), fmt_probe(row.freq),
                fmt(row.emp.real()), fmt(row.emp.imag()), fmt(row.ref.real()),
                fmt(row.ref.imag()), fmt(se), fmt(row.z)});
    }
  }
};

std::vector<std::int64_t> default_n(const ExperimentConfig& cfg,
                                    std::vector<std::int64_t> fallback) {
  return cfg.n_list.empty() ? std::move(fallback) : cfg.n_list;
}

// ---------------------------------------------------------------------------
// afp driver

void run_afp(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Timer timer;
  const auto n_list = default_n(cfg, {16, 256, 1024});
  const std::int64_t S = cfg.samples;
  const RngStream base{cfg.master_seed, 0};

  auto normal = afp::ScalarDistribution::normal01();
  // Tilt density proportional to 1 + x^2 truncated at |x| <= 5, normalized
  // for a standard normal so E[w] = 1.
  {
    const double q5 = 0.5 * std::erfc(5.0 / std::numbers::sqrt2);
    const double phi5 = std::exp(-12.5) / std::sqrt(2.0 * std::numbers::pi);
    const double trunc_second_moment = 1.0 - 2.0 * (5.0 * phi5 + q5);
    const double norm = 1.0 + trunc_second_moment;
    normal.tilt = [norm](double x) {
      const double x2 = std::min(x * x, 25.0);
      return (1.0 + x2) / norm;
    };
  }

  // Uniformity of {nX} plus the degenerate control without a density.
  auto uni = afp::uniformity_experiment(normal, n_list, S, base.with_index(1000));
  double p_min = 1.0;
  for (const auto& r : uni) {
    ctx.ks_row("afp_uniformity", r.n, r.ks);
    p_min = std::min(p_min, r.ks.p_value);
  }
  ctx.threshold("afp.uniformity_p_min", p_min, 0.01, true);

  auto degenerate = afp::uniformity_experiment(
      afp::ScalarDistribution::degenerate(0.5), std::vector<std::int64_t>{n_list.back()},
      S, base.with_index(1100));
  ctx.ks_row("afp_degenerate_control", degenerate[0].n, degenerate[0].ks);
  ctx.threshold("afp.degenerate_control_rejected", degenerate[0].ks.p_value,
                0.01, false);

  // Joint independence, coupled (Y = X) and independent Y.
  const auto probes = stattest::pair_probe_grid(2);
  afp::JointSampler coupled = [](RandomSource& rs) {
    const double x = rs.normal();
    return std::make_pair(x, x);
  };
  afp::JointSampler independent = [](RandomSource& rs) {
    const double x = rs.normal();
    return std::make_pair(x, rs.normal());
  };
  const std::vector<std::int64_t> top_n{n_list.back()};
  auto joint_eq = afp::joint_independence_experiment(coupled, top_n, S, probes,
                                                     base.with_index(1200));
  auto joint_in = afp::joint_independence_experiment(independent, top_n, S,
                                                     probes, base.with_index(1300));
  ctx.ecf_rows("afp_joint_coupled", joint_eq[0].n, joint_eq[0].ecf);
  ctx.ecf_rows("afp_joint_independent", joint_in[0].n, joint_in[0].ecf);
  ctx.band("afp.joint_coupled_max_z", joint_eq[0].ecf.max_abs_z, 0.0,
           stattest::kMaxZPass);
  ctx.band("afp.joint_independent_max_z", joint_in[0].ecf.max_abs_z, 0.0,
           stattest::kMaxZPass);

  // Second-moment expansion, smooth case and the exact uniform control.
  CsvFile bias(ctx.out / "afp_bias.csv", "n,estimate,stderr,target,z");
  auto rows_sin =
      afp::bias_experiment(afp::SmoothTestFunction::sine(), nullptr, normal,
                           top_n, S, base.with_index(1400));
  double z_sin = 0.0;
  for (const auto& r : rows_sin) {
    bias.row({std::to_string(r.n), fmt(r.estimate), fmt(r.stderr_),
              fmt(r.target), fmt(r.z)});
    z_sin = r.z;
  }
  ctx.band("afp.bias_sin_z", z_sin, 0.0, stattest::kMaxZPass);

  auto rows_uni = afp::bias_experiment(
      afp::SmoothTestFunction::identity(), nullptr,
      afp::ScalarDistribution::uniform01(), n_list, S, base.with_index(1500));
  double z_uni = 0.0;
  for (const auto& r : rows_uni) {
    bias.row({std::to_string(r.n), fmt(r.estimate), fmt(r.stderr_),
              fmt(r.target), fmt(r.z)});
    z_uni = std::max(z_uni, r.z);
  }
  ctx.band("afp.bias_uniform_max_z", z_uni, 0.0, stattest::kMaxZPass);

  // First-order limit, smooth case.
  auto first = afp::first_order_limit_experiment(
      afp::SmoothTestFunction::sine(), independent, n_list.back(), S, probes,
      base.with_index(1600));
  ctx.ecf_rows("afp_first_order", n_list.back(), first);
  ctx.band("afp.first_order_max_z", first.max_abs_z, 0.0, stattest::kMaxZPass);

  // Indicator psi on [-1/2, 0], with and without the tilt.
  auto indicator = [](double v) { return v >= -0.5 && v <= 0.0 ? 1.0 : 0.0; };
  auto psi_plain = afp::psi_experiment(indicator, normal, false, n_list.back(),
                                       S, base.with_index(1700));
  auto psi_tilt = afp::psi_experiment(indicator, normal, true, n_list.back(),
                                      S, base.with_index(1800));
  ctx.ecf_rows("afp_psi", n_list.back(), psi_plain.ecf);
  ctx.ecf_rows("afp_psi_tilted", n_list.back(), psi_tilt.ecf);
  ctx.band("afp.psi_indicator_z", psi_plain.z, 0.0, stattest::kMaxZPass);
  ctx.band("afp.psi_indicator_tilted_z", psi_tilt.z, 0.0, stattest::kMaxZPass);
  ctx.threshold("afp.psi_tilt_ess", psi_tilt.ess, 100.0, true);

  ctx.report.timings_sec["afp"] = timer.seconds();
}

// ---------------------------------------------------------------------------
// isometry driver

void run_isometry(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Timer timer;
  const auto n_list = default_n(cfg, {4, 16, 64});
  const std::int64_t S = cfg.samples;
  const RngStream base{cfg.master_seed, 0};

  const auto map = cfg.map == "rotation2d"
                       ? isometry::PeriodicOrthogonalMap::rotation2d()
                       : isometry::PeriodicOrthogonalMap::sign1d();
  const int d = map.dim();
  isometry::PathFunctional terminal = [d](const BrownianPath& b) {
    std::vector<double> v(static_cast<std::size_t>(d));
    for (int c = 0; c < d; ++c) v[c] = b.value(b.grid().steps, c);
    return v;
  };
  const std::vector<double> probe_times{0.5, 1.0};
  const auto probes = stattest::pair_probe_grid(d + 2 * d);

  auto results = isometry::stable_convergence_experiment(
      terminal, map, n_list, S, cfg.grid_steps, probe_times, probes, nullptr,
      base.with_index(2000));
  double cov_z = 0.0;
  for (const auto& r : results) {
    ctx.ecf_rows("isometry_stable_" + cfg.map, r.n, r.ecf);
    for (std::size_t e = 0; e < r.cov.size(); ++e)
      if (r.cov_se[e] > 0.0)
        cov_z = std::max(cov_z, std::abs(r.cov[e]) / r.cov_se[e]);
  }
  ctx.band("isometry.cov_max_z", cov_z, 0.0, stattest::kMaxZPass);
  ctx.band("isometry.ecf_max_z", results.back().ecf.max_abs_z, 0.0,
           stattest::kMaxZPass);

  // Law preservation of the transformed terminal value.
  const std::int64_t n = n_list.back();
  const std::int64_t N =
      cfg.grid_steps > 0 ? cfg.grid_steps : 16 * n * map.alignment_factor();
  auto tx = isometry::transform_rv(terminal, map, n, TimeGrid(N),
                                   base.with_index(2100), S);
  std::vector<double> pit(static_cast<std::size_t>(S));
  for (std::int64_t i = 0; i < S; ++i) {
    const double u =
        0.5 * std::erfc(-tx.values[i * tx.out_dim] / std::numbers::sqrt2);
    pit[i] = std::min(u, std::nextafter(1.0, 0.0));
  }
  auto law = stattest::ks_uniform(pit);
  ctx.ks_row("isometry_law_" + cfg.map, n, law);
  ctx.threshold("isometry.law_p", law.p_value, 0.01, true);

  ctx.report.timings_sec["isometry"] = timer.seconds();
}

// ---------------------------------------------------------------------------
// chaos driver

chaos::PeriodicScalarTheta theta_from_name(const std::string& name) {
  if (name == "cosine") return chaos::PeriodicScalarTheta::cosine();
  if (name == "sine") return chaos::PeriodicScalarTheta::sine();
  if (name == "rademacher") return chaos::PeriodicScalarTheta::rademacher();
  throw ConfigError("unknown theta variant '" + name + "'");
}

std::vector<chaos::cplx> sqrt3_t(const TimeGrid& grid) {
  std::vector<chaos::cplx> h(static_cast<std::size_t>(grid.steps));
  for (std::int64_t j = 0; j < grid.steps; ++j)
    h[j] = std::sqrt(3.0) * grid.point(j);
  return h;
}

void run_chaos(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Timer timer;
  const auto theta = theta_from_name(cfg.theta);
  const auto n_list = default_n(cfg, {16, 64, 128});
  const std::int64_t align = theta.alignment_factor();
  const std::int64_t max_n = *std::max_element(n_list.begin(), n_list.end());
  const std::int64_t N =
      cfg.grid_steps > 0 ? cfg.grid_steps : 16 * max_n * align;
  const TimeGrid grid(N);
  const std::int64_t S = cfg.samples;
  const RngStream base{cfg.master_seed, 0};

  const auto x1 = chaos::make_order1(grid, sqrt3_t(grid));
  const auto x2 = chaos::make_order2_rank1(
      grid, std::vector<chaos::cplx>(N, std::numbers::sqrt2),
      std::vector<chaos::cplx>(N, 1.0));

  CsvFile moments(ctx.out / "chaos_moments.csv",
                  "n,element,exact,mc,mc_se,target,z,im_moment,im_exact,"
                  "remainder_bound");
  const std::vector<double> probe_times{0.5, 1.0};
  const auto probes = stattest::pair_probe_grid(3);

  double iso_defect = 0.0, energy_defect = 0.0, bound_excess = 0.0;
  double moment_z = 0.0, moment_rel = 0.0, ecf_z = 0.0;
  int element_index = 0;
  for (const auto* xp : {&x1, &x2}) {
    ++element_index;
    const auto& x = *xp;
    const std::string tag = "x" + std::to_string(element_index);
    for (std::int64_t n : n_list) {
      const auto rx = chaos::apply_Rn(x, theta, n);
      iso_defect = std::max(iso_defect, std::abs(rx.norm2() - x.norm2()));
      const double moment = chaos::exact_fluctuation_moment(x, theta, n);
      const int k = x.max_order();
      const double sup2 = theta.sup_norm() * theta.sup_norm();
      bound_excess = std::max(
          bound_excess, moment - k * k * x.norm2() * sup2);
      const double ax_norm = std::sqrt(chaos::apply_A(x).norm2());
      bound_excess =
          std::max(bound_excess, std::sqrt(moment) -
                                     2.0 * ax_norm * theta.sup_norm());
    }
    energy_defect = std::max(
        energy_defect,
        std::abs(chaos::dirichlet_energy(x) +
                 chaos::inner(chaos::apply_A(x), x).real()));

    auto fl = chaos::fluctuation_experiment(
        x, theta, std::vector<std::int64_t>{n_list.back()}, S, probe_times,
        probes, base.with_index(3000 + 100 * element_index));
    for (const auto& r : fl.rows) {
      moments.row({std::to_string(r.n), tag, fmt(r.exact_moment),
                   fmt(r.mc_moment), fmt(r.mc_se), fmt(r.target), fmt(r.z),
                   fmt(r.im_moment), fmt(r.im_exact), fmt(r.remainder_bound)});
      moment_z = std::max(moment_z, r.z);
      moment_rel = std::max(
          moment_rel, std::abs(r.exact_moment - r.target) / r.target);
    }
    for (const auto& [n, report] : fl.ecf) {
      ctx.ecf_rows("chaos_fluctuation_" + tag, n, report);
      ecf_z = std::max(ecf_z, report.max_abs_z);
    }
  }
  ctx.band("chaos.isometry_defect", iso_defect, 0.0, 1e-12);
  ctx.band("chaos.energy_identity_defect", energy_defect, 0.0, 1e-12);
  ctx.criterion("chaos.fluctuation_bounds", bound_excess, 0.0, 1e-12,
                bound_excess <= 1e-12);
  ctx.band("chaos.moment_mc_z", moment_z, 0.0, stattest::kMaxZPass);
  ctx.band("chaos.moment_vs_2E_rel", moment_rel, 0.0, 0.05);
  ctx.band("chaos.ecf_max_z", ecf_z, 0.0, stattest::kMaxZPass);

  // Bias operator forms, exact.
  CsvFile biasf(ctx.out / "chaos_bias.csv",
                "n,pair,theo_re,theo_im,prac_re,prac_im,target_re,target_im");
  auto diag = chaos::bias_form_experiment(x1, x1, theta, n_list);
  double bias_rel = 0.0;
  for (const auto& r : diag) {
    biasf.row({std::to_string(r.n), "x1,x1", fmt(r.theoretical.real()),
               fmt(r.theoretical.imag()), fmt(r.practical.real()),
               fmt(r.practical.imag()), fmt(r.target.real()),
               fmt(r.target.imag())});
  }
  bias_rel = std::max(
      std::abs(diag.back().theoretical.real() - diag.back().target.real()),
      std::abs(diag.back().practical.real() - diag.back().target.real()));
  bias_rel /= std::abs(diag.back().target.real());
  ctx.band("chaos.bias_forms_rel", bias_rel, 0.0, 0.01);

  auto cross = chaos::bias_form_experiment(x1, x2, theta,
                                           std::vector<std::int64_t>{n_list.back()});
  for (const auto& r : cross)
    biasf.row({std::to_string(r.n), "x1,x2", fmt(r.theoretical.real()),
               fmt(r.theoretical.imag()), fmt(r.practical.real()),
               fmt(r.practical.imag()), fmt(r.target.real()),
               fmt(r.target.imag())});
  const double cross_mag =
      std::max(std::abs(cross.back().theoretical), std::abs(cross.back().practical));
  ctx.band("chaos.bias_cross_order_zero", cross_mag, 0.0, 1e-12);

  ctx.report.timings_sec["chaos"] = timer.seconds();
}

// ---------------------------------------------------------------------------
// euler driver

void run_euler(Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Timer timer;
  const auto n_list = default_n(cfg, {16, 32, 64, 128, 256});
  const std::int64_t max_n = *std::max_element(n_list.begin(), n_list.end());
  const std::int64_t n_fine =
      cfg.grid_steps > 0 ? cfg.grid_steps : 64 * max_n;
  const RngStream base{cfg.master_seed, 0};
  auto g = [](std::span<const double> x) { return x[0] * x[0]; };

  CsvFile rates(ctx.out / "euler_rates.csv",
                "system,n,strong_err,stderr,weak_err");
  CsvFile fits(ctx.out / "ratefit.csv", "system,slope,slope_se,r2");

  std::map<std::string, double> slopes;
  int sys_index = 0;
  for (const std::string name : {"special", "generic"}) {
    ++sys_index;
    auto result = euler::rate_experiment(
        euler::make_system(name), n_list, cfg.samples, n_fine, g,
        base.with_index(4000 + 100 * sys_index));
    for (const auto& p : result.points)
      rates.row({name, std::to_string(p.n), fmt(p.strong_err),
                 fmt(p.strong_se), fmt(p.weak_err)});
    if (result.fit) {
      fits.row({name, fmt(result.fit->slope), fmt(result.fit->slope_stderr),
                fmt(result.fit->r_squared)});
      slopes[name] = result.fit->slope;
    } else {
      fits.row({name, "nan", "nan", "nan"});
    }
    const auto& ref_n = result.ecf_n.back();
    for (const auto& row : result.ecf_n) {
      const double se = std::sqrt(row.se * row.se + ref_n.se * ref_n.se);
      ctx.ecf->row({"euler_ecf_n_" + name, std::to_string(row.n), "1",
                    fmt(row.value.real()), fmt(row.value.imag()),
                    fmt(ref_n.value.real()), fmt(ref_n.value.imag()), fmt(se),
                    fmt(se > 0.0 ? std::abs(row.value - ref_n.value) / se
                                 : 0.0)});
    }
    const auto& ref_s = result.ecf_sqrtn.back();
    for (const auto& row : result.ecf_sqrtn) {
      const double se = std::sqrt(row.se * row.se + ref_s.se * ref_s.se);
      ctx.ecf->row({"euler_ecf_sqrtn_" + name, std::to_string(row.n), "1",
                    fmt(row.value.real()), fmt(row.value.imag()),
                    fmt(ref_s.value.real()), fmt(ref_s.value.imag()), fmt(se),
                    fmt(se > 0.0 ? std::abs(row.value - ref_s.value) / se
                                 : 0.0)});
    }
  }
  ctx.band("euler.slope_special", slopes["special"], -1.0, 0.15);
  ctx.band("euler.slope_generic", slopes["generic"], -0.5, 0.10);
  ctx.threshold("euler.slope_separation",
                slopes["special"] - slopes["generic"], -0.3, false);

  ctx.report.timings_sec["euler"] = timer.seconds();
}

}  // namespace

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    const bool known = key == "seed" || key == "samples" || key == "grid" ||
                       key == "module" || key == "theta" || key == "map" ||
                       key == "out" || key == "n";
    if (!known)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unknown key '" + key + "'");
    try {
      if (key == "seed")
        cfg.master_seed = std::stoull(value);
      else if (key == "samples")
        cfg.samples = std::stoll(value);
      else if (key == "grid")
        cfg.grid_steps = std::stoll(value);
      else if (key == "module")
        cfg.module = value;
      else if (key == "theta")
        cfg.theta = value;
      else if (key == "map")
        cfg.map = value;
      else if (key == "out")
        cfg.out_dir = value;
      else {
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
          cfg.n_list.push_back(std::stoll(item));
      }
    } catch (const std::exception&) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": bad value for '" + key + "'");
    }
  }
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const bool known = cfg.module == "afp" || cfg.module == "isometry" ||
                     cfg.module == "chaos" || cfg.module == "euler" ||
                     cfg.module == "all";
  if (!known) throw ConfigError("unknown module '" + cfg.module + "'");
  if (cfg.samples < 1000)
    throw ConfigError("samples must be >= 1000 for statistical runs");
  if (cfg.theta != "cosine" && cfg.theta != "sine" &&
      cfg.theta != "rademacher")
    throw ConfigError("unknown theta variant '" + cfg.theta + "'");
  if (cfg.map != "sign1d" && cfg.map != "rotation2d")
    throw ConfigError("unknown map variant '" + cfg.map + "'");
  for (std::int64_t n : cfg.n_list)
    if (n < 1) throw ConfigError("n values must be positive");

  if (cfg.grid_steps > 0) {
    // Divisibility per module rules; 'all' must satisfy every module in use.
    const std::int64_t theta_align =
        cfg.theta == "rademacher" ? 2 : 1;
    const std::int64_t map_align = cfg.map == "sign1d" ? 2 : 1;
    for (std::int64_t n : cfg.n_list) {
      const auto check = [&](std::int64_t factor, const std::string& who) {
        if (cfg.grid_steps % (n * factor) != 0)
          throw ConfigError(who + ": grid " + std::to_string(cfg.grid_steps) +
                            " is not a multiple of n=" + std::to_string(n) +
                            " times alignment " + std::to_string(factor));
      };
      if (cfg.module == "chaos" || cfg.module == "all")
        check(theta_align, "chaos");
      if (cfg.module == "isometry" || cfg.module == "all")
        check(map_align, "isometry");
      if (cfg.module == "euler" || cfg.module == "all") check(1, "euler");
    }
  }
}

RunReport run(const ExperimentConfig& cfg) {
  validate(cfg);
  RunReport report;
  report.config = cfg;

  std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  CsvFile ks(out / "ks.csv", "experiment,n,D,p_value,samples");
  CsvFile ecf(out / "ecf.csv",
              "experiment,n,probe,emp_re,emp_im,ref_re,ref_im,se,z");

  Context ctx{cfg, report, out, &ks, &ecf};
  const Timer total;
  if (cfg.module == "afp" || cfg.module == "all") run_afp(ctx);
  if (cfg.module == "isometry" || cfg.module == "all") run_isometry(ctx);
  if (cfg.module == "chaos" || cfg.module == "all") run_chaos(ctx);
  if (cfg.module == "euler" || cfg.module == "all") run_euler(ctx);
  report.timings_sec["total"] = total.seconds();

  json summary;
  summary["config"] = {
      {"seed", cfg.master_seed}, {"samples", cfg.samples},
      {"grid", cfg.grid_steps},  {"n", cfg.n_list},
      {"module", cfg.module},    {"theta", cfg.theta},
      {"map", cfg.map},          {"out", cfg.out_dir}};
  summary["criteria"] = json::array();
  for (const auto& c : report.criteria)
    summary["criteria"].push_back({{"id", c.id},
                                   {"value", c.value},
                                   {"target", c.target},
                                   {"tolerance", c.tolerance},
                                   {"status", c.pass ? "PASS" : "FAIL"}});
  summary["status"] = report.all_pass ? "PASS" : "FAIL";
  summary["timings_sec"] = report.timings_sec;
  std::ofstream js(out / "summary.json");
  js << summary.dump(2) << "\n";
  return report;
}

}  // namespace crumple::cli
