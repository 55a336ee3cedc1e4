#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crumple/cli.hpp"

// Exit codes: 0 all criteria PASS, 1 statistical FAIL, 2 malfunction
// (invalid config, I/O failure).
int main(int argc, char** argv) {
  CLI::App app{
      "crumple: Monte Carlo verification of fractional-part limit laws and "
      "crumpling isometries on Wiener space"};

  std::string config_path;
  crumple::cli::ExperimentConfig flags;

  app.add_option("--config", config_path, "flat key=value config file");
  app.add_option("--module", flags.module,
                 "afp | isometry | chaos | euler | all");
  app.add_option("--seed", flags.master_seed, "master seed");
  app.add_option("--samples", flags.samples, "Monte Carlo sample count");
  app.add_option("--grid", flags.grid_steps,
                 "time grid steps (0 = module default)");
  app.add_option("--n", flags.n_list, "crumpling frequency (repeatable)");
  app.add_option("--theta", flags.theta, "cosine | sine | rademacher");
  app.add_option("--map", flags.map, "sign1d | rotation2d");
  app.add_option("--out", flags.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    crumple::cli::ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = crumple::cli::load_config_file(config_path);
    // Flags override config-file keys override defaults.
    if (app.count("--seed")) cfg.master_seed = flags.master_seed;
    if (app.count("--samples")) cfg.samples = flags.samples;
    if (app.count("--grid")) cfg.grid_steps = flags.grid_steps;
    if (app.count("--module")) cfg.module = flags.module;
    if (app.count("--theta")) cfg.theta = flags.theta;
    if (app.count("--map")) cfg.map = flags.map;
    if (app.count("--out")) cfg.out_dir = flags.out_dir;
    if (app.count("--n")) cfg.n_list = flags.n_list;

    const auto report = crumple::cli::run(cfg);
    for (const auto& c : report.criteria)
      std::printf("[%s] %-36s value=%.6g target=%.6g tol=%.6g\n",
                  c.pass ? "PASS" : "FAIL", c.id.c_str(), c.value, c.target,
                  c.tolerance);
    std::printf("overall: %s (%.2fs); tables written to %s\n",
                report.all_pass ? "PASS" : "FAIL",
                report.timings_sec.at("total"), cfg.out_dir.c_str());
    return report.all_pass ? 0 : 1;
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", e.what()}};
    std::cout << err.dump() << "\n";
    return 2;
  }
}
