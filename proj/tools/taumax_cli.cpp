// Command-line front end. Each subcommand resolves its configuration as
// defaults -> config file -> command-line flags, runs the pipeline, writes
// one CSV artifact, and prints a short summary.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "taumax/harness.hpp"

namespace {

struct CliFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool full = false;
  bool no_noise = false;
  std::string dump_traj;
};

void add_common(CLI::App* sub, CliFlags& f) {
  sub->add_option("--config", f.config, "flat key=value configuration file");
  sub->add_option("--out", f.out, "output CSV path");
  sub->add_option("--seed", f.seed, "master RNG seed");
  sub->add_option("--threads", f.threads, "work pool width");
  sub->add_flag("--full", f.full, "full-protocol sample sizes");
  sub->add_flag("--no-noise", f.no_noise, "disable thermal noise (testing)");
}

taumax::ExperimentConfig resolve(const std::string& experiment, const CliFlags& f) {
  std::map<std::string, std::string> kv;
  if (!f.config.empty()) kv = taumax::load_config_file(f.config);
  bool full = f.full;
  if (auto it = kv.find("full"); it != kv.end() && !full)
    full = (it->second == "1" || it->second == "true" || it->second == "yes" ||
            it->second == "on");
  taumax::ExperimentConfig cfg = taumax::default_config(experiment, full);
  taumax::apply_overrides(cfg, kv);
  if (f.seed) cfg.sim.seed = *f.seed;
  if (f.threads) cfg.threads = *f.threads;
  if (!f.out.empty()) cfg.out = f.out;
  if (f.no_noise) cfg.no_noise = true;
  if (!f.dump_traj.empty()) cfg.dump_traj = f.dump_traj;
  taumax::finalize_config(cfg, kv);
  taumax::validate_config(cfg);
  return cfg;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw taumax::ConfigError("cannot open output file: " + path);
  return os;
}

int run_sanity_cmd(const CliFlags& f) {
  const auto cfg = resolve("sanity", f);
  const auto res = taumax::run_sanity(cfg);
  auto os = open_out(cfg.out);
  taumax::write_csv(cfg, res, os);
  std::cout << "sanity: slope " << taumax::CsvWriter::num(res.slope) << ", mean tau "
            << taumax::CsvWriter::num(res.largest_mean) << " +- "
            << taumax::CsvWriter::num(res.largest_se) << " at n="
            << res.rows.back().n << " (analytic "
            << taumax::CsvWriter::num(res.analytic) << ")\n"
            << "wrote " << cfg.out << "\n";
  return 0;
}

int run_compare_cmd(const std::string& experiment, const CliFlags& f) {
  const auto cfg = resolve(experiment, f);
  const auto res = taumax::run_basis_comparison(cfg);
  auto os = open_out(cfg.out);
  taumax::write_csv(cfg, res, os);
  std::cout << experiment << ": gamma_star " << taumax::CsvWriter::num(res.gamma_star)
            << ", run at gamma " << taumax::CsvWriter::num(res.gamma_used) << "\n";
  for (const auto& row : res.rows)
    std::cout << "  " << row.basis << " (n=" << row.n << "): tau_max "
              << taumax::CsvWriter::num(row.tau)
              << (row.status == "ok" ? "" : " [" + row.status + "]") << "\n";
  std::cout << "wrote " << cfg.out << "\n";
  return 0;
}

int run_sweep_cmd(const CliFlags& f) {
  const auto cfg = resolve("sweep", f);
  const auto res = taumax::run_gamma_sweep(cfg);
  auto os = open_out(cfg.out);
  taumax::write_csv(cfg, res, os);
  std::cout << "sweep: gamma_star " << taumax::CsvWriter::num(res.gamma_star)
            << ", minimizer gamma " << taumax::CsvWriter::num(res.minimizer) << " (ratio "
            << taumax::CsvWriter::num(res.minimizer / res.gamma_star) << "), "
            << res.rows.size() << " grid points\n"
            << "wrote " << cfg.out << "\n";
  return 0;
}

int run_analytic_cmd(const CliFlags& f) {
  const auto cfg = resolve("analytic", f);
  const auto res = taumax::run_analytic_table(cfg);
  auto os = open_out(cfg.out);
  taumax::write_csv(cfg, res, os);
  std::cout << "analytic: " << res.rows.size() << " rows\nwrote " << cfg.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"worst-case autocorrelation analysis for Langevin samplers"};
  app.require_subcommand(1);

  CliFlags f_sanity, f_lema, f_gauss, f_sweep, f_compare, f_analytic;

  auto* sanity = app.add_subcommand("sanity", "estimator error decay on the exact harmonic chain");
  add_common(sanity, f_sanity);

  auto* lema = app.add_subcommand("lema", "basis comparison on the quartic-wave potential");
  add_common(lema, f_lema);

  auto* gauss = app.add_subcommand("three-gauss", "basis comparison on the three-Gaussian potential");
  add_common(gauss, f_gauss);

  auto* sweep = app.add_subcommand("sweep", "damping sweep of the worst-case position IAcT");
  add_common(sweep, f_sweep);

  auto* compare = app.add_subcommand("basis-compare", "basis comparison from a config file");
  add_common(compare, f_compare);
  compare->add_option("--dump-traj", f_compare.dump_traj, "write the trajectory to a binary file");

  auto* analytic = app.add_subcommand("analytic", "closed-form reference table");
  add_common(analytic, f_analytic);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sanity->parsed()) return run_sanity_cmd(f_sanity);
    if (lema->parsed()) return run_compare_cmd("lema", f_lema);
    if (gauss->parsed()) return run_compare_cmd("three-gauss", f_gauss);
    if (sweep->parsed()) return run_sweep_cmd(f_sweep);
    if (compare->parsed()) return run_compare_cmd("basis-compare", f_compare);
    if (analytic->parsed()) return run_analytic_cmd(f_analytic);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 2;
}
