#pragma once
// Experiment drivers: configuration, RNG stream bookkeeping, work pool,
// CSV emission. Four pipelines: a ladder study of estimator error decay on
// the exact harmonic chain, a damping sweep reporting the worst-case
// position IAcT, a basis comparison on one long trajectory, and a table of
// closed-form reference values.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "taumax/analytic.hpp"
#include "taumax/iact.hpp"
#include "taumax/maxiact.hpp"
#include "taumax/model.hpp"
#include "taumax/preobs.hpp"
#include "taumax/propagate.hpp"

namespace taumax {

inline constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config

struct ExperimentConfig {
  std::string experiment = "sanity";  // sanity | lema | three-gauss | sweep | basis-compare | analytic
  std::string model = "quadratic";    // quadratic | quartic-wave | gauss3
  double separation = 4.8;
  std::size_t dimension = 1;
  SimParams sim;
  std::string stepper = "baoab";  // baoab | ou
  double omega = 1.0;
  int degree = 2;  // monomial degree for sweep tables
  std::vector<double> gamma_grid;
  std::size_t realizations = 100;
  std::size_t ladder_min_exp = 13, ladder_max_exp = 18;
  double reference_gamma = 1.0;
  std::size_t reference_n = 200000;
  bool half_check = true;  // redo basis comparison on the first half
  std::string out;
  unsigned threads = 1;
  bool full = false;
  bool no_noise = false;
  std::string dump_traj;
  int kmax = 4;  // analytic table: mode range
  std::vector<double> dt_list = {0.5};
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad number for '" + key + "': " + v);
  }
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer for '" + key + "': " + v);
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config: bad flag for '" + key + "': " + v);
}

// Comma-separated values; a token a:s:b expands to the inclusive range.
inline std::vector<double> to_grid(const std::string& key, const std::string& v) {
  std::vector<double> grid;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    const auto c1 = tok.find(':');
    if (c1 == std::string::npos) {
      grid.push_back(to_double(key, tok));
      continue;
    }
    const auto c2 = tok.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ConfigError("config: bad range for '" + key + "': " + tok);
    const double a = to_double(key, tok.substr(0, c1));
    const double s = to_double(key, tok.substr(c1 + 1, c2 - c1 - 1));
    const double b = to_double(key, tok.substr(c2 + 1));
    if (!(s > 0.0)) throw ConfigError("config: range step must be positive in '" + key + "'");
    for (double x = a; x <= b + 0.5 * s; x += s) grid.push_back(x);
  }
  return grid;
}

}  // namespace detail

inline std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline std::map<std::string, std::string> load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Scale presets. Desk-scale runs are roughly a tenth of the reference
// protocol; --full restores the reference sample sizes.
inline ExperimentConfig default_config(const std::string& experiment, bool full = false) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.full = full;
  c.sim.seed = 12345;
  c.sim.burn_in = full ? 50000 : 5000;
  c.reference_n = full ? 2000000 : 200000;

  if (experiment == "sanity") {
    c.model = "quadratic";
    c.stepper = "ou";
    c.sim.gamma = 2.0;
    c.sim.dt = 0.5;
    c.realizations = full ? 1000 : 100;
    c.ladder_min_exp = 13;
    c.ladder_max_exp = full ? 22 : 18;
  } else if (experiment == "lema") {
    c.model = "quartic-wave";
    c.sim.gamma = 1.276;
    c.sim.dt = 0.2;
    c.sim.n_steps = full ? 10000000 : 1000000;
  } else if (experiment == "three-gauss" || experiment == "basis-compare") {
    c.model = "gauss3";
    c.separation = 4.8;
    c.sim.gamma = 0.261;
    c.sim.dt = 0.5;
    c.sim.n_steps = full ? 10000000 : 1000000;
  } else if (experiment == "sweep") {
    c.model = "quartic-wave";
    c.sim.dt = 0.2;
    c.degree = 7;
    c.sim.n_steps = full ? 10000000 : 1000000;
  } else if (experiment == "analytic") {
    c.kmax = 4;
    c.dt_list = {0.1, 0.5};
  } else {
    throw ConfigError("unknown experiment: " + experiment);
  }
  return c;
}

inline void apply_overrides(ExperimentConfig& c, const std::map<std::string, std::string>& kv) {
  using namespace detail;
  for (const auto& [key, v] : kv) {
    if (key == "experiment") {
      // informational only; the driver is chosen by the caller
      if (v != c.experiment)
        throw ConfigError("config: experiment '" + v + "' does not match the invoked driver '" +
                          c.experiment + "'");
    } else if (key == "model") {
      c.model = v;
    } else if (key == "separation") {
      c.separation = to_double(key, v);
    } else if (key == "dimension") {
      c.dimension = to_u64(key, v);
    } else if (key == "gamma") {
      c.sim.gamma = to_double(key, v);
    } else if (key == "beta") {
      c.sim.beta = to_double(key, v);
    } else if (key == "dt") {
      c.sim.dt = to_double(key, v);
    } else if (key == "seed") {
      c.sim.seed = to_u64(key, v);
    } else if (key == "burn_in") {
      c.sim.burn_in = to_u64(key, v);
    } else if (key == "n_steps") {
      c.sim.n_steps = to_u64(key, v);
    } else if (key == "stepper") {
      c.stepper = v;
    } else if (key == "omega") {
      c.omega = to_double(key, v);
    } else if (key == "degree") {
      c.degree = int(to_u64(key, v));
    } else if (key == "gamma_grid") {
      c.gamma_grid = to_grid(key, v);
    } else if (key == "realizations") {
      c.realizations = to_u64(key, v);
    } else if (key == "ladder_min_exp") {
      c.ladder_min_exp = to_u64(key, v);
    } else if (key == "ladder_max_exp") {
      c.ladder_max_exp = to_u64(key, v);
    } else if (key == "reference_gamma") {
      c.reference_gamma = to_double(key, v);
    } else if (key == "reference_n") {
      c.reference_n = to_u64(key, v);
    } else if (key == "half_check") {
      c.half_check = to_bool(key, v);
    } else if (key == "out") {
      c.out = v;
    } else if (key == "threads") {
      c.threads = unsigned(to_u64(key, v));
    } else if (key == "full") {
      c.full = to_bool(key, v);
    } else if (key == "no_noise") {
      c.no_noise = to_bool(key, v);
    } else if (key == "dump_traj") {
      c.dump_traj = v;
    } else if (key == "kmax") {
      c.kmax = int(to_u64(key, v));
    } else if (key == "dt_list") {
      c.dt_list = to_grid(key, v);
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
}

// Fill model-dependent defaults not set explicitly, sort the grid, pick an
// output name.
inline void finalize_config(ExperimentConfig& c,
                            const std::map<std::string, std::string>& explicit_keys = {}) {
  auto given = [&](const char* k) { return explicit_keys.count(k) > 0; };

  if (c.experiment == "sweep" && c.model == "gauss3") {
    if (!given("dt")) c.sim.dt = 0.5;
    if (!given("separation")) c.separation = 4.4;
    if (!given("degree")) c.degree = 2;
    if (!given("n_steps")) c.sim.n_steps = c.full ? 20000000 : 2000000;
  }
  if (c.gamma_grid.empty() && (c.experiment == "sweep" || c.experiment == "analytic")) {
    if (c.experiment == "analytic") {
      for (double g = 0.1; g <= 5.0 + 1e-9; g += 0.1) c.gamma_grid.push_back(g);
    } else if (c.model == "gauss3") {
      for (double g = 0.05; g <= 0.2 + 1e-9; g += 0.01) c.gamma_grid.push_back(g);
      for (double g = 0.3; g <= 2.2 + 1e-9; g += 0.1) c.gamma_grid.push_back(g);
    } else {
      for (double g = 0.2; g <= 5.0 + 1e-9; g += 0.2) c.gamma_grid.push_back(g);
    }
  }
  std::sort(c.gamma_grid.begin(), c.gamma_grid.end());
  c.gamma_grid.erase(std::unique(c.gamma_grid.begin(), c.gamma_grid.end()), c.gamma_grid.end());
  if (c.out.empty()) c.out = c.experiment + ".csv";
}

inline void validate_config(const ExperimentConfig& c) {
  if (c.model != "quadratic" && c.model != "quartic-wave" && c.model != "gauss3")
    throw ConfigError("config: unknown model '" + c.model + "'");
  if (c.stepper != "baoab" && c.stepper != "ou")
    throw ConfigError("config: unknown stepper '" + c.stepper + "'");
  if (c.experiment == "sanity") {
    if (c.realizations < 2)
      throw ConfigError("config: relative error needs at least 2 realizations");
    if (c.ladder_min_exp > c.ladder_max_exp || c.ladder_max_exp > 40)
      throw ConfigError("config: bad ladder exponents");
  }
  if (c.experiment == "sweep" && c.gamma_grid.empty())
    throw ConfigError("config: sweep needs a nonempty gamma_grid");
  if (c.realizations < 1) throw ConfigError("config: realizations must be >= 1");
  if (c.stepper == "ou" && c.model != "quadratic")
    throw ConfigError("config: the exact stepper applies to the quadratic model only");
}

inline PotentialModel config_model(const ExperimentConfig& c) {
  if (c.model == "quartic-wave") return PotentialModel::quartic_wave();
  if (c.model == "gauss3") return PotentialModel::gauss3(c.separation);
  return PotentialModel::quadratic(Matrix::identity(c.dimension));
}

// ---------------------------------------------------------------- workers

// Index-addressed work pool: results are written to caller-owned slots, so
// the outcome is identical for any pool width.
template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& body) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr err;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned width = unsigned(std::min<std::size_t>(threads, n));
  pool.reserve(width);
  for (unsigned t = 0; t < width; ++t) pool.emplace_back(work);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

namespace detail {

// Stream id layout: disjoint ranges keep every simulated chain independent.
inline constexpr std::uint64_t kStreamReference = 0xA11CE;
inline constexpr std::uint64_t kStreamCompare = 1;
inline constexpr std::uint64_t kStreamSweepBase = 100;
inline constexpr std::uint64_t kStreamLadderStride = 1000000;

inline SimulateOptions sim_options(const ExperimentConfig& c, std::uint64_t stream) {
  SimulateOptions opt;
  opt.stepper = (c.stepper == "ou") ? StepperKind::OuExact : StepperKind::Baoab;
  opt.omega = c.omega;
  opt.no_noise = c.no_noise;
  opt.stream = stream;
  return opt;
}

inline BasisSeries select_columns(const BasisSeries& s, const std::vector<std::size_t>& idx) {
  BasisSeries out;
  out.n = s.n;
  out.m = idx.size();
  out.values.resize(out.n * out.m);
  out.means.resize(out.m);
  out.degenerate.resize(out.m);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.means[j] = s.means[idx[j]];
    out.degenerate[j] = s.degenerate[idx[j]];
    for (std::size_t i = 0; i < s.n; ++i) out.values[i * out.m + j] = s.value(i, idx[j]);
  }
  return out;
}

// First n2 rows, recentered on the prefix mean.
inline BasisSeries series_prefix(const BasisSeries& s, std::size_t n2) {
  BasisSeries out;
  out.n = n2;
  out.m = s.m;
  out.values.assign(s.values.begin(), s.values.begin() + std::ptrdiff_t(n2 * s.m));
  out.means = s.means;
  out.degenerate.assign(s.m, false);
  for (std::size_t j = 0; j < s.m; ++j) {
    double mean = 0.0, lo = out.value(0, j), hi = lo;
    for (std::size_t i = 0; i < n2; ++i) mean += out.value(i, j);
    mean /= double(n2);
    for (std::size_t i = 0; i < n2; ++i) {
      double& v = out.values[i * s.m + j];
      v -= mean;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out.means[j] += mean;
    out.degenerate[j] = (hi - lo) <= 1e-12 * std::max(1.0, std::abs(out.means[j]));
  }
  return out;
}

}  // namespace detail

// --------------------------------------------------------------- results

struct SanityRow {
  std::size_t n = 0;
  std::size_t ok = 0;
  std::size_t failed = 0;
  double mean_tau = 0.0;
  double sd_tau = 0.0;
  double delta = 0.0;  // relative error sd/mean
};

struct SanityResult {
  std::vector<SanityRow> rows;
  double slope = 0.0;  // negated log-log regression slope of delta vs n
  double analytic = 0.0;
  double largest_mean = 0.0;  // stats at the largest ladder rung
  double largest_se = 0.0;
};

// Ladder study of the estimator's relative error on the exact harmonic
// chain with the mixed cubic/quadratic observable.
inline SanityResult run_sanity(const ExperimentConfig& cfg) {
  validate_config(cfg);
  SanityResult res;
  res.analytic = tau_of_expansion({0.0, -1.0 / std::sqrt(2.0), 1.0 / std::sqrt(6.0)},
                                  cfg.sim.gamma, cfg.sim.dt);
  const auto model = PotentialModel::quadratic(Matrix::identity(1));
  const double c2 = -1.0 / std::sqrt(2.0), c3 = 1.0 / std::sqrt(6.0);
  const BasisSet basis = BasisSet::build(Hermite1D{3});

  for (std::size_t e = cfg.ladder_min_exp; e <= cfg.ladder_max_exp; ++e) {
    const std::size_t n = std::size_t(1) << e;
    const std::size_t m = cfg.realizations;
    std::vector<double> taus(m, std::numeric_limits<double>::quiet_NaN());
    parallel_for(m, cfg.threads, [&](std::size_t task) {
      SimParams p = cfg.sim;
      p.n_steps = n;
      auto opt = detail::sim_options(
          cfg, (e - cfg.ladder_min_exp + 1) * detail::kStreamLadderStride + task);
      try {
        const Trajectory traj = simulate(model, p, opt);
        const BasisSeries s = evaluate_series(basis, traj);
        std::vector<double> w(s.n);
        for (std::size_t i = 0; i < s.n; ++i) w[i] = c2 * s.value(i, 1) + c3 * s.value(i, 2);
        taus[task] = acor_tau(w).tau;
      } catch (const std::exception&) {
        // leave NaN; counted below
      }
    });
    SanityRow row;
    row.n = n;
    double sum = 0.0;
    for (double t : taus)
      if (std::isfinite(t)) {
        ++row.ok;
        sum += t;
      } else {
        ++row.failed;
      }
    if (row.ok < 2) throw ConfigError("sanity: fewer than 2 successful realizations at n=" +
                                      std::to_string(n));
    row.mean_tau = sum / double(row.ok);
    double ss = 0.0;
    for (double t : taus)
      if (std::isfinite(t)) ss += (t - row.mean_tau) * (t - row.mean_tau);
    row.sd_tau = std::sqrt(ss / double(row.ok - 1));
    row.delta = row.sd_tau / row.mean_tau;
    res.rows.push_back(row);
  }

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double cnt = double(res.rows.size());
  for (const auto& r : res.rows) {
    const double x = std::log(double(r.n)), y = std::log(r.delta);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  res.slope = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
  res.largest_mean = res.rows.back().mean_tau;
  res.largest_se = res.rows.back().sd_tau / std::sqrt(double(res.rows.back().ok));
  return res;
}

struct SweepRow {
  double gamma = 0.0;
  double ratio = 0.0;  // gamma / gamma_star
  double tau = 0.0;
  int reducs = 0;
  std::size_t rank = 0;
  std::string status = "ok";
};

struct SweepResult {
  double gamma_star = 0.0;
  double reference_gamma = 0.0;
  std::size_t reference_n = 0;
  std::vector<SweepRow> rows;
  double minimizer = 0.0;
};

namespace detail {

inline double reference_gamma_star(const ExperimentConfig& cfg, const PotentialModel& model) {
  SimParams p = cfg.sim;
  p.gamma = cfg.reference_gamma;
  p.n_steps = cfg.reference_n;
  const Trajectory traj = simulate(model, p, sim_options(cfg, kStreamReference));
  return gamma_star(traj, Matrix(), p.beta);
}

}  // namespace detail

// Damping sweep of the worst-case position IAcT over position monomials.
inline SweepResult run_gamma_sweep(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto model = config_model(cfg);
  SweepResult res;
  res.reference_gamma = cfg.reference_gamma;
  res.reference_n = cfg.reference_n;
  res.gamma_star = detail::reference_gamma_star(cfg, model);

  const std::size_t dim = model.dimension();
  res.rows.assign(cfg.gamma_grid.size(), SweepRow{});
  parallel_for(cfg.gamma_grid.size(), cfg.threads, [&](std::size_t i) {
    SweepRow& row = res.rows[i];
    row.gamma = cfg.gamma_grid[i];
    row.ratio = row.gamma / res.gamma_star;
    try {
      SimParams p = cfg.sim;
      p.gamma = row.gamma;
      BasisSeries s;
      {
        const Trajectory traj =
            simulate(model, p, detail::sim_options(cfg, detail::kStreamSweepBase + i));
        s = evaluate_series(BasisSet::build(Monomials{dim, cfg.degree, true}), traj);
      }
      const MaxIactResult r = tau_max_algorithm1(s);
      row.tau = r.tau_max;
      row.reducs = r.reducs_used;
      row.rank = r.effective_rank;
      if (r.spectrum_nonpositive) row.status = "nonpositive-spectrum";
    } catch (const std::exception& ex) {
      row.tau = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("failed: ") + ex.what();
    }
  });

  double best = std::numeric_limits<double>::infinity();
  for (const auto& row : res.rows)
    if (row.status == "ok" && row.tau < best) {
      best = row.tau;
      res.minimizer = row.gamma;
    }
  if (!std::isfinite(best)) throw ConfigError("sweep: every grid point failed");
  return res;
}

struct CompareRow {
  std::string basis;
  std::size_t n = 0;
  double tau = 0.0;
  int reducs = 0;
  std::size_t rank = 0;
  std::string status = "ok";
};

struct CompareResult {
  double gamma_star = 0.0;
  double gamma_used = 0.0;
  std::vector<CompareRow> rows;
};

// Worst-case IAcT for a family of bases on one long trajectory, with an
// optional half-sample rerun as a convergence check.
inline CompareResult run_basis_comparison(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto model = config_model(cfg);
  CompareResult res;
  res.gamma_star = detail::reference_gamma_star(cfg, model);
  res.gamma_used = cfg.sim.gamma > 0.0 ? cfg.sim.gamma : res.gamma_star;

  SimParams p = cfg.sim;
  p.gamma = res.gamma_used;
  const Trajectory traj = simulate(model, p, detail::sim_options(cfg, detail::kStreamCompare));
  if (!cfg.dump_traj.empty()) dump_trajectory(traj, cfg.dump_traj);

  const std::size_t dim = model.dimension();
  struct Entry {
    std::string name;
    BasisDescriptor desc;
    int select = -1;  // >= 0: single column of the indicator triple
  };
  std::vector<Entry> entries;
  if (model.kind() == PotentialModel::Kind::QuarticWave) {
    entries.push_back({"cubic", Monomials{dim, 3, true}, -1});
    entries.push_back({"quintic", Monomials{dim, 5, true}, -1});
    entries.push_back({"septic", Monomials{dim, 7, true}, -1});
  } else if (model.kind() == PotentialModel::Kind::Gauss3) {
    entries.push_back({"linear", Monomials{dim, 1, true}, -1});
    entries.push_back({"quadratic", Monomials{dim, 2, true}, -1});
    entries.push_back({"indicators", Indicators{}, -1});
    entries.push_back({"ind_A", Indicators{}, 0});
    entries.push_back({"ind_B", Indicators{}, 1});
    entries.push_back({"ind_C", Indicators{}, 2});
  } else {
    entries.push_back({"linear", Monomials{dim, 1, true}, -1});
    entries.push_back({"quadratic", Monomials{dim, 2, true}, -1});
  }

  auto push = [&](const std::string& name, const BasisSeries& s, std::size_t n) {
    CompareRow row;
    row.basis = name;
    row.n = n;
    try {
      const MaxIactResult r = tau_max_algorithm1(s);
      row.tau = r.tau_max;
      row.reducs = r.reducs_used;
      row.rank = r.effective_rank;
      if (r.spectrum_nonpositive) row.status = "nonpositive-spectrum";
    } catch (const std::exception& ex) {
      row.tau = std::numeric_limits<double>::quiet_NaN();
      row.status = std::string("failed: ") + ex.what();
    }
    res.rows.push_back(row);
  };

  for (const auto& e : entries) {
    BasisSeries s = evaluate_series(BasisSet::build(e.desc), traj);
    if (e.select >= 0) s = detail::select_columns(s, {std::size_t(e.select)});
    push(e.name, s, traj.length);
    if (cfg.half_check && traj.length >= 2) {
      const BasisSeries half = detail::series_prefix(s, traj.length / 2);
      push(e.name + "_half", half, traj.length / 2);
    }
  }
  return res;
}

struct AnalyticRow {
  std::string kind;  // t_leading | tau_exact
  int k = 0;
  double gamma = 0.0;
  double dt = 0.0;
  double value = 0.0;
  std::string status = "ok";
};

struct AnalyticResult {
  std::vector<AnalyticRow> rows;
};

// Closed-form reference table: leading coefficients and exact mode IAcTs.
inline AnalyticResult run_analytic_table(const ExperimentConfig& cfg) {
  if (cfg.kmax < 1) throw ConfigError("config: kmax must be >= 1");
  AnalyticResult res;
  for (int k = 1; k <= cfg.kmax; ++k)
    for (double g : cfg.gamma_grid) {
      AnalyticRow row;
      row.kind = "t_leading";
      row.k = k;
      row.gamma = g;
      try {
        row.value = t_leading(k, g);
      } catch (const std::exception& ex) {
        row.value = std::numeric_limits<double>::quiet_NaN();
        row.status = std::string("failed: ") + ex.what();
      }
      res.rows.push_back(row);
    }
  for (int k = 1; k <= cfg.kmax; ++k)
    for (double g : cfg.gamma_grid)
      for (double dt : cfg.dt_list) {
        AnalyticRow row;
        row.kind = "tau_exact";
        row.k = k;
        row.gamma = g;
        row.dt = dt;
        try {
          row.value = tau_hermite({k, g, dt});
        } catch (const std::exception& ex) {
          row.value = std::numeric_limits<double>::quiet_NaN();
          row.status = std::string("failed: ") + ex.what();
        }
        res.rows.push_back(row);
      }
  return res;
}

// ------------------------------------------------------------------- csv

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
  }
  static std::string num(std::size_t v) { return std::to_string(v); }
  static std::string num(int v) { return std::to_string(v); }

  void metadata(const std::string& key, const std::string& value) {
    os_ << "# " << key << "=" << value << "\n";
  }
  void metadata(const std::string& key, double value) { metadata(key, num(value)); }
  void metadata(const std::string& key, std::size_t value) { metadata(key, num(value)); }

  void header(const std::vector<std::string>& cols) { line(cols); }
  void row(const std::vector<std::string>& fields) { line(fields); }

 private:
  void line(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) os_ << ',';
      os_ << quoted(fields[i]);
    }
    os_ << "\n";
  }
  static std::string quoted(const std::string& f) {
    if (f.find_first_of(",\"\n") == std::string::npos) return f;
    std::string out = "\"";
    for (char ch : f) {
      if (ch == '"') out += '"';
      out += ch;
    }
    out += '"';
    return out;
  }
  std::ostream& os_;
};

inline void write_config_metadata(CsvWriter& w, const ExperimentConfig& c) {
  w.metadata("version", std::string(kVersion));
  w.metadata("experiment", c.experiment);
  w.metadata("model", c.model);
  if (c.model == "gauss3") w.metadata("separation", c.separation);
  w.metadata("dimension", c.dimension);
  w.metadata("gamma", c.sim.gamma);
  w.metadata("beta", c.sim.beta);
  w.metadata("dt", c.sim.dt);
  w.metadata("seed", std::size_t(c.sim.seed));
  w.metadata("burn_in", c.sim.burn_in);
  w.metadata("n_steps", c.sim.n_steps);
  w.metadata("stepper", c.stepper);
  if (c.stepper == "ou") w.metadata("omega", c.omega);
  w.metadata("degree", CsvWriter::num(c.degree));
  if (!c.gamma_grid.empty()) {
    std::string g;
    for (std::size_t i = 0; i < c.gamma_grid.size(); ++i) {
      if (i) g += ",";
      g += CsvWriter::num(c.gamma_grid[i]);
    }
    w.metadata("gamma_grid", g);
  }
  w.metadata("realizations", c.realizations);
  w.metadata("ladder_min_exp", c.ladder_min_exp);
  w.metadata("ladder_max_exp", c.ladder_max_exp);
  w.metadata("reference_gamma", c.reference_gamma);
  w.metadata("reference_n", c.reference_n);
  w.metadata("half_check", std::string(c.half_check ? "1" : "0"));
  w.metadata("threads", std::size_t(c.threads));
  w.metadata("full", std::string(c.full ? "1" : "0"));
  w.metadata("no_noise", std::string(c.no_noise ? "1" : "0"));
}

inline void write_csv(const ExperimentConfig& cfg, const SanityResult& r, std::ostream& os) {
  CsvWriter w(os);
  write_config_metadata(w, cfg);
  w.metadata("analytic_tau", r.analytic);
  w.metadata("slope", r.slope);
  w.metadata("largest_mean_tau", r.largest_mean);
  w.metadata("largest_se_tau", r.largest_se);
  w.header({"n", "ok", "failed", "mean_tau", "sd_tau", "delta"});
  for (const auto& row : r.rows)
    w.row({CsvWriter::num(row.n), CsvWriter::num(row.ok), CsvWriter::num(row.failed),
           CsvWriter::num(row.mean_tau), CsvWriter::num(row.sd_tau), CsvWriter::num(row.delta)});
}

inline void write_csv(const ExperimentConfig& cfg, const SweepResult& r, std::ostream& os) {
  CsvWriter w(os);
  write_config_metadata(w, cfg);
  w.metadata("gamma_star", r.gamma_star);
  w.metadata("minimizer", r.minimizer);
  w.header({"gamma", "gamma_over_gamma_star", "tau_q_max", "reducs", "rank", "status"});
  for (const auto& row : r.rows)
    w.row({CsvWriter::num(row.gamma), CsvWriter::num(row.ratio), CsvWriter::num(row.tau),
           CsvWriter::num(row.reducs), CsvWriter::num(row.rank), row.status});
}

inline void write_csv(const ExperimentConfig& cfg, const CompareResult& r, std::ostream& os) {
  CsvWriter w(os);
  write_config_metadata(w, cfg);
  w.metadata("gamma_star", r.gamma_star);
  w.metadata("gamma_used", r.gamma_used);
  w.header({"basis", "n", "tau_max", "reducs", "rank", "status"});
  for (const auto& row : r.rows)
    w.row({row.basis, CsvWriter::num(row.n), CsvWriter::num(row.tau),
           CsvWriter::num(row.reducs), CsvWriter::num(row.rank), row.status});
}

inline void write_csv(const ExperimentConfig& cfg, const AnalyticResult& r, std::ostream& os) {
  CsvWriter w(os);
  write_config_metadata(w, cfg);
  w.header({"kind", "k", "gamma", "dt", "value", "status"});
  for (const auto& row : r.rows)
    w.row({row.kind, CsvWriter::num(row.k), CsvWriter::num(row.gamma), CsvWriter::num(row.dt),
           CsvWriter::num(row.value), row.status});
}

}  // namespace taumax
