#pragma once
// Chain generation: the BAOAB splitting integrator for Langevin dynamics,
// a paired-branch variant that also emits an independent sibling successor
// each step, and the exact propagator of the scalar harmonic Langevin
// equation. Trajectories are stored densely and can be dumped to and
// reloaded from a small binary format.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "taumax/model.hpp"
#include "taumax/numkit.hpp"
#include "taumax/rng.hpp"

namespace taumax {

struct NonFinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CovarianceNotPSD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Trajectory {
  SimParams params;
  std::size_t dim = 0;
  std::size_t length = 0;
  std::vector<double> qdata;  // length * dim, row per recorded state
  std::vector<double> pdata;

  double q(std::size_t n, std::size_t c = 0) const { return qdata[n * dim + c]; }
  double p(std::size_t n, std::size_t c = 0) const { return pdata[n * dim + c]; }

  PhasePoint state(std::size_t n) const {
    PhasePoint z;
    z.q.assign(qdata.begin() + n * dim, qdata.begin() + (n + 1) * dim);
    z.p.assign(pdata.begin() + n * dim, pdata.begin() + (n + 1) * dim);
    return z;
  }
};

// main.state(n) and replica.state(n) are independent successors of
// main.state(n-1); replica states are never advanced further.
struct ReplicaPair {
  Trajectory main;
  Trajectory replica;
};

namespace detail {

inline void check_finite(const PhasePoint& z, const char* who) {
  for (double v : z.q)
    if (!std::isfinite(v)) throw NonFinite(std::string(who) + ": non-finite position, time step too large");
  for (double v : z.p)
    if (!std::isfinite(v)) throw NonFinite(std::string(who) + ": non-finite momentum, time step too large");
}

// One BAOAB step: half kick, half drift, exact momentum mixing with fresh
// noise of covariance (1 - exp(-2 gamma dt)) M / beta, half drift, half kick
// with the force at the updated position. The force at the current position
// is carried between steps so each step costs one force evaluation.
class BaoabKernel {
 public:
  BaoabKernel(const PotentialModel& model, const SimParams& p, bool no_noise)
      : model_(&model),
        dim_(model.dimension()),
        half_dt_(0.5 * p.dt),
        decay_(std::exp(-p.gamma * p.dt)),
        amp_(std::sqrt((1.0 - std::exp(-2.0 * p.gamma * p.dt)) / p.beta)),
        no_noise_(no_noise),
        identity_mass_(p.mass.rows() == 0) {
    if (!identity_mass_) {
      mass_chol_ = cholesky(p.mass);
      mass_inv_ = inverse(p.mass);
      scratch_.resize(dim_);
    }
  }

  void step(PhasePoint& z, std::vector<double>& force_cache, Rng& rng) const {
    half_kick(z.p, force_cache);
    half_drift(z);
    mix(z.p, rng);
    finish(z, force_cache);
  }

  // Two successors sharing the deterministic first half of the step; the
  // momentum mixing draws fresh noise per branch, main branch first.
  void step_replica(PhasePoint& z, std::vector<double>& force_cache, PhasePoint& sibling,
                    std::vector<double>& sibling_force, Rng& rng) const {
    half_kick(z.p, force_cache);
    half_drift(z);
    sibling = z;
    mix(z.p, rng);
    mix(sibling.p, rng);
    finish(z, force_cache);
    finish(sibling, sibling_force);
  }

 private:
  void half_kick(std::vector<double>& p, const std::vector<double>& f) const {
    for (std::size_t i = 0; i < dim_; ++i) p[i] += half_dt_ * f[i];
  }

  void half_drift(PhasePoint& z) const {
    if (identity_mass_) {
      for (std::size_t i = 0; i < dim_; ++i) z.q[i] += half_dt_ * z.p[i];
    } else {
      std::vector<double> v = mass_inv_ * z.p;
      for (std::size_t i = 0; i < dim_; ++i) z.q[i] += half_dt_ * v[i];
    }
  }

  void mix(std::vector<double>& p, Rng& rng) const {
    if (no_noise_) {
      for (std::size_t i = 0; i < dim_; ++i) p[i] *= decay_;
      return;
    }
    if (identity_mass_) {
      for (std::size_t i = 0; i < dim_; ++i) p[i] = decay_ * p[i] + amp_ * rng.normal();
    } else {
      for (std::size_t i = 0; i < dim_; ++i) scratch_[i] = rng.normal();
      std::vector<double> r = mass_chol_ * scratch_;
      for (std::size_t i = 0; i < dim_; ++i) p[i] = decay_ * p[i] + amp_ * r[i];
    }
  }

  void finish(PhasePoint& z, std::vector<double>& force_cache) const {
    half_drift(z);
    force_cache = force(*model_, z.q);
    half_kick(z.p, force_cache);
    check_finite(z, "baoab step");
  }

  const PotentialModel* model_;
  std::size_t dim_;
  double half_dt_;
  double decay_;
  double amp_;
  bool no_noise_;
  bool identity_mass_;
  Matrix mass_chol_;
  Matrix mass_inv_;
  mutable std::vector<double> scratch_;
};

}  // namespace detail

// One-step propagator exp(dt A) of the scalar harmonic Langevin equation
// with unit mass, A = [[0,1],[-omega^2,-gamma]]. Splitting A = -(gamma/2) I + B
// with B^2 = (disc/4) I, disc = gamma^2 - 4 omega^2, gives
//   exp(tA) = e^{-gamma t/2} (cosh(sqrt(disc) t/2) I + t sinhc(sqrt(disc) t/2) B),
// evaluated through cos/sinc when disc < 0 and through the limits
// cosh -> 1, sinhc -> 1 when |disc| < 1e-12.
inline Matrix ou_propagator(double gamma, double omega, double dt) {
  const double disc = gamma * gamma - 4.0 * omega * omega;
  double ch, sl;  // cosh(delta dt/2) and dt*sinhc(delta dt/2), real either way
  if (std::abs(disc) < 1e-12) {
    ch = 1.0;
    sl = dt;
  } else if (disc > 0.0) {
    const double d = std::sqrt(disc);
    ch = std::cosh(0.5 * d * dt);
    sl = (2.0 / d) * std::sinh(0.5 * d * dt);
  } else {
    const double w = std::sqrt(-disc);
    ch = std::cos(0.5 * w * dt);
    sl = (2.0 / w) * std::sin(0.5 * w * dt);
  }
  const double ef = std::exp(-0.5 * gamma * dt);
  Matrix e(2, 2);
  e(0, 0) = ef * (ch + 0.5 * gamma * sl);
  e(0, 1) = ef * sl;
  e(1, 0) = ef * (-omega * omega * sl);
  e(1, 1) = ef * (ch - 0.5 * gamma * sl);
  return e;
}

// One-step noise covariance. The stationary covariance of the equation is
// C = diag(1/(beta omega^2), 1/beta); stationarity under the exact update
// forces Sigma(dt) = C - exp(dt A) C exp(dt A)', which is the closed form.
inline Matrix ou_noise_covariance(double gamma, double omega, double beta, double dt) {
  const Matrix e = ou_propagator(gamma, omega, dt);
  const double cq = 1.0 / (beta * omega * omega);
  const double cp = 1.0 / beta;
  Matrix s(2, 2);
  s(0, 0) = cq - (cq * e(0, 0) * e(0, 0) + cp * e(0, 1) * e(0, 1));
  s(0, 1) = s(1, 0) = -(cq * e(0, 0) * e(1, 0) + cp * e(0, 1) * e(1, 1));
  s(1, 1) = cp - (cq * e(1, 0) * e(1, 0) + cp * e(1, 1) * e(1, 1));
  return s;
}

namespace detail {

class OuKernel {
 public:
  OuKernel(double gamma, double omega, double beta, double dt, bool no_noise)
      : e_(ou_propagator(gamma, omega, dt)), no_noise_(no_noise) {
    const Matrix s = ou_noise_covariance(gamma, omega, beta, dt);
    const double scale = std::max({std::abs(s(0, 0)), std::abs(s(1, 1)), 1e-300});
    const double tol = 1e-10 * scale;
    if (s(0, 0) < -tol) throw CovarianceNotPSD("step covariance has negative leading entry");
    l11_ = std::sqrt(std::max(s(0, 0), 0.0));
    l21_ = l11_ > 0.0 ? s(0, 1) / l11_ : 0.0;
    const double rem = s(1, 1) - l21_ * l21_;
    if (rem < -tol) throw CovarianceNotPSD("step covariance has negative Schur complement");
    l22_ = std::sqrt(std::max(rem, 0.0));
  }

  void step(PhasePoint& z, Rng& rng) const {
    double q = e_(0, 0) * z.q[0] + e_(0, 1) * z.p[0];
    double p = e_(1, 0) * z.q[0] + e_(1, 1) * z.p[0];
    if (!no_noise_) {
      const double x1 = rng.normal();
      const double x2 = rng.normal();
      q += l11_ * x1;
      p += l21_ * x1 + l22_ * x2;
    }
    z.q[0] = q;
    z.p[0] = p;
  }

  void step_replica(PhasePoint& z, PhasePoint& sibling, Rng& rng) const {
    sibling = z;
    step(z, rng);
    step(sibling, rng);
  }

 private:
  Matrix e_;
  double l11_ = 0.0, l21_ = 0.0, l22_ = 0.0;
  bool no_noise_;
};

}  // namespace detail

inline PhasePoint baoab_step(const PotentialModel& model, const SimParams& params,
                             const PhasePoint& z, Rng& rng, bool no_noise = false) {
  detail::BaoabKernel k(model, params, no_noise);
  PhasePoint out = z;
  std::vector<double> f = force(model, out.q);
  k.step(out, f, rng);
  return out;
}

inline std::pair<PhasePoint, PhasePoint> baoab_step_replica(const PotentialModel& model,
                                                            const SimParams& params,
                                                            const PhasePoint& z, Rng& rng,
                                                            bool no_noise = false) {
  detail::BaoabKernel k(model, params, no_noise);
  PhasePoint main = z, sibling;
  std::vector<double> f = force(model, main.q), fs;
  k.step_replica(main, f, sibling, fs, rng);
  return {main, sibling};
}

// Exact one-step update of the scalar harmonic chain (unit mass; any mass
// setting in params is ignored here).
inline PhasePoint ou_exact_step(const SimParams& params, double omega, const PhasePoint& z,
                                Rng& rng, bool no_noise = false) {
  if (z.q.size() != 1 || z.p.size() != 1)
    throw std::invalid_argument("ou_exact_step: state must be scalar");
  if (!(omega > 0.0)) throw std::invalid_argument("ou_exact_step: omega must be positive");
  detail::OuKernel k(params.gamma, omega, params.beta, params.dt, no_noise);
  PhasePoint out = z;
  k.step(out, rng);
  return out;
}

enum class StepperKind { Baoab, OuExact };

struct SimulateOptions {
  StepperKind stepper = StepperKind::Baoab;
  double omega = 1.0;  // frequency for the exact harmonic stepper
  bool no_noise = false;
  std::uint64_t stream = 0;  // rng stream index, one per chain
  std::vector<double> initial_q;  // empty means zeros
  std::vector<double> initial_p;
};

namespace detail {

inline PhasePoint initial_state(std::size_t dim, const SimulateOptions& opt) {
  PhasePoint z;
  z.q = opt.initial_q.empty() ? std::vector<double>(dim, 0.0) : opt.initial_q;
  z.p = opt.initial_p.empty() ? std::vector<double>(dim, 0.0) : opt.initial_p;
  if (z.q.size() != dim || z.p.size() != dim)
    throw std::invalid_argument("simulate: initial state has wrong dimension");
  return z;
}

inline std::size_t sim_dim(const PotentialModel& model, const SimulateOptions& opt) {
  if (opt.stepper == StepperKind::OuExact && model.dimension() != 1)
    throw std::invalid_argument("simulate: exact harmonic stepper needs a one-dimensional model");
  return model.dimension();
}

inline void record(Trajectory& t, std::size_t n, const PhasePoint& z) {
  std::copy(z.q.begin(), z.q.end(), t.qdata.begin() + n * t.dim);
  std::copy(z.p.begin(), z.p.end(), t.pdata.begin() + n * t.dim);
}

inline Trajectory empty_traj(const SimParams& params, std::size_t dim) {
  Trajectory t;
  t.params = params;
  t.dim = dim;
  t.length = params.n_steps;
  t.qdata.resize(t.length * dim);
  t.pdata.resize(t.length * dim);
  return t;
}

}  // namespace detail

inline Trajectory simulate(const PotentialModel& model, const SimParams& params,
                           const SimulateOptions& opt = {}) {
  validate(params);
  const std::size_t dim = detail::sim_dim(model, opt);
  PhasePoint z = detail::initial_state(dim, opt);
  Rng rng(params.seed, opt.stream);
  Trajectory out = detail::empty_traj(params, dim);

  if (opt.stepper == StepperKind::Baoab) {
    detail::BaoabKernel k(model, params, opt.no_noise);
    std::vector<double> f = force(model, z.q);
    for (std::size_t i = 0; i < params.burn_in; ++i) k.step(z, f, rng);
    for (std::size_t n = 0; n < params.n_steps; ++n) {
      k.step(z, f, rng);
      detail::record(out, n, z);
    }
  } else {
    detail::OuKernel k(params.gamma, opt.omega, params.beta, params.dt, opt.no_noise);
    for (std::size_t i = 0; i < params.burn_in; ++i) k.step(z, rng);
    for (std::size_t n = 0; n < params.n_steps; ++n) {
      k.step(z, rng);
      detail::record(out, n, z);
    }
  }
  return out;
}

inline ReplicaPair simulate_replica(const PotentialModel& model, const SimParams& params,
                                    const SimulateOptions& opt = {}) {
  validate(params);
  const std::size_t dim = detail::sim_dim(model, opt);
  PhasePoint z = detail::initial_state(dim, opt);
  Rng rng(params.seed, opt.stream);
  ReplicaPair out;
  out.main = detail::empty_traj(params, dim);
  out.replica = detail::empty_traj(params, dim);

  if (opt.stepper == StepperKind::Baoab) {
    detail::BaoabKernel k(model, params, opt.no_noise);
    PhasePoint sib;
    std::vector<double> f = force(model, z.q), fs;
    for (std::size_t i = 0; i < params.burn_in; ++i) k.step(z, f, rng);
    for (std::size_t n = 0; n < params.n_steps; ++n) {
      k.step_replica(z, f, sib, fs, rng);
      detail::record(out.main, n, z);
      detail::record(out.replica, n, sib);
    }
  } else {
    detail::OuKernel k(params.gamma, opt.omega, params.beta, params.dt, opt.no_noise);
    PhasePoint sib;
    for (std::size_t i = 0; i < params.burn_in; ++i) k.step(z, rng);
    for (std::size_t n = 0; n < params.n_steps; ++n) {
      k.step_replica(z, sib, rng);
      detail::record(out.main, n, z);
      detail::record(out.replica, n, sib);
    }
  }
  return out;
}

// Binary trajectory format, little-endian throughout:
//   bytes 0..7   magic "TAUMTRJ1"
//   u64 dim, u64 length
//   f64 gamma, f64 beta, f64 dt
//   u64 seed, u64 burn_in
//   length records of dim f64 positions followed by dim f64 momenta
// The mass matrix is not serialized; dumps assume identity mass.
inline void dump_trajectory(const Trajectory& t, const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "dump assumes little-endian host");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dump_trajectory: cannot open " + path);
  auto put_u64 = [&os](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_f64 = [&os](double v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  os.write("TAUMTRJ1", 8);
  put_u64(t.dim);
  put_u64(t.length);
  put_f64(t.params.gamma);
  put_f64(t.params.beta);
  put_f64(t.params.dt);
  put_u64(t.params.seed);
  put_u64(t.params.burn_in);
  for (std::size_t n = 0; n < t.length; ++n) {
    os.write(reinterpret_cast<const char*>(t.qdata.data() + n * t.dim),
             static_cast<std::streamsize>(8 * t.dim));
    os.write(reinterpret_cast<const char*>(t.pdata.data() + n * t.dim),
             static_cast<std::streamsize>(8 * t.dim));
  }
  if (!os) throw std::runtime_error("dump_trajectory: write failed for " + path);
}

inline Trajectory load_trajectory(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "load assumes little-endian host");
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_trajectory: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "TAUMTRJ1", 8) != 0)
    throw std::runtime_error("load_trajectory: bad magic in " + path);
  auto get_u64 = [&is]() {
    std::uint64_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_f64 = [&is]() {
    double v = 0;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  Trajectory t;
  t.dim = get_u64();
  t.length = get_u64();
  t.params.gamma = get_f64();
  t.params.beta = get_f64();
  t.params.dt = get_f64();
  t.params.seed = get_u64();
  t.params.burn_in = get_u64();
  t.params.n_steps = t.length;
  if (!is || t.dim == 0 || t.dim > 64)
    throw std::runtime_error("load_trajectory: implausible header in " + path);
  t.qdata.resize(t.length * t.dim);
  t.pdata.resize(t.length * t.dim);
  for (std::size_t n = 0; n < t.length; ++n) {
    is.read(reinterpret_cast<char*>(t.qdata.data() + n * t.dim),
            static_cast<std::streamsize>(8 * t.dim));
    is.read(reinterpret_cast<char*>(t.pdata.data() + n * t.dim),
            static_cast<std::streamsize>(8 * t.dim));
  }
  if (!is) throw std::runtime_error("load_trajectory: truncated data in " + path);
  return t;
}

}  // namespace taumax
