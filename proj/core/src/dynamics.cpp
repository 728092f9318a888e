#include "ulrates/dynamics.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace ulrates {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_parameter_error(msg);
}

void validate_config(const IntegratorConfig& cfg) {
  require(cfg.dt > 0.0 && std::isfinite(cfg.dt), "integrator needs dt > 0");
  require(cfg.t_final >= cfg.dt, "integrator needs dt <= t_final");
  // gamma = 0 is the deterministic Hamiltonian limit (no noise, no drag);
  // it is allowed so that limit can be exercised directly.
  require(cfg.gamma >= 0.0 && std::isfinite(cfg.gamma),
          "integrator needs gamma >= 0");
  // Stability region of the explicit fluctuation substep.
  require(cfg.dt * cfg.gamma < 2.0, "integrator needs dt * gamma < 2");
}

// SplitMix64: the standard 64-bit finalizer, used to spread (seed, index)
// pairs into independent substream seeds.
std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::int64_t traj) {
  return splitmix64(seed ^ (0x9E3779B97F4A7C15ULL * std::uint64_t(traj + 1)));
}

bool sane(const Eigen::VectorXd& v) {
  for (int i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]) || std::abs(v[i]) > 1e8) return false;
  return true;
}

double obs_x(const PhasePoint& s) { return s.x[0]; }
double obs_v(const PhasePoint& s) { return s.v[0]; }
double obs_x2(const PhasePoint& s) { return s.x[0] * s.x[0]; }
double obs_v2(const PhasePoint& s) { return s.v[0] * s.v[0]; }
double obs_xv(const PhasePoint& s) { return s.x[0] * s.v[0]; }

}  // namespace

Observable observable_by_name(const std::string& name) {
  if (name == "x") return {"x", obs_x};
  if (name == "v") return {"v", obs_v};
  if (name == "x2") return {"x2", obs_x2};
  if (name == "v2") return {"v2", obs_v2};
  if (name == "xv") return {"xv", obs_xv};
  throw invalid_parameter_error("unknown observable '" + name + "'");
}

PhasePoint step_underdamped(const PhasePoint& state, const PotentialSpec& spec,
                            const IntegratorConfig& cfg,
                            const Eigen::VectorXd& noise_a,
                            const Eigen::VectorXd& /*noise_b*/) {
  validate_config(cfg);
  if (!sane(state.x) || !sane(state.v)) throw divergence_error(-1, -1);
  const double dt = cfg.dt, g = cfg.gamma;
  PhasePoint next;
  if (cfg.scheme == Scheme::EulerMaruyama) {
    const Eigen::VectorXd grad = spec.gradient(state.x);
    if (!sane(grad)) throw divergence_error(-1, -1);
    next.x = state.x + dt * state.v;
    next.v = state.v - dt * grad - dt * g * state.v +
             std::sqrt(2.0 * g * dt) * noise_a;
  } else {
    // Half kick, full drift, exact velocity refresh, half kick.
    Eigen::VectorXd grad = spec.gradient(state.x);
    if (!sane(grad)) throw divergence_error(-1, -1);
    Eigen::VectorXd v = state.v - 0.5 * dt * grad;
    const Eigen::VectorXd x = state.x + dt * v;
    const double decay = std::exp(-g * dt);
    v = decay * v + std::sqrt(1.0 - decay * decay) * noise_a;
    grad = spec.gradient(x);
    if (!sane(grad)) throw divergence_error(-1, -1);
    next.x = x;
    next.v = v - 0.5 * dt * grad;
  }
  return next;
}

Eigen::VectorXd step_overdamped(const Eigen::VectorXd& x,
                                const PotentialSpec& spec, double dt,
                                const Eigen::VectorXd& noise) {
  require(dt > 0.0 && std::isfinite(dt), "step_overdamped needs dt > 0");
  if (!sane(x)) throw divergence_error(-1, -1);
  const Eigen::VectorXd grad = spec.gradient(x);
  if (!sane(grad)) throw divergence_error(-1, -1);
  return x - dt * grad + std::sqrt(2.0 * dt) * noise;
}

EnsembleSeries simulate_ensemble(const PotentialSpec& spec,
                                 const IntegratorConfig& cfg,
                                 std::int64_t n_traj,
                                 const InitialCondition& init,
                                 const std::vector<Observable>& observables,
                                 int output_every, int n_workers) {
  validate_config(cfg);
  require(n_traj >= 1, "simulate_ensemble needs n_traj >= 1");
  require(!observables.empty(), "simulate_ensemble needs observables");
  require(output_every >= 1, "simulate_ensemble needs output_every >= 1");
  require(n_workers >= 1, "simulate_ensemble needs n_workers >= 1");
  const int d = spec.dimension;
  require(init.mean.size() == 2 * d,
          "initial condition dimension does not match the potential");
  if (init.kind == InitialCondition::Kind::Gaussian)
    require(init.covariance.rows() == 2 * d && init.covariance.cols() == 2 * d,
            "initial covariance must be 2d x 2d");

  const std::int64_t n_steps = std::llround(cfg.t_final / cfg.dt);
  const std::int64_t n_out = n_steps / output_every + 1;
  const std::size_t n_obs = observables.size();

  // Cholesky factor for Gaussian starts (computed once, shared read-only).
  Eigen::MatrixXd chol;
  if (init.kind == InitialCondition::Kind::Gaussian) {
    Eigen::LLT<Eigen::MatrixXd> llt(
        init.covariance +
        1e-14 * Eigen::MatrixXd::Identity(2 * d, 2 * d));
    require(llt.info() == Eigen::Success,
            "initial covariance is not positive semidefinite");
    chol = llt.matrixL();
  }

  // Trajectories are processed in fixed chunks; each chunk owns its
  // accumulators and chunks are reduced in index order afterwards, so the
  // result does not depend on which worker ran which chunk.
  const std::int64_t kChunk = 256;
  const std::int64_t n_chunks = (n_traj + kChunk - 1) / kChunk;
  struct ChunkAcc {
    std::vector<double> sum, sumsq;       // [time * n_obs + obs]
    std::vector<std::int64_t> n_valid;    // [time]
    std::vector<std::pair<std::int64_t, std::int64_t>> diverged;  // (traj, step)
  };
  std::vector<ChunkAcc> acc;
  acc.resize(std::size_t(n_chunks));

  auto run_chunk = [&](std::int64_t chunk) {
    ChunkAcc& a = acc[std::size_t(chunk)];
    a.sum.assign(std::size_t(n_out) * n_obs, 0.0);
    a.sumsq.assign(std::size_t(n_out) * n_obs, 0.0);
    a.n_valid.assign(std::size_t(n_out), 0);
    const std::int64_t t0 = chunk * kChunk;
    const std::int64_t t1 = std::min(n_traj, t0 + kChunk);
    for (std::int64_t traj = t0; traj < t1; ++traj) {
      std::mt19937_64 rng(substream_seed(cfg.seed, traj));
      std::normal_distribution<double> normal(0.0, 1.0);
      PhasePoint s;
      s.x = init.mean.head(d);
      s.v = init.mean.tail(d);
      if (init.kind == InitialCondition::Kind::Gaussian) {
        Eigen::VectorXd z(2 * d);
        for (int i = 0; i < 2 * d; ++i) z[i] = normal(rng);
        const Eigen::VectorXd shifted = init.mean + chol * z;
        s.x = shifted.head(d);
        s.v = shifted.tail(d);
      }
      Eigen::VectorXd na(d), nb(d);
      bool alive = true;
      std::int64_t out_slot = 0;
      auto record = [&](std::int64_t slot) {
        for (std::size_t o = 0; o < n_obs; ++o) {
          const double val = observables[o].eval(s);
          a.sum[std::size_t(slot) * n_obs + o] += val;
          a.sumsq[std::size_t(slot) * n_obs + o] += val * val;
        }
        ++a.n_valid[std::size_t(slot)];
      };
      record(out_slot++);
      for (std::int64_t step = 1; step <= n_steps && alive; ++step) {
        for (int i = 0; i < d; ++i) na[i] = normal(rng);
        for (int i = 0; i < d; ++i) nb[i] = normal(rng);
        try {
          s = step_underdamped(s, spec, cfg, na, nb);
        } catch (const divergence_error&) {
          a.diverged.emplace_back(traj, step);
          alive = false;
          break;
        }
        if (!sane(s.x) || !sane(s.v)) {
          a.diverged.emplace_back(traj, step);
          alive = false;
          break;
        }
        if (step % output_every == 0) record(out_slot++);
      }
    }
  };

  if (n_workers == 1) {
    for (std::int64_t c = 0; c < n_chunks; ++c) run_chunk(c);
  } else {
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    const int nw = int(std::min<std::int64_t>(n_workers, n_chunks));
    pool.reserve(std::size_t(nw));
    for (int w = 0; w < nw; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::int64_t c = next.fetch_add(1);
          if (c >= n_chunks) return;
          run_chunk(c);
        }
      });
    for (auto& th : pool) th.join();
  }

  // Deterministic reduction in chunk order.
  std::vector<double> sum(std::size_t(n_out) * n_obs, 0.0);
  std::vector<double> sumsq(std::size_t(n_out) * n_obs, 0.0);
  std::vector<std::int64_t> n_valid(std::size_t(n_out), 0);
  std::vector<std::pair<std::int64_t, std::int64_t>> diverged;
  for (const ChunkAcc& a : acc) {
    for (std::size_t k = 0; k < sum.size(); ++k) {
      sum[k] += a.sum[k];
      sumsq[k] += a.sumsq[k];
    }
    for (std::size_t t = 0; t < n_valid.size(); ++t) n_valid[t] += a.n_valid[t];
    diverged.insert(diverged.end(), a.diverged.begin(), a.diverged.end());
  }
  if (100 * std::int64_t(diverged.size()) > n_traj)
    throw divergence_error(diverged.front().second, diverged.front().first);

  EnsembleSeries out;
  out.n_traj = n_traj;
  out.times.resize(std::size_t(n_out));
  out.means.assign(std::size_t(n_out), std::vector<double>(n_obs, 0.0));
  out.stderrs.assign(std::size_t(n_out), std::vector<double>(n_obs, 0.0));
  for (std::int64_t t = 0; t < n_out; ++t) {
    out.times[std::size_t(t)] = double(t) * output_every * cfg.dt;
    const double n = double(n_valid[std::size_t(t)]);
    for (std::size_t o = 0; o < n_obs; ++o) {
      const double s1 = sum[std::size_t(t) * n_obs + o];
      const double s2 = sumsq[std::size_t(t) * n_obs + o];
      const double mean = n > 0 ? s1 / n : 0.0;
      out.means[std::size_t(t)][o] = mean;
      if (n > 1.5) {
        const double var = std::max(0.0, (s2 - n * mean * mean) / (n - 1.0));
        out.stderrs[std::size_t(t)][o] = std::sqrt(var / n);
      }
    }
  }
  return out;
}

std::vector<MomentState> moment_flow_quadratic(double m, double gamma,
                                               const Eigen::VectorXd& mean0,
                                               const Eigen::MatrixXd& cov0,
                                               double dt_out, double t_final) {
  require(m > 0.0 && std::isfinite(m), "moment flow needs m > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "moment flow needs gamma > 0");
  require(dt_out > 0.0 && t_final >= dt_out,
          "moment flow needs 0 < dt_out <= t_final");
  require(mean0.size() >= 2 && mean0.size() % 2 == 0,
          "moment flow mean must have even length 2d");
  const int two_d = int(mean0.size());
  const int d = two_d / 2;
  require(cov0.rows() == two_d && cov0.cols() == two_d,
          "moment flow covariance must be 2d x 2d");
  require((cov0 - cov0.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
          "moment flow covariance must be symmetric");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov0);
    require(es.eigenvalues().minCoeff() >= -1e-10,
            "moment flow covariance must be positive semidefinite");
  }

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(two_d, two_d);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(two_d, two_d);
  A.topRightCorner(d, d).setIdentity();
  A.bottomLeftCorner(d, d) = -m * Eigen::MatrixXd::Identity(d, d);
  A.bottomRightCorner(d, d) = -gamma * Eigen::MatrixXd::Identity(d, d);
  B.bottomRightCorner(d, d) = 2.0 * gamma * Eigen::MatrixXd::Identity(d, d);

  // Internal step: at most dt_out/16, further capped by the stiffness
  // scale so the classical one-step error stays far below fit tolerances.
  const double stiff = gamma + 2.0 * std::sqrt(m) + 1.0;
  const std::int64_t n_out = std::llround(t_final / dt_out);
  const std::int64_t n_sub = std::max<std::int64_t>(
      16, std::int64_t(std::ceil(dt_out * stiff / 0.02)));
  const double dt = dt_out / double(n_sub);

  Eigen::VectorXd mean = mean0;
  Eigen::MatrixXd cov = cov0;
  std::vector<MomentState> out;
  out.reserve(std::size_t(n_out) + 1);
  out.push_back({mean, cov, 0.0});

  auto deriv = [&](const Eigen::VectorXd& mn, const Eigen::MatrixXd& cv,
                   Eigen::VectorXd& dmn, Eigen::MatrixXd& dcv) {
    dmn = A * mn;
    dcv = A * cv + cv * A.transpose() + B;
  };

  Eigen::VectorXd k1m, k2m, k3m, k4m;
  Eigen::MatrixXd k1c, k2c, k3c, k4c;
  for (std::int64_t k = 0; k < n_out; ++k) {
    for (std::int64_t s = 0; s < n_sub; ++s) {
      deriv(mean, cov, k1m, k1c);
      deriv(mean + 0.5 * dt * k1m, cov + 0.5 * dt * k1c, k2m, k2c);
      deriv(mean + 0.5 * dt * k2m, cov + 0.5 * dt * k2c, k3m, k3c);
      deriv(mean + dt * k3m, cov + dt * k3c, k4m, k4c);
      mean += dt / 6.0 * (k1m + 2.0 * k2m + 2.0 * k3m + k4m);
      cov += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
      cov = 0.5 * (cov + cov.transpose()).eval();  // keep exactly symmetric
    }
    out.push_back({mean, cov, double(k + 1) * dt_out});
  }
  return out;
}

DecayFit fit_decay(const std::vector<double>& times,
                   const std::vector<double>& values, FitMode mode,
                   double t_start, double t_end) {
  if (times.size() != values.size())
    throw fit_failure_error("times and values must have equal length");
  if (!(t_start < t_end))
    throw fit_failure_error("fit window needs t_start < t_end");

  // Gather (t, log v) pairs for the regression.
  std::vector<double> ts, ls;
  if (mode == FitMode::TailLinear) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      if (times[i] < t_start || times[i] > t_end) continue;
      if (!(values[i] > 0.0))
        throw fit_failure_error(
            "TailLinear needs strictly positive values on the window");
      ts.push_back(times[i]);
      ls.push_back(std::log(values[i]));
    }
    if (ts.size() < 8)
      throw fit_failure_error(
          "TailLinear needs at least 8 points in the window");
  } else {
    for (std::size_t i = 1; i + 1 < times.size(); ++i) {
      if (times[i] < t_start || times[i] > t_end) continue;
      if (values[i - 1] < values[i] && values[i] > values[i + 1]) {
        if (!(values[i] > 0.0))
          throw fit_failure_error(
              "Envelope needs strictly positive local maxima");
        ts.push_back(times[i]);
        ls.push_back(std::log(values[i]));
      }
    }
    if (ts.size() < 4)
      throw fit_failure_error(
          "Envelope needs at least 4 strict local maxima in the window");
  }

  // Least squares for log v = intercept + slope * t.
  const double n = double(ts.size());
  double st = 0.0, sl = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sl += ls[i];
  }
  const double tbar = st / n, lbar = sl / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxx += (ts[i] - tbar) * (ts[i] - tbar);
    sxy += (ts[i] - tbar) * (ls[i] - lbar);
  }
  if (!(sxx > 0.0))
    throw fit_failure_error("fit window has no spread in time");
  const double slope = sxy / sxx;
  const double intercept = lbar - slope * tbar;
  double rss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ls[i] - (intercept + slope * ts[i]);
    rss += r * r;
  }

  DecayFit fit;
  fit.rate = -slope;
  fit.log_intercept = intercept;
  fit.t_start = t_start;
  fit.t_end = t_end;
  fit.residual_rms = std::sqrt(rss / n);
  fit.mode = mode;
  return fit;
}

double chi2_proxy_quadratic(const MomentState& state, double m) {
  require(m > 0.0 && std::isfinite(m), "chi2 proxy needs m > 0");
  const int two_d = int(state.mean.size());
  require(two_d >= 2 && two_d % 2 == 0 && state.covariance.rows() == two_d,
          "chi2 proxy needs consistent 2d moments");
  const int d = two_d / 2;
  Eigen::VectorXd inv_diag(two_d);
  for (int i = 0; i < d; ++i) inv_diag[i] = m;        // (1/m)^{-1}
  for (int i = d; i < two_d; ++i) inv_diag[i] = 1.0;  // 1^{-1}
  Eigen::MatrixXd E = state.covariance;
  for (int i = 0; i < d; ++i) E(i, i) -= 1.0 / m;
  for (int i = d; i < two_d; ++i) E(i, i) -= 1.0;
  const Eigen::MatrixXd P = inv_diag.asDiagonal();
  return (E * P * E).trace() + state.mean.dot(P * state.mean);
}

MonotoneReport verify_monotone_l2(const std::vector<double>& values,
                                  double tolerance) {
  MonotoneReport rep;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double rise = values[i + 1] - values[i];
    if (rise > tolerance) {
      rep.monotone = false;
      rep.violations.push_back(i);
      rep.max_increase = std::max(rep.max_increase, rise);
    }
  }
  return rep;
}

MonotoneReport verify_monotone_l2(const std::vector<double>& values,
                                  const std::vector<double>& stderrs) {
  if (values.size() != stderrs.size())
    throw invalid_parameter_error(
        "monotone check needs one standard error per value");
  MonotoneReport rep;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    const double tol =
        2.0 * std::sqrt(stderrs[i] * stderrs[i] +
                        stderrs[i + 1] * stderrs[i + 1]);
    const double rise = values[i + 1] - values[i];
    if (rise > tol) {
      rep.monotone = false;
      rep.violations.push_back(i);
      rep.max_increase = std::max(rep.max_increase, rise);
    }
  }
  return rep;
}

}  // namespace ulrates
