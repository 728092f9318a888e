#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "ulrates/potentials.hpp"

namespace ulrates {

// One phase-space point of the second-order dynamics.
struct PhasePoint {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
};

enum class Scheme { EulerMaruyama, Splitting };

struct IntegratorConfig {
  Scheme scheme = Scheme::EulerMaruyama;
  double dt = 1e-3;
  double t_final = 1.0;
  double gamma = 1.0;
  std::uint64_t seed = 0;
};

// Gaussian moments of the phase-space law: mean in R^{2d} ((x, v) blocks)
// and 2d x 2d covariance.
struct MomentState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double time = 0.0;
};

enum class FitMode { TailLinear, Envelope };

struct DecayFit {
  double rate = 0.0;
  double log_intercept = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  double residual_rms = 0.0;
  FitMode mode = FitMode::TailLinear;
};

// Initial law of an ensemble: a point mass or a Gaussian.
struct InitialCondition {
  enum class Kind { PointMass, Gaussian };
  Kind kind = Kind::PointMass;
  Eigen::VectorXd mean;        // (x, v) blocks, length 2d
  Eigen::MatrixXd covariance;  // used by Gaussian only
};

// Scalar observable of a phase point, identified by name for output tables.
struct Observable {
  std::string name;
  double (*eval)(const PhasePoint&);
};

// Built-in observables: "x", "v", "x2", "v2", "xv" (first coordinate).
Observable observable_by_name(const std::string& name);

// Ensemble averages on a uniform time grid: column j of means/stderrs
// belongs to observables[j].
struct EnsembleSeries {
  std::vector<double> times;
  std::vector<std::vector<double>> means;    // [time][observable]
  std::vector<std::vector<double>> stderrs;  // [time][observable]
  std::int64_t n_traj = 0;
};

// Report of the monotonicity check for a scalar Lyapunov-type series.
struct MonotoneReport {
  bool monotone = true;
  std::vector<std::size_t> violations;  // indices i with value[i+1] > value[i] + tol_i
  double max_increase = 0.0;
};

// One step of the second-order dynamics. noise_a / noise_b are independent
// standard Gaussian d-vectors; every step consumes exactly this block so
// that a common stream yields comparable trajectories across schemes (the
// present schemes use noise_a only).
//   EulerMaruyama: x += v dt; v += -grad U(x) dt - gamma v dt
//                  + sqrt(2 gamma dt) xi, all from the pre-step state.
//   Splitting: half kick, full drift, exact Ornstein-Uhlenbeck velocity
//              refresh (variance 1 - e^{-2 gamma dt}), half kick.
PhasePoint step_underdamped(const PhasePoint& state, const PotentialSpec& spec,
                            const IntegratorConfig& cfg,
                            const Eigen::VectorXd& noise_a,
                            const Eigen::VectorXd& noise_b);

// Euler-Maruyama step of the overdamped limit:
// x += -grad U(x) dt + sqrt(2 dt) xi.
Eigen::VectorXd step_overdamped(const Eigen::VectorXd& x,
                                const PotentialSpec& spec, double dt,
                                const Eigen::VectorXd& noise);

// Run n_traj independent trajectories. Each trajectory draws from its own
// substream derived from (cfg.seed, trajectory index), and reduction over
// trajectories happens in fixed chunked index order, so the output table
// is bitwise identical for any worker count. output_every thins the
// recording grid (1 = every step). Throws if more than 1% of trajectories
// diverge.
EnsembleSeries simulate_ensemble(const PotentialSpec& spec,
                                 const IntegratorConfig& cfg,
                                 std::int64_t n_traj,
                                 const InitialCondition& init,
                                 const std::vector<Observable>& observables,
                                 int output_every = 1, int n_workers = 1);

// Exact Gaussian moment propagation for the quadratic potential m/2 |x|^2:
//   mean' = A mean,  cov' = A cov + cov A^T + B,
// A = [[0, I], [-m I, -gamma I]], B = diag(0, 2 gamma I). Classical 4th
// order one-step integration with internal step <= dt_out/16 (further
// capped by the stiffness scale); covariance re-symmetrized every step.
std::vector<MomentState> moment_flow_quadratic(double m, double gamma,
                                               const Eigen::VectorXd& mean0,
                                               const Eigen::MatrixXd& cov0,
                                               double dt_out, double t_final);

// Least-squares exponential-rate extraction from a positive series.
//   TailLinear: slope of log(values) vs time on [t_start, t_end]
//               (needs >= 8 points).
//   Envelope:   fit log of strict local maxima vs their times (needs >= 4
//               maxima); suited to oscillatory decay, where the maxima lie
//               on the true envelope.
DecayFit fit_decay(const std::vector<double>& times,
                   const std::vector<double>& values, FitMode mode,
                   double t_start, double t_end);

// Quadratic chi-square-like proxy of the distance to stationarity for the
// quadratic potential: trace((cov-cov8) cov8^{-1} (cov-cov8)) +
// mean^T cov8^{-1} mean with cov8 = diag(1/m I, I). Zero exactly at
// stationarity.
double chi2_proxy_quadratic(const MomentState& state, double m);

// Check that a scalar series is nonincreasing within a fixed tolerance.
MonotoneReport verify_monotone_l2(const std::vector<double>& values,
                                  double tolerance = 1e-8);

// Ensemble variant: step i may rise by 2 * sqrt(se_i^2 + se_{i+1}^2)
// before it counts as a violation.
MonotoneReport verify_monotone_l2(const std::vector<double>& values,
                                  const std::vector<double>& stderrs);

}  // namespace ulrates
