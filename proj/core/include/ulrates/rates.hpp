#pragma once

#include <utility>
#include <vector>

#include "ulrates/potentials.hpp"

namespace ulrates {

// Inputs of the explicit L2 decay-rate formula. c0 is the universal
// normalization constant of the underlying estimate; it is not derivable
// numerically, so it is exposed as a configuration knob (default 1).
struct RateInputs {
  double m = 1.0;
  double gamma = 1.0;
  double R = 0.0;
  double c0 = 1.0;
};

struct RateResult {
  double lambda = 0.0;
  RateInputs inputs;
  RegimeR regime;
  // The decay bound carries an unspecified universal prefactor in front of
  // exp(-lambda t); this flag is a reminder that lambda alone is certified.
  bool has_universal_prefactor = true;
};

// lambda = sqrt(m) * log(1 + gamma*sqrt(m) / (c0 * (sqrt(m)+R+gamma)^2)).
// Evaluated via log1p and factored quotients so that gamma up to 1e12 and
// beyond cannot overflow the intermediate squares.
RateResult main_rate(const RateInputs& in);

// The friction that maximizes the convex-case rate: gamma* = sqrt(m).
double optimal_gamma(double m);

// Rate at the optimal friction, R = 0: sqrt(m) * log(1 + 1/(4 c0)).
RateResult rate_at_optimal_gamma(double m, double c0);

// L2 decay rate of the overdamped dynamics, which is m itself.
double overdamped_rate(double m);

// Pointwise main_rate over a friction grid; preserves grid order.
std::vector<std::pair<double, double>> gamma_sweep(
    double m, double R, double c0, const std::vector<double>& gamma_grid);

// Divergence chain: chi-square controls relative entropy (KL <= chi2) and
// total variation (TV <= sqrt(2 * chi2), and trivially TV <= 2).
std::pair<double, double> divergence_bounds(double chi2);

}  // namespace ulrates
