#include "ulrates/rates.hpp"

#include <cmath>

namespace ulrates {

namespace {

void validate(const RateInputs& in) {
  if (!(in.m > 0.0) || !std::isfinite(in.m))
    throw invalid_parameter_error("rate inputs need m > 0");
  if (!(in.gamma > 0.0) || !std::isfinite(in.gamma))
    throw invalid_parameter_error("rate inputs need gamma > 0");
  if (!(in.R >= 0.0) || !std::isfinite(in.R))
    throw invalid_parameter_error("rate inputs need R >= 0");
  if (!(in.c0 > 0.0) || !std::isfinite(in.c0))
    throw invalid_parameter_error("rate inputs need c0 > 0");
}

}  // namespace

RateResult main_rate(const RateInputs& in) {
  validate(in);
  const double sm = std::sqrt(in.m);
  const double denom = sm + in.R + in.gamma;
  // gamma*sqrt(m)/(c0*denom^2), factored so that denom^2 is never formed:
  // both quotients stay bounded for gamma up to the largest finite double.
  const double ratio = (in.gamma / denom) * (sm / denom) / in.c0;
  RateResult out;
  out.lambda = sm * std::log1p(ratio);
  out.inputs = in;
  out.regime.value = in.R;
  out.regime.regime =
      in.R == 0.0 ? RegimeR::Regime::Convex : RegimeR::Regime::HessianLB;
  return out;
}

double optimal_gamma(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("optimal_gamma needs m > 0");
  return std::sqrt(m);
}

RateResult rate_at_optimal_gamma(double m, double c0) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("rate_at_optimal_gamma needs m > 0");
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw invalid_parameter_error("rate_at_optimal_gamma needs c0 > 0");
  RateResult out;
  out.lambda = std::sqrt(m) * std::log1p(1.0 / (4.0 * c0));
  out.inputs = {m, std::sqrt(m), 0.0, c0};
  out.regime = {0.0, RegimeR::Regime::Convex};
  return out;
}

double overdamped_rate(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("overdamped_rate needs m > 0");
  return m;
}

std::vector<std::pair<double, double>> gamma_sweep(
    double m, double R, double c0, const std::vector<double>& gamma_grid) {
  if (gamma_grid.empty())
    throw invalid_parameter_error("gamma_sweep needs a nonempty grid");
  std::vector<std::pair<double, double>> out;
  out.reserve(gamma_grid.size());
  for (double g : gamma_grid)
    out.emplace_back(g, main_rate({m, g, R, c0}).lambda);
  return out;
}

std::pair<double, double> divergence_bounds(double chi2) {
  if (!(chi2 >= 0.0) || !std::isfinite(chi2))
    throw invalid_parameter_error("divergence_bounds needs chi2 >= 0");
  const double kl_upper = chi2;
  const double tv_upper = std::min(2.0, std::sqrt(2.0 * chi2));
  return {kl_upper, tv_upper};
}

}  // namespace ulrates
