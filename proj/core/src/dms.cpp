#include "ulrates/dms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ulrates {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kClip = 0.999;  // search domain is [-kClip, kClip]

void validate(double gamma, double m, double r_ham) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw invalid_parameter_error("DMS inputs need gamma > 0");
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("DMS inputs need m > 0");
  if (!(r_ham >= kSqrt2) || !std::isfinite(r_ham))
    throw invalid_parameter_error("DMS inputs need r_ham >= sqrt(2)");
}

}  // namespace

double r_ham_bound(double K) {
  if (!(K >= 0.0) || !std::isfinite(K))
    throw invalid_parameter_error("r_ham_bound needs K >= 0");
  return std::sqrt(std::max(K, 2.0));
}

double dms_rate(const DmsInputs& in) {
  validate(in.gamma, in.m, in.r_ham);
  if (!(std::abs(in.epsilon) < 1.0))
    throw invalid_parameter_error("DMS epsilon must lie in (-1, 1)");
  const double e = in.epsilon;
  const double root = std::hypot(e * (in.r_ham + in.gamma / 2.0),
                                 in.gamma - (2.0 * in.m + 1.0) / (in.m + 1.0) * e);
  return (in.gamma - e / (1.0 + in.m) - root) / (2.0 * (1.0 + std::abs(e)));
}

DmsOptimum dms_optimize(double gamma, double m, double r_ham) {
  validate(gamma, m, r_ham);
  DmsOptimum opt;
  // The reported optimum is the best point ever evaluated, so it can never
  // fall below the coarse-grid maximum whatever the refinement does.
  double best_e = 0.0, best_v = -std::numeric_limits<double>::infinity();
  auto f = [&](double e) {
    ++opt.evaluations;
    const double v = dms_rate({gamma, m, r_ham, e});
    if (v > best_v) {
      best_v = v;
      best_e = e;
    }
    return v;
  };

  // Coarse scan. The objective can have several critical points at small
  // friction (two merge near epsilon ~ gamma), so the refinement below
  // re-scans the bracket instead of trusting unimodality right away.
  const int kCoarse = 1001;
  f(0.0);
  for (int k = 0; k < kCoarse; ++k)
    f(-kClip + 2.0 * kClip * k / (kCoarse - 1));
  const double coarse_best = best_e;
  const double coarse_step = 2.0 * kClip / (kCoarse - 1);
  double lo = std::max(-kClip, coarse_best - coarse_step);
  double hi = std::min(kClip, coarse_best + coarse_step);

  // Subgrid rounds: shrink the bracket until it is safely unimodal.
  for (int round = 0; round < 4 && hi - lo > 1e-8; ++round) {
    const int n = 33;
    int best_k = 0;
    double bv = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      const double e = lo + (hi - lo) * k / (n - 1);
      const double v = f(e);
      if (v > bv) {
        bv = v;
        best_k = k;
      }
    }
    const double step = (hi - lo) / (n - 1);
    const double center = lo + step * best_k;
    lo = std::max(lo, center - step);
    hi = std::min(hi, center + step);
  }

  // Golden-section polish to 1e-10 on epsilon.
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-10) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  f(0.5 * (a + b));
  // Never report worse than the feasible point epsilon = 0 (value 0).
  if (best_v < 0.0) {
    best_e = 0.0;
    best_v = 0.0;
  }
  opt.epsilon_star = best_e;
  opt.lambda_star = best_v;
  opt.at_boundary = std::abs(best_e) >= kClip - 1e-6;
  return opt;
}

double asym_small_gamma_coeff(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("asym_small_gamma_coeff needs m > 0");
  const double s = std::sqrt(3.0 * m * m + 4.0 * m + 1.0);
  return (-(1.0 + m) * s + 3.0 * m * m + 3.0 * m + 1.0) /
         (6.0 * m * m + 8.0 * m + 3.0);
}

double asym_large_gamma_coeff(double m) {
  if (!(m > 0.0) || !std::isfinite(m))
    throw invalid_parameter_error("asym_large_gamma_coeff needs m > 0");
  return 4.0 * m * m / ((1.0 + m) * (1.0 + m));
}

double asym_coupled(double b, double gamma, CoupledRegime regime) {
  if (!(b > 0.0) || !std::isfinite(b))
    throw invalid_parameter_error("asym_coupled needs b > 0");
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw invalid_parameter_error("asym_coupled needs gamma > 0");
  if (regime == CoupledRegime::SmallGamma) {
    const double q = (gamma / b) * (gamma / b);
    return 0.5 * q * q * gamma;  // gamma^5 / (2 b^4)
  }
  return 4.0 / gamma;
}

double dms_equivalence_prefactor(double epsilon) {
  if (!(std::abs(epsilon) < 1.0))
    throw invalid_parameter_error("equivalence prefactor needs |epsilon| < 1");
  const double a = std::abs(epsilon);
  return std::sqrt((1.0 + a) / (1.0 - a));
}

}  // namespace ulrates
