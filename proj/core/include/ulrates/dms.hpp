#pragma once

#include <cstdint>

#include "ulrates/errors.hpp"

namespace ulrates {

// Inputs of the DMS (auxiliary-functional) hypocoercive rate. r_ham is an
// operator-norm bound for the Hamiltonian coupling; sqrt(2) is its optimal
// value for potentials with hess U >= -2 Id. epsilon is the mixing weight
// of the auxiliary functional, restricted to (-1, 1).
struct DmsInputs {
  double gamma = 1.0;
  double m = 1.0;
  double r_ham = 1.4142135623730951;  // sqrt(2)
  double epsilon = 0.0;
};

struct DmsOptimum {
  double epsilon_star = 0.0;
  double lambda_star = 0.0;   // sup over epsilon of the DMS rate; >= 0
  bool at_boundary = false;   // maximizer pinned at the search clip +-0.999
  std::int64_t evaluations = 0;
};

enum class CoupledRegime { SmallGamma, LargeGamma };

// r_ham = sqrt(max(K, 2)) for a potential with hess U >= -K Id.
double r_ham_bound(double K);

// The DMS rate at fixed epsilon:
//   (gamma - eps/(1+m)
//      - sqrt(eps^2 (r_ham + gamma/2)^2 + (gamma - (2m+1)/(m+1) eps)^2))
//   / (2 (1 + |eps|)).
// May be negative; epsilon = 0 gives exactly 0.
double dms_rate(const DmsInputs& in);

// Maximize dms_rate over epsilon in (-1, 1), clipped to [-0.999, 0.999]:
// 1001-point coarse grid, then local refinement and golden-section search
// around the best grid point, to absolute tolerance 1e-10 on epsilon.
DmsOptimum dms_optimize(double gamma, double m, double r_ham);

// Leading coefficient of the optimized rate for gamma -> 0 at fixed m:
//   (-(1+m) sqrt(3m^2+4m+1) + 3m^2+3m+1) / (6m^2+8m+3),
// i.e. lambda* ~ coeff * gamma.
double asym_small_gamma_coeff(double m);

// gamma -> infinity at fixed m: lambda* ~ (4m^2/(1+m)^2) / gamma.
double asym_large_gamma_coeff(double m);

// Coupled limit along gamma = b*sqrt(m) (i.e. m = (gamma/b)^2):
// gamma -> 0 gives gamma^5/(2 b^4); gamma -> infinity gives 4/gamma.
double asym_coupled(double b, double gamma, CoupledRegime regime);

// Prefactor sqrt((1+|eps|)/(1-|eps|)) relating the auxiliary functional to
// the plain L2 norm in the decay bound.
double dms_equivalence_prefactor(double epsilon);

}  // namespace ulrates
