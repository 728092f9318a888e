#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

#include "ulrates/errors.hpp"

namespace ulrates {

// A confining potential U together with the analytic constants the rate
// formulas consume. Constants that are not known analytically are left
// unset; solvers (e.g. the spatial Poincare eigensolver) can fill them in.
//
// Metadata:
//   poincare_m      spatial Poincare constant m of the Gibbs measure e^{-U}
//   hessian_lower_K lower bound constant K with hess U >= -K * Id
//   growth_M        gradient-growth constant M (>= 1)
struct PotentialSpec {
  int dimension = 1;
  std::function<double(const Eigen::VectorXd&)> energy;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::optional<double> poincare_m;
  std::optional<double> hessian_lower_K;
  std::optional<double> growth_M;
  enum class Class { Convex, HessianBoundedBelow, General };
  Class class_tag = Class::General;
  std::string name;
};

// The constant R entering the main rate formula, with the regime that
// produced it: convex potentials take R = 0, a Hessian lower bound -K gives
// R = sqrt(K), and the growth condition gives R = M * sqrt(d).
struct RegimeR {
  enum class Regime { Convex, HessianLB, General };
  double value = 0.0;
  Regime regime = Regime::Convex;
};

// U(x) = m/2 |x|^2. Gradient is exactly m*x; the Poincare constant of the
// Gaussian e^{-U} is m itself.
PotentialSpec make_isotropic_quadratic(double m, int d);

// U(x) = (|x|^2 - 1)^2, the standard double well; hess U >= -4 * Id, so
// K = 4. Its Poincare constant has no closed form and is left unset.
PotentialSpec make_double_well(int d);

// Pick the smallest admissible R for the given potential. Throws
// missing_metadata_error naming the absent field when no regime applies.
RegimeR select_R(const PotentialSpec& spec);

// Construct a potential from a JSON document of the form
//   {"name": ..., "kind": "quadratic"|"double_well"|"custom",
//    "m": ..., "d": ..., "K": ..., "M": ...}
// Unknown keys are rejected. "custom" kinds must have been registered
// beforehand under their name.
PotentialSpec potential_from_json(const std::string& json_text);

// Register a named factory for "custom" JSON potentials (d -> spec).
void register_potential(const std::string& name,
                        std::function<PotentialSpec(int)> factory);

}  // namespace ulrates
