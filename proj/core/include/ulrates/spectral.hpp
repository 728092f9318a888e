#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "ulrates/potentials.hpp"

namespace ulrates {

// Eigenvalues of the (negated) kinetic generator, with the spectral gap:
// the smallest strictly positive real part. truncation is empty for the
// closed-form spectrum and holds the per-variable degree N otherwise.
struct SpectrumResult {
  std::vector<std::complex<double>> eigenvalues;
  double gap = 0.0;
  std::optional<int> truncation;
};

// Truncated matrix of -L for the quadratic potential m/2 x^2 in the
// orthonormal Hermite basis psi_{i,j}(x,v) = H_i(sqrt(m) x) H_j(v) /
// sqrt(i! j!), 0 <= i,j <= order. Column-compressed: at most three entries
// per column (gamma*j on the diagonal plus two ladder couplings).
struct GeneratorMatrix {
  int order = 0;
  double m = 1.0;
  double gamma = 1.0;
  // entry (rows[k], cols[k]) = vals[k]; dimension (order+1)^2, index
  // (i, j) -> i*(order+1)+j.
  std::vector<int> rows, cols;
  std::vector<double> vals;
  int dim() const { return (order + 1) * (order + 1); }
};

struct PoincareEstimate {
  double m_hat = 0.0;     // smallest eigenvalue orthogonal to constants
  double x_min = 0.0;
  double x_max = 0.0;
  int n_points = 0;
  int eigen_iterations = 0;
};

// Closed-form spectrum for the quadratic potential:
//   lambda_{i,j} = gamma/2 (i+j) + sqrt(gamma^2 - 4m)/2 (i-j),
// with the complex square root in the underdamped regime gamma^2 < 4m.
// Enumerates 0 <= i,j <= n_max (one spatial dimension; higher dimensions
// are sums of one-dimensional values and are not enumerated).
SpectrumResult quadratic_spectrum(double m, double gamma, int n_max);

// The spectral gap Re(gamma/2 - sqrt(gamma^2-4m)/2); equals gamma/2 when
// gamma^2 <= 4m, and is evaluated as 2m/(gamma + sqrt(gamma^2-4m))
// otherwise to avoid cancellation for large friction.
double quadratic_gap(double m, double gamma);

// Assemble the Hermite representation of -L for the quadratic potential.
// The matrix elements come from the ladder relations H_k' = k H_{k-1} and
// v H_j = H_{j+1} + j H_{j-1}; they are certified against the closed-form
// spectrum by the tests rather than taken on faith. 4 <= N <= 200.
GeneratorMatrix build_generator_hermite(double m, double gamma, int N);

// Dense eigenvalue extraction (Hessenberg reduction + QR, via LAPACK dgeev)
// of the truncated generator. The matrix is non-normal, so symmetric or
// iterative solvers do not apply. Capped at N <= 60 per variable.
SpectrumResult matrix_gap(const GeneratorMatrix& gen);

// max over total Hermite degree S in {0..S_max} of
//   sqrt(2 m^2 (S^2 - S)) / (1 + m S),
// the quantity whose supremum over all degrees is the operator-norm bound
// sqrt(2). Increasing in S, so the max sits at S = S_max.
double rham_supremum_quadratic(double m, long long S_max);

// Smallest nonzero eigenvalue of the weighted Laplacian -d/dx(e^{-U} d/dx)
// on [x_min, x_max] in L2(e^{-U}), i.e. a numerical spatial Poincare
// constant. Second-order midpoint-weight stencil with reflecting ends;
// the symmetrized tridiagonal form is solved by shifted inverse iteration
// with the constant direction deflated. Requires d = 1 and at least 25
// units of potential growth at both interval ends.
PoincareEstimate poincare_fd(const PotentialSpec& spec, double x_min,
                             double x_max, int n_points);

// Residual of the exact kernel direction of the assembled operator:
// max_i |(B q)_i| with q_i ~ sqrt(e^{-U_i}) normalized. Exposed so tests can
// certify that the discrete operator annihilates (the image of) constants to
// rounding accuracy; grows like eps * ||B|| ~ eps / h^2, so keep n moderate.
double poincare_fd_null_residual(const PotentialSpec& spec, double x_min,
                                 double x_max, int n_points);

}  // namespace ulrates
