#include "ulrates/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

extern "C" {
// LAPACK: eigenvalues of a general real matrix (Hessenberg reduction + QR).
void dgeev_(const char* jobvl, const char* jobvr, const int* n, double* a,
            const int* lda, double* wr, double* wi, double* vl,
            const int* ldvl, double* vr, const int* ldvr, double* work,
            const int* lwork, int* info);
}

namespace ulrates {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw invalid_parameter_error(msg);
}

// Smallest strictly positive real part; real parts below the tolerance
// count as the kernel (the constant function).
double extract_gap(const std::vector<std::complex<double>>& eigenvalues) {
  double gap = std::numeric_limits<double>::infinity();
  for (const auto& ev : eigenvalues)
    if (ev.real() > 1e-9) gap = std::min(gap, ev.real());
  return gap;
}

}  // namespace

SpectrumResult quadratic_spectrum(double m, double gamma, int n_max) {
  require(m > 0.0 && std::isfinite(m), "quadratic_spectrum needs m > 0");
  require(gamma > 0.0 && std::isfinite(gamma),
          "quadratic_spectrum needs gamma > 0");
  require(n_max >= 1, "quadratic_spectrum needs n_max >= 1");

  const double disc = gamma * gamma - 4.0 * m;
  const std::complex<double> half_root =
      disc >= 0.0 ? std::complex<double>(0.5 * std::sqrt(disc), 0.0)
                  : std::complex<double>(0.0, 0.5 * std::sqrt(-disc));

  SpectrumResult out;
  out.eigenvalues.reserve(std::size_t(n_max + 1) * (n_max + 1));
  for (int i = 0; i <= n_max; ++i)
    for (int j = 0; j <= n_max; ++j)
      out.eigenvalues.push_back(0.5 * gamma * double(i + j) +
                                half_root * double(i - j));
  out.gap = extract_gap(out.eigenvalues);
  out.truncation.reset();  // closed form, no truncation
  return out;
}

double quadratic_gap(double m, double gamma) {
  require(m > 0.0 && std::isfinite(m), "quadratic_gap needs m > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "quadratic_gap needs gamma > 0");
  const double disc = gamma * gamma - 4.0 * m;
  if (disc <= 0.0) return 0.5 * gamma;
  // (gamma - sqrt(disc))/2 rewritten to avoid cancellation at large gamma.
  return 2.0 * m / (gamma + std::sqrt(disc));
}

GeneratorMatrix build_generator_hermite(double m, double gamma, int N) {
  require(m > 0.0 && std::isfinite(m), "generator needs m > 0");
  require(gamma > 0.0 && std::isfinite(gamma), "generator needs gamma > 0");
  require(N >= 4 && N <= 200, "generator truncation must satisfy 4 <= N <= 200");

  GeneratorMatrix gen;
  gen.order = N;
  gen.m = m;
  gen.gamma = gamma;
  const int stride = N + 1;
  const double sm = std::sqrt(m);
  auto idx = [stride](int i, int j) { return i * stride + j; };

  // In the orthonormal basis psi_{i,j} = H_i(sqrt(m) x) H_j(v)/sqrt(i! j!):
  //   - the dissipative part contributes gamma * j on the diagonal;
  //   - the transport part v d/dx maps (i,j) -> (i-1, j+1) and (i-1, j-1)
  //     and the force -m x d/dv maps (i,j) -> (i+1, j-1) and (i-1, j-1);
  //     the (i-1, j-1)-type cross terms cancel between the two, leaving
  //       coeff into (i-1, j+1): -sqrt(m) sqrt(i (j+1))
  //       coeff into (i+1, j-1): +sqrt(m) sqrt(j (i+1))
  //   (ladder relations H_k' = k H_{k-1}, z H_k = H_{k+1} + k H_{k-1}).
  auto push = [&gen](int r, int c, double v) {
    gen.rows.push_back(r);
    gen.cols.push_back(c);
    gen.vals.push_back(v);
  };
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= N; ++j) {
      const int c = idx(i, j);
      if (j > 0) push(c, c, gamma * j);  // (0,0) row and column stay empty
      if (i - 1 >= 0 && j + 1 <= N)
        push(idx(i - 1, j + 1), c, -sm * std::sqrt(double(i) * (j + 1)));
      if (i + 1 <= N && j - 1 >= 0)
        push(idx(i + 1, j - 1), c, sm * std::sqrt(double(j) * (i + 1)));
    }
  }
  return gen;
}

SpectrumResult matrix_gap(const GeneratorMatrix& gen) {
  require(gen.order >= 4, "matrix_gap needs a generator of order >= 4");
  require(gen.order <= 60, "matrix_gap caps the truncation at N = 60");
  const int n = gen.dim();

  // Densify (column-major for LAPACK).
  std::vector<double> a(std::size_t(n) * n, 0.0);
  for (std::size_t k = 0; k < gen.vals.size(); ++k)
    a[std::size_t(gen.cols[k]) * n + gen.rows[k]] = gen.vals[k];

  std::vector<double> wr(n), wi(n);
  int info = 0, lwork = -1;
  double wkopt = 0.0;
  dgeev_("N", "N", &n, a.data(), &n, wr.data(), wi.data(), nullptr, &n,
         nullptr, &n, &wkopt, &lwork, &info);
  lwork = int(wkopt);
  std::vector<double> work(static_cast<std::size_t>(lwork), 0.0);
  dgeev_("N", "N", &n, a.data(), &n, wr.data(), wi.data(), nullptr, &n,
         nullptr, &n, work.data(), &lwork, &info);
  if (info != 0)
    throw numerical_failure_error(
        "dense eigenvalue extraction failed to converge", info);

  SpectrumResult out;
  out.eigenvalues.reserve(std::size_t(n));
  for (int k = 0; k < n; ++k) out.eigenvalues.emplace_back(wr[k], wi[k]);
  out.gap = extract_gap(out.eigenvalues);
  out.truncation = gen.order;
  return out;
}

double rham_supremum_quadratic(double m, long long S_max) {
  require(m > 0.0 && std::isfinite(m), "rham_supremum_quadratic needs m > 0");
  require(S_max >= 1, "rham_supremum_quadratic needs S_max >= 1");
  // sqrt(2 m^2 (S^2 - S)) / (1 + m S) is increasing in S, but scan anyway:
  // the loop is cheap and makes no monotonicity assumption.
  double best = 0.0;
  for (long long S = 0; S <= S_max; ++S) {
    const double Sd = double(S);
    const double val =
        std::sqrt(2.0 * Sd * (Sd - 1.0)) * m / (1.0 + m * Sd);
    best = std::max(best, val);
  }
  return best;
}

namespace {

// Symmetric tridiagonal form of the weighted Laplacian on a uniform grid:
// (A f)_i = (w_{i+1/2}(f_i - f_{i+1}) + w_{i-1/2}(f_i - f_{i-1}))
//           / (h^2 e^{-U_i})   with reflecting ends,
// symmetrized as B = D^{1/2} A D^{-1/2}, D = diag(e^{-U_i}). B has the same
// spectrum as A and the exact null direction q_i ~ sqrt(e^{-U_i}) (the image
// of the constant function). Shared by the eigensolver and the kernel probe.
struct WeightedStencil {
  int n = 0;
  std::vector<double> rho;   // node weights e^{-(U_i - U_min)}
  std::vector<double> diag;  // B diagonal
  std::vector<double> off;   // B first off-diagonal
  double max_diag = 0.0;
};

WeightedStencil assemble_weighted_stencil(const PotentialSpec& spec,
                                          double x_min, double x_max,
                                          int n_points) {
  require(spec.dimension == 1, "poincare_fd handles one dimension only");
  require(x_max > x_min, "poincare_fd needs x_max > x_min");
  require(n_points >= 64, "poincare_fd needs at least 64 grid points");
  require(bool(spec.energy), "poincare_fd needs an energy callback");

  const int n = n_points;
  const double h = (x_max - x_min) / (n - 1);
  auto U1 = [&spec](double x) {
    Eigen::VectorXd p(1);
    p[0] = x;
    return spec.energy(p);
  };

  // Node and midpoint weights of the Gibbs factor.
  std::vector<double> u_node(n), w_mid(n - 1);
  double u_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    u_node[i] = U1(x_min + i * h);
    u_min = std::min(u_min, u_node[i]);
  }
  require(u_node[0] >= u_min + 25.0 && u_node[n - 1] >= u_min + 25.0,
          "poincare_fd interval too small: potential must rise by >= 25 above "
          "its minimum at both ends");
  for (int i = 0; i + 1 < n; ++i)
    w_mid[i] = std::exp(-(U1(x_min + (i + 0.5) * h) - u_min));

  WeightedStencil st;
  st.n = n;
  st.rho.resize(n);
  st.diag.resize(n);
  st.off.resize(n - 1);
  for (int i = 0; i < n; ++i) st.rho[i] = std::exp(-(u_node[i] - u_min));
  const double h2 = h * h;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    if (i > 0) s += w_mid[i - 1];
    if (i + 1 < n) s += w_mid[i];
    st.diag[i] = s / (h2 * st.rho[i]);
  }
  for (int i = 0; i + 1 < n; ++i)
    st.off[i] = -w_mid[i] / (h2 * std::sqrt(st.rho[i] * st.rho[i + 1]));
  for (double d : st.diag) st.max_diag = std::max(st.max_diag, d);
  return st;
}

}  // namespace

double poincare_fd_null_residual(const PotentialSpec& spec, double x_min,
                                 double x_max, int n_points) {
  const WeightedStencil st =
      assemble_weighted_stencil(spec, x_min, x_max, n_points);
  const int n = st.n;
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = std::sqrt(st.rho[i]);
  q.normalize();
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = st.diag[i] * q[i];
    if (i > 0) s += st.off[i - 1] * q[i - 1];
    if (i + 1 < n) s += st.off[i] * q[i + 1];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

PoincareEstimate poincare_fd(const PotentialSpec& spec, double x_min,
                             double x_max, int n_points) {
  const WeightedStencil st =
      assemble_weighted_stencil(spec, x_min, x_max, n_points);
  const int n = st.n;
  const std::vector<double>& diag = st.diag;
  const std::vector<double>& off = st.off;

  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = std::sqrt(st.rho[i]);
  q.normalize();

  // Shifted inverse iteration on B + tau I (tau > 0 keeps the Thomas solve
  // away from the exact kernel), with the constant direction q projected
  // out before and after every solve.
  const double max_diag = st.max_diag;
  const double tau = 1e-12 * max_diag;

  std::vector<double> dl(n), dd(n);  // prefactored Thomas sweeps
  // LU factorization of the tridiagonal (no pivoting; B + tau I is SPD).
  dd[0] = diag[0] + tau;
  for (int i = 1; i < n; ++i) {
    dl[i] = off[i - 1] / dd[i - 1];
    dd[i] = diag[i] + tau - dl[i] * off[i - 1];
  }
  auto solve = [&](Eigen::VectorXd& y) {
    for (int i = 1; i < n; ++i) y[i] -= dl[i] * y[i - 1];
    y[n - 1] /= dd[n - 1];
    for (int i = n - 2; i >= 0; --i) y[i] = (y[i] - off[i] * y[i + 1]) / dd[i];
  };
  auto apply_B = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) {
      double s = diag[i] * y[i];
      if (i > 0) s += off[i - 1] * y[i - 1];
      if (i + 1 < n) s += off[i] * y[i + 1];
      z[i] = s;
    }
    return z;
  };

  // Deterministic non-constant start vector.
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = std::sin((i + 1.0) * 2.0 / n) + 0.5;
  x -= q * q.dot(x);
  x.normalize();

  const int max_iter = 500;
  // The Rayleigh quotient cannot settle below the rounding noise of B
  // (about eps * ||B||), so the stop test carries that absolute floor.
  const double stop_tol =
      std::max(1e-12, 64.0 * std::numeric_limits<double>::epsilon() * max_diag);
  double m_hat = 0.0, prev = std::numeric_limits<double>::infinity();
  int iter = 0;
  for (iter = 1; iter <= max_iter; ++iter) {
    solve(x);
    x -= q * q.dot(x);
    const double nrm = x.norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm))
      throw numerical_failure_error("inverse iteration collapsed", iter);
    x /= nrm;
    m_hat = x.dot(apply_B(x));  // Rayleigh quotient
    if (std::abs(m_hat - prev) <= std::max(1e-13 * std::abs(m_hat), stop_tol))
      break;
    prev = m_hat;
  }
  if (iter > max_iter)
    throw numerical_failure_error(
        "inverse iteration did not converge within the iteration cap",
        max_iter);

  PoincareEstimate out;
  out.m_hat = m_hat;
  out.x_min = x_min;
  out.x_max = x_max;
  out.n_points = n_points;
  out.eigen_iterations = iter;
  return out;
}

}  // namespace ulrates
