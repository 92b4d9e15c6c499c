#include "toda/quantum.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "toda/error.hpp"

namespace toda {

// ---------------------------------------------------------------------------
// Basis

BasisSpec::BasisSpec(double hbar, double omega, int n_max, std::optional<int> n_sum_max)
    : hbar_(hbar), omega_(omega), n_max_(n_max), n_sum_max_(n_sum_max) {
  if (!(std::isfinite(hbar) && hbar > 0.0)) throw ConfigError("basis: hbar must be positive");
  if (!(std::isfinite(omega) && omega > 0.0)) throw ConfigError("basis: omega must be positive");
  if (n_max < 0) throw ConfigError("basis: n_max must be non-negative");
  if (n_sum_max && *n_sum_max < 0) throw ConfigError("basis: n_sum_max must be non-negative");

  const auto mode = static_cast<std::size_t>(n_max + 1);
  flat_.assign(mode * mode, -1);
  for (int n1 = 0; n1 <= n_max; ++n1) {
    for (int n2 = 0; n2 <= n_max; ++n2) {
      if (!admits(n1, n2)) continue;
      flat_[static_cast<std::size_t>(n1) * mode + static_cast<std::size_t>(n2)] =
          static_cast<std::int64_t>(pairs_.size());
      pairs_.emplace_back(n1, n2);
    }
  }
}

bool BasisSpec::admits(int n1, int n2) const noexcept {
  if (n1 < 0 || n2 < 0 || n1 > n_max_ || n2 > n_max_) return false;
  return !n_sum_max_ || n1 + n2 <= *n_sum_max_;
}

std::optional<std::size_t> BasisSpec::index(int n1, int n2) const noexcept {
  if (n1 < 0 || n2 < 0 || n1 > n_max_ || n2 > n_max_) return std::nullopt;
  const auto v = flat_[static_cast<std::size_t>(n1) * static_cast<std::size_t>(n_max_ + 1) + static_cast<std::size_t>(n2)];
  if (v < 0) return std::nullopt;
  return static_cast<std::size_t>(v);
}

// ---------------------------------------------------------------------------
// Single-mode operators

Eigen::MatrixXd ho_exp_matrix(double alpha, const BasisSpec& basis) {
  const int dim = basis.mode_dimension();
  if (alpha == 0.0) return Eigen::MatrixXd::Identity(dim, dim);

  const double beta = alpha * std::sqrt(basis.hbar() / (2.0 * basis.omega()));
  const double beta2 = beta * beta;
  if (std::abs(beta) > 10.0) {
    std::ostringstream os;
    os << "ho_exp_matrix: |beta| = " << std::abs(beta) << " exceeds the supported range";
    throw OverflowError(os.str());
  }
  const double log_abs_beta = std::log(std::abs(beta));

  // <n+k| e^{beta (a + a^+)} |n> = e^{beta^2/2} beta^k / sqrt(k!) h_n^(k), where
  // h_n^(k) = sqrt(n! k! / (n+k)!) L_n^(k)(-beta^2) obeys the normalised recurrence
  //   sqrt((n+1)(n+1+k)) h_{n+1} = (2n+1+k+beta^2) h_n - sqrt(n(n+k)) h_{n-1}.
  // With a negative argument every Laguerre term is positive, so h_n > 0.
  Eigen::MatrixXd out(dim, dim);
  std::vector<double> h(static_cast<std::size_t>(dim));
  for (int k = 0; k < dim; ++k) {
    const int count = dim - k;
    h[0] = 1.0;
    if (count > 1) h[1] = (1.0 + k + beta2) / std::sqrt(1.0 + k);
    for (int n = 1; n + 1 < count; ++n) {
      h[static_cast<std::size_t>(n + 1)] =
          ((2.0 * n + 1.0 + k + beta2) * h[static_cast<std::size_t>(n)] -
           std::sqrt(static_cast<double>(n) * (n + k)) * h[static_cast<std::size_t>(n - 1)]) /
          std::sqrt((n + 1.0) * (n + 1.0 + k));
    }
    const double log_prefactor = 0.5 * beta2 + k * log_abs_beta - 0.5 * std::lgamma(k + 1.0);
    const double sign = (beta < 0.0 && (k % 2 == 1)) ? -1.0 : 1.0;
    for (int n = 0; n < count; ++n) {
      const double v = sign * std::exp(log_prefactor + std::log(h[static_cast<std::size_t>(n)]));
      if (!std::isfinite(v)) throw OverflowError("ho_exp_matrix: matrix element overflow");
      out(n + k, n) = v;
      out(n, n + k) = v;
    }
  }
  return out;
}

namespace {

Eigen::MatrixXd quadratic_matrix(const BasisSpec& basis, double diagonal_scale, double offdiagonal_scale) {
  const int dim = basis.mode_dimension();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  for (int n = 0; n < dim; ++n) {
    out(n, n) = diagonal_scale * (n + 0.5);
    if (n + 2 < dim) {
      const double v = offdiagonal_scale * std::sqrt((n + 1.0) * (n + 2.0));
      out(n + 2, n) = v;
      out(n, n + 2) = v;
    }
  }
  return out;
}

void check_mode_operator(const BasisSpec& basis, const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() != basis.mode_dimension() || m.cols() != basis.mode_dimension()) {
    std::ostringstream os;
    os << what << ": single-mode operator is " << m.rows() << "x" << m.cols() << " but the basis has "
       << basis.mode_dimension() << " modes";
    throw ConfigError(os.str());
  }
}

}  // namespace

Eigen::MatrixXd ho_p2_matrix(const BasisSpec& basis) {
  const double hw = basis.hbar() * basis.omega();
  return quadratic_matrix(basis, hw, -0.5 * hw);
}

Eigen::MatrixXd ho_q2_matrix(const BasisSpec& basis) {
  const double l2 = basis.hbar() / basis.omega();
  return quadratic_matrix(basis, l2, 0.5 * l2);
}

// ---------------------------------------------------------------------------
// Product-basis assembly

void add_product(Eigen::MatrixXd& out, const BasisSpec& basis, const Eigen::MatrixXd& left,
                 const Eigen::MatrixXd& right, double scale) {
  check_mode_operator(basis, left, "add_product");
  check_mode_operator(basis, right, "add_product");
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  if (out.rows() != d || out.cols() != d) throw ConfigError("add_product: target matrix has the wrong size");
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto [j1, j2] = basis.pair(static_cast<std::size_t>(j));
    for (Eigen::Index i = 0; i < d; ++i) {
      const auto [i1, i2] = basis.pair(static_cast<std::size_t>(i));
      out(i, j) += scale * left(i1, j1) * right(i2, j2);
    }
  }
}

Eigen::MatrixXd kron_sum(const BasisSpec& basis, const Eigen::MatrixXd& left, const Eigen::MatrixXd& right) {
  check_mode_operator(basis, left, "kron_sum");
  check_mode_operator(basis, right, "kron_sum");
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  const int mode = basis.mode_dimension();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto [i1, i2] = basis.pair(static_cast<std::size_t>(i));
    for (int k = 0; k < mode; ++k) {
      if (const auto j = basis.index(k, i2)) out(i, static_cast<Eigen::Index>(*j)) += left(i1, k);
      if (const auto j = basis.index(i1, k)) out(i, static_cast<Eigen::Index>(*j)) += right(i2, k);
    }
  }
  return out;
}

Eigen::MatrixXd build_hamiltonian(const ModelParams& params, const BasisSpec& basis) {
  params.validate();
  const Eigen::MatrixXd p2 = ho_p2_matrix(basis);
  const Eigen::MatrixXd exp_minus = ho_exp_matrix(-1.0, basis);
  const Eigen::MatrixXd exp_plus = ho_exp_matrix(+1.0, basis);

  // e^{-(q2 - q1)} = e^{q1} (x) e^{-q2}
  const Eigen::MatrixXd mode1 = p2 / (2.0 * params.m1) + exp_minus;
  const Eigen::MatrixXd mode2 = p2 / (2.0 * params.m2) + exp_plus;
  Eigen::MatrixXd h = kron_sum(basis, mode1, mode2);
  add_product(h, basis, exp_plus, exp_minus);
  h.diagonal().array() -= 3.0;
  // Both halves are filled by the same symmetric formulas; copy one triangle
  // so the result is symmetric bit for bit.
  h.triangularView<Eigen::StrictlyUpper>() = h.transpose();
  return h;
}

// ---------------------------------------------------------------------------
// Spectral decomposition

// Both checks work on column panels so the peak extra memory is d x kPanel
// rather than a second and third d x d matrix.
constexpr Eigen::Index kPanel = 256;

double SpectralDecomposition::orthogonality_error() const {
  const auto d = eigenvectors.cols();
  double worst = 0.0;
  Eigen::MatrixXd gram;
  for (Eigen::Index j = 0; j < d; j += kPanel) {
    const Eigen::Index w = std::min(kPanel, d - j);
    gram.noalias() = eigenvectors.transpose() * eigenvectors.middleCols(j, w);
    gram.middleRows(j, w).diagonal().array() -= 1.0;
    worst = std::max(worst, gram.cwiseAbs().maxCoeff());
  }
  return worst;
}

double SpectralDecomposition::reconstruction_error(const Eigen::MatrixXd& hamiltonian) const {
  const auto d = eigenvectors.rows();
  double residual_sq = 0.0;
  Eigen::MatrixXd panel, rebuilt;
  for (Eigen::Index j = 0; j < d; j += kPanel) {
    const Eigen::Index w = std::min(kPanel, d - j);
    // columns j..j+w of V Lambda V^T
    panel = eigenvalues.asDiagonal() * eigenvectors.middleRows(j, w).transpose();
    rebuilt.noalias() = eigenvectors * panel;
    residual_sq += (rebuilt - hamiltonian.middleCols(j, w)).squaredNorm();
  }
  const double norm = hamiltonian.norm();
  return std::sqrt(residual_sq) / (norm > 0.0 ? norm : 1.0);
}

void SpectralDecomposition::check_invariants() const {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  if (eigenvalues.size() != d || eigenvectors.rows() != d || eigenvectors.cols() != d) {
    throw EigenError("spectral decomposition does not match its basis dimension");
  }
  for (Eigen::Index i = 1; i < d; ++i) {
    if (eigenvalues(i) < eigenvalues(i - 1)) throw EigenError("eigenvalues are not ascending");
  }
  if (d > 0 && eigenvalues(0) < -1e-6) {
    std::ostringstream os;
    os << "lowest eigenvalue " << eigenvalues(0) << " is below the potential minimum";
    throw EigenError(os.str());
  }
  const double ortho = orthogonality_error();
  if (!(ortho < 1e-8)) {
    std::ostringstream os;
    os << "eigenvectors not orthonormal: sup|V^T V - I| = " << ortho;
    throw EigenError(os.str());
  }
}

SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& hamiltonian, const BasisSpec& basis,
                                         const ModelParams& model) {
  const auto d = static_cast<Eigen::Index>(basis.dimension());
  if (hamiltonian.rows() != d || hamiltonian.cols() != d) {
    throw ConfigError("spectral_decompose: matrix size does not match the basis dimension");
  }
  const double scale = d > 0 ? hamiltonian.cwiseAbs().maxCoeff() : 0.0;
  if (d > 0 && (hamiltonian - hamiltonian.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(scale, 1.0)) {
    throw ConfigError("spectral_decompose: matrix is not symmetric");
  }

  SpectralDecomposition out{basis, model, Eigen::VectorXd(d), Eigen::MatrixXd()};
  if (d == 0) return out;
  // dsyevr (MRRR) needs O(d) workspace; dsyevd would need another 2 d^2.
  lapack_int info = 0;
  {
    Eigen::MatrixXd work = hamiltonian;
    out.eigenvectors.resize(d, d);
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(d));
    lapack_int found = 0;
    info = LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'A', 'L', static_cast<lapack_int>(d), work.data(),
                          static_cast<lapack_int>(d), 0.0, 0.0, 0, 0, 0.0, &found, out.eigenvalues.data(),
                          out.eigenvectors.data(), static_cast<lapack_int>(d), support.data());
    if (info == 0 && found != static_cast<lapack_int>(d)) info = -1000;
  }
  if (info != 0) {
    std::ostringstream os;
    os << "dsyevr failed with info=" << info << " (dimension " << d << ", ||H||_F = " << hamiltonian.norm()
       << ", max|H_ij| = " << scale << ")";
    throw EigenError(os.str());
  }
  out.check_invariants();
  const double residual = out.reconstruction_error(hamiltonian);
  if (!(residual < 1e-8)) {
    std::ostringstream os;
    os << "eigen reconstruction residual " << residual << " exceeds 1e-8 (dimension " << d << ")";
    throw EigenError(os.str());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Initial states

PacketVariances packet_variances(double hbar, const ModelParams& params, PacketWidth width) {
  if (width == PacketWidth::mass_matched) return {hbar / (2.0 * params.m1), hbar / (2.0 * params.m2)};
  return {hbar / 2.0, hbar / 2.0};
}

namespace {

Eigen::VectorXcd analytic_coherent(double q0, double p0, double hbar, double omega, int n_max) {
  const std::complex<double> alpha(q0 * std::sqrt(omega / (2.0 * hbar)), p0 / std::sqrt(2.0 * omega * hbar));
  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n_max + 1);
  const double r = std::abs(alpha);
  if (r == 0.0) {
    c(0) = 1.0;
    return c;
  }
  const double phase = std::arg(alpha);
  const double log_r = std::log(r);
  for (int n = 0; n <= n_max; ++n) {
    const double magnitude = std::exp(-0.5 * r * r + n * log_r - 0.5 * std::lgamma(n + 1.0));
    c(n) = std::polar(magnitude, n * phase);
  }
  return c;
}

// <phi_n | psi> by the trapezoid rule in xi = x sqrt(omega / hbar). The
// integrand decays like a Gaussian, so the rule converges spectrally.
Eigen::VectorXcd quadrature_packet(double q0, double p0, double variance, double hbar, double omega, int n_max) {
  const double length = std::sqrt(hbar / omega);  // x = length * xi
  const double xi0 = q0 / length;
  const double sigma_xi = std::sqrt(variance) / length;
  const double half_width = 13.0 * sigma_xi;
  const double k_packet = std::abs(p0) * length / hbar + 8.0 / sigma_xi;
  const double k_modes = std::sqrt(2.0 * n_max + 1.0);
  const double step = std::min(0.02, 0.25 / (k_packet + k_modes));
  const auto points = static_cast<int>(std::ceil(2.0 * half_width / step)) + 1;
  const double h = 2.0 * half_width / (points - 1);

  const double psi_norm = std::pow(2.0 * std::numbers::pi * variance, -0.25);
  const double phi_norm = std::pow(std::numbers::pi, -0.25) / std::sqrt(length);

  Eigen::VectorXcd c = Eigen::VectorXcd::Zero(n_max + 1);
  std::vector<double> phi(static_cast<std::size_t>(n_max + 1));
  for (int i = 0; i < points; ++i) {
    const double xi = xi0 - half_width + i * h;
    const double x = length * xi;
    const double weight = (i == 0 || i == points - 1) ? 0.5 : 1.0;
    const std::complex<double> psi =
        psi_norm * std::exp(std::complex<double>(-(x - q0) * (x - q0) / (4.0 * variance), p0 * (x - 0.5 * q0) / hbar));
    phi[0] = phi_norm * std::exp(-0.5 * xi * xi);
    if (n_max >= 1) phi[1] = std::sqrt(2.0) * xi * phi[0];
    for (int n = 1; n < n_max; ++n) {
      phi[static_cast<std::size_t>(n + 1)] = std::sqrt(2.0 / (n + 1.0)) * xi * phi[static_cast<std::size_t>(n)] -
                                             std::sqrt(n / (n + 1.0)) * phi[static_cast<std::size_t>(n - 1)];
    }
    const std::complex<double> w = weight * h * length * psi;
    for (int n = 0; n <= n_max; ++n) c(n) += phi[static_cast<std::size_t>(n)] * w;
  }
  return c;
}

// Mean basis occupation of the packet, used to size the search for a sufficient cutoff.
double mean_occupation(double q0, double p0, double variance, double hbar, double omega) {
  const double q_sq = q0 * q0 + variance;
  const double p_sq = p0 * p0 + hbar * hbar / (4.0 * variance);
  return std::max(0.0, (omega * q_sq + p_sq / omega) / (2.0 * hbar) - 0.5);
}

int extended_cutoff(const PhaseState& center, const PacketVariances& variances, double hbar, double omega) {
  const double mean = std::max(mean_occupation(center.q1, center.p1, variances.q1, hbar, omega),
                               mean_occupation(center.q2, center.p2, variances.q2, hbar, omega));
  return static_cast<int>(std::ceil(2.0 * mean + 12.0 * std::sqrt(mean + 1.0) + 40.0));
}

// Smallest N (square n_max = N, plus n1 + n2 <= N under a sum rule) whose
// kept weight passes; -1 if none within the extended expansion.
int smallest_cutoff(const Eigen::VectorXcd& mode1, const Eigen::VectorXcd& mode2, bool sum_rule, double tolerance) {
  const int extended = static_cast<int>(std::min(mode1.size(), mode2.size())) - 1;
  for (int n = 0; n <= extended; ++n) {
    double kept = 0.0;
    for (int n1 = 0; n1 <= n; ++n1) {
      const int top = sum_rule ? n - n1 : n;
      for (int n2 = 0; n2 <= top; ++n2) kept += std::norm(mode1(n1)) * std::norm(mode2(n2));
    }
    if (1.0 - kept <= tolerance) return n;
  }
  return -1;
}

}  // namespace

int required_cutoff(const PhaseState& center, double hbar, double omega, const PacketVariances& variances,
                    bool sum_rule, double tolerance) {
  const int extended = extended_cutoff(center, variances, hbar, omega);
  const Eigen::VectorXcd mode1 = packet_coefficients(center.q1, center.p1, variances.q1, hbar, omega, extended);
  const Eigen::VectorXcd mode2 = packet_coefficients(center.q2, center.p2, variances.q2, hbar, omega, extended);
  const int n = smallest_cutoff(mode1, mode2, sum_rule, tolerance);
  if (n < 0) throw TruncationError("no cutoff up to " + std::to_string(extended) + " passes the deficit gate", 1.0, -1);
  return n;
}

Eigen::VectorXcd packet_coefficients(double q0, double p0, double variance, double hbar, double omega, int n_max) {
  if (!(variance > 0.0) || !(hbar > 0.0) || !(omega > 0.0) || n_max < 0) {
    throw ConfigError("packet_coefficients: invalid width or basis parameters");
  }
  const double basis_variance = hbar / (2.0 * omega);
  if (std::abs(variance - basis_variance) <= 1e-14 * basis_variance) {
    return analytic_coherent(q0, p0, hbar, omega, n_max);
  }
  return quadrature_packet(q0, p0, variance, hbar, omega, n_max);
}

CoherentExpansion coherent_coefficients(const PhaseState& center, const BasisSpec& basis,
                                        const PacketVariances& variances, double tolerance) {
  const double hbar = basis.hbar();
  const double omega = basis.omega();
  const int extended = std::max(basis.n_max(), extended_cutoff(center, variances, hbar, omega));
  const Eigen::VectorXcd mode1 = packet_coefficients(center.q1, center.p1, variances.q1, hbar, omega, extended);
  const Eigen::VectorXcd mode2 = packet_coefficients(center.q2, center.p2, variances.q2, hbar, omega, extended);

  CoherentExpansion out{WaveVector{basis, Eigen::VectorXcd(static_cast<Eigen::Index>(basis.dimension()))}, 0.0};
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto [n1, n2] = basis.pair(i);
    out.state.coefficients(static_cast<Eigen::Index>(i)) = mode1(n1) * mode2(n2);
  }
  const double norm_sq = out.state.norm_squared();
  out.deficit = 1.0 - norm_sq;

  if (out.deficit > tolerance) {
    const bool sum_rule = basis.n_sum_max().has_value();
    const int required = smallest_cutoff(mode1, mode2, sum_rule, tolerance);
    std::ostringstream os;
    os << "coherent state truncation deficit " << out.deficit << " exceeds " << tolerance << "; need "
       << (sum_rule ? "n_sum_max" : "n_max") << " >= "
       << (required >= 0 ? std::to_string(required) : std::string("more than ") + std::to_string(extended));
    throw TruncationError(os.str(), out.deficit, required);
  }
  if (norm_sq > 0.0) out.state.coefficients /= std::sqrt(norm_sq);
  return out;
}

CoherentExpansion coherent_coefficients(const PhaseState& center, const BasisSpec& basis, double tolerance) {
  return coherent_coefficients(center, basis, PacketVariances{basis.hbar() / 2.0, basis.hbar() / 2.0}, tolerance);
}

// ---------------------------------------------------------------------------
// Evolution

Propagator::Propagator(const SpectralDecomposition& spectrum, const WaveVector& initial) : spectrum_(&spectrum) {
  if (!(initial.basis == spectrum.basis)) throw ConfigError("evolve: state and spectrum use different bases");
  const Eigen::VectorXd re = spectrum.eigenvectors.transpose() * initial.coefficients.real();
  const Eigen::VectorXd im = spectrum.eigenvectors.transpose() * initial.coefficients.imag();
  projected_.resize(re.size());
  projected_.real() = re;
  projected_.imag() = im;
}

Eigen::MatrixXcd Propagator::states_at(std::span<const double> times) const {
  const auto d = projected_.size();
  const auto count = static_cast<Eigen::Index>(times.size());
  Eigen::MatrixXd re(d, count), im(d, count);
  const double hbar = spectrum_->basis.hbar();
  for (Eigen::Index k = 0; k < count; ++k) {
    const double t = times[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < d; ++i) {
      const std::complex<double> v = std::polar(1.0, -spectrum_->eigenvalues(i) * t / hbar) * projected_(i);
      re(i, k) = v.real();
      im(i, k) = v.imag();
    }
  }
  Eigen::MatrixXcd out(d, count);
  out.real() = spectrum_->eigenvectors * re;
  out.imag() = spectrum_->eigenvectors * im;
  return out;
}

WaveVector Propagator::state_at(double t) const {
  const double ts[1] = {t};
  return WaveVector{spectrum_->basis, states_at(ts).col(0)};
}

WaveVector evolve(const WaveVector& initial, double t, const SpectralDecomposition& spectrum) {
  return Propagator(spectrum, initial).state_at(t);
}

// ---------------------------------------------------------------------------
// Reduced states and entropy

void ReducedDensity::check() const {
  const double herm = hermiticity_error();
  if (!(herm <= 1e-10)) {
    std::ostringstream os;
    os << "reduced density not Hermitian: max|rho - rho^+| = " << herm;
    throw InvalidDensityError(os.str());
  }
  const double tr = trace();
  if (!(std::abs(tr - 1.0) <= 1e-8)) {
    std::ostringstream os;
    os << "reduced density trace " << tr << " differs from 1";
    throw InvalidDensityError(os.str());
  }
}

ReducedDensity reduced_density(const BasisSpec& basis, const Eigen::Ref<const Eigen::VectorXcd>& coefficients,
                               int particle) {
  if (particle != 1 && particle != 2) throw ConfigError("reduced_density: particle must be 1 or 2");
  if (coefficients.size() != static_cast<Eigen::Index>(basis.dimension())) {
    throw ConfigError("reduced_density: coefficient vector does not match the basis");
  }
  const int mode = basis.mode_dimension();
  Eigen::MatrixXcd c = Eigen::MatrixXcd::Zero(mode, mode);
  for (std::size_t i = 0; i < basis.dimension(); ++i) {
    const auto [n1, n2] = basis.pair(i);
    c(n1, n2) = coefficients(static_cast<Eigen::Index>(i));
  }
  ReducedDensity rho;
  rho.dimension = mode;
  if (particle == 1) {
    rho.entries.noalias() = c * c.adjoint();
  } else {
    rho.entries.noalias() = c.transpose() * c.conjugate();
  }
  // Exact Hermitian symmetry; the product is Hermitian only up to rounding.
  rho.entries = 0.5 * (rho.entries + rho.entries.adjoint()).eval();
  return rho;
}

ReducedDensity reduced_density(const WaveVector& psi, int particle) {
  return reduced_density(psi.basis, psi.coefficients, particle);
}

Eigen::VectorXd density_spectrum(const ReducedDensity& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho.entries, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw EigenError("reduced density eigensolver failed");
  return solver.eigenvalues();
}

double von_neumann_entropy(const Eigen::VectorXd& eigenvalues) {
  double s = 0.0;
  for (const double raw : eigenvalues) {
    if (raw < -1e-6) {
      std::ostringstream os;
      os << "reduced density has eigenvalue " << raw << " below -1e-6";
      throw InvalidDensityError(os.str());
    }
    const double lambda = std::clamp(raw, 0.0, 1.0);
    if (lambda > 0.0) s -= lambda * std::log(lambda);
  }
  return std::max(s, 0.0);
}

double von_neumann_entropy(const ReducedDensity& rho) {
  rho.check();
  return von_neumann_entropy(density_spectrum(rho));
}

double purity(const ReducedDensity& rho) { return (rho.entries * rho.entries).trace().real(); }

EntanglementCurves entanglement_curves(const SpectralDecomposition& spectrum, const WaveVector& initial,
                                       std::span<const double> times) {
  const Propagator propagator(spectrum, initial);
  EntanglementCurves out;
  out.deficit = 1.0 - initial.norm_squared();
  CurveTag tag;
  tag.source = CurveSource::quantum;
  tag.hbar = spectrum.basis.hbar();
  out.particle1 = {std::vector<double>(times.begin(), times.end()), std::vector<double>(times.size()), tag, 1};
  out.particle2 = {std::vector<double>(times.begin(), times.end()), std::vector<double>(times.size()), tag, 2};

  constexpr std::size_t kChunk = 32;
  for (std::size_t start = 0; start < times.size(); start += kChunk) {
    const std::size_t stop = std::min(times.size(), start + kChunk);
    const Eigen::MatrixXcd states = propagator.states_at(times.subspan(start, stop - start));
    for (std::size_t k = start; k < stop; ++k) {
      const auto column = states.col(static_cast<Eigen::Index>(k - start));
      const double s1 = von_neumann_entropy(reduced_density(spectrum.basis, column, 1));
      const double s2 = von_neumann_entropy(reduced_density(spectrum.basis, column, 2));
      out.particle1.values[k] = s1;
      out.particle2.values[k] = s2;
      out.schmidt_asymmetry = std::max(out.schmidt_asymmetry, std::abs(s1 - s2));
    }
  }
  return out;
}

EntropyCurve entanglement_curve(const ModelParams& params, const BasisSpec& basis, const PhaseState& center,
                                std::span<const double> times) {
  const CoherentExpansion psi0 = coherent_coefficients(center, basis);
  const SpectralDecomposition spectrum = spectral_decompose(build_hamiltonian(params, basis), basis, params);
  return entanglement_curves(spectrum, psi0.state, times).particle1;
}

}  // namespace toda
