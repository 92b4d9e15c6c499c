#pragma once

// Truncated-basis quantum Toda model.
//
// States are expanded over products |n1, n2> of two unit-mass harmonic
// oscillators of frequency omega (tensor order: particle 1 outer, particle 2
// inner). All single-mode operator matrices are exact matrix elements of the
// untruncated operator, restricted to the admitted pairs.

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "toda/curve.hpp"
#include "toda/dynamics.hpp"

namespace toda {

/// Product-basis admission rule and the flat index map.
///
/// A pair (n1, n2) is admitted when n1 <= n_max, n2 <= n_max and, if set,
/// n1 + n2 <= n_sum_max. Admitted pairs are enumerated lexicographically.
class BasisSpec {
 public:
  BasisSpec(double hbar, double omega, int n_max, std::optional<int> n_sum_max = std::nullopt);

  double hbar() const noexcept { return hbar_; }
  double omega() const noexcept { return omega_; }
  int n_max() const noexcept { return n_max_; }
  std::optional<int> n_sum_max() const noexcept { return n_sum_max_; }

  /// Number of admitted pairs D.
  std::size_t dimension() const noexcept { return pairs_.size(); }
  /// Single-mode dimension n_max + 1.
  int mode_dimension() const noexcept { return n_max_ + 1; }

  bool admits(int n1, int n2) const noexcept;
  std::pair<int, int> pair(std::size_t index) const { return pairs_.at(index); }
  std::optional<std::size_t> index(int n1, int n2) const noexcept;

  friend bool operator==(const BasisSpec& a, const BasisSpec& b) noexcept {
    return a.hbar_ == b.hbar_ && a.omega_ == b.omega_ && a.n_max_ == b.n_max_ &&
           a.n_sum_max_ == b.n_sum_max_;
  }

 private:
  double hbar_;
  double omega_;
  int n_max_;
  std::optional<int> n_sum_max_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<std::int64_t> flat_;  // (n_max+1)^2 table, -1 for excluded pairs
};

/// <m| exp(alpha q) |n> for a unit-mass oscillator of frequency omega.
/// Uses a normalised generalised-Laguerre recurrence with log-space factorials.
/// Throws OverflowError when |alpha| sqrt(hbar / (2 omega)) is too large.
Eigen::MatrixXd ho_exp_matrix(double alpha, const BasisSpec& basis);

/// <m| p^2 |n>: diagonal hbar omega (n + 1/2), second off-diagonal
/// -(hbar omega / 2) sqrt((n+1)(n+2)).
Eigen::MatrixXd ho_p2_matrix(const BasisSpec& basis);

/// <m| q^2 |n>: diagonal (hbar / omega)(n + 1/2), second off-diagonal
/// (hbar / (2 omega)) sqrt((n+1)(n+2)).
Eigen::MatrixXd ho_q2_matrix(const BasisSpec& basis);

/// Restriction of left (x) right to the admitted pairs, added into `out` with weight `scale`.
void add_product(Eigen::MatrixXd& out, const BasisSpec& basis, const Eigen::MatrixXd& left,
                 const Eigen::MatrixXd& right, double scale = 1.0);

/// Restriction of single-mode operators to the product basis: left (x) I + I (x) right.
Eigen::MatrixXd kron_sum(const BasisSpec& basis, const Eigen::MatrixXd& left, const Eigen::MatrixXd& right);

/// H = T1 (x) I + I (x) T2 + e^{-q1} (x) I + e^{q1} (x) e^{-q2} + I (x) e^{q2} - 3.
Eigen::MatrixXd build_hamiltonian(const ModelParams& params, const BasisSpec& basis);

struct SpectralDecomposition {
  BasisSpec basis;
  ModelParams model;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // orthonormal columns

  /// sup-norm of V^T V - I.
  double orthogonality_error() const;
  /// ||V diag(lambda) V^T - H||_F / ||H||_F.
  double reconstruction_error(const Eigen::MatrixXd& hamiltonian) const;
  /// Orthogonality to 1e-8 and eigenvalues >= -1e-6; throws EigenError otherwise.
  void check_invariants() const;
};

/// Full symmetric eigensolution (LAPACK dsyevd). Throws EigenError on solver
/// failure or when the result violates the decomposition invariants.
SpectralDecomposition spectral_decompose(const Eigen::MatrixXd& hamiltonian, const BasisSpec& basis,
                                         const ModelParams& model = {});

struct WaveVector {
  BasisSpec basis;
  Eigen::VectorXcd coefficients;

  double norm_squared() const { return coefficients.squaredNorm(); }
};

/// Width convention of the initial Gaussian wavepackets.
enum class PacketWidth {
  // Position variance hbar / 2 for both particles (unit mass, unit frequency).
  unit,
  // Position variance hbar / (2 m_i): ground-state width of a unit-frequency
  // oscillator with the particle's own mass.
  mass_matched,
};

/// Position variances of the two packets; momentum variances are hbar^2 / (4 s).
struct PacketVariances {
  double q1;
  double q2;
};

PacketVariances packet_variances(double hbar, const ModelParams& params, PacketWidth width);

/// Single-mode expansion of a minimum-uncertainty Gaussian centred at (q0, p0)
/// with position variance `variance`, over basis states 0..n_max. Uses the
/// closed-form coherent amplitudes when the variance equals the basis ground
/// state's hbar / (2 omega), and trapezoid quadrature against Hermite
/// functions otherwise.
Eigen::VectorXcd packet_coefficients(double q0, double p0, double variance, double hbar, double omega,
                                     int n_max);

struct CoherentExpansion {
  WaveVector state;  // renormalised to unit norm
  double deficit;    // 1 - ||c||^2 before renormalisation
};

/// Separable Gaussian state centred at `center`. Throws TruncationError when
/// the truncation deficit exceeds `tolerance`; the error names the smallest
/// sufficient cutoff.
CoherentExpansion coherent_coefficients(const PhaseState& center, const BasisSpec& basis,
                                        const PacketVariances& variances, double tolerance = 1e-8);

/// Smallest cutoff N whose coherent expansion passes the deficit gate: square
/// n_max = N, or n1 + n2 <= N when `sum_rule` is set.
int required_cutoff(const PhaseState& center, double hbar, double omega, const PacketVariances& variances,
                    bool sum_rule, double tolerance = 1e-8);

/// Unit-width convenience overload.
CoherentExpansion coherent_coefficients(const PhaseState& center, const BasisSpec& basis,
                                        double tolerance = 1e-8);

/// psi(t) = V exp(-i Lambda t / hbar) V^T psi(0), for many t from one projection.
class Propagator {
 public:
  Propagator(const SpectralDecomposition& spectrum, const WaveVector& initial);

  WaveVector state_at(double t) const;

  /// Columns are psi(t_k); batched through one matrix product.
  Eigen::MatrixXcd states_at(std::span<const double> times) const;

 private:
  const SpectralDecomposition* spectrum_;
  Eigen::VectorXcd projected_;
};

/// Throws ConfigError when psi and spectrum use different bases.
WaveVector evolve(const WaveVector& initial, double t, const SpectralDecomposition& spectrum);

struct ReducedDensity {
  int dimension = 0;
  Eigen::MatrixXcd entries;

  double trace() const { return entries.trace().real(); }
  double hermiticity_error() const { return (entries - entries.adjoint()).cwiseAbs().maxCoeff(); }
  /// Hermitian to 1e-10 and unit trace to 1e-8; throws InvalidDensityError otherwise.
  void check() const;
};

/// Partial trace of |psi><psi| over the other particle (particle is 1 or 2).
ReducedDensity reduced_density(const WaveVector& psi, int particle);
ReducedDensity reduced_density(const BasisSpec& basis, const Eigen::Ref<const Eigen::VectorXcd>& coefficients,
                               int particle);

/// Ascending eigenvalues of the reduced density matrix.
Eigen::VectorXd density_spectrum(const ReducedDensity& rho);

/// -sum lambda ln lambda over the spectrum, clipped to [0, 1] with 0 ln 0 = 0.
/// Throws InvalidDensityError for an eigenvalue below -1e-6.
double von_neumann_entropy(const ReducedDensity& rho);

/// Entropy from precomputed eigenvalues, same clipping and guard.
double von_neumann_entropy(const Eigen::VectorXd& eigenvalues);

double purity(const ReducedDensity& rho);

struct EntanglementCurves {
  EntropyCurve particle1;
  EntropyCurve particle2;
  double deficit = 0.0;
  // Largest |S1(t) - S2(t)| along the curve.
  double schmidt_asymmetry = 0.0;
};

/// Entropies of both reduced states of psi0 evolved under `spectrum`.
EntanglementCurves entanglement_curves(const SpectralDecomposition& spectrum, const WaveVector& initial,
                                       std::span<const double> times);

/// Builds the Hamiltonian, diagonalises it and returns the particle-1 curve.
EntropyCurve entanglement_curve(const ModelParams& params, const BasisSpec& basis, const PhaseState& center,
                                std::span<const double> times);

}  // namespace toda
