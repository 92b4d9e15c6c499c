#pragma once

// Independent reference computations for the tests. Nothing here calls the
// library's matrix-element or entropy code.

#include <Eigen/Dense>

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace oracle {

struct Quadrature {
  std::vector<double> nodes;
  std::vector<double> weights;  // for the weight function exp(-x^2)
};

/// Gauss-Hermite rule from the eigen-decomposition of the Jacobi matrix.
Quadrature gauss_hermite(int n);

/// Orthonormal Hermite polynomials h_0..h_n at x with respect to exp(-x^2).
std::vector<double> hermite_orthonormal(int n, double x);

/// <m| exp(alpha q) |n> for a unit-mass oscillator of frequency omega, by
/// quadrature after shifting x -> y + c/2 so the integrand is a polynomial
/// times exp(-y^2) and the rule is exact.
Eigen::MatrixXd exp_matrix(double alpha, double hbar, double omega, int n_max, int nodes = 96);

/// <m| q^2 |n> by quadrature.
Eigen::MatrixXd q2_matrix(double hbar, double omega, int n_max, int nodes = 96);

/// -sum p ln p with 0 ln 0 = 0.
double shannon(const std::vector<double>& probabilities);

/// Poisson mass function with mean `mean` at k.
double poisson(double mean, int k);

/// Fresh empty directory under the system temp directory.
std::filesystem::path scratch_dir(const std::string& name);

}  // namespace oracle
