#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bridgescale/classical.hpp"
#include "bridgescale/linalg.hpp"
#include "bridgescale/matrix.hpp"

namespace bridgescale {

using Rng = std::mt19937_64;

inline ComplexMatrix random_gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  ComplexMatrix g(rows, cols);
  for (auto& z : g.data()) {
    const double re = normal(rng);
    const double im = normal(rng);
    z = cplx(re, im);
  }
  return g;
}

// Normalized Wishart sample G G* / tr(G G*): full-rank PD density almost surely.
inline DensityMatrix random_density(std::size_t n, Rng& rng) {
  const ComplexMatrix g = random_gaussian(n, n, rng);
  return DensityMatrix(HermitianMatrix(g * g.adjoint()));
}

// PD matrix V diag(exp(u)) V* with u uniform in [-spread, spread] and V from
// a random Gaussian eigenbasis; condition number at most exp(2 * spread).
inline HermitianMatrix random_pd(std::size_t n, Rng& rng, double spread = 3.0) {
  std::uniform_real_distribution<double> uni(-spread, spread);
  std::vector<double> lam(n);
  for (double& l : lam) l = std::exp(uni(rng));
  const ComplexMatrix g = random_gaussian(n, n, rng);
  const auto e = hermitian_eig(HermitianMatrix(g + g.adjoint()));
  return congruence(e.vectors, HermitianMatrix::diagonal(lam));
}

inline HermitianMatrix random_hermitian(std::size_t n, Rng& rng) {
  const ComplexMatrix g = random_gaussian(n, n, rng);
  return HermitianMatrix(g + g.adjoint());
}

// Haar-like unitary from the polar factor of a complex Gaussian matrix.
inline ComplexMatrix random_unitary(std::size_t n, Rng& rng) {
  const ComplexMatrix g = random_gaussian(n, n, rng);
  return g * pd_inv_sqrt(HermitianMatrix(g.adjoint() * g)).matrix();
}

inline ProbVector random_prob_vector(std::size_t n, Rng& rng, double floor = 0.05) {
  std::uniform_real_distribution<double> uni(floor, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = uni(rng);
  return ProbVector(std::move(v));
}

inline RealMatrix random_positive_matrix(std::size_t n, Rng& rng, double floor = 0.05) {
  std::uniform_real_distribution<double> uni(floor, 1.0);
  RealMatrix a(n, n);
  for (double& x : a.data()) x = uni(rng);
  return a;
}

inline RealMatrix random_column_stochastic(std::size_t n, Rng& rng, double floor = 0.05) {
  RealMatrix a = random_positive_matrix(n, rng, floor);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a(i, j);
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= s;
  }
  return a;
}

}  // namespace bridgescale
