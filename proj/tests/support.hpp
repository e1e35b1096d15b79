#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "bridgescale/linalg.hpp"
#include "bridgescale/random.hpp"

namespace bstest {

using namespace bridgescale;

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double unitarity_defect(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::identity(u.cols())).frobenius_norm();
}

// PD density with condition number at most exp(2 * spread).
inline DensityMatrix random_pd_density(std::size_t n, Rng& rng, double spread = 2.0) {
  return DensityMatrix(random_pd(n, rng, spread));
}

// Random X with spectrum inside [a, b] and unit trace: a vector drawn
// uniformly from the simplex slice {a <= l_i <= b, sum l = 1} by rejection,
// conjugated by a random unitary.
inline HermitianMatrix random_in_band(std::size_t n, double a, double b, Rng& rng) {
  std::uniform_real_distribution<double> uni(a, b);
  std::vector<double> l(n);
  for (int attempt = 0; attempt < 100000; ++attempt) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      l[i] = uni(rng);
      s += l[i];
    }
    l[n - 1] = 1.0 - s;
    if (l[n - 1] >= a && l[n - 1] <= b) break;
  }
  const ComplexMatrix u = random_unitary(n, rng);
  return congruence(u, HermitianMatrix::diagonal(l));
}

}  // namespace bstest
