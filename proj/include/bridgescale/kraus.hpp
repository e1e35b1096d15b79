#pragma once

// Completely positive maps in Kraus form, standard channel families, and the
// positivity / contraction estimates used by the bridge diagnostics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "bridgescale/classical.hpp"
#include "bridgescale/error.hpp"
#include "bridgescale/linalg.hpp"
#include "bridgescale/matrix.hpp"
#include "bridgescale/random.hpp"

namespace bridgescale {

inline constexpr double kChannelTol = 1e-10;

// X -> sum_i A_i X A_i^*. Channel and unital flags are verified on construction.
class KrausMap {
 public:
  KrausMap() = default;
  explicit KrausMap(std::vector<ComplexMatrix> ops) : ops_(std::move(ops)) {
    if (ops_.empty()) throw Error(ErrorCode::kValidationError, "Kraus map needs at least one operator");
    const std::size_t n = ops_.front().rows();
    if (n == 0) throw Error(ErrorCode::kDimensionMismatch, "empty Kraus operator");
    ComplexMatrix dual_id(n, n), primal_id(n, n);
    for (const auto& a : ops_) {
      if (a.rows() != n || a.cols() != n) {
        throw Error(ErrorCode::kDimensionMismatch, "Kraus operators must all be n x n");
      }
      if (!a.all_finite()) throw Error(ErrorCode::kNonFiniteInput, "non-finite Kraus entry");
      dual_id += a.adjoint() * a;
      primal_id += a * a.adjoint();
    }
    const ComplexMatrix id = ComplexMatrix::identity(n);
    channel_residual_ = (dual_id - id).frobenius_norm();
    unital_residual_ = (primal_id - id).frobenius_norm();
  }

  std::size_t n() const noexcept { return ops_.front().rows(); }
  std::size_t k() const noexcept { return ops_.size(); }
  const std::vector<ComplexMatrix>& ops() const noexcept { return ops_; }

  // ||sum A_i^* A_i - I||_F
  double channel_residual() const noexcept { return channel_residual_; }
  // ||sum A_i A_i^* - I||_F
  double unital_residual() const noexcept { return unital_residual_; }
  bool is_channel() const noexcept { return channel_residual_ <= kChannelTol; }
  bool is_unital() const noexcept { return is_channel() && unital_residual_ <= kChannelTol; }

 private:
  std::vector<ComplexMatrix> ops_;
  double channel_residual_ = 0.0;
  double unital_residual_ = 0.0;
};

inline HermitianMatrix apply(const KrausMap& q, const HermitianMatrix& x) {
  if (x.n() != q.n()) throw Error(ErrorCode::kDimensionMismatch, "apply: dimension mismatch");
  ComplexMatrix acc(q.n(), q.n());
  for (const auto& a : q.ops()) acc += a * x.matrix() * a.adjoint();
  return HermitianMatrix(acc);
}

inline HermitianMatrix apply_dual(const KrausMap& q, const HermitianMatrix& x) {
  if (x.n() != q.n()) throw Error(ErrorCode::kDimensionMismatch, "apply_dual: dimension mismatch");
  ComplexMatrix acc(q.n(), q.n());
  for (const auto& a : q.ops()) acc += a.adjoint() * x.matrix() * a;
  return HermitianMatrix(acc);
}

inline KrausMap identity_channel(std::size_t n) { return KrausMap({ComplexMatrix::identity(n)}); }

// Clock-and-shift operator X^a Z^b.
inline ComplexMatrix weyl_operator(std::size_t n, std::size_t a, std::size_t b) {
  ComplexMatrix w(n, n);
  const double two_pi_over_n = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double angle = two_pi_over_n * static_cast<double>((b * j) % n);
    w((j + a) % n, j) = std::polar(1.0, angle);
  }
  return w;
}

// X -> (1 - p) X + p tr(X) I / n, written with the n^2 Weyl operators.
inline KrausMap depolarizing(std::size_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kValidationError, "depolarizing p outside [0, 1]");
  const double nn = static_cast<double>(n * n);
  std::vector<ComplexMatrix> ops;
  ops.push_back(ComplexMatrix::identity(n) * cplx(std::sqrt(1.0 - p + p / nn)));
  if (p > 0.0) {
    const double w = std::sqrt(p / nn);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b)
        if (a != 0 || b != 0) ops.push_back(weyl_operator(n, a, b) * cplx(w));
  }
  return KrausMap(std::move(ops));
}

namespace detail {

// Appends sqrt(p) times the Kraus operators of X -> tr(X) I / n.
inline void append_full_depolarizing(std::vector<ComplexMatrix>& ops, std::size_t n, double p) {
  if (p <= 0.0) return;
  const double w = std::sqrt(p) / static_cast<double>(n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) ops.push_back(weyl_operator(n, a, b) * cplx(w));
}

}  // namespace detail

// k Gaussian Kraus operators right-normalized by (sum A_i^* A_i)^{-1/2}, then
// mixed with the completely depolarizing channel at weight p, so a(Q) >= p/n.
inline KrausMap random_channel(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  if (n < 1 || k < 1) throw Error(ErrorCode::kValidationError, "random_channel needs n, k >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kValidationError, "positivity mix outside [0, 1]");
  Rng rng(seed);
  std::vector<ComplexMatrix> raw;
  ComplexMatrix gram(n, n);
  for (std::size_t i = 0; i < k; ++i) {
    raw.push_back(random_gaussian(n, n, rng));
    gram += raw.back().adjoint() * raw.back();
  }
  const ComplexMatrix norm = pd_inv_sqrt(HermitianMatrix(gram)).matrix();
  std::vector<ComplexMatrix> ops;
  if (p < 1.0) {
    for (const auto& a : raw) ops.push_back(a * norm * cplx(std::sqrt(1.0 - p)));
  }
  detail::append_full_depolarizing(ops, n, p);
  return KrausMap(std::move(ops));
}

// Random mixed-unitary (hence unital) channel mixed with depolarizing weight p.
inline KrausMap random_unital_channel(std::size_t n, std::size_t k, double p, std::uint64_t seed) {
  if (n < 1 || k < 1) throw Error(ErrorCode::kValidationError, "random_unital_channel needs n, k >= 1");
  if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kValidationError, "positivity mix outside [0, 1]");
  Rng rng(seed);
  std::vector<double> weights(k);
  std::exponential_distribution<double> expo(1.0);
  double total = 0.0;
  for (double& w : weights) total += (w = expo(rng));
  std::vector<ComplexMatrix> ops;
  for (std::size_t i = 0; i < k; ++i) {
    const ComplexMatrix u = random_unitary(n, rng);
    if (p < 1.0) ops.push_back(u * cplx(std::sqrt((1.0 - p) * weights[i] / total)));
  }
  detail::append_full_depolarizing(ops, n, p);
  return KrausMap(std::move(ops));
}

// Kraus set {sqrt(a_ij) E_ij} for column-stochastic A: Q(X)_ii = sum_j a_ij X_jj.
inline KrausMap diagonal_embedding(const NonnegMatrix& a) {
  if (!a.column_stochastic(1e-12)) {
    throw Error(ErrorCode::kNotStochastic, "diagonal_embedding needs a column-stochastic matrix");
  }
  const std::size_t n = a.n();
  std::vector<ComplexMatrix> ops;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (a(i, j) <= 0.0) continue;
      ComplexMatrix e(n, n);
      e(i, j) = std::sqrt(a(i, j));
      ops.push_back(std::move(e));
    }
  }
  return KrausMap(std::move(ops));
}

inline HermitianMatrix diagonal_density(std::span<const double> p) { return HermitianMatrix::diagonal(p); }

struct PositivityEstimate {
  double a_est = 0.0;
  double b_est = 0.0;
  std::uint64_t samples = 0;
  bool certified = false;
};

namespace detail {

inline ComplexMatrix outer(const ComplexMatrix& eigvecs, std::size_t col) {
  const std::size_t n = eigvecs.rows();
  ComplexMatrix r(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) r(i, j) = eigvecs(i, col) * std::conj(eigvecs(j, col));
  return r;
}

}  // namespace detail

// Estimates a(Q) = min lambda_n(Q(uu*)) and b(Q) = max lambda_1(Q(uu*)) over
// unit vectors u. Starting points are uniform on the complex sphere; each is
// refined by alternating exact minimization (maximization) of the bilinear
// form v* Q(uu*) v = u* Q'(vv*) u over v and u. The estimates are never
// certified: a_est >= a(Q) and b_est <= b(Q).
inline PositivityEstimate estimate_ab(const KrausMap& q, std::uint64_t samples, std::uint64_t refine_steps,
                                      std::uint64_t seed) {
  if (samples < 1) throw Error(ErrorCode::kValidationError, "estimate_ab needs samples >= 1");
  const std::size_t n = q.n();
  Rng rng(seed);
  double a_est = std::numeric_limits<double>::infinity();
  double b_est = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const ComplexMatrix g = random_gaussian(n, 1, rng);
    const double norm = g.frobenius_norm();
    ComplexMatrix u_outer(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) u_outer(i, j) = g(i, 0) * std::conj(g(j, 0)) / (norm * norm);
    const HermitianMatrix start(u_outer);

    HermitianMatrix lo = start;
    HermitianMatrix hi = start;
    for (std::uint64_t step = 0;; ++step) {
      const auto e_lo = hermitian_eig(apply(q, lo));
      const auto e_hi = hermitian_eig(apply(q, hi));
      a_est = std::min(a_est, e_lo.smallest());
      b_est = std::max(b_est, e_hi.largest());
      if (step >= refine_steps) break;
      const HermitianMatrix v_lo(detail::outer(e_lo.vectors, n - 1));
      const HermitianMatrix v_hi(detail::outer(e_hi.vectors, 0));
      const auto d_lo = hermitian_eig(apply_dual(q, v_lo));
      const auto d_hi = hermitian_eig(apply_dual(q, v_hi));
      lo = HermitianMatrix(detail::outer(d_lo.vectors, n - 1));
      hi = HermitianMatrix(detail::outer(d_hi.vectors, 0));
    }
  }
  a_est = std::max(0.0, a_est);
  return {a_est, std::max(a_est, b_est), samples, false};
}

// (b - a) / (b + a) = tanh(log(b/a) / 2).
inline double contraction_kappa(double a, double b) {
  if (!(a > 0.0)) throw Error(ErrorCode::kNotPositive, "contraction_kappa needs a > 0");
  if (b < a) throw Error(ErrorCode::kBandInvalid, "contraction_kappa needs a <= b");
  return (b - a) / (b + a);
}

struct LinearizationP {
  RealMatrix matrix;  // (n^2 - 1) x (n^2 - 1) in traceless_basis coordinates
  double spectral_radius = 0.0;
};

// The linearization W -> Q'(Q(W)) of the unital bridge map at I/n, acting on
// traceless Hermitian matrices.
inline LinearizationP jacobian_P(const KrausMap& q) {
  if (!q.is_unital()) throw Error(ErrorCode::kNotUnital, "jacobian_P requires a unital channel");
  const std::size_t n = q.n();
  if (n < 2) return {RealMatrix(0, 0), 0.0};
  const auto basis = traceless_basis(n);
  const std::size_t m = basis.size();
  RealMatrix p(m, m);
  for (std::size_t col = 0; col < m; ++col) {
    const HermitianMatrix image = apply_dual(q, apply(q, basis[col]));
    for (std::size_t row = 0; row < m; ++row) p(row, col) = inner(basis[row], image);
  }
  const auto ev = symmetric_eigenvalues(p);
  double rho = 0.0;
  for (double l : ev) rho = std::max(rho, std::abs(l));
  return {std::move(p), rho};
}

}  // namespace bridgescale
