#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "bridgescale/error.hpp"
#include "bridgescale/matrix.hpp"

namespace bridgescale {

// Relative floor below which a negative eigenvalue is treated as rounding noise.
inline constexpr double kEpsPsd = 1e-10;
// Absolute floor on the smallest eigenvalue of a positive definite matrix.
inline constexpr double kEpsPd = 1e-12;

// Complex Hermitian matrix. Construction re-hermitizes via (X + X*)/2, so the
// stored entries satisfy X == X* exactly.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const ComplexMatrix& m) : m_(m.rows(), m.cols()) {
    if (!m.square()) throw Error(ErrorCode::kDimensionMismatch, "Hermitian matrix must be square");
    if (!m.all_finite()) throw Error(ErrorCode::kNonFiniteInput, "non-finite matrix entry");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
      m_(i, i) = m(i, i).real();
      for (std::size_t j = i + 1; j < n; ++j) {
        const cplx v = 0.5 * (m(i, j) + std::conj(m(j, i)));
        m_(i, j) = v;
        m_(j, i) = std::conj(v);
      }
    }
  }
  explicit HermitianMatrix(const RealMatrix& m) : HermitianMatrix(to_complex(m)) {}

  static HermitianMatrix identity(std::size_t n) { return HermitianMatrix(ComplexMatrix::identity(n)); }
  static HermitianMatrix diagonal(std::span<const double> d) {
    return HermitianMatrix(ComplexMatrix::diagonal(d));
  }

  std::size_t n() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  cplx operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }
  double frobenius_norm() const { return m_.frobenius_norm(); }
  std::vector<double> diag() const {
    std::vector<double> d(n());
    for (std::size_t i = 0; i < n(); ++i) d[i] = m_(i, i).real();
    return d;
  }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(a.m_ + b.m_);
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    return HermitianMatrix(a.m_ - b.m_);
  }
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) {
    return HermitianMatrix(a.m_ * cplx(s));
  }
  friend bool operator==(const HermitianMatrix&, const HermitianMatrix&) = default;

 private:
  ComplexMatrix m_;
};

// Real part of the Frobenius inner product; exact for Hermitian arguments.
inline double inner(const HermitianMatrix& x, const HermitianMatrix& y) {
  return inner(x.matrix(), y.matrix()).real();
}

// B X B* for arbitrary square B.
inline HermitianMatrix congruence(const ComplexMatrix& b, const HermitianMatrix& x) {
  return HermitianMatrix(b * x.matrix() * b.adjoint());
}

struct EigenDecomposition {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;       // columns are eigenvectors

  double largest() const { return values.front(); }
  double smallest() const { return values.back(); }
};

namespace detail {

inline double off_diagonal_norm(const ComplexMatrix& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

}  // namespace detail

// Cyclic Jacobi eigensolver for Hermitian matrices. Each rotation zeroes one
// off-diagonal pair with a complex Givens rotation; sweeps stop once the
// off-diagonal Frobenius mass drops below 1e-14 * ||X||_F.
inline EigenDecomposition hermitian_eig(const HermitianMatrix& x) {
  const std::size_t n = x.n();
  ComplexMatrix a = x.matrix();
  ComplexMatrix v = ComplexMatrix::identity(n);
  if (!a.all_finite()) throw Error(ErrorCode::kNonFiniteInput, "hermitian_eig: non-finite input");

  const double norm = a.frobenius_norm();
  const double threshold = 1e-14 * norm;
  constexpr int kMaxSweeps = 100;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= threshold) break;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cplx g = a(p, q);
        const double mag = std::abs(g);
        if (mag == 0.0) continue;
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        // Skip rotations that cannot change the diagonal in floating point.
        if (sweep > 3 && std::abs(app) + 100.0 * mag == std::abs(app) &&
            std::abs(aqq) + 100.0 * mag == std::abs(aqq)) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        const cplx phase = g / mag;
        const double tau = (aqq - app) / (2.0 * mag);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cplx sp = s * phase;             // s e^{i phi}
        const cplx sm = s * std::conj(phase);  // s e^{-i phi}

        // A <- A J with J = [[c, s e^{i phi}], [-s e^{-i phi}, c]].
        for (std::size_t k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = c * akp - sm * akq;
          a(k, q) = sp * akp + c * akq;
        }
        // A <- J* A.
        for (std::size_t k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = c * apk - sp * aqk;
          a(q, k) = sm * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        for (std::size_t k = 0; k < n; ++k) {
          const cplx vkp = v(k, p);
          const cplx vkq = v(k, q);
          v(k, p) = c * vkp - sm * vkq;
          v(k, q) = sp * vkp + c * vkq;
        }
        rotated = true;
      }
    }
    if (!rotated) break;
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });
  EigenDecomposition out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.values[c] = a(order[c], order[c]).real();
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
  }
  return out;
}

inline std::vector<double> eigenvalues(const HermitianMatrix& x) { return hermitian_eig(x).values; }

// Eigenvalues (descending) of a real symmetric matrix.
inline std::vector<double> symmetric_eigenvalues(const RealMatrix& m) {
  return eigenvalues(HermitianMatrix(m));
}

// V f(diag) V*.
inline HermitianMatrix spectral_apply(const EigenDecomposition& e,
                                      const std::function<double(double)>& f) {
  const std::size_t n = e.values.size();
  ComplexMatrix r(n, n);
  std::vector<double> fv(n);
  for (std::size_t k = 0; k < n; ++k) fv[k] = f(e.values[k]);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      cplx s{};
      for (std::size_t k = 0; k < n; ++k) s += e.vectors(i, k) * fv[k] * std::conj(e.vectors(j, k));
      r(i, j) = s;
      r(j, i) = std::conj(s);
    }
  }
  return HermitianMatrix(r);
}

inline void require_pd(const EigenDecomposition& e, double eps_pd, const char* what) {
  if (!(e.smallest() > eps_pd)) {
    throw Error(ErrorCode::kNotPd, std::string(what) + ": smallest eigenvalue " +
                                       std::to_string(e.smallest()) + " not above PD floor");
  }
}

inline HermitianMatrix psd_sqrt(const HermitianMatrix& x) {
  const auto e = hermitian_eig(x);
  if (e.smallest() < -kEpsPsd * std::max(1.0, e.largest())) {
    throw Error(ErrorCode::kNotPsd, "psd_sqrt: matrix has a negative eigenvalue");
  }
  return spectral_apply(e, [](double l) { return l > 0.0 ? std::sqrt(l) : 0.0; });
}

// X^p for positive definite X.
inline HermitianMatrix pd_power(const HermitianMatrix& x, double p, double eps_pd = kEpsPd) {
  const auto e = hermitian_eig(x);
  require_pd(e, eps_pd, "pd_power");
  return spectral_apply(e, [p](double l) { return std::pow(l, p); });
}

inline HermitianMatrix pd_inv_sqrt(const HermitianMatrix& x, double eps_pd = kEpsPd) {
  const auto e = hermitian_eig(x);
  require_pd(e, eps_pd, "pd_inv_sqrt");
  return spectral_apply(e, [](double l) { return 1.0 / std::sqrt(l); });
}

inline HermitianMatrix pd_inverse(const HermitianMatrix& x, double eps_pd = kEpsPd) {
  const auto e = hermitian_eig(x);
  require_pd(e, eps_pd, "pd_inverse");
  return spectral_apply(e, [](double l) { return 1.0 / l; });
}

// Hilbert projective metric log(l1/ln) of Y^{-1/2} X Y^{-1/2}.
inline double hilbert_distance(const HermitianMatrix& x, const HermitianMatrix& y) {
  if (x.n() != y.n()) throw Error(ErrorCode::kDimensionMismatch, "hilbert_distance");
  const auto ey = hermitian_eig(y);
  if (!(ey.smallest() > 0.0)) throw Error(ErrorCode::kNotPd, "hilbert_distance: Y is not PD");
  const HermitianMatrix y_is = spectral_apply(ey, [](double l) { return 1.0 / std::sqrt(l); });
  const auto em = hermitian_eig(congruence(y_is.matrix(), x));
  if (!(em.smallest() > 0.0)) throw Error(ErrorCode::kNotPd, "hilbert_distance: X is not PD");
  return std::max(0.0, std::log(em.largest() / em.smallest()));
}

// Orthonormal basis (Frobenius) of the traceless Hermitian n x n matrices:
// symmetric and antisymmetric off-diagonal generators, then the generalized
// diagonal Gell-Mann matrices.
inline std::vector<HermitianMatrix> traceless_basis(std::size_t n) {
  if (n < 2) throw Error(ErrorCode::kDimensionMismatch, "traceless_basis requires n >= 2");
  std::vector<HermitianMatrix> basis;
  basis.reserve(n * n - 1);
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      ComplexMatrix s(n, n);
      s(j, k) = r;
      s(k, j) = r;
      basis.emplace_back(s);
      ComplexMatrix a(n, n);
      a(j, k) = cplx(0.0, -r);
      a(k, j) = cplx(0.0, r);
      basis.emplace_back(a);
    }
  }
  for (std::size_t l = 1; l < n; ++l) {
    ComplexMatrix d(n, n);
    const double norm = 1.0 / std::sqrt(static_cast<double>(l * (l + 1)));
    for (std::size_t m = 0; m < l; ++m) d(m, m) = norm;
    d(l, l) = -static_cast<double>(l) * norm;
    basis.emplace_back(d);
  }
  return basis;
}

struct SpectralBand {
  double a = 0.0;
  double b = 0.0;
  bool trace_one = false;
};

inline SpectralBand band_of(const HermitianMatrix& x) {
  const auto ev = eigenvalues(x);
  return {ev.back(), ev.front(), std::abs(x.trace() - 1.0) <= 1e-12};
}

enum class DensityClass { kPsdTrace1, kPdTrace1 };

// Unit-trace Hermitian matrix, PSD or PD depending on its class. The trace is
// renormalized on construction; the spectrum is checked against the class.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(const HermitianMatrix& x, DensityClass cls = DensityClass::kPdTrace1,
                         double eps_pd = kEpsPd)
      : cls_(cls) {
    const double tr = x.trace();
    if (!(tr > 0.0)) throw Error(ErrorCode::kZeroTrace, "density matrix needs positive trace");
    // Leave already-normalized input untouched so values round-trip bit-exactly.
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(x.n());
    x_ = std::abs(tr - 1.0) <= slack ? x : (1.0 / tr) * x;
    const auto ev = eigenvalues(x_);
    smallest_ = ev.back();
    if (cls == DensityClass::kPdTrace1) {
      if (!(smallest_ > eps_pd)) {
        throw Error(ErrorCode::kNotPd, "density matrix is not positive definite");
      }
    } else if (smallest_ < -kEpsPsd * ev.front()) {
      throw Error(ErrorCode::kNotPsd, "density matrix is not positive semidefinite");
    }
  }

  static DensityMatrix maximally_mixed(std::size_t n) {
    return DensityMatrix(HermitianMatrix::identity(n));
  }

  std::size_t n() const noexcept { return x_.n(); }
  const HermitianMatrix& hermitian() const noexcept { return x_; }
  const ComplexMatrix& matrix() const noexcept { return x_.matrix(); }
  DensityClass density_class() const noexcept { return cls_; }
  double smallest_eigenvalue() const noexcept { return smallest_; }

 private:
  HermitianMatrix x_;
  DensityClass cls_ = DensityClass::kPdTrace1;
  double smallest_ = 0.0;
};

}  // namespace bridgescale
