#pragma once

// Quantum bridge: the fixed-point map Phi_{alpha,beta} = D_alpha o tilde Q o
// D_beta o Q, its Picard solver, construction of the scaled channel
// R(X) = O* S Q(T X T) S O with R(alpha) = beta, the two-marginal
// certificate, and multi-start uniqueness probing.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "bridgescale/config.hpp"
#include "bridgescale/error.hpp"
#include "bridgescale/kraus.hpp"
#include "bridgescale/linalg.hpp"
#include "bridgescale/random.hpp"

namespace bridgescale {

// Q'(X) / tr Q'(X).
inline DensityMatrix tilde_Q(const KrausMap& q, const DensityMatrix& x) {
  const HermitianMatrix y = apply_dual(q, x.hermitian());
  if (!(y.trace() > kEpsPd)) throw Error(ErrorCode::kZeroTrace, "tilde_Q: tr Q'(X) vanishes");
  return DensityMatrix(y, DensityClass::kPsdTrace1);
}

namespace detail {

inline HermitianMatrix d_alpha_raw(const HermitianMatrix& alpha, const HermitianMatrix& x) {
  const HermitianMatrix m = congruence(pd_inv_sqrt(x).matrix(), alpha);
  const double tr = m.trace();
  if (!(tr > 0.0)) throw Error(ErrorCode::kZeroTrace, "d_alpha: tr X^{-1} alpha vanishes");
  return (1.0 / tr) * m;
}

inline HermitianMatrix tilde_Q_raw(const KrausMap& q, const HermitianMatrix& x) {
  const HermitianMatrix y = apply_dual(q, x);
  const double tr = y.trace();
  if (!(tr > kEpsPd)) throw Error(ErrorCode::kZeroTrace, "tilde_Q: tr Q'(X) vanishes");
  return (1.0 / tr) * y;
}

}  // namespace detail

// X^{-1/2} alpha X^{-1/2} / tr(X^{-1} alpha).
inline DensityMatrix d_alpha(const DensityMatrix& alpha, const HermitianMatrix& x) {
  if (alpha.n() != x.n()) throw Error(ErrorCode::kDimensionMismatch, "d_alpha");
  const DensityClass cls =
      alpha.density_class() == DensityClass::kPdTrace1 ? DensityClass::kPdTrace1 : DensityClass::kPsdTrace1;
  return DensityMatrix(detail::d_alpha_raw(alpha.hermitian(), x), cls);
}

// Intermediate stages of one application of Phi_{alpha,beta}.
struct PhiStages {
  HermitianMatrix v;    // Q(X)
  HermitianMatrix w;    // D_beta(V)
  HermitianMatrix z;    // tilde Q(W)
  HermitianMatrix out;  // D_alpha(Z)
};

inline PhiStages phi_stages(const KrausMap& q, const DensityMatrix& alpha, const DensityMatrix& beta,
                            const HermitianMatrix& x) {
  if (alpha.n() != q.n() || beta.n() != q.n() || x.n() != q.n()) {
    throw Error(ErrorCode::kDimensionMismatch, "phi_map: dimension mismatch");
  }
  PhiStages s;
  s.v = apply(q, x);
  s.w = detail::d_alpha_raw(beta.hermitian(), s.v);
  s.z = detail::tilde_Q_raw(q, s.w);
  s.out = detail::d_alpha_raw(alpha.hermitian(), s.z);
  return s;
}

inline DensityMatrix phi_map(const KrausMap& q, const DensityMatrix& alpha, const DensityMatrix& beta,
                             const DensityMatrix& x) {
  return DensityMatrix(phi_stages(q, alpha, beta, x.hermitian()).out, DensityClass::kPdTrace1);
}

struct IterationRecord {
  double residual = 0.0;      // ||Phi(X_m) - X_m||_F
  double hilbert_step = 0.0;  // dist(X_m, Phi(X_m))
};

struct BridgeSolution {
  DensityMatrix U;
  ComplexMatrix S, T, O;
  std::optional<KrausMap> R;
  double residual_fixed = std::numeric_limits<double>::infinity();
  double residual_channel = std::numeric_limits<double>::infinity();
  double residual_bridge = std::numeric_limits<double>::infinity();
  double unitarity_defect = std::numeric_limits<double>::infinity();  // ||O O* - I||_F before projection
  std::uint64_t iterations = 0;
  bool converged = false;
  std::vector<IterationRecord> trace;
};

struct ScaledChannel {
  ComplexMatrix S, T, O;
  KrausMap R;
  double residual_channel = 0.0;
  double residual_bridge = 0.0;
  double unitarity_defect = 0.0;
};

// From a fixed point U: V = Q(U), W = D_beta(V), Z = tilde Q(W),
// t = 1/sqrt(tr Q'(W)), T = t Z^{-1/2}, S = W^{1/2},
// O = r W^{-1/2} V^{-1/2} beta^{1/2} with r = 1/sqrt(tr V^{-1} beta),
// and R with Kraus operators O* S A_i T.
inline ScaledChannel build_scaled_channel(const KrausMap& q, const DensityMatrix& alpha,
                                          const DensityMatrix& beta, const DensityMatrix& u) {
  const HermitianMatrix v = apply(q, u.hermitian());
  const HermitianMatrix w = detail::d_alpha_raw(beta.hermitian(), v);
  const HermitianMatrix qw = apply_dual(q, w);
  const double tr_qw = qw.trace();
  if (!(tr_qw > kEpsPd)) throw Error(ErrorCode::kNotPd, "build_scaled_channel: tr Q'(W) vanishes");
  const HermitianMatrix z = (1.0 / tr_qw) * qw;
  const double t = 1.0 / std::sqrt(tr_qw);

  ScaledChannel out;
  out.T = (t * pd_inv_sqrt(z)).matrix();
  out.S = pd_power(w, 0.5).matrix();

  const HermitianMatrix v_inv = pd_inverse(v);
  const double tr_vb = inner(v_inv, beta.hermitian());
  if (!(tr_vb > 0.0)) throw Error(ErrorCode::kNotPd, "build_scaled_channel: tr V^{-1} beta vanishes");
  const double r = 1.0 / std::sqrt(tr_vb);
  ComplexMatrix o = pd_inv_sqrt(w).matrix() * pd_inv_sqrt(v).matrix() * psd_sqrt(beta.hermitian()).matrix();
  o *= cplx(r);
  const std::size_t n = q.n();
  out.unitarity_defect = (o * o.adjoint() - ComplexMatrix::identity(n)).frobenius_norm();
  // O is exactly unitary in exact arithmetic for any PD U; a large defect
  // means the square roots above lost accuracy.
  if (out.unitarity_defect > 1e-6) {
    throw Error(ErrorCode::kNotUnitary, "build_scaled_channel: O is not unitary");
  }
  // Polar projection onto the nearest unitary: O (O* O)^{-1/2}.
  out.O = o * pd_inv_sqrt(HermitianMatrix(o.adjoint() * o)).matrix();

  std::vector<ComplexMatrix> ops;
  ops.reserve(q.k());
  const ComplexMatrix left = out.O.adjoint() * out.S;
  for (const auto& a : q.ops()) ops.push_back(left * a * out.T);
  out.R = KrausMap(std::move(ops));
  out.residual_channel = out.R.channel_residual();
  out.residual_bridge = (apply(out.R, alpha.hermitian()) - beta.hermitian()).frobenius_norm();
  return out;
}

namespace detail {

// Real coordinates of a Hermitian matrix, isometric for the Frobenius norm.
inline std::vector<double> to_coords(const HermitianMatrix& x) {
  const std::size_t n = x.n();
  std::vector<double> c;
  c.reserve(n * n);
  const double r2 = std::sqrt(2.0);
  for (std::size_t i = 0; i < n; ++i) {
    c.push_back(x(i, i).real());
    for (std::size_t j = i + 1; j < n; ++j) {
      c.push_back(r2 * x(i, j).real());
      c.push_back(r2 * x(i, j).imag());
    }
  }
  return c;
}

inline HermitianMatrix from_coords(const std::vector<double>& c, std::size_t n) {
  ComplexMatrix m(n, n);
  const double r2 = 1.0 / std::sqrt(2.0);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m(i, i) = c[k++];
    for (std::size_t j = i + 1; j < n; ++j) {
      const double re = r2 * c[k++];
      const double im = r2 * c[k++];
      m(i, j) = cplx(re, im);
      m(j, i) = cplx(re, -im);
    }
  }
  return HermitianMatrix(m);
}

// Anderson mixing (type II) over a short history of iterates and images.
class AndersonMixer {
 public:
  explicit AndersonMixer(std::size_t depth) : depth_(depth) {}

  std::vector<double> next(const std::vector<double>& x, const std::vector<double>& gx) {
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = gx[i] - x[i];
    if (last_f_) {
      df_.push_back(diff(f, *last_f_));
      dg_.push_back(diff(gx, *last_g_));
      if (df_.size() > depth_) {
        df_.pop_front();
        dg_.pop_front();
      }
    }
    last_f_ = f;
    last_g_ = gx;
    if (df_.empty()) return gx;
    const std::size_t m = df_.size();
    RealMatrix normal(m, m);
    std::vector<double> rhs(m, 0.0);
    double diag_scale = 0.0;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = 0; b < m; ++b) normal(a, b) = dot(df_[a], df_[b]);
      rhs[a] = dot(df_[a], f);
      diag_scale = std::max(diag_scale, normal(a, a));
    }
    for (std::size_t a = 0; a < m; ++a) normal(a, a) += 1e-12 * diag_scale + 1e-300;
    std::vector<double> gamma;
    try {
      gamma = solve_linear(normal, rhs);
    } catch (const Error&) {
      reset();
      return gx;
    }
    std::vector<double> out = gx;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t i = 0; i < out.size(); ++i) out[i] -= gamma[a] * dg_[a][i];
    return out;
  }

  void reset() {
    df_.clear();
    dg_.clear();
    last_f_.reset();
    last_g_.reset();
  }

 private:
  static std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
  }
  static double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  }

  std::size_t depth_;
  std::deque<std::vector<double>> df_, dg_;
  std::optional<std::vector<double>> last_f_, last_g_;
};

inline bool smallest_above(const HermitianMatrix& x, double floor) { return eigenvalues(x).back() > floor; }

}  // namespace detail

// Picard iteration X <- (1 - w) X + w Phi(X) from `initial` (default I/n).
// Stops when ||Phi(X) - X||_F <= tol and dist(X, Phi(X)) <= 10 tol. On
// success the scaled channel is built; an exhausted budget returns
// converged == false (NO_CONVERGENCE).
inline BridgeSolution solve_fixed_point(const KrausMap& q, const DensityMatrix& alpha, const DensityMatrix& beta,
                                        const SolverConfig& cfg = {},
                                        const std::optional<DensityMatrix>& initial = std::nullopt) {
  cfg.validate();
  const std::size_t n = q.n();
  if (alpha.n() != n || beta.n() != n) throw Error(ErrorCode::kDimensionMismatch, "solve_fixed_point");
  if (alpha.density_class() != DensityClass::kPdTrace1 || beta.density_class() != DensityClass::kPdTrace1) {
    throw Error(ErrorCode::kNotPd, "solve_fixed_point needs PD alpha and beta");
  }
  HermitianMatrix x = initial ? initial->hermitian() : DensityMatrix::maximally_mixed(n).hermitian();
  if (initial && initial->n() != n) throw Error(ErrorCode::kDimensionMismatch, "initial iterate");

  BridgeSolution sol;
  detail::AndersonMixer mixer(5);
  for (std::uint64_t it = 1; it <= cfg.max_iter; ++it) {
    PhiStages st;
    try {
      st = phi_stages(q, alpha, beta, x);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNotPd && !detail::smallest_above(apply(q, x), kEpsPd)) {
        throw Error(ErrorCode::kNotPositive, "Q(X) is not positive definite at iteration " + std::to_string(it));
      }
      throw;
    }
    const HermitianMatrix& fx = st.out;
    IterationRecord rec{(fx - x).frobenius_norm(), hilbert_distance(fx, x)};
    sol.trace.push_back(rec);
    sol.iterations = it;
    if (rec.residual <= cfg.tol && rec.hilbert_step <= 10.0 * cfg.tol) {
      sol.converged = true;
      sol.residual_fixed = rec.residual;
      break;
    }

    HermitianMatrix next;
    if (cfg.anderson) {
      next = detail::from_coords(mixer.next(detail::to_coords(x), detail::to_coords(fx)), n);
      next = (1.0 / next.trace()) * next;
      if (!detail::smallest_above(next, 10.0 * kEpsPd)) {
        mixer.reset();
        next = fx;
      }
    } else if (cfg.damping < 1.0) {
      next = (1.0 - cfg.damping) * x + cfg.damping * fx;
    } else {
      next = fx;
    }
    next = (1.0 / next.trace()) * next;
    if (!detail::smallest_above(next, kEpsPd)) {
      throw Error(ErrorCode::kNotPd, "iterate lost positive definiteness at iteration " + std::to_string(it));
    }
    x = std::move(next);
  }

  sol.U = DensityMatrix(x, DensityClass::kPdTrace1);
  if (!sol.converged) {
    sol.residual_fixed = sol.trace.empty() ? std::numeric_limits<double>::infinity() : sol.trace.back().residual;
    return sol;
  }
  auto scaled = build_scaled_channel(q, alpha, beta, sol.U);
  sol.S = std::move(scaled.S);
  sol.T = std::move(scaled.T);
  sol.O = std::move(scaled.O);
  sol.R = std::move(scaled.R);
  sol.residual_channel = scaled.residual_channel;
  sol.residual_bridge = scaled.residual_bridge;
  sol.unitarity_defect = scaled.unitarity_defect;
  return sol;
}

struct GPCertificate {
  HermitianMatrix phi_0, phi_T, phihat_0, phihat_T;
  ComplexMatrix chi_0, chi_T;
  double residual_q_phi_T = 0.0;        // ||Q(phi_T) - phi_0||
  double residual_qdual_phihat_0 = 0.0;  // ||Q'(phihat_0) - phihat_T||
  double residual_rho_0 = 0.0;           // ||rho_0 - chi_0 phihat_0 chi_0^*||
  double residual_rho_T = 0.0;           // ||rho_T - chi_T phihat_T chi_T^*||
  double residual_phi_0 = 0.0;           // ||phi_0 - chi_0^* chi_0||
  double residual_phi_T = 0.0;           // ||phi_T - chi_T^* chi_T||

  double max_residual() const {
    return std::max({residual_q_phi_T, residual_qdual_phihat_0, residual_rho_0, residual_rho_T,
                     residual_phi_0, residual_phi_T});
  }
};

// Certificate for the two-marginal system built from a converged solve with
// alpha = rho_T and beta = rho_0.
inline GPCertificate gp_certificate(const KrausMap& q, const DensityMatrix& rho_0, const DensityMatrix& rho_T,
                                    const BridgeSolution& sol) {
  if (!sol.converged || !sol.R) throw Error(ErrorCode::kNotConverged, "gp_certificate needs a converged solve");
  const HermitianMatrix& alpha = rho_T.hermitian();
  const HermitianMatrix& beta = rho_0.hermitian();
  const HermitianMatrix s(sol.S);
  const HermitianMatrix t(sol.T);
  const ComplexMatrix s_inv = pd_inverse(s).matrix();
  const ComplexMatrix& o = sol.O;

  GPCertificate c;
  c.phi_T = congruence(t.matrix(), alpha);
  c.phi_0 = congruence(s_inv * o, beta);
  c.phihat_0 = HermitianMatrix(s.matrix() * s.matrix());
  c.phihat_T = pd_power(t, -2.0);
  c.chi_0 = psd_sqrt(beta).matrix() * o.adjoint() * s_inv;
  c.chi_T = psd_sqrt(alpha).matrix() * t.matrix();

  c.residual_q_phi_T = (apply(q, c.phi_T) - c.phi_0).frobenius_norm();
  c.residual_qdual_phihat_0 = (apply_dual(q, c.phihat_0) - c.phihat_T).frobenius_norm();
  c.residual_rho_0 = (beta.matrix() - c.chi_0 * c.phihat_0.matrix() * c.chi_0.adjoint()).frobenius_norm();
  c.residual_rho_T = (alpha.matrix() - c.chi_T * c.phihat_T.matrix() * c.chi_T.adjoint()).frobenius_norm();
  c.residual_phi_0 = (c.phi_0.matrix() - c.chi_0.adjoint() * c.chi_0).frobenius_norm();
  c.residual_phi_T = (c.phi_T.matrix() - c.chi_T.adjoint() * c.chi_T).frobenius_norm();
  return c;
}

// Band of D_alpha(H(a, b, 1)).
inline std::pair<double, double> d_alpha_bounds(double a, double b, const DensityMatrix& alpha) {
  const std::size_t n = alpha.n();
  const double nn = static_cast<double>(n);
  const double slack = 1e-12;
  if (!(a > 0.0 && a <= 1.0 / nn + slack && 1.0 / nn <= b + slack && b <= 1.0 - (nn - 1.0) * a + slack)) {
    throw Error(ErrorCode::kBandInvalid, "d_alpha_bounds: need 0 < a <= 1/n <= b <= 1 - (n-1) a");
  }
  const auto ev = eigenvalues(alpha.hermitian());
  const double l1 = ev.front();
  const double ln = ev.back();
  const double c = a * ln / (a * ln + (nn - 1.0) * b * l1);
  const double d = b * l1 / (b * l1 + (nn - 1.0) * a * ln);
  return {c, d};
}

struct FixedPointCluster {
  DensityMatrix representative;
  std::uint64_t members = 0;
  std::uint64_t first_start = 0;
};

struct ProbeReport {
  std::vector<FixedPointCluster> clusters;
  std::uint64_t starts = 0;
  std::uint64_t non_converged = 0;
  std::uint64_t failed = 0;  // starts aborted by a numerical error
};

// Multi-start search for distinct fixed points of Phi_{alpha,beta}. Start i
// draws a Wishart initial density from seed + i; converged fixed points are
// clustered by Frobenius distance 10 sqrt(tol) in start order, and clusters
// are sorted canonically so the report does not depend on thread scheduling.
inline ProbeReport probe_uniqueness(const KrausMap& q, const DensityMatrix& alpha, const DensityMatrix& beta,
                                    std::uint64_t starts, const SolverConfig& cfg, std::uint64_t seed,
                                    unsigned threads = 0) {
  if (starts < 1) throw Error(ErrorCode::kValidationError, "probe_uniqueness needs starts >= 1");
  struct Outcome {
    std::optional<DensityMatrix> u;
    bool failed = false;
  };
  std::vector<Outcome> outcomes(starts);
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (std::uint64_t i = next++; i < starts; i = next++) {
      try {
        Rng rng(seed + i);
        const DensityMatrix x0 = random_density(q.n(), rng);
        BridgeSolution sol = solve_fixed_point(q, alpha, beta, cfg, x0);
        if (sol.converged) outcomes[i].u = sol.U;
      } catch (const Error&) {
        outcomes[i].failed = true;
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, starts));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  ProbeReport report;
  report.starts = starts;
  const double radius = 10.0 * std::sqrt(cfg.tol);
  for (std::uint64_t i = 0; i < starts; ++i) {
    const Outcome& o = outcomes[i];
    if (o.failed) {
      ++report.failed;
      continue;
    }
    if (!o.u) {
      ++report.non_converged;
      continue;
    }
    bool placed = false;
    for (auto& c : report.clusters) {
      if ((c.representative.hermitian() - o.u->hermitian()).frobenius_norm() <= radius) {
        ++c.members;
        placed = true;
        break;
      }
    }
    if (!placed) report.clusters.push_back({*o.u, 1, i});
  }

  auto key = [](const DensityMatrix& u) {
    double weighted = 0.0;
    for (std::size_t i = 0; i < u.n(); ++i) weighted += static_cast<double>(i + 1) * u.hermitian()(i, i).real();
    return weighted;
  };
  auto rounded = [](const DensityMatrix& u) {
    std::vector<double> r;
    for (const auto& z : u.matrix().data()) {
      r.push_back(std::round(z.real() * 1e8) / 1e8);
      r.push_back(std::round(z.imag() * 1e8) / 1e8);
    }
    return r;
  };
  std::sort(report.clusters.begin(), report.clusters.end(), [&](const auto& a, const auto& b) {
    const double ka = std::round(key(a.representative) * 1e8);
    const double kb = std::round(key(b.representative) * 1e8);
    if (ka != kb) return ka < kb;
    return rounded(a.representative) < rounded(b.representative);
  });
  return report;
}

struct Diagnostics {
  PositivityEstimate ab;
  double kappa_est = 1.0;
  double delta_bound = std::numeric_limits<double>::infinity();  // 2 log(b/a) >= Delta(Q)
  double birkhoff_bound = 1.0;                                    // tanh(delta_bound / 4)
  bool positive = false;
  std::optional<double> rho_P;
  std::vector<double> convergence_curve;  // dist(X_m, X_{m+1})
  bool converged = false;
};

// Contraction diagnostics: sampled a(Q), b(Q), the kappa and Birkhoff bounds
// they imply, rho(P) for unital channels, and the Hilbert-metric convergence
// curve of the Picard iteration.
inline Diagnostics contraction_diagnostics(const KrausMap& q, const DensityMatrix& alpha, const DensityMatrix& beta,
                                           const SolverConfig& cfg, std::uint64_t samples = 64,
                                           std::uint64_t refine_steps = 20) {
  Diagnostics d;
  d.ab = estimate_ab(q, samples, refine_steps, cfg.seed);
  constexpr double kPositivityFloor = 1e-12;
  d.positive = d.ab.a_est > kPositivityFloor;
  if (d.positive) {
    d.kappa_est = contraction_kappa(d.ab.a_est, d.ab.b_est);
    d.delta_bound = 2.0 * std::log(d.ab.b_est / d.ab.a_est);
    d.birkhoff_bound = std::tanh(d.delta_bound / 4.0);
  }
  if (q.is_unital()) d.rho_P = jacobian_P(q).spectral_radius;
  SolverConfig plain = cfg;
  plain.anderson = false;
  plain.damping = 1.0;
  try {
    const BridgeSolution sol = solve_fixed_point(q, alpha, beta, plain);
    d.converged = sol.converged;
    for (const auto& rec : sol.trace) d.convergence_curve.push_back(rec.hilbert_step);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNotPositive && e.code() != ErrorCode::kNotPd) throw;
  }
  return d;
}

}  // namespace bridgescale
