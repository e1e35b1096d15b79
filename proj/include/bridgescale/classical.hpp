#pragma once

// Classical bridge: scale a nonnegative matrix A to B = D1 A D2 with
// B^T 1 = 1 and B alpha = beta, together with the structural tests (AA^T
// irreducibility, full indecomposability, pattern feasibility) that decide
// when such a scaling can exist.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "bridgescale/config.hpp"
#include "bridgescale/error.hpp"
#include "bridgescale/linalg.hpp"
#include "bridgescale/matrix.hpp"

namespace bridgescale {

// Strictly positive probability vector, renormalized to sum 1 on construction.
class ProbVector {
 public:
  ProbVector() = default;
  explicit ProbVector(std::vector<double> entries) : p_(std::move(entries)) {
    if (p_.empty()) throw Error(ErrorCode::kValidationError, "empty probability vector");
    double sum = 0.0;
    for (double v : p_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::kNonFiniteInput, "non-finite probability");
      if (!(v > 0.0)) throw Error(ErrorCode::kValidationError, "probability entries must be positive");
      sum += v;
    }
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(p_.size());
    if (std::abs(sum - 1.0) > slack) {
      for (double& v : p_) v /= sum;
    }
  }

  static ProbVector uniform(std::size_t n) { return ProbVector(std::vector<double>(n, 1.0)); }

  std::size_t n() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const noexcept { return p_; }
  const std::vector<double>& vec() const noexcept { return p_; }

  friend bool operator==(const ProbVector&, const ProbVector&) = default;

 private:
  std::vector<double> p_;
};

struct MatrixStructure {
  bool strictly_positive = false;
  bool has_zero_row = false;
  bool has_zero_col = false;
  bool aat_irreducible = false;
  bool fully_indecomposable = false;
};

using PatternMatrix = DenseMatrix<unsigned char>;

inline PatternMatrix pattern_of(const RealMatrix& a) {
  PatternMatrix p(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) p(i, j) = a(i, j) > 0.0 ? 1 : 0;
  return p;
}

namespace detail {

inline bool pattern_aat_irreducible(const PatternMatrix& p) {
  const std::size_t n = p.rows();
  if (n == 0) return false;
  // Rows i and k are adjacent when they share a positive column.
  std::vector<char> seen(n, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t k = 0; k < n; ++k) {
      if (seen[k]) continue;
      for (std::size_t j = 0; j < p.cols(); ++j) {
        if (p(i, j) && p(k, j)) {
          seen[k] = 1;
          ++count;
          stack.push_back(k);
          break;
        }
      }
    }
  }
  return count == n;
}

// Kuhn augmenting-path matching; returns match_col[j] = row or npos.
inline std::vector<std::size_t> max_bipartite_matching(const PatternMatrix& p) {
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  const std::size_t n = p.rows();
  const std::size_t m = p.cols();
  std::vector<std::size_t> match_col(m, npos);
  std::vector<char> visited;
  std::function<bool(std::size_t)> augment = [&](std::size_t row) {
    for (std::size_t j = 0; j < m; ++j) {
      if (!p(row, j) || visited[j]) continue;
      visited[j] = 1;
      if (match_col[j] == npos || augment(match_col[j])) {
        match_col[j] = row;
        return true;
      }
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    visited.assign(m, 0);
    augment(i);
  }
  return match_col;
}

inline bool pattern_fully_indecomposable(const PatternMatrix& p) {
  constexpr auto npos = std::numeric_limits<std::size_t>::max();
  const std::size_t n = p.rows();
  if (n == 0 || !p.square()) return false;
  if (n == 1) return p(0, 0) != 0;
  const auto match_col = max_bipartite_matching(p);
  std::vector<std::size_t> col_of_row(n, npos);
  for (std::size_t j = 0; j < n; ++j) {
    if (match_col[j] == npos) return false;  // no perfect matching
    col_of_row[match_col[j]] = j;
  }
  // With columns permuted so the matching sits on the diagonal, full
  // indecomposability is irreducibility of the permuted pattern and for n >= 2
  // every row needs a positive entry off its matched column.
  auto reach_all = [&](bool forward) {
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      for (std::size_t k = 0; k < n; ++k) {
        if (seen[k]) continue;
        const bool edge = forward ? p(i, col_of_row[k]) != 0 : p(k, col_of_row[i]) != 0;
        if (edge) {
          seen[k] = 1;
          ++count;
          stack.push_back(k);
        }
      }
    }
    return count == n;
  };
  return reach_all(true) && reach_all(false);
}

}  // namespace detail

// Nonnegative square matrix with structure flags computed once at construction.
class NonnegMatrix {
 public:
  NonnegMatrix() = default;
  explicit NonnegMatrix(RealMatrix a) : a_(std::move(a)) {
    if (!a_.square() || a_.rows() == 0) {
      throw Error(ErrorCode::kDimensionMismatch, "nonnegative matrix must be square and nonempty");
    }
    if (!a_.all_finite()) throw Error(ErrorCode::kNonFiniteInput, "non-finite matrix entry");
    const std::size_t n = a_.rows();
    bool positive = true;
    std::vector<char> row_nz(n, 0), col_nz(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double v = a_(i, j);
        if (v < 0.0) throw Error(ErrorCode::kValidationError, "negative matrix entry");
        if (v > 0.0) {
          row_nz[i] = 1;
          col_nz[j] = 1;
        } else {
          positive = false;
        }
      }
    }
    const PatternMatrix p = pattern_of(a_);
    s_.strictly_positive = positive;
    s_.has_zero_row = std::count(row_nz.begin(), row_nz.end(), 0) > 0;
    s_.has_zero_col = std::count(col_nz.begin(), col_nz.end(), 0) > 0;
    s_.aat_irreducible = detail::pattern_aat_irreducible(p);
    s_.fully_indecomposable = detail::pattern_fully_indecomposable(p);
  }

  std::size_t n() const noexcept { return a_.rows(); }
  const RealMatrix& matrix() const noexcept { return a_; }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }
  const MatrixStructure& structure() const noexcept { return s_; }

  bool column_stochastic(double tol = 1e-12) const {
    for (std::size_t j = 0; j < n(); ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n(); ++i) s += a_(i, j);
      if (std::abs(s - 1.0) > tol) return false;
    }
    return true;
  }

 private:
  RealMatrix a_;
  MatrixStructure s_;
};

inline bool check_aat_irreducible(const NonnegMatrix& a) { return a.structure().aat_irreducible; }
inline bool check_fully_indecomposable(const NonnegMatrix& a) {
  return a.structure().fully_indecomposable;
}

// Phi_A(x) = D(x) A D(A^T x)^{-1}; column stochastic and invariant under x -> t x.
inline RealMatrix phi_A(const NonnegMatrix& a, std::span<const double> x) {
  const std::size_t n = a.n();
  if (x.size() != n) throw Error(ErrorCode::kDimensionMismatch, "phi_A: x has wrong length");
  if (a.structure().has_zero_col) throw Error(ErrorCode::kZeroColumn, "phi_A: A has a zero column");
  for (double v : x) {
    if (!(v > 0.0)) throw Error(ErrorCode::kValidationError, "phi_A: x must be strictly positive");
  }
  std::vector<double> colsum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) colsum[j] += a(i, j) * x[i];
  RealMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = x[i] * a(i, j) / colsum[j];
  return b;
}

inline ProbVector phi_A_alpha(const NonnegMatrix& a, const ProbVector& alpha, std::span<const double> x) {
  if (a.structure().has_zero_row) throw Error(ErrorCode::kZeroRow, "phi_A_alpha: A has a zero row");
  if (alpha.n() != a.n()) throw Error(ErrorCode::kDimensionMismatch, "phi_A_alpha: alpha length");
  return ProbVector(mat_vec(phi_A(a, x), alpha.values()));
}

// F = D(B alpha) - B D(alpha) B^T. Symmetric with F 1 = 0 for column-stochastic B.
inline RealMatrix jacobian_F(const RealMatrix& b, const ProbVector& alpha) {
  const std::size_t n = b.rows();
  if (!b.square() || alpha.n() != n) throw Error(ErrorCode::kDimensionMismatch, "jacobian_F");
  const auto beta = mat_vec(b, alpha.values());
  RealMatrix f(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = i; k < n; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += b(i, j) * alpha[j] * b(k, j);
      f(i, k) = (i == k ? beta[i] : 0.0) - s;
      f(k, i) = f(i, k);
    }
  }
  return f;
}

// Orthonormal basis (columns) of W = {w : 1^T w = 0}, Helmert construction.
inline RealMatrix sum_zero_basis(std::size_t n) {
  RealMatrix q(n, n == 0 ? 0 : n - 1);
  for (std::size_t k = 1; k < n; ++k) {
    const double norm = 1.0 / std::sqrt(static_cast<double>(k * (k + 1)));
    for (std::size_t i = 0; i < k; ++i) q(i, k - 1) = norm;
    q(k, k - 1) = -static_cast<double>(k) * norm;
  }
  return q;
}

// Matrix of the operator restricted to W in the sum_zero_basis coordinates.
inline RealMatrix restrict_to_sum_zero(const RealMatrix& m) {
  const RealMatrix q = sum_zero_basis(m.rows());
  return q.transpose() * m * q;
}

struct ClassicalSolution {
  ProbVector x_star;               // root of Phi_{A,alpha}(x) = beta
  std::vector<double> fixed_point;  // fixed point of the diagonal bridge map, = alpha o d2 normalized
  RealMatrix B;
  std::vector<double> d1;
  std::vector<double> d2;
  double residual_map = 0.0;
  double residual_stoch = 0.0;
  double residual_bridge = 0.0;
  // Smallest eigenvalue of F(B, alpha) on the sum-zero subspace. The residual
  // divided by this bounds the relative error of x_star; near the boundary of
  // the reachable set it collapses together with the residual.
  double jacobian_gap = std::numeric_limits<double>::infinity();
  std::uint64_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // l1 step size per iteration
};

namespace detail {

inline double l1_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline std::vector<double> normalized(std::vector<double> v) {
  const double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  return v;
}

// Diagonal specialization of the quantum bridge map:
// v = A x, w ~ beta / v, z ~ A^T w, N(x) ~ alpha / z.
inline std::vector<double> classical_bridge_map(const NonnegMatrix& a, const ProbVector& alpha,
                                                const ProbVector& beta, std::span<const double> x) {
  const std::size_t n = a.n();
  const auto v = mat_vec(a.matrix(), x);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = beta[i] / v[i];
  w = normalized(std::move(w));
  std::vector<double> z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) z[j] += a(i, j) * w[i];
  z = normalized(std::move(z));
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = alpha[j] / z[j];
  return normalized(std::move(out));
}

inline double bridge_residual(const NonnegMatrix& a, const ProbVector& alpha, const ProbVector& beta,
                              std::span<const double> u) {
  const auto b = phi_A(a, u);
  return l1_diff(mat_vec(b, alpha.values()), beta.values());
}

// Newton on G(u) = Phi_{A,alpha}(u) - beta in the multiplicative chart
// u -> u o (1 + d), where the Jacobian is F(Phi_A(u), alpha) restricted to W.
inline std::optional<std::vector<double>> classical_newton(const NonnegMatrix& a, const ProbVector& alpha,
                                                           const ProbVector& beta, std::vector<double> u,
                                                           double tol, int max_steps = 50) {
  const std::size_t n = a.n();
  double res = bridge_residual(a, alpha, beta, u);
  for (int step = 0; step < max_steps; ++step) {
    if (res <= tol) return u;
    const RealMatrix b = phi_A(a, u);
    const auto image = mat_vec(b, alpha.values());
    std::vector<double> rhs(n);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = beta[i] - image[i];
    RealMatrix f = jacobian_F(b, alpha);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) f(i, j) += 1.0 / static_cast<double>(n);
    std::vector<double> d;
    try {
      d = solve_linear(f, rhs);
    } catch (const Error&) {
      return std::nullopt;
    }
    bool improved = false;
    for (double lambda = 1.0; lambda >= 1.0 / 1024.0; lambda *= 0.5) {
      std::vector<double> trial(n);
      bool positive = true;
      for (std::size_t i = 0; i < n; ++i) {
        trial[i] = u[i] * (1.0 + lambda * d[i]);
        if (!(trial[i] > 0.0)) positive = false;
      }
      if (!positive) continue;
      trial = normalized(std::move(trial));
      const double r = bridge_residual(a, alpha, beta, trial);
      if (r < res) {
        u = std::move(trial);
        res = r;
        improved = true;
        break;
      }
    }
    if (!improved) return res <= tol ? std::optional(u) : std::nullopt;
  }
  return res <= tol ? std::optional(u) : std::nullopt;
}

// A root counts as located only if residual / jacobian_gap stays below this.
inline constexpr double kMaxRootUncertainty = 1e-3;

inline ClassicalSolution assemble_classical(const NonnegMatrix& a, const ProbVector& alpha,
                                            const ProbVector& beta, const std::vector<double>& u,
                                            double tol) {
  const std::size_t n = a.n();
  ClassicalSolution sol;
  sol.x_star = ProbVector(u);
  sol.B = phi_A(a, sol.x_star.values());
  sol.d1 = sol.x_star.vec();
  sol.d2.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) sol.d2[j] += a(i, j) * sol.x_star[i];
  for (double& v : sol.d2) v = 1.0 / v;
  std::vector<double> fp(n);
  for (std::size_t j = 0; j < n; ++j) fp[j] = alpha[j] * sol.d2[j];
  sol.fixed_point = normalized(std::move(fp));
  const auto image = mat_vec(sol.B, alpha.values());
  sol.residual_map = l1_diff(image, beta.values());
  sol.residual_bridge = sol.residual_map;
  double stoch = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sol.B(i, j);
    stoch = std::max(stoch, std::abs(s - 1.0));
  }
  sol.residual_stoch = stoch;
  if (n > 1) sol.jacobian_gap = symmetric_eigenvalues(restrict_to_sum_zero(jacobian_F(sol.B, alpha))).back();
  sol.converged = sol.residual_bridge <= tol && sol.residual_stoch <= tol &&
                  sol.residual_bridge <= kMaxRootUncertainty * sol.jacobian_gap;
  return sol;
}

}  // namespace detail

// Damped fixed-point iteration of the diagonal bridge map, finished by Newton
// refinement. Returns converged == false when the budget runs out, which is
// how NO_CONVERGENCE is reported.
inline ClassicalSolution solve_classical(const NonnegMatrix& a, const ProbVector& alpha, const ProbVector& beta,
                                         const SolverConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = a.n();
  if (alpha.n() != n || beta.n() != n) throw Error(ErrorCode::kDimensionMismatch, "solve_classical");
  if (a.structure().has_zero_row) throw Error(ErrorCode::kZeroRow, "solve_classical: A has a zero row");
  if (a.structure().has_zero_col) throw Error(ErrorCode::kZeroColumn, "solve_classical: A has a zero column");

  if (n == 1) {
    auto sol = detail::assemble_classical(a, alpha, beta, {1.0}, cfg.tol);
    sol.converged = true;
    return sol;
  }

  constexpr double kNewtonSwitch = 1e-6;
  constexpr double kMinDamping = 1.0 / 16.0;
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  double omega = cfg.damping;
  double prev = std::numeric_limits<double>::infinity();
  double last_newton = std::numeric_limits<double>::infinity();
  std::vector<double> trace;

  auto root_from = [&](std::span<const double> xf) {
    const auto v = mat_vec(a.matrix(), xf);
    std::vector<double> u(n);
    for (std::size_t i = 0; i < n; ++i) u[i] = beta[i] / v[i];
    return detail::normalized(std::move(u));
  };

  // Iterates this small have collapsed onto the boundary of the simplex;
  // there is no interior root to approach.
  constexpr double kCollapseFloor = 1e-200;
  for (std::uint64_t it = 1; it <= cfg.max_iter; ++it) {
    const auto nx = detail::classical_bridge_map(a, alpha, beta, x);
    if (!std::all_of(nx.begin(), nx.end(), [](double v) { return v > kCollapseFloor; })) break;
    const double step = detail::l1_diff(nx, x);
    trace.push_back(step);
    if (step <= kNewtonSwitch && step <= 0.1 * last_newton) {
      last_newton = step;
      if (auto u = detail::classical_newton(a, alpha, beta, root_from(nx), cfg.tol)) {
        auto sol = detail::assemble_classical(a, alpha, beta, *u, cfg.tol);
        sol.iterations = it;
        sol.trace = std::move(trace);
        if (sol.converged) return sol;
      }
    }
    if (step > prev) omega = std::max(0.5 * omega, kMinDamping);
    prev = step;
    for (std::size_t i = 0; i < n; ++i) x[i] = (1.0 - omega) * x[i] + omega * nx[i];
    x = detail::normalized(std::move(x));
    if (step == 0.0) break;
  }
  auto sol = detail::assemble_classical(a, alpha, beta, root_from(x), cfg.tol);
  sol.iterations = trace.size();
  sol.trace = std::move(trace);
  return sol;
}

// Does a nonnegative C with exactly the given positivity pattern exist with
// row sums row_targets and column sums col_targets? Each pattern cell gets a
// lower bound eps = 1e-9 * min(targets); the residual problem is a max-flow
// on the bipartite pattern graph.
inline bool pattern_feasibility(const PatternMatrix& pattern, std::span<const double> row_targets,
                                std::span<const double> col_targets) {
  const std::size_t nr = pattern.rows();
  const std::size_t nc = pattern.cols();
  if (row_targets.size() != nr || col_targets.size() != nc) {
    throw Error(ErrorCode::kDimensionMismatch, "pattern_feasibility: target lengths");
  }
  const double rsum = std::accumulate(row_targets.begin(), row_targets.end(), 0.0);
  const double csum = std::accumulate(col_targets.begin(), col_targets.end(), 0.0);
  if (std::abs(rsum - csum) > 1e-10) {
    throw Error(ErrorCode::kTargetMismatch, "row and column targets have different sums");
  }
  double min_target = std::numeric_limits<double>::infinity();
  for (double v : row_targets) min_target = std::min(min_target, v);
  for (double v : col_targets) min_target = std::min(min_target, v);
  if (!(min_target > 0.0)) throw Error(ErrorCode::kValidationError, "targets must be positive");
  const double eps = 1e-9 * min_target;

  // Nodes: 0 = source, 1..nr rows, nr+1..nr+nc cols, nr+nc+1 = sink.
  const std::size_t nodes = nr + nc + 2;
  const std::size_t source = 0;
  const std::size_t sink = nodes - 1;
  std::vector<std::vector<double>> cap(nodes, std::vector<double>(nodes, 0.0));
  double demand = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    double r = row_targets[i];
    for (std::size_t j = 0; j < nc; ++j) {
      if (pattern(i, j)) {
        r -= eps;
        cap[1 + i][1 + nr + j] = rsum;
      }
    }
    if (r < 0.0) return false;
    cap[source][1 + i] = r;
    demand += r;
  }
  for (std::size_t j = 0; j < nc; ++j) {
    double c = col_targets[j];
    for (std::size_t i = 0; i < nr; ++i)
      if (pattern(i, j)) c -= eps;
    if (c < 0.0) return false;
    cap[1 + nr + j][sink] = c;
  }

  // Edmonds-Karp.
  const double tiny = 1e-15 * std::max(1.0, rsum);
  double flow = 0.0;
  std::vector<std::size_t> parent(nodes);
  for (int guard = 0; guard < 100000; ++guard) {
    std::fill(parent.begin(), parent.end(), nodes);
    parent[source] = source;
    std::queue<std::size_t> q;
    q.push(source);
    while (!q.empty() && parent[sink] == nodes) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < nodes; ++v) {
        if (parent[v] == nodes && cap[u][v] > tiny) {
          parent[v] = u;
          q.push(v);
        }
      }
    }
    if (parent[sink] == nodes) break;
    double push = std::numeric_limits<double>::infinity();
    for (std::size_t v = sink; v != source; v = parent[v]) push = std::min(push, cap[parent[v]][v]);
    for (std::size_t v = sink; v != source; v = parent[v]) {
      cap[parent[v]][v] -= push;
      cap[v][parent[v]] += push;
    }
    flow += push;
  }
  return flow >= demand - 1e-12 * std::max(1.0, rsum);
}

}  // namespace bridgescale
