// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "bridgescale/bridge.hpp"
#include "bridgescale/classical.hpp"
#include "bridgescale/cli.hpp"
#include "bridgescale/io.hpp"
#include "bridgescale/kraus.hpp"
#include "bridgescale/random.hpp"

using namespace bridgescale;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

RealMatrix transpose_times(const RealMatrix& q, const RealMatrix& m) { return q.transpose() * m * q; }

double max_entry_diff(const RealMatrix& a, const RealMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// Criteria 1 and 4 share their solves.
struct QuantumBatch {
  int solved = 0, total = 0;
  double worst_fixed = 0.0, worst_channel = 0.0, worst_bridge = 0.0, worst_cert = 0.0;
  double seconds = 0.0;
  std::string failure;
};

QuantumBatch run_quantum_batch() {
  QuantumBatch b;
  const std::size_t dims[] = {2, 3, 4, 6, 8};
  std::mt19937_64 pick(2024);
  const auto start = std::chrono::steady_clock::now();
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = dims[t % 5];
    const std::size_t k = 2 + pick() % (2 * n - 1);
    const double p = 0.2 + 0.4 * std::uniform_real_distribution<double>(0.0, 1.0)(pick);
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(t);
    Rng rng(seed);
    const KrausMap q = random_channel(n, k, p, seed);
    const DensityMatrix alpha = random_density(n, rng);
    const DensityMatrix beta = random_density(n, rng);
    ++b.total;
    try {
      const BridgeSolution s = solve_fixed_point(q, alpha, beta);
      if (!s.converged) {
        if (b.failure.empty()) b.failure = "seed " + std::to_string(seed) + " did not converge";
        continue;
      }
      b.worst_fixed = std::max(b.worst_fixed, s.residual_fixed);
      b.worst_channel = std::max(b.worst_channel, s.residual_channel);
      b.worst_bridge = std::max(b.worst_bridge, s.residual_bridge);
      if (s.residual_fixed <= 1e-11 && s.residual_channel <= 1e-9 && s.residual_bridge <= 1e-9) ++b.solved;
      // rho_T = alpha, rho_0 = beta.
      const GPCertificate c = gp_certificate(q, beta, alpha, s);
      b.worst_cert = std::max(b.worst_cert, c.max_residual());
    } catch (const Error& e) {
      if (b.failure.empty()) b.failure = "seed " + std::to_string(seed) + ": " + e.what();
    }
  }
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

Outcome criterion1(const QuantumBatch& b) {
  Outcome o;
  o.ok = b.solved == 100 && b.total == 100 && b.seconds <= 60.0;
  o.detail = std::to_string(b.solved) + "/100 within bounds, max residual_fixed " + fmt("%.2e", b.worst_fixed) +
             ", channel " + fmt("%.2e", b.worst_channel) + ", bridge " + fmt("%.2e", b.worst_bridge) + ", " +
             fmt("%.1f", b.seconds) + " s";
  if (!b.failure.empty()) o.detail += "; " + b.failure;
  return o;
}

Outcome criterion2() {
  Outcome o;
  double worst_u = 0.0, worst_sums = 0.0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 2 + t % 7;
    const KrausMap q = random_unital_channel(n, 1 + t % (2 * n), 0.2 + 0.01 * t, 300 + t);
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(n);
    const BridgeSolution s = solve_fixed_point(q, mixed, mixed);
    o.ok = o.ok && s.converged;
    worst_u = std::max(worst_u, (s.U.hermitian() - mixed.hermitian()).frobenius_norm());

    Rng rng(400 + t);
    const NonnegMatrix a(random_positive_matrix(n, rng));
    const ClassicalSolution c = solve_classical(a, ProbVector::uniform(n), ProbVector::uniform(n));
    o.ok = o.ok && c.converged;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0, col = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row += c.B(i, j);
        col += c.B(j, i);
      }
      worst_sums = std::max({worst_sums, std::abs(row - 1.0), std::abs(col - 1.0)});
    }
  }
  o.ok = o.ok && worst_u <= 1e-10 && worst_sums <= 1e-10;
  o.detail = "40 unital + 40 positive instances, max ||U - I/n||_F " + fmt("%.2e", worst_u) +
             ", max row/col sum defect " + fmt("%.2e", worst_sums);
  return o;
}

Outcome criterion3() {
  Outcome o;
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 5;
    Rng rng(500 + t);
    const NonnegMatrix a(random_column_stochastic(n, rng));
    const ProbVector alpha = random_prob_vector(n, rng);
    const ProbVector beta = random_prob_vector(n, rng);
    const BridgeSolution s = solve_fixed_point(diagonal_embedding(a), DensityMatrix(diagonal_density(alpha.values())),
                                               DensityMatrix(diagonal_density(beta.values())));
    const ClassicalSolution c = solve_classical(a, alpha, beta);
    o.ok = o.ok && s.converged && c.converged;
    const auto du = s.U.hermitian().diag();
    for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(du[i] - c.fixed_point[i]));
  }
  o.ok = o.ok && worst <= 1e-8;
  o.detail = "50 instances, max |diag(U) - classical fixed point| " + fmt("%.2e", worst);
  return o;
}

Outcome criterion4(const QuantumBatch& b) {
  Outcome o;
  o.ok = b.solved == 100 && b.worst_cert <= 1e-8;
  o.detail = "max certificate residual " + fmt("%.2e", b.worst_cert) + " over " + std::to_string(b.solved) +
             " converged solves";
  return o;
}

Outcome criterion5() {
  Outcome o;
  int violations = 0;
  double worst_ratio1 = 0.0, worst_ratio2 = 0.0;
  Rng rng(55);
  std::uniform_real_distribution<double> uni(0.05, 0.95);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + t % 5;
    const double nn = static_cast<double>(n);
    const double p = uni(rng);
    const double kappa = (1.0 - p) / (1.0 - p + 2.0 * p / nn);
    const KrausMap q = depolarizing(n, p);
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(n);
    const HermitianMatrix x = random_pd(n, rng);
    const HermitianMatrix y = random_pd(n, rng);
    const double d = hilbert_distance(x, y);
    const double d1 = hilbert_distance(apply(q, x), apply(q, y));
    const double d2 = hilbert_distance(phi_stages(q, mixed, mixed, x).out, phi_stages(q, mixed, mixed, y).out);
    if (d1 > kappa * d + 1e-9) ++violations;
    if (d2 > kappa * kappa * d + 1e-9) ++violations;
    if (d > 0.0) {
      worst_ratio1 = std::max(worst_ratio1, d1 / (kappa * d));
      worst_ratio2 = std::max(worst_ratio2, d2 / (kappa * kappa * d));
    }
  }
  o.ok = violations == 0;
  o.detail = std::to_string(violations) + " violations in 1000 pairs, max dist ratio to bound " +
             fmt("%.4f", worst_ratio1) + " (Q), " + fmt("%.4f", worst_ratio2) + " (Theta)";
  return o;
}

Outcome criterion6() {
  Outcome o;
  int fails[4] = {0, 0, 0, 0};
  Rng rng(66);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + t % 5;
    const HermitianMatrix x = random_pd(n, rng, 2.0);
    const HermitianMatrix y = random_pd(n, rng, 2.0);
    const HermitianMatrix z = random_pd(n, rng, 2.0);
    const double dxy = hilbert_distance(x, y);
    if (std::abs(dxy - hilbert_distance(y, x)) > 1e-9) ++fails[0];
    if (std::abs(dxy - hilbert_distance(scale(rng) * x, scale(rng) * y)) > 1e-9) ++fails[1];
    if (hilbert_distance(x, z) > dxy + hilbert_distance(y, z) + 1e-9) ++fails[2];
    if (std::abs(dxy - hilbert_distance(pd_inverse(x), pd_inverse(y))) > 1e-9) ++fails[3];
  }
  o.ok = fails[0] + fails[1] + fails[2] + fails[3] == 0;
  o.detail = "failures of 10000: symmetry " + std::to_string(fails[0]) + ", scaling " + std::to_string(fails[1]) +
             ", triangle " + std::to_string(fails[2]) + ", inversion " + std::to_string(fails[3]);
  return o;
}

// Spectrum uniform on the slice {a <= l_i <= b, sum l = 1}, in a random basis.
HermitianMatrix random_in_band(std::size_t n, double a, double b, Rng& rng) {
  std::uniform_real_distribution<double> uni(a, b);
  std::vector<double> l(n);
  for (;;) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) s += (l[i] = uni(rng));
    l[n - 1] = 1.0 - s;
    if (l[n - 1] >= a && l[n - 1] <= b) break;
  }
  return congruence(random_unitary(n, rng), HermitianMatrix::diagonal(l));
}

Outcome criterion7() {
  Outcome o;
  int violations = 0;
  Rng rng(77);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + t % 5;
    const double nn = static_cast<double>(n);
    const double a = (0.3 + 0.7 * uni(rng)) / nn;
    const double b = 1.0 / nn + uni(rng) * (1.0 - (nn - 1.0) * a - 1.0 / nn);
    const DensityMatrix alpha(random_pd(n, rng, 1.5));
    const HermitianMatrix x = random_in_band(n, a, b, rng);
    const auto [c, d] = d_alpha_bounds(a, b, alpha);
    const auto ev = eigenvalues(d_alpha(alpha, x).hermitian());
    if (ev.back() < c - 1e-10 || ev.front() > d + 1e-10) ++violations;
  }
  o.ok = violations == 0;
  o.detail = std::to_string(violations) + " violations in 1000 trials";
  return o;
}

Outcome criterion8() {
  Outcome o;
  double worst_rel = 0.0;
  int points = 0, aat_cases = 0, nonpositive = 0;
  Rng rng(88);
  const double h = 1e-6;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 2 + t % 6;
    const double nn = static_cast<double>(n);
    const NonnegMatrix a(random_positive_matrix(n, rng));
    const ProbVector alpha = random_prob_vector(n, rng);
    const std::vector<double> x = random_prob_vector(n, rng).vec();
    // Chart y -> x o (1 + n y), in which the derivative is n F(Phi_A(x), alpha).
    RealMatrix fd(n, n);
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<double> xp(x), xm(x);
      xp[k] *= 1.0 + nn * h;
      xm[k] *= 1.0 - nn * h;
      const auto gp = phi_A_alpha(a, alpha, xp);
      const auto gm = phi_A_alpha(a, alpha, xm);
      for (std::size_t i = 0; i < n; ++i) fd(i, k) = (gp[i] - gm[i]) / (2.0 * h);
    }
    RealMatrix expected = jacobian_F(phi_A(a, x), alpha);
    expected *= nn;
    const RealMatrix w = sum_zero_basis(n);
    const RealMatrix fd_w = transpose_times(w, fd);
    const RealMatrix ex_w = transpose_times(w, expected);
    const double scale = max_abs(ex_w.data());
    worst_rel = std::max(worst_rel, max_entry_diff(fd_w, ex_w) / scale);
    ++points;
  }
  // Positivity on W for patterns with A A^T irreducible.
  for (int t = 0; t < 400 && aat_cases < 100; ++t) {
    const std::size_t n = 2 + t % 6;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    RealMatrix raw(n, n);
    for (double& v : raw.data()) v = uni(rng) < 0.4 ? 0.1 + uni(rng) : 0.0;
    const NonnegMatrix a(raw);
    if (a.structure().has_zero_row || a.structure().has_zero_col || !a.structure().aat_irreducible) continue;
    ++aat_cases;
    const ProbVector alpha = random_prob_vector(n, rng);
    const std::vector<double> x = random_prob_vector(n, rng).vec();
    const auto ev = symmetric_eigenvalues(restrict_to_sum_zero(jacobian_F(phi_A(a, x), alpha)));
    if (!(ev.back() > 0.0)) ++nonpositive;
  }
  o.ok = worst_rel <= 1e-5 && nonpositive == 0 && aat_cases >= 50;
  o.detail = std::to_string(points) + " points, max relative deviation " + fmt("%.2e", worst_rel) + "; " +
             std::to_string(nonpositive) + " non-positive F|W among " + std::to_string(aat_cases) +
             " AA^T-irreducible patterns";
  return o;
}

Outcome criterion9() {
  Outcome o;
  const std::string a = "[[1,1,0],[0,1,1],[1,0,1]]";
  const std::string sixth = "0.16666666666666666";
  const std::string third = "0.3333333333333333";
  const std::string target = "[" + sixth + "," + sixth + ",0.6666666666666667]";
  const std::string bad = R"({"kind":"classical","n":3,"A":)" + a + R"(,"alpha":[)" + third + "," + third + "," +
                          third + R"(],"beta":)" + target + "}";
  const std::string good =
      R"({"kind":"classical","n":3,"A":)" + a + R"(,"alpha":)" + target + R"(,"beta":)" + target + "}";
  std::vector<double> rows(3);
  const InstanceFile inst = parse_instance(bad);
  for (std::size_t i = 0; i < 3; ++i) rows[i] = 3.0 * inst.classical().beta[i];
  const std::vector<double> cols(3, 1.0);
  const bool feasible = pattern_feasibility(pattern_of(inst.classical().A.matrix()), rows, cols);

  std::ostringstream sink;
  const int bad_exit = cli::cmd_solve(bad, {}, sink, sink);
  const int good_exit = cli::cmd_solve(good, {}, sink, sink);
  o.ok = !feasible && bad_exit == 2 && good_exit == 0;
  o.detail = std::string("pattern_feasibility ") + (feasible ? "true" : "false") + ", solve exit " +
             std::to_string(bad_exit) + "; alpha = beta exit " + std::to_string(good_exit);
  return o;
}

Outcome criterion10() {
  Outcome o;
  double worst_rho = 0.0, worst_asym = 0.0, lowest_ev = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 5;
    const KrausMap q = random_unital_channel(n, 1 + t % (2 * n), 0.2 + 0.01 * t, 600 + t);
    const LinearizationP p = jacobian_P(q);
    worst_rho = std::max(worst_rho, p.spectral_radius);
    worst_asym = std::max(worst_asym, max_entry_diff(p.matrix, p.matrix.transpose()));
    lowest_ev = std::min(lowest_ev, symmetric_eigenvalues(p.matrix).back());
  }
  double id_dev = 0.0;
  for (std::size_t n = 2; n <= 6; ++n) id_dev = std::max(id_dev, std::abs(jacobian_P(identity_channel(n)).spectral_radius - 1.0));
  o.ok = worst_rho < 1.0 - 1e-6 && worst_asym <= 1e-12 && lowest_ev >= -1e-12 && id_dev <= 1e-10;
  o.detail = "max rho(P) " + fmt("%.6f", worst_rho) + ", asymmetry " + fmt("%.1e", worst_asym) +
             ", min eigenvalue " + fmt("%.1e", lowest_ev) + "; identity |rho - 1| " + fmt("%.1e", id_dev);
  return o;
}

// alpha = (I/n + E) with E traceless Hermitian and ||E||_F = radius.
DensityMatrix near_mixed(std::size_t n, double radius, Rng& rng) {
  HermitianMatrix e = random_hermitian(n, rng);
  e = e - (e.trace() / static_cast<double>(n)) * HermitianMatrix::identity(n);
  e = (radius / e.frobenius_norm()) * e;
  return DensityMatrix(DensityMatrix::maximally_mixed(n).hermitian() + e);
}

Outcome criterion11() {
  Outcome o;
  int single = 0, total = 0;
  std::uint64_t non_converged = 0;
  SolverConfig cfg;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const std::size_t n = 2 + seed % 4;
    const KrausMap q = random_unital_channel(n, n, 0.3, 700 + seed);
    const DensityMatrix mixed = DensityMatrix::maximally_mixed(n);
    Rng rng(800 + seed);
    const DensityMatrix alpha = near_mixed(n, 0.05, rng);
    const DensityMatrix beta = near_mixed(n, 0.05, rng);
    for (const auto& [a, b] : {std::pair{mixed, mixed}, std::pair{alpha, beta}}) {
      const ProbeReport r = probe_uniqueness(q, a, b, 32, cfg, seed);
      ++total;
      non_converged += r.non_converged + r.failed;
      if (r.clusters.size() == 1) ++single;
    }
  }
  o.ok = single == total;
  o.detail = std::to_string(single) + "/" + std::to_string(total) + " probes with exactly one cluster, " +
             std::to_string(non_converged) + " starts unconverged";
  return o;
}

}  // namespace

int main() {
  const QuantumBatch batch = run_quantum_batch();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"quantum bridge end-to-end", [&] { return criterion1(batch); }},
      {"Sinkhorn analogs", criterion2},
      {"diagonal embedding equivalence", criterion3},
      {"two-marginal certificate", [&] { return criterion4(batch); }},
      {"depolarizing contraction bounds", criterion5},
      {"Hilbert metric suite", criterion6},
      {"D_alpha band containment", criterion7},
      {"classical Jacobian", criterion8},
      {"boundary counterexample", criterion9},
      {"unital linearization", criterion10},
      {"uniqueness probing", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.ok ? 0 : 1;
    std::printf("%s %2zu %s: %s\n", o.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
