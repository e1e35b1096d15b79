#pragma once

// Command implementations behind the bridgescale executable. Each command
// takes already-read input text and writes its result document to `out` and
// log lines to `err`, returning the process exit code.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bridgescale/bridge.hpp"
#include "bridgescale/classical.hpp"
#include "bridgescale/error.hpp"
#include "bridgescale/io.hpp"
#include "bridgescale/kraus.hpp"
#include "bridgescale/random.hpp"

namespace bridgescale::cli {

enum ExitCode : int {
  kExitSuccess = 0,
  kExitUsage = 1,
  kExitNoConvergence = 2,
  kExitValidation = 3,
  kExitNumerical = 4,
};

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotConverged:
      return kExitNoConvergence;
    case ErrorCode::kParseError:
    case ErrorCode::kValidationError:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kNonFiniteInput:
    case ErrorCode::kNotStochastic:
    case ErrorCode::kTargetMismatch:
    case ErrorCode::kZeroRow:
    case ErrorCode::kZeroColumn:
    case ErrorCode::kBandInvalid:
      return kExitValidation;
    default:
      return kExitNumerical;
  }
}

enum class Format { kJson, kText };

struct SolveOptions {
  std::optional<double> tol;
  std::optional<std::uint64_t> max_iter;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> starts;
  Format format = Format::kJson;
  bool certificate = false;
};

struct GenOptions {
  std::string kind = "quantum";
  std::size_t n = 2;
  std::size_t k = 0;  // 0 picks n
  double positivity = 0.2;
  std::uint64_t seed = 0;
  bool unital = false;
  bool uniform_marginals = false;
};

struct DiagnoseOptions {
  std::optional<std::uint64_t> seed;
  std::uint64_t samples = 64;
  std::uint64_t refine_steps = 20;
};

struct ProbeOptions {
  std::optional<std::uint64_t> starts;
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

namespace detail {

inline std::string num(double v) { return encode(v).dump(); }

inline void apply_overrides(SolverConfig& cfg, const SolveOptions& o) {
  if (o.tol) cfg.tol = *o.tol;
  if (o.max_iter) cfg.max_iter = *o.max_iter;
  if (o.seed) cfg.seed = *o.seed;
  if (o.starts) cfg.starts = *o.starts;
  cfg.validate();
}

inline bool is_uniform(const ProbVector& p) {
  const double u = 1.0 / static_cast<double>(p.n());
  for (double v : p.values())
    if (std::abs(v - u) > 1e-12) return false;
  return true;
}

// Runs the command body and turns library errors into exit codes.
template <class Body>
int guarded(std::ostream& err, std::string_view command, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << command << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << command << ": internal error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

inline void text_row(std::ostream& out, std::string_view key, const std::string& value) {
  out << key << ' ' << value << '\n';
}

inline int solve_classical_cmd(const InstanceFile& inst, const SolveOptions& opts, std::ostream& out,
                               std::ostream& err) {
  const auto& c = inst.classical();
  if (opts.certificate) err << "solve: --certificate applies to quantum instances only; ignored\n";
  const ClassicalSolution sol = solve_classical(c.A, c.alpha, c.beta, inst.config);

  std::optional<bool> feasible;
  if (is_uniform(c.alpha)) {
    // With uniform alpha the targets are B 1 = n beta and B^T 1 = 1.
    std::vector<double> rows(c.beta.vec());
    for (double& r : rows) r *= static_cast<double>(c.A.n());
    const std::vector<double> cols(c.A.n(), 1.0);
    feasible = pattern_feasibility(pattern_of(c.A.matrix()), rows, cols);
  }

  if (opts.format == Format::kText) {
    text_row(out, "kind", "classical");
    text_row(out, "n", std::to_string(c.A.n()));
    text_row(out, "converged", sol.converged ? "true" : "false");
    text_row(out, "iterations", std::to_string(sol.iterations));
    text_row(out, "residual_map", num(sol.residual_map));
    text_row(out, "residual_stoch", num(sol.residual_stoch));
    text_row(out, "residual_bridge", num(sol.residual_bridge));
    if (feasible) text_row(out, "pattern_feasible", *feasible ? "true" : "false");
  } else {
    json doc = to_json(sol);
    if (feasible) doc["pattern_feasible"] = *feasible;
    out << doc.dump(2) << "\n";
  }
  if (!sol.converged) {
    err << "solve: NO_CONVERGENCE after " << sol.iterations << " iterations";
    if (feasible && !*feasible) err << " (target is outside the pattern's reachable set)";
    err << "\n";
    return kExitNoConvergence;
  }
  err << "solve: converged in " << sol.iterations << " iterations\n";
  return kExitSuccess;
}

inline int solve_quantum_cmd(const InstanceFile& inst, const SolveOptions& opts, std::ostream& out,
                             std::ostream& err) {
  const auto& qi = inst.quantum();
  const SolverConfig& cfg = inst.config;
  // Start 0 is I/n; further starts (only with starts > 1) are Wishart draws
  // from seed + i, tried in order until one converges.
  BridgeSolution sol = solve_fixed_point(qi.Q, qi.alpha, qi.beta, cfg);
  for (std::uint64_t i = 1; !sol.converged && i < cfg.starts; ++i) {
    err << "solve: start " << (i - 1) << " did not converge; retrying from a random start\n";
    Rng rng(cfg.seed + i);
    sol = solve_fixed_point(qi.Q, qi.alpha, qi.beta, cfg, random_density(qi.Q.n(), rng));
  }

  std::optional<GPCertificate> cert;
  if (opts.certificate && sol.converged) cert = gp_certificate(qi.Q, qi.beta, qi.alpha, sol);

  if (opts.format == Format::kText) {
    text_row(out, "kind", "quantum");
    text_row(out, "n", std::to_string(qi.Q.n()));
    text_row(out, "converged", sol.converged ? "true" : "false");
    text_row(out, "iterations", std::to_string(sol.iterations));
    text_row(out, "residual_fixed", num(sol.residual_fixed));
    text_row(out, "residual_channel", num(sol.residual_channel));
    text_row(out, "residual_bridge", num(sol.residual_bridge));
    text_row(out, "unitarity_defect", num(sol.unitarity_defect));
    if (cert) {
      text_row(out, "residual_q_phi_T", num(cert->residual_q_phi_T));
      text_row(out, "residual_qdual_phihat_0", num(cert->residual_qdual_phihat_0));
      text_row(out, "residual_rho_0", num(cert->residual_rho_0));
      text_row(out, "residual_rho_T", num(cert->residual_rho_T));
      text_row(out, "residual_phi_0", num(cert->residual_phi_0));
      text_row(out, "residual_phi_T", num(cert->residual_phi_T));
    }
  } else if (opts.certificate) {
    json doc{{"solution", to_json(sol)}, {"certificate", cert ? to_json(*cert) : json()}};
    out << doc.dump(2) << "\n";
  } else {
    out << serialize_solution(sol);
  }
  if (!sol.converged) {
    err << "solve: NO_CONVERGENCE after " << sol.iterations << " iterations\n";
    return kExitNoConvergence;
  }
  err << "solve: converged in " << sol.iterations << " iterations\n";
  return kExitSuccess;
}

struct Check {
  std::string name;
  double value;
  double bound;
  bool ok() const { return std::isfinite(value) && value <= bound; }
};

inline std::vector<Check> verify_classical(const ClassicalInstance& c, const StoredClassicalSolution& s,
                                           double tol) {
  const std::size_t n = c.A.n();
  std::vector<Check> checks;
  // B against D(d1) A D(d2), entrywise relative.
  double scaling = 0.0;
  bool pattern_ok = true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double rebuilt = s.d1[i] * c.A(i, j) * s.d2[j];
      scaling = std::max(scaling, std::abs(s.B(i, j) - rebuilt) / std::max(1.0, std::abs(rebuilt)));
      if ((s.B(i, j) > 0.0) != (c.A(i, j) > 0.0)) pattern_ok = false;
    }
  }
  checks.push_back({"scaling_defect", scaling, 1e-10});
  checks.push_back({"pattern_defect", pattern_ok ? 0.0 : 1.0, 0.0});
  double stoch = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += s.B(i, j);
    stoch = std::max(stoch, std::abs(sum - 1.0));
  }
  checks.push_back({"residual_stoch", stoch, tol});
  const auto image = mat_vec(s.B, c.alpha.values());
  double bridge = 0.0;
  for (std::size_t i = 0; i < n; ++i) bridge += std::abs(image[i] - c.beta[i]);
  checks.push_back({"residual_bridge", bridge, tol});
  return checks;
}

inline std::vector<Check> verify_quantum(const QuantumInstance& qi, const StoredBridgeSolution& s, double tol) {
  if (!s.S || !s.T || !s.O || !s.R) {
    throw Error(ErrorCode::kNotConverged, "solution carries no scaled channel");
  }
  const std::size_t n = qi.Q.n();
  if (s.R->size() != qi.Q.k()) {
    throw Error(ErrorCode::kDimensionMismatch, "solution and instance have different Kraus counts");
  }
  std::vector<Check> checks;
  const DensityMatrix u(s.U, DensityClass::kPdTrace1);
  const HermitianMatrix fu = phi_stages(qi.Q, qi.alpha, qi.beta, u.hermitian()).out;
  checks.push_back({"residual_fixed", (fu - u.hermitian()).frobenius_norm(), tol});

  const ComplexMatrix left = s.O->adjoint() * *s.S;
  double kraus = 0.0;
  for (std::size_t i = 0; i < qi.Q.k(); ++i) {
    kraus = std::max(kraus, ((*s.R)[i] - left * qi.Q.ops()[i] * *s.T).frobenius_norm());
  }
  checks.push_back({"kraus_defect", kraus, 100.0 * tol});
  checks.push_back(
      {"unitarity_defect", (*s.O * s.O->adjoint() - ComplexMatrix::identity(n)).frobenius_norm(), 100.0 * tol});

  const KrausMap r(*s.R);
  checks.push_back({"residual_channel", r.channel_residual(), 100.0 * tol});
  checks.push_back(
      {"residual_bridge", (apply(r, qi.alpha.hermitian()) - qi.beta.hermitian()).frobenius_norm(), 100.0 * tol});
  return checks;
}

}  // namespace detail

inline int cmd_solve(std::string_view instance_text, const SolveOptions& opts, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, "solve", [&] {
    InstanceFile inst = parse_instance(instance_text);
    try {
      detail::apply_overrides(inst.config, opts);
    } catch (const Error& e) {
      err << "solve: " << e.what() << "\n";
      return static_cast<int>(kExitUsage);
    }
    return inst.is_quantum() ? detail::solve_quantum_cmd(inst, opts, out, err)
                             : detail::solve_classical_cmd(inst, opts, out, err);
  });
}

// Recomputes every residual from the instance and the raw solution fields;
// stored residuals are ignored.
inline int cmd_verify(std::string_view solution_text, std::string_view instance_text, std::ostream& out,
                      std::ostream& err, std::optional<double> tol_override = std::nullopt) {
  return detail::guarded(err, "verify", [&]() -> int {
    const InstanceFile inst = parse_instance(instance_text);
    const StoredSolution stored = parse_solution(solution_text);
    const double tol = tol_override.value_or(inst.config.tol);

    std::vector<detail::Check> checks;
    bool converged = false;
    if (const auto* c = std::get_if<StoredClassicalSolution>(&stored)) {
      if (inst.is_quantum()) throw Error(ErrorCode::kValidationError, "classical solution for a quantum instance");
      if (c->B.rows() != inst.n()) throw Error(ErrorCode::kDimensionMismatch, "solution dimension differs");
      converged = c->converged;
      checks = detail::verify_classical(inst.classical(), *c, tol);
    } else {
      const auto& q = std::get<StoredBridgeSolution>(stored);
      if (!inst.is_quantum()) throw Error(ErrorCode::kValidationError, "quantum solution for a classical instance");
      if (q.U.n() != inst.n()) throw Error(ErrorCode::kDimensionMismatch, "solution dimension differs");
      converged = q.converged;
      if (!converged) {
        err << "verify: solution is marked as not converged\n";
        return kExitNoConvergence;
      }
      checks = detail::verify_quantum(inst.quantum(), q, tol);
    }

    bool all_ok = converged;
    for (const auto& c : checks) {
      detail::text_row(out, c.name, detail::num(c.value) + " " + detail::num(c.bound) + (c.ok() ? " ok" : " FAIL"));
      all_ok = all_ok && c.ok();
    }
    detail::text_row(out, "verdict", all_ok ? "ok" : "FAIL");
    return all_ok ? kExitSuccess : kExitNoConvergence;
  });
}

inline int cmd_gen(const GenOptions& opts, std::ostream& out, std::ostream& err) {
  if (opts.n < 1 || !(opts.positivity >= 0.0 && opts.positivity <= 1.0) ||
      (opts.kind != "quantum" && opts.kind != "classical")) {
    err << "gen: need --kind classical|quantum, --n >= 1 and --positivity in [0, 1]\n";
    return kExitUsage;
  }
  return detail::guarded(err, "gen", [&] {
    InstanceFile inst;
    inst.config.seed = opts.seed;
    // Marginals use a stream separate from the channel's.
    Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    if (opts.kind == "quantum") {
      const std::size_t k = opts.k == 0 ? opts.n : opts.k;
      KrausMap q = opts.unital ? random_unital_channel(opts.n, k, opts.positivity, opts.seed)
                               : random_channel(opts.n, k, opts.positivity, opts.seed);
      DensityMatrix alpha = DensityMatrix::maximally_mixed(opts.n);
      DensityMatrix beta = alpha;
      if (!opts.uniform_marginals) {
        alpha = random_density(opts.n, rng);
        beta = random_density(opts.n, rng);
      }
      inst.problem = QuantumInstance{std::move(q), std::move(alpha), std::move(beta)};
    } else {
      NonnegMatrix a(random_positive_matrix(opts.n, rng));
      ProbVector alpha = ProbVector::uniform(opts.n);
      ProbVector beta = alpha;
      if (!opts.uniform_marginals) {
        alpha = random_prob_vector(opts.n, rng);
        beta = random_prob_vector(opts.n, rng);
      }
      inst.problem = ClassicalInstance{std::move(a), std::move(alpha), std::move(beta)};
    }
    out << serialize_instance(inst);
    return static_cast<int>(kExitSuccess);
  });
}

inline int cmd_diagnose(std::string_view instance_text, const DiagnoseOptions& opts, std::ostream& out,
                        std::ostream& err) {
  return detail::guarded(err, "diagnose", [&] {
    InstanceFile inst = parse_instance(instance_text);
    if (!inst.is_quantum()) throw Error(ErrorCode::kValidationError, "diagnose needs a quantum instance");
    if (opts.seed) inst.config.seed = *opts.seed;
    const auto& qi = inst.quantum();
    const Diagnostics d = contraction_diagnostics(qi.Q, qi.alpha, qi.beta, inst.config, opts.samples,
                                                  opts.refine_steps);
    json doc{{"a_est", d.ab.a_est},
             {"b_est", d.ab.b_est},
             {"samples", d.ab.samples},
             {"certified", d.ab.certified},
             {"positive", d.positive},
             {"kappa_est", d.kappa_est},
             {"delta_bound", encode(d.delta_bound)},
             {"birkhoff_bound", d.birkhoff_bound},
             {"unital", qi.Q.is_unital()},
             {"rho_P", d.rho_P ? json(*d.rho_P) : json()},
             {"converged", d.converged},
             {"convergence_curve", encode(std::span<const double>(d.convergence_curve))}};
    out << doc.dump(2) << "\n";
    if (!d.positive) err << "diagnose: a_est is not positive; kappa reported as 1\n";
    return static_cast<int>(kExitSuccess);
  });
}

inline int cmd_probe(std::string_view instance_text, const ProbeOptions& opts, std::ostream& out,
                     std::ostream& err) {
  return detail::guarded(err, "probe", [&] {
    InstanceFile inst = parse_instance(instance_text);
    if (!inst.is_quantum()) throw Error(ErrorCode::kValidationError, "probe needs a quantum instance");
    if (opts.seed) inst.config.seed = *opts.seed;
    const std::uint64_t starts = opts.starts.value_or(inst.config.starts);
    const auto& qi = inst.quantum();
    const ProbeReport rep =
        probe_uniqueness(qi.Q, qi.alpha, qi.beta, starts, inst.config, inst.config.seed, opts.threads);
    json clusters = json::array();
    for (const auto& c : rep.clusters) {
      clusters.push_back(
          json{{"U", encode(c.representative.hermitian())}, {"members", c.members}, {"first_start", c.first_start}});
    }
    json doc{{"starts", rep.starts},
             {"seed", inst.config.seed},
             {"distinct_fixed_points", rep.clusters.size()},
             {"non_converged", rep.non_converged},
             {"failed", rep.failed},
             {"clusters", std::move(clusters)}};
    out << doc.dump(2) << "\n";
    err << "probe: " << rep.clusters.size() << " cluster(s) from " << rep.starts << " starts\n";
    return static_cast<int>(kExitSuccess);
  });
}

}  // namespace bridgescale::cli
