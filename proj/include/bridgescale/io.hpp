#pragma once

// JSON encoding of problem instances, solutions and certificates.
//
// Instance schema (UTF-8 JSON, doubles only):
//   {
//     "kind":   "classical" | "quantum",
//     "n":      dimension,
//     "A":      [[a_11, ...], ...]                      (classical, row-major)
//     "kraus":  [ [[[re, im], ...], ...], ... ]          (quantum, list of n x n matrices)
//     "alpha":  [p_1, ...]  or  [[[re, im], ...], ...]   (vector / density matrix)
//     "beta":   same shape as alpha
//     "config": {"tol", "max_iter", "damping", "seed", "starts", "anderson"}   (all optional)
//   }
// Complex numbers are two-element arrays [re, im]. Doubles are written with
// the shortest representation that round-trips.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "bridgescale/bridge.hpp"
#include "bridgescale/classical.hpp"
#include "bridgescale/config.hpp"
#include "bridgescale/error.hpp"
#include "bridgescale/kraus.hpp"
#include "bridgescale/linalg.hpp"

namespace bridgescale {

using json = nlohmann::json;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kNormalizationTol = 1e-9;

struct ClassicalInstance {
  NonnegMatrix A;
  ProbVector alpha;
  ProbVector beta;
};

struct QuantumInstance {
  KrausMap Q;
  DensityMatrix alpha;
  DensityMatrix beta;
};

struct InstanceFile {
  std::variant<ClassicalInstance, QuantumInstance> problem;
  SolverConfig config;

  bool is_quantum() const { return std::holds_alternative<QuantumInstance>(problem); }
  std::string_view kind() const { return is_quantum() ? "quantum" : "classical"; }
  std::size_t n() const {
    return is_quantum() ? std::get<QuantumInstance>(problem).Q.n() : std::get<ClassicalInstance>(problem).A.n();
  }
  const ClassicalInstance& classical() const { return std::get<ClassicalInstance>(problem); }
  const QuantumInstance& quantum() const { return std::get<QuantumInstance>(problem); }
};

// ---------------------------------------------------------------------------
// Encoding helpers

inline json encode(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline json encode(cplx z) { return json::array({z.real(), z.imag()}); }

inline json encode(std::span<const double> v) {
  json a = json::array();
  for (double x : v) a.push_back(encode(x));
  return a;
}

inline json encode(const RealMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json encode(const ComplexMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.cols(); ++j) row.push_back(encode(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json encode(const HermitianMatrix& m) { return encode(m.matrix()); }

inline json encode(const KrausMap& q) {
  json ops = json::array();
  for (const auto& a : q.ops()) ops.push_back(encode(a));
  return ops;
}

inline json encode(const SolverConfig& c) {
  return json{{"tol", c.tol},     {"max_iter", c.max_iter}, {"damping", c.damping},
              {"seed", c.seed},   {"starts", c.starts},     {"anderson", c.anderson}};
}

// ---------------------------------------------------------------------------
// Decoding helpers. Shape problems are VALIDATION_ERROR; JSON type problems
// inside a well-formed document are also reported as VALIDATION_ERROR.

namespace detail {

[[noreturn]] inline void invalid(const std::string& what) { throw Error(ErrorCode::kValidationError, what); }

inline double decode_double(const json& j, const std::string& what) {
  if (!j.is_number()) invalid(what + ": expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) invalid(what + ": non-finite number");
  return v;
}

inline cplx decode_complex(const json& j, const std::string& what) {
  if (j.is_number()) return {decode_double(j, what), 0.0};
  if (!j.is_array() || j.size() != 2) invalid(what + ": complex entries are [re, im]");
  return {decode_double(j[0], what), decode_double(j[1], what)};
}

inline std::vector<double> decode_vector(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) invalid(what + ": expected an array of length " + std::to_string(n));
  std::vector<double> v;
  v.reserve(n);
  for (const auto& x : j) v.push_back(decode_double(x, what));
  return v;
}

inline RealMatrix decode_real_matrix(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) invalid(what + ": expected " + std::to_string(n) + " rows");
  RealMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = decode_vector(j[i], n, what);
    for (std::size_t k = 0; k < n; ++k) m(i, k) = row[k];
  }
  return m;
}

inline ComplexMatrix decode_complex_matrix(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) invalid(what + ": expected " + std::to_string(n) + " rows");
  ComplexMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_array() || j[i].size() != n) invalid(what + ": expected " + std::to_string(n) + " columns");
    for (std::size_t k = 0; k < n; ++k) m(i, k) = decode_complex(j[i][k], what);
  }
  return m;
}

inline HermitianMatrix decode_hermitian(const json& j, std::size_t n, const std::string& what) {
  const ComplexMatrix m = decode_complex_matrix(j, n, what);
  const double defect = (m - m.adjoint()).frobenius_norm();
  if (defect > kHermitianTol * std::max(1.0, m.frobenius_norm())) invalid(what + ": not Hermitian");
  return HermitianMatrix(m);
}

inline DensityMatrix decode_density(const json& j, std::size_t n, const std::string& what) {
  const HermitianMatrix h = decode_hermitian(j, n, what);
  if (std::abs(h.trace() - 1.0) > kNormalizationTol) invalid(what + ": trace is not 1");
  try {
    return DensityMatrix(h, DensityClass::kPdTrace1);
  } catch (const Error&) {
    invalid(what + ": not positive definite");
  }
}

inline ProbVector decode_prob(const json& j, std::size_t n, const std::string& what) {
  const auto v = decode_vector(j, n, what);
  double sum = 0.0;
  for (double x : v) {
    if (!(x > 0.0)) invalid(what + ": entries must be positive");
    sum += x;
  }
  if (std::abs(sum - 1.0) > kNormalizationTol) invalid(what + ": entries do not sum to 1");
  return ProbVector(v);
}

inline std::uint64_t decode_count(const json& j, const std::string& what) {
  if (!j.is_number_unsigned()) invalid(what + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline SolverConfig decode_config(const json& j) {
  SolverConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) invalid("config must be an object");
  if (j.contains("tol")) c.tol = decode_double(j["tol"], "config.tol");
  if (j.contains("max_iter")) c.max_iter = decode_count(j["max_iter"], "config.max_iter");
  if (j.contains("damping")) c.damping = decode_double(j["damping"], "config.damping");
  if (j.contains("seed")) c.seed = decode_count(j["seed"], "config.seed");
  if (j.contains("starts")) c.starts = decode_count(j["starts"], "config.starts");
  if (j.contains("anderson")) {
    if (!j["anderson"].is_boolean()) invalid("config.anderson must be a boolean");
    c.anderson = j["anderson"].get<bool>();
  }
  c.validate();
  return c;
}

inline json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, e.what());
  }
}

inline const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) invalid(std::string("missing key '") + key + "'");
  return doc[key];
}

}  // namespace detail

// Parses and validates an instance. Everything a solver would reject up front
// is rejected here with VALIDATION_ERROR.
inline InstanceFile parse_instance(std::string_view text) {
  const json doc = detail::parse_json(text);
  if (!doc.is_object()) detail::invalid("instance must be a JSON object");
  const json& kind = detail::require(doc, "kind");
  if (!kind.is_string()) detail::invalid("kind must be a string");
  const std::uint64_t n = detail::decode_count(detail::require(doc, "n"), "n");
  if (n < 1) detail::invalid("n must be at least 1");

  InstanceFile inst;
  inst.config = detail::decode_config(doc.value("config", json()));
  try {
    if (kind == "classical") {
      // Decoded into locals first: a throwing initializer inside a braced
      // aggregate leaks the members already built on some GCC versions.
      NonnegMatrix a(detail::decode_real_matrix(detail::require(doc, "A"), n, "A"));
      ProbVector alpha = detail::decode_prob(detail::require(doc, "alpha"), n, "alpha");
      ProbVector beta = detail::decode_prob(detail::require(doc, "beta"), n, "beta");
      ClassicalInstance ci{std::move(a), std::move(alpha), std::move(beta)};
      if (ci.A.structure().has_zero_row) detail::invalid("A has a zero row");
      if (ci.A.structure().has_zero_col) detail::invalid("A has a zero column");
      inst.problem = std::move(ci);
    } else if (kind == "quantum") {
      const json& kj = detail::require(doc, "kraus");
      if (!kj.is_array() || kj.empty()) detail::invalid("kraus must be a nonempty array of matrices");
      std::vector<ComplexMatrix> ops;
      for (std::size_t i = 0; i < kj.size(); ++i) {
        ops.push_back(detail::decode_complex_matrix(kj[i], n, "kraus[" + std::to_string(i) + "]"));
      }
      KrausMap q(std::move(ops));
      if (q.channel_residual() > kNormalizationTol) {
        detail::invalid("Kraus operators do not form a channel (sum A_i^* A_i != I)");
      }
      DensityMatrix alpha = detail::decode_density(detail::require(doc, "alpha"), n, "alpha");
      DensityMatrix beta = detail::decode_density(detail::require(doc, "beta"), n, "beta");
      inst.problem = QuantumInstance{std::move(q), std::move(alpha), std::move(beta)};
    } else {
      detail::invalid("kind must be \"classical\" or \"quantum\"");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kValidationError) throw;
    throw Error(ErrorCode::kValidationError, e.what());
  }
  return inst;
}

inline json instance_to_json(const InstanceFile& inst) {
  json doc;
  doc["kind"] = inst.kind();
  doc["n"] = inst.n();
  if (inst.is_quantum()) {
    const auto& q = inst.quantum();
    doc["kraus"] = encode(q.Q);
    doc["alpha"] = encode(q.alpha.hermitian());
    doc["beta"] = encode(q.beta.hermitian());
  } else {
    const auto& c = inst.classical();
    doc["A"] = encode(c.A.matrix());
    doc["alpha"] = encode(c.alpha.values());
    doc["beta"] = encode(c.beta.values());
  }
  doc["config"] = encode(inst.config);
  return doc;
}

inline std::string serialize_instance(const InstanceFile& inst) { return instance_to_json(inst).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Solutions

inline json to_json(const ClassicalSolution& s) {
  json trace = json::array();
  for (double v : s.trace) trace.push_back(encode(v));
  return json{{"kind", "classical"},
              {"n", s.B.rows()},
              {"converged", s.converged},
              {"iterations", s.iterations},
              {"x_star", encode(s.x_star.values())},
              {"fixed_point", encode(std::span<const double>(s.fixed_point))},
              {"B", encode(s.B)},
              {"d1", encode(std::span<const double>(s.d1))},
              {"d2", encode(std::span<const double>(s.d2))},
              {"residual_map", encode(s.residual_map)},
              {"residual_stoch", encode(s.residual_stoch)},
              {"residual_bridge", encode(s.residual_bridge)},
              {"jacobian_gap", encode(s.jacobian_gap)},
              {"trace", std::move(trace)}};
}

inline json to_json(const BridgeSolution& s) {
  json residual = json::array();
  json step = json::array();
  for (const auto& r : s.trace) {
    residual.push_back(encode(r.residual));
    step.push_back(encode(r.hilbert_step));
  }
  json doc{{"kind", "quantum"},
           {"n", s.U.n()},
           {"converged", s.converged},
           {"iterations", s.iterations},
           {"U", encode(s.U.hermitian())},
           {"residual_fixed", encode(s.residual_fixed)},
           {"residual_channel", encode(s.residual_channel)},
           {"residual_bridge", encode(s.residual_bridge)},
           {"unitarity_defect", encode(s.unitarity_defect)},
           {"trace", json{{"residual", std::move(residual)}, {"hilbert_step", std::move(step)}}}};
  if (s.R) {
    doc["S"] = encode(s.S);
    doc["T"] = encode(s.T);
    doc["O"] = encode(s.O);
    doc["R"] = json{{"kraus", encode(*s.R)}};
  } else {
    doc["S"] = nullptr;
    doc["T"] = nullptr;
    doc["O"] = nullptr;
    doc["R"] = nullptr;
  }
  return doc;
}

inline json to_json(const GPCertificate& c) {
  return json{{"kind", "gp_certificate"},
              {"phi_0", encode(c.phi_0)},
              {"phi_T", encode(c.phi_T)},
              {"phihat_0", encode(c.phihat_0)},
              {"phihat_T", encode(c.phihat_T)},
              {"chi_0", encode(c.chi_0)},
              {"chi_T", encode(c.chi_T)},
              {"residual_q_phi_T", encode(c.residual_q_phi_T)},
              {"residual_qdual_phihat_0", encode(c.residual_qdual_phihat_0)},
              {"residual_rho_0", encode(c.residual_rho_0)},
              {"residual_rho_T", encode(c.residual_rho_T)},
              {"residual_phi_0", encode(c.residual_phi_0)},
              {"residual_phi_T", encode(c.residual_phi_T)}};
}

inline std::string serialize_solution(const ClassicalSolution& s) { return to_json(s).dump(2) + "\n"; }
inline std::string serialize_solution(const BridgeSolution& s) { return to_json(s).dump(2) + "\n"; }
inline std::string serialize_solution(const GPCertificate& c) { return to_json(c).dump(2) + "\n"; }

// Raw fields of a stored solution, as read back for verification.
struct StoredClassicalSolution {
  bool converged = false;
  std::vector<double> x_star, d1, d2;
  RealMatrix B;
};

struct StoredBridgeSolution {
  bool converged = false;
  HermitianMatrix U;
  std::optional<ComplexMatrix> S, T, O;
  std::optional<std::vector<ComplexMatrix>> R;
};

using StoredSolution = std::variant<StoredClassicalSolution, StoredBridgeSolution>;

// Reads a solution document, or the "solution" member of a solve output that
// also carries a certificate.
inline StoredSolution parse_solution(std::string_view text) {
  json doc = detail::parse_json(text);
  if (doc.is_object() && doc.contains("solution")) doc = doc["solution"];
  if (!doc.is_object()) detail::invalid("solution must be a JSON object");
  const json& kind = detail::require(doc, "kind");
  const std::uint64_t n = detail::decode_count(detail::require(doc, "n"), "n");
  const json& conv = detail::require(doc, "converged");
  if (!conv.is_boolean()) detail::invalid("converged must be a boolean");
  if (kind == "classical") {
    StoredClassicalSolution s;
    s.converged = conv.get<bool>();
    s.x_star = detail::decode_vector(detail::require(doc, "x_star"), n, "x_star");
    s.d1 = detail::decode_vector(detail::require(doc, "d1"), n, "d1");
    s.d2 = detail::decode_vector(detail::require(doc, "d2"), n, "d2");
    s.B = detail::decode_real_matrix(detail::require(doc, "B"), n, "B");
    return s;
  }
  if (kind == "quantum") {
    StoredBridgeSolution s;
    s.converged = conv.get<bool>();
    s.U = detail::decode_hermitian(detail::require(doc, "U"), n, "U");
    auto optional_matrix = [&](const char* key) -> std::optional<ComplexMatrix> {
      if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
      return detail::decode_complex_matrix(doc[key], n, key);
    };
    s.S = optional_matrix("S");
    s.T = optional_matrix("T");
    s.O = optional_matrix("O");
    if (doc.contains("R") && !doc["R"].is_null()) {
      const json& kj = detail::require(doc["R"], "kraus");
      if (!kj.is_array()) detail::invalid("R.kraus must be an array");
      std::vector<ComplexMatrix> ops;
      for (const auto& m : kj) ops.push_back(detail::decode_complex_matrix(m, n, "R.kraus"));
      s.R = std::move(ops);
    }
    return s;
  }
  detail::invalid("solution kind must be \"classical\" or \"quantum\"");
}

}  // namespace bridgescale
