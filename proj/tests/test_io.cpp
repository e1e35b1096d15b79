#include <catch_amalgamated.hpp>

#include <string>

#include "bridgescale/io.hpp"
#include "bridgescale/random.hpp"

using namespace bridgescale;

namespace {

ErrorCode parse_error_code(const std::string& text) {
  try {
    parse_instance(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("instance was accepted: " << text);
  return ErrorCode::kValidationError;
}

InstanceFile random_quantum_instance(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  InstanceFile inst;
  inst.problem = QuantumInstance{random_channel(n, n + 1, 0.3, seed), random_density(n, rng), random_density(n, rng)};
  inst.config.seed = seed;
  inst.config.tol = 1e-10;
  return inst;
}

}  // namespace

TEST_CASE("minimal classical instance parses") {
  const auto inst = parse_instance(R"({"kind":"classical","n":2,"A":[[1,0],[0,1]],"alpha":[0.5,0.5],"beta":[0.5,0.5]})");
  CHECK_FALSE(inst.is_quantum());
  CHECK(inst.n() == 2);
  CHECK(inst.kind() == "classical");
  CHECK(inst.config.tol == SolverConfig{}.tol);
}

TEST_CASE("quantum instance with trace 1.5 marginal is a validation error") {
  const std::string text =
      R"({"kind":"quantum","n":2,"kraus":[[[1,0],[0,1]]],"alpha":[[0.75,0],[0,0.75]],"beta":[[0.5,0],[0,0.5]]})";
  CHECK(parse_error_code(text) == ErrorCode::kValidationError);
}

TEST_CASE("malformed JSON is a parse error") {
  CHECK(parse_error_code("{\"kind\": \"quantum\", ") == ErrorCode::kParseError);
  CHECK(parse_error_code("") == ErrorCode::kParseError);
}

TEST_CASE("invalid instances are rejected") {
  const std::string q_head = R"({"kind":"quantum","n":2,"kraus":[[[1,0],[0,1]]],)";
  // Non-Hermitian alpha.
  CHECK(parse_error_code(q_head + R"("alpha":[[0.5,0.1],[0,0.5]],"beta":[[0.5,0],[0,0.5]]})") ==
        ErrorCode::kValidationError);
  // Complex entry [re, im] forms; a singular alpha is not PD.
  CHECK(parse_error_code(q_head + R"("alpha":[[[1,0],[0,0]],[[0,0],[0,0]]],"beta":[[0.5,0],[0,0.5]]})") ==
        ErrorCode::kValidationError);
  // Not trace preserving.
  CHECK(parse_error_code(
            R"({"kind":"quantum","n":2,"kraus":[[[1,0],[0,0.9]]],"alpha":[[0.5,0],[0,0.5]],"beta":[[0.5,0],[0,0.5]]})") ==
        ErrorCode::kValidationError);
  // Dimension mismatch.
  CHECK(parse_error_code(
            R"({"kind":"quantum","n":3,"kraus":[[[1,0],[0,1]]],"alpha":[[0.5,0],[0,0.5]],"beta":[[0.5,0],[0,0.5]]})") ==
        ErrorCode::kValidationError);

  const std::string c_tail = R"(,"alpha":[0.5,0.5],"beta":[0.5,0.5]})";
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[1,-1],[0,1]])" + c_tail) == ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[0,0],[1,1]])" + c_tail) == ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[1,0],[1,0]])" + c_tail) == ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[1,0],[0,1]],"alpha":[0.6,0.6],"beta":[0.5,0.5]})") ==
        ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[1,0],[0,1]],"alpha":[1.0,0.0],"beta":[0.5,0.5]})") ==
        ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"simplex","n":2})") == ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":-2})") == ErrorCode::kValidationError);
  CHECK(parse_error_code(R"({"kind":"classical","n":2,"A":[[1,0],[0,1]],"alpha":[0.5,0.5]})") ==
        ErrorCode::kValidationError);
}

TEST_CASE("config block") {
  const auto inst = parse_instance(
      R"({"kind":"classical","n":1,"A":[[2]],"alpha":[1],"beta":[1],)"
      R"("config":{"tol":1e-9,"max_iter":50,"damping":0.5,"seed":7,"starts":3,"anderson":true}})");
  CHECK(inst.config.tol == 1e-9);
  CHECK(inst.config.max_iter == 50);
  CHECK(inst.config.damping == 0.5);
  CHECK(inst.config.seed == 7);
  CHECK(inst.config.starts == 3);
  CHECK(inst.config.anderson);

  const std::string head = R"({"kind":"classical","n":1,"A":[[2]],"alpha":[1],"beta":[1],"config":)";
  CHECK(parse_error_code(head + R"({"tol":0}})") == ErrorCode::kValidationError);
  CHECK(parse_error_code(head + R"({"damping":1.5}})") == ErrorCode::kValidationError);
  CHECK(parse_error_code(head + R"({"max_iter":2.5}})") == ErrorCode::kValidationError);
  CHECK(parse_error_code(head + R"({"anderson":1}})") == ErrorCode::kValidationError);
}

TEST_CASE("quantum instances round-trip bit-exactly") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const InstanceFile inst = random_quantum_instance(2 + seed % 5, seed);
    const std::string once = serialize_instance(inst);
    const InstanceFile back = parse_instance(once);
    REQUIRE(back.is_quantum());
    const auto& a = inst.quantum();
    const auto& b = back.quantum();
    REQUIRE(a.Q.k() == b.Q.k());
    for (std::size_t i = 0; i < a.Q.k(); ++i) CHECK(a.Q.ops()[i] == b.Q.ops()[i]);
    CHECK(a.alpha.hermitian() == b.alpha.hermitian());
    CHECK(a.beta.hermitian() == b.beta.hermitian());
    CHECK(back.config.seed == seed);
    CHECK(back.config.tol == 1e-10);
    CHECK(serialize_instance(back) == once);
  }
}

TEST_CASE("classical instances round-trip bit-exactly") {
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 1 + t % 6;
    InstanceFile inst;
    inst.problem = ClassicalInstance{NonnegMatrix(random_positive_matrix(n, rng)), random_prob_vector(n, rng),
                                     random_prob_vector(n, rng)};
    const std::string once = serialize_instance(inst);
    const InstanceFile back = parse_instance(once);
    CHECK(back.classical().A.matrix() == inst.classical().A.matrix());
    CHECK(back.classical().alpha.vec() == inst.classical().alpha.vec());
    CHECK(serialize_instance(back) == once);
  }
}

TEST_CASE("serialized solutions") {
  const InstanceFile inst = random_quantum_instance(3, 5);
  const auto& q = inst.quantum();
  const BridgeSolution s = solve_fixed_point(q.Q, q.alpha, q.beta, inst.config);
  REQUIRE(s.converged);
  const json doc = json::parse(serialize_solution(s));
  CHECK(doc["converged"] == true);
  CHECK(doc["residual_bridge"].get<double>() <= 100 * inst.config.tol);
  CHECK(doc["R"]["kraus"].size() == q.Q.k());
  CHECK(doc["trace"]["residual"].size() == s.iterations);

  const auto stored = std::get<StoredBridgeSolution>(parse_solution(doc.dump()));
  CHECK(stored.converged);
  CHECK(stored.U == s.U.hermitian());
  REQUIRE(stored.R);
  CHECK((*stored.R)[0] == s.R->ops()[0]);
  REQUIRE(stored.O);
  CHECK(*stored.O == s.O);

  const GPCertificate cert = gp_certificate(q.Q, q.beta, q.alpha, s);
  const json cdoc = json::parse(serialize_solution(cert));
  for (const char* key : {"residual_q_phi_T", "residual_qdual_phihat_0", "residual_rho_0", "residual_rho_T",
                          "residual_phi_0", "residual_phi_T"}) {
    REQUIRE(cdoc.contains(key));
    CHECK(cdoc[key].get<double>() <= 100 * inst.config.tol);
  }
  // A combined solve output is read through its "solution" member.
  const json wrapped{{"solution", doc}, {"certificate", cdoc}};
  CHECK(std::holds_alternative<StoredBridgeSolution>(parse_solution(wrapped.dump())));

  SolverConfig tight;
  tight.max_iter = 1;
  const json unconverged = json::parse(serialize_solution(solve_fixed_point(q.Q, q.alpha, q.beta, tight)));
  CHECK(unconverged["converged"] == false);
  CHECK(unconverged["R"].is_null());
  CHECK_FALSE(std::get<StoredBridgeSolution>(parse_solution(unconverged.dump())).R);
}

TEST_CASE("classical solution document") {
  const auto inst = parse_instance(
      R"({"kind":"classical","n":2,"A":[[0.7,0.2],[0.3,0.8]],"alpha":[0.4,0.6],"beta":[0.5,0.5]})");
  const auto& c = inst.classical();
  const ClassicalSolution s = solve_classical(c.A, c.alpha, c.beta);
  REQUIRE(s.converged);
  const json doc = json::parse(serialize_solution(s));
  CHECK(doc["kind"] == "classical");
  CHECK(doc["x_star"].size() == 2);
  CHECK(doc["jacobian_gap"].is_number());
  const auto stored = std::get<StoredClassicalSolution>(parse_solution(doc.dump()));
  CHECK(stored.B == s.B);
  CHECK(stored.x_star == s.x_star.vec());
}

TEST_CASE("non-finite doubles encode as null") {
  CHECK(encode(std::numeric_limits<double>::infinity()).is_null());
  CHECK(encode(std::nan("")).is_null());
  CHECK(encode(cplx(1.0, -2.0)) == json::array({1.0, -2.0}));
}
