// bridgescale <solve|verify|gen|diagnose|probe> [flags]

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "bridgescale/cli.hpp"

namespace {

namespace cli = bridgescale::cli;

std::optional<std::string> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// BRIDGESCALE_SEED is used when no --seed flag is given.
std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("BRIDGESCALE_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(s, &pos);
    if (pos != std::string(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    std::cerr << "ignoring malformed BRIDGESCALE_SEED='" << s << "'\n";
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Schrodinger bridge scaling for stochastic matrices and quantum channels"};
  app.require_subcommand(1);

  std::string instance_path, solution_path, format = "json";
  std::optional<std::uint64_t> seed;

  cli::SolveOptions solve;
  auto* solve_cmd = app.add_subcommand("solve", "solve an instance and print the solution");
  solve_cmd->add_option("instance", instance_path, "instance JSON file")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--tol", solve.tol, "fixed-point tolerance")->check(CLI::PositiveNumber);
  solve_cmd->add_option("--max-iter", solve.max_iter, "iteration budget");
  solve_cmd->add_option("--seed", seed, "seed for random restarts");
  solve_cmd->add_option("--starts", solve.starts, "number of starts to try");
  solve_cmd->add_option("--format", format, "output format")->check(CLI::IsMember({"json", "text"}));
  solve_cmd->add_flag("--certificate", solve.certificate, "also emit the two-marginal certificate");

  std::optional<double> verify_tol;
  auto* verify_cmd = app.add_subcommand("verify", "recompute all residuals of a stored solution");
  verify_cmd->add_option("solution", solution_path, "solution JSON file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("instance", instance_path, "instance JSON file")->required()->check(CLI::ExistingFile);
  verify_cmd->add_option("--tol", verify_tol, "tolerance (default: the instance's)")->check(CLI::PositiveNumber);

  cli::GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a random instance");
  gen_cmd->add_option("--kind", gen.kind, "classical or quantum")->check(CLI::IsMember({"classical", "quantum"}));
  gen_cmd->add_option("--n", gen.n, "dimension")->check(CLI::Range(1, 64));
  gen_cmd->add_option("--k", gen.k, "Kraus operator count (default n)");
  gen_cmd->add_option("--positivity", gen.positivity, "depolarizing mix weight")->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--seed", seed, "generator seed");
  gen_cmd->add_flag("--unital", gen.unital, "generate a unital channel");
  gen_cmd->add_flag("--uniform-marginals", gen.uniform_marginals, "alpha = beta = uniform");

  cli::DiagnoseOptions diag;
  auto* diag_cmd = app.add_subcommand("diagnose", "contraction diagnostics for a quantum instance");
  diag_cmd->add_option("instance", instance_path, "instance JSON file")->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--seed", seed, "sampling seed");
  diag_cmd->add_option("--samples", diag.samples, "pure-state samples")->check(CLI::PositiveNumber);
  diag_cmd->add_option("--refine", diag.refine_steps, "refinement steps per extreme");

  cli::ProbeOptions probe;
  auto* probe_cmd = app.add_subcommand("probe", "multi-start search for distinct fixed points");
  probe_cmd->add_option("instance", instance_path, "instance JSON file")->required()->check(CLI::ExistingFile);
  probe_cmd->add_option("--starts", probe.starts, "number of random starts")->check(CLI::PositiveNumber);
  probe_cmd->add_option("--seed", seed, "base seed");
  probe_cmd->add_option("--threads", probe.threads, "worker threads (0 = auto)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitUsage;
  }
  if (!seed) seed = env_seed();

  auto read = [](const std::string& path) -> std::optional<std::string> {
    auto text = slurp(path);
    if (!text) std::cerr << "cannot read " << path << "\n";
    return text;
  };

  if (*solve_cmd) {
    const auto text = read(instance_path);
    if (!text) return cli::kExitUsage;
    solve.seed = seed;
    solve.format = format == "text" ? cli::Format::kText : cli::Format::kJson;
    return cli::cmd_solve(*text, solve, std::cout, std::cerr);
  }
  if (*verify_cmd) {
    const auto sol = read(solution_path);
    const auto inst = read(instance_path);
    if (!sol || !inst) return cli::kExitUsage;
    return cli::cmd_verify(*sol, *inst, std::cout, std::cerr, verify_tol);
  }
  if (*gen_cmd) {
    gen.seed = seed.value_or(0);
    return cli::cmd_gen(gen, std::cout, std::cerr);
  }
  if (*diag_cmd) {
    const auto text = read(instance_path);
    if (!text) return cli::kExitUsage;
    diag.seed = seed;
    return cli::cmd_diagnose(*text, diag, std::cout, std::cerr);
  }
  if (*probe_cmd) {
    const auto text = read(instance_path);
    if (!text) return cli::kExitUsage;
    probe.seed = seed;
    return cli::cmd_probe(*text, probe, std::cout, std::cerr);
  }
  return cli::kExitUsage;
}
