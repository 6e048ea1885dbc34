// Command-line harness around the descent solver: configure a run, execute
// it, and drop iteration/trajectory/control CSVs plus the benchmark tables.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hamopt/hamopt.hpp"

namespace {

using namespace hamopt;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RunConfig {
  std::string problem;
  double dt = 0.01;
  int iters = 100;
  double alpha = 0.3;
  double beta = 0.5;
  double eta = 0.9;
  double theta_tol = 1e-8;
  std::string mode = "auto";  // auto | general | convexified
  std::optional<double> pwm_cycle_seconds;
  std::optional<int> pwm_cycle_steps;
  std::string out_dir = ".";
  std::map<std::string, std::string> overrides;  // benchmark parameters
};

// Plain-text `key = value` config file; '#' starts a comment. Flags given on
// the command line win over file values.
std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

void apply_config_file(const std::map<std::string, std::string>& kv, const CLI::App* cmd,
                       RunConfig& cfg) {
  auto unset = [&](const std::string& flag) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    return opt != nullptr && opt->count() == 0;
  };
  for (const auto& [key, value] : kv) {
    if (key == "problem" && cfg.problem.empty()) cfg.problem = value;
    else if (key == "dt" && unset("--dt")) cfg.dt = std::stod(value);
    else if (key == "iters" && unset("--iters")) cfg.iters = std::stoi(value);
    else if (key == "alpha" && unset("--alpha")) cfg.alpha = std::stod(value);
    else if (key == "beta" && unset("--beta")) cfg.beta = std::stod(value);
    else if (key == "eta" && unset("--eta")) cfg.eta = std::stod(value);
    else if (key == "theta-tol" && unset("--theta-tol")) cfg.theta_tol = std::stod(value);
    else if (key == "mode" && unset("--mode")) cfg.mode = value;
    else if (key == "pwm-cycle" && unset("--pwm-cycle")) cfg.pwm_cycle_seconds = std::stod(value);
    else if (key == "pwm-cycle-steps" && unset("--pwm-cycle-steps"))
      cfg.pwm_cycle_steps = std::stoi(value);
    else if (key == "out" && unset("--out")) cfg.out_dir = value;
    else if (key == "N" || key == "d" || key == "C" || key == "ubar" || key == "x0")
      cfg.overrides.emplace(key, value);  // flag-provided overrides keep priority
  }
}

SolverMode resolve_mode(const std::string& mode, const Problem& problem) {
  if (mode == "general") return SolverMode::General;
  if (mode == "convexified") return SolverMode::Convexified;
  if (mode == "auto") {
    return problem.affine_in_control() && problem.convex_cost_in_control()
               ? SolverMode::Convexified
               : SolverMode::General;
  }
  throw CLI::ValidationError("--mode", "must be auto, general, or convexified");
}

std::optional<PwmConfig> resolve_pwm(const RunConfig& cfg) {
  if (cfg.pwm_cycle_steps) {
    PwmConfig pwm{*cfg.pwm_cycle_steps};
    pwm.validate();
    return pwm;
  }
  if (cfg.pwm_cycle_seconds) {
    const double cycle = *cfg.pwm_cycle_seconds;
    const int steps = static_cast<int>(std::llround(cycle / cfg.dt));
    if (steps < 1 || std::abs(steps * cfg.dt - cycle) > 1e-9 * std::max(1.0, cycle))
      throw CLI::ValidationError("--pwm-cycle", "must be a positive multiple of dt");
    return PwmConfig{steps};
  }
  return std::nullopt;
}

struct SolveArtifacts {
  RunResult result;
  double wall_s = 0.0;
  std::optional<double> J_projected;
};

SolveArtifacts execute_solve(const Problem& problem, const RunConfig& cfg, bool write_files) {
  const TimeGrid grid(problem.horizon(), cfg.dt);
  const RelaxedMixture mu0 = dirac(problem.default_initial_control(grid));
  SolverConfig solver;
  solver.alpha = cfg.alpha;
  solver.beta = cfg.beta;
  solver.eta = cfg.eta;
  solver.max_iters = cfg.iters;
  solver.theta_tol = cfg.theta_tol;
  const SolverMode mode = resolve_mode(cfg.mode, problem);

  const auto t0 = std::chrono::steady_clock::now();
  SolveArtifacts art{run(problem, mu0, solver, mode), 0.0, std::nullopt};

  std::optional<OrdinaryControl> projected;
  const std::optional<PwmConfig> pwm = resolve_pwm(cfg);
  if (pwm) {
    projected = project_pwm(problem, art.result.mu_final, *pwm);
    art.J_projected = cost_of_control(problem, *projected);
  }
  art.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  if (write_files) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const auto path = [&](const char* f) { return (fs::path(cfg.out_dir) / f).string(); };
    csv::write_iterations(path("iterations.csv"), art.result.records);
    const StateTrajectory x =
        integrate_state_forward(problem, art.result.mu_final, grid, problem.initial_state());
    const CostateTrajectory p = integrate_costate_backward(problem, art.result.mu_final, x);
    csv::write_trajectory(path("final_state.csv"), x, &p);
    csv::write_mixture(path("final_control.csv"), art.result.mu_final);
    if (projected) csv::write_control(path("projected_control.csv"), *projected);
  }
  return art;
}

void print_summary(const std::string& problem, const RunConfig& cfg, const SolveArtifacts& art) {
  std::printf("%s, dt=%g, iters=%zu, J0=%.6g, J_final=%.6g, J_projected=%s, wall_s=%.3f\n",
              problem.c_str(), cfg.dt, art.result.records.size(), art.result.J_initial,
              art.result.J_final(),
              art.J_projected ? csv::format(*art.J_projected).c_str() : "-", art.wall_s);
  std::printf("stop: %s\n", to_string(art.result.stop).c_str());
}

int cmd_solve(RunConfig cfg) {
  const auto problem = problems::make_problem(cfg.problem, cfg.overrides);
  const SolveArtifacts art = execute_solve(*problem, cfg, /*write_files=*/true);
  print_summary(cfg.problem, cfg, art);
  return kExitOk;
}

struct TableRow {
  double dt;
  int iters;
  double paper_J;
  std::optional<double> paper_J_fin;
};

int cmd_table(int which, std::string out_dir) {
  std::string problem_name;
  std::vector<TableRow> rows;
  std::optional<double> pwm_seconds;
  std::optional<int> pwm_steps;
  std::string mode = "auto";
  switch (which) {
    case 1:
      problem_name = "double-tank";
      rows = {{0.01, 100, 4.7440, 4.7446}, {0.05, 50, 4.8078, 4.8139}, {0.1, 50, 4.8816, 4.8915}};
      pwm_seconds = 0.5;
      break;
    case 2:
      problem_name = "hybrid-lqr";
      rows = {{0.01, 20, 2.768e-3, 2.956e-3}};
      pwm_steps = 12;
      mode = "general";
      break;
    case 3:
      problem_name = "mobile-network";
      rows = {{0.01, 200, 1253.4, {}}, {0.01, 100, 1256.7, {}}, {0.01, 20, 1455.5, {}},
              {0.1, 100, 1260.4, {}}};
      break;
    default:
      throw CLI::ValidationError("table", "table number must be 1, 2, or 3");
  }

  const auto problem = problems::make_problem(problem_name);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::ofstream csv_out(fs::path(out_dir) / ("table" + std::to_string(which) + ".csv"));
  csv_out << "dt,iters,J,J_projected,wall_s,paper_J,paper_J_projected\n";

  std::printf("%-8s %-6s %-14s %-14s %-14s %-14s %-10s\n", "dt", "iters", "J", "paper J",
              "J_proj", "paper J_proj", "wall_s");
  for (const TableRow& row : rows) {
    RunConfig cfg;
    cfg.problem = problem_name;
    cfg.dt = row.dt;
    cfg.iters = row.iters;
    cfg.mode = mode;
    cfg.pwm_cycle_seconds = pwm_seconds;
    cfg.pwm_cycle_steps = pwm_steps;
    const SolveArtifacts art = execute_solve(*problem, cfg, /*write_files=*/false);
    const double J = art.result.J_final();
    std::printf("%-8g %-6d %-14.6g %-14.6g %-14s %-14s %-10.3f\n", row.dt, row.iters, J,
                row.paper_J, art.J_projected ? csv::format(*art.J_projected).substr(0, 12).c_str() : "-",
                row.paper_J_fin ? csv::format(*row.paper_J_fin).substr(0, 12).c_str() : "-",
                art.wall_s);
    csv_out << row.dt << ',' << row.iters << ',' << csv::format(J) << ','
            << (art.J_projected ? csv::format(*art.J_projected) : "") << ','
            << csv::format(art.wall_s) << ',' << csv::format(row.paper_J) << ','
            << (row.paper_J_fin ? csv::format(*row.paper_J_fin) : "") << '\n';
  }
  return kExitOk;
}

int cmd_check(const std::string& problem_name, unsigned seed) {
  const auto problem = problems::make_problem(problem_name);
  bool all_ok = true;

  ConsistencyReport report = check_problem_consistency(*problem, 100, seed);
  std::printf("consistency checks for %s (100 trials, seed %u):\n", problem_name.c_str(), seed);
  std::fputs(report.to_string().c_str(), stdout);
  all_ok = all_ok && report.all_passed();

  // directional-derivative self-check from the benchmark's starting control
  const TimeGrid grid(problem->horizon(), 0.01);
  const RelaxedMixture mu = dirac(problem->default_initial_control(grid));
  const StateTrajectory x = integrate_state_forward(*problem, mu, grid, problem->initial_state());
  const CostateTrajectory p = integrate_costate_backward(*problem, mu, x);
  const ThetaResult th = optimality_theta(*problem, mu, x, p);
  const DerivativeCheck dd =
      directional_derivative_check(*problem, mu, dirac(th.u_star), 1e-4);
  const bool dd_ok = dd.rel_error() <= 0.01;
  std::printf("  %s directional derivative: analytic %.8g vs finite diff %.8g (rel %.3g, tol 0.01)\n",
              dd_ok ? "ok  " : "FAIL", dd.analytic, dd.finite_diff, dd.rel_error());
  all_ok = all_ok && dd_ok;

  std::printf("%s\n", all_ok ? "all checks passed" : "CHECKS FAILED");
  return all_ok ? kExitOk : kExitRuntime;
}

int cmd_project(const std::string& problem_name, const std::string& input_csv,
                const std::string& output_csv, std::optional<double> cycle_seconds,
                std::optional<int> cycle_steps) {
  const auto problem = problems::make_problem(problem_name);
  const RelaxedMixture mu = csv::read_mixture(input_csv);
  PwmConfig pwm;
  if (cycle_steps) {
    pwm.cycle_steps = *cycle_steps;
  } else if (cycle_seconds) {
    const double dt = mu.grid().dt();
    const int steps = static_cast<int>(std::llround(*cycle_seconds / dt));
    if (steps < 1 || std::abs(steps * dt - *cycle_seconds) > 1e-9 * std::max(1.0, *cycle_seconds))
      throw CLI::ValidationError("--pwm-cycle", "must be a positive multiple of the dump's dt");
    pwm.cycle_steps = steps;
  } else {
    throw CLI::ValidationError("project", "needs --pwm-cycle or --pwm-cycle-steps");
  }
  pwm.validate();

  const OrdinaryControl proj = project_pwm(*problem, mu, pwm);
  csv::write_control(output_csv, proj);
  const PwmFidelityReport fid = pwm_fidelity_report(*problem, mu, proj, pwm);
  std::printf("projected cost: %.10g (gap %.4g over %d cycles", cost_of_control(*problem, proj),
              fid.delta_J, fid.n_cycles);
  if (!std::isnan(fid.max_cycle_mean_deviation))
    std::printf(", max cycle-mean deviation %.4g", fid.max_cycle_mean_deviation);
  std::printf(")\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hamiltonian-descent solver for relaxed optimal control"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path;

  CLI::App* solve = app.add_subcommand("solve", "run the descent solver on a benchmark");
  solve->add_option("problem", cfg.problem, "double-tank | hybrid-lqr | mobile-network");
  solve->add_option("--config", config_path, "key = value file; flags win on conflict");
  solve->add_option("--dt", cfg.dt, "integration step");
  solve->add_option("--iters", cfg.iters, "iteration budget");
  solve->add_option("--alpha", cfg.alpha, "Armijo sufficient-decrease fraction");
  solve->add_option("--beta", cfg.beta, "Armijo shrink factor");
  solve->add_option("--eta", cfg.eta, "direction gap fraction");
  solve->add_option("--theta-tol", cfg.theta_tol, "|theta| convergence threshold");
  solve->add_option("--mode", cfg.mode, "auto | general | convexified");
  auto* cyc_s = solve->add_option("--pwm-cycle", "PWM cycle length in seconds");
  auto* cyc_n = solve->add_option("--pwm-cycle-steps", "PWM cycle length in grid cells");
  cyc_s->excludes(cyc_n);
  solve->add_option("--out", cfg.out_dir, "output directory for CSVs");
  solve->add_option("--N", "mobile-network: agent count");
  solve->add_option("--d", "mobile-network: segment length");
  solve->add_option("--C", "mobile-network: fuel weight");
  solve->add_option("--ubar", "mobile-network: velocity bound");
  solve->add_option("--x0", "mobile-network: comma-separated initial positions");

  int table_n = 0;
  std::string table_out = ".";
  CLI::App* table = app.add_subcommand("table", "reproduce a benchmark table");
  table->add_option("n", table_n, "table number: 1, 2, or 3")->required();
  table->add_option("--out", table_out, "output directory");

  std::string check_problem;
  unsigned check_seed = 20240817;
  CLI::App* check = app.add_subcommand("check", "run problem-consistency diagnostics");
  check->add_option("problem", check_problem)->required();
  check->add_option("--seed", check_seed, "RNG seed for the sampled checks");

  std::string proj_problem, proj_in, proj_out = "projected_control.csv";
  std::optional<double> proj_cycle_s;
  std::optional<int> proj_cycle_n;
  CLI::App* project = app.add_subcommand("project", "PWM-project a dumped mixture");
  project->add_option("problem", proj_problem)->required();
  project->add_option("input", proj_in, "control dump CSV")->required();
  project->add_option("--out-file", proj_out, "projected control CSV path");
  project->add_option("--pwm-cycle", proj_cycle_s, "cycle length in seconds");
  project->add_option("--pwm-cycle-steps", proj_cycle_n, "cycle length in grid cells");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (solve->parsed()) {
      if (!config_path.empty()) apply_config_file(read_config_file(config_path), solve, cfg);
      for (const char* key : {"N", "d", "C", "ubar", "x0"}) {
        const CLI::Option* opt = solve->get_option_no_throw(std::string("--") + key);
        if (opt && opt->count() > 0) cfg.overrides[key] = opt->as<std::string>();
      }
      if (const CLI::Option* o = solve->get_option_no_throw("--pwm-cycle"); o && o->count() > 0)
        cfg.pwm_cycle_seconds = o->as<double>();
      if (const CLI::Option* o = solve->get_option_no_throw("--pwm-cycle-steps"); o && o->count() > 0)
        cfg.pwm_cycle_steps = o->as<int>();
      if (cfg.problem.empty())
        throw problems::UnknownProblemError("solve: no problem given (flag or config file)");
      return cmd_solve(cfg);
    }
    if (table->parsed()) return cmd_table(table_n, table_out);
    if (check->parsed()) return cmd_check(check_problem, check_seed);
    if (project->parsed())
      return cmd_project(proj_problem, proj_in, proj_out, proj_cycle_s, proj_cycle_n);
  } catch (const problems::UnknownProblemError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return kExitUsage;
  } catch (const IntegrationDivergedError& e) {
    std::fprintf(stderr, "error [integration-diverged]: %s\n", e.what());
    return kExitRuntime;
  } catch (const InfeasibleInputError& e) {
    std::fprintf(stderr, "error [infeasible-input]: %s\n", e.what());
    return kExitRuntime;
  } catch (const GridMismatchError& e) {
    std::fprintf(stderr, "error [grid-mismatch]: %s\n", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error [%s]: %s\n", typeid(e).name(), e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
