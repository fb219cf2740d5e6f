// Command-line front end: simulate scenarios, analyze closed loops, run the
// rank test and compute the averaging-gain bound.
//
// Exit codes: 0 success, 1 analysis-negative result, 2 usage or input error.

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/ranges.h>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dapi/dapi.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kNegative = 1;
constexpr int kUsage = 2;

dapi::Vector broadcast(const std::vector<double>& values, dapi::Index n, const char* name) {
  if (values.size() == 1) return dapi::Vector::Constant(n, values.front());
  if (static_cast<dapi::Index>(values.size()) != n) {
    throw dapi::InvalidArgument(fmt::format("--{} needs 1 or {} values, got {}", name, n, values.size()));
  }
  return Eigen::Map<const dapi::Vector>(values.data(), n);
}

std::string yes_no(bool v) { return v ? "yes" : "no"; }

void print_bounds(const dapi::GammaBound& gb) {
  const auto& c = gb.coefficient_bounds;
  fmt::print("gamma_bar: {}\n", dapi::format_number(gb.gamma_bar));
  fmt::print("  a1_lower   = {}\n", dapi::format_number(c.a1_lower));
  fmt::print("  a2_lower   = {}\n", dapi::format_number(c.a2_lower));
  fmt::print("  a1a2_lower = {}\n", dapi::format_number(c.a1a2_lower));
  fmt::print("  a0a3_upper = {}\n", dapi::format_number(c.a0a3_upper));
}

void print_report(const dapi::Scenario& sc, const dapi::ScenarioResult& res) {
  const auto& net = sc.network;
  const auto& ctrl = res.closed_loop.controller;
  fmt::print("scenario: {}\n", sc.path);
  fmt::print("network: {} ({} buses, {} lines)\n", sc.network_path, net.buses.size(), net.lines.size());
  fmt::print("controller: {}", dapi::to_string(ctrl.kind()));
  if (ctrl.kind() == dapi::ControllerKind::DistributedPI) fmt::print(", gamma = {}", dapi::format_number(ctrl.gamma()));
  fmt::print("\n");
  if (res.rank) {
    fmt::print("xi rank: {} of {} (deficiency {}), {}\n", res.rank->rank, res.rank->size, res.rank->deficiency,
               res.rank->full_rank ? "full" : "rank deficient");
  }
  if (res.gamma_bound) print_bounds(*res.gamma_bound);
  if (res.gamma_bound_error) fmt::print("gamma_bar: unavailable ({})\n", *res.gamma_bound_error);

  const auto& rep = res.report;
  std::size_t observable_zero = 0;
  for (const auto& z : rep.zero_modes) observable_zero += z.observable ? 1 : 0;
  fmt::print("eigenvalues: {}\n", rep.eigenvalues.size());
  fmt::print("zero modes: {} ({} observable)\n", rep.zero_modes.size(), observable_zero);
  fmt::print("marginal modes: {}\n", rep.marginal_modes);
  fmt::print("max real part excluding zero modes: {}\n", dapi::format_number(rep.max_real_part_excluding_zero_modes));
  fmt::print("output stable: {}\n", yes_no(rep.output_stable));
  fmt::print("target frequency: {} Hz\n", dapi::format_number(dapi::rad_to_hz(res.omega_target)));
  if (res.prediction) {
    const auto& p = *res.prediction;
    fmt::print("predicted omega_hat: {} Hz\n", dapi::format_number(dapi::rad_to_hz(p.omega_hat)));
    fmt::print("predicted consensus k: {}\n", dapi::format_number(p.k));
    fmt::print("predicted total input: {} W\n", dapi::format_number(p.u_stationary.sum()));
  }
}

struct SimulateArgs {
  std::vector<std::string> scenarios;
  std::optional<std::string> csv;
  std::optional<double> horizon;
  std::optional<double> step;
  std::optional<double> settle_tol;
};

int run_simulate(const SimulateArgs& args) {
  if (args.csv && args.scenarios.size() != 1) throw dapi::InvalidArgument("--csv needs exactly one scenario");
  int code = kOk;
  for (const auto& path : args.scenarios) {
    dapi::Scenario sc = dapi::load_scenario(path);
    if (args.horizon) sc.horizon_s = *args.horizon;
    if (args.step) sc.step_s = *args.step;
    if (args.settle_tol) sc.settle_tol_hz = *args.settle_tol;
    if (!(sc.horizon_s > 0.0) || !(sc.step_s > 0.0) || !(sc.settle_tol_hz > 0.0)) {
      throw dapi::InvalidArgument("horizon, step and settle tolerance must be positive");
    }
    spdlog::info("simulating {} for {} s with step {} s", path, sc.horizon_s, sc.step_s);
    const dapi::ScenarioResult res = dapi::run_scenario(sc);
    const auto& trace = *res.trace;
    fmt::print("scenario: {}\n", path);
    fmt::print("controller: {}\n", dapi::to_string(res.closed_loop.controller.kind()));
    fmt::print("samples: {}\n", trace.samples());
    fmt::print("end time: {} s\n", dapi::format_number(trace.times.back()));
    fmt::print("diverged: {}\n", yes_no(res.diverged));
    fmt::print("target frequency: {} Hz\n", dapi::format_number(dapi::rad_to_hz(res.omega_target)));
    fmt::print("final max deviation: {} Hz\n", dapi::format_number(res.final_deviation_hz));
    fmt::print("settled: {}\n", yes_no(res.settled));

    const std::optional<std::string> out = args.csv ? args.csv : sc.csv;
    if (out) {
      dapi::write_trace_csv(*out, sc.network, res.closed_loop, trace);
      fmt::print("csv: {}\n", *out);
    }
    if (!res.settled) code = kNegative;
  }
  return code;
}

int run_analyze(const std::string& path) {
  const dapi::Scenario sc = dapi::load_scenario(path);
  const dapi::ScenarioResult res = dapi::run_scenario(sc, {.simulate = false});
  print_report(sc, res);
  const bool ok = res.analysis_ok();
  fmt::print("verdict: {}\n", ok ? "ok" : "negative");
  return ok ? kOk : kNegative;
}

int run_rank_test(const std::string& path, const std::vector<double>& ki) {
  const dapi::PowerNetwork net = dapi::load_network(path);
  const dapi::LtiSystem sys = dapi::swing_to_lti(net);
  const auto res = dapi::xi_rank_test(sys, broadcast(ki, net.size(), "ki"));
  fmt::print("network: {} ({} buses)\n", path, net.size());
  fmt::print("xi size: {}\n", res.size);
  fmt::print("rank: {}\n", res.rank);
  fmt::print("deficiency: {}\n", res.deficiency);
  fmt::print("full rank: {}\n", yes_no(res.full_rank));
  return res.full_rank ? kOk : kNegative;
}

int run_gamma_bound(const std::string& path, const std::vector<double>& kp, const std::vector<double>& ki,
                    bool spectral) {
  const dapi::PowerNetwork net = dapi::load_network(path);
  const dapi::Index n = net.size();
  const auto ctrl = dapi::ControllerSpec::distributed_pi(broadcast(kp, n, "kp"), broadcast(ki, n, "ki"), 1.0,
                                                        net.coupling_graph());
  const dapi::GammaBound gb = dapi::gamma_bar(net, ctrl);
  fmt::print("network: {} ({} buses)\n", path, n);
  print_bounds(gb);
  if (spectral && std::isfinite(gb.gamma_bar)) {
    const auto res = dapi::spectral_gamma_search(net, ctrl, gb.gamma_bar);
    fmt::print("spectral gamma*: {}{}\n", dapi::format_number(res.gamma_star), res.bounded ? "" : " (search cap reached)");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("dapi");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  spdlog::cfg::load_env_levels();

  CLI::App app{"Distributed averaging PI control of swing-equation networks"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Simulate scenarios and optionally write a CSV trace");
  simulate->add_option("scenario", sim.scenarios, "Scenario file(s)")->required()->check(CLI::ExistingFile);
  simulate->add_option("--csv", sim.csv, "CSV output path (overrides the scenario's csv key)");
  simulate->add_option("--horizon", sim.horizon, "Simulation horizon [s]");
  simulate->add_option("--step", sim.step, "Integration step [s]");
  simulate->add_option("--settle-tol", sim.settle_tol, "Settling tolerance [Hz]");

  std::string analyze_path;
  auto* analyze = app.add_subcommand("analyze", "Rank test, gamma bound, spectrum and steady-state prediction");
  analyze->add_option("scenario", analyze_path, "Scenario file")->required()->check(CLI::ExistingFile);

  std::string rank_path;
  std::vector<double> rank_ki;
  auto* rank = app.add_subcommand("rank-test", "Rank of [A, B Ki; C, 0] for a swing network");
  rank->add_option("network", rank_path, "Network file")->required()->check(CLI::ExistingFile);
  rank->add_option("--ki", rank_ki, "Integral gains (one value or one per bus)")->required();

  std::string bound_path;
  std::vector<double> bound_kp;
  std::vector<double> bound_ki;
  bool spectral = false;
  auto* bound = app.add_subcommand("gamma-bound", "Averaging-gain bound with communication graph equal to the grid");
  bound->add_option("network", bound_path, "Network file")->required()->check(CLI::ExistingFile);
  bound->add_option("--kp", bound_kp, "Proportional gains (one value or one per bus)")->required();
  bound->add_option("--ki", bound_ki, "Integral gains (one value or one per bus)")->required();
  bound->add_flag("--spectral", spectral, "Also search for the largest stable gamma by bisection");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*analyze) return run_analyze(analyze_path);
    if (*rank) return run_rank_test(rank_path, rank_ki);
    if (*bound) return run_gamma_bound(bound_path, bound_kp, bound_ki, spectral);
  } catch (const dapi::PreconditionError& e) {
    fmt::print(stderr, "precondition failed: {}\n", e.what());
    return kNegative;
  } catch (const dapi::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kUsage;
  }
  return kUsage;
}
