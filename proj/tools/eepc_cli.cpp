// eepc: command line front end for the energy-efficient power control engine.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <string>

#include "eepc/eepc.hpp"

namespace fs = std::filesystem;
using namespace eepc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInfeasible = 2;

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

void print_vector(std::ostream& os, const std::vector<double>& v) {
  os << '(';
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
}

int cmd_one_shot(const Scenario& sc) {
  const auto& spec = sc.game;
  const auto& f = sc.efficiency;
  std::cout << std::setprecision(10);
  std::cout << "scenario        " << sc.name << '\n'
            << "efficiency      " << f.describe() << '\n'
            << "K, N            " << spec.players << ", " << spec.spreading_factor << '\n'
            << "(K-1)/N         " << spec.effective_interferers() << '\n';
  const double beta = solve_beta_star(f);
  const double gamma = solve_gamma_star(f, spec.shape());
  std::cout << "beta*           " << beta << '\n' << "gamma*          " << gamma << '\n';
  if (spec.players > 1) {
    const auto uq = check_op_uniqueness(f, spec.shape());
    std::cout << "OP uniqueness   " << (uq.holds ? "holds" : "fails") << " (x0 = " << uq.crossing << ")\n";
    std::cout << "lambda bound    " << discount_threshold(spec, f) << '\n';
  }
  std::cout << "OP signal       " << op_signal(spec, gamma) << '\n';

  for (std::size_t s = 0; s < sc.channel.size(); ++s) {
    const auto& state = sc.channel.states[s];
    const auto ne = nash_powers(spec, f, state);
    const auto op = op_powers(spec, f, state);
    std::cout << "\nstate " << s << " gains ";
    print_vector(std::cout, state.gains);
    std::cout << "\n  player   p_NE            SINR_NE         p_OP            SINR_OP         u_NE            u_OP\n";
    const auto u_ne = utility(spec, f, state, ne.powers);
    const auto u_op = utility(spec, f, state, op.powers);
    for (std::size_t i = 0; i < spec.num_players(); ++i) {
      std::cout << "  " << std::left << std::setw(8) << (i + 1) << ' ' << std::setw(15) << ne.powers[i] << ' '
                << std::setw(15) << sinr(spec, state, ne.powers, i) << ' ' << std::setw(15) << op.powers[i] << ' '
                << std::setw(15) << sinr(spec, state, op.powers, i) << ' ' << std::setw(15) << u_ne[i] << ' '
                << std::setw(15) << u_op[i] << (ne.saturated[i] ? "  (NE saturated)" : "") << std::right << '\n';
    }
  }
  return kExitOk;
}

int cmd_drg(const Scenario& sc, std::optional<double> discount, const std::string& out_path) {
  const auto& spec = sc.game;
  const auto& f = sc.efficiency;
  if (sc.repeated.state >= sc.channel.size()) throw ConfigError("repeated.state out of range");
  const auto& state = sc.channel.states[sc.repeated.state];
  const double lambda = discount.value_or(sc.repeated.discounts.front());
  const auto config = DiscountedGameConfig::with_discount(lambda, sc.repeated.signal_tolerance);
  const TriggerPlan plan = make_trigger_plan(spec, f);

  std::vector<Policy> policies;
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    policies.push_back(make_trigger_policy(spec, plan, i, sc.repeated.signal_tolerance));
  }
  if (const auto& dev = sc.repeated.deviation) {
    double power = 0.0;
    if (dev->power) {
      power = *dev->power;
    } else {
      const auto op = equal_sinr_powers(spec, state, plan.gamma_star).powers;
      power = best_response(spec, state, op, dev->player, plan.beta_star);
    }
    policies[dev->player] = make_one_shot_deviation(policies[dev->player], dev->stage, power);
    std::cout << "player " << (dev->player + 1) << " deviates at stage " << dev->stage << " to p = " << power << '\n';
  }
  const DrgTrace trace = run_drg(spec, f, state, config, std::move(policies), plan.reference_signal);
  {
    auto out = open_out(out_path);
    write_trace_csv(out, trace);
  }
  const auto audit = audit_equilibrium(spec, f, state, lambda, sc.repeated.deviation_grid, sc.repeated.signal_tolerance);
  std::cout << std::setprecision(10) << "lambda          " << lambda << '\n'
            << "horizon         " << config.horizon << " (tail weight " << trace.tail_weight << ")\n"
            << "discounted u    ";
  print_vector(std::cout, trace.discounted.values);
  std::cout << '\n';
  if (spec.players > 1) std::cout << "lambda bound    " << discount_threshold(spec, f) << '\n';
  std::cout << "audit max gain  " << audit.max_gain << " -> " << (audit.is_equilibrium ? "equilibrium" : "profitable deviation")
            << '\n'
            << "empirical bound " << audit.empirical_boundary << '\n'
            << "trace           " << out_path << '\n';
  return kExitOk;
}

int cmd_audit(const Scenario& sc, const std::string& out_path) {
  const auto& spec = sc.game;
  const auto& f = sc.efficiency;
  const double threshold = spec.players > 1 ? discount_threshold(spec, f) : 1.0;
  auto out = open_out(out_path);
  out << std::setprecision(17) << "state,lambda,threshold,maxGain,isEquilibrium,empiricalBoundary\n";
  std::cout << std::setprecision(8) << "lambda bound " << threshold << '\n';
  for (std::size_t s = 0; s < sc.channel.size(); ++s) {
    for (double lambda : sc.repeated.discounts) {
      const auto r = audit_equilibrium(spec, f, sc.channel.states[s], lambda, sc.repeated.deviation_grid,
                                       sc.repeated.signal_tolerance);
      out << s << ',' << lambda << ',' << threshold << ',' << r.max_gain << ',' << int(r.is_equilibrium) << ','
          << r.empirical_boundary << '\n';
      std::cout << "state " << s << "  lambda " << std::setw(10) << lambda << "  max gain " << std::setw(14) << r.max_gain
                << "  " << (r.is_equilibrium ? "equilibrium" : "NOT equilibrium") << '\n';
    }
  }
  return kExitOk;
}

int cmd_region(const Scenario& sc, const fs::path& dir, std::size_t simulate, std::uint64_t seed) {
  const RegionArtifacts art = run_region_experiment(sc);
  fs::create_directories(dir);
  {
    auto out = open_out(dir / "region.csv");
    write_region_csv(out, art.region);
  }
  {
    auto out = open_out(dir / "states.csv");
    write_state_clouds_csv(out, art, sc.game);
  }
  auto meta = region_metadata(sc, art);
  if (simulate > 0) {
    std::mt19937_64 rng(seed);
    const auto avg = simulate_average_utility(sc.game, sc.efficiency, sc.channel, art.star_policy, simulate, rng);
    meta["ergodic_check"] = {{"stages", simulate}, {"seed", seed}, {"star_long_run_average", avg.values}};
  }
  {
    auto out = open_out(dir / "points.json");
    out << meta.dump(2) << '\n';
  }
  {
    auto out = open_out(dir / "plot_region.py");
    write_region_plot_script(out);
  }
  std::cout << std::setprecision(10) << "region path     "
            << (art.region.path_used == RegionPath::Enumeration ? "enumeration" : "minkowski sum") << '\n'
            << "points          " << art.region.points.size() << " (hull " << art.region.hull.size() << ", pareto "
            << art.region.pareto.size() << ")\n"
            << "minmax          ";
  print_vector(std::cout, art.region.minmax);
  std::cout << "\nexpected NE     ";
  print_vector(std::cout, art.expected_ne.values);
  std::cout << "  sum " << art.expected_ne.sum() << "\nexpected OP     ";
  print_vector(std::cout, art.expected_op.values);
  std::cout << "  sum " << art.expected_op.sum() << "\nsocial optimum  ";
  print_vector(std::cout, art.star.utility.values);
  std::cout << "  sum " << art.star.utility.sum() << '\n' << "written to      " << dir.string() << '\n';
  return kExitOk;
}

int cmd_sweep(const Scenario& sc, const fs::path& out_path) {
  if (!sc.sweep) throw ConfigError("scenario has no [sweep] table");
  const auto sweep = run_gain_sweep(*sc.sweep);
  {
    auto out = open_out(out_path);
    write_gains_csv(out, sweep);
  }
  fs::path meta_path = out_path;
  meta_path.replace_extension(".json");
  {
    auto out = open_out(meta_path);
    out << sweep_metadata(sc, sweep).dump(2) << '\n';
  }
  {
    auto out = open_out(out_path.parent_path() / "plot_gains.py");
    write_gains_plot_script(out);
  }
  std::cout << std::setprecision(6);
  for (const auto& s : sweep) {
    std::cout << "M = " << s.block_length << "  beta* = " << s.beta_star << "  alpha_max = " << s.alpha_max
              << "  K in [" << sc.sweep->k_min << ", " << s.k_last << "]\n";
    for (const auto& p : s.points) {
      std::cout << "  K " << std::setw(3) << p.players << "  alpha " << std::setw(9) << p.alpha << "  DRG "
                << std::setw(12) << p.gain_drg << " %  SDRG " << std::setw(12) << p.gain_sdrg << " %\n";
    }
    for (int k : s.skipped) std::clog << "  K " << k << " skipped: NE saturates every player\n";
  }
  std::cout << "written to " << out_path.string() << " and " << meta_path.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-efficient power control games: one-shot NE, operating point, trigger strategies, stochastic regions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EEPC_VERSION);

  std::string scenario_path;
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("-s,--scenario", scenario_path, "Scenario TOML file")->required()->check(CLI::ExistingFile);
  };

  auto* one_shot = app.add_subcommand("one-shot", "beta*, gamma*, NE and OP powers, discount bound");
  add_scenario(one_shot);

  std::optional<double> discount;
  std::string trace_out = "trace.csv";
  auto* drg = app.add_subcommand("drg", "Simulate the trigger plan and audit it");
  add_scenario(drg);
  drg->add_option("-l,--discount", discount, "Discount factor (default: first of repeated.discounts)");
  drg->add_option("-o,--out", trace_out, "Trace CSV");

  std::string region_dir = "region_out";
  std::size_t simulate = 0;
  std::uint64_t seed = 1;
  auto* region = app.add_subcommand("region", "Long-run utility region of the stochastic game");
  add_scenario(region);
  region->add_option("-o,--out-dir", region_dir, "Output directory");
  region->add_option("--simulate", simulate, "Also simulate the social optimum for this many stages");
  region->add_option("--seed", seed, "Seed of the simulation");

  std::string gains_out = "gains.csv";
  auto* sweep = app.add_subcommand("sweep", "Cooperation gain versus load");
  add_scenario(sweep);
  sweep->add_option("-o,--out", gains_out, "Gains CSV (a .json sidecar is written next to it)");

  std::string audit_out = "audit.csv";
  auto* audit = app.add_subcommand("audit", "Equilibrium audit over the discount grid");
  add_scenario(audit);
  audit->add_option("-o,--out", audit_out, "Audit CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const Scenario sc = load_scenario(scenario_path);
    if (*one_shot) return cmd_one_shot(sc);
    if (*drg) return cmd_drg(sc, discount, trace_out);
    if (*region) return cmd_region(sc, region_dir, simulate, seed);
    if (*sweep) return cmd_sweep(sc, gains_out);
    if (*audit) return cmd_audit(sc, audit_out);
  } catch (const InfeasibleLoadError& e) {
    std::cerr << "infeasible load: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
