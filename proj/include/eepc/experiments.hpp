#pragma once

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <future>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"
#include "eepc/game.hpp"
#include "eepc/markov.hpp"
#include "eepc/repeated.hpp"
#include "eepc/scenario.hpp"
#include "eepc/stochastic.hpp"

#ifndef EEPC_VERSION
#define EEPC_VERSION "unknown"
#endif

namespace eepc {

/// Environment variable that caps the policy enumeration budget.
inline constexpr const char* kBudgetEnv = "EEPC_ENUMERATION_BUDGET";

inline double effective_budget(double configured) {
  if (const char* env = std::getenv(kBudgetEnv)) {
    char* end = nullptr;
    const double cap = std::strtod(env, &end);
    if (end != env && cap > 0.0) return std::min(configured, cap);
  }
  return configured;
}

struct RegionArtifacts {
  /// Unscaled utility of every joint grid profile, per channel state.
  std::vector<std::vector<UtilityPoint>> state_clouds;
  UtilityRegion region;
  StationaryPolicy ne_policy;
  StationaryPolicy op_policy;
  UtilityPoint expected_ne;
  UtilityPoint expected_op;
  SocialOptimum star;
  StationaryPolicy star_policy;
};

/// Per-state utility clouds, the long-run region, and the expected NE, expected
/// OP and welfare-maximizing ("star") points.
inline RegionArtifacts run_region_experiment(const Scenario& sc) {
  const GameSpec& spec = sc.game;
  spec.require_grid();
  RegionArtifacts out;

  const JointGrid grid(spec);
  for (const auto& state : sc.channel.states) {
    std::vector<UtilityPoint> cloud;
    cloud.reserve(grid.count());
    for (std::size_t j = 0; j < grid.count(); ++j) cloud.push_back(utility(spec, sc.efficiency, state, grid.profile(j)));
    out.state_clouds.push_back(std::move(cloud));
  }

  RegionOptions options;
  options.enumeration_budget = effective_budget(sc.region.enumeration_budget);
  out.region = feasible_region(spec, sc.efficiency, sc.channel, options);

  for (const auto& state : sc.channel.states) {
    out.ne_policy.per_state.push_back(nash_powers(spec, sc.efficiency, state).powers);
    out.op_policy.per_state.push_back(op_powers(spec, sc.efficiency, state).powers);
  }
  out.expected_ne = expected_utility(spec, sc.efficiency, sc.channel, out.ne_policy, out.region.stationary);
  out.expected_op = expected_utility(spec, sc.efficiency, sc.channel, out.op_policy, out.region.stationary);
  out.star = social_optimum(out.region, sc.region.weights);
  out.star_policy = decode_policy(spec, out.star.policy);
  return out;
}

inline void write_region_csv(std::ostream& out, const UtilityRegion& region) {
  const auto old = out.precision(17);
  const std::size_t k = region.points.empty() ? 0 : region.points.front().utility.size();
  for (std::size_t i = 0; i < k; ++i) out << 'u' << (i + 1) << ',';
  out << "isHull,isPareto,isIndividuallyRational\n";
  for (const auto& p : region.points) {
    for (double v : p.utility.values) out << v << ',';
    out << int(p.on_hull) << ',' << int(p.on_pareto) << ',' << int(p.individually_rational) << '\n';
  }
  out.precision(old);
}

inline void write_state_clouds_csv(std::ostream& out, const RegionArtifacts& art, const GameSpec& spec) {
  const auto old = out.precision(17);
  const JointGrid grid(spec);
  out << "state,profile";
  for (std::size_t i = 0; i < spec.num_players(); ++i) out << ",p" << (i + 1);
  for (std::size_t i = 0; i < spec.num_players(); ++i) out << ",u" << (i + 1);
  out << '\n';
  for (std::size_t s = 0; s < art.state_clouds.size(); ++s) {
    for (std::size_t j = 0; j < art.state_clouds[s].size(); ++j) {
      out << s << ',' << j;
      for (double p : grid.profile(j).powers) out << ',' << p;
      for (double u : art.state_clouds[s][j].values) out << ',' << u;
      out << '\n';
    }
  }
  out.precision(old);
}

inline nlohmann::json solver_metadata() {
  return {{"root_residual_tolerance", 1e-10},
          {"root_max_iterations", 200},
          {"hull_collinear_tolerance", 1e-12},
          {"version", EEPC_VERSION}};
}

inline nlohmann::json region_metadata(const Scenario& sc, const RegionArtifacts& art) {
  auto policy_json = [](const StationaryPolicy& p) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& prof : p.per_state) arr.push_back(prof.powers);
    return arr;
  };
  return {{"scenario", sc.name},
          {"scenario_hash", sc.source_hash},
          {"solver", solver_metadata()},
          {"stationary_distribution", art.region.stationary},
          {"minmax", art.region.minmax},
          {"region_path", art.region.path_used == RegionPath::Enumeration ? "enumeration" : "minkowski_sum"},
          {"policies_represented", art.region.policies_represented},
          {"points",
           {{"expected_ne", {{"utility", art.expected_ne.values}, {"policy", policy_json(art.ne_policy)}}},
            {"expected_op", {{"utility", art.expected_op.values}, {"policy", policy_json(art.op_policy)}}},
            {"star",
             {{"utility", art.star.utility.values},
              {"policy", policy_json(art.star_policy)},
              {"policy_index", art.star.policy},
              {"welfare", art.star.welfare},
              {"weights", sc.region.weights},
              {"folk_certified", art.star.folk_certified}}}}}};
}

/// Matplotlib script that draws region.csv, states.csv and points.json.
inline void write_region_plot_script(std::ostream& out) {
  out << R"(#!/usr/bin/env python3
# Generated by eepc. Usage: python3 plot_region.py [dir]
import csv, json, os, sys
import matplotlib.pyplot as plt

d = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))
rows = list(csv.DictReader(open(os.path.join(d, "region.csv"))))
states = list(csv.DictReader(open(os.path.join(d, "states.csv"))))
meta = json.load(open(os.path.join(d, "points.json")))

fig, ax = plt.subplots()
for s in sorted({r["state"] for r in states}):
    pts = [r for r in states if r["state"] == s]
    ax.scatter([float(r["u1"]) for r in pts], [float(r["u2"]) for r in pts], s=2, alpha=0.3, label="state " + s)
hull = [r for r in rows if r["isHull"] == "1"]
ax.scatter([float(r["u1"]) for r in rows], [float(r["u2"]) for r in rows], s=2, c="gray", label="expected")
ax.scatter([float(r["u1"]) for r in hull], [float(r["u2"]) for r in hull], s=8, c="k", label="hull vertices")
vm = meta["minmax"]
ax.axvline(vm[0], ls=":", c="k")
ax.axhline(vm[1], ls=":", c="k")
p = meta["points"]
ax.plot(*p["expected_ne"]["utility"], "o", label="expected NE")
ax.plot(*p["expected_op"]["utility"], "s", label="expected OP")
ax.plot(*p["star"]["utility"], "*", ms=14, label="social optimum")
ax.set_xlabel("u1 [bit/J]")
ax.set_ylabel("u2 [bit/J]")
ax.legend()
fig.savefig(os.path.join(d, "region.png"), dpi=150)
)";
}

struct GainCurvePoint {
  int players = 0;
  double alpha = 0.0;  // K/N
  double w_ne = 0.0;
  double w_drg = 0.0;
  double w_sdrg = 0.0;
  double gain_drg = 0.0;   // percent
  double gain_sdrg = 0.0;  // percent
  double strong_power = 0.0;  // symmetric social optimum, player with the strong channel
  double weak_power = 0.0;
};

struct GainSeries {
  int block_length = 0;
  double beta_star = 0.0;
  double alpha_max = 0.0;  // 1/beta* + 1/N
  int k_last = 0;          // largest K with K < N/beta* + 1
  std::vector<GainCurvePoint> points;
  std::vector<int> skipped;  // every player saturated at the NE
};

/// The K-state channel where one uniformly drawn player has the strong gain.
inline MarkovChannel strong_player_channel(int players, double strong, double weak) {
  std::vector<ChannelState> states;
  for (int s = 0; s < players; ++s) {
    ChannelState st{std::vector<double>(static_cast<std::size_t>(players), weak)};
    st.gains[static_cast<std::size_t>(s)] = strong;
    states.push_back(std::move(st));
  }
  return MarkovChannel::uniform(std::move(states));
}

/// Sum of expected utilities under a per-state policy built by `profile_for`.
inline double expected_welfare(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain,
                               const std::function<PowerProfile(const ChannelState&)>& profile_for) {
  StationaryPolicy policy;
  for (const auto& st : chain.states) policy.per_state.push_back(profile_for(st));
  return expected_utility(spec, f, chain, policy, stationary_distribution(chain)).sum();
}

/// Welfare-maximizing individually rational policy among exchange-symmetric
/// ones: the strong player sends p_s and every weak player p_w, both from the
/// grid. Under this channel model the symmetric class is closed under
/// relabeling, so each state carries the same welfare.
inline GainCurvePoint symmetric_social_optimum(const GameSpec& spec, const EfficiencyFunction& f,
                                               const MarkovChannel& chain, const std::vector<double>& minmax_values) {
  const auto& grid = spec.power_grid.front();
  const ChannelState& state = chain.states.front();  // player 0 strong
  const std::size_t k = spec.num_players();
  const double floor_value = *std::max_element(minmax_values.begin(), minmax_values.end());

  GainCurvePoint best;
  bool found = false;
  PowerProfile p{std::vector<double>(k)};
  for (double ps : grid) {
    for (double pw : grid) {
      p[0] = ps;
      for (std::size_t i = 1; i < k; ++i) p[i] = pw;
      const double u_strong = player_utility(spec, f, state, p, 0);
      const double u_weak = k > 1 ? player_utility(spec, f, state, p, 1) : 0.0;
      const double welfare = u_strong + static_cast<double>(k - 1) * u_weak;
      const double per_player = welfare / static_cast<double>(k);
      if (per_player < floor_value - 1e-12 * std::max(1.0, floor_value)) continue;
      if (!found || welfare > best.w_sdrg) {
        found = true;
        best.w_sdrg = welfare;
        best.strong_power = ps;
        best.weak_power = pw;
      }
    }
  }
  if (!found) throw EmptyRegionError("no individually rational symmetric policy");
  return best;
}

/// One point of the load sweep, or nullopt when every player saturates at the NE.
inline std::optional<GainCurvePoint> gain_point(const SweepConfig& sw, const EfficiencyFunction& f, int players) {
  GameSpec spec;
  spec.players = players;
  spec.noise_power = sw.noise_power;
  spec.rate = sw.rate;
  spec.spreading_factor = sw.spreading_factor;
  spec.max_power.assign(static_cast<std::size_t>(players), sw.max_power);
  const MarkovChannel chain = strong_player_channel(players, sw.strong_gain, sw.weak_gain);

  const EquilibriumProfile ne_probe = nash_powers(spec, f, chain.states.front());
  if (ne_probe.all_saturated()) return std::nullopt;

  GainCurvePoint pt;
  pt.players = players;
  pt.alpha = static_cast<double>(players) / sw.spreading_factor;
  pt.w_ne = expected_welfare(spec, f, chain, [&](const ChannelState& st) { return nash_powers(spec, f, st).powers; });
  pt.w_drg = expected_welfare(spec, f, chain, [&](const ChannelState& st) { return op_powers(spec, f, st).powers; });

  GridConfig gc;
  gc.points = sw.grid_points;
  gc.spacing = GridSpacing::Log;
  gc.min_power = sw.grid_min_power;
  gc.include_zero = true;
  std::vector<double> extras = equilibrium_powers(spec, f, MarkovChannel::single(chain.states.front()), 0);
  const auto weak_extras = equilibrium_powers(spec, f, MarkovChannel::single(chain.states.front()), 1);
  extras.insert(extras.end(), weak_extras.begin(), weak_extras.end());
  const auto grid = compose_grid(gc, sw.max_power, extras);
  spec.power_grid.assign(static_cast<std::size_t>(players), grid);

  const auto mu = stationary_distribution(chain);
  const auto floor_values = minmax_max_power(spec, f, chain, mu);
  const GainCurvePoint opt = symmetric_social_optimum(spec, f, chain, floor_values);
  pt.w_sdrg = opt.w_sdrg;
  pt.strong_power = opt.strong_power;
  pt.weak_power = opt.weak_power;
  pt.gain_drg = 100.0 * (pt.w_drg - pt.w_ne) / pt.w_ne;
  pt.gain_sdrg = 100.0 * (pt.w_sdrg - pt.w_ne) / pt.w_ne;
  return pt;
}

/// Largest K with K < N/beta* + 1.
inline int last_feasible_players(int spreading_factor, double beta_star) {
  const double bound = spreading_factor / beta_star + 1.0;
  int k = static_cast<int>(std::ceil(bound)) - 1;
  while (!(static_cast<double>(k) < bound)) --k;
  while (static_cast<double>(k + 1) < bound) ++k;
  return k;
}

/// Gains of the trigger-strategy operating point (DRG) and of the stochastic
/// game social optimum (SDRG) over the one-shot NE, for each block length,
/// as the load K/N approaches 1/beta* + 1/N. Points run concurrently and are
/// collected in K order.
inline std::vector<GainSeries> run_gain_sweep(const SweepConfig& sw) {
  std::vector<GainSeries> out;
  for (int m : sw.block_lengths) {
    const auto f = EfficiencyFunction::packet_success(m);
    GainSeries series;
    series.block_length = m;
    series.beta_star = solve_beta_star(f);
    series.alpha_max = 1.0 / series.beta_star + 1.0 / sw.spreading_factor;
    series.k_last = sw.k_max.value_or(last_feasible_players(sw.spreading_factor, series.beta_star));

    std::vector<std::future<std::optional<GainCurvePoint>>> jobs;
    for (int k = sw.k_min; k <= series.k_last; ++k) {
      jobs.push_back(std::async(std::launch::async, [&sw, f, k] { return gain_point(sw, f, k); }));
    }
    int k = sw.k_min;
    for (auto& job : jobs) {
      if (auto pt = job.get()) {
        series.points.push_back(*pt);
      } else {
        series.skipped.push_back(k);
      }
      ++k;
    }
    out.push_back(std::move(series));
  }
  return out;
}

inline void write_gains_csv(std::ostream& out, const std::vector<GainSeries>& sweep) {
  const auto old = out.precision(17);
  out << "alpha,gainDRG,gainSDRG,M,K,wNE,wDRG,wSDRG,strongPower,weakPower\n";
  for (const auto& s : sweep) {
    for (const auto& p : s.points) {
      out << p.alpha << ',' << p.gain_drg << ',' << p.gain_sdrg << ',' << s.block_length << ',' << p.players << ','
          << p.w_ne << ',' << p.w_drg << ',' << p.w_sdrg << ',' << p.strong_power << ',' << p.weak_power << '\n';
    }
  }
  out.precision(old);
}

inline nlohmann::json sweep_metadata(const Scenario& sc, const std::vector<GainSeries>& sweep) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : sweep) {
    series.push_back({{"M", s.block_length},
                      {"beta_star", s.beta_star},
                      {"alpha_max", s.alpha_max},
                      {"k_last", s.k_last},
                      {"skipped_K", s.skipped}});
  }
  return {{"scenario", sc.name},
          {"scenario_hash", sc.source_hash},
          {"solver", solver_metadata()},
          {"spreading_factor", sc.sweep->spreading_factor},
          {"grid_points", sc.sweep->grid_points},
          {"sdrg_search", "exchange-symmetric state-feedback policies (strong power, weak power) on the grid"},
          {"series", series}};
}

inline void write_gains_plot_script(std::ostream& out) {
  out << R"(#!/usr/bin/env python3
# Generated by eepc. Usage: python3 plot_gains.py gains.csv gains.json
import csv, json, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open(sys.argv[1] if len(sys.argv) > 1 else "gains.csv")))
meta = json.load(open(sys.argv[2] if len(sys.argv) > 2 else "gains.json"))
fig, ax = plt.subplots()
for s in meta["series"]:
    r = [x for x in rows if int(x["M"]) == s["M"]]
    a = [float(x["alpha"]) for x in r]
    ax.plot(a, [float(x["gainSDRG"]) for x in r], "-", label="SDRG, M=%d" % s["M"])
    ax.plot(a, [float(x["gainDRG"]) for x in r], "--", label="DRG, M=%d" % s["M"])
    ax.axvline(s["alpha_max"], ls=":", c="k")
ax.set_xlabel("alpha = K/N")
ax.set_ylabel("gain over NE [%]")
ax.set_yscale("log")
ax.legend()
fig.savefig("gains.png", dpi=150)
)";
}

}  // namespace eepc
