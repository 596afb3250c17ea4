#pragma once

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"
#include "eepc/game.hpp"
#include "eepc/markov.hpp"

namespace eepc {

enum class GridSpacing { Linear, Log };

/// How the discrete power sets of the stochastic game are laid out.
struct GridConfig {
  std::size_t points = 60;
  GridSpacing spacing = GridSpacing::Log;
  double min_power = 0.01;
  bool include_zero = true;
  /// Also insert each player's NE and OP powers of every channel state.
  bool include_equilibria = true;
};

struct DeviationConfig {
  std::size_t player = 0;
  std::size_t stage = 1;
  std::optional<double> power;  // default: best response to the others' OP powers
};

struct RepeatedConfig {
  std::vector<double> discounts{0.05, 0.1, 0.2, 0.3};
  double signal_tolerance = 1e-9;
  std::size_t deviation_grid = 10000;
  std::size_t state = 0;  // channel state the fast power control game is played on
  std::optional<DeviationConfig> deviation;
};

struct RegionConfig {
  double enumeration_budget = 1e7;
  std::vector<double> weights;  // empty: all ones
};

/// Fig. 2 style load sweep: one strong player (gain strong_gain) drawn
/// uniformly among K, the others at weak_gain.
struct SweepConfig {
  int spreading_factor = 128;
  std::vector<int> block_lengths{10, 100};
  int k_min = 2;
  std::optional<int> k_max;
  std::size_t grid_points = 256;
  double grid_min_power = 1e-3;
  double strong_gain = 2.0;
  double weak_gain = 1.0;
  double max_power = 1e4;
  double noise_power = 1.0;
  double rate = 1.0;
};

struct Scenario {
  std::string name;
  GameSpec game;
  EfficiencyFunction efficiency = EfficiencyFunction::packet_success(2);
  MarkovChannel channel;
  GridConfig grid;
  RepeatedConfig repeated;
  RegionConfig region;
  std::optional<SweepConfig> sweep;
  std::string source_hash;  // FNV-1a 64 of the file text, hex
};

/// FNV-1a, 64 bit. Stable across platforms, unlike std::hash.
inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::vector<double> log_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {hi};
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) out.push_back(k + 1 == n ? hi : lo * std::exp(step * static_cast<double>(k)));
  return out;
}

inline std::vector<double> linear_spaced(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  if (n == 0) return out;
  if (n == 1) return {hi};
  for (std::size_t k = 0; k < n; ++k) {
    out.push_back(k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  return out;
}

/// Sorted, de-duplicated grid in [0, pmax] ending at pmax. `extras` are
/// inserted as-is; the regular part fills the remaining `total` slots.
inline std::vector<double> compose_grid(const GridConfig& cfg, double pmax, std::vector<double> extras) {
  std::erase_if(extras, [&](double p) { return !(p > 0.0 && p < pmax); });
  std::sort(extras.begin(), extras.end());
  extras.erase(std::unique(extras.begin(), extras.end()), extras.end());
  const std::size_t reserved = extras.size() + (cfg.include_zero ? 1 : 0);
  if (cfg.points <= reserved) throw ConfigError("grid too small for zero and equilibrium powers");
  const std::size_t regular = cfg.points - reserved;
  if (!(cfg.min_power > 0.0 && cfg.min_power < pmax)) throw ConfigError("grid min_power must lie in (0, max_power)");
  std::vector<double> grid = cfg.spacing == GridSpacing::Log ? log_spaced(cfg.min_power, pmax, regular)
                                                             : linear_spaced(cfg.min_power, pmax, regular);
  if (cfg.include_zero) grid.push_back(0.0);
  grid.insert(grid.end(), extras.begin(), extras.end());
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

/// NE and OP powers of player i in every channel state where they exist.
inline std::vector<double> equilibrium_powers(const GameSpec& spec, const EfficiencyFunction& f,
                                              const MarkovChannel& chain, std::size_t player) {
  std::vector<double> out;
  for (const auto& state : chain.states) {
    try {
      out.push_back(nash_powers(spec, f, state).powers[player]);
    } catch (const InfeasibleLoadError&) {
    }
    try {
      out.push_back(op_powers(spec, f, state).powers[player]);
    } catch (const InfeasibleLoadError&) {
    } catch (const UniquenessViolationError&) {
    }
  }
  return out;
}

inline void build_power_grids(Scenario& sc) {
  sc.game.power_grid.clear();
  std::vector<std::vector<double>> grids;
  for (std::size_t i = 0; i < sc.game.num_players(); ++i) {
    std::vector<double> extras;
    if (sc.grid.include_equilibria) extras = equilibrium_powers(sc.game, sc.efficiency, sc.channel, i);
    grids.push_back(compose_grid(sc.grid, sc.game.max_power[i], std::move(extras)));
  }
  sc.game.power_grid = std::move(grids);
}

namespace detail {

template <typename T>
T require(const toml::table& t, std::string_view key, std::string_view where) {
  auto v = t[key].value<T>();
  if (!v) throw ConfigError(std::string(where) + "." + std::string(key) + " is missing or has the wrong type");
  return *v;
}

template <typename View>
std::vector<double> number_array(const View& node, std::string_view what) {
  const auto* arr = node.as_array();
  if (!arr) throw ConfigError(std::string(what) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& el : *arr) {
    auto v = el.template value<double>();
    if (!v) throw ConfigError(std::string(what) + " must contain only numbers");
    out.push_back(*v);
  }
  return out;
}

template <typename View>
std::vector<double> scalar_or_array(const View& node, std::size_t n, std::string_view what) {
  if (auto v = node.template value<double>()) return std::vector<double>(n, *v);
  auto out = number_array(node, what);
  if (out.size() != n) throw ConfigError(std::string(what) + " must have one entry per player");
  return out;
}

}  // namespace detail

/// Parses the TOML scenario format described in docs/scenario-format.md.
inline Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>") {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "cannot parse " << origin << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  Scenario sc;
  sc.source_hash = fnv1a_hex(text);
  sc.name = root["name"].value_or(std::string("unnamed"));

  const toml::table* game = root["game"].as_table();
  if (!game) throw ConfigError("[game] table is required");
  sc.game.players = static_cast<int>(detail::require<std::int64_t>(*game, "players", "game"));
  sc.game.noise_power = (*game)["noise_power"].value_or(1.0);
  sc.game.rate = (*game)["rate"].value_or(1.0);
  sc.game.spreading_factor = static_cast<int>((*game)["spreading_factor"].value_or(std::int64_t{1}));
  if (sc.game.players < 1) throw ConfigError("game.players must be >= 1");
  sc.game.max_power = detail::scalar_or_array(root["game"]["max_power"], sc.game.num_players(), "game.max_power");

  const toml::table* eff = root["efficiency"].as_table();
  if (!eff) throw ConfigError("[efficiency] table is required");
  const auto kind = detail::require<std::string>(*eff, "kind", "efficiency");
  if (kind == "packet_success") {
    sc.efficiency = EfficiencyFunction::packet_success(static_cast<int>(detail::require<std::int64_t>(*eff, "block_length", "efficiency")));
  } else if (kind == "rate_exp") {
    if (auto c = (*eff)["c"].value<double>()) {
      sc.efficiency = EfficiencyFunction::rate_exp(*c);
    } else {
      sc.efficiency = EfficiencyFunction::from_rate(detail::require<double>(*eff, "rate_bits", "efficiency"));
    }
  } else {
    throw ConfigError("efficiency.kind must be packet_success or rate_exp, got " + kind);
  }

  if (const toml::table* ch = root["channel"].as_table()) {
    if (ch->contains("states")) {
      const auto* arr = (*ch)["states"].as_array();
      if (!arr) throw ConfigError("channel.states must be an array of arrays");
      for (std::size_t s = 0; s < arr->size(); ++s) {
        sc.channel.states.push_back({detail::number_array(root["channel"]["states"][s], "channel.states[]")});
      }
      if (ch->contains("transition")) {
        const auto* rows = (*ch)["transition"].as_array();
        if (!rows) throw ConfigError("channel.transition must be an array of arrays");
        for (std::size_t s = 0; s < rows->size(); ++s) {
          sc.channel.kernel.push_back(detail::number_array(root["channel"]["transition"][s], "channel.transition[]"));
        }
      } else {
        const std::size_t n = sc.channel.states.size();
        sc.channel.kernel.assign(n, std::vector<double>(n, 1.0 / static_cast<double>(n)));
      }
      if (auto init = (*ch)["initial"].value<std::int64_t>()) sc.channel.initial = static_cast<std::size_t>(*init);
    } else if (ch->contains("state")) {
      sc.channel = MarkovChannel::single({detail::number_array(root["channel"]["state"], "channel.state")});
    } else {
      throw ConfigError("[channel] needs `states` (Markov chain) or `state` (fixed)");
    }
    sc.channel.validate();
    for (const auto& st : sc.channel.states) check_state(sc.game, st);
  }

  if (const toml::table* g = root["grid"].as_table()) {
    sc.grid.points = static_cast<std::size_t>((*g)["points"].value_or(std::int64_t{60}));
    const auto spacing = (*g)["spacing"].value_or(std::string("log"));
    if (spacing == "log") {
      sc.grid.spacing = GridSpacing::Log;
    } else if (spacing == "linear") {
      sc.grid.spacing = GridSpacing::Linear;
    } else {
      throw ConfigError("grid.spacing must be log or linear");
    }
    sc.grid.min_power = (*g)["min_power"].value_or(0.01);
    sc.grid.include_zero = (*g)["include_zero"].value_or(true);
    sc.grid.include_equilibria = (*g)["include_equilibria"].value_or(true);
  }

  if (const toml::table* r = root["repeated"].as_table()) {
    if (r->contains("discounts")) sc.repeated.discounts = detail::number_array(root["repeated"]["discounts"], "repeated.discounts");
    sc.repeated.signal_tolerance = (*r)["signal_tolerance"].value_or(1e-9);
    sc.repeated.deviation_grid = static_cast<std::size_t>((*r)["deviation_grid"].value_or(std::int64_t{10000}));
    sc.repeated.state = static_cast<std::size_t>((*r)["state"].value_or(std::int64_t{0}));
    if (const toml::table* d = (*r)["deviation"].as_table()) {
      DeviationConfig dev;
      dev.player = static_cast<std::size_t>((*d)["player"].value_or(std::int64_t{0}));
      dev.stage = static_cast<std::size_t>((*d)["stage"].value_or(std::int64_t{1}));
      if (auto p = (*d)["power"].value<double>()) dev.power = *p;
      if (dev.player >= sc.game.num_players()) throw ConfigError("repeated.deviation.player out of range");
      if (dev.stage < 1) throw ConfigError("repeated.deviation.stage is 1-based");
      sc.repeated.deviation = dev;
    }
    for (double l : sc.repeated.discounts) {
      if (!(l > 0.0 && l < 1.0)) throw ConfigError("repeated.discounts must lie in (0, 1)");
    }
  }

  if (const toml::table* r = root["region"].as_table()) {
    sc.region.enumeration_budget = (*r)["enumeration_budget"].value_or(1e7);
    if (r->contains("weights")) sc.region.weights = detail::number_array(root["region"]["weights"], "region.weights");
  }
  if (sc.region.weights.empty()) sc.region.weights.assign(sc.game.num_players(), 1.0);
  if (sc.region.weights.size() != sc.game.num_players()) throw ConfigError("region.weights needs one entry per player");

  if (const toml::table* s = root["sweep"].as_table()) {
    SweepConfig sw;
    sw.spreading_factor = static_cast<int>((*s)["spreading_factor"].value_or(std::int64_t{128}));
    if (s->contains("block_lengths")) {
      sw.block_lengths.clear();
      for (double m : detail::number_array(root["sweep"]["block_lengths"], "sweep.block_lengths")) {
        sw.block_lengths.push_back(static_cast<int>(m));
      }
    }
    sw.k_min = static_cast<int>((*s)["k_min"].value_or(std::int64_t{2}));
    if (auto km = (*s)["k_max"].value<std::int64_t>()) sw.k_max = static_cast<int>(*km);
    sw.grid_points = static_cast<std::size_t>((*s)["grid_points"].value_or(std::int64_t{256}));
    sw.grid_min_power = (*s)["grid_min_power"].value_or(1e-3);
    sw.strong_gain = (*s)["strong_gain"].value_or(2.0);
    sw.weak_gain = (*s)["weak_gain"].value_or(1.0);
    sw.max_power = (*s)["max_power"].value_or(1e4);
    sw.noise_power = (*s)["noise_power"].value_or(1.0);
    sw.rate = (*s)["rate"].value_or(1.0);
    if (sw.spreading_factor < 1) throw ConfigError("sweep.spreading_factor must be >= 1");
    if (sw.k_min < 2) throw ConfigError("sweep.k_min must be >= 2");
    for (int m : sw.block_lengths) {
      const double beta = solve_beta_star(EfficiencyFunction::packet_success(m));
      const double k_bound = sw.spreading_factor / beta + 1.0;
      if (sw.k_max && !(*sw.k_max < k_bound)) {
        throw ConfigError("sweep.k_max violates K < N/beta* + 1 = " + std::to_string(k_bound) + " for M = " + std::to_string(m));
      }
    }
    sc.sweep = sw;
  }

  sc.game.validate();
  if (!sc.channel.states.empty()) build_power_grids(sc);
  sc.game.validate();
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open scenario file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path);
}

}  // namespace eepc
