#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"

namespace eepc {

/// Squared channel gains eta_i = |g_i|^2 of every transmitter for one block.
struct ChannelState {
  std::vector<double> gains;

  std::size_t size() const { return gains.size(); }
  double operator[](std::size_t i) const { return gains[i]; }
  bool operator==(const ChannelState&) const = default;
};

/// Transmit power of every player, in W.
struct PowerProfile {
  std::vector<double> powers;

  std::size_t size() const { return powers.size(); }
  double operator[](std::size_t i) const { return powers[i]; }
  double& operator[](std::size_t i) { return powers[i]; }
  bool operator==(const PowerProfile&) const = default;
};

/// Per-player energy efficiency, in bit/J.
struct UtilityPoint {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  double sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  bool operator==(const UtilityPoint&) const = default;
};

/// The multiple-access power control game: K transmitters, noise sigma^2,
/// common rate R and spreading factor N.
struct GameSpec {
  int players = 1;
  double noise_power = 1.0;
  double rate = 1.0;
  int spreading_factor = 1;
  std::vector<double> max_power;
  /// Optional per-player discrete power sets, ascending, ending at max_power.
  std::vector<std::vector<double>> power_grid;

  LoadedGameShape shape() const { return {players, spreading_factor}; }
  double effective_interferers() const { return shape().effective_interferers(); }
  bool has_grid() const { return !power_grid.empty(); }
  std::size_t num_players() const { return static_cast<std::size_t>(players); }

  void validate() const {
    if (players < 1) throw ConfigError("players must be >= 1");
    if (spreading_factor < 1) throw ConfigError("spreading factor must be >= 1");
    if (!(noise_power > 0.0) || !std::isfinite(noise_power)) throw ConfigError("noise power must be positive");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw ConfigError("rate must be positive");
    if (max_power.size() != num_players()) throw ConfigError("max_power must have one entry per player");
    for (double p : max_power) {
      if (!(p > 0.0) || !std::isfinite(p)) throw ConfigError("max power must be positive");
    }
    if (!has_grid()) return;
    if (power_grid.size() != num_players()) throw ConfigError("power grid must have one list per player");
    for (std::size_t i = 0; i < num_players(); ++i) {
      const auto& grid = power_grid[i];
      if (grid.empty()) throw ConfigError("power grid of player " + std::to_string(i) + " is empty");
      if (grid.front() < 0.0) throw ConfigError("power grid entries must be >= 0");
      for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) throw ConfigError("power grid of player " + std::to_string(i) + " is not strictly ascending");
      }
      if (grid.back() != max_power[i]) throw ConfigError("power grid of player " + std::to_string(i) + " must end at max_power");
    }
  }

  void require_grid() const {
    if (!has_grid()) throw ConfigError("operation needs discrete power grids");
  }
};

inline void check_state(const GameSpec& spec, const ChannelState& state) {
  if (state.size() != spec.num_players()) throw DomainError("channel state has wrong dimension");
  for (double g : state.gains) {
    if (!(g > 0.0) || !std::isfinite(g)) throw DomainError("channel gains must be positive");
  }
}

inline void check_profile(const GameSpec& spec, const PowerProfile& profile) {
  if (profile.size() != spec.num_players()) throw DomainError("power profile has wrong dimension");
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double p = profile[i];
    if (!(p >= 0.0) || !std::isfinite(p)) throw DomainError("powers must be non-negative");
    if (p > spec.max_power[i]) throw DomainError("power of player " + std::to_string(i) + " exceeds max_power");
  }
}

/// sigma^2 + (1/N) sum_{j != i} p_j eta_j.
inline double interference_plus_noise(const GameSpec& spec, const ChannelState& state, const PowerProfile& profile,
                                      std::size_t i) {
  double others = 0.0;
  for (std::size_t j = 0; j < profile.size(); ++j) {
    if (j != i) others += profile[j] * state[j];
  }
  return spec.noise_power + others / spec.spreading_factor;
}

inline double sinr(const GameSpec& spec, const ChannelState& state, const PowerProfile& profile, std::size_t i) {
  if (i >= spec.num_players()) throw DomainError("player index " + std::to_string(i) + " out of range");
  return profile[i] * state[i] / interference_plus_noise(spec, state, profile, i);
}

/// R f(SINR_i) / p_i, with u_i = 0 for a silent player.
inline double player_utility(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                             const PowerProfile& profile, std::size_t i) {
  if (profile[i] == 0.0) return 0.0;
  return spec.rate * f.eval(sinr(spec, state, profile, i)) / profile[i];
}

inline UtilityPoint utility(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                            const PowerProfile& profile) {
  check_state(spec, state);
  check_profile(spec, profile);
  UtilityPoint u{std::vector<double>(spec.num_players())};
  for (std::size_t i = 0; i < spec.num_players(); ++i) u[i] = player_utility(spec, f, state, profile, i);
  return u;
}

/// Powers that put every player at the same target SINR, clamped to max_power.
struct EquilibriumProfile {
  PowerProfile powers;
  std::vector<bool> saturated;
  double target_sinr = 0.0;

  bool any_saturated() const { return std::find(saturated.begin(), saturated.end(), true) != saturated.end(); }
  bool all_saturated() const { return std::all_of(saturated.begin(), saturated.end(), [](bool s) { return s; }); }
};

/// p_i = sigma^2/eta_i * x / (1 - a x) for a common SINR target x.
inline EquilibriumProfile equal_sinr_powers(const GameSpec& spec, const ChannelState& state, double target) {
  check_state(spec, state);
  const double denom = 1.0 - spec.effective_interferers() * target;
  if (!(denom > 0.0)) {
    throw InfeasibleLoadError("load (K-1)/N = " + std::to_string(spec.effective_interferers()) +
                              " cannot sustain SINR " + std::to_string(target));
  }
  EquilibriumProfile eq{PowerProfile{std::vector<double>(spec.num_players())},
                        std::vector<bool>(spec.num_players(), false), target};
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const double p = spec.noise_power / state[i] * target / denom;
    if (p > spec.max_power[i]) {
      eq.powers[i] = spec.max_power[i];
      eq.saturated[i] = true;
    } else {
      eq.powers[i] = p;
    }
  }
  return eq;
}

/// One-shot Nash equilibrium: every non-saturated player at SINR beta*.
inline EquilibriumProfile nash_powers(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state) {
  return equal_sinr_powers(spec, state, solve_beta_star(f));
}

/// SINR-fair operating point: p_i eta_i equal across players, every SINR at gamma*.
inline EquilibriumProfile op_powers(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state) {
  if (spec.players > 1) {
    const auto report = check_op_uniqueness(f, spec.shape());
    if (!report.holds) throw UniquenessViolationError("operating point uniqueness condition fails: " + report.diagnostic);
  }
  return equal_sinr_powers(spec, state, solve_gamma_star(f, spec.shape()));
}

/// Continuous best response of player i over [0, P_i^max]. f(SINR)/p is
/// quasi-concave in p with its peak at SINR = beta*, so the answer is that
/// power clamped to the box.
inline double best_response(const GameSpec& spec, const ChannelState& state, const PowerProfile& profile,
                            std::size_t i, double beta_star) {
  const double target = beta_star * interference_plus_noise(spec, state, profile, i) / state[i];
  return std::min(target, spec.max_power[i]);
}

inline double best_response(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                            const PowerProfile& profile, std::size_t i) {
  if (i >= spec.num_players()) throw DomainError("player index out of range");
  return best_response(spec, state, profile, i, solve_beta_star(f));
}

/// Exhaustive argmax over a discrete power set; ties go to the lowest power.
inline double best_response_on_grid(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                                    PowerProfile profile, std::size_t i, const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("empty power grid");
  double best_power = grid.front();
  double best_value = -1.0;
  for (double p : grid) {
    profile[i] = p;
    const double u = player_utility(spec, f, state, profile, i);
    if (u > best_value) {
      best_value = u;
      best_power = p;
    }
  }
  return best_power;
}

inline double best_response_on_grid(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                                    const PowerProfile& profile, std::size_t i) {
  spec.require_grid();
  return best_response_on_grid(spec, f, state, profile, i, spec.power_grid.at(i));
}

}  // namespace eepc
