#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"
#include "eepc/game.hpp"

namespace eepc {

/// Total received power broadcast by the receiver after each stage.
struct PublicSignal {
  double value = 0.0;
};

/// s = sigma^2 + sum_i eta_i p_i. No 1/N here: the receiver measures raw power.
inline PublicSignal observe(const GameSpec& spec, const ChannelState& state, const PowerProfile& profile) {
  double s = spec.noise_power;
  for (std::size_t i = 0; i < profile.size(); ++i) s += state[i] * profile[i];
  return {s};
}

/// Signal at the operating point, sigma^2 (1 + K gamma* / (1 - a gamma*)).
/// Depends on no channel gain, so each player can compute it from public data.
inline double op_signal(const GameSpec& spec, double gamma_star) {
  const double a = spec.effective_interferers();
  return spec.noise_power * (1.0 + spec.players * gamma_star / (1.0 - a * gamma_star));
}

/// Largest discount factor lambda (weight of the current stage) for which
/// the grim trigger plan is guaranteed to be subgame perfect:
///   (1 - a g)/(a g) f(g)/f(b) - (1 - a b)/(a b),  a = (K-1)/N, g = gamma*, b = beta*.
/// Values >= 1 mean every lambda qualifies; values <= 0 mean none does.
inline double discount_threshold(const EfficiencyFunction& f, const LoadedGameShape& shape) {
  if (shape.players() < 2) throw DomainError("discount threshold needs at least two players");
  const double a = shape.effective_interferers();
  const double beta = solve_beta_star(f);
  if (!(1.0 - a * beta > 0.0)) {
    throw InfeasibleLoadError("load " + std::to_string(a) + " exceeds 1/beta* = " + std::to_string(1.0 / beta));
  }
  const double gamma = solve_gamma_star(f, shape);
  return (1.0 - a * gamma) / (a * gamma) * f.eval(gamma) / f.eval(beta) - (1.0 - a * beta) / (a * beta);
}

inline double discount_threshold(const GameSpec& spec, const EfficiencyFunction& f) {
  return discount_threshold(f, spec.shape());
}

/// Stages needed so that the discarded tail weight (1 - lambda)^T is <= tail.
inline std::size_t horizon_for(double lambda, double tail = 1e-12) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
  return static_cast<std::size_t>(std::ceil(std::log(tail) / std::log1p(-lambda)));
}

struct DiscountedGameConfig {
  double discount = 0.5;
  std::size_t horizon = 0;
  /// Relative tolerance of the signal comparison; 0 means exact equality.
  double signal_tolerance = 1e-9;

  static DiscountedGameConfig with_discount(double lambda, double signal_tolerance = 1e-9) {
    return {lambda, horizon_for(lambda), signal_tolerance};
  }

  void validate() const {
    if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("discount factor must lie in (0, 1)");
    if (horizon == 0) throw ConfigError("horizon must be positive");
    if (!(signal_tolerance >= 0.0)) throw ConfigError("signal tolerance must be >= 0");
  }
};

enum class Phase { Cooperate, Punish };

inline const char* to_string(Phase p) { return p == Phase::Cooperate ? "cooperate" : "punish"; }

/// Grim trigger monitor: any signal away from the reference flips to Punish for good.
struct TriggerStrategyState {
  Phase phase = Phase::Cooperate;
  double reference_signal = 0.0;
  double tolerance = 1e-9;

  bool matches(double signal) const {
    if (tolerance == 0.0) return signal == reference_signal;
    return std::abs(signal - reference_signal) <= tolerance * std::abs(reference_signal);
  }

  void update(double signal) {
    if (phase == Phase::Cooperate && !matches(signal)) phase = Phase::Punish;
  }
};

/// A public strategy of one player. It sees the stage index (1-based), its own
/// channel gain and the past public signals, and nothing else.
using Policy = std::function<double(std::size_t stage, double own_gain, std::span<const double> past_signals)>;

/// Parameters every player can compute from common knowledge.
struct TriggerPlan {
  double beta_star = 0.0;
  double gamma_star = 0.0;
  double reference_signal = 0.0;
};

inline TriggerPlan make_trigger_plan(const GameSpec& spec, const EfficiencyFunction& f) {
  const double beta = solve_beta_star(f);
  const double gamma = solve_gamma_star(f, spec.shape());
  if (!(1.0 - spec.effective_interferers() * beta > 0.0)) {
    throw InfeasibleLoadError("trigger plan needs a non-saturated one-shot equilibrium");
  }
  return {beta, gamma, op_signal(spec, gamma)};
}

/// Play p_i^OP while the signal history matches the operating point, p_i^* afterwards.
inline Policy make_trigger_policy(const GameSpec& spec, const TriggerPlan& plan, std::size_t player,
                                  double signal_tolerance = 1e-9) {
  const double a = spec.effective_interferers();
  const double noise = spec.noise_power;
  const double pmax = spec.max_power.at(player);
  struct Memory {
    TriggerStrategyState monitor;
    std::size_t consumed = 0;
  };
  Memory memory{{Phase::Cooperate, plan.reference_signal, signal_tolerance}, 0};
  return [=](std::size_t, double own_gain, std::span<const double> past) mutable -> double {
    if (past.size() < memory.consumed) memory = Memory{{Phase::Cooperate, plan.reference_signal, signal_tolerance}, 0};
    for (; memory.consumed < past.size(); ++memory.consumed) memory.monitor.update(past[memory.consumed]);
    const double target = memory.monitor.phase == Phase::Cooperate ? plan.gamma_star : plan.beta_star;
    return std::min(noise / own_gain * target / (1.0 - a * target), pmax);
  };
}

/// Follows `base` except at one stage where it plays `power`.
inline Policy make_one_shot_deviation(Policy base, std::size_t stage, double power) {
  return [base = std::move(base), stage, power](std::size_t t, double g, std::span<const double> past) mutable {
    const double p = base(t, g, past);
    return t == stage ? power : p;
  };
}

struct DrgTrace {
  std::vector<PowerProfile> profiles;
  std::vector<double> signals;
  std::vector<UtilityPoint> stage_utilities;
  std::vector<Phase> phases;  // public monitor phase in force when the stage was played
  UtilityPoint discounted;
  double tail_weight = 0.0;   // (1 - lambda)^T, the truncated probability mass

  std::size_t stages() const { return profiles.size(); }
};

/// Plays the discounted repeated game for config.horizon stages on a fixed channel.
inline DrgTrace run_drg(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                        const DiscountedGameConfig& config, std::vector<Policy> policies,
                        std::optional<double> reference_signal = std::nullopt) {
  config.validate();
  check_state(spec, state);
  if (policies.size() != spec.num_players()) throw ConfigError("need one policy per player");

  DrgTrace trace;
  trace.discounted.values.assign(spec.num_players(), 0.0);
  TriggerStrategyState monitor{Phase::Cooperate, reference_signal.value_or(0.0), config.signal_tolerance};

  double weight = config.discount;
  for (std::size_t t = 1; t <= config.horizon; ++t) {
    PowerProfile profile{std::vector<double>(spec.num_players())};
    const std::span<const double> history(trace.signals.data(), trace.signals.size());
    for (std::size_t i = 0; i < spec.num_players(); ++i) {
      profile[i] = std::clamp(policies[i](t, state[i], history), 0.0, spec.max_power[i]);
    }
    const UtilityPoint u = utility(spec, f, state, profile);
    const double s = observe(spec, state, profile).value;

    trace.phases.push_back(reference_signal ? monitor.phase : Phase::Cooperate);
    for (std::size_t i = 0; i < spec.num_players(); ++i) trace.discounted[i] += weight * u[i];
    weight *= 1.0 - config.discount;

    trace.profiles.push_back(std::move(profile));
    trace.stage_utilities.push_back(u);
    trace.signals.push_back(s);
    if (reference_signal) monitor.update(s);
  }
  trace.tail_weight = std::pow(1.0 - config.discount, static_cast<double>(config.horizon));
  return trace;
}

inline void write_trace_csv(std::ostream& out, const DrgTrace& trace) {
  const auto old_precision = out.precision(17);
  out << "stage,player,power,signal,stageUtility,phase\n";
  for (std::size_t t = 0; t < trace.stages(); ++t) {
    for (std::size_t i = 0; i < trace.profiles[t].size(); ++i) {
      out << (t + 1) << ',' << (i + 1) << ',' << trace.profiles[t][i] << ',' << trace.signals[t] << ','
          << trace.stage_utilities[t][i] << ',' << to_string(trace.phases[t]) << '\n';
    }
  }
  out.precision(old_precision);
}

struct AuditReport {
  double max_gain = -std::numeric_limits<double>::infinity();  // relative to u_i(OP)
  std::size_t worst_player = 0;
  double worst_power = 0.0;
  bool is_equilibrium = true;
  /// Largest lambda for which no grid deviation pays; +inf when none ever does.
  double empirical_boundary = std::numeric_limits<double>::infinity();
};

/// Checks every single-stage unilateral deviation from the trigger plan.
///
/// Player i plays p at stage 1 while the others cooperate, then faces the
/// one-shot NE forever and best-responds to it. Undetected deviations (signal
/// equal to the reference) keep cooperation going. For discounted games the
/// one-shot deviation principle makes this search complete.
inline AuditReport audit_equilibrium(const GameSpec& spec, const EfficiencyFunction& f, const ChannelState& state,
                                     double lambda, std::size_t grid_points = 10000, double signal_tolerance = 1e-9,
                                     double gain_tolerance = 1e-9) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
  if (grid_points < 2) throw ConfigError("deviation grid needs at least two points");
  check_state(spec, state);
  AuditReport report;
  if (spec.players < 2) {
    report.max_gain = 0.0;
    return report;
  }

  const TriggerPlan plan = make_trigger_plan(spec, f);
  const PowerProfile cooperative = equal_sinr_powers(spec, state, plan.gamma_star).powers;
  const PowerProfile punishment = equal_sinr_powers(spec, state, plan.beta_star).powers;
  const TriggerStrategyState monitor{Phase::Cooperate, observe(spec, state, cooperative).value, signal_tolerance};

  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    const double u_coop = player_utility(spec, f, state, cooperative, i);
    PowerProfile punished = punishment;
    punished[i] = best_response(spec, state, punishment, i, plan.beta_star);
    const double u_punished = player_utility(spec, f, state, punished, i);

    PowerProfile deviated = cooperative;
    for (std::size_t k = 0; k < grid_points; ++k) {
      const double p = spec.max_power[i] * static_cast<double>(k) / static_cast<double>(grid_points - 1);
      deviated[i] = p;
      const double u_dev = player_utility(spec, f, state, deviated, i);
      const bool detected = !monitor.matches(observe(spec, state, deviated).value);
      const double continuation = detected ? u_punished : u_coop;
      const double payoff = lambda * u_dev + (1.0 - lambda) * continuation;
      const double gain = (payoff - u_coop) / u_coop;
      if (gain > report.max_gain) {
        report.max_gain = gain;
        report.worst_player = i;
        report.worst_power = p;
      }
      // payoff - u_coop = lambda (u_dev - u_punished) - (u_coop - u_punished) for detected deviations.
      if (detected && u_dev > u_punished) {
        report.empirical_boundary = std::min(report.empirical_boundary, (u_coop - u_punished) / (u_dev - u_punished));
      }
    }
  }
  report.is_equilibrium = report.max_gain <= gain_tolerance;
  return report;
}

}  // namespace eepc
