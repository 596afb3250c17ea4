#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>

#include "eepc/errors.hpp"
#include "eepc/root_finding.hpp"

namespace eepc {

/// f(x) = (1 - e^{-x})^M, the block success rate of an M-symbol block.
struct PacketSuccess {
  int block_length = 2;
};

/// f(x) = e^{-c/x}, with c = 2^R - 1 for a transmission rate R.
struct RateExp {
  double c = 1.0;
};

/// Sigmoidal efficiency function mapping SINR to block success probability.
class EfficiencyFunction {
public:
  using Kind = std::variant<PacketSuccess, RateExp>;

  EfficiencyFunction(PacketSuccess p) : kind_(p) {
    if (p.block_length < 1) throw ConfigError("block length M must be >= 1");
  }
  EfficiencyFunction(RateExp r) : kind_(r) {
    if (!(r.c > 0.0) || !std::isfinite(r.c)) throw ConfigError("RateExp constant c must be positive");
  }

  static EfficiencyFunction packet_success(int block_length) { return PacketSuccess{block_length}; }
  static EfficiencyFunction rate_exp(double c) { return RateExp{c}; }
  static EfficiencyFunction from_rate(double bits) { return RateExp{std::exp2(bits) - 1.0}; }

  const Kind& kind() const { return kind_; }

  std::string describe() const {
    if (auto p = std::get_if<PacketSuccess>(&kind_)) return "packet_success(M=" + std::to_string(p->block_length) + ")";
    return "rate_exp(c=" + std::to_string(std::get<RateExp>(kind_).c) + ")";
  }

  /// (1-e^{-x})^M with M >= 2 and e^{-c/x} both have one inflection point;
  /// (1-e^{-x}) is concave everywhere.
  bool is_sigmoidal() const {
    if (auto p = std::get_if<PacketSuccess>(&kind_)) return p->block_length >= 2;
    return true;
  }

  double operator()(double x) const { return eval(x); }

  double eval(double x) const {
    require_nonnegative(x);
    if (auto p = std::get_if<PacketSuccess>(&kind_)) return std::pow(-std::expm1(-x), p->block_length);
    if (x == 0.0) return 0.0;
    return std::exp(-std::get<RateExp>(kind_).c / x);
  }

  double eval_d1(double x) const {
    require_nonnegative(x);
    if (auto p = std::get_if<PacketSuccess>(&kind_)) {
      const int m = p->block_length;
      return m * std::exp(-x) * std::pow(-std::expm1(-x), m - 1);
    }
    if (x == 0.0) return 0.0;
    const double c = std::get<RateExp>(kind_).c;
    return c / (x * x) * std::exp(-c / x);
  }

  double eval_d2(double x) const {
    require_nonnegative(x);
    if (auto p = std::get_if<PacketSuccess>(&kind_)) {
      const int m = p->block_length;
      const double e = std::exp(-x);
      if (m == 1) return -e;
      return m * e * std::pow(-std::expm1(-x), m - 2) * (m * e - 1.0);
    }
    if (x == 0.0) throw DomainError("RateExp second derivative is singular at 0");
    const double c = std::get<RateExp>(kind_).c;
    return std::exp(-c / x) * (c * c / (x * x * x * x) - 2.0 * c / (x * x * x));
  }

  /// x f'(x) / f(x), evaluated without forming f (which underflows for large M).
  double elasticity(double x) const {
    if (!(x > 0.0)) throw DomainError("elasticity requires x > 0");
    if (auto p = std::get_if<PacketSuccess>(&kind_)) return p->block_length * x / std::expm1(x);
    return std::get<RateExp>(kind_).c / x;
  }

  /// f''(x) / f'(x).
  double curvature_ratio(double x) const {
    if (!(x > 0.0)) throw DomainError("curvature ratio requires x > 0");
    if (auto p = std::get_if<PacketSuccess>(&kind_)) return (p->block_length - 1) / std::expm1(x) - 1.0;
    const double c = std::get<RateExp>(kind_).c;
    return c / (x * x) - 2.0 / x;
  }

private:
  static void require_nonnegative(double x) {
    if (!(x >= 0.0)) throw DomainError("efficiency function evaluated at negative SINR " + std::to_string(x));
  }

  Kind kind_;
};

/// K players sharing a spreading factor N; interference enters SINR scaled by 1/N.
class LoadedGameShape {
public:
  LoadedGameShape(int players, int spreading_factor) : players_(players), spreading_(spreading_factor) {
    if (players < 1) throw ConfigError("number of players must be >= 1");
    if (spreading_factor < 1) throw ConfigError("spreading factor must be >= 1");
  }

  int players() const { return players_; }
  int spreading_factor() const { return spreading_; }
  /// (K-1)/N.
  double effective_interferers() const { return static_cast<double>(players_ - 1) / spreading_; }

private:
  int players_;
  int spreading_;
};

struct BetaStarOptions {
  double upper_cap = 1e4;
  RootOptions root{};
};

/// Unique positive root of x f'(x) = f(x): the SINR every player targets at the one-shot NE.
inline double solve_beta_star(const EfficiencyFunction& f, const BetaStarOptions& options = {}) {
  if (!f.is_sigmoidal()) throw NotSigmoidalError(f.describe() + " is not sigmoidal; x f'(x) = f(x) has no positive root");
  auto g = [&](double x) { return f.elasticity(x) - 1.0; };

  double lo = 1e-6;
  while (g(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw NoRootError("beta*: residual is non-positive down to x = 0");
  }
  double hi = 1.0;
  while (g(hi) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > options.upper_cap) throw NoRootError("beta*: no sign change below cap " + std::to_string(options.upper_cap));
  }
  return find_bracketed_root(g, lo, hi, options.root).root;
}

/// Unique root of x [1 - a x] f'(x) = f(x) on (0, 1/a), a = (K-1)/N: the common SINR at the operating point.
inline double solve_gamma_star(const EfficiencyFunction& f, const LoadedGameShape& shape, const BetaStarOptions& options = {}) {
  const double beta = solve_beta_star(f, options);
  const double a = shape.effective_interferers();
  if (a == 0.0) return beta;

  auto g = [&](double x) { return f.elasticity(x) * (1.0 - a * x) - 1.0; };
  // The elasticity is decreasing, so the root lies left of min(beta*, 1/a).
  const double hi = std::min(beta, 1.0 / a);
  double lo = 1e-6 * hi;
  while (g(lo) <= 0.0) {
    lo *= 0.5;
    if (lo < 1e-300) throw NoRootError("gamma*: residual is non-positive down to x = 0");
  }
  if (g(hi) >= 0.0) throw NoRootError("gamma*: no sign change on (0, min(beta*, 1/a))");
  return find_bracketed_root(g, lo, hi, options.root).root;
}

struct UniquenessReport {
  bool holds = false;
  double crossing = 0.0;  // x_0, where f''/f' - 2a/(1-ax) turns negative
  int sign_changes = 0;
  std::string diagnostic;
};

/// Scans g(x) = f''(x)/f'(x) - 2a/(1 - a x) on a uniform grid over (0, 1/a);
/// the operating point is unique when g goes from + to - exactly once.
inline UniquenessReport check_op_uniqueness(const EfficiencyFunction& f, const LoadedGameShape& shape,
                                            std::size_t samples = 100000) {
  UniquenessReport report;
  const double a = shape.effective_interferers();
  if (!(a > 0.0)) {
    report.diagnostic = "no interferers: condition is vacuous";
    return report;
  }
  auto g = [&](double x) { return f.curvature_ratio(x) - 2.0 * a / (1.0 - a * x); };

  const double span = 1.0 / a;
  double prev_x = span / static_cast<double>(samples + 1);
  double prev = g(prev_x);
  if (!(prev > 0.0)) {
    report.diagnostic = "g is not positive near 0";
  }
  bool first_was_positive = prev > 0.0;
  bool down_crossing_found = false;
  for (std::size_t k = 2; k <= samples; ++k) {
    const double x = span * static_cast<double>(k) / static_cast<double>(samples + 1);
    const double cur = g(x);
    if (!std::isfinite(cur)) {
      report.diagnostic = "non-finite sample at x = " + std::to_string(x);
      return report;
    }
    if (std::signbit(cur) != std::signbit(prev) && cur != 0.0) {
      ++report.sign_changes;
      if (prev > 0.0 && cur < 0.0 && !down_crossing_found) {
        down_crossing_found = true;
        report.crossing = find_bracketed_root(g, prev_x, x, RootOptions{1e-13, 200}).root;
      }
    }
    prev = cur;
    prev_x = x;
  }
  report.holds = first_was_positive && report.sign_changes == 1 && down_crossing_found;
  if (!report.holds && report.diagnostic.empty()) {
    report.diagnostic = "expected one + to - sign change, found " + std::to_string(report.sign_changes);
  }
  return report;
}

}  // namespace eepc
