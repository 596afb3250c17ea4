#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "eepc/efficiency.hpp"
#include "eepc/errors.hpp"
#include "eepc/game.hpp"
#include "eepc/geometry.hpp"
#include "eepc/markov.hpp"

namespace eepc {

/// State-feedback pure policy: one joint power profile per channel state.
struct StationaryPolicy {
  std::vector<PowerProfile> per_state;
};

/// Joint grid profile index per channel state. Within a state, player 0 is the
/// most significant digit, so lexicographic order on PolicyIndex is the
/// lexicographic order on per-(state, player) grid indices.
using PolicyIndex = std::vector<std::size_t>;

/// Mixed-radix view of the joint discrete power set P_1 x ... x P_K.
class JointGrid {
public:
  explicit JointGrid(const GameSpec& spec) : spec_(&spec) {
    spec.require_grid();
    count_ = 1;
    for (const auto& g : spec.power_grid) count_ *= g.size();
  }

  std::size_t count() const { return count_; }

  std::vector<std::size_t> digits(std::size_t joint) const {
    std::vector<std::size_t> d(spec_->num_players());
    for (std::size_t i = d.size(); i-- > 0;) {
      const std::size_t n = spec_->power_grid[i].size();
      d[i] = joint % n;
      joint /= n;
    }
    return d;
  }

  PowerProfile profile(std::size_t joint) const {
    const auto d = digits(joint);
    PowerProfile p{std::vector<double>(d.size())};
    for (std::size_t i = 0; i < d.size(); ++i) p[i] = spec_->power_grid[i][d[i]];
    return p;
  }

private:
  const GameSpec* spec_;
  std::size_t count_ = 0;
};

inline StationaryPolicy decode_policy(const GameSpec& spec, const PolicyIndex& index) {
  const JointGrid grid(spec);
  StationaryPolicy policy;
  for (std::size_t joint : index) policy.per_state.push_back(grid.profile(joint));
  return policy;
}

/// Long-run utility of a stationary policy: sum_eta mu(eta) u(policy(eta), eta).
/// Off-grid profiles are accepted (used for the expected NE / OP points).
inline UtilityPoint expected_utility(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain,
                                     const StationaryPolicy& policy, const std::vector<double>& mu) {
  if (policy.per_state.size() != chain.size()) throw ConfigError("policy must give one profile per channel state");
  UtilityPoint total{std::vector<double>(spec.num_players(), 0.0)};
  for (std::size_t s = 0; s < chain.size(); ++s) {
    const UtilityPoint u = utility(spec, f, chain.states[s], policy.per_state[s]);
    for (std::size_t i = 0; i < spec.num_players(); ++i) total[i] += mu[s] * u[i];
  }
  return total;
}

inline UtilityPoint expected_utility(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain,
                                     const StationaryPolicy& policy) {
  return expected_utility(spec, f, chain, policy, stationary_distribution(chain));
}

/// Per-state table of mu(eta) * u(profile, eta) for every joint grid profile,
/// stored flat as [joint * K + player].
struct ScaledUtilityTable {
  std::size_t players = 0;
  std::vector<std::vector<double>> per_state;

  const double* at(std::size_t state, std::size_t joint) const { return per_state[state].data() + joint * players; }
};

inline ScaledUtilityTable scaled_utility_table(const GameSpec& spec, const EfficiencyFunction& f,
                                               const MarkovChannel& chain, const std::vector<double>& mu) {
  const JointGrid grid(spec);
  ScaledUtilityTable table{spec.num_players(), {}};
  for (std::size_t s = 0; s < chain.size(); ++s) {
    std::vector<double> rows(grid.count() * spec.num_players());
    for (std::size_t j = 0; j < grid.count(); ++j) {
      const UtilityPoint u = utility(spec, f, chain.states[s], grid.profile(j));
      for (std::size_t i = 0; i < spec.num_players(); ++i) rows[j * spec.num_players() + i] = mu[s] * u[i];
    }
    table.per_state.push_back(std::move(rows));
  }
  return table;
}

/// Expected utility of a policy from a scaled table. Accumulates in state order
/// from zero so every route through the region code produces identical bits.
inline UtilityPoint accumulate(const ScaledUtilityTable& table, const PolicyIndex& index) {
  UtilityPoint u{std::vector<double>(table.players, 0.0)};
  for (std::size_t s = 0; s < index.size(); ++s) {
    const double* row = table.at(s, index[s]);
    for (std::size_t i = 0; i < table.players; ++i) u[i] += row[i];
  }
  return u;
}

/// Worst long-run utility the others can force on each player.
///
/// Per state, the punishers pick the joint grid profile minimizing player i's
/// best grid response; the state values are averaged under mu. Searches every
/// opponent profile.
inline std::vector<double> minmax(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain) {
  spec.require_grid();
  const auto mu = stationary_distribution(chain);
  const JointGrid grid(spec);
  std::vector<double> value(spec.num_players(), 0.0);
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    for (std::size_t s = 0; s < chain.size(); ++s) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < grid.count(); ++j) {
        if (grid.digits(j)[i] != 0) continue;  // one representative per opponent profile
        PowerProfile p = grid.profile(j);
        double best = 0.0;
        for (double pi : spec.power_grid[i]) {
          p[i] = pi;
          best = std::max(best, player_utility(spec, f, chain.states[s], p, i));
        }
        worst = std::min(worst, best);
      }
      value[i] += mu[s] * worst;
    }
  }
  return value;
}

/// Minmax with every punisher at P^max. u_i decreases with interference, so
/// this is the pointwise minimizer; it matches minmax() without the search.
inline std::vector<double> minmax_max_power(const GameSpec& spec, const EfficiencyFunction& f,
                                            const MarkovChannel& chain, const std::vector<double>& mu) {
  spec.require_grid();
  std::vector<double> value(spec.num_players(), 0.0);
  for (std::size_t i = 0; i < spec.num_players(); ++i) {
    for (std::size_t s = 0; s < chain.size(); ++s) {
      PowerProfile p{spec.max_power};
      double best = 0.0;
      for (double pi : spec.power_grid[i]) {
        p[i] = pi;
        best = std::max(best, player_utility(spec, f, chain.states[s], p, i));
      }
      value[i] += mu[s] * best;
    }
  }
  return value;
}

inline std::vector<double> minmax_max_power(const GameSpec& spec, const EfficiencyFunction& f,
                                            const MarkovChannel& chain) {
  return minmax_max_power(spec, f, chain, stationary_distribution(chain));
}

struct RegionPoint {
  UtilityPoint utility;
  PolicyIndex policy;
  bool on_hull = false;
  bool on_pareto = false;
  bool individually_rational = false;
};

enum class RegionPath { Auto, Enumeration, MinkowskiSum };

struct RegionOptions {
  double enumeration_budget = 1e7;
  RegionPath path = RegionPath::Auto;
};

/// Long-run feasible utility region F of the stochastic game, its convex hull,
/// the minmax point and the individually rational part F*.
struct UtilityRegion {
  std::vector<RegionPoint> points;
  std::vector<std::size_t> hull;    // point indices, CCW (K = 2) or {min, max} (K = 1)
  std::vector<std::size_t> pareto;  // hull vertices on the Pareto frontier
  std::vector<double> minmax;
  std::vector<double> stationary;
  RegionPath path_used = RegionPath::Enumeration;
  bool hull_available = false;       // convex hulls are built for K <= 2
  std::size_t policies_represented = 0;

  std::vector<geometry::Point2> hull_polygon() const {
    std::vector<geometry::Point2> poly;
    for (std::size_t k : hull) {
      const auto& u = points[k].utility;
      poly.push_back({u[0], u.size() > 1 ? u[1] : 0.0});
    }
    return poly;
  }

  /// Membership of a utility vector in conv(F), within absolute slack `tol`.
  bool hull_contains(const UtilityPoint& u, double tol = 1e-9) const {
    if (!hull_available) throw DomainError("hull membership is only available for K <= 2");
    if (u.size() == 1) {
      const double lo = points[hull.front()].utility[0];
      const double hi = points[hull.back()].utility[0];
      return u[0] >= lo - tol && u[0] <= hi + tol;
    }
    return geometry::contains(hull_polygon(), {u[0], u[1]}, tol);
  }

  bool individually_rational(const UtilityPoint& u) const {
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (u[i] < minmax[i] - 1e-12 * std::max(1.0, std::abs(minmax[i]))) return false;
    }
    return true;
  }
};

namespace detail {

struct Candidate {
  UtilityPoint utility;
  PolicyIndex policy;
};

inline std::vector<std::size_t> hull_indices(const std::vector<Candidate>& cands, std::size_t players) {
  if (cands.empty()) return {};
  if (players == 1) {
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t k = 1; k < cands.size(); ++k) {
      if (cands[k].utility[0] < cands[lo].utility[0]) lo = k;
      if (cands[k].utility[0] > cands[hi].utility[0]) hi = k;
    }
    if (lo == hi) return {lo};
    return {lo, hi};
  }
  std::vector<geometry::Point2> pts;
  pts.reserve(cands.size());
  for (const auto& c : cands) pts.push_back({c.utility[0], c.utility[1]});
  return geometry::convex_hull(pts);
}

inline std::vector<std::size_t> pareto_indices(const std::vector<Candidate>& cands) {
  return geometry::nondominated(cands.size(), [&](std::size_t k) -> const std::vector<double>& {
    return cands[k].utility.values;
  });
}

/// Keeps the chosen candidates in their original (policy) order.
inline std::vector<Candidate> select(const std::vector<Candidate>& cands, std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  std::vector<Candidate> out;
  out.reserve(keep.size());
  for (std::size_t k : keep) out.push_back(cands[k]);
  return out;
}

/// Candidates a + b for every pair, with the policy of b appended.
inline std::vector<Candidate> pairwise_sums(const std::vector<Candidate>& acc, const std::vector<Candidate>& next) {
  std::vector<Candidate> out;
  out.reserve(acc.size() * next.size());
  for (const auto& a : acc) {
    for (const auto& b : next) {
      Candidate c{a.utility, a.policy};
      for (std::size_t i = 0; i < c.utility.size(); ++i) c.utility[i] += b.utility[i];
      c.policy.push_back(b.policy.front());
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace detail

/// Enumerates (or reduces) the expected utilities of every pure stationary
/// state-feedback policy.
///
/// Enumeration visits all J^|states| policies, J = |P_1| ... |P_K|. When that
/// exceeds the budget the Minkowski route is used instead: the expected set is
/// the Minkowski sum of the per-state sets mu(eta) U(eta), whose hull is the
/// sum of per-state hulls and whose Pareto set lies inside the sum of per-state
/// Pareto sets. Both reductions are exact; the returned points are then the
/// hull vertices plus the Pareto-optimal policies rather than every policy.
inline UtilityRegion feasible_region(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain,
                                     const RegionOptions& options = {}) {
  spec.validate();
  spec.require_grid();
  const auto mu = stationary_distribution(chain);
  const ScaledUtilityTable table = scaled_utility_table(spec, f, chain, mu);
  const JointGrid grid(spec);
  const std::size_t players = spec.num_players();

  UtilityRegion region;
  region.stationary = mu;
  region.minmax = minmax(spec, f, chain);
  region.hull_available = players <= 2;

  const double total = std::pow(static_cast<double>(grid.count()), static_cast<double>(chain.size()));
  region.policies_represented = total < 1.8e19 ? static_cast<std::size_t>(total) : std::numeric_limits<std::size_t>::max();
  const bool enumerate = options.path == RegionPath::Enumeration ||
                         (options.path == RegionPath::Auto && total <= options.enumeration_budget);

  std::vector<detail::Candidate> cands;
  std::vector<std::size_t> hull;
  if (enumerate) {
    region.path_used = RegionPath::Enumeration;
    PolicyIndex index(chain.size(), 0);
    cands.reserve(static_cast<std::size_t>(total));
    while (true) {
      cands.push_back({accumulate(table, index), index});
      std::size_t s = chain.size();
      while (s-- > 0) {
        if (++index[s] < grid.count()) break;
        index[s] = 0;
      }
      if (s == std::numeric_limits<std::size_t>::max()) break;
    }
    if (region.hull_available) hull = detail::hull_indices(cands, players);
  } else {
    region.path_used = RegionPath::MinkowskiSum;
    std::vector<std::vector<detail::Candidate>> per_state(chain.size());
    for (std::size_t s = 0; s < chain.size(); ++s) {
      for (std::size_t j = 0; j < grid.count(); ++j) {
        const double* row = table.at(s, j);
        per_state[s].push_back({UtilityPoint{std::vector<double>(row, row + players)}, PolicyIndex{j}});
      }
    }
    auto fold = [&](auto reduce) {
      std::vector<detail::Candidate> acc{{UtilityPoint{std::vector<double>(players, 0.0)}, PolicyIndex{}}};
      for (std::size_t s = 0; s < chain.size(); ++s) {
        const auto local = detail::select(per_state[s], reduce(per_state[s]));
        auto sums = detail::pairwise_sums(acc, local);
        acc = detail::select(sums, reduce(sums));
      }
      return acc;
    };
    cands = fold([](const auto& c) { return detail::pareto_indices(c); });
    if (region.hull_available) {
      auto hull_cands = fold([&](const auto& c) { return detail::hull_indices(c, players); });
      // Merge hull vertices into the Pareto candidates, keyed by policy.
      std::map<PolicyIndex, std::size_t> position;
      for (std::size_t k = 0; k < cands.size(); ++k) position.emplace(cands[k].policy, k);
      for (auto& hc : hull_cands) {
        auto [it, inserted] = position.emplace(hc.policy, cands.size());
        if (inserted) cands.push_back(std::move(hc));
      }
      // Policy order keeps "first occurrence" tie-breaks aligned with enumeration.
      std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.policy < b.policy; });
      hull = detail::hull_indices(cands, players);
    } else {
      std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) { return a.policy < b.policy; });
    }
  }

  region.points.reserve(cands.size());
  for (auto& c : cands) {
    RegionPoint p{std::move(c.utility), std::move(c.policy)};
    p.individually_rational = region.individually_rational(p.utility);
    region.points.push_back(std::move(p));
  }
  if (region.hull_available) {
    region.hull = hull;
    for (std::size_t k : hull) region.points[k].on_hull = true;
    if (players == 1) {
      region.pareto = {hull.back()};
    } else {
      std::vector<geometry::Point2> pts;
      pts.reserve(region.points.size());
      for (const auto& p : region.points) pts.push_back({p.utility[0], p.utility[1]});
      region.pareto = geometry::pareto_chain(pts, hull);
    }
  } else {
    region.pareto = geometry::nondominated(region.points.size(), [&](std::size_t k) -> const std::vector<double>& {
      return region.points[k].utility.values;
    });
  }
  for (std::size_t k : region.pareto) region.points[k].on_pareto = true;
  return region;
}

struct SocialOptimum {
  std::size_t point = 0;
  UtilityPoint utility;
  PolicyIndex policy;
  double welfare = 0.0;
  /// Individually rational, hence sustainable by a perfect public equilibrium
  /// for small enough discounting. A label, not a constructed strategy.
  bool folk_certified = false;
};

/// argmax of sum_i alpha_i u_i over the region's points with u >= minmax;
/// ties go to the lexicographically smallest policy.
inline SocialOptimum social_optimum(const UtilityRegion& region, const std::vector<double>& weights,
                                    bool require_individual_rationality = true) {
  if (region.points.empty()) throw EmptyRegionError("region has no points");
  if (weights.size() != region.points.front().utility.size()) throw ConfigError("one weight per player required");
  double wsum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw ConfigError("weights must be non-negative");
    wsum += w;
  }
  if (!(wsum > 0.0)) throw ConfigError("weights must not all be zero");

  bool found = false;
  SocialOptimum best;
  for (std::size_t k = 0; k < region.points.size(); ++k) {
    const auto& p = region.points[k];
    if (require_individual_rationality && !p.individually_rational) continue;
    double w = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) w += weights[i] * p.utility[i];
    if (!found || w > best.welfare || (w == best.welfare && p.policy < best.policy)) {
      found = true;
      best = {k, p.utility, p.policy, w, p.individually_rational};
    }
  }
  if (!found) throw EmptyRegionError("no individually rational point: F* is empty on this grid");
  return best;
}

struct ProbeRow {
  double lambda = 0.0;
  std::vector<UtilityPoint> by_initial_state;
  double spread = 0.0;  // max over players of (max - min) across initial states
};

/// Discounted utility of a fixed stationary policy from every initial state,
/// V = lambda (I - (1 - lambda) pi)^{-1} u, for each lambda in the list.
inline std::vector<ProbeRow> initial_state_independence_probe(const GameSpec& spec, const EfficiencyFunction& f,
                                                              const MarkovChannel& chain, const StationaryPolicy& policy,
                                                              const std::vector<double>& lambdas) {
  if (!check_irreducible(chain)) throw NotIrreducibleError("transition kernel has a zero entry");
  if (policy.per_state.size() != chain.size()) throw ConfigError("policy must give one profile per channel state");
  const auto n = static_cast<Eigen::Index>(chain.size());
  const auto k = static_cast<Eigen::Index>(spec.num_players());
  Eigen::MatrixXd stage(n, k);
  for (Eigen::Index s = 0; s < n; ++s) {
    const UtilityPoint u = utility(spec, f, chain.states[s], policy.per_state[s]);
    for (Eigen::Index i = 0; i < k; ++i) stage(s, i) = u[i];
  }
  const Eigen::MatrixXd pi = chain.kernel_matrix();

  std::vector<ProbeRow> rows;
  for (double lambda : lambdas) {
    if (!(lambda > 0.0 && lambda < 1.0)) throw DomainError("discount factor must lie in (0, 1)");
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - (1.0 - lambda) * pi;
    const Eigen::MatrixXd value = lambda * system.partialPivLu().solve(stage);
    ProbeRow row{lambda, {}, 0.0};
    for (Eigen::Index s = 0; s < n; ++s) {
      UtilityPoint u{std::vector<double>(static_cast<std::size_t>(k))};
      for (Eigen::Index i = 0; i < k; ++i) u[i] = value(s, i);
      row.by_initial_state.push_back(std::move(u));
    }
    for (Eigen::Index i = 0; i < k; ++i) row.spread = std::max(row.spread, value.col(i).maxCoeff() - value.col(i).minCoeff());
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Average stage utility along one simulated channel trajectory. Starts from
/// chain.initial (state 0 when unset).
template <typename Rng>
UtilityPoint simulate_average_utility(const GameSpec& spec, const EfficiencyFunction& f, const MarkovChannel& chain,
                                      const StationaryPolicy& policy, std::size_t stages, Rng& rng) {
  chain.validate();
  if (policy.per_state.size() != chain.size()) throw ConfigError("policy must give one profile per channel state");
  std::vector<UtilityPoint> stage;
  for (std::size_t s = 0; s < chain.size(); ++s) stage.push_back(utility(spec, f, chain.states[s], policy.per_state[s]));
  std::vector<std::discrete_distribution<std::size_t>> next;
  for (const auto& row : chain.kernel) next.emplace_back(row.begin(), row.end());

  std::vector<std::size_t> visits(chain.size(), 0);
  std::size_t s = chain.initial.value_or(0);
  for (std::size_t t = 0; t < stages; ++t) {
    ++visits[s];
    s = next[s](rng);
  }
  UtilityPoint avg{std::vector<double>(spec.num_players(), 0.0)};
  for (std::size_t st = 0; st < chain.size(); ++st) {
    for (std::size_t i = 0; i < spec.num_players(); ++i) {
      avg[i] += static_cast<double>(visits[st]) * stage[st][i] / static_cast<double>(stages);
    }
  }
  return avg;
}

}  // namespace eepc
