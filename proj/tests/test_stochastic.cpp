#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include "eepc/geometry.hpp"
#include "eepc/markov.hpp"
#include "eepc/stochastic.hpp"
#include "oracles.hpp"

using namespace eepc;

namespace {

GameSpec grid_spec(int k, int n, std::vector<double> grid, double sigma2 = 1.0) {
  GameSpec spec;
  spec.players = k;
  spec.spreading_factor = n;
  spec.noise_power = sigma2;
  spec.max_power.assign(static_cast<std::size_t>(k), grid.back());
  spec.power_grid.assign(static_cast<std::size_t>(k), grid);
  return spec;
}

MarkovChannel paper_chain() { return MarkovChannel::uniform({{{7.0, 1.0}}, {{1.0, 7.0}}}); }

std::vector<double> random_grid(std::mt19937_64& rng, std::size_t points) {
  std::uniform_real_distribution<double> u(0.01, 3.0);
  std::set<double> g{0.0, 3.0};
  while (g.size() < points) g.insert(u(rng));
  return {g.begin(), g.end()};
}

// Every policy's expected utility, straight from the definition.
std::vector<std::vector<double>> brute_force_points(const GameSpec& spec, const EfficiencyFunction& f,
                                                    const MarkovChannel& chain, const std::vector<double>& mu) {
  const auto& g = spec.power_grid;
  std::vector<std::vector<double>> out;
  for (double a0 : g[0])
    for (double a1 : g[1])
      for (double b0 : g[0])
        for (double b1 : g[1]) {
          std::vector<double> u(2, 0.0);
          const std::vector<double> pa{a0, a1}, pb{b0, b1};
          for (std::size_t i = 0; i < 2; ++i) {
            u[i] += mu[0] * oracle::packet_utility(pa, chain.states[0].gains, spec.noise_power, spec.spreading_factor,
                                                   std::get<PacketSuccess>(f.kind()).block_length, spec.rate, i);
            u[i] += mu[1] * oracle::packet_utility(pb, chain.states[1].gains, spec.noise_power, spec.spreading_factor,
                                                   std::get<PacketSuccess>(f.kind()).block_length, spec.rate, i);
          }
          out.push_back(u);
        }
  return out;
}

std::vector<std::pair<double, double>> hull_vertices(const UtilityRegion& r) {
  std::vector<std::pair<double, double>> v;
  for (std::size_t k : r.hull) v.emplace_back(r.points[k].utility[0], r.points[k].utility[1]);
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(Markov, IrreducibilityIsEntrywise) {
  EXPECT_TRUE(check_irreducible(paper_chain()));
  MarkovChannel identity{{{{1.0, 1.0}}, {{2.0, 2.0}}}, {{1.0, 0.0}, {0.0, 1.0}}, std::nullopt};
  EXPECT_FALSE(check_irreducible(identity));
  MarkovChannel one_zero{{{{1.0, 1.0}}, {{2.0, 2.0}}}, {{0.5, 0.5}, {0.0, 1.0}}, std::nullopt};
  EXPECT_FALSE(check_irreducible(one_zero));
  EXPECT_THROW(stationary_distribution(identity), NotIrreducibleError);
}

TEST(Markov, UniformKernelHasHalfHalf) {
  const auto mu = stationary_distribution(paper_chain());
  EXPECT_EQ(mu[0], 0.5);
  EXPECT_EQ(mu[1], 0.5);
}

TEST(Markov, SymmetricStickyKernel) {
  MarkovChannel c{{{{1.0}}, {{2.0}}}, {{0.9, 0.1}, {0.1, 0.9}}, std::nullopt};
  const auto mu = stationary_distribution(c);
  EXPECT_NEAR(mu[0], 0.5, 1e-15);
  EXPECT_NEAR(mu[1], 0.5, 1e-15);
}

TEST(Markov, HandSolvedBalance) {
  // mu0 * 0.5 = mu1 * 0.25  =>  mu = (1/3, 2/3).
  MarkovChannel c{{{{1.0}}, {{2.0}}}, {{0.5, 0.5}, {0.25, 0.75}}, std::nullopt};
  const auto mu = stationary_distribution(c);
  EXPECT_NEAR(mu[0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(mu[1], 2.0 / 3.0, 1e-15);
}

TEST(Markov, FixedPointOnRandomKernels) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + trial % 7;
    MarkovChannel c;
    for (std::size_t s = 0; s < n; ++s) c.states.push_back({{1.0 + s}});
    for (std::size_t s = 0; s < n; ++s) {
      std::vector<double> row(n);
      double sum = 0.0;
      for (double& x : row) sum += (x = u(rng));
      for (double& x : row) x /= sum;
      c.kernel.push_back(row);
    }
    const auto mu = stationary_distribution(c);
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      EXPECT_GE(mu[t], 0.0);
      total += mu[t];
      double next = 0.0;
      for (std::size_t s = 0; s < n; ++s) next += mu[s] * c.kernel[s][t];
      EXPECT_NEAR(next, mu[t], 1e-12);
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(Markov, ValidationRejectsBadRows) {
  MarkovChannel c{{{{1.0}}, {{2.0}}}, {{0.5, 0.6}, {0.5, 0.5}}, std::nullopt};
  EXPECT_THROW(c.validate(), ConfigError);
  MarkovChannel neg{{{{1.0}}, {{2.0}}}, {{1.5, -0.5}, {0.5, 0.5}}, std::nullopt};
  EXPECT_THROW(neg.validate(), ConfigError);
}

TEST(Geometry, HullOfSquareWithInteriorAndCollinear) {
  using geometry::Point2;
  std::vector<Point2> pts{{0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.5, 0}, {1, 1}};
  const auto hull = geometry::convex_hull(pts);
  EXPECT_EQ(hull, (std::vector<std::size_t>{0, 1, 2, 3}));
  const auto chain = geometry::pareto_chain(pts, hull);
  EXPECT_EQ(chain, (std::vector<std::size_t>{2}));
}

TEST(Geometry, ContainsWithSlack) {
  using geometry::Point2;
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_TRUE(geometry::contains(sq, {0.5, 0.5}));
  EXPECT_TRUE(geometry::contains(sq, {1.0 + 1e-10, 0.5}));
  EXPECT_FALSE(geometry::contains(sq, {1.0 + 1e-6, 0.5}));
  const std::vector<Point2> seg{{0, 0}, {1, 1}};
  EXPECT_TRUE(geometry::contains(seg, {0.5, 0.5}));
  EXPECT_FALSE(geometry::contains(seg, {1.5, 1.5}));
}

TEST(Geometry, NondominatedFiltersAndDeduplicates) {
  const std::vector<std::vector<double>> v{{1, 2}, {2, 1}, {1, 1}, {2, 1}, {0, 3}, {0, 2}};
  auto front = geometry::nondominated(v.size(), [&](std::size_t k) -> const std::vector<double>& { return v[k]; });
  std::sort(front.begin(), front.end());
  EXPECT_EQ(front, (std::vector<std::size_t>{0, 1, 4}));
}

TEST(Utility, SingleStateEqualsStaticUtility) {
  const auto spec = grid_spec(2, 2, {0.0, 0.5, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const auto chain = MarkovChannel::single({{3.0, 1.0}});
  const StationaryPolicy policy{{{{0.5, 1.0}}}};
  const auto u = expected_utility(spec, f, chain, policy);
  const auto direct = utility(spec, f, chain.states[0], policy.per_state[0]);
  EXPECT_EQ(u.values, direct.values);
}

TEST(Utility, MirroredPolicyIsSymmetric) {
  const auto spec = grid_spec(2, 2, {0.0, 0.5, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const StationaryPolicy policy{{{{0.5, 1.0}}, {{1.0, 0.5}}}};
  const auto u = expected_utility(spec, f, paper_chain(), policy);
  EXPECT_NEAR(u[0], u[1], 1e-15);
}

TEST(Minmax, SinglePlayerIsBestSingleUserValue) {
  const auto spec = grid_spec(1, 1, {0.0, 0.1, 0.2, 0.5, 1.0});
  const auto f = EfficiencyFunction::packet_success(3);
  const auto chain = MarkovChannel::uniform({{{2.0}}, {{0.5}}});
  double expected = 0.0;
  for (const auto& st : chain.states) {
    double best = 0.0;
    for (double p : spec.power_grid[0]) best = std::max(best, player_utility(spec, f, st, {{p}}, 0));
    expected += 0.5 * best;
  }
  EXPECT_NEAR(minmax(spec, f, chain)[0], expected, 1e-15);
}

TEST(Minmax, MaxPowerPunishmentMatchesExhaustive) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + trial % 2;
    const auto spec = grid_spec(k, 1 + trial % 4, random_grid(rng, 4 + trial % 4), 0.5 + 0.1 * trial);
    const auto f = EfficiencyFunction::packet_success(2 + trial % 6);
    std::uniform_real_distribution<double> g(0.2, 8.0);
    std::vector<ChannelState> states(2);
    for (auto& st : states)
      for (int i = 0; i < k; ++i) st.gains.push_back(g(rng));
    const MarkovChannel chain{states, {{0.3, 0.7}, {0.6, 0.4}}, std::nullopt};
    const auto a = minmax(spec, f, chain);
    const auto b = minmax_max_power(spec, f, chain);
    for (int i = 0; i < k; ++i) EXPECT_NEAR(a[i], b[i], 1e-14 * std::max(1.0, a[i]));
  }
}

TEST(Minmax, SymmetricScenario) {
  const auto spec = grid_spec(2, 2, {0.0, 0.1, 0.4, 1.0, 3.0});
  const auto v = minmax(spec, EfficiencyFunction::packet_success(2), paper_chain());
  EXPECT_NEAR(v[0], v[1], 1e-15);
}

TEST(Region, SingleStateSinglePlayerIsSegment) {
  const auto spec = grid_spec(1, 1, {0.0, 0.3, 0.6, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const auto region = feasible_region(spec, f, MarkovChannel::single({{1.0}}));
  ASSERT_EQ(region.hull.size(), 2u);
  EXPECT_EQ(region.points[region.hull.front()].utility[0], 0.0);
  double umax = 0.0;
  for (double p : spec.power_grid[0]) umax = std::max(umax, player_utility(spec, f, {{1.0}}, {{p}}, 0));
  EXPECT_EQ(region.points[region.hull.back()].utility[0], umax);
}

TEST(Region, MinkowskiEqualsEnumeration) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const auto spec = grid_spec(2, 1 + trial % 3, random_grid(rng, 2 + trial % 7));
    const auto f = EfficiencyFunction::packet_success(2 + trial % 4);
    std::uniform_real_distribution<double> g(0.2, 8.0);
    const MarkovChannel chain{{{{g(rng), g(rng)}}, {{g(rng), g(rng)}}}, {{0.4, 0.6}, {0.7, 0.3}}, std::nullopt};
    const auto en = feasible_region(spec, f, chain, {1e18, RegionPath::Enumeration});
    const auto mk = feasible_region(spec, f, chain, {1e18, RegionPath::MinkowskiSum});
    EXPECT_EQ(en.path_used, RegionPath::Enumeration);
    EXPECT_EQ(mk.path_used, RegionPath::MinkowskiSum);
    const auto a = hull_vertices(en);
    const auto b = hull_vertices(mk);
    ASSERT_EQ(a.size(), b.size()) << "trial " << trial;
    for (std::size_t k = 0; k < a.size(); ++k) {
      EXPECT_NEAR(a[k].first, b[k].first, 1e-10);
      EXPECT_NEAR(a[k].second, b[k].second, 1e-10);
    }
    const auto sa = social_optimum(en, {1.0, 1.0});
    const auto sb = social_optimum(mk, {1.0, 1.0});
    EXPECT_EQ(sa.policy, sb.policy);
    EXPECT_EQ(sa.welfare, sb.welfare);
  }
}

TEST(Region, AutoSwitchesOnBudget) {
  const auto spec = grid_spec(2, 2, {0.0, 0.5, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  EXPECT_EQ(feasible_region(spec, f, paper_chain(), {81, RegionPath::Auto}).path_used, RegionPath::Enumeration);
  EXPECT_EQ(feasible_region(spec, f, paper_chain(), {80, RegionPath::Auto}).path_used, RegionPath::MinkowskiSum);
}

TEST(Region, InvariantsAgainstBruteForce) {
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 10; ++trial) {
    const auto spec = grid_spec(2, 2, random_grid(rng, 5));
    const auto f = EfficiencyFunction::packet_success(2 + trial % 3);
    const auto chain = paper_chain();
    const auto region = feasible_region(spec, f, chain);
    const auto all = brute_force_points(spec, f, chain, {0.5, 0.5});
    ASSERT_EQ(region.points.size(), all.size());
    for (std::size_t k = 0; k < all.size(); ++k) {
      EXPECT_NEAR(region.points[k].utility[0], all[k][0], 1e-12 * std::max(1.0, all[k][0]));
      EXPECT_NEAR(region.points[k].utility[1], all[k][1], 1e-12 * std::max(1.0, all[k][1]));
      EXPECT_TRUE(region.hull_contains({all[k]}, 1e-9));
    }
    // Pareto vertices are mutually non-dominating.
    for (std::size_t a : region.pareto)
      for (std::size_t b : region.pareto)
        EXPECT_FALSE(geometry::dominates(region.points[a].utility.values, region.points[b].utility.values));
    // Individual rationality flags agree with the minmax floor.
    for (const auto& p : region.points) {
      if (p.individually_rational) {
        for (std::size_t i = 0; i < 2; ++i) EXPECT_GE(p.utility[i], region.minmax[i] - 1e-12);
      }
    }
  }
}

TEST(Region, NoPointAbovePareto) {
  const auto spec = grid_spec(2, 2, {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2});
  const auto region = feasible_region(spec, EfficiencyFunction::packet_success(2), paper_chain());
  for (const auto& p : region.points) {
    for (std::size_t k : region.pareto) {
      EXPECT_FALSE(geometry::dominates(p.utility.values, region.points[k].utility.values));
    }
  }
}

TEST(SocialOptimum, AllWeightOnOnePlayer) {
  const auto spec = grid_spec(2, 2, {0.0, 0.1, 0.3, 1.0});
  const auto region = feasible_region(spec, EfficiencyFunction::packet_success(2), paper_chain());
  const auto opt = social_optimum(region, {1.0, 0.0});
  double best = -1.0;
  for (const auto& p : region.points) {
    if (p.individually_rational) best = std::max(best, p.utility[0]);
  }
  EXPECT_EQ(opt.utility[0], best);
  EXPECT_TRUE(opt.folk_certified);
}

TEST(SocialOptimum, SymmetricScenarioIsSymmetric) {
  const auto spec = grid_spec(2, 2, {0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2});
  const auto region = feasible_region(spec, EfficiencyFunction::packet_success(2), paper_chain());
  const auto opt = social_optimum(region, {1.0, 1.0});
  EXPECT_NEAR(opt.utility[0], opt.utility[1], 1e-12);
}

TEST(SocialOptimum, TiesGoToSmallestPolicy) {
  UtilityRegion r;
  r.minmax = {0.0, 0.0};
  r.points.push_back({{{1.0, 1.0}}, {3, 0}, false, false, true});
  r.points.push_back({{{2.0, 0.0}}, {1, 2}, false, false, true});
  r.points.push_back({{{0.0, 2.0}}, {1, 1}, false, false, true});
  EXPECT_EQ(social_optimum(r, {1.0, 1.0}).policy, (PolicyIndex{1, 1}));
}

TEST(SocialOptimum, EmptyIndividuallyRationalSetThrows) {
  UtilityRegion r;
  r.minmax = {5.0, 5.0};
  r.points.push_back({{{1.0, 1.0}}, {0}, false, false, false});
  EXPECT_THROW(social_optimum(r, {1.0, 1.0}), EmptyRegionError);
  EXPECT_THROW(social_optimum(r, {0.0, 0.0}, false), ConfigError);
}

TEST(Probe, SpreadShrinksAsDiscountVanishes) {
  const auto spec = grid_spec(2, 2, {0.0, 0.1, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const StationaryPolicy policy{{{{0.1, 1.0}}, {{0.1, 1.0}}}};
  const auto rows = initial_state_independence_probe(spec, f, paper_chain(), policy, {0.5, 0.1, 0.01});
  EXPECT_LT(rows[2].spread, rows[0].spread);
  EXPECT_LT(rows[1].spread, rows[0].spread);
}

TEST(Probe, UniformKernelClosedForm) {
  // With a memoryless kernel only the first stage depends on the initial state,
  // and it carries weight lambda.
  const auto spec = grid_spec(2, 2, {0.0, 0.1, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const StationaryPolicy policy{{{{0.1, 1.0}}, {{1.0, 0.1}}}};
  const auto chain = paper_chain();
  const auto u0 = utility(spec, f, chain.states[0], policy.per_state[0]);
  const auto u1 = utility(spec, f, chain.states[1], policy.per_state[1]);
  const double delta = std::max(std::abs(u0[0] - u1[0]), std::abs(u0[1] - u1[1]));
  for (const auto& row : initial_state_independence_probe(spec, f, chain, policy, {0.9, 0.5, 0.1, 0.01})) {
    EXPECT_NEAR(row.spread, row.lambda * delta, 1e-12);
  }
}

TEST(Probe, SingleStateHasNoSpread) {
  const auto spec = grid_spec(2, 2, {0.0, 1.0});
  const StationaryPolicy policy{{{{1.0, 1.0}}}};
  for (const auto& row : initial_state_independence_probe(spec, EfficiencyFunction::packet_success(2),
                                                          MarkovChannel::single({{1.0, 2.0}}), policy, {0.5, 0.1})) {
    EXPECT_EQ(row.spread, 0.0);
  }
}

TEST(Simulation, LongRunAverageMatchesExpectation) {
  const auto spec = grid_spec(2, 2, {0.0, 0.1, 1.0});
  const auto f = EfficiencyFunction::packet_success(2);
  const MarkovChannel chain{{{{7.0, 1.0}}, {{1.0, 7.0}}}, {{0.8, 0.2}, {0.4, 0.6}}, 0};
  const StationaryPolicy policy{{{{0.1, 1.0}}, {{1.0, 0.1}}}};
  std::mt19937_64 rng(5);
  const auto sim = simulate_average_utility(spec, f, chain, policy, 1000000, rng);
  const auto exact = expected_utility(spec, f, chain, policy);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(sim[i], exact[i], 0.01 * exact[i]);
}
