#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "eepc/repeated.hpp"
#include "oracles.hpp"

using namespace eepc;

namespace {

GameSpec make_spec(int k, int n, double sigma2 = 1.0, double pmax = 1e6) {
  GameSpec spec;
  spec.players = k;
  spec.spreading_factor = n;
  spec.noise_power = sigma2;
  spec.max_power.assign(static_cast<std::size_t>(k), pmax);
  return spec;
}

std::vector<Policy> trigger_policies(const GameSpec& spec, const EfficiencyFunction& f, double tol = 1e-9) {
  const auto plan = make_trigger_plan(spec, f);
  std::vector<Policy> out;
  for (std::size_t i = 0; i < spec.num_players(); ++i) out.push_back(make_trigger_policy(spec, plan, i, tol));
  return out;
}

// Exact grim-trigger boundary: deviating to the best response pays once
// lambda (u_dev - u_pun) > u_coop - u_pun, evaluated straight from the formulas.
double exact_boundary(int m, int k, int n, double beta, double gamma) {
  const double a = static_cast<double>(k - 1) / n;
  const double f_g = static_cast<double>(oracle::packet(gamma, m));
  const double f_b = static_cast<double>(oracle::packet(beta, m));
  // Common factor eta/sigma^2 dropped: utilities in units of eta/sigma^2.
  const double u_coop = f_g * (1 - a * gamma) / gamma;
  const double u_dev = f_b * (1 - a * gamma) / beta;  // best response to OP interference hits SINR beta
  const double u_pun = f_b * (1 - a * beta) / beta;
  return (u_coop - u_pun) / (u_dev - u_pun);
}

}  // namespace

TEST(Signal, SilenceIsNoise) {
  const auto spec = make_spec(2, 2, 1.7);
  EXPECT_EQ(observe(spec, {{3.0, 1.0}}, {{0.0, 0.0}}).value, 1.7);
}

TEST(Signal, Substitution) {
  const auto spec = make_spec(2, 4);
  EXPECT_EQ(observe(spec, {{1.0, 1.0}}, {{1.0, 1.0}}).value, 3.0);
}

TEST(Signal, AtLeastNoise) {
  const auto spec = make_spec(3, 2, 0.3);
  for (double p = 0.0; p < 3.0; p += 0.25) EXPECT_GE(observe(spec, {{1.0, 2.0, 3.0}}, {{p, p / 2, 0.0}}).value, 0.3);
}

TEST(Signal, OperatingPointClosedForm) {
  for (auto [k, n, m] : std::vector<std::tuple<int, int, int>>{{2, 2, 2}, {3, 8, 4}, {5, 64, 10}, {20, 128, 100}}) {
    const auto spec = make_spec(k, n, 0.8);
    const auto f = EfficiencyFunction::packet_success(m);
    ChannelState st;
    for (int i = 0; i < k; ++i) st.gains.push_back(0.5 + i);
    const auto op = op_powers(spec, f, st);
    const double gamma = solve_gamma_star(f, spec.shape());
    const double a = static_cast<double>(k - 1) / n;
    const double closed = 0.8 * (1.0 + k * gamma / (1.0 - a * gamma));
    EXPECT_NEAR(observe(spec, st, op.powers).value, closed, 1e-12 * closed);
    EXPECT_NEAR(op_signal(spec, gamma), closed, 1e-12 * closed);
  }
}

TEST(Threshold, ReferenceValues) {
  EXPECT_NEAR(discount_threshold(EfficiencyFunction::packet_success(2), {2, 2}), oracle::kThresholdM2AHalf, 1e-10);
  EXPECT_NEAR(discount_threshold(EfficiencyFunction::packet_success(10), {2, 128}), oracle::kThresholdM10, 1e-10);
  EXPECT_NEAR(discount_threshold(EfficiencyFunction::packet_success(100), {20, 128}), oracle::kThresholdM100, 1e-10);
}

TEST(Threshold, RateExpClosedForm) {
  for (double c : {0.5, 1.0, 3.0}) {
    for (auto [k, n] : std::vector<std::pair<int, int>>{{2, 4}, {3, 16}, {10, 128}}) {
      const double ac = c * (k - 1) / n;
      const double expected = (std::exp(-ac) - 1.0 + ac) / ac;
      EXPECT_NEAR(discount_threshold(EfficiencyFunction::rate_exp(c), {k, n}), expected, 1e-9) << c << " " << k;
    }
  }
}

TEST(Threshold, SlackTermShrinksWithLoad) {
  const double beta = solve_beta_star(EfficiencyFunction::packet_success(10));
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 2; k < 30; ++k) {
    const double a = (k - 1) / 128.0;
    const double slack = (1 - a * beta) / (a * beta);
    EXPECT_LT(slack, prev);
    prev = slack;
  }
}

TEST(Threshold, MoreSpreadingLowersThreshold) {
  const auto f = EfficiencyFunction::rate_exp(1.0);
  EXPECT_LT(discount_threshold(f, {2, 4}), discount_threshold(f, {2, 2}));
  const auto g = EfficiencyFunction::packet_success(2);
  EXPECT_LT(discount_threshold(g, {2, 4}), discount_threshold(g, {2, 3}));
}

TEST(Threshold, Errors) {
  const auto f = EfficiencyFunction::packet_success(2);
  EXPECT_THROW(discount_threshold(f, {1, 1}), DomainError);
  EXPECT_THROW(discount_threshold(f, {2, 1}), InfeasibleLoadError);
}

TEST(Threshold, BelowExactBoundary) {
  for (int m : {2, 10, 100}) {
    const auto f = EfficiencyFunction::packet_success(m);
    const double beta = solve_beta_star(f);
    for (int k = 2; k < 128.0 / beta + 1; k += 3) {
      const double gamma = solve_gamma_star(f, {k, 128});
      EXPECT_LE(discount_threshold(f, {k, 128}), exact_boundary(m, k, 128, beta, gamma) + 1e-12);
    }
  }
}

TEST(Horizon, TailBound) {
  for (double lambda : {0.001, 0.05, 0.3, 0.9, 0.999}) {
    const auto t = horizon_for(lambda);
    EXPECT_LE(std::pow(1 - lambda, static_cast<double>(t)), 1e-12 * (1 + 1e-9));
    EXPECT_GT(std::pow(1 - lambda, static_cast<double>(t - 1)), 1e-12);
  }
  EXPECT_THROW(horizon_for(0.0), DomainError);
  EXPECT_THROW(horizon_for(1.0), DomainError);
}

TEST(Horizon, WeightsSumToOne) {
  for (double lambda : {0.01, 0.2, 0.7}) {
    const auto t = horizon_for(lambda);
    long double sum = 0.0L;
    long double w = lambda;
    for (std::size_t k = 0; k < t; ++k) {
      sum += w;
      w *= 1.0L - lambda;
    }
    EXPECT_NEAR(static_cast<double>(sum), 1.0, 1e-12);
  }
}

TEST(Monitor, GrimTriggerIsAbsorbing) {
  TriggerStrategyState m{Phase::Cooperate, 10.0, 0.0};
  m.update(10.0);
  EXPECT_EQ(m.phase, Phase::Cooperate);
  m.update(10.5);
  EXPECT_EQ(m.phase, Phase::Punish);
  m.update(10.0);
  EXPECT_EQ(m.phase, Phase::Punish);
}

TEST(Monitor, RelativeTolerance) {
  TriggerStrategyState m{Phase::Cooperate, 100.0, 1e-9};
  EXPECT_TRUE(m.matches(100.0 + 5e-8));
  EXPECT_FALSE(m.matches(100.0 + 2e-7));
}

TEST(Drg, ComplianceStaysAtOperatingPoint) {
  const auto spec = make_spec(2, 2);
  const auto f = EfficiencyFunction::packet_success(2);
  const ChannelState st{{7.0, 1.0}};
  const auto plan = make_trigger_plan(spec, f);
  const auto cfg = DiscountedGameConfig::with_discount(0.2);
  const auto trace = run_drg(spec, f, st, cfg, trigger_policies(spec, f), plan.reference_signal);
  const auto op = op_powers(spec, f, st);
  const auto u_op = utility(spec, f, st, op.powers);
  ASSERT_EQ(trace.stages(), cfg.horizon);
  for (std::size_t t = 0; t < trace.stages(); ++t) {
    EXPECT_EQ(trace.phases[t], Phase::Cooperate);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(trace.profiles[t][i], op.powers[i]);
  }
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(trace.discounted[i], u_op[i] * (1 - trace.tail_weight), 1e-12 * u_op[i]);
  }
}

TEST(Drg, NoFalseTriggerWithExactComparison) {
  const auto spec = make_spec(3, 16, 0.5);
  const auto f = EfficiencyFunction::packet_success(6);
  const ChannelState st{{1.3, 0.4, 2.2}};
  // The reference comes from the realized cooperative stage, so exact equality is meaningful.
  const auto op = op_powers(spec, f, st);
  const double reference = observe(spec, st, op.powers).value;
  const auto trace = run_drg(spec, f, st, DiscountedGameConfig::with_discount(0.1, 0.0),
                             trigger_policies(spec, f, 1e-9), reference);
  for (auto phase : trace.phases) EXPECT_EQ(phase, Phase::Cooperate);
}

TEST(Drg, DeviationTriggersNashForever) {
  const auto spec = make_spec(2, 2);
  const auto f = EfficiencyFunction::packet_success(2);
  const ChannelState st{{7.0, 1.0}};
  const auto plan = make_trigger_plan(spec, f);
  auto policies = trigger_policies(spec, f);
  const auto op = op_powers(spec, f, st);
  const double br = best_response(spec, f, st, op.powers, 0);
  policies[0] = make_one_shot_deviation(policies[0], 1, br);
  const auto trace = run_drg(spec, f, st, DiscountedGameConfig::with_discount(0.3), policies, plan.reference_signal);
  const auto ne = nash_powers(spec, f, st);
  EXPECT_EQ(trace.profiles[0][0], br);
  EXPECT_EQ(trace.profiles[0][1], op.powers[1]);
  EXPECT_EQ(trace.phases[0], Phase::Cooperate);
  for (std::size_t t = 1; t < trace.stages(); ++t) {
    EXPECT_EQ(trace.phases[t], Phase::Punish);
    for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(trace.profiles[t][i], ne.powers[i], 1e-12);
  }
}

TEST(Drg, DeviationDoesNotPayBelowThreshold) {
  const auto spec = make_spec(2, 2);
  const auto f = EfficiencyFunction::packet_success(2);
  const ChannelState st{{7.0, 1.0}};
  const auto plan = make_trigger_plan(spec, f);
  const double lambda = 0.5 * discount_threshold(spec, f);
  const auto cfg = DiscountedGameConfig::with_discount(lambda);
  const auto coop = run_drg(spec, f, st, cfg, trigger_policies(spec, f), plan.reference_signal);
  const auto op = op_powers(spec, f, st);
  for (std::size_t i = 0; i < 2; ++i) {
    auto policies = trigger_policies(spec, f);
    policies[i] = make_one_shot_deviation(policies[i], 1, best_response(spec, f, st, op.powers, i));
    const auto dev = run_drg(spec, f, st, cfg, policies, plan.reference_signal);
    EXPECT_GE(coop.discounted[i], dev.discounted[i]);
  }
}

TEST(Drg, PoliciesSeeOnlyPublicData) {
  const auto spec = make_spec(2, 2);
  const auto f = EfficiencyFunction::packet_success(2);
  std::vector<std::size_t> seen_history;
  std::vector<Policy> policies(2, [&](std::size_t t, double g, std::span<const double> past) {
    seen_history.push_back(past.size());
    EXPECT_EQ(past.size(), t - 1);
    return 0.1 * g;
  });
  run_drg(spec, f, {{7.0, 1.0}}, {0.5, 5, 0.0}, policies);
  EXPECT_EQ(seen_history.size(), 10u);
}

TEST(Drg, TraceCsvLayout) {
  const auto spec = make_spec(2, 2);
  const auto f = EfficiencyFunction::packet_success(2);
  const auto plan = make_trigger_plan(spec, f);
  const auto trace = run_drg(spec, f, {{7.0, 1.0}}, {0.5, 3, 1e-9}, trigger_policies(spec, f), plan.reference_signal);
  std::ostringstream os;
  write_trace_csv(os, trace);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "stage,player,power,signal,stageUtility,phase");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Audit, EquilibriumBelowThreshold) {
  for (auto [k, n, m] : std::vector<std::tuple<int, int, int>>{{2, 2, 2}, {3, 8, 5}, {4, 64, 10}, {15, 128, 100}}) {
    const auto spec = make_spec(k, n);
    const auto f = EfficiencyFunction::packet_success(m);
    ChannelState st;
    for (int i = 0; i < k; ++i) st.gains.push_back(1.0 + 0.5 * i);
    const double thr = discount_threshold(spec, f);
    ASSERT_GT(thr, 0.0);
    for (double frac : {0.1, 0.5, 1.0}) {
      const double lambda = std::min(frac * thr, 0.999);
      const auto report = audit_equilibrium(spec, f, st, lambda, 2000);
      EXPECT_TRUE(report.is_equilibrium) << "K=" << k << " lambda=" << lambda << " gain=" << report.max_gain;
    }
  }
}

TEST(Audit, ProfitableDeviationWhenFutureIsDiscountedAway) {
  const auto spec = make_spec(2, 2, 1.0, 10.0);
  const auto f = EfficiencyFunction::packet_success(2);
  const ChannelState st{{7.0, 1.0}};
  ASSERT_LT(discount_threshold(spec, f), 0.999);
  const auto report = audit_equilibrium(spec, f, st, 0.999);
  EXPECT_FALSE(report.is_equilibrium);
  EXPECT_GT(report.max_gain, 0.0);
}

TEST(Audit, EmpiricalBoundaryMatchesExactFormula) {
  const auto spec = make_spec(2, 2, 1.0, 10.0);
  const auto f = EfficiencyFunction::packet_success(2);
  const auto report = audit_equilibrium(spec, f, {{7.0, 1.0}}, 0.2, 20000);
  const double exact = exact_boundary(2, 2, 2, oracle::kBetaM2, oracle::kGammaM2AHalf);
  EXPECT_NEAR(report.empirical_boundary, exact, 1e-5);
  EXPECT_GT(report.empirical_boundary, discount_threshold(spec, f));
}

TEST(Audit, SinglePlayerIsTrivial) {
  const auto spec = make_spec(1, 1);
  const auto report = audit_equilibrium(spec, EfficiencyFunction::packet_success(2), {{1.0}}, 0.5);
  EXPECT_TRUE(report.is_equilibrium);
  EXPECT_EQ(report.max_gain, 0.0);
}
