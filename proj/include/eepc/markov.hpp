#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "eepc/errors.hpp"
#include "eepc/game.hpp"

namespace eepc {

/// Finite-state Markov process over channel states; kernel[s][t] = pi(t | s).
struct MarkovChannel {
  std::vector<ChannelState> states;
  std::vector<std::vector<double>> kernel;
  std::optional<std::size_t> initial;

  std::size_t size() const { return states.size(); }

  static MarkovChannel single(ChannelState state) { return {{std::move(state)}, {{1.0}}, 0}; }

  static MarkovChannel uniform(std::vector<ChannelState> states) {
    const std::size_t n = states.size();
    return {std::move(states), std::vector<std::vector<double>>(n, std::vector<double>(n, 1.0 / n)), std::nullopt};
  }

  void validate() const {
    if (states.empty()) throw ConfigError("Markov channel needs at least one state");
    if (kernel.size() != states.size()) throw ConfigError("kernel must be square with one row per state");
    for (std::size_t s = 0; s < kernel.size(); ++s) {
      if (kernel[s].size() != states.size()) throw ConfigError("kernel must be square with one row per state");
      double row = 0.0;
      for (double p : kernel[s]) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw ConfigError("kernel entries must be non-negative");
        row += p;
      }
      if (std::abs(row - 1.0) > 1e-12) throw ConfigError("kernel row " + std::to_string(s) + " does not sum to 1");
    }
    for (const auto& st : states) {
      if (st.size() != states.front().size()) throw ConfigError("channel states differ in dimension");
    }
    if (initial && *initial >= states.size()) throw ConfigError("initial state index out of range");
  }

  Eigen::MatrixXd kernel_matrix() const {
    const auto n = static_cast<Eigen::Index>(size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index s = 0; s < n; ++s) {
      for (Eigen::Index t = 0; t < n; ++t) m(s, t) = kernel[s][t];
    }
    return m;
  }
};

/// Irreducible in the strong, entrywise sense: pi(t | s) > 0 for every pair.
inline bool check_irreducible(const MarkovChannel& chain) {
  chain.validate();
  for (const auto& row : chain.kernel) {
    for (double p : row) {
      if (!(p > 0.0)) return false;
    }
  }
  return true;
}

/// Invariant measure mu with mu pi = mu, sum mu = 1.
inline std::vector<double> stationary_distribution(const MarkovChannel& chain) {
  if (!check_irreducible(chain)) throw NotIrreducibleError("transition kernel has a zero entry");
  const auto n = static_cast<Eigen::Index>(chain.size());
  const Eigen::MatrixXd pi = chain.kernel_matrix();

  // (pi^T - I) mu = 0 with the last balance equation replaced by normalization.
  Eigen::MatrixXd a = pi.transpose() - Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd mu = lu.solve(rhs);
  // One step of iterative refinement.
  mu += lu.solve(rhs - a * mu);

  std::vector<double> out(chain.size());
  for (Eigen::Index s = 0; s < n; ++s) out[s] = std::max(0.0, mu(s));
  return out;
}

}  // namespace eepc
