// SPDX-License-Identifier: Apache-2.0
#pragma once

// Adaptive random-walk Metropolis on an unconstrained vector.
//
// Proposal: x' = x + lambda L e, e ~ N(0, I), where L L^T is the proposal
// covariance. During tuning:
//   * lambda follows a Robbins-Monro recursion on the acceptance probability
//     toward target_accept;
//   * the covariance is re-estimated at the end of doubling windows from the
//     chain's own history (shrunk toward its diagonal), after an initial
//     buffer in which only lambda moves.
// Both are frozen once tuning ends, so retained draws come from a fixed
// Markov kernel.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "collatz/rng.hpp"

namespace collatz {

using LogDensity = std::function<double(std::span<const double>)>;

/// Extra Metropolis-Hastings kernel run after every random-walk step. It must
/// leave the target invariant on its own, update x in place, and return the
/// resulting change in log density (0 when it rejects).
using AuxiliaryKernel = std::function<double(Eigen::VectorXd& x, Rng& rng)>;

struct SamplerConfig {
  std::size_t n_tune = 1000;
  std::size_t n_draws = 1000;
  /// Metropolis steps per retained draw (and per tuning iteration).
  std::size_t thin = 1;
  double target_accept = 0.3;
};

struct ChainOutput {
  Eigen::MatrixXd draws;  // n_draws x dim
  double accept_rate = 0.0;  // over retained steps
  double scale = 0.0;        // frozen lambda
  Eigen::MatrixXd proposal_cov;
};

class AdaptiveMetropolis {
 public:
  /// initial_scales: per-coordinate proposal standard deviations before any
  /// covariance has been learned.
  AdaptiveMetropolis(LogDensity log_density, SamplerConfig config, Eigen::VectorXd initial_scales,
                     std::vector<AuxiliaryKernel> auxiliary = {});

  /// Throws NonFiniteError if the start point has non-finite density or a
  /// proposal evaluates to NaN. Proposals at -inf are rejected.
  ChainOutput run(const Eigen::VectorXd& start, Rng& rng) const;

 private:
  LogDensity log_density_;
  SamplerConfig config_;
  Eigen::VectorXd initial_scales_;
  std::vector<AuxiliaryKernel> auxiliary_;
};

}  // namespace collatz
