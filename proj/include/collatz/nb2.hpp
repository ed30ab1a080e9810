// SPDX-License-Identifier: Apache-2.0
#pragma once

// Negative Binomial in the NB2 mean/dispersion form: E[Y] = mu,
// Var[Y] = mu + alpha mu^2. In the classical (r, p) form r = 1/alpha and
// p = 1/(1 + alpha mu).
//
// Some libraries (PyMC among them) call 1/alpha the dispersion; convert with
// alpha = 1/alpha_other before passing values here.

#include <cstdint>

#include "collatz/rng.hpp"

namespace collatz {

struct Nb2Params {
  double mu = 1.0;
  double alpha = 1.0;

  double variance() const noexcept { return mu + alpha * mu * mu; }
  /// Throws ValidationError unless mu and alpha are finite and positive.
  void validate() const;
};

/// ln Pr(Y = y). Accurate from alpha ~ 1e-10 (Poisson limit) to alpha >> 1.
double nb2_log_pmf(std::uint64_t y, const Nb2Params& p);

/// Same as nb2_log_pmf but parameterized by eta = ln mu and ln alpha, without
/// validation. Used by the likelihood and scoring loops.
double nb2_log_pmf_log_scale(std::uint64_t y, double eta, double log_alpha);

/// Poisson-Gamma mixture draw: Lambda ~ Gamma(shape 1/alpha, scale alpha mu),
/// Y | Lambda ~ Poisson(Lambda).
std::uint64_t nb2_sample(const Nb2Params& p, Rng& rng);

}  // namespace collatz
