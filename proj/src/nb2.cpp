// SPDX-License-Identifier: Apache-2.0
#include "collatz/nb2.hpp"

#include <cmath>
#include <string>

#include "collatz/errors.hpp"
#include "collatz/special.hpp"

namespace collatz {

void Nb2Params::validate() const {
  if (!(std::isfinite(mu) && mu > 0.0) || !(std::isfinite(alpha) && alpha > 0.0)) {
    throw ValidationError("NB2 parameters must be finite and positive (mu=" + std::to_string(mu) +
                          ", alpha=" + std::to_string(alpha) + ")");
  }
}

double nb2_log_pmf_log_scale(std::uint64_t y, double eta, double log_alpha) {
  const double alpha = std::exp(log_alpha);
  const double r = 1.0 / alpha;
  const double yd = static_cast<double>(y);
  // ln p = -log1p(alpha mu), ln(1 - p) = ln(alpha mu) - log1p(alpha mu)
  const double l1 = std::log1p(std::exp(log_alpha + eta));
  double lp = log_gamma_ratio(r, yd) - log_gamma(yd + 1.0) - r * l1;
  if (y > 0) lp += yd * (log_alpha + eta - l1);
  return lp;
}

double nb2_log_pmf(std::uint64_t y, const Nb2Params& p) {
  p.validate();
  return nb2_log_pmf_log_scale(y, std::log(p.mu), std::log(p.alpha));
}

std::uint64_t nb2_sample(const Nb2Params& p, Rng& rng) {
  const double lambda = rng.gamma(1.0 / p.alpha, p.alpha * p.mu);
  return rng.poisson(lambda);
}

}  // namespace collatz
