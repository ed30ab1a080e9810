// SPDX-License-Identifier: Apache-2.0
#include "collatz/glm.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "collatz/errors.hpp"
#include "collatz/nb2.hpp"
#include "collatz/special.hpp"

namespace collatz {

namespace {

double normal_log_density(double x, double sd) {
  return -0.5 * (x / sd) * (x / sd) - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double half_normal_log_density(double x, double scale) {
  if (x < 0.0) return -std::numeric_limits<double>::infinity();
  return std::log(2.0) + normal_log_density(x, scale);
}

}  // namespace

GlmParams glm_from_unconstrained(std::span<const double, kGlmDim> theta) {
  using namespace glm_index;
  GlmParams p;
  p.beta0 = theta[kBeta0];
  p.beta_log = theta[kBetaLog];
  p.sigma_u = std::exp(theta[kLogSigma]);
  p.alpha = std::exp(theta[kLogAlpha]);
  for (int r = 0; r < 8; ++r) p.u[r] = p.sigma_u * theta[kZ + r];
  return p;
}

GlmVector glm_to_unconstrained(const GlmParams& p) {
  using namespace glm_index;
  GlmVector t{};
  t[kBeta0] = p.beta0;
  t[kBetaLog] = p.beta_log;
  for (int r = 0; r < 8; ++r) t[kZ + r] = p.u[r] / p.sigma_u;
  t[kLogSigma] = std::log(p.sigma_u);
  t[kLogAlpha] = std::log(p.alpha);
  return t;
}

const std::array<std::string, kGlmDim>& glm_param_names() {
  static const std::array<std::string, kGlmDim> names{"beta0", "beta_log", "u0", "u1", "u2",      "u3",
                                                      "u4",    "u5",       "u6", "u7", "sigma_u", "alpha"};
  return names;
}

GlmVector glm_param_values(const GlmParams& p) {
  return {p.beta0, p.beta_log, p.u[0], p.u[1], p.u[2], p.u[3], p.u[4], p.u[5], p.u[6], p.u[7], p.sigma_u, p.alpha};
}

double glm_log_prior(const GlmParams& p, const GlmPrior& prior) {
  double lp = normal_log_density(p.beta0, prior.beta0_sd) + normal_log_density(p.beta_log, prior.beta_log_sd) +
              half_normal_log_density(p.sigma_u, prior.sigma_u_scale) +
              half_normal_log_density(p.alpha, prior.alpha_scale);
  for (double u : p.u) lp += normal_log_density(u / p.sigma_u, 1.0);
  return lp;
}

GlmLogPosterior::GlmLogPosterior(std::span<const FeatureRow> rows, GlmPrior prior) : prior_(prior) {
  if (rows.empty()) throw ValidationError("log posterior needs at least one data row");
  log_n_.reserve(rows.size());
  residue_.reserve(rows.size());
  y_.reserve(rows.size());
  std::map<std::uint32_t, std::uint64_t> counts;
  for (const auto& row : rows) {
    log_n_.push_back(row.log_n);
    residue_.push_back(static_cast<std::uint8_t>(row.residue8));
    y_.push_back(row.tau);
    ++counts[row.tau];
  }
  y_counts_.assign(counts.begin(), counts.end());
  for (const auto& [y, c] : y_counts_) sum_log_y_factorial_ += static_cast<double>(c) * log_gamma(y + 1.0);
}

double GlmLogPosterior::log_likelihood(const GlmParams& p) const {
  const double log_alpha = std::log(p.alpha);
  const double r = 1.0 / p.alpha;
  // Row terms: y (ln alpha + eta - l1) - r l1, l1 = log1p(alpha mu).
  double row_sum = 0.0;
  for (std::size_t i = 0; i < log_n_.size(); ++i) {
    const double eta = p.beta0 + p.beta_log * log_n_[i] + p.u[residue_[i]];
    const double l1 = std::log1p(std::exp(log_alpha + eta));
    double t = -r * l1;
    if (y_[i] != 0) t += y_[i] * (log_alpha + eta - l1);
    row_sum += t;
  }
  double gamma_sum = 0.0;
  for (const auto& [y, c] : y_counts_) gamma_sum += static_cast<double>(c) * log_gamma_ratio(r, y);
  return row_sum + gamma_sum - sum_log_y_factorial_;
}

double glm_log_prior_unconstrained(std::span<const double, kGlmDim> theta, const GlmPrior& prior) {
  using namespace glm_index;
  double lp = normal_log_density(theta[kBeta0], prior.beta0_sd) +
              normal_log_density(theta[kBetaLog], prior.beta_log_sd) +
              half_normal_log_density(std::exp(theta[kLogSigma]), prior.sigma_u_scale) +
              half_normal_log_density(std::exp(theta[kLogAlpha]), prior.alpha_scale) + theta[kLogSigma] +
              theta[kLogAlpha];
  for (int r = 0; r < 8; ++r) lp += normal_log_density(theta[kZ + r], 1.0);
  return lp;
}

std::vector<AuxiliaryKernel> glm_auxiliary_kernels(const GlmPrior& prior, double scale_step, double shift_step) {
  using namespace glm_index;
  auto prior_at = [prior](const Eigen::VectorXd& x) {
    return glm_log_prior_unconstrained(std::span<const double, kGlmDim>(x.data(), kGlmDim), prior);
  };
  AuxiliaryKernel scale = [prior_at, scale_step](Eigen::VectorXd& x, Rng& rng) {
    const double d = rng.normal(0.0, scale_step);
    Eigen::VectorXd y = x;
    y[kLogSigma] += d;
    y.segment<8>(kZ) *= std::exp(-d);
    const double delta = prior_at(y) - prior_at(x);
    if (std::log(rng.uniform()) < delta - 8.0 * d) {
      x = y;
      return delta;
    }
    return 0.0;
  };
  AuxiliaryKernel shift = [prior_at, shift_step](Eigen::VectorXd& x, Rng& rng) {
    const double d = rng.normal(0.0, shift_step);
    Eigen::VectorXd y = x;
    y[kBeta0] += std::exp(x[kLogSigma]) * d;
    y.segment<8>(kZ).array() -= d;
    const double delta = prior_at(y) - prior_at(x);
    if (std::log(rng.uniform()) < delta) {
      x = y;
      return delta;
    }
    return 0.0;
  };
  return {scale, shift};
}

double GlmLogPosterior::operator()(std::span<const double, kGlmDim> theta) const {
  const double lp = glm_log_prior_unconstrained(theta, prior_);
  if (!std::isfinite(lp)) return lp;
  return lp + log_likelihood(glm_from_unconstrained(theta));
}

double GlmLogPosterior::checked(std::span<const double, kGlmDim> theta) const {
  const auto& names = glm_param_names();
  const GlmParams p = glm_from_unconstrained(theta);
  const GlmVector values = glm_param_values(p);
  for (std::size_t k = 0; k < kGlmDim; ++k) {
    if (!std::isfinite(theta[k]) || !std::isfinite(values[k]) ||
        ((k == glm_index::kLogSigma || k == glm_index::kLogAlpha) && values[k] <= 0.0)) {
      throw NonFiniteError("log posterior: parameter " + names[k] + " = " + std::to_string(values[k]) +
                           " is not admissible");
    }
  }
  const double value = (*this)(theta);
  if (std::isfinite(value)) return value;
  for (std::size_t i = 0; i < log_n_.size(); ++i) {
    const double eta = p.eta(log_n_[i], residue_[i]);
    const double lp = nb2_log_pmf_log_scale(y_[i], eta, std::log(p.alpha));
    if (!std::isfinite(lp)) {
      throw NonFiniteError("log posterior: data row " + std::to_string(i) + " (tau=" + std::to_string(y_[i]) +
                           ", eta=" + std::to_string(eta) + ") has non-finite log pmf");
    }
  }
  throw NonFiniteError("log posterior is not finite (value " + std::to_string(value) + ")");
}

double log_posterior(const GlmParams& p, std::span<const FeatureRow> rows, const GlmPrior& prior) {
  const GlmVector theta = glm_to_unconstrained(p);
  return GlmLogPosterior(rows, prior).checked(theta);
}

}  // namespace collatz
