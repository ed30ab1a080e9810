// SPDX-License-Identifier: Apache-2.0
#pragma once

// Hierarchical NB2 regression:
//   ln mu_n = beta0 + beta_log ln n + u[n mod 8],   u_r = sigma_u z_r
// Priors: beta0 ~ N(0, 10^2), beta_log ~ N(0, 5^2), z_r ~ N(0, 1),
//         sigma_u ~ HalfNormal(1), alpha ~ HalfNormal(5)
// (HalfNormal(s) is |N(0, s^2)|, i.e. s is a standard deviation.)
//
// The sampler works on the unconstrained vector
//   theta = (beta0, beta_log, z_0..z_7, ln sigma_u, ln alpha)
// and the log posterior includes the Jacobian ln sigma_u + ln alpha.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "collatz/features.hpp"
#include "collatz/sampler.hpp"

namespace collatz {

inline constexpr std::size_t kGlmDim = 12;
using GlmVector = std::array<double, kGlmDim>;

namespace glm_index {
inline constexpr std::size_t kBeta0 = 0;
inline constexpr std::size_t kBetaLog = 1;
inline constexpr std::size_t kZ = 2;
inline constexpr std::size_t kLogSigma = 10;
inline constexpr std::size_t kLogAlpha = 11;
}  // namespace glm_index

struct GlmParams {
  double beta0 = 0.0;
  double beta_log = 0.0;
  std::array<double, 8> u{};
  double sigma_u = 1.0;
  double alpha = 1.0;

  double eta(double log_n, int residue8) const noexcept { return beta0 + beta_log * log_n + u[residue8]; }
};

/// u_r = sigma_u * z_r.
GlmParams glm_from_unconstrained(std::span<const double, kGlmDim> theta);
GlmVector glm_to_unconstrained(const GlmParams& p);

/// Names used in diagnostics and JSON: beta0, beta_log, u0..u7, sigma_u, alpha.
const std::array<std::string, kGlmDim>& glm_param_names();
/// Values in the same order as glm_param_names().
GlmVector glm_param_values(const GlmParams& p);

struct GlmPrior {
  double beta0_sd = 10.0;
  double beta_log_sd = 5.0;
  double sigma_u_scale = 1.0;
  double alpha_scale = 5.0;
};

/// Sum of the five prior log densities (beta0, beta_log, z, sigma_u, alpha)
/// on the constrained scale, with z = u / sigma_u. No Jacobian.
double glm_log_prior(const GlmParams& p, const GlmPrior& prior = {});

/// Log posterior over a fixed data set. Evaluation groups rows by response
/// value so the log-gamma work scales with the number of distinct tau values.
class GlmLogPosterior {
 public:
  explicit GlmLogPosterior(std::span<const FeatureRow> rows, GlmPrior prior = {});

  std::size_t size() const noexcept { return log_n_.size(); }
  const GlmPrior& prior() const noexcept { return prior_; }

  /// Sum over rows of nb2_log_pmf(tau_n; exp(eta_n), alpha).
  double log_likelihood(const GlmParams& p) const;

  /// Unconstrained log posterior (likelihood + prior + Jacobian). May return
  /// -inf when mu overflows; the sampler rejects such proposals.
  double operator()(std::span<const double, kGlmDim> theta) const;

  /// Same as operator() but throws NonFiniteError naming the first offending
  /// parameter or data row.
  double checked(std::span<const double, kGlmDim> theta) const;

 private:
  std::vector<double> log_n_;
  std::vector<std::uint8_t> residue_;
  std::vector<std::uint32_t> y_;
  std::vector<std::pair<std::uint32_t, std::uint64_t>> y_counts_;  // distinct y, multiplicity
  double sum_log_y_factorial_ = 0.0;
  GlmPrior prior_;
};

/// Prior plus Jacobian on the unconstrained vector (everything in the log
/// posterior except the likelihood).
double glm_log_prior_unconstrained(std::span<const double, kGlmDim> theta, const GlmPrior& prior = {});

/// Two Metropolis moves that leave every linear predictor beta0 + u_r (and so
/// the likelihood) unchanged, letting them be accepted on the prior alone:
///   scale:  ln sigma_u += d, z *= exp(-d)          (Jacobian exp(-8 d))
///   shift:  beta0 += sigma_u d, z -= d
/// They move along the ridges that the non-centered offsets create.
std::vector<AuxiliaryKernel> glm_auxiliary_kernels(const GlmPrior& prior = {}, double scale_step = 0.3,
                                                   double shift_step = 0.5);

/// Checked log posterior at constrained parameters (theta = glm_to_unconstrained(p)).
double log_posterior(const GlmParams& p, std::span<const FeatureRow> rows, const GlmPrior& prior = {});

}  // namespace collatz
