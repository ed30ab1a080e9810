// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>

#include "collatz/errors.hpp"
#include "collatz/nb2.hpp"
#include "collatz/rng.hpp"
#include "collatz/sampler.hpp"

namespace collatz::testing {

std::uint64_t naive_tau(std::uint64_t n) {
  std::uint64_t steps = 0;
  while (n != 1) {
    n = n % 2 == 0 ? n / 2 : 3 * n + 1;
    ++steps;
  }
  return steps;
}

unsigned naive_v2(std::uint64_t n) {
  unsigned k = 0;
  while (n % 2 == 0) {
    n /= 2;
    ++k;
  }
  return k;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(is, line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

double nb2_total_mass(double mu, double alpha) {
  // Past the mode the pmf ratio p(y+1)/p(y) = q (y + r) / (y + 1) decreases
  // toward q = alpha mu / (1 + alpha mu), so the tail beyond y is at most
  // p(y) * ratio / (1 - ratio) once the ratio is below 1.
  const Nb2Params p{mu, alpha};
  const double r = 1.0 / alpha;
  const double q = alpha * mu / (1.0 + alpha * mu);
  long double total = 0.0L;
  for (std::uint64_t y = 0;; ++y) {
    const double pmf = std::exp(nb2_log_pmf(y, p));
    total += pmf;
    const double ratio = q * (static_cast<double>(y) + 1.0 + r) / (static_cast<double>(y) + 2.0);
    if (static_cast<double>(y) > mu && ratio < 1.0 && pmf * ratio / (1.0 - ratio) < 1e-15) break;
  }
  return static_cast<double>(total);
}

ConjugateCheck conjugate_gamma_check(std::uint64_t seed, std::size_t n_draws) {
  // Prior Gamma(shape a, rate b); data y_i ~ Poisson(lambda), i = 1..N.
  constexpr double a = 2.0;
  constexpr double b = 1.0;
  constexpr double true_lambda = 4.0;
  constexpr int n_obs = 25;
  Rng data_rng = Rng::substream(seed, Stream::kSynthetic, 0);
  double sum_y = 0.0;
  for (int i = 0; i < n_obs; ++i) sum_y += static_cast<double>(data_rng.poisson(true_lambda));
  const double shape = a + sum_y;
  const double rate = b + n_obs;

  // Density of phi = ln lambda: lambda^shape exp(-rate lambda) (Jacobian folded in).
  const LogDensity target = [shape, rate](std::span<const double> x) {
    return shape * x[0] - rate * std::exp(x[0]);
  };
  SamplerConfig cfg;
  cfg.n_tune = 4000;
  cfg.n_draws = n_draws;
  cfg.thin = 2;
  cfg.target_accept = 0.44;
  AdaptiveMetropolis sampler(target, cfg, Eigen::VectorXd::Constant(1, 0.5));
  Rng rng = Rng::substream(seed, Stream::kChain, 0);
  const ChainOutput out = sampler.run(Eigen::VectorXd::Constant(1, 0.0), rng);

  std::vector<double> lambda(out.draws.rows());
  for (Eigen::Index i = 0; i < out.draws.rows(); ++i) lambda[i] = std::exp(out.draws(i, 0));
  std::sort(lambda.begin(), lambda.end());

  ConjugateCheck result;
  const boost::math::gamma_distribution<double> exact(shape, 1.0 / rate);
  for (std::size_t k = 0; k < 3; ++k) {
    const double pos = result.probs[k] * static_cast<double>(lambda.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, lambda.size() - 1);
    result.sampled[k] = lambda[lo] + (pos - static_cast<double>(lo)) * (lambda[hi] - lambda[lo]);
    result.exact[k] = boost::math::quantile(exact, result.probs[k]);
    result.max_rel_error =
        std::max(result.max_rel_error, std::abs(result.sampled[k] - result.exact[k]) / result.exact[k]);
  }
  return result;
}

GlmParams sbc_truth() {
  GlmParams p;
  p.beta0 = 2.0;
  p.beta_log = 0.5;
  p.u.fill(0.0);
  p.sigma_u = 0.0;
  p.alpha = 0.1;
  return p;
}

std::vector<FeatureRow> synthetic_rows(const GlmParams& truth, std::size_t n_rows, std::uint64_t n_max,
                                       std::uint64_t seed) {
  Rng rng = Rng::substream(seed, Stream::kSynthetic, 1);
  std::vector<FeatureRow> rows;
  rows.reserve(n_rows);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const std::uint64_t n = 1 + rng.uniform_below(n_max);
    FeatureRow row;
    row.n = n;
    row.log_n = std::log(static_cast<double>(n));
    row.residue8 = static_cast<int>(n % 8);
    const double mu = std::exp(truth.eta(row.log_n, row.residue8));
    row.tau = static_cast<std::uint32_t>(nb2_sample({mu, truth.alpha}, rng));
    rows.push_back(row);
  }
  return rows;
}

RecoveryCheck recovery_check(const GlmParams& truth, std::size_t n_rows, const FitConfig& config) {
  FitConfig cfg = config;
  cfg.enforce_gates = false;
  const auto rows = synthetic_rows(truth, n_rows, 10000000, cfg.seed);
  const NbPosterior post = fit_mcmc(rows, cfg);

  RecoveryCheck result;
  result.failed_gates = post.failed_gates(cfg.max_rhat, cfg.min_ess);
  const auto& names = glm_param_names();
  const GlmVector values = glm_param_values(truth);
  for (std::size_t k = 0; k < kGlmDim; ++k) {
    const ParamDiagnostics& d = post.diagnostics.at(names[k]);
    const double z = (d.mean - values[k]) / d.sd;
    result.names.push_back(names[k]);
    result.truth.push_back(values[k]);
    result.mean.push_back(d.mean);
    result.sd.push_back(d.sd);
    result.z.push_back(z);
    result.max_abs_z = std::max(result.max_abs_z, std::abs(z));
  }
  return result;
}

}  // namespace collatz::testing
