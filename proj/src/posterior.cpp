// SPDX-License-Identifier: Apache-2.0
#include "collatz/posterior.hpp"

#include <cmath>
#include <exception>
#include <limits>
#include <iomanip>
#include <sstream>
#include <thread>

#include "collatz/diagnostics.hpp"
#include "collatz/errors.hpp"
#include "collatz/nb2.hpp"
#include "collatz/rng.hpp"
#include "collatz/sampler.hpp"
#include "collatz/special.hpp"

namespace collatz {

namespace {

// Least squares of ln(tau + 1) on ln n, plus a method-of-moments alpha from
// Var = mu + alpha mu^2 on the residual scale.
GlmVector moment_start(std::span<const FeatureRow> data) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& r : data) {
    const double y = std::log(r.tau + 1.0);
    sx += r.log_n;
    sy += y;
    sxx += r.log_n * r.log_n;
    sxy += r.log_n * y;
  }
  const double n = static_cast<double>(data.size());
  const double denom = n * sxx - sx * sx;
  const double slope = denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  const double intercept = (sy - slope * sx) / n;

  double ratio_sum = 0.0;
  for (const auto& r : data) {
    const double mu = std::max(std::exp(intercept + slope * r.log_n), 1e-3);
    ratio_sum += ((r.tau - mu) * (r.tau - mu) - mu) / (mu * mu);
  }
  const double alpha = std::clamp(ratio_sum / n, 1e-3, 10.0);

  GlmVector t{};
  t[glm_index::kBeta0] = intercept;
  t[glm_index::kBetaLog] = slope;
  t[glm_index::kLogSigma] = std::log(0.5);
  t[glm_index::kLogAlpha] = std::log(alpha);
  return t;
}

GlmVector jittered_start(const GlmVector& center, Rng& rng) {
  GlmVector t = center;
  t[glm_index::kBeta0] += rng.normal(0.0, 0.2);
  t[glm_index::kBetaLog] += rng.normal(0.0, 0.02);
  for (int r = 0; r < 8; ++r) t[glm_index::kZ + r] = rng.normal();
  t[glm_index::kLogSigma] = std::log(std::abs(rng.normal(0.0, 1.0)) + 1e-2);
  t[glm_index::kLogAlpha] += rng.normal(0.0, 0.3);
  return t;
}

}  // namespace

std::vector<std::string> NbPosterior::failed_gates(double max_rhat, double min_ess) const {
  std::vector<std::string> failed;
  for (const auto& name : glm_param_names()) {
    auto it = diagnostics.find(name);
    if (it == diagnostics.end()) continue;
    if (!(it->second.rhat <= max_rhat) || !(it->second.ess >= min_ess)) failed.push_back(name);
  }
  return failed;
}

std::string NbPosterior::diagnostics_report() const {
  std::ostringstream os;
  os << std::left << std::setw(10) << "param" << std::right << std::setw(14) << "mean" << std::setw(12) << "sd"
     << std::setw(9) << "rhat" << std::setw(9) << "ess" << '\n';
  for (const auto& name : glm_param_names()) {
    auto it = diagnostics.find(name);
    if (it == diagnostics.end()) continue;
    const auto& d = it->second;
    os << std::left << std::setw(10) << name << std::right << std::setw(14) << std::setprecision(6) << d.mean
       << std::setw(12) << std::setprecision(4) << d.sd << std::setw(9) << std::fixed << std::setprecision(3)
       << d.rhat << std::setw(9) << std::setprecision(0) << d.ess << std::defaultfloat << '\n';
  }
  return os.str();
}

void compute_diagnostics(NbPosterior& posterior) {
  posterior.diagnostics.clear();
  if (posterior.n_draws < 4) return;
  const auto& names = glm_param_names();
  for (std::size_t k = 0; k < kGlmDim; ++k) {
    std::vector<std::vector<double>> chains(posterior.n_chains);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t c = 0; c < posterior.n_chains; ++c) {
      for (std::size_t i = 0; i < posterior.n_draws; ++i) {
        const double v = glm_param_values(posterior.draws[c * posterior.n_draws + i])[k];
        chains[c].push_back(v);
        sum += v;
        sum2 += v * v;
      }
    }
    const double n = static_cast<double>(posterior.draws.size());
    ParamDiagnostics d;
    d.mean = sum / n;
    d.sd = std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1.0)));
    d.rhat = split_rhat(chains);
    d.ess = effective_sample_size(chains);
    posterior.diagnostics[names[k]] = d;
  }
}

void check_diagnostics(const NbPosterior& posterior, double max_rhat, double min_ess) {
  const auto failed = posterior.failed_gates(max_rhat, min_ess);
  if (failed.empty()) return;
  std::ostringstream os;
  os << "MCMC diagnostics failed (split R-hat > " << max_rhat << " or ESS < " << min_ess << ") for:";
  for (const auto& f : failed) os << ' ' << f;
  os << '\n' << posterior.diagnostics_report();
  throw DiagnosticsError(os.str());
}

NbPosterior fit_mcmc(std::span<const FeatureRow> data, const FitConfig& config) {
  if (config.n_chains == 0 || config.n_draws == 0 || config.thin == 0) {
    throw ValidationError("fit_mcmc: chains, draws and thin must be positive");
  }
  const GlmLogPosterior target(data, config.prior);
  const GlmVector center = moment_start(data);

  LogDensity density = [&target](std::span<const double> theta) {
    return target(std::span<const double, kGlmDim>(theta.data(), kGlmDim));
  };
  Eigen::VectorXd scales(kGlmDim);
  scales.setConstant(0.01);
  scales[glm_index::kBetaLog] = 0.001;
  const SamplerConfig sc{config.n_tune, config.n_draws, config.thin, config.target_accept};
  const AdaptiveMetropolis sampler(density, sc, scales, glm_auxiliary_kernels(config.prior));

  std::vector<ChainOutput> outputs(config.n_chains);
  std::vector<std::exception_ptr> errors(config.n_chains);
  {
    std::vector<std::jthread> pool;
    for (std::size_t c = 0; c < config.n_chains; ++c) {
      pool.emplace_back([&, c] {
        try {
          Rng rng = Rng::substream(config.seed, Stream::kChain, c);
          const GlmVector start = jittered_start(center, rng);
          target.checked(start);
          outputs[c] = sampler.run(Eigen::Map<const Eigen::VectorXd>(start.data(), kGlmDim), rng);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  NbPosterior post;
  post.n_chains = config.n_chains;
  post.n_tune = config.n_tune;
  post.n_draws = config.n_draws;
  post.thin = config.thin;
  post.target_accept = config.target_accept;
  post.seed = config.seed;
  post.draws.reserve(config.n_chains * config.n_draws);
  for (const auto& out : outputs) {
    post.accept_rates.push_back(out.accept_rate);
    for (Eigen::Index i = 0; i < out.draws.rows(); ++i) {
      GlmVector theta{};
      for (std::size_t k = 0; k < kGlmDim; ++k) theta[k] = out.draws(i, static_cast<Eigen::Index>(k));
      post.draws.push_back(glm_from_unconstrained(theta));
      std::array<double, 8> z{};
      for (int r = 0; r < 8; ++r) z[r] = theta[glm_index::kZ + r];
      post.z.push_back(z);
    }
  }
  compute_diagnostics(post);
  if (config.enforce_gates) check_diagnostics(post, config.max_rhat, config.min_ess);
  return post;
}

std::vector<std::vector<std::uint64_t>> posterior_predictive(const NbPosterior& posterior,
                                                             std::span<const std::uint64_t> ns,
                                                             std::size_t draws_per_point, std::uint64_t seed) {
  if (posterior.draws.empty()) throw ValidationError("posterior_predictive: empty posterior");
  std::vector<std::vector<std::uint64_t>> out(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    Rng rng = Rng::substream(seed, Stream::kPosteriorPredictive, i);
    const FeatureRow row = make_feature_row(ns[i], 0);
    out[i].reserve(draws_per_point);
    for (std::size_t k = 0; k < draws_per_point; ++k) {
      const GlmParams& p = posterior.draws[rng.uniform_below(posterior.draws.size())];
      out[i].push_back(nb2_sample({std::exp(p.eta(row.log_n, row.residue8)), p.alpha}, rng));
    }
  }
  return out;
}

PredictiveDensity::PredictiveDensity(const NbPosterior& posterior) {
  if (posterior.draws.empty()) throw ValidationError("predictive density: empty posterior");
  draws_.reserve(posterior.draws.size());
  for (const auto& p : posterior.draws) {
    draws_.push_back({p.beta0, p.beta_log, std::log(p.alpha), 1.0 / p.alpha, p.u});
  }
}

double PredictiveDensity::operator()(std::uint64_t n, std::uint64_t y) const {
  const FeatureRow row = make_feature_row(n, 0);
  const double yd = static_cast<double>(y);
  const double log_y_factorial = log_gamma(yd + 1.0);
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(draws_.size());
  for (std::size_t s = 0; s < draws_.size(); ++s) {
    const Draw& d = draws_[s];
    const double eta = d.beta0 + d.beta_log * row.log_n + d.u[row.residue8];
    const double l1 = std::log1p(std::exp(d.log_alpha + eta));
    double lp = log_gamma_ratio(d.r, yd) - log_y_factorial - d.r * l1;
    if (y > 0) lp += yd * (d.log_alpha + eta - l1);
    terms[s] = lp;
    max_term = std::max(max_term, lp);
  }
  if (!std::isfinite(max_term)) return max_term;
  // Fixed-point accumulation (2^-62 resolution) is exact and order-free, so
  // permuting or duplicating the draws cannot change the result.
  unsigned __int128 sum = 0;
  for (double t : terms) sum += static_cast<std::uint64_t>(std::llround(std::ldexp(std::exp(t - max_term), 62)));
  const double mean = std::ldexp(static_cast<double>(sum), -62) / static_cast<double>(terms.size());
  return max_term + std::log(mean);
}

double predictive_log_density(const NbPosterior& posterior, std::uint64_t n, std::uint64_t y) {
  return PredictiveDensity(posterior)(n, y);
}

void to_json(nlohmann::json& j, const GlmParams& p) {
  j = nlohmann::json{{"beta0", p.beta0}, {"beta_log", p.beta_log}, {"u", p.u}, {"sigma_u", p.sigma_u},
                     {"alpha", p.alpha}};
}

void from_json(const nlohmann::json& j, GlmParams& p) {
  j.at("beta0").get_to(p.beta0);
  j.at("beta_log").get_to(p.beta_log);
  j.at("u").get_to(p.u);
  j.at("sigma_u").get_to(p.sigma_u);
  j.at("alpha").get_to(p.alpha);
}

void to_json(nlohmann::json& j, const NbPosterior& p) {
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [name, d] : p.diagnostics) {
    diag[name] = {{"rhat", d.rhat}, {"ess", d.ess}, {"mean", d.mean}, {"sd", d.sd}};
  }
  j = nlohmann::json{{"n_chains", p.n_chains},
                     {"n_tune", p.n_tune},
                     {"n_draws", p.n_draws},
                     {"thin", p.thin},
                     {"target_accept", p.target_accept},
                     {"seed", p.seed},
                     {"accept_rates", p.accept_rates},
                     {"diagnostics", diag},
                     {"draws", nlohmann::json::array()}};
  for (std::size_t i = 0; i < p.draws.size(); ++i) {
    nlohmann::json d = p.draws[i];
    if (i < p.z.size()) d["z"] = p.z[i];
    j["draws"].push_back(std::move(d));
  }
}

void from_json(const nlohmann::json& j, NbPosterior& p) {
  j.at("n_chains").get_to(p.n_chains);
  j.at("n_tune").get_to(p.n_tune);
  j.at("n_draws").get_to(p.n_draws);
  j.at("thin").get_to(p.thin);
  j.at("target_accept").get_to(p.target_accept);
  j.at("seed").get_to(p.seed);
  j.at("accept_rates").get_to(p.accept_rates);
  p.draws.clear();
  p.z.clear();
  for (const auto& d : j.at("draws")) {
    p.draws.push_back(d.get<GlmParams>());
    if (d.contains("z")) p.z.push_back(d.at("z").get<std::array<double, 8>>());
  }
  p.diagnostics.clear();
  for (const auto& [name, d] : j.at("diagnostics").items()) {
    p.diagnostics[name] = {d.at("rhat").get<double>(), d.at("ess").get<double>(), d.at("mean").get<double>(),
                           d.at("sd").get<double>()};
  }
  if (p.draws.size() != p.n_chains * p.n_draws) throw IoError("posterior: draw count != n_chains * n_draws");
}

}  // namespace collatz
