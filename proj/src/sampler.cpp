// SPDX-License-Identifier: Apache-2.0
#include "collatz/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "collatz/errors.hpp"

namespace collatz {

namespace {

// Tuning schedule in Metropolis steps: [0, init) lambda only, then doubling
// covariance windows, then [term_start, total) lambda only with the last
// covariance.
struct Schedule {
  std::vector<std::size_t> window_ends;
  std::size_t total = 0;
};

Schedule make_schedule(std::size_t total) {
  Schedule s;
  s.total = total;
  const std::size_t init = total * 15 / 100;
  const std::size_t term = total / 10;
  if (total < 100) return s;
  const std::size_t end = total - term;
  std::size_t w = std::max<std::size_t>((end - init) / 31, 1);
  for (std::size_t pos = init; pos < end; w *= 2) {
    // Stretch the last window when the next doubled one would not fit.
    if (pos + 3 * w > end) w = end - pos;
    pos += w;
    s.window_ends.push_back(pos);
  }
  return s;
}

class Welford {
 public:
  explicit Welford(Eigen::Index d) : mean_(Eigen::VectorXd::Zero(d)), m2_(Eigen::MatrixXd::Zero(d, d)) {}
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_).transpose();
  }
  std::size_t count() const { return n_; }
  Eigen::MatrixXd covariance() const { return m2_ / static_cast<double>(n_ - 1); }
  void reset() {
    n_ = 0;
    mean_.setZero();
    m2_.setZero();
  }

 private:
  std::size_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

}  // namespace

AdaptiveMetropolis::AdaptiveMetropolis(LogDensity log_density, SamplerConfig config, Eigen::VectorXd initial_scales,
                                       std::vector<AuxiliaryKernel> auxiliary)
    : log_density_(std::move(log_density)),
      config_(config),
      initial_scales_(std::move(initial_scales)),
      auxiliary_(std::move(auxiliary)) {
  if (config_.n_draws == 0 || config_.thin == 0) throw ValidationError("sampler: n_draws and thin must be >= 1");
  if (!(config_.target_accept > 0.0 && config_.target_accept < 1.0)) {
    throw ValidationError("sampler: target_accept must lie in (0, 1)");
  }
  if ((initial_scales_.array() <= 0.0).any()) throw ValidationError("sampler: initial scales must be positive");
}

ChainOutput AdaptiveMetropolis::run(const Eigen::VectorXd& start, Rng& rng) const {
  const Eigen::Index d = start.size();
  if (d != initial_scales_.size()) throw ValidationError("sampler: start point has the wrong dimension");

  Eigen::VectorXd x = start;
  double lp = log_density_(std::span<const double>(x.data(), static_cast<std::size_t>(d)));
  if (!std::isfinite(lp)) throw NonFiniteError("sampler: log density at the start point is not finite");

  Eigen::MatrixXd cov = initial_scales_.array().square().matrix().asDiagonal();
  Eigen::MatrixXd chol = initial_scales_.asDiagonal();
  const double default_log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));
  double log_scale = default_log_scale;
  std::size_t rm_step = 0;

  const std::size_t tune_steps = config_.n_tune * config_.thin;
  const Schedule schedule = make_schedule(tune_steps);
  std::size_t next_window = 0;
  const std::size_t init_buffer = tune_steps * 15 / 100;
  Welford history(d);

  ChainOutput out;
  out.draws.resize(static_cast<Eigen::Index>(config_.n_draws), d);
  std::size_t accepted = 0;

  Eigen::VectorXd noise(d);
  Eigen::VectorXd proposal(d);
  const std::size_t total_steps = tune_steps + config_.n_draws * config_.thin;
  for (std::size_t step = 0; step < total_steps; ++step) {
    const bool tuning = step < tune_steps;
    for (Eigen::Index i = 0; i < d; ++i) noise[i] = rng.normal();
    proposal = x + std::exp(log_scale) * (chol * noise);
    const double lp_new = log_density_(std::span<const double>(proposal.data(), static_cast<std::size_t>(d)));
    if (std::isnan(lp_new)) throw NonFiniteError("sampler: log density evaluated to NaN");
    const double log_ratio = lp_new - lp;
    const double accept_prob = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
    if (rng.uniform() < accept_prob) {
      x = proposal;
      lp = lp_new;
      if (!tuning) ++accepted;
    }
    for (const auto& kernel : auxiliary_) lp += kernel(x, rng);

    if (tuning) {
      ++rm_step;
      log_scale += (accept_prob - config_.target_accept) / std::pow(static_cast<double>(rm_step) + 10.0, 0.6);
      if (step >= init_buffer && next_window < schedule.window_ends.size()) {
        history.add(x);
        if (step + 1 == schedule.window_ends[next_window]) {
          ++next_window;
          if (history.count() > 2) {
            const Eigen::MatrixXd s = history.covariance();
            const double n = static_cast<double>(history.count());
            Eigen::MatrixXd candidate = (n / (n + 5.0)) * s;
            candidate.diagonal() += (5.0 / (n + 5.0)) * s.diagonal();
            Eigen::LLT<Eigen::MatrixXd> llt(candidate);
            if (llt.info() == Eigen::Success && (s.diagonal().array() > 0.0).all()) {
              cov = candidate;
              chol = llt.matrixL();
              log_scale = default_log_scale;
              rm_step = 0;
            }
          }
          history.reset();
        }
      }
    } else if ((step - tune_steps + 1) % config_.thin == 0) {
      out.draws.row(static_cast<Eigen::Index>((step - tune_steps) / config_.thin)) = x.transpose();
    }
  }
  out.accept_rate = static_cast<double>(accepted) / static_cast<double>(config_.n_draws * config_.thin);
  out.scale = std::exp(log_scale);
  out.proposal_cov = cov;
  return out;
}

}  // namespace collatz
