// SPDX-License-Identifier: Apache-2.0
#include "collatz/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collatz/errors.hpp"

namespace collatz {

namespace {

double mean_of(std::span<const double> x) { return std::accumulate(x.begin(), x.end(), 0.0) / x.size(); }

double variance_of(std::span<const double> x) {
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

void check_shape(std::span<const std::vector<double>> chains, std::size_t min_len) {
  if (chains.empty()) throw ValidationError("diagnostics: no chains");
  for (const auto& c : chains) {
    if (c.size() != chains[0].size()) throw ValidationError("diagnostics: chains differ in length");
  }
  if (chains[0].size() < min_len) throw ValidationError("diagnostics: chains too short");
}

// Autocovariance at lags 0..n-1 (biased, divides by n).
std::vector<double> autocovariance(std::span<const double> x) {
  const std::size_t n = x.size();
  const double m = mean_of(x);
  std::vector<double> acov(n, 0.0);
  for (std::size_t lag = 0; lag < n; ++lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - m) * (x[i + lag] - m);
    acov[lag] = s / static_cast<double>(n);
  }
  return acov;
}

}  // namespace

double split_rhat(std::span<const std::vector<double>> chains) {
  check_shape(chains, 4);
  const std::size_t half = chains[0].size() / 2;
  std::vector<std::span<const double>> pieces;
  for (const auto& c : chains) {
    pieces.emplace_back(c.data(), half);
    pieces.emplace_back(c.data() + c.size() - half, half);
  }
  const double n = static_cast<double>(half);
  const double m = static_cast<double>(pieces.size());
  std::vector<double> means;
  double w = 0.0;
  for (auto p : pieces) {
    means.push_back(mean_of(p));
    w += variance_of(p);
  }
  w /= m;
  const double b = n * variance_of(means);
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(std::span<const std::vector<double>> chains) {
  check_shape(chains, 4);
  const std::size_t n = chains[0].size();
  const double m = static_cast<double>(chains.size());
  std::vector<std::vector<double>> acov;
  std::vector<double> means;
  for (const auto& c : chains) {
    acov.push_back(autocovariance(c));
    means.push_back(mean_of(c));
  }
  const double nd = static_cast<double>(n);
  double w = 0.0;
  for (const auto& a : acov) w += a[0] * nd / (nd - 1.0);
  w /= m;
  const double b = chains.size() > 1 ? variance_of(means) : 0.0;
  const double var_plus = (nd - 1.0) / nd * w + b;
  if (var_plus == 0.0) return m * nd;

  auto rho = [&](std::size_t lag) {
    double mean_acov = 0.0;
    for (const auto& a : acov) mean_acov += a[lag];
    mean_acov /= m;
    return 1.0 - (w - mean_acov) / var_plus;
  };

  // Sum positive, monotonically non-increasing pair sums rho_{2k} + rho_{2k+1}.
  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(m * nd));
  return m * nd / tau;
}

}  // namespace collatz
