// SPDX-License-Identifier: Apache-2.0
#include "collatz/special.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace collatz {

namespace {

constexpr double kLanczosG = 7.0;
constexpr std::array<double, 9> kLanczos{
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

// Tail of Stirling's series for ln Gamma(x); accurate to ~1e-16 for x >= 10.
double stirling_correction(double x) {
  const double ix = 1.0 / x;
  const double ix2 = ix * ix;
  return ix * (1.0 / 12.0 +
               ix2 * (-1.0 / 360.0 +
                      ix2 * (1.0 / 1260.0 +
                             ix2 * (-1.0 / 1680.0 +
                                    ix2 * (1.0 / 1188.0 + ix2 * (-691.0 / 360360.0 + ix2 * (1.0 / 156.0)))))));
}

}  // namespace

double log_gamma(double x) {
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::abs(std::sin(std::numbers::pi * x))) - log_gamma(1.0 - x);
  }
  if (x >= 10.0) {
    return (x - 0.5) * std::log(x) - x + 0.5 * std::log(2.0 * std::numbers::pi) + stirling_correction(x);
  }
  x -= 1.0;
  double a = kLanczos[0];
  for (std::size_t i = 1; i < kLanczos.size(); ++i) a += kLanczos[i] / (x + static_cast<double>(i));
  const double t = x + kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (x + 0.5) * std::log(t) - t + std::log(a);
}

double log_gamma_ratio(double r, double y) {
  if (y == 0.0) return 0.0;
  if (r >= 10.0) {
    // (r - 1/2) log(1 + y/r) + y log(r + y) - y + S(r + y) - S(r)
    return (r - 0.5) * std::log1p(y / r) + y * std::log(r + y) - y + stirling_correction(r + y) -
           stirling_correction(r);
  }
  if (y <= 8.0 && y == std::floor(y)) {
    double s = 0.0;
    for (double i = 0.0; i < y; i += 1.0) s += std::log(r + i);
    return s;
  }
  return log_gamma(r + y) - log_gamma(r);
}

double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace collatz
