// SPDX-License-Identifier: Apache-2.0
#include "collatz/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "collatz/errors.hpp"

namespace collatz {

std::vector<double> dirichlet_update(std::span<const double> prior, std::span<const std::uint64_t> counts) {
  if (prior.size() != counts.size()) {
    throw ValidationError("dirichlet_update: prior has " + std::to_string(prior.size()) + " cells, counts have " +
                          std::to_string(counts.size()));
  }
  std::vector<double> post(prior.size());
  for (std::size_t k = 0; k < prior.size(); ++k) {
    if (!(prior[k] > 0.0)) throw ValidationError("dirichlet_update: prior concentrations must be positive");
    post[k] = prior[k] + static_cast<double>(counts[k]);
  }
  return post;
}

std::vector<double> dirichlet_mean(std::span<const double> a) {
  const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
  std::vector<double> m(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) m[k] = a[k] / a0;
  return m;
}

std::vector<double> dirichlet_variance(std::span<const double> a) {
  const double a0 = std::accumulate(a.begin(), a.end(), 0.0);
  std::vector<double> v(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) v[k] = a[k] * (a0 - a[k]) / (a0 * a0 * (a0 + 1.0));
  return v;
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kGeometric:
      return "geometric";
    case Variant::kGlobal:
      return "global";
    case Variant::kConditional8:
      return "conditional8";
  }
  return "unknown";
}

Variant variant_from_string(const std::string& s) {
  if (s == "geometric") return Variant::kGeometric;
  if (s == "global") return Variant::kGlobal;
  if (s == "conditional8") return Variant::kConditional8;
  throw ValidationError("unknown block-length model variant '" + s + "'");
}

namespace {

void check_k_max(unsigned k_max) {
  if (k_max == 0 || k_max > 63) throw ValidationError("k_max must lie in [1, 63]");
}

std::vector<double> capped_geometric(unsigned k_max) {
  std::vector<double> p(k_max);
  for (unsigned k = 1; k <= k_max; ++k) p[k - 1] = std::ldexp(1.0, -static_cast<int>(k));
  p[k_max - 1] += std::ldexp(1.0, -static_cast<int>(k_max));
  return p;
}

}  // namespace

BlockLengthModel BlockLengthModel::geometric(unsigned k_max) {
  return BlockLengthModel(Variant::kGeometric, k_max, {});
}

BlockLengthModel::BlockLengthModel(Variant variant, unsigned k_max, std::vector<std::vector<double>> concentrations,
                                   std::uint64_t source_n_max)
    : variant_(variant), k_max_(k_max), concentrations_(std::move(concentrations)), source_n_max_(source_n_max) {
  check_k_max(k_max);
  const std::size_t rows = variant == Variant::kGeometric ? 0 : variant == Variant::kGlobal ? 1 : kResidues;
  if (concentrations_.size() != rows) {
    throw ValidationError(to_string(variant) + " model needs " + std::to_string(rows) + " concentration rows");
  }
  for (const auto& r : concentrations_) {
    if (r.size() != k_max) throw ValidationError("concentration row length != k_max");
    for (double a : r) {
      if (!(a > 0.0) || !std::isfinite(a)) throw ValidationError("concentrations must be finite and positive");
    }
  }
}

const std::vector<double>& BlockLengthModel::row(int residue8) const {
  if (variant_ == Variant::kGlobal) return concentrations_[0];
  if (residue8 < 0 || residue8 >= kResidues || residue8 % 2 == 0) {
    throw ValidationError("conditional8 model: residue " + std::to_string(residue8) + " is not an odd class mod 8");
  }
  return concentrations_[static_cast<std::size_t>(residue8)];
}

std::vector<double> BlockLengthModel::pmf(int residue8) const {
  if (variant_ == Variant::kGeometric) return capped_geometric(k_max_);
  return dirichlet_mean(row(residue8));
}

std::vector<double> BlockLengthModel::posterior_sd(int residue8) const {
  if (variant_ == Variant::kGeometric) return std::vector<double>(k_max_, 0.0);
  auto v = dirichlet_variance(row(residue8));
  for (double& x : v) x = std::sqrt(x);
  return v;
}

BlockLengthModel calibrate(const BlockLengthCounts& counts, Variant variant, double prior_concentration) {
  if (variant == Variant::kGeometric) return BlockLengthModel::geometric(counts.k_cap);
  const std::vector<double> prior(counts.k_cap, prior_concentration);
  std::vector<std::vector<double>> rows;
  if (variant == Variant::kGlobal) {
    rows.push_back(dirichlet_update(prior, counts.marginal()));
  } else {
    for (int r = 0; r < kResidues; ++r) {
      rows.push_back(r % 2 == 1 ? dirichlet_update(prior, counts.counts[r]) : prior);
    }
  }
  return BlockLengthModel(variant, counts.k_cap, std::move(rows), counts.n_max);
}

void to_json(nlohmann::json& j, const BlockLengthModel& m) {
  j = nlohmann::json{{"variant", to_string(m.variant())}, {"k_max", m.k_max()}};
  if (m.variant() == Variant::kGlobal) {
    j["concentrations"] = m.concentrations()[0];
  } else if (m.variant() == Variant::kConditional8) {
    j["concentrations"] = m.concentrations();
  } else {
    j["concentrations"] = nullptr;
  }
  j["provenance"] = {{"counts_source", m.variant() == Variant::kGeometric ? "none" : "odd m <= n_max"},
                     {"n_max", m.source_n_max()}};
}

BlockLengthModel block_length_model_from_json(const nlohmann::json& j) {
  const Variant v = variant_from_string(j.at("variant").get<std::string>());
  const auto k_max = j.at("k_max").get<unsigned>();
  std::vector<std::vector<double>> rows;
  if (v == Variant::kGlobal) {
    rows.push_back(j.at("concentrations").get<std::vector<double>>());
  } else if (v == Variant::kConditional8) {
    rows = j.at("concentrations").get<std::vector<std::vector<double>>>();
  }
  std::uint64_t n_max = 0;
  if (j.contains("provenance")) n_max = j["provenance"].value("n_max", std::uint64_t{0});
  return BlockLengthModel(v, k_max, std::move(rows), n_max);
}

std::uint64_t round_odd(double x) {
  if (!std::isfinite(x)) throw ValidationError("round_odd: argument is not finite");
  const double r = std::nearbyint(x);
  if (r <= 1.0) return 1;
  if (r >= 0x1.0p63) throw ValidationError("round_odd: argument exceeds 2^63");
  const auto i = static_cast<std::uint64_t>(r);
  return (i & 1) ? i : i + 1;
}

std::uint64_t round_odd_quotient(std::uint64_t numerator, unsigned k) {
  std::uint64_t q = numerator >> k;
  if (k > 0) {
    const std::uint64_t rem = numerator & ((std::uint64_t{1} << k) - 1);
    const std::uint64_t half = std::uint64_t{1} << (k - 1);
    if (rem > half || (rem == half && (q & 1))) ++q;
  }
  if (q <= 1) return 1;
  return (q & 1) ? q : q + 1;
}

BlockLengthSampler::BlockLengthSampler(const BlockLengthModel& model, PkSource source)
    : model_(&model), source_(source) {
  if (model.variant() == Variant::kConditional8) {
    cdf_.resize(kResidues);
    for (int r = 1; r < kResidues; r += 2) set_cdf(static_cast<std::size_t>(r), model.pmf(r));
  } else {
    cdf_.resize(1);
    set_cdf(0, model.pmf());
  }
}

void BlockLengthSampler::set_cdf(std::size_t row, const std::vector<double>& pmf) {
  auto& c = cdf_[row];
  c.resize(pmf.size());
  std::partial_sum(pmf.begin(), pmf.end(), c.begin());
  const double total = c.back();
  for (double& v : c) v /= total;
  c.back() = 1.0;
}

void BlockLengthSampler::refresh(Rng& rng) {
  if (source_ != PkSource::kPosteriorDraw || model_->variant() == Variant::kGeometric) return;
  const auto& conc = model_->concentrations();
  for (std::size_t r = 0; r < cdf_.size(); ++r) {
    if (model_->variant() == Variant::kConditional8 && r % 2 == 0) continue;
    std::vector<double> g(model_->k_max());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = rng.gamma(conc[r][k], 1.0);
    set_cdf(r, g);
  }
}

unsigned BlockLengthSampler::sample(int residue8, Rng& rng) const {
  std::size_t row = 0;
  if (model_->variant() == Variant::kConditional8) {
    if (residue8 < 0 || residue8 >= kResidues || residue8 % 2 == 0) {
      throw ValidationError("conditional8 model: residue " + std::to_string(residue8) + " is not odd");
    }
    row = static_cast<std::size_t>(residue8);
  }
  const auto& c = cdf_[row];
  const double u = rng.uniform();
  unsigned k = 0;
  while (k + 1 < c.size() && u >= c[k]) ++k;
  return k + 1;
}

// Largest state whose 3m+1 fits in 64 bits. A generated run that climbs past
// it is treated like one that exhausts its step budget.
constexpr std::uint64_t kMaxOdd = (UINT64_MAX - 1) / 3;

GenOutcome simulate_tau(std::uint64_t n, const BlockLengthSampler& sampler, const GenConfig& config, Rng& rng) {
  if (n == 0) throw ValidationError("simulate_tau: n must be >= 1");
  const unsigned h = v2(n);
  std::uint64_t m = n >> h;
  std::uint64_t steps = h;
  while (m != 1) {
    const unsigned k = sampler.sample(static_cast<int>(m & 7), rng);
    steps += 1 + k;
    if (steps > config.max_steps || m > kMaxOdd) return {steps, false};
    m = round_odd_quotient(3 * m + 1, k);
  }
  return {steps, true};
}

GenOutcome simulate_tau(std::uint64_t n, const BlockLengthModel& model, const GenConfig& config, Rng& rng) {
  BlockLengthSampler sampler(model, config.pk_source);
  sampler.refresh(rng);
  return simulate_tau(n, sampler, config, rng);
}

double log_drift(const BlockLengthModel& model, std::optional<int> residue8) {
  const double log2_3 = std::log2(3.0);
  if (model.variant() == Variant::kGeometric) return log2_3 - 2.0;
  auto mean_k = [&](int r) {
    const auto p = model.pmf(r);
    double e = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) e += static_cast<double>(k + 1) * p[k];
    return e;
  };
  if (model.variant() == Variant::kGlobal) return log2_3 - mean_k(1);
  if (residue8) return log2_3 - mean_k(*residue8);
  double e = 0.0;
  for (int r = 1; r < kResidues; r += 2) e += mean_k(r);
  return log2_3 - e / 4.0;
}

TracePair trace_compare(std::uint64_t n, const BlockLengthModel& model, const GenConfig& config, Rng& rng) {
  TracePair out;
  const OddBlockTrace det = odd_block_trace(n);
  for (std::size_t j = 1; j < det.odd_sequence.size(); ++j) {
    out.deterministic.push_back(std::log2(static_cast<double>(det.odd_sequence[j])));
  }
  if (!det.odd_sequence.empty()) out.deterministic.push_back(std::log2(static_cast<double>(det.terminal)));

  BlockLengthSampler sampler(model, config.pk_source);
  sampler.refresh(rng);
  std::uint64_t m = n >> v2(n);
  std::uint64_t steps = v2(n);
  while (m != 1) {
    const unsigned k = sampler.sample(static_cast<int>(m & 7), rng);
    steps += 1 + k;
    if (steps > config.max_steps || m > kMaxOdd) {
      out.stochastic_absorbed = false;
      break;
    }
    m = round_odd_quotient(3 * m + 1, k);
    out.stochastic.push_back(std::log2(static_cast<double>(m)));
  }
  return out;
}

}  // namespace collatz
