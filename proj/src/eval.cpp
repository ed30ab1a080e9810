// SPDX-License-Identifier: Apache-2.0
#include "collatz/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "collatz/errors.hpp"
#include "collatz/parallel.hpp"

namespace collatz {

namespace {

template <typename T>
SummaryStats summarize_impl(std::span<const T> values) {
  if (values.empty()) throw ValidationError("summarize: no values");
  SummaryStats s;
  s.count = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  unsigned __int128 s1 = 0, s2 = 0;
  for (T v : values) {
    s1 += v;
    s2 += static_cast<unsigned __int128>(v) * v;
  }
  const auto n = static_cast<unsigned __int128>(s.count);
  // N * sum(x^2) - (sum x)^2 is exact and nonnegative.
  const unsigned __int128 centered = n * s2 - s1 * s1;
  const double nd = static_cast<double>(s.count);
  s.mean = static_cast<double>(s1) / nd;
  s.variance_population = static_cast<double>(centered) / (nd * nd);
  s.variance_sample = s.count > 1 ? static_cast<double>(centered) / (nd * (nd - 1.0)) : 0.0;
  s.variance = s.variance_population;
  s.dispersion_ratio = s.mean > 0.0 ? s.variance / s.mean : 0.0;
  return s;
}

std::string format_fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

}  // namespace

SummaryStats summarize(std::span<const std::uint16_t> values) { return summarize_impl(values); }
SummaryStats summarize(std::span<const std::uint32_t> values) { return summarize_impl(values); }
SummaryStats summarize(const TauTable& table) { return summarize_impl(table.values()); }

double log_score_from_hits(std::span<const std::uint64_t> hits, std::size_t s_mc, double epsilon) {
  double score = 0.0;
  for (auto h : hits) score += std::log(static_cast<double>(h) / static_cast<double>(s_mc) + epsilon);
  return score;
}

EvalReport glm_log_score(const NbPosterior& posterior, std::span<const FeatureRow> test, std::uint64_t seed,
                         unsigned threads, const std::string& model_id, std::vector<double>* w1_sample) {
  if (test.empty()) throw ValidationError("glm_log_score: empty test set");
  const PredictiveDensity density(posterior);
  std::vector<double> per_point(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) { per_point[i] = density(test[i].n, test[i].tau); });

  std::vector<std::uint64_t> ns(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) ns[i] = test[i].n;
  const auto ppc = posterior_predictive(posterior, ns, 1, seed);
  std::vector<double> predicted(test.size()), observed(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) {
    predicted[i] = static_cast<double>(ppc[i][0]);
    observed[i] = test[i].tau;
  }

  EvalReport r;
  r.model_id = model_id;
  for (double v : per_point) r.log_score += v;
  r.n_test = test.size();
  r.per_obs_log_score = r.log_score / static_cast<double>(r.n_test);
  r.w1 = wasserstein1(observed, predicted);
  r.seed = seed;
  if (w1_sample) *w1_sample = std::move(predicted);
  return r;
}

EvalReport gen_log_score(const BlockLengthModel& model, std::span<const FeatureRow> test, std::size_t s_mc,
                         double epsilon, const GenConfig& config, std::uint64_t seed, unsigned threads,
                         const std::string& model_id, std::vector<double>* w1_sample) {
  if (test.empty()) throw ValidationError("gen_log_score: empty test set");
  if (s_mc == 0) throw ValidationError("gen_log_score: s_mc must be >= 1");
  if (!(epsilon > 0.0)) throw ValidationError("gen_log_score: epsilon must be > 0");
  const BlockLengthSampler mean_sampler(model, config.pk_source);

  std::vector<std::uint64_t> hits(test.size(), 0);
  std::vector<std::uint64_t> misses(test.size(), 0);
  std::vector<double> predicted(test.size());
  parallel_for(test.size(), threads, [&](std::size_t i) {
    BlockLengthSampler sampler = mean_sampler;
    Rng rng = Rng::substream(seed, Stream::kGenerator, i);
    for (std::size_t s = 0; s < s_mc; ++s) {
      sampler.refresh(rng);
      const GenOutcome o = simulate_tau(test[i].n, sampler, config, rng);
      if (!o.absorbed) {
        ++misses[i];
      } else if (o.steps == test[i].tau) {
        ++hits[i];
      }
    }
    Rng w1_rng = Rng::substream(seed, Stream::kGeneratorW1, i);
    sampler.refresh(w1_rng);
    predicted[i] = static_cast<double>(simulate_tau(test[i].n, sampler, config, w1_rng).steps);
  });

  std::vector<double> observed(test.size());
  for (std::size_t i = 0; i < test.size(); ++i) observed[i] = test[i].tau;

  EvalReport r;
  r.model_id = model_id.empty() ? to_string(model.variant()) : model_id;
  r.log_score = log_score_from_hits(hits, s_mc, epsilon);
  r.n_test = test.size();
  r.per_obs_log_score = r.log_score / static_cast<double>(r.n_test);
  r.w1 = wasserstein1(observed, predicted);
  r.s_mc = s_mc;
  r.epsilon = epsilon;
  r.seed = seed;
  for (auto m : misses) r.non_absorbed += m;
  if (w1_sample) *w1_sample = std::move(predicted);
  return r;
}

double wasserstein1(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("wasserstein1: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  if (x.size() == y.size()) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += std::abs(x[i] - y[i]);
    return s / static_cast<double>(x.size());
  }
  // Integrate |F_x - F_y| between consecutive support points.
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double total = 0.0;
  double prev = std::min(x[0], y[0]);
  while (i < x.size() || j < y.size()) {
    const double next = j == y.size() || (i < x.size() && x[i] <= y[j]) ? x[i] : y[j];
    total += std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny) * (next - prev);
    while (i < x.size() && x[i] == next) ++i;
    while (j < y.size() && y[j] == next) ++j;
    prev = next;
  }
  return total;
}

std::vector<EvalReport> compare(std::vector<EvalReport> reports) {
  if (reports.empty()) throw ValidationError("compare: no reports");
  std::sort(reports.begin(), reports.end(), [](const EvalReport& l, const EvalReport& r) {
    if (l.log_score != r.log_score) return l.log_score > r.log_score;
    return l.model_id < r.model_id;
  });
  return reports;
}

std::string table2_csv(std::span<const EvalReport> ranked) {
  std::ostringstream os;
  os << "model,log_score,w1\n";
  for (const auto& r : ranked) os << r.model_id << ',' << format_fixed(r.log_score, 2) << ',' << format_fixed(r.w1, 3) << '\n';
  return os.str();
}

std::string table2_text(std::span<const EvalReport> ranked) {
  std::size_t width = 5;
  for (const auto& r : ranked) width = std::max(width, r.model_id.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(width) + 2) << "Model" << std::right << std::setw(18) << "Log score"
     << std::setw(12) << "W1" << '\n';
  for (const auto& r : ranked) {
    os << std::left << std::setw(static_cast<int>(width) + 2) << r.model_id << std::right << std::setw(18)
       << format_fixed(r.log_score, 2) << std::setw(12) << format_fixed(r.w1, 3) << '\n';
  }
  return os.str();
}

std::string table1_csv(const SummaryStats& s) {
  std::ostringstream os;
  os << "statistic,value\n"
     << "N," << s.count << '\n'
     << "tau_min," << s.min << '\n'
     << "tau_max," << s.max << '\n'
     << "mean," << format_fixed(s.mean, 3) << '\n'
     << "variance," << format_fixed(s.variance, 3) << '\n'
     << "variance_convention," << s.variance_convention << '\n'
     << "variance_population," << format_fixed(s.variance_population, 6) << '\n'
     << "variance_sample," << format_fixed(s.variance_sample, 6) << '\n'
     << "dispersion_ratio," << format_fixed(s.dispersion_ratio, 3) << '\n';
  return os.str();
}

void to_json(nlohmann::json& j, const EvalReport& r) {
  j = nlohmann::json{{"model_id", r.model_id}, {"log_score", r.log_score}, {"per_obs_log_score", r.per_obs_log_score},
                     {"w1", r.w1},             {"n_test", r.n_test},       {"s_mc", r.s_mc},
                     {"epsilon", r.epsilon},   {"seed", r.seed},           {"non_absorbed", r.non_absorbed}};
}

void from_json(const nlohmann::json& j, EvalReport& r) {
  j.at("model_id").get_to(r.model_id);
  j.at("log_score").get_to(r.log_score);
  j.at("per_obs_log_score").get_to(r.per_obs_log_score);
  j.at("w1").get_to(r.w1);
  j.at("n_test").get_to(r.n_test);
  j.at("s_mc").get_to(r.s_mc);
  j.at("epsilon").get_to(r.epsilon);
  j.at("seed").get_to(r.seed);
  r.non_absorbed = j.value("non_absorbed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const SummaryStats& s) {
  j = nlohmann::json{{"count", s.count},
                     {"min", s.min},
                     {"max", s.max},
                     {"mean", s.mean},
                     {"variance", s.variance},
                     {"variance_convention", s.variance_convention},
                     {"variance_population", s.variance_population},
                     {"variance_sample", s.variance_sample},
                     {"dispersion_ratio", s.dispersion_ratio}};
}

}  // namespace collatz
