// SPDX-License-Identifier: Apache-2.0
#include "collatz/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "collatz/errors.hpp"
#include "collatz/features.hpp"
#include "collatz/posterior.hpp"
#include "collatz/rng.hpp"
#include "collatz/tau_io.hpp"

namespace collatz {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("invalid configuration: ") + what);
  };
  require(n_max >= 1, "n_max must be >= 1");
  require(n_fit >= 1 && n_test >= 1, "n_fit and n_test must be >= 1");
  require(k_max >= 1 && k_max <= 63, "k_max must lie in [1, 63]");
  require(chains >= 1 && draws >= 4 && thin >= 1, "chains >= 1, draws >= 4 and thin >= 1 required");
  require(target_accept > 0.0 && target_accept < 1.0, "target_accept must lie in (0, 1)");
  require(s_mc >= 1, "s_mc must be >= 1");
  require(epsilon > 0.0, "epsilon must be > 0");
  require(max_steps >= 1, "max_steps must be >= 1");
  require(ppc_draws >= 1, "ppc_draws must be >= 1");
  require(!output_dir.empty(), "output_dir must be set");
}

namespace {

fs::path artifact_path(const PipelineConfig& c, const char* name) { return c.output_dir / name; }

void require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) {
    throw MissingArtifactError("missing " + p.string() + "; run `" + producer + "` first");
  }
}

void write_text(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open " + p.string() + " for writing");
  os << content;
  if (!os) throw IoError("write failed: " + p.string());
}

void write_json(const fs::path& p, const nlohmann::json& j) { write_text(p, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw IoError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(p.string() + ": " + e.what());
  }
}

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

SummaryStats summary_for(const TauTable& table) {
  SummaryStats s = summarize(table);
  // Population (divide-by-N) variance is the convention that reproduces the
  // published 3814.045 at N = 10^7; both values are written out.
  s.variance_convention = "population";
  return s;
}

TauTable load_table(const PipelineConfig& c) {
  const fs::path p = artifact_path(c, artifact::kTauTable);
  require_artifact(p, "compute");
  return read_tau_table(p);
}

SplitSpec split_for(const PipelineConfig& c, const TauTable& table) {
  return make_split(c.seed, table.n_max(), c.n_fit, c.n_test);
}

std::string block_counts_csv(const BlockLengthCounts& counts) {
  std::ostringstream os;
  os << "residue,k,count\n";
  for (int r = 0; r < kResidues; ++r) {
    for (unsigned k = 1; k <= counts.k_cap; ++k) os << r << ',' << k << ',' << counts.counts[r][k - 1] << '\n';
  }
  return os.str();
}

// Empirical capped block-length frequencies against 2^-k.
std::string pk_empirical_csv(const BlockLengthCounts& counts) {
  const auto marginal = counts.marginal();
  const double total = static_cast<double>(counts.total());
  const auto geo = BlockLengthModel::geometric(counts.k_cap).pmf();
  std::ostringstream os;
  os << "k,count,empirical,geometric\n";
  for (unsigned k = 1; k <= counts.k_cap; ++k) {
    os << k << ',' << marginal[k - 1] << ',' << std::setprecision(17) << marginal[k - 1] / total << ','
       << geo[k - 1] << '\n';
  }
  return os.str();
}

std::string pk_posterior_csv(const BlockLengthModel& global) {
  const auto mean = global.pmf();
  const auto sd = global.posterior_sd();
  const auto geo = BlockLengthModel::geometric(global.k_max()).pmf();
  std::ostringstream os;
  os << std::setprecision(17) << "k,posterior_mean,posterior_sd,geometric\n";
  for (unsigned k = 1; k <= global.k_max(); ++k) {
    os << k << ',' << mean[k - 1] << ',' << sd[k - 1] << ',' << geo[k - 1] << '\n';
  }
  return os.str();
}

std::string pk_mod8_csv(const BlockLengthModel& cond) {
  std::ostringstream os;
  os << std::setprecision(17) << "residue,k,posterior_mean,posterior_sd\n";
  for (int r = 1; r < kResidues; r += 2) {
    const auto mean = cond.pmf(r);
    const auto sd = cond.posterior_sd(r);
    for (unsigned k = 1; k <= cond.k_max(); ++k) os << r << ',' << k << ',' << mean[k - 1] << ',' << sd[k - 1] << '\n';
  }
  return os.str();
}

void write_calibration_tables(const PipelineConfig& c, const BlockLengthModel& global, const BlockLengthModel& cond,
                              std::vector<fs::path>* written) {
  const fs::path post = artifact_path(c, artifact::kPkPosterior);
  const fs::path mod8 = artifact_path(c, artifact::kPkMod8);
  write_text(post, pk_posterior_csv(global));
  write_text(mod8, pk_mod8_csv(cond));
  if (written) {
    written->push_back(post);
    written->push_back(mod8);
  }
}

BlockLengthModel load_model(const PipelineConfig& c, const char* name) {
  const fs::path p = artifact_path(c, name);
  require_artifact(p, "calibrate");
  return block_length_model_from_json(read_json(p));
}

GenConfig gen_config(const PipelineConfig& c) { return GenConfig{c.max_steps, PkSource::kPosteriorMean}; }

void write_table2(const PipelineConfig& c, const std::vector<EvalReport>& ranked) {
  write_text(artifact_path(c, artifact::kTable2), table2_csv(ranked));
  write_text(artifact_path(c, artifact::kTable2Text), table2_text(ranked));
}

}  // namespace

ComputeResult cmd_compute(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  fs::create_directories(config.output_dir);
  const fs::path table_path = artifact_path(config, artifact::kTauTable);
  ComputeResult result;
  TauTable table;
  if (!config.force && tau_table_file_valid(table_path, config.n_max)) {
    table = read_tau_table(table_path);
    log << "compute: reusing " << table_path.string() << " (checksum " << table.checksum() << ")\n";
  } else {
    table = build_tau_table(config.n_max, config.threads);
    write_tau_table(table, table_path);
    result.recomputed = true;
    log << "compute: built tau(1.." << config.n_max << "), checksum " << table.checksum() << '\n';
  }
  result.checksum = table.checksum();
  result.summary = summary_for(table);
  write_text(artifact_path(config, artifact::kTable1), table1_csv(result.summary));
  nlohmann::json summary = result.summary;
  summary["n_max"] = table.n_max();
  summary["checksum"] = table.checksum();
  write_json(artifact_path(config, artifact::kSummary), summary);
  log << table1_csv(result.summary);
  return result;
}

NbPosterior cmd_fit(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  const TauTable table = load_table(config);
  const SplitSpec split = split_for(config, table);
  write_json(artifact_path(config, artifact::kSplit), split);
  log << "fit: split seed=" << split.seed << " n_fit=" << split.n_fit << " n_test=" << split.n_test << '\n';

  const auto fit_rows = make_features(table, split.fit_indices);
  FitConfig fc;
  fc.n_chains = config.chains;
  fc.n_tune = config.tune;
  fc.n_draws = config.draws;
  fc.thin = config.thin;
  fc.target_accept = config.target_accept;
  fc.seed = config.seed;
  fc.enforce_gates = false;
  log << "fit: " << fc.n_chains << " chains, tune=" << fc.n_tune << " draws=" << fc.n_draws << " thin=" << fc.thin
      << " seed=" << fc.seed << '\n';
  NbPosterior posterior = fit_mcmc(fit_rows, fc);
  const std::string report = posterior.diagnostics_report();
  write_text(artifact_path(config, artifact::kDiagnostics), report);
  log << report;

  if (!posterior.failed_gates(fc.max_rhat, fc.min_ess).empty()) {
    write_json(artifact_path(config, artifact::kRejectedPosterior), posterior);
    fs::remove(artifact_path(config, artifact::kPosterior));
    check_diagnostics(posterior, fc.max_rhat, fc.min_ess);
  }
  write_json(artifact_path(config, artifact::kPosterior), posterior);

  // Held-out posterior predictive check.
  const auto test_rows = make_features(table, split.test_indices);
  const auto ppc = posterior_predictive(posterior, split.test_indices, config.ppc_draws, config.seed);
  std::ostringstream os;
  os << "n,tau,draw,tau_ppc\n";
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    for (std::size_t d = 0; d < ppc[i].size(); ++d) {
      os << test_rows[i].n << ',' << test_rows[i].tau << ',' << d << ',' << ppc[i][d] << '\n';
    }
  }
  write_text(artifact_path(config, artifact::kPpc), os.str());
  log << "fit: posterior predictive seed=" << config.seed << '\n';
  return posterior;
}

CalibrateResult cmd_calibrate(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  fs::create_directories(config.output_dir);
  const BlockLengthCounts counts = collect_block_lengths(config.n_max, config.k_max, config.threads);
  const BlockLengthModel global = calibrate(counts, Variant::kGlobal);
  const BlockLengthModel cond = calibrate(counts, Variant::kConditional8);
  const BlockLengthModel geo = BlockLengthModel::geometric(config.k_max);

  write_text(artifact_path(config, artifact::kBlockCounts), block_counts_csv(counts));
  write_json(artifact_path(config, artifact::kModelGeometric), geo);
  write_json(artifact_path(config, artifact::kModelGlobal), global);
  write_json(artifact_path(config, artifact::kModelConditional8), cond);
  write_text(artifact_path(config, artifact::kPkEmpirical), pk_empirical_csv(counts));
  write_calibration_tables(config, global, cond, nullptr);

  log << "calibrate: " << counts.total() << " odd m <= " << config.n_max << ", k_max=" << config.k_max << '\n';
  log << "calibrate: log drift geometric=" << fixed(log_drift(geo), 6) << " global=" << fixed(log_drift(global), 6)
      << " conditional8=" << fixed(log_drift(cond), 6) << '\n';
  return {counts, global, cond};
}

std::vector<EvalReport> cmd_evaluate(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  const fs::path posterior_path = artifact_path(config, artifact::kPosterior);
  require_artifact(posterior_path, "fit");
  const BlockLengthModel global = load_model(config, artifact::kModelGlobal);
  const BlockLengthModel cond = load_model(config, artifact::kModelConditional8);
  const TauTable table = load_table(config);
  const NbPosterior posterior = read_json(posterior_path).get<NbPosterior>();

  const SplitSpec split = split_for(config, table);
  const auto test = make_features(table, split.test_indices);
  const GenConfig gc = gen_config(config);

  std::vector<EvalReport> reports;
  std::vector<std::pair<std::string, std::vector<double>>> samples;
  auto record = [&](EvalReport r, std::vector<double> sample) {
    write_json(artifact_path(config, ("report_" + r.model_id + ".json").c_str()), r);
    log << "evaluate: " << r.model_id << " log_score=" << fixed(r.log_score, 2) << " per_obs="
        << fixed(r.per_obs_log_score, 4) << " w1=" << fixed(r.w1, 3) << " seed=" << r.seed << '\n';
    samples.emplace_back(r.model_id, std::move(sample));
    reports.push_back(std::move(r));
  };

  std::vector<double> sample;
  EvalReport glm = glm_log_score(posterior, test, config.seed, config.threads, "NB2-GLM", &sample);
  record(glm, sample);
  if (config.include_g1) {
    const BlockLengthModel geo = BlockLengthModel::geometric(config.k_max);
    EvalReport r = gen_log_score(geo, test, config.s_mc, config.epsilon, gc, config.seed, config.threads, "G1", &sample);
    record(r, sample);
  }
  EvalReport g2 = gen_log_score(global, test, config.s_mc, config.epsilon, gc, config.seed, config.threads, "G2", &sample);
  record(g2, sample);
  EvalReport g3 = gen_log_score(cond, test, config.s_mc, config.epsilon, gc, config.seed, config.threads, "G3", &sample);
  record(g3, sample);

  const auto ranked = compare(reports);
  write_table2(config, ranked);

  std::ostringstream os;
  os << "n,tau";
  for (const auto& [id, _] : samples) os << ',' << id;
  os << '\n';
  for (std::size_t i = 0; i < test.size(); ++i) {
    os << test[i].n << ',' << test[i].tau;
    for (const auto& [_, s] : samples) os << ',' << static_cast<std::uint64_t>(s[i]);
    os << '\n';
  }
  write_text(artifact_path(config, artifact::kPpcGenerators), os.str());
  log << table2_text(ranked);
  return ranked;
}

TracePair cmd_trace(std::uint64_t n, const PipelineConfig& config, std::ostream& log) {
  config.validate();
  if (n == 0) throw ValidationError("trace: n must be >= 1");
  fs::create_directories(config.output_dir);
  const fs::path model_path = artifact_path(config, artifact::kModelConditional8);
  const BlockLengthModel model = fs::exists(model_path)
                                     ? block_length_model_from_json(read_json(model_path))
                                     : calibrate(collect_block_lengths(config.n_max, config.k_max, config.threads),
                                                 Variant::kConditional8);
  Rng rng = Rng::substream(config.seed, Stream::kTrace, n);
  const TracePair t = trace_compare(n, model, gen_config(config), rng);

  std::ostringstream os;
  os << std::setprecision(17) << "step,log2_deterministic,log2_stochastic\n";
  const std::size_t rows = std::max(t.deterministic.size(), t.stochastic.size());
  for (std::size_t j = 0; j < rows; ++j) {
    os << j + 1 << ',';
    if (j < t.deterministic.size()) os << t.deterministic[j];
    os << ',';
    if (j < t.stochastic.size()) os << t.stochastic[j];
    os << '\n';
  }
  const fs::path out = config.output_dir / ("trace_" + std::to_string(n) + ".csv");
  write_text(out, os.str());
  log << "trace: n=" << n << " deterministic=" << t.deterministic.size() << " stochastic=" << t.stochastic.size()
      << (t.stochastic_absorbed ? "" : " (not absorbed)") << " seed=" << config.seed << " -> " << out.string() << '\n';
  return t;
}

std::vector<fs::path> cmd_report(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  std::vector<fs::path> written;
  bool any = false;

  const fs::path table_path = artifact_path(config, artifact::kTauTable);
  if (fs::exists(table_path)) {
    any = true;
    const TauTable table = read_tau_table(table_path);
    const fs::path p = artifact_path(config, artifact::kTable1);
    write_text(p, table1_csv(summary_for(table)));
    written.push_back(p);
  }

  const fs::path global_path = artifact_path(config, artifact::kModelGlobal);
  const fs::path cond_path = artifact_path(config, artifact::kModelConditional8);
  if (fs::exists(global_path) && fs::exists(cond_path)) {
    any = true;
    write_calibration_tables(config, block_length_model_from_json(read_json(global_path)),
                             block_length_model_from_json(read_json(cond_path)), &written);
  }

  std::vector<EvalReport> reports;
  for (const char* id : {"NB2-GLM", "G1", "G2", "G3"}) {
    const fs::path p = config.output_dir / (std::string("report_") + id + ".json");
    if (fs::exists(p)) reports.push_back(read_json(p).get<EvalReport>());
  }
  if (!reports.empty()) {
    any = true;
    write_table2(config, compare(reports));
    written.push_back(artifact_path(config, artifact::kTable2));
    written.push_back(artifact_path(config, artifact::kTable2Text));
  }
  if (!any) throw MissingArtifactError("report: no artifacts found in " + config.output_dir.string());
  for (const auto& p : written) log << "report: wrote " << p.string() << '\n';
  return written;
}

}  // namespace collatz
