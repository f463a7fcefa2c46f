#include "tse/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tse/errors.hpp"
#include "tse/rng.hpp"
#include "tse/text.hpp"

namespace tse {

namespace fs = std::filesystem;
using nlohmann::json;

RunConfig::RunConfig() {
  corpus.base = ctm;
  corpus.records = 2000;
  corpus.seed = 42;
  gan.seed = 1;
}

RunConfig default_run_config() { return RunConfig{}; }

namespace {

void reject_unknown_keys(const json& section, const std::string& name,
                         std::initializer_list<const char*> known) {
  for (const auto& item : section.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) {
          return item.key() == k;
        }) == known.end()) {
      throw ValidationError("config: unknown key '" + item.key() + "' in section '" +
                            name + "'");
    }
  }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_ctm(const json& j, CtmConfig& ctm) {
  reject_unknown_keys(j, "ctm",
                      {"preset", "m", "n", "dt_hours", "cell_lengths_km",
                       "free_flow_speed_kmh", "backward_wave_speed_kmh",
                       "jam_density_veh_km", "capacity_veh_h", "noise_std_veh_h",
                       "substeps"});
  if (j.contains("preset")) {
    const std::string preset = j.at("preset").get<std::string>();
    if (preset == "i5") {
      ctm = CtmConfig::i5_preset();
    } else if (preset == "ca52") {
      ctm = CtmConfig::ca52_preset();
    } else {
      throw ValidationError("config: unknown ctm preset '" + preset + "'");
    }
  }
  maybe(j, "m", ctm.m);
  maybe(j, "n", ctm.n);
  maybe(j, "dt_hours", ctm.dt_hours);
  maybe(j, "cell_lengths_km", ctm.cell_lengths_km);
  maybe(j, "free_flow_speed_kmh", ctm.free_flow_speed_kmh);
  maybe(j, "backward_wave_speed_kmh", ctm.backward_wave_speed_kmh);
  maybe(j, "jam_density_veh_km", ctm.jam_density_veh_km);
  maybe(j, "capacity_veh_h", ctm.capacity_veh_h);
  maybe(j, "noise_std_veh_h", ctm.noise_std_veh_h);
  maybe(j, "substeps", ctm.substeps);
  if (ctm.cell_lengths_km.size() != ctm.m) {
    // Geometry resized without explicit lengths keeps the preset cell size.
    const double len = ctm.cell_lengths_km.empty() ? 0.5 : ctm.cell_lengths_km.front();
    ctm.cell_lengths_km.assign(ctm.m, len);
  }
}

void parse_corruption(const json& j, CorruptionSpec& spec) {
  reject_unknown_keys(j, "corruption", {"pattern", "rate", "columns", "t0", "seed"});
  if (j.contains("pattern")) {
    const std::string pattern = j.at("pattern").get<std::string>();
    if (pattern == "random_entries") {
      spec.pattern = CorruptionSpec::Pattern::random_entries;
    } else if (pattern == "detector_outage") {
      spec.pattern = CorruptionSpec::Pattern::detector_outage;
    } else if (pattern == "future_block") {
      spec.pattern = CorruptionSpec::Pattern::future_block;
    } else {
      throw ValidationError("config: unknown corruption pattern '" + pattern + "'");
    }
  }
  maybe(j, "rate", spec.rate);
  maybe(j, "columns", spec.columns);
  maybe(j, "t0", spec.t0);
  maybe(j, "seed", spec.seed);
}

json config_to_json(const RunConfig& c) {
  json j;
  j["ctm"] = {{"m", c.ctm.m},
              {"n", c.ctm.n},
              {"dt_hours", c.ctm.dt_hours},
              {"cell_lengths_km", c.ctm.cell_lengths_km},
              {"free_flow_speed_kmh", c.ctm.free_flow_speed_kmh},
              {"backward_wave_speed_kmh", c.ctm.backward_wave_speed_kmh},
              {"jam_density_veh_km", c.ctm.jam_density_veh_km},
              {"capacity_veh_h", c.ctm.capacity_veh_h},
              {"noise_std_veh_h", c.ctm.noise_std_veh_h},
              {"substeps", c.ctm.substeps}};
  j["corpus"] = {{"records", c.corpus.records},
                 {"train_fraction", c.corpus.train_fraction},
                 {"incident_probability", c.corpus.incident_probability},
                 {"seed", c.corpus.seed}};
  j["gan"] = {{"n_steps", c.gan.n_steps},
              {"feature_dim", c.gan.feature_dim},
              {"hidden_size", c.gan.hidden_size},
              {"latent_dim", c.gan.latent_dim},
              {"lr_d", c.gan.lr_d},
              {"lr_g", c.gan.lr_g},
              {"d_steps_per_g_step", c.gan.d_steps_per_g_step},
              {"minibatch_size", c.gan.minibatch_size},
              {"epochs", c.gan.epochs},
              {"seed", c.gan.seed},
              {"non_saturating_g_loss", c.gan.non_saturating_g_loss},
              {"grad_clip", c.gan.grad_clip}};
  j["estimate"] = {{"iterations", c.estimate.iterations},
                   {"step_size", c.estimate.step_size},
                   {"restarts", c.estimate.restarts},
                   {"seed", c.estimate.seed}};
  j["weights"] = {{"lambda_p", c.estimate.weights.lambda_p},
                  {"lambda_c", c.estimate.weights.lambda_c}};
  j["corruption"] = {{"pattern", static_cast<int>(c.corruption.pattern)},
                     {"rate", c.corruption.rate},
                     {"columns", c.corruption.columns},
                     {"t0", c.corruption.t0},
                     {"seed", c.corruption.seed}};
  j["ablation"] = {{"seeds", c.ablation_seeds}, {"max_records", c.ablation_max_records}};
  return j;
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config '" + path + "'");
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw IoError("config '" + path + "' is not valid JSON: " + e.what());
  }

  RunConfig config;
  try {
    reject_unknown_keys(doc, "(top level)", {"ctm", "corpus", "gan", "estimate",
                                             "weights", "corruption", "ablation"});
    if (doc.contains("ctm")) parse_ctm(doc.at("ctm"), config.ctm);
    if (doc.contains("corpus")) {
      const json& j = doc.at("corpus");
      reject_unknown_keys(j, "corpus",
                          {"records", "train_fraction", "incident_probability", "seed"});
      maybe(j, "records", config.corpus.records);
      maybe(j, "train_fraction", config.corpus.train_fraction);
      maybe(j, "incident_probability", config.corpus.incident_probability);
      maybe(j, "seed", config.corpus.seed);
    }
    if (doc.contains("gan")) {
      const json& j = doc.at("gan");
      reject_unknown_keys(j, "gan",
                          {"n_steps", "feature_dim", "hidden_size", "latent_dim", "lr_d",
                           "lr_g", "d_steps_per_g_step", "minibatch_size", "epochs",
                           "seed", "non_saturating_g_loss", "grad_clip"});
      maybe(j, "n_steps", config.gan.n_steps);
      maybe(j, "feature_dim", config.gan.feature_dim);
      maybe(j, "hidden_size", config.gan.hidden_size);
      maybe(j, "latent_dim", config.gan.latent_dim);
      maybe(j, "lr_d", config.gan.lr_d);
      maybe(j, "lr_g", config.gan.lr_g);
      maybe(j, "d_steps_per_g_step", config.gan.d_steps_per_g_step);
      maybe(j, "minibatch_size", config.gan.minibatch_size);
      maybe(j, "epochs", config.gan.epochs);
      maybe(j, "seed", config.gan.seed);
      maybe(j, "non_saturating_g_loss", config.gan.non_saturating_g_loss);
      maybe(j, "grad_clip", config.gan.grad_clip);
    }
    if (doc.contains("estimate")) {
      const json& j = doc.at("estimate");
      reject_unknown_keys(j, "estimate", {"iterations", "step_size", "restarts", "seed"});
      maybe(j, "iterations", config.estimate.iterations);
      maybe(j, "step_size", config.estimate.step_size);
      maybe(j, "restarts", config.estimate.restarts);
      maybe(j, "seed", config.estimate.seed);
    }
    if (doc.contains("weights")) {
      const json& j = doc.at("weights");
      reject_unknown_keys(j, "weights", {"lambda_p", "lambda_c"});
      maybe(j, "lambda_p", config.estimate.weights.lambda_p);
      maybe(j, "lambda_c", config.estimate.weights.lambda_c);
    }
    if (doc.contains("corruption")) parse_corruption(doc.at("corruption"), config.corruption);
    if (doc.contains("ablation")) {
      const json& j = doc.at("ablation");
      reject_unknown_keys(j, "ablation", {"seeds", "max_records"});
      maybe(j, "seeds", config.ablation_seeds);
      maybe(j, "max_records", config.ablation_max_records);
    }
  } catch (const json::exception& e) {
    throw ValidationError("config '" + path + "': " + e.what());
  }

  config.corpus.base = config.ctm;
  // Keep the network shape consistent with the geometry unless the file says
  // otherwise.
  if (!doc.contains("gan") || !doc.at("gan").contains("feature_dim")) {
    config.gan.feature_dim = 2 * config.ctm.m + 1;
  }
  if (!doc.contains("gan") || !doc.at("gan").contains("n_steps")) {
    config.gan.n_steps = config.ctm.n;
  }

  config.gan.validate();
  config.estimate.validate();
  return config;
}

std::string config_hash(const RunConfig& config) {
  const std::string dump = config_to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> provenance_lines(const RunConfig& config,
                                          const std::string& command) {
  std::string seeds = "corpus=" + std::to_string(config.corpus.seed) +
                      " gan=" + std::to_string(config.gan.seed) +
                      " estimate=" + std::to_string(config.estimate.seed) +
                      " corruption=" + std::to_string(config.corruption.seed);
  return {"provenance: command=" + command + " config_hash=" + config_hash(config),
          "provenance: " + seeds,
          "provenance: lambda_p=" + format_double(config.estimate.weights.lambda_p) +
              " lambda_c=" + format_double(config.estimate.weights.lambda_c) +
              " format_version=1"};
}

RunConfig resolve_config(const CommonOptions& common) {
  RunConfig config =
      common.config_path ? load_run_config(*common.config_path) : default_run_config();
  if (common.seed) {
    config.corpus.seed = *common.seed;
    config.gan.seed = *common.seed;
    config.estimate.seed = *common.seed;
    config.corruption.seed = *common.seed;
  }
  return config;
}

namespace {

void refuse_overwrite(const std::string& path, bool force) {
  if (!force && fs::exists(path)) {
    throw IoError("output '" + path + "' exists; pass --force to overwrite");
  }
}

void echo_provenance(const std::vector<std::string>& lines) {
  for (const auto& line : lines) std::printf("%s\n", line.c_str());
}

double max_conservation_residual(const TrafficStateMatrix& ts) {
  double worst = 0.0;
  for (std::size_t t = 0; t + 1 < ts.n(); ++t) {
    for (std::size_t s = 0; s < ts.m(); ++s) {
      const double r = ts.density(t + 1, s) - ts.density(t, s) -
                       ts.dt_hours / ts.cell_lengths_km[s] *
                           (ts.flow(t, s) - ts.flow(t, s + 1));
      const double scale = std::max(1.0, std::abs(ts.density(t + 1, s)));
      worst = std::max(worst, std::abs(r) / scale);
    }
  }
  return worst;
}

CorruptionSpec corruption_from_flags(const RunConfig& config,
                                     const std::optional<std::string>& pattern,
                                     const std::optional<double>& rate,
                                     const std::optional<std::vector<std::size_t>>& columns,
                                     const std::optional<std::size_t>& t0) {
  CorruptionSpec spec = config.corruption;
  if (pattern) {
    if (*pattern == "random_entries") {
      spec.pattern = CorruptionSpec::Pattern::random_entries;
    } else if (*pattern == "detector_outage") {
      spec.pattern = CorruptionSpec::Pattern::detector_outage;
    } else if (*pattern == "future_block") {
      spec.pattern = CorruptionSpec::Pattern::future_block;
    } else {
      throw ValidationError("unknown mask pattern '" + *pattern + "'");
    }
  }
  if (rate) spec.rate = *rate;
  if (columns) spec.columns = *columns;
  if (t0) spec.t0 = *t0;
  return spec;
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history,
                       const std::vector<std::string>& provenance) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& line : provenance) f << "# " << line << "\n";
  f << "epoch,d_loss,g_loss,d_accuracy\n";
  for (const auto& row : history) {
    f << row.epoch << "," << format_double(row.d_loss) << "," << format_double(row.g_loss)
      << "," << format_double(row.d_accuracy) << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace

int cmd_simulate(const CommonOptions& common, const std::string& out_dir) {
  RunConfig config = resolve_config(common);
  config.ctm.validate();

  refuse_overwrite((fs::path(out_dir) / "manifest.csv").string(), common.force);
  const Corpus corpus = make_corpus(config.corpus);
  save_corpus(corpus, out_dir, provenance_lines(config, "simulate"));

  double worst = 0.0;
  for (const auto& rec : corpus.records) {
    worst = std::max(worst, max_conservation_residual(rec.ts));
  }
  echo_provenance(provenance_lines(config, "simulate"));
  std::printf("wrote %zu records to %s\n", corpus.records.size(), out_dir.c_str());
  std::printf("max conservation residual (relative): %.3e\n", worst);
  return kExitOk;
}

int cmd_train(const CommonOptions& common, const TrainOptions& opts) {
  RunConfig config = resolve_config(common);
  const Corpus corpus = load_corpus(opts.corpus_dir);

  Checkpoint ckpt;
  std::size_t start_epoch = 0;
  if (opts.resume_from) {
    ckpt = load_checkpoint(*opts.resume_from);
    start_epoch = ckpt.epochs_completed;
    config.gan = ckpt.config;  // shapes and seeds come from the checkpoint
    if (opts.epochs_override) config.gan.epochs = *opts.epochs_override;
  } else {
    if (opts.epochs_override) config.gan.epochs = *opts.epochs_override;
    ckpt.config = config.gan;
    ckpt.scaler = fit_scaler(corpus);
    ckpt.seed = config.gan.seed;
    Rng rng(hash_combine(config.gan.seed, 0x1217));
    ckpt.model = init_gan(config.gan, rng);
  }

  std::vector<Matrix> dataset;
  for (const auto* rec : corpus.split(true)) {
    dataset.push_back(to_features(rec->ts, ckpt.scaler).features);
  }

  const TrainResult result = train(ckpt.model, dataset, config.gan, start_epoch);
  ckpt.epochs_completed = config.gan.epochs;

  refuse_overwrite(opts.out_checkpoint, common.force);
  save_checkpoint(ckpt, opts.out_checkpoint);

  const std::string history_path =
      opts.history_csv.empty() ? opts.out_checkpoint + ".history.csv" : opts.history_csv;
  write_history_csv(history_path, result.history, provenance_lines(config, "train"));

  echo_provenance(provenance_lines(config, "train"));
  std::printf("trained epochs %zu..%zu on %zu records\n", start_epoch + 1,
              config.gan.epochs, dataset.size());
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    std::printf("final epoch: d_loss=%.4f g_loss=%.4f d_accuracy=%.3f\n", last.d_loss,
                last.g_loss, last.d_accuracy);
  }
  std::printf("checkpoint: %s\n", opts.out_checkpoint.c_str());
  return kExitOk;
}

int cmd_estimate(const CommonOptions& common, const EstimateOptions& opts) {
  RunConfig config = resolve_config(common);
  if (opts.lambda_p) config.estimate.weights.lambda_p = *opts.lambda_p;
  if (opts.lambda_c) config.estimate.weights.lambda_c = *opts.lambda_c;

  const Checkpoint ckpt = load_checkpoint(opts.checkpoint_path);
  const TrafficStateMatrix input = load_matrix_csv(opts.input_csv);
  if (input.n() != ckpt.config.n_steps || 2 * input.m() + 1 != ckpt.config.feature_dim) {
    throw ValidationError("estimate: input matrix is " + std::to_string(input.n()) + "x" +
                          std::to_string(2 * input.m() + 1) +
                          " features but the checkpoint expects " +
                          std::to_string(ckpt.config.n_steps) + "x" +
                          std::to_string(ckpt.config.feature_dim));
  }

  const FeatureSequence fs = to_features(input, ckpt.scaler);
  const CorruptionSpec spec = corruption_from_flags(config, opts.mask_pattern, opts.rate,
                                                    opts.columns, opts.t0);
  const Corrupted corrupted = corrupt(fs, spec);

  const EstimateResult result = estimate(ckpt, corrupted.y, corrupted.mask,
                                         config.estimate, input.geometry());

  // Observed entries come from the input matrix itself so they survive the
  // normalization round trip bit-exactly.
  const std::size_t m = input.m();
  FeatureSequence gen_fs{result.gz_hat, ckpt.scaler};
  const TrafficStateMatrix generated = from_features(gen_fs, input.geometry());
  TrafficStateMatrix output = input;
  for (std::size_t t = 0; t < input.n(); ++t) {
    for (std::size_t l = 0; l <= m; ++l) {
      if (!corrupted.mask.observed(t, l)) output.flow(t, l) = generated.flow(t, l);
    }
    for (std::size_t s = 0; s < m; ++s) {
      if (!corrupted.mask.observed(t, m + 1 + s)) {
        output.density(t, s) = generated.density(t, s);
      }
    }
  }

  refuse_overwrite(opts.out_csv, common.force);
  save_matrix_csv(output, opts.out_csv);

  if (!opts.trace_csv.empty()) {
    std::ofstream f(opts.trace_csv, std::ios::binary);
    if (!f) throw IoError("cannot open '" + opts.trace_csv + "' for writing");
    for (const auto& line : provenance_lines(config, "estimate")) f << "# " << line << "\n";
    f << "evaluation,best_total_loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i) {
      f << i << "," << format_double(result.loss_trace[i]) << "\n";
    }
  }

  echo_provenance(provenance_lines(config, "estimate"));
  std::printf("reconstruction written to %s (final loss %.6f)\n", opts.out_csv.c_str(),
              result.loss_trace.empty() ? 0.0 : result.loss_trace.back());
  return kExitOk;
}

int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& opts) {
  RunConfig config = resolve_config(common);
  const TrafficStateMatrix truth = load_matrix_csv(opts.truth_csv);
  const TrafficStateMatrix estimated = load_matrix_csv(opts.estimate_csv);
  if (truth.n() != estimated.n() || truth.m() != estimated.m()) {
    throw ValidationError("evaluate: truth and estimate shapes differ");
  }

  const CorruptionSpec spec = corruption_from_flags(config, opts.mask_pattern, opts.rate,
                                                    opts.columns, opts.t0);
  const FeatureSequence fs = to_features(truth);
  const Corrupted corrupted = corrupt(fs, spec);

  const std::size_t m = truth.m();
  const std::size_t n = truth.n();
  Matrix truth_feat(n, 2 * m + 1), est_feat(n, 2 * m + 1);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; l <= m; ++l) {
      truth_feat(t, l) = truth.flow(t, l);
      est_feat(t, l) = estimated.flow(t, l);
    }
    for (std::size_t s = 0; s < m; ++s) {
      truth_feat(t, m + 1 + s) = truth.density(t, s);
      est_feat(t, m + 1 + s) = estimated.density(t, s);
    }
  }

  echo_provenance(provenance_lines(config, "evaluate"));
  for (const char* target : {"flow", "density"}) {
    Mask target_mask = corrupted.mask;
    // Restrict the evaluation set to the target's columns.
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t j = 0; j < 2 * m + 1; ++j) {
        const bool is_flow = j <= m;
        if (is_flow != (std::string(target) == "flow")) target_mask.M(t, j) = 1.0;
      }
    }
    std::size_t excluded = 0;
    const double mape_v = mape(est_feat, truth_feat, target_mask, &excluded);
    const double mse_v = mse(est_feat, truth_feat, target_mask);
    std::printf("%s: mape_pct=%s mse=%s excluded_zero_truth=%zu\n", target,
                format_double(mape_v).c_str(), format_double(mse_v).c_str(), excluded);
  }
  return kExitOk;
}

int cmd_ablate(const CommonOptions& common, const AblateOptions& opts) {
  RunConfig config = resolve_config(common);
  const Corpus corpus = load_corpus(opts.corpus_dir);
  const Checkpoint ckpt = load_checkpoint(opts.checkpoint_path);

  AblationConfig acfg;
  acfg.estimate = config.estimate;
  acfg.corruption = config.corruption;
  acfg.seeds = config.ablation_seeds;
  acfg.max_records = config.ablation_max_records;

  const AblationResult result = run_ablation(corpus, ckpt, acfg);
  refuse_overwrite(opts.out_csv, common.force);
  write_ablation_csv(result, opts.out_csv, provenance_lines(config, "ablate"));

  if (!opts.plot_dir.empty()) {
    fs::create_directories(opts.plot_dir);
    auto validation = corpus.split(false);
    const std::size_t limit = std::min<std::size_t>(validation.size(), 3);
    for (std::size_t ri = 0; ri < limit; ++ri) {
      const CorpusRecord& record = *validation[ri];
      const FeatureSequence fsq = to_features(record.ts, ckpt.scaler);
      CorruptionSpec spec = acfg.corruption;
      spec.seed = hash_combine(acfg.seeds.front(), ri + 1);
      const Corrupted corrupted = corrupt(fsq, spec);
      EstimateConfig est_cfg = acfg.estimate;
      est_cfg.seed = hash_combine(acfg.seeds.front(), ri + 1);
      const EstimateResult er =
          estimate(ckpt, corrupted.y, corrupted.mask, est_cfg, record.ts.geometry());
      const Matrix recon = reconstruct(corrupted.y, corrupted.mask, er.gz_hat);
      const Matrix filled =
          baseline_fill(corrupted.y, corrupted.mask, FillMethod::column_mean);

      PlotRecord plot;
      plot.record_id = record.id;
      plot.mask = corrupted.mask;
      plot.truth_phys = denormalize_linear(fsq.features, ckpt.scaler);
      plot.estimate_phys = denormalize_linear(recon, ckpt.scaler);
      plot.baseline_phys = denormalize_linear(filled, ckpt.scaler);
      write_plot_csv(plot, record.ts.m(),
                     (fs::path(opts.plot_dir) / ("record_" + record.id + ".csv")).string());
    }
  }

  echo_provenance(provenance_lines(config, "ablate"));
  for (const auto& row : result.rows) {
    std::printf("%-24s %-8s mape_pct=%-10.4f mse=%.6f\n", row.variant.c_str(),
                row.target.c_str(), row.mape_pct, row.mse);
  }

  if (opts.assert_ordering) {
    for (const char* target : {"flow", "density"}) {
      const double full = result.row("full", target).mse;
      const double worst = result.row("no_p_no_c", target).mse;
      for (const char* variant : {"no_p_no_c", "no_p", "no_c"}) {
        if (result.row(variant, target).mse < full) {
          throw ValidationError(std::string("ablation ordering violated: ") + variant +
                                " beats full on " + target + " mse");
        }
        if (result.row(variant, target).mse > worst) {
          throw ValidationError(std::string("ablation ordering violated: ") + variant +
                                " is worse than no_p_no_c on " + target + " mse");
        }
      }
    }
    std::printf("ablation ordering holds: full best, no_p_no_c worst (mse)\n");
  }
  return kExitOk;
}

int cmd_gradcheck(const CommonOptions& common, const GradcheckOptions& opts) {
  GradCheckOptions gopts;
  if (!opts.hidden_sizes.empty()) gopts.hidden_sizes = opts.hidden_sizes;
  if (!opts.input_sizes.empty()) gopts.input_sizes = opts.input_sizes;
  if (!opts.step_counts.empty()) gopts.step_counts = opts.step_counts;
  if (opts.seeds_per_combo > 0) gopts.seeds_per_combo = opts.seeds_per_combo;
  if (common.seed) gopts.seed = *common.seed;
  gopts.corrupt_gradient = opts.corrupt_gradient;

  const GradCheckReport report = run_gradcheck(gopts);
  const double tolerance = 1e-4;
  print_gradcheck_report(report, tolerance);
  return report.pass(tolerance) ? kExitOk : kExitValidation;
}

}  // namespace tse
