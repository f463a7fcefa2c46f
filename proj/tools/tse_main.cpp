#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tse/cli.hpp"
#include "tse/errors.hpp"

namespace {

void add_common(CLI::App* cmd, tse::CommonOptions& common, std::string& config_path,
                unsigned long long& seed) {
  cmd->add_option("--config", config_path, "Configuration file (JSON)");
  cmd->add_option("--seed", seed, "Override every section seed");
  cmd->add_flag("--force", common.force, "Overwrite existing outputs");
}

void finish_common(const CLI::App* cmd, tse::CommonOptions& common,
                   const std::string& config_path, unsigned long long seed) {
  if (cmd->count("--config")) common.config_path = config_path;
  if (cmd->count("--seed")) common.seed = seed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial-temporal traffic state estimation with adversarial LSTM networks"};
  app.require_subcommand(1);

  // simulate
  tse::CommonOptions sim_common;
  std::string sim_config, sim_out = "corpus";
  unsigned long long sim_seed = 0;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic corpus");
  add_common(sim, sim_common, sim_config, sim_seed);
  sim->add_option("--out", sim_out, "Output corpus directory");

  // train
  tse::CommonOptions train_common;
  std::string train_config;
  unsigned long long train_seed = 0;
  tse::TrainOptions train_opts;
  std::string resume_path;
  unsigned long long epochs_override = 0;
  auto* train = app.add_subcommand("train", "Train the adversarial networks");
  add_common(train, train_common, train_config, train_seed);
  train->add_option("--corpus", train_opts.corpus_dir, "Corpus directory")->required();
  train->add_option("--out", train_opts.out_checkpoint, "Checkpoint path")->required();
  train->add_option("--history", train_opts.history_csv, "History CSV path");
  train->add_option("--resume", resume_path, "Resume from a checkpoint");
  train->add_option("--epochs", epochs_override, "Override epoch count");

  // estimate
  tse::CommonOptions est_common;
  std::string est_config;
  unsigned long long est_seed = 0;
  tse::EstimateOptions est_opts;
  std::string mask_pattern;
  double rate = 0.0;
  std::vector<std::size_t> columns;
  unsigned long long t0 = 0;
  double lambda_p = 0.0, lambda_c = 0.0;
  auto* est = app.add_subcommand("estimate", "Reconstruct missing values in a matrix");
  add_common(est, est_common, est_config, est_seed);
  est->add_option("--checkpoint", est_opts.checkpoint_path, "Trained checkpoint")->required();
  est->add_option("--input", est_opts.input_csv, "Input matrix CSV")->required();
  est->add_option("--out", est_opts.out_csv, "Reconstruction CSV")->required();
  est->add_option("--trace", est_opts.trace_csv, "Loss trace CSV");
  est->add_option("--mask-pattern", mask_pattern,
                  "random_entries|detector_outage|future_block");
  est->add_option("--rate", rate, "Masking rate for random_entries");
  est->add_option("--columns", columns, "Feature columns for detector_outage");
  est->add_option("--t0", t0, "First masked row for future_block");
  est->add_option("--lambda-p", lambda_p, "Perceptual loss weight");
  est->add_option("--lambda-c", lambda_c, "Conservative loss weight");

  // evaluate
  tse::CommonOptions eval_common;
  std::string eval_config;
  unsigned long long eval_seed = 0;
  tse::EvaluateOptions eval_opts;
  std::string eval_pattern;
  double eval_rate = 0.0;
  std::vector<std::size_t> eval_columns;
  unsigned long long eval_t0 = 0;
  auto* eval = app.add_subcommand("evaluate", "Score a reconstruction against truth");
  add_common(eval, eval_common, eval_config, eval_seed);
  eval->add_option("--truth", eval_opts.truth_csv, "Ground truth CSV")->required();
  eval->add_option("--estimate", eval_opts.estimate_csv, "Estimate CSV")->required();
  eval->add_option("--mask-pattern", eval_pattern,
                   "random_entries|detector_outage|future_block");
  eval->add_option("--rate", eval_rate, "Masking rate");
  eval->add_option("--columns", eval_columns, "Masked feature columns");
  eval->add_option("--t0", eval_t0, "First masked row");

  // ablate
  tse::CommonOptions abl_common;
  std::string abl_config;
  unsigned long long abl_seed = 0;
  tse::AblateOptions abl_opts;
  auto* abl = app.add_subcommand("ablate", "Run the four-variant ablation");
  add_common(abl, abl_common, abl_config, abl_seed);
  abl->add_option("--corpus", abl_opts.corpus_dir, "Corpus directory")->required();
  abl->add_option("--checkpoint", abl_opts.checkpoint_path, "Trained checkpoint")->required();
  abl->add_option("--out", abl_opts.out_csv, "Ablation table CSV")->required();
  abl->add_option("--plot-data", abl_opts.plot_dir, "Directory for per-record plot CSVs");
  abl->add_flag("--assert-ordering", abl_opts.assert_ordering,
                "Fail unless full is best and no_p_no_c worst by MSE");

  // gradcheck
  tse::CommonOptions gc_common;
  std::string gc_config;
  unsigned long long gc_seed = 0;
  tse::GradcheckOptions gc_opts;
  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  add_common(gc, gc_common, gc_config, gc_seed);
  gc->add_option("--hidden", gc_opts.hidden_sizes, "Hidden sizes to sweep");
  gc->add_option("--input", gc_opts.input_sizes, "Input sizes to sweep");
  gc->add_option("--steps", gc_opts.step_counts, "Sequence lengths to sweep");
  gc->add_option("--seeds", gc_opts.seeds_per_combo, "Seeds per combination");
  gc->add_flag("--corrupt-gradient", gc_opts.corrupt_gradient,
               "Test hook: corrupt one gradient entry (must fail)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      finish_common(sim, sim_common, sim_config, sim_seed);
      return tse::cmd_simulate(sim_common, sim_out);
    }
    if (train->parsed()) {
      finish_common(train, train_common, train_config, train_seed);
      if (train->count("--resume")) train_opts.resume_from = resume_path;
      if (train->count("--epochs")) train_opts.epochs_override = epochs_override;
      return tse::cmd_train(train_common, train_opts);
    }
    if (est->parsed()) {
      finish_common(est, est_common, est_config, est_seed);
      if (est->count("--mask-pattern")) est_opts.mask_pattern = mask_pattern;
      if (est->count("--rate")) est_opts.rate = rate;
      if (est->count("--columns")) est_opts.columns = columns;
      if (est->count("--t0")) est_opts.t0 = t0;
      if (est->count("--lambda-p")) est_opts.lambda_p = lambda_p;
      if (est->count("--lambda-c")) est_opts.lambda_c = lambda_c;
      return tse::cmd_estimate(est_common, est_opts);
    }
    if (eval->parsed()) {
      finish_common(eval, eval_common, eval_config, eval_seed);
      if (eval->count("--mask-pattern")) eval_opts.mask_pattern = eval_pattern;
      if (eval->count("--rate")) eval_opts.rate = eval_rate;
      if (eval->count("--columns")) eval_opts.columns = eval_columns;
      if (eval->count("--t0")) eval_opts.t0 = eval_t0;
      return tse::cmd_evaluate(eval_common, eval_opts);
    }
    if (abl->parsed()) {
      finish_common(abl, abl_common, abl_config, abl_seed);
      return tse::cmd_ablate(abl_common, abl_opts);
    }
    if (gc->parsed()) {
      finish_common(gc, gc_common, gc_config, gc_seed);
      return tse::cmd_gradcheck(gc_common, gc_opts);
    }
  } catch (const tse::ValidationError& e) {
    std::fprintf(stderr, "validation error: %s\n", e.what());
    return tse::kExitValidation;
  } catch (const tse::DivergenceError& e) {
    std::fprintf(stderr, "divergence: %s\n", e.what());
    return tse::kExitDivergence;
  } catch (const tse::IoError& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return tse::kExitIo;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return tse::kExitValidation;
  }
  return tse::kExitOk;
}
