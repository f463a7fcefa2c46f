#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tse/data.hpp"
#include "tse/estimation.hpp"
#include "tse/eval.hpp"
#include "tse/gan.hpp"
#include "tse/gradcheck.hpp"

namespace tse {

// The declarative configuration document: one JSON file with sections
// mirroring the module configs. Unknown sections or keys are rejected so
// typos fail loudly; flags override file values.
struct RunConfig {
  CtmConfig ctm = CtmConfig::i5_preset();
  CorpusConfig corpus;
  GanConfig gan;
  EstimateConfig estimate;
  CorruptionSpec corruption;
  std::vector<std::uint64_t> ablation_seeds = {1, 2, 3, 4, 5};
  std::size_t ablation_max_records = 0;

  RunConfig();
};

RunConfig load_run_config(const std::string& path);
RunConfig default_run_config();

// FNV-1a over the canonical JSON dump; identical provenance implies
// byte-identical outputs.
std::string config_hash(const RunConfig& config);

std::vector<std::string> provenance_lines(const RunConfig& config,
                                          const std::string& command);

struct CommonOptions {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;  // overrides every section seed
  bool force = false;
};

RunConfig resolve_config(const CommonOptions& common);

// Exit codes: 0 success, 1 validation error, 2 divergence, 3 I/O.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitDivergence = 2;
inline constexpr int kExitIo = 3;

int cmd_simulate(const CommonOptions& common, const std::string& out_dir);

struct TrainOptions {
  std::string corpus_dir;
  std::string out_checkpoint;
  std::string history_csv;  // empty = alongside checkpoint
  std::optional<std::string> resume_from;
  std::optional<std::size_t> epochs_override;
};
int cmd_train(const CommonOptions& common, const TrainOptions& opts);

struct EstimateOptions {
  std::string checkpoint_path;
  std::string input_csv;
  std::string out_csv;
  std::string trace_csv;  // empty = no trace written
  std::optional<std::string> mask_pattern;  // random_entries|detector_outage|future_block
  std::optional<double> rate;
  std::optional<std::vector<std::size_t>> columns;
  std::optional<std::size_t> t0;
  std::optional<double> lambda_p;
  std::optional<double> lambda_c;
};
int cmd_estimate(const CommonOptions& common, const EstimateOptions& opts);

struct EvaluateOptions {
  std::string truth_csv;
  std::string estimate_csv;
  std::optional<std::string> mask_pattern;
  std::optional<double> rate;
  std::optional<std::vector<std::size_t>> columns;
  std::optional<std::size_t> t0;
};
int cmd_evaluate(const CommonOptions& common, const EvaluateOptions& opts);

struct AblateOptions {
  std::string corpus_dir;
  std::string checkpoint_path;
  std::string out_csv;
  std::string plot_dir;  // empty = no plot data
  bool assert_ordering = false;
};
int cmd_ablate(const CommonOptions& common, const AblateOptions& opts);

struct GradcheckOptions {
  std::vector<std::size_t> hidden_sizes;  // empty = defaults
  std::vector<std::size_t> input_sizes;
  std::vector<std::size_t> step_counts;
  std::size_t seeds_per_combo = 0;  // 0 = default
  bool corrupt_gradient = false;
};
int cmd_gradcheck(const CommonOptions& common, const GradcheckOptions& opts);

}  // namespace tse
