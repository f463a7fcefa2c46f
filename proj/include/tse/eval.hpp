#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/data.hpp"
#include "tse/estimation.hpp"
#include "tse/gan.hpp"
#include "tse/mask.hpp"
#include "tse/tensor.hpp"

namespace tse {

// Metrics are evaluated over masked-out (M=0) entries only, in physical
// units. mape skips entries with |truth| <= 1e-6 and reports how many via
// *excluded; mse uses every masked-out entry.
double mape(const Matrix& estimated, const Matrix& truth, const Mask& mask,
            std::size_t* excluded = nullptr);
double mse(const Matrix& estimated, const Matrix& truth, const Mask& mask);

enum class FillMethod { column_mean, linear_interp, locf };

// Fills masked entries from observed entries of the same column (global
// observed mean when a column has none); observed entries pass through.
Matrix baseline_fill(const Matrix& y, const Mask& mask, FillMethod method);

// The four loss-weight configurations evaluated against each other, plus the
// naive fills they are compared with.
enum class Variant { no_p_no_c, no_p, no_c, full };
const char* variant_name(Variant v);

struct AblationRow {
  std::string variant;  // variant or baseline name
  std::string target;   // "flow" or "density"
  double mape_pct = 0.0;
  double mse = 0.0;
};

struct AblationConfig {
  EstimateConfig estimate;      // weights = the full variant's lambdas
  CorruptionSpec corruption;    // per-record seed derived from (seed, record)
  std::vector<std::uint64_t> seeds;
  std::size_t max_records = 0;  // 0 = every validation record
};

struct AblationResult {
  std::vector<AblationRow> rows;  // medians across seeds
  std::vector<std::uint64_t> seeds;
  std::uint64_t corpus_seed = 0;

  const AblationRow& row(const std::string& variant, const std::string& target) const;
};

// Runs the full ablation: per seed and validation record, one (y, mask)
// corruption shared by all four variants and the baselines; per-seed metrics
// pool masked entries across records, then per-row medians are taken over
// seeds. Deterministic given (corpus, checkpoint, config).
AblationResult run_ablation(const Corpus& corpus, const Checkpoint& checkpoint,
                            const AblationConfig& config);

// One row per (variant, target): variant,target,mape_pct,mse,seeds,corpus_id.
void write_ablation_csv(const AblationResult& result, const std::string& path,
                        const std::vector<std::string>& provenance = {});

// Per-record plot data: t, column id, truth, estimate, baseline.
struct PlotRecord {
  std::string record_id;
  Matrix truth_phys;
  Matrix estimate_phys;
  Matrix baseline_phys;
  Mask mask;
};
void write_plot_csv(const PlotRecord& rec, std::size_t n_cells, const std::string& path);

}  // namespace tse
