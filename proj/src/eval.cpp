#include "tse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "tse/errors.hpp"
#include "tse/rng.hpp"
#include "tse/text.hpp"

namespace tse {

namespace {

constexpr double kZeroTruthEps = 1e-6;

void check_metric_shapes(const Matrix& est, const Matrix& truth, const Mask& mask,
                         const char* what) {
  if (!est.same_shape(truth) || !est.same_shape(mask.M)) {
    throw ValidationError(std::string(what) + ": shape mismatch");
  }
}

}  // namespace

double mape(const Matrix& estimated, const Matrix& truth, const Mask& mask,
            std::size_t* excluded) {
  check_metric_shapes(estimated, truth, mask, "mape");
  double sum = 0.0;
  std::size_t count = 0;
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (mask.M.data[i] != 0.0) continue;
    if (std::abs(truth.data[i]) <= kZeroTruthEps) {
      ++skipped;
      continue;
    }
    sum += std::abs(estimated.data[i] - truth.data[i]) / std::abs(truth.data[i]);
    ++count;
  }
  if (excluded) *excluded = skipped;
  if (count == 0) {
    throw ValidationError("mape: empty evaluation set (no masked-out entries with nonzero truth)");
  }
  return 100.0 * sum / static_cast<double>(count);
}

double mse(const Matrix& estimated, const Matrix& truth, const Mask& mask) {
  check_metric_shapes(estimated, truth, mask, "mse");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    if (mask.M.data[i] != 0.0) continue;
    const double e = estimated.data[i] - truth.data[i];
    sum += e * e;
    ++count;
  }
  if (count == 0) {
    throw ValidationError("mse: empty evaluation set (no masked-out entries)");
  }
  return sum / static_cast<double>(count);
}

Matrix baseline_fill(const Matrix& y, const Mask& mask, FillMethod method) {
  if (!y.same_shape(mask.M)) {
    throw ValidationError("baseline_fill: shape mismatch");
  }
  double global_sum = 0.0;
  std::size_t global_count = 0;
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    if (mask.M.data[i] != 0.0) {
      global_sum += y.data[i];
      ++global_count;
    }
  }
  if (global_count == 0) {
    throw ValidationError("baseline_fill: input is fully masked, nothing observed");
  }
  const double global_mean = global_sum / static_cast<double>(global_count);

  Matrix out = y;
  for (std::size_t c = 0; c < y.cols; ++c) {
    std::vector<std::size_t> observed;
    for (std::size_t t = 0; t < y.rows; ++t) {
      if (mask.observed(t, c)) observed.push_back(t);
    }
    if (observed.empty()) {
      for (std::size_t t = 0; t < y.rows; ++t) out(t, c) = global_mean;
      continue;
    }

    switch (method) {
      case FillMethod::column_mean: {
        double sum = 0.0;
        for (std::size_t t : observed) sum += y(t, c);
        const double mean = sum / static_cast<double>(observed.size());
        for (std::size_t t = 0; t < y.rows; ++t) {
          if (!mask.observed(t, c)) out(t, c) = mean;
        }
        break;
      }
      case FillMethod::linear_interp: {
        for (std::size_t t = 0; t < y.rows; ++t) {
          if (mask.observed(t, c)) continue;
          auto above = std::upper_bound(observed.begin(), observed.end(), t);
          if (above == observed.begin()) {
            out(t, c) = y(observed.front(), c);  // before first observation
          } else if (above == observed.end()) {
            out(t, c) = y(observed.back(), c);  // after last observation
          } else {
            const std::size_t t1 = *above;
            const std::size_t t0 = *(above - 1);
            const double w = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
            out(t, c) = (1.0 - w) * y(t0, c) + w * y(t1, c);
          }
        }
        break;
      }
      case FillMethod::locf: {
        for (std::size_t t = 0; t < y.rows; ++t) {
          if (mask.observed(t, c)) continue;
          auto above = std::upper_bound(observed.begin(), observed.end(), t);
          // Carry the last observation forward; leading gaps backfill from
          // the first observation.
          out(t, c) = (above == observed.begin()) ? y(observed.front(), c)
                                                  : y(*(above - 1), c);
        }
        break;
      }
    }
  }
  return out;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::no_p_no_c:
      return "no_p_no_c";
    case Variant::no_p:
      return "no_p";
    case Variant::no_c:
      return "no_c";
    case Variant::full:
      return "full";
  }
  return "?";
}

namespace {

LossWeights variant_weights(const LossWeights& full, Variant v) {
  switch (v) {
    case Variant::no_p_no_c:
      return LossWeights{0.0, 0.0};
    case Variant::no_p:
      return LossWeights{0.0, full.lambda_c};
    case Variant::no_c:
      return LossWeights{full.lambda_p, 0.0};
    case Variant::full:
      return full;
  }
  return full;
}

// Pooled error accumulators over all masked entries of a seed's records.
struct ErrorAccum {
  double abs_pct_sum = 0.0;
  std::size_t pct_count = 0;
  double sq_sum = 0.0;
  std::size_t sq_count = 0;

  void add(double est, double truth) {
    const double e = est - truth;
    sq_sum += e * e;
    ++sq_count;
    if (std::abs(truth) > kZeroTruthEps) {
      abs_pct_sum += std::abs(e) / std::abs(truth);
      ++pct_count;
    }
  }
  double mape_pct() const {
    if (pct_count == 0) {
      throw ValidationError("run_ablation: empty evaluation set for mape");
    }
    return 100.0 * abs_pct_sum / static_cast<double>(pct_count);
  }
  double mse() const {
    if (sq_count == 0) {
      throw ValidationError("run_ablation: empty evaluation set for mse");
    }
    return sq_sum / static_cast<double>(sq_count);
  }
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// est/truth in physical units, in feature layout (flows then densities).
void accumulate_split(ErrorAccum& flow_acc, ErrorAccum& density_acc, const Matrix& est,
                      const Matrix& truth, const Mask& mask, std::size_t m) {
  for (std::size_t t = 0; t < truth.rows; ++t) {
    for (std::size_t j = 0; j < truth.cols; ++j) {
      if (mask.observed(t, j)) continue;
      if (j <= m) {
        flow_acc.add(est(t, j), truth(t, j));
      } else {
        density_acc.add(est(t, j), truth(t, j));
      }
    }
  }
}

Matrix physical_from_features(const Matrix& features, const Scaler& scaler) {
  Matrix phys = denormalize_linear(features, scaler);
  for (double& v : phys.data) v = std::max(0.0, v);
  return phys;
}

}  // namespace

const AblationRow& AblationResult::row(const std::string& variant,
                                       const std::string& target) const {
  for (const auto& r : rows) {
    if (r.variant == variant && r.target == target) return r;
  }
  throw ValidationError("ablation result has no row (" + variant + ", " + target + ")");
}

AblationResult run_ablation(const Corpus& corpus, const Checkpoint& checkpoint,
                            const AblationConfig& config) {
  config.estimate.validate();
  if (config.seeds.empty()) {
    throw ValidationError("run_ablation: need at least one seed");
  }
  auto validation = corpus.split(false);
  if (validation.empty()) {
    throw ValidationError("run_ablation: corpus has no validation records");
  }
  if (config.max_records > 0 && validation.size() > config.max_records) {
    validation.resize(config.max_records);
  }

  const std::vector<Variant> variants = {Variant::no_p_no_c, Variant::no_p,
                                         Variant::no_c, Variant::full};
  const std::vector<std::pair<std::string, FillMethod>> baselines = {
      {"baseline_column_mean", FillMethod::column_mean},
      {"baseline_linear_interp", FillMethod::linear_interp},
      {"baseline_locf", FillMethod::locf}};

  // per (row name, target) -> per-seed metric values
  std::map<std::pair<std::string, std::string>, std::vector<double>> mape_by_row;
  std::map<std::pair<std::string, std::string>, std::vector<double>> mse_by_row;

  for (const std::uint64_t seed : config.seeds) {
    std::map<std::string, std::pair<ErrorAccum, ErrorAccum>> accum;  // name -> (flow, density)

    for (std::size_t ri = 0; ri < validation.size(); ++ri) {
      const CorpusRecord& record = *validation[ri];
      const std::size_t m = record.ts.m();
      const CellGeometry geometry = record.ts.geometry();

      const FeatureSequence fs = to_features(record.ts, checkpoint.scaler);
      CorruptionSpec spec = config.corruption;
      spec.seed = hash_combine(seed, ri + 1);
      const Corrupted corrupted = corrupt(fs, spec);

      const Matrix truth_raw = [&] {
        Matrix raw(fs.features.rows, fs.features.cols);
        for (std::size_t t = 0; t < raw.rows; ++t) {
          for (std::size_t l = 0; l <= m; ++l) raw(t, l) = record.ts.flow(t, l);
          for (std::size_t s = 0; s < m; ++s) raw(t, m + 1 + s) = record.ts.density(t, s);
        }
        return raw;
      }();

      EstimateConfig est_cfg = config.estimate;
      // Same seed across variants so they share z initializations.
      est_cfg.seed = hash_combine(seed, ri + 1);
      for (const Variant v : variants) {
        est_cfg.weights = variant_weights(config.estimate.weights, v);
        const EstimateResult er =
            estimate(checkpoint, corrupted.y, corrupted.mask, est_cfg, geometry);
        const Matrix recon = reconstruct(corrupted.y, corrupted.mask, er.gz_hat);
        const Matrix phys = physical_from_features(recon, checkpoint.scaler);
        auto& acc = accum[variant_name(v)];
        accumulate_split(acc.first, acc.second, phys, truth_raw, corrupted.mask, m);
      }

      for (const auto& [name, method] : baselines) {
        const Matrix filled = baseline_fill(corrupted.y, corrupted.mask, method);
        const Matrix phys = physical_from_features(filled, checkpoint.scaler);
        auto& acc = accum[name];
        accumulate_split(acc.first, acc.second, phys, truth_raw, corrupted.mask, m);
      }
    }

    for (const auto& [name, acc] : accum) {
      mape_by_row[{name, "flow"}].push_back(acc.first.mape_pct());
      mse_by_row[{name, "flow"}].push_back(acc.first.mse());
      mape_by_row[{name, "density"}].push_back(acc.second.mape_pct());
      mse_by_row[{name, "density"}].push_back(acc.second.mse());
    }
  }

  AblationResult result;
  result.seeds = config.seeds;
  result.corpus_seed = corpus.seed;
  for (const auto& [key, mapes] : mape_by_row) {
    AblationRow row;
    row.variant = key.first;
    row.target = key.second;
    row.mape_pct = median(mapes);
    row.mse = median(mse_by_row.at(key));
    result.rows.push_back(row);
  }
  return result;
}

void write_ablation_csv(const AblationResult& result, const std::string& path,
                        const std::vector<std::string>& provenance) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& line : provenance) f << "# " << line << "\n";
  f << "variant,target,mape_pct,mse,seeds,corpus_id\n";
  std::string seeds_joined;
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    if (i) seeds_joined += ';';
    seeds_joined += std::to_string(result.seeds[i]);
  }
  for (const auto& row : result.rows) {
    f << row.variant << "," << row.target << "," << format_double(row.mape_pct) << ","
      << format_double(row.mse) << "," << seeds_joined << "," << result.corpus_seed
      << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

void write_plot_csv(const PlotRecord& rec, std::size_t n_cells, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << "t,column,truth,estimate,baseline,observed\n";
  for (std::size_t t = 0; t < rec.truth_phys.rows; ++t) {
    for (std::size_t j = 0; j < rec.truth_phys.cols; ++j) {
      const std::string col = (j <= n_cells) ? ("q" + std::to_string(j + 1))
                                             : ("k" + std::to_string(j - n_cells));
      f << t + 1 << "," << col << "," << format_double(rec.truth_phys(t, j)) << ","
        << format_double(rec.estimate_phys(t, j)) << ","
        << format_double(rec.baseline_phys(t, j)) << ","
        << (rec.mask.observed(t, j) ? 1 : 0) << "\n";
    }
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

}  // namespace tse
