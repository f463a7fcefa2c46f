// Acceptance suite: deterministic end-to-end checks, one PASS/FAIL line per
// criterion. Criteria 5-8 drive the same command pipeline a user would run
// (simulate -> train -> ablate) inside a scratch work directory.
//
// Usage: acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tse/cli.hpp"
#include "tse/data.hpp"
#include "tse/errors.hpp"
#include "tse/estimation.hpp"
#include "tse/eval.hpp"
#include "tse/gan.hpp"
#include "tse/gradcheck.hpp"
#include "tse/rng.hpp"
#include "tse/text.hpp"

namespace fs = std::filesystem;
using namespace tse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Criterion 1: analytic BPTT gradients vs central finite differences over the
// full dimension sweep (>=100 instances), every weight/bias family < 1e-4.

Outcome criterion_gradients() {
  GradCheckOptions opts;  // hidden {1,2,4,8} x input {1,3} x n {1,2,5,10}, 4 seeds
  opts.composed_instances = 0;
  const GradCheckReport report = run_gradcheck(opts);

  double worst = report.lstm_max;
  for (const auto& f : report.families) worst = std::max(worst, f.max_rel_error);

  Outcome out;
  out.pass = report.instances >= 100 && worst < 1e-4 && report.families.size() >= 12;
  out.detail = std::to_string(report.instances) +
               " instances, max relative error " + format_double(worst);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 2: composed gradients (generator params through the frozen
// discriminator; total estimation loss wrt z) < 1e-4 on 20 tiny instances.

Outcome criterion_composed_gradients() {
  GradCheckOptions opts;
  opts.hidden_sizes = {};  // skip the lstm sweep
  opts.composed_instances = 20;
  const GradCheckReport report = run_gradcheck(opts);

  Outcome out;
  out.pass = report.generator_through_discriminator_max < 1e-4 &&
             report.z_gradient_max < 1e-4;
  out.detail = "generator-through-discriminator " +
               format_double(report.generator_through_discriminator_max) +
               ", d(total_loss)/dz " + format_double(report.z_gradient_max);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: every simulator output satisfies the conservation law to
// rounding, and the conservative loss on it is < 1e-18.

Outcome criterion_conservation() {
  double worst_residual = 0.0;
  double worst_loss = 0.0;
  std::size_t configs = 0;

  for (const bool ca52 : {false, true}) {
    for (const double noise : {0.0, 120.0}) {
      for (const bool incident : {false, true}) {
        for (const std::uint64_t seed : {1ull, 2ull, 3ull}) {
          CtmConfig cfg = ca52 ? CtmConfig::ca52_preset() : CtmConfig::i5_preset();
          cfg.seed = seed;
          cfg.noise_std_veh_h = noise;
          cfg.demand_profile.assign(cfg.n, 800.0 + 200.0 * static_cast<double>(seed));
          if (incident) {
            cfg.downstream_supply_profile.assign(cfg.n, cfg.capacity_veh_h);
            cfg.downstream_supply_profile[4] = 500.0;
            cfg.downstream_supply_profile[5] = 500.0;
            cfg.downstream_supply_profile[6] = 500.0;
          }
          const TrafficStateMatrix ts = ctm_simulate(cfg);
          ++configs;

          for (std::size_t t = 0; t + 1 < ts.n(); ++t) {
            for (std::size_t s = 0; s < ts.m(); ++s) {
              const double r = ts.density(t + 1, s) - ts.density(t, s) -
                               ts.dt_hours / ts.cell_lengths_km[s] *
                                   (ts.flow(t, s) - ts.flow(t, s + 1));
              const double scale = std::max(1.0, std::abs(ts.density(t + 1, s)));
              worst_residual = std::max(worst_residual, std::abs(r) / scale);
            }
          }
          const FeatureSequence fsq = to_features(ts);
          worst_loss = std::max(
              worst_loss, conservative_loss(fsq.features, fsq.scaler, ts.geometry()));
        }
      }
    }
  }

  Outcome out;
  out.pass = worst_residual < 1e-12 && worst_loss < 1e-18;
  out.detail = std::to_string(configs) + " configurations, max residual " +
               format_double(worst_residual) + ", max conservative loss " +
               format_double(worst_loss);
  return out;
}

// ---------------------------------------------------------------------------
// Criterion 4: reconstruction passes observed entries through bit-exactly on
// 1000 random (y, M, gz) triples.

Outcome criterion_reconstruction() {
  Rng rng(20250401);
  std::size_t checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 2 + rng.index(11);
    const std::size_t cols = 2 + rng.index(11);
    Matrix y(rows, cols), gz(rows, cols);
    Mask mask = Mask::ones(rows, cols);
    for (double& v : y.data) v = rng.uniform(-1e6, 1e6);
    for (double& v : gz.data) v = rng.uniform(-1e6, 1e6);
    for (double& v : mask.M.data) v = rng.uniform() < 0.5 ? 0.0 : 1.0;

    const Matrix rec = reconstruct(y, mask, gz);
    for (std::size_t i = 0; i < rec.data.size(); ++i) {
      const double& expect = (mask.M.data[i] != 0.0) ? y.data[i] : gz.data[i];
      if (std::memcmp(&rec.data[i], &expect, sizeof(double)) != 0) {
        return {false, "bit mismatch in trial " + std::to_string(trial)};
      }
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " entries bit-exact over 1000 triples"};
}

// ---------------------------------------------------------------------------
// Criteria 5-8 share one pipeline: corpus -> train -> two ablations, all via
// the CLI commands so the emitted files are exactly what a user would get.

struct PipelineFiles {
  fs::path corpus;
  fs::path checkpoint;
  fs::path history;
  fs::path ablation_random;
  fs::path ablation_future;
};

void write_acceptance_config(const fs::path& path, const std::string& pattern) {
  std::ofstream f(path, std::ios::binary);
  f << R"({
  "ctm": {"preset": "i5"},
  "corpus": {"records": 2000, "seed": 42},
  "gan": {"seed": 1},
  "estimate": {"iterations": 500, "step_size": 0.05, "restarts": 3, "seed": 7},
  "weights": {"lambda_p": 0.1, "lambda_c": 0.01},
)";
  if (pattern == "future_block") {
    f << R"(  "corruption": {"pattern": "future_block", "t0": 6},
)";
  } else {
    f << R"(  "corruption": {"pattern": "random_entries", "rate": 0.3},
)";
  }
  f << R"(  "ablation": {"seeds": [101, 102, 103, 104, 105], "max_records": 12}
}
)";
}

PipelineFiles run_pipeline(const fs::path& work) {
  fs::create_directories(work);
  PipelineFiles files;
  files.corpus = work / "corpus";
  files.checkpoint = work / "model.json";
  files.history = work / "history.csv";
  files.ablation_random = work / "ablation.csv";
  files.ablation_future = work / "prediction.csv";

  const fs::path cfg_random = work / "config_random.json";
  const fs::path cfg_future = work / "config_future.json";
  write_acceptance_config(cfg_random, "random_entries");
  write_acceptance_config(cfg_future, "future_block");

  CommonOptions common;
  common.config_path = cfg_random.string();
  common.force = true;

  std::printf("  [pipeline] simulate -> %s\n", files.corpus.string().c_str());
  cmd_simulate(common, files.corpus.string());

  std::printf("  [pipeline] train -> %s\n", files.checkpoint.string().c_str());
  TrainOptions topts;
  topts.corpus_dir = files.corpus.string();
  topts.out_checkpoint = files.checkpoint.string();
  topts.history_csv = files.history.string();
  cmd_train(common, topts);

  std::printf("  [pipeline] ablate (random entries) -> %s\n",
              files.ablation_random.string().c_str());
  AblateOptions aopts;
  aopts.corpus_dir = files.corpus.string();
  aopts.checkpoint_path = files.checkpoint.string();
  aopts.out_csv = files.ablation_random.string();
  cmd_ablate(common, aopts);

  std::printf("  [pipeline] ablate (future block) -> %s\n",
              files.ablation_future.string().c_str());
  CommonOptions common_future = common;
  common_future.config_path = cfg_future.string();
  AblateOptions popts = aopts;
  popts.out_csv = files.ablation_future.string();
  cmd_ablate(common_future, popts);

  return files;
}

// variant -> target -> (mape, mse)
std::map<std::string, std::map<std::string, std::pair<double, double>>>
parse_ablation_csv(const fs::path& path) {
  std::map<std::string, std::map<std::string, std::pair<double, double>>> table;
  std::ifstream f(path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("variant,", 0) == 0) continue;
    const auto parts = split(line, ',');
    if (parts.size() < 4) continue;
    table[parts[0]][parts[1]] = {parse_double(parts[2], path.string()),
                                 parse_double(parts[3], path.string())};
  }
  return table;
}

Outcome criterion_equilibrium(const PipelineFiles& files) {
  const Checkpoint ckpt = load_checkpoint(files.checkpoint.string());
  const Corpus corpus = load_corpus(files.corpus.string());

  std::vector<Matrix> heldout;
  for (const auto* rec : corpus.split(false)) {
    heldout.push_back(to_features(rec->ts, ckpt.scaler).features);
  }
  Rng rng(999);
  const double accuracy = discriminator_accuracy(ckpt.model, ckpt.config, heldout, rng);

  Outcome out;
  out.pass = accuracy >= 0.4 && accuracy <= 0.7;
  out.detail = "held-out real-vs-fake accuracy " + format_double(accuracy) +
               " on " + std::to_string(heldout.size()) + " records (window [0.4, 0.7])";
  return out;
}

Outcome criterion_ablation_ordering(const PipelineFiles& files) {
  const auto table = parse_ablation_csv(files.ablation_random);
  const std::vector<std::string> variants = {"no_p_no_c", "no_p", "no_c", "full"};

  Outcome out;
  out.pass = true;
  std::string note;
  for (const std::string target : {"flow", "density"}) {
    double full_mse = table.at("full").at(target).second;
    double worst_mse = table.at("no_p_no_c").at(target).second;
    for (const auto& v : variants) {
      const double mse = table.at(v).at(target).second;
      if (mse < full_mse) out.pass = false;       // full must be lowest
      if (mse > worst_mse) out.pass = false;      // no_p_no_c must be highest
    }
    const double full_mape = table.at("full").at(target).first;
    const double mean_mape = table.at("baseline_column_mean").at(target).first;
    if (full_mape >= mean_mape) out.pass = false;
    note += target + ": mse full=" + format_double(full_mse) +
            " no_p_no_c=" + format_double(worst_mse) +
            " | mape full=" + format_double(full_mape) +
            " column_mean=" + format_double(mean_mape) + "  ";
  }
  out.detail = note;
  return out;
}

Outcome criterion_prediction(const PipelineFiles& files) {
  const auto table = parse_ablation_csv(files.ablation_future);
  Outcome out;
  out.pass = true;
  std::string note;
  for (const std::string target : {"flow", "density"}) {
    const double full = table.at("full").at(target).second;
    const double locf = table.at("baseline_locf").at(target).second;
    if (full >= locf) out.pass = false;
    note += target + ": mse full=" + format_double(full) +
            " locf=" + format_double(locf) + "  ";
  }
  out.detail = note;
  return out;
}

Outcome criterion_reproducibility(const PipelineFiles& first, const fs::path& work) {
  const PipelineFiles second = run_pipeline(work / "rerun");

  const std::vector<std::pair<fs::path, fs::path>> pairs = {
      {first.history, second.history},
      {first.ablation_random, second.ablation_random},
      {first.ablation_future, second.ablation_future},
      {first.corpus / "manifest.csv", second.corpus / "manifest.csv"},
      {first.checkpoint, second.checkpoint},
  };
  for (const auto& [a, b] : pairs) {
    if (read_file(a) != read_file(b)) {
      return {false, a.filename().string() + " differs between runs"};
    }
  }
  return {true, std::to_string(pairs.size()) + " output files byte-identical across re-runs"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  const auto wanted = [&](int id) { return selected.empty() || selected.count(id); };

  const fs::path work = fs::current_path() / "acceptance_work";
  fs::remove_all(work);

  struct Row {
    int id;
    std::string name;
    Outcome outcome;
    double seconds;
  };
  std::vector<Row> rows;

  const auto record = [&](int id, const std::string& name, const Outcome& o,
                          double secs) {
    rows.push_back({id, name, o, secs});
    std::printf("[%s] criterion %d: %s (%.1f s) - %s\n", o.pass ? "PASS" : "FAIL", id,
                name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  };

  try {
    if (wanted(1)) {
      const double t0 = now_seconds();
      record(1, "gradient fidelity vs finite differences", criterion_gradients(),
             now_seconds() - t0);
    }
    if (wanted(2)) {
      const double t0 = now_seconds();
      record(2, "composed-gradient fidelity", criterion_composed_gradients(),
             now_seconds() - t0);
    }
    if (wanted(3)) {
      const double t0 = now_seconds();
      record(3, "conservation certificate", criterion_conservation(),
             now_seconds() - t0);
    }
    if (wanted(4)) {
      const double t0 = now_seconds();
      record(4, "reconstruction identity", criterion_reconstruction(),
             now_seconds() - t0);
    }

    const bool needs_pipeline = wanted(5) || wanted(6) || wanted(7) || wanted(8);
    if (needs_pipeline) {
      PipelineFiles files = run_pipeline(work / "run1");
      if (wanted(5)) {
        const double t0 = now_seconds();
        record(5, "adversarial equilibrium diagnostic", criterion_equilibrium(files),
               now_seconds() - t0);
      }
      if (wanted(6)) {
        const double t0 = now_seconds();
        record(6, "ablation ordering (random-entry masking)",
               criterion_ablation_ordering(files), now_seconds() - t0);
      }
      if (wanted(7)) {
        const double t0 = now_seconds();
        record(7, "prediction protocol beats carry-forward", criterion_prediction(files),
               now_seconds() - t0);
      }
      if (wanted(8)) {
        const double t0 = now_seconds();
        record(8, "byte-identical reproducibility",
               criterion_reproducibility(files, work), now_seconds() - t0);
      }
    }
  } catch (const std::exception& e) {
    std::printf("[FAIL] acceptance aborted: %s\n", e.what());
    return 1;
  }

  bool all_pass = true;
  for (const auto& row : rows) all_pass = all_pass && row.outcome.pass;
  std::printf("%s: %zu criteria checked\n", all_pass ? "ALL PASS" : "FAILURES PRESENT",
              rows.size());
  return all_pass ? 0 : 1;
}
