#include "tse/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "tse/errors.hpp"
#include "tse/rng.hpp"
#include "tse/text.hpp"

namespace tse {

namespace fs = std::filesystem;

void CtmConfig::validate() const {
  if (m < 1) throw ValidationError("ctm: need at least one cell");
  if (n < 2) throw ValidationError("ctm: need at least two time steps");
  if (dt_hours <= 0.0) throw ValidationError("ctm: dt_hours must be positive");
  if (substeps < 1) throw ValidationError("ctm: substeps must be >= 1");
  if (cell_lengths_km.size() != m) {
    throw ValidationError("ctm: expected " + std::to_string(m) + " cell lengths, got " +
                          std::to_string(cell_lengths_km.size()));
  }
  for (double len : cell_lengths_km) {
    if (len <= 0.0) throw ValidationError("ctm: cell lengths must be positive");
  }
  if (free_flow_speed_kmh <= 0.0 || backward_wave_speed_kmh <= 0.0 ||
      jam_density_veh_km <= 0.0 || capacity_veh_h <= 0.0) {
    throw ValidationError("ctm: physical parameters must be positive");
  }
  if (backward_wave_speed_kmh > free_flow_speed_kmh) {
    throw ValidationError("ctm: backward wave speed must not exceed free-flow speed");
  }
  if (noise_std_veh_h < 0.0) throw ValidationError("ctm: noise_std must be >= 0");
  if (demand_profile.size() != n) {
    throw ValidationError("ctm: demand_profile must have one entry per time step");
  }
  if (!downstream_supply_profile.empty() && downstream_supply_profile.size() != n) {
    throw ValidationError("ctm: downstream_supply_profile must be empty or length n");
  }
  if (!initial_density.empty() && initial_density.size() != m) {
    throw ValidationError("ctm: initial_density must be empty or length m");
  }
  for (double d : demand_profile) {
    if (d < 0.0) throw ValidationError("ctm: demand must be nonnegative");
  }
  for (double k0 : initial_density) {
    if (k0 < 0.0 || k0 > jam_density_veh_km) {
      throw ValidationError("ctm: initial densities must lie in [0, jam density]");
    }
  }
  const double min_len = *std::min_element(cell_lengths_km.begin(), cell_lengths_km.end());
  const double step_advance = free_flow_speed_kmh * dt_hours / static_cast<double>(substeps);
  if (step_advance > min_len * (1.0 + 1e-12)) {
    throw ValidationError(
        "ctm: CFL condition violated: free-flow travel per simulation step is " +
        format_double(step_advance) + " km but the smallest cell is " +
        format_double(min_len) + " km; raise substeps or shorten dt");
  }
}

CtmConfig CtmConfig::i5_preset() {
  CtmConfig cfg;
  cfg.m = 5;
  cfg.n = 12;
  cfg.dt_hours = 1.0 / 12.0;
  cfg.cell_lengths_km.assign(5, 0.5);
  cfg.demand_profile.assign(12, 1000.0);
  cfg.substeps = 20;
  return cfg;
}

CtmConfig CtmConfig::ca52_preset() {
  CtmConfig cfg;
  cfg.m = 3;
  cfg.n = 12;
  cfg.dt_hours = 1.0 / 12.0;
  cfg.cell_lengths_km.assign(3, 0.5);
  cfg.demand_profile.assign(12, 1000.0);
  cfg.substeps = 20;
  return cfg;
}

TrafficStateMatrix ctm_simulate(const CtmConfig& config) {
  config.validate();
  const std::size_t m = config.m;
  const std::size_t n = config.n;
  const double dt_sub = config.dt_hours / static_cast<double>(config.substeps);

  Rng rng(config.seed);

  TrafficStateMatrix ts;
  ts.dt_hours = config.dt_hours;
  ts.cell_lengths_km = config.cell_lengths_km;
  ts.flow = Matrix(n, m + 1);
  ts.density = Matrix(n, m);

  Vector k = config.initial_density.empty() ? Vector(m, 0.0) : config.initial_density;

  const auto sending = [&](double density) {
    return std::min(config.free_flow_speed_kmh * density, config.capacity_veh_h);
  };
  const auto receiving = [&](double density) {
    return std::min(
        std::max(0.0, config.backward_wave_speed_kmh * (config.jam_density_veh_km - density)),
        config.capacity_veh_h);
  };

  Vector q_sub(m + 1, 0.0);
  Vector q_sum(m + 1, 0.0);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t s = 0; s < m; ++s) ts.density(t, s) = k[s];

    const double supply = config.downstream_supply_profile.empty()
                              ? config.capacity_veh_h
                              : config.downstream_supply_profile[t];
    std::fill(q_sum.begin(), q_sum.end(), 0.0);

    for (std::size_t sub = 0; sub < config.substeps; ++sub) {
      for (std::size_t l = 0; l <= m; ++l) {
        const double up = (l == 0) ? config.demand_profile[t] : sending(k[l - 1]);
        const double down = (l == m) ? supply : receiving(k[l]);
        const double bound = std::min(std::min(up, down), config.capacity_veh_h);
        double q = bound;
        if (config.noise_std_veh_h > 0.0) {
          q = std::clamp(q + rng.normal(0.0, config.noise_std_veh_h), 0.0, bound);
        }
        q_sub[l] = q;
      }
      for (std::size_t s = 0; s < m; ++s) {
        k[s] += dt_sub / config.cell_lengths_km[s] * (q_sub[s] - q_sub[s + 1]);
      }
      for (std::size_t l = 0; l <= m; ++l) q_sum[l] += q_sub[l];
    }

    for (std::size_t l = 0; l <= m; ++l) {
      ts.flow(t, l) = q_sum[l] / static_cast<double>(config.substeps);
    }
    // Snap the state to the interval-level conservation update so the
    // recorded rows satisfy the discrete law to the last bit.
    for (std::size_t s = 0; s < m; ++s) {
      k[s] = ts.density(t, s) +
             config.dt_hours / config.cell_lengths_km[s] * (ts.flow(t, s) - ts.flow(t, s + 1));
    }
  }
  return ts;
}

namespace {

Matrix raw_features(const TrafficStateMatrix& ts) {
  const std::size_t n = ts.n();
  const std::size_t m = ts.m();
  Matrix raw(n, 2 * m + 1);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; l <= m; ++l) raw(t, l) = ts.flow(t, l);
    for (std::size_t s = 0; s < m; ++s) raw(t, m + 1 + s) = ts.density(t, s);
  }
  return raw;
}

Scaler fit_scaler_on(const Matrix& raw) {
  Scaler sc;
  sc.mins.assign(raw.cols, std::numeric_limits<double>::infinity());
  sc.maxs.assign(raw.cols, -std::numeric_limits<double>::infinity());
  for (std::size_t t = 0; t < raw.rows; ++t) {
    for (std::size_t j = 0; j < raw.cols; ++j) {
      sc.mins[j] = std::min(sc.mins[j], raw(t, j));
      sc.maxs[j] = std::max(sc.maxs[j], raw(t, j));
    }
  }
  return sc;
}

}  // namespace

FeatureSequence to_features(const TrafficStateMatrix& ts) {
  const Matrix raw = raw_features(ts);
  return to_features(ts, fit_scaler_on(raw));
}

FeatureSequence to_features(const TrafficStateMatrix& ts, const Scaler& scaler) {
  const Matrix raw = raw_features(ts);
  if (scaler.cols() != raw.cols || scaler.maxs.size() != raw.cols) {
    throw ValidationError("to_features: scaler has " + std::to_string(scaler.cols()) +
                          " columns, features have " + std::to_string(raw.cols));
  }
  FeatureSequence fs;
  fs.scaler = scaler;
  fs.features = Matrix(raw.rows, raw.cols);
  for (std::size_t t = 0; t < raw.rows; ++t) {
    for (std::size_t j = 0; j < raw.cols; ++j) {
      // Values outside the scaler's fit range (validation data) clamp to [0,1].
      fs.features(t, j) = std::clamp(scaler.normalize(j, raw(t, j)), 0.0, 1.0);
    }
  }
  return fs;
}

TrafficStateMatrix from_features(const FeatureSequence& fs, const CellGeometry& geometry,
                                 std::size_t* clamped_count) {
  const std::size_t cols = fs.features.cols;
  if (cols % 2 == 0 || cols < 3) {
    throw ValidationError("from_features: feature width must be odd and >= 3");
  }
  const std::size_t m = (cols - 1) / 2;
  if (geometry.cell_lengths_km.size() != m) {
    throw ValidationError("from_features: geometry has " +
                          std::to_string(geometry.cell_lengths_km.size()) +
                          " cells, features imply " + std::to_string(m));
  }
  if (fs.scaler.cols() != cols) {
    throw ValidationError("from_features: scaler/feature column mismatch");
  }
  const std::size_t n = fs.features.rows;
  TrafficStateMatrix ts;
  ts.dt_hours = geometry.dt_hours;
  ts.cell_lengths_km = geometry.cell_lengths_km;
  ts.flow = Matrix(n, m + 1);
  ts.density = Matrix(n, m);
  std::size_t clamped = 0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < cols; ++j) {
      double v = fs.scaler.denormalize(j, fs.features(t, j));
      if (v < 0.0) {
        v = 0.0;
        ++clamped;
      }
      if (j <= m) {
        ts.flow(t, j) = v;
      } else {
        ts.density(t, j - m - 1) = v;
      }
    }
  }
  if (clamped_count) *clamped_count = clamped;
  return ts;
}

Matrix denormalize_linear(const Matrix& features, const Scaler& scaler) {
  if (scaler.cols() != features.cols) {
    throw ValidationError("denormalize_linear: scaler/feature column mismatch");
  }
  Matrix out(features.rows, features.cols);
  for (std::size_t t = 0; t < features.rows; ++t) {
    for (std::size_t j = 0; j < features.cols; ++j) {
      out(t, j) = scaler.denormalize(j, features(t, j));
    }
  }
  return out;
}

Corrupted corrupt(const FeatureSequence& fs, const CorruptionSpec& spec) {
  const std::size_t rows = fs.features.rows;
  const std::size_t cols = fs.features.cols;
  Corrupted out;
  out.mask = Mask::ones(rows, cols);

  switch (spec.pattern) {
    case CorruptionSpec::Pattern::random_entries: {
      if (spec.rate < 0.0 || spec.rate >= 1.0) {
        throw ValidationError("corrupt: rate must lie in [0,1)");
      }
      const std::size_t total = rows * cols;
      const std::size_t count =
          static_cast<std::size_t>(std::llround(spec.rate * static_cast<double>(total)));
      std::vector<std::size_t> idx(total);
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(spec.seed);
      // Partial Fisher-Yates: the first `count` entries are a uniform sample
      // without replacement.
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + rng.index(total - i);
        std::swap(idx[i], idx[j]);
      }
      for (std::size_t i = 0; i < count; ++i) out.mask.M.data[idx[i]] = 0.0;
      break;
    }
    case CorruptionSpec::Pattern::detector_outage: {
      for (std::size_t col : spec.columns) {
        if (col >= cols) {
          throw ValidationError("corrupt: column index " + std::to_string(col) +
                                " out of range (features have " + std::to_string(cols) +
                                " columns)");
        }
        for (std::size_t t = 0; t < rows; ++t) out.mask.M(t, col) = 0.0;
      }
      break;
    }
    case CorruptionSpec::Pattern::future_block: {
      if (spec.t0 > rows) {
        throw ValidationError("corrupt: future_block start row out of range");
      }
      for (std::size_t t = spec.t0; t < rows; ++t) {
        for (std::size_t j = 0; j < cols; ++j) out.mask.M(t, j) = 0.0;
      }
      break;
    }
  }

  out.y = fs.features;
  for (std::size_t i = 0; i < out.y.data.size(); ++i) {
    if (out.mask.M.data[i] == 0.0) out.y.data[i] = 0.5;
  }
  return out;
}

void save_matrix_csv(const TrafficStateMatrix& ts, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  const std::size_t n = ts.n();
  const std::size_t m = ts.m();
  f << n << "," << m << "," << format_double(ts.dt_hours) << "\n";
  for (std::size_t s = 0; s < m; ++s) {
    f << (s ? "," : "") << format_double(ts.cell_lengths_km[s]);
  }
  f << "\n";
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t l = 0; l <= m; ++l) {
      f << (l ? "," : "") << format_double(ts.flow(t, l));
    }
    for (std::size_t s = 0; s < m; ++s) {
      f << "," << format_double(ts.density(t, s));
    }
    f << "\n";
  }
  if (!f) throw IoError("write failed for '" + path + "'");
}

TrafficStateMatrix load_matrix_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::string line;
  auto where = [&path](std::size_t lineno) {
    return path + " line " + std::to_string(lineno);
  };

  if (!std::getline(f, line)) throw IoError(where(1) + ": missing header");
  auto head = split(line, ',');
  if (head.size() != 3) {
    throw IoError(where(1) + ": header must be 'n,m,dt_hours'");
  }
  const long n_l = parse_long(head[0], where(1));
  const long m_l = parse_long(head[1], where(1));
  const double dt = parse_double(head[2], where(1));
  if (n_l < 2 || m_l < 1 || dt <= 0.0) {
    throw IoError(where(1) + ": header values out of range (need n>=2, m>=1, dt>0)");
  }
  const std::size_t n = static_cast<std::size_t>(n_l);
  const std::size_t m = static_cast<std::size_t>(m_l);

  if (!std::getline(f, line)) throw IoError(where(2) + ": missing cell lengths");
  auto lens = split(line, ',');
  if (lens.size() != m) {
    throw IoError(where(2) + ": expected " + std::to_string(m) + " cell lengths, got " +
                  std::to_string(lens.size()));
  }
  TrafficStateMatrix ts;
  ts.dt_hours = dt;
  ts.cell_lengths_km.resize(m);
  for (std::size_t s = 0; s < m; ++s) {
    ts.cell_lengths_km[s] = parse_double(lens[s], where(2));
    if (ts.cell_lengths_km[s] <= 0.0) {
      throw IoError(where(2) + ": cell lengths must be positive");
    }
  }
  ts.flow = Matrix(n, m + 1);
  ts.density = Matrix(n, m);

  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t lineno = 3 + t;
    if (!std::getline(f, line)) {
      throw IoError(where(lineno) + ": expected " + std::to_string(n) +
                    " data rows, file ended after " + std::to_string(t));
    }
    auto cells = split(line, ',');
    if (cells.size() != 2 * m + 1) {
      throw IoError(where(lineno) + ": expected " + std::to_string(2 * m + 1) +
                    " values, got " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < 2 * m + 1; ++j) {
      const double v = parse_double(cells[j], where(lineno));
      if (v < 0.0) {
        throw IoError(where(lineno) + ": negative " +
                      (j <= m ? std::string("flow") : std::string("density")) + " value");
      }
      if (j <= m) {
        ts.flow(t, j) = v;
      } else {
        ts.density(t, j - m - 1) = v;
      }
    }
  }
  return ts;
}

std::vector<const CorpusRecord*> Corpus::split(bool training) const {
  std::vector<const CorpusRecord*> out;
  for (const auto& r : records) {
    if (r.training == training) out.push_back(&r);
  }
  return out;
}

Corpus make_corpus(const CorpusConfig& config) {
  if (config.records == 0) throw ValidationError("corpus: need at least one record");
  if (config.train_fraction <= 0.0 || config.train_fraction >= 1.0) {
    throw ValidationError("corpus: train_fraction must lie in (0,1)");
  }

  Corpus corpus;
  corpus.seed = config.seed;
  corpus.records.reserve(config.records);

  Rng rng(config.seed);
  const std::size_t n = config.base.n;
  const std::size_t m = config.base.m;
  const double cap = config.base.capacity_veh_h;

  for (std::size_t rec = 0; rec < config.records; ++rec) {
    CtmConfig cfg = config.base;
    cfg.seed = hash_combine(config.seed, rec + 1);

    const double base_level = rng.uniform(0.25 * cap, 0.75 * cap);
    const double amplitude = rng.uniform(0.05 * cap, 0.25 * cap);
    const double phase = rng.uniform(0.0, 6.283185307179586);
    cfg.demand_profile.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
      // Half a diurnal cycle per window: each record sees a rising, falling
      // or curved segment depending on phase.
      const double angle = 3.141592653589793 * static_cast<double>(t) /
                               static_cast<double>(n) +
                           phase;
      cfg.demand_profile[t] =
          std::clamp(base_level + amplitude * std::sin(angle), 50.0, cap);
    }

    cfg.downstream_supply_profile.assign(n, cap);
    if (rng.uniform() < config.incident_probability) {
      const std::size_t start = 1 + rng.index(n / 2);
      const std::size_t duration = 2 + rng.index(n / 2);
      const double reduced = rng.uniform(0.15 * cap, 0.4 * cap);
      for (std::size_t t = start; t < std::min(n, start + duration); ++t) {
        cfg.downstream_supply_profile[t] = reduced;
      }
    }

    cfg.initial_density.resize(m);
    for (std::size_t s = 0; s < m; ++s) {
      cfg.initial_density[s] = rng.uniform(0.03, 0.3) * config.base.jam_density_veh_km;
    }

    CorpusRecord record;
    char id[16];
    std::snprintf(id, sizeof(id), "%04zu", rec);
    record.id = id;
    record.ts = ctm_simulate(cfg);
    record.training = true;  // assigned below
    corpus.records.push_back(std::move(record));
  }

  // Seeded random split, independent of the demand draws above.
  Rng split_rng(hash_combine(config.seed, 0x5eedu));
  std::vector<std::size_t> order(config.records);
  std::iota(order.begin(), order.end(), 0);
  split_rng.shuffle(order);
  const std::size_t n_train = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(config.train_fraction *
                                               static_cast<double>(config.records))));
  for (std::size_t i = 0; i < config.records; ++i) {
    corpus.records[order[i]].training = i < n_train;
  }
  return corpus;
}

Scaler fit_scaler(const Corpus& corpus) {
  Scaler sc;
  bool first = true;
  for (const auto& rec : corpus.records) {
    if (!rec.training) continue;
    const Matrix raw = raw_features(rec.ts);
    if (first) {
      sc = fit_scaler_on(raw);
      first = false;
      continue;
    }
    if (sc.cols() != raw.cols) {
      throw ValidationError("fit_scaler: records disagree on feature width");
    }
    for (std::size_t j = 0; j < raw.cols; ++j) {
      for (std::size_t t = 0; t < raw.rows; ++t) {
        sc.mins[j] = std::min(sc.mins[j], raw(t, j));
        sc.maxs[j] = std::max(sc.maxs[j], raw(t, j));
      }
    }
  }
  if (first) throw ValidationError("fit_scaler: corpus has no training records");
  return sc;
}

void save_corpus(const Corpus& corpus, const std::string& dir,
                 const std::vector<std::string>& comments) {
  fs::create_directories(dir);
  std::ofstream manifest(fs::path(dir) / "manifest.csv", std::ios::binary);
  if (!manifest) throw IoError("cannot open manifest in '" + dir + "'");
  for (const auto& line : comments) manifest << "# " << line << "\n";
  manifest << "# corpus_seed=" << corpus.seed << "\n";
  manifest << "record_id,file,split\n";
  for (const auto& rec : corpus.records) {
    const std::string file = "record_" + rec.id + ".csv";
    save_matrix_csv(rec.ts, (fs::path(dir) / file).string());
    manifest << rec.id << "," << file << "," << (rec.training ? "train" : "validation")
             << "\n";
  }
  if (!manifest) throw IoError("write failed for manifest in '" + dir + "'");
}

Corpus load_corpus(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.csv";
  std::ifstream manifest(manifest_path, std::ios::binary);
  if (!manifest) throw IoError("cannot open '" + manifest_path.string() + "'");

  Corpus corpus;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string tag = "# corpus_seed=";
      if (line.rfind(tag, 0) == 0) {
        corpus.seed = static_cast<std::uint64_t>(
            parse_long(line.substr(tag.size()), manifest_path.string()));
      }
      continue;
    }
    if (line == "record_id,file,split") continue;
    auto parts = split(line, ',');
    if (parts.size() != 3) {
      throw IoError(manifest_path.string() + " line " + std::to_string(lineno) +
                    ": expected 'record_id,file,split'");
    }
    CorpusRecord rec;
    rec.id = parts[0];
    rec.ts = load_matrix_csv((fs::path(dir) / parts[1]).string());
    if (parts[2] == "train") {
      rec.training = true;
    } else if (parts[2] == "validation") {
      rec.training = false;
    } else {
      throw IoError(manifest_path.string() + " line " + std::to_string(lineno) +
                    ": unknown split '" + parts[2] + "'");
    }
    corpus.records.push_back(std::move(rec));
  }
  if (corpus.records.empty()) {
    throw IoError(manifest_path.string() + ": no records listed");
  }
  return corpus;
}

}  // namespace tse
