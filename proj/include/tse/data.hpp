#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tse/mask.hpp"
#include "tse/tensor.hpp"

namespace tse {

// Time step and cell lengths of a corridor window; everything the
// conservation law needs besides the matrices themselves.
struct CellGeometry {
  double dt_hours = 0.0;
  std::vector<double> cell_lengths_km;
};

// Paired flow/density matrices over a spatial-temporal window. Flow has one
// column per detector (m+1 detectors bracketing m cells), density one column
// per cell. Row t covers the interval [t*dt, (t+1)*dt); flow entries are
// veh/h, density entries veh/km at the start of the interval.
struct TrafficStateMatrix {
  Matrix flow;     // n x (m+1)
  Matrix density;  // n x m
  double dt_hours = 0.0;
  std::vector<double> cell_lengths_km;  // m entries

  std::size_t n() const { return flow.rows; }
  std::size_t m() const { return density.cols; }
  CellGeometry geometry() const { return CellGeometry{dt_hours, cell_lengths_km}; }
};

// Per-column min/max in physical units. Columns follow the feature layout:
// m+1 flows then m densities.
struct Scaler {
  std::vector<double> mins;
  std::vector<double> maxs;

  std::size_t cols() const { return mins.size(); }
  double range(std::size_t j) const { return maxs[j] - mins[j]; }
  bool degenerate(std::size_t j) const { return range(j) < 1e-12; }

  // Degenerate columns map to 0.5 and back to their constant.
  double normalize(std::size_t j, double v) const {
    return degenerate(j) ? 0.5 : (v - mins[j]) / range(j);
  }
  double denormalize(std::size_t j, double v) const {
    return degenerate(j) ? mins[j] : mins[j] + v * range(j);
  }
};

// The n x (2m+1) network input: row t = [q(t,1..m+1), k(t,1..m)], min-max
// normalized to [0,1] with the scaler kept alongside.
struct FeatureSequence {
  Matrix features;
  Scaler scaler;
};

struct CtmConfig {
  std::size_t m = 5;
  std::size_t n = 12;
  double dt_hours = 1.0 / 12.0;
  std::vector<double> cell_lengths_km;  // m entries

  // Triangular fundamental diagram (conventional freeway values, not
  // calibrated to any particular site).
  double free_flow_speed_kmh = 100.0;
  double backward_wave_speed_kmh = 20.0;
  double jam_density_veh_km = 150.0;
  double capacity_veh_h = 2000.0;

  std::vector<double> demand_profile;             // n entries, veh/h
  std::vector<double> downstream_supply_profile;  // n entries, veh/h (empty = capacity)
  std::vector<double> initial_density;            // m entries, veh/km (empty = zeros)

  std::uint64_t seed = 0;
  double noise_std_veh_h = 0.0;

  // Internal simulation substeps per output interval. Stability requires
  // v_f * (dt/substeps) <= min cell length; with 5-minute output intervals a
  // single step cannot satisfy that for realistic speeds and sub-km cells.
  std::size_t substeps = 20;

  void validate() const;  // throws ValidationError; names the CFL constraint

  static CtmConfig i5_preset();    // m=5 cells of 0.5 km
  static CtmConfig ca52_preset();  // m=3 cells of 0.5 km
};

// Advances densities by the discrete conservation law with boundary flows
// limited by the sending/receiving rule; the recorded matrix satisfies the
// conservation identity to rounding at every interior (t,s), noise included.
TrafficStateMatrix ctm_simulate(const CtmConfig& config);

// Flow columns first, then density columns; scaler fit on ts when absent.
FeatureSequence to_features(const TrafficStateMatrix& ts);
FeatureSequence to_features(const TrafficStateMatrix& ts, const Scaler& scaler);

// De-normalizes and splits back into flow/density. Negative de-normalized
// values are clamped to 0; *clamped_count reports how many (may be null).
TrafficStateMatrix from_features(const FeatureSequence& fs, const CellGeometry& geometry,
                                 std::size_t* clamped_count = nullptr);

// De-normalization without the nonnegativity clamp, as one matrix in feature
// layout. The conservative loss differentiates through this.
Matrix denormalize_linear(const Matrix& features, const Scaler& scaler);

struct CorruptionSpec {
  enum class Pattern { random_entries, detector_outage, future_block };
  Pattern pattern = Pattern::random_entries;
  double rate = 0.3;                  // random_entries: fraction masked
  std::vector<std::size_t> columns;   // detector_outage: feature columns to mask
  std::size_t t0 = 6;                 // future_block: first masked row (0-based)
  std::uint64_t seed = 0;
};

struct Corrupted {
  Matrix y;   // features with masked entries replaced by 0.5 placeholders
  Mask mask;  // 1 observed, 0 missing
};

// random_entries masks exactly round(rate * N) positions, sampled without
// replacement, so mask cardinality is deterministic.
Corrupted corrupt(const FeatureSequence& fs, const CorruptionSpec& spec);

// Matrix CSV: line 1 "n,m,dt_hours", line 2 cell lengths, then n rows of m+1
// flows followed by m densities. Shortest round-trip decimals, LF endings.
void save_matrix_csv(const TrafficStateMatrix& ts, const std::string& path);
TrafficStateMatrix load_matrix_csv(const std::string& path);

struct CorpusConfig {
  CtmConfig base;                    // geometry and fundamental-diagram parameters
  std::size_t records = 2000;
  double train_fraction = 2.0 / 3.0;
  double incident_probability = 0.2;
  std::uint64_t seed = 0;
};

struct CorpusRecord {
  std::string id;
  TrafficStateMatrix ts;
  bool training = true;
};

struct Corpus {
  std::vector<CorpusRecord> records;
  std::uint64_t seed = 0;

  std::vector<const CorpusRecord*> split(bool training) const;
};

// Each record is one simulated hour; demand profiles are drawn from a seeded
// family (sinusoid with random base/amplitude/phase, plus occasional
// supply-drop incidents) so the corpus covers free-flow and congested regimes.
Corpus make_corpus(const CorpusConfig& config);

// Min/max per feature column over the training split only.
Scaler fit_scaler(const Corpus& corpus);

// One CSV per record plus manifest.csv (record id, file, split, corpus seed).
// Extra comment lines (provenance) go at the top of the manifest.
void save_corpus(const Corpus& corpus, const std::string& dir,
                 const std::vector<std::string>& comments = {});
Corpus load_corpus(const std::string& dir);

}  // namespace tse
