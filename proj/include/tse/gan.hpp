#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tse/data.hpp"
#include "tse/lstm.hpp"
#include "tse/rng.hpp"
#include "tse/tensor.hpp"

namespace tse {

// Probabilities are clamped away from {0,1} by this margin before any log.
inline constexpr double kProbEps = 1e-7;

inline double log_clamped(double v) { return std::log(std::max(v, kProbEps)); }

struct GanConfig {
  std::size_t n_steps = 12;      // time steps per matrix
  std::size_t feature_dim = 11;  // 2m+1
  std::size_t hidden_size = 16;
  std::size_t latent_dim = 8;
  // The pair needs the discriminator slightly ahead of the generator: equal
  // rates with one d-step let the generator outrun into a saturated corner
  // and the game degenerates.
  double lr_d = 0.01;
  double lr_g = 0.0075;
  std::size_t d_steps_per_g_step = 2;
  std::size_t minibatch_size = 32;
  std::size_t epochs = 300;
  std::uint64_t seed = 1;
  // The generator descends -log D(G(z)) by default; the literal minimax form
  // log(1 - D(G(z))) stalls once the discriminator saturates (its gradient
  // scales with D(G(z))), so it is opt-in.
  bool non_saturating_g_loss = true;
  double grad_clip = 5.0;

  void validate() const;
};

// Four layers: input, LSTM, per-step dense layer with tanh, and a sigmoid
// output layer over the time-mean of the second hidden layer.
struct DiscriminatorNet {
  LstmParams lstm;   // input_size = feature_dim
  Matrix dense2_W;   // hidden_size x hidden_size
  Vector dense2_b;
  Matrix out_W;      // 1 x hidden_size
  double out_b = 0.0;
};

// LSTM over the latent sequence, then a per-step affine projection squashed
// with sigmoid into [0,1] normalized feature space.
struct GeneratorNet {
  LstmParams lstm;  // input_size = latent_dim
  Matrix out_W;     // feature_dim x hidden_size
  Vector out_b;     // feature_dim
};

struct GanModel {
  GeneratorNet generator;
  DiscriminatorNet discriminator;
};

GanModel init_gan(const GanConfig& config, Rng& rng);

// n_steps x latent_dim, entries uniform on [-1,1].
Matrix sample_latent(const GanConfig& config, Rng& rng);

struct DiscriminatorCache {
  LstmCache lstm;
  std::vector<Vector> s;  // tanh dense outputs per step
  Vector pooled;
  double logit = 0.0;
  double p = 0.0;
};

struct DiscriminatorGrads {
  LstmGrads lstm;
  Matrix dense2_W;
  Vector dense2_b;
  Matrix out_W;
  double out_b = 0.0;

  static DiscriminatorGrads zeros(const GanConfig& config);
  void accumulate(const DiscriminatorGrads& other);
  void scale(double s);
  void clip(double limit);
};

double discriminate(const DiscriminatorNet& net, const Matrix& features);
double discriminate(const DiscriminatorNet& net, const Matrix& features,
                    DiscriminatorCache& cache);

// Backpropagates dp = dE/dp through the discriminator. Returns dE/d(input
// features); parameter gradients are accumulated into *grads when non-null
// (pass null when the discriminator is frozen).
Matrix discriminate_backward(const DiscriminatorNet& net, const DiscriminatorCache& cache,
                             double dp, DiscriminatorGrads* grads);

struct GeneratorCache {
  LstmCache lstm;
  Matrix output;  // n_steps x feature_dim, after sigmoid
};

struct GeneratorGrads {
  LstmGrads lstm;
  Matrix out_W;
  Vector out_b;

  static GeneratorGrads zeros(const GanConfig& config);
  void accumulate(const GeneratorGrads& other);
  void scale(double s);
  void clip(double limit);
};

Matrix generate(const GeneratorNet& net, const Matrix& z);
Matrix generate(const GeneratorNet& net, const Matrix& z, GeneratorCache& cache);

// Returns dE/dz given dE/d(output); the channel the latent-space estimation
// descends. Parameter gradients accumulate into *grads when non-null.
Matrix generate_backward(const GeneratorNet& net, const GeneratorCache& cache,
                         const Matrix& d_output, GeneratorGrads* grads);

void sgd_apply(DiscriminatorNet& net, const DiscriminatorGrads& grads, double lr,
               SgdDirection direction);
void sgd_apply(GeneratorNet& net, const GeneratorGrads& grads, double lr,
               SgdDirection direction);

struct GanLossTerms {
  double d_loss = 0.0;  // -[log D(real) + log(1 - D(fake))]
  double g_loss = 0.0;  // log(1 - D(fake))
};

GanLossTerms gan_loss_terms(const DiscriminatorNet& net, const Matrix& real,
                            const Matrix& fake);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double d_loss = 0.0;
  double g_loss = 0.0;
  double d_accuracy = 0.0;  // on the minibatches seen this epoch
};

struct TrainResult {
  std::vector<EpochStats> history;
};

// Simultaneous minibatch SGD: per minibatch, d_steps_per_g_step discriminator
// steps descending d_loss, then one generator step descending g_loss through
// the frozen discriminator. Reproducible from config.seed; epochs
// (start_epoch, config.epochs] are run so training can resume.
TrainResult train(GanModel& model, const std::vector<Matrix>& dataset,
                  const GanConfig& config, std::size_t start_epoch = 0);

// Fraction of correct real/fake calls at threshold 0.5, over `reals` and an
// equal number of fresh generator samples.
double discriminator_accuracy(const GanModel& model, const GanConfig& config,
                              const std::vector<Matrix>& reals, Rng& rng);

// Trained model bundle; also the checkpoint file's in-memory form.
struct Checkpoint {
  int format_version = 1;
  GanConfig config;
  GanModel model;
  Scaler scaler;
  std::uint64_t seed = 0;
  std::size_t epochs_completed = 0;
};

enum class FloatEncoding { decimal, binary_le };

// Self-describing JSON document; parameter arrays are named and shaped, and
// stored either as decimals (round-trip exact) or raw little-endian 64-bit
// floats (hex), per the header flag. Loaders reject unknown format versions.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path,
                     FloatEncoding encoding = FloatEncoding::decimal);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace tse
