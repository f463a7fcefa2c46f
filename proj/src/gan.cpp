#include "tse/gan.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "tse/errors.hpp"

namespace tse {

using nlohmann::json;

void GanConfig::validate() const {
  if (n_steps < 1 || feature_dim < 1 || hidden_size < 1 || latent_dim < 1) {
    throw ValidationError("gan: all dimensions must be >= 1");
  }
  if (lr_d <= 0.0 || lr_g <= 0.0) {
    throw ValidationError("gan: learning rates must be positive");
  }
  if (d_steps_per_g_step < 1 || minibatch_size < 1 || epochs < 1) {
    throw ValidationError("gan: d_steps_per_g_step, minibatch_size and epochs must be >= 1");
  }
  if (grad_clip <= 0.0) {
    throw ValidationError("gan: grad_clip must be positive");
  }
}

GanModel init_gan(const GanConfig& config, Rng& rng) {
  config.validate();
  GanModel model;
  model.generator.lstm = LstmParams::seeded_init(config.hidden_size, config.latent_dim, rng);
  const double rg = 1.0 / std::sqrt(static_cast<double>(config.hidden_size));
  model.generator.out_W = Matrix(config.feature_dim, config.hidden_size);
  for (double& v : model.generator.out_W.data) v = rng.uniform(-rg, rg);
  model.generator.out_b = Vector(config.feature_dim, 0.0);

  model.discriminator.lstm =
      LstmParams::seeded_init(config.hidden_size, config.feature_dim, rng);
  model.discriminator.dense2_W = Matrix(config.hidden_size, config.hidden_size);
  for (double& v : model.discriminator.dense2_W.data) v = rng.uniform(-rg, rg);
  model.discriminator.dense2_b = Vector(config.hidden_size, 0.0);
  model.discriminator.out_W = Matrix(1, config.hidden_size);
  for (double& v : model.discriminator.out_W.data) v = rng.uniform(-rg, rg);
  model.discriminator.out_b = 0.0;
  return model;
}

Matrix sample_latent(const GanConfig& config, Rng& rng) {
  Matrix z(config.n_steps, config.latent_dim);
  for (double& v : z.data) v = rng.uniform(-1.0, 1.0);
  return z;
}

DiscriminatorGrads DiscriminatorGrads::zeros(const GanConfig& config) {
  DiscriminatorGrads g;
  g.lstm = LstmGrads::zeros(config.hidden_size, config.feature_dim);
  g.dense2_W = Matrix(config.hidden_size, config.hidden_size);
  g.dense2_b = Vector(config.hidden_size, 0.0);
  g.out_W = Matrix(1, config.hidden_size);
  g.out_b = 0.0;
  return g;
}

void DiscriminatorGrads::accumulate(const DiscriminatorGrads& other) {
  lstm.accumulate(other.lstm);
  axpy(dense2_W, 1.0, other.dense2_W);
  axpy(dense2_b, 1.0, other.dense2_b);
  axpy(out_W, 1.0, other.out_W);
  out_b += other.out_b;
}

void DiscriminatorGrads::scale(double s) {
  lstm.scale(s);
  for (double& v : dense2_W.data) v *= s;
  for (double& v : dense2_b) v *= s;
  for (double& v : out_W.data) v *= s;
  out_b *= s;
}

void DiscriminatorGrads::clip(double limit) {
  lstm.clip(limit);
  for (double& v : dense2_W.data) v = std::clamp(v, -limit, limit);
  for (double& v : dense2_b) v = std::clamp(v, -limit, limit);
  for (double& v : out_W.data) v = std::clamp(v, -limit, limit);
  out_b = std::clamp(out_b, -limit, limit);
}

GeneratorGrads GeneratorGrads::zeros(const GanConfig& config) {
  GeneratorGrads g;
  g.lstm = LstmGrads::zeros(config.hidden_size, config.latent_dim);
  g.out_W = Matrix(config.feature_dim, config.hidden_size);
  g.out_b = Vector(config.feature_dim, 0.0);
  return g;
}

void GeneratorGrads::accumulate(const GeneratorGrads& other) {
  lstm.accumulate(other.lstm);
  axpy(out_W, 1.0, other.out_W);
  axpy(out_b, 1.0, other.out_b);
}

void GeneratorGrads::scale(double s) {
  lstm.scale(s);
  for (double& v : out_W.data) v *= s;
  for (double& v : out_b) v *= s;
}

void GeneratorGrads::clip(double limit) {
  lstm.clip(limit);
  for (double& v : out_W.data) v = std::clamp(v, -limit, limit);
  for (double& v : out_b) v = std::clamp(v, -limit, limit);
}

namespace {

std::vector<Vector> matrix_rows(const Matrix& m) {
  std::vector<Vector> rows;
  rows.reserve(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) rows.push_back(m.row_vector(r));
  return rows;
}

}  // namespace

double discriminate(const DiscriminatorNet& net, const Matrix& features,
                    DiscriminatorCache& cache) {
  if (features.cols != net.lstm.input_size) {
    throw ValidationError("discriminate: features have " + std::to_string(features.cols) +
                          " columns, lstm expects " + std::to_string(net.lstm.input_size));
  }
  auto fwd = lstm_forward(net.lstm, matrix_rows(features));
  cache.lstm = std::move(fwd.cache);

  const std::size_t n = features.rows;
  const std::size_t hidden = net.lstm.hidden_size;
  cache.s.clear();
  cache.s.reserve(n);
  cache.pooled.assign(hidden, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    Vector a = matvec(net.dense2_W, fwd.outputs[t]);
    for (std::size_t k = 0; k < hidden; ++k) {
      a[k] = tanh_fn(a[k] + net.dense2_b[k]);
      cache.pooled[k] += a[k];
    }
    cache.s.push_back(std::move(a));
  }
  for (double& v : cache.pooled) v /= static_cast<double>(n);

  double logit = net.out_b;
  for (std::size_t k = 0; k < hidden; ++k) logit += net.out_W(0, k) * cache.pooled[k];
  cache.logit = logit;
  cache.p = sigmoid(logit);
  return cache.p;
}

double discriminate(const DiscriminatorNet& net, const Matrix& features) {
  DiscriminatorCache cache;
  return discriminate(net, features, cache);
}

Matrix discriminate_backward(const DiscriminatorNet& net, const DiscriminatorCache& cache,
                             double dp, DiscriminatorGrads* grads) {
  const std::size_t n = cache.s.size();
  const std::size_t hidden = net.lstm.hidden_size;
  const double dlogit = dp * cache.p * (1.0 - cache.p);

  if (grads) {
    grads->out_b += dlogit;
    for (std::size_t k = 0; k < hidden; ++k) {
      grads->out_W(0, k) += dlogit * cache.pooled[k];
    }
  }

  std::vector<Vector> dh(n, Vector(hidden, 0.0));
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t) {
    Vector da(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      const double ds = dlogit * net.out_W(0, k) * inv_n;
      da[k] = ds * (1.0 - cache.s[t][k] * cache.s[t][k]);
    }
    if (grads) {
      axpy(grads->dense2_W, 1.0, outer(da, cache.lstm.steps[t].h));
      axpy(grads->dense2_b, 1.0, da);
    }
    dh[t] = matvec_transposed(net.dense2_W, da);
  }

  auto back = lstm_backward(net.lstm, cache.lstm, dh);
  if (grads) grads->lstm.accumulate(back.grads);

  Matrix d_input(n, net.lstm.input_size);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < net.lstm.input_size; ++j) {
      d_input(t, j) = back.dx[t][j];
    }
  }
  return d_input;
}

Matrix generate(const GeneratorNet& net, const Matrix& z, GeneratorCache& cache) {
  if (z.cols != net.lstm.input_size) {
    throw ValidationError("generate: latent has " + std::to_string(z.cols) +
                          " columns, lstm expects " + std::to_string(net.lstm.input_size));
  }
  auto fwd = lstm_forward(net.lstm, matrix_rows(z));
  cache.lstm = std::move(fwd.cache);

  const std::size_t n = z.rows;
  const std::size_t out_dim = net.out_W.rows;
  cache.output = Matrix(n, out_dim);
  for (std::size_t t = 0; t < n; ++t) {
    Vector logit = matvec(net.out_W, fwd.outputs[t]);
    for (std::size_t j = 0; j < out_dim; ++j) {
      cache.output(t, j) = sigmoid(logit[j] + net.out_b[j]);
    }
  }
  return cache.output;
}

Matrix generate(const GeneratorNet& net, const Matrix& z) {
  GeneratorCache cache;
  return generate(net, z, cache);
}

Matrix generate_backward(const GeneratorNet& net, const GeneratorCache& cache,
                         const Matrix& d_output, GeneratorGrads* grads) {
  if (!d_output.same_shape(cache.output)) {
    throw ValidationError("generate_backward: d_output shape mismatch");
  }
  const std::size_t n = cache.output.rows;
  const std::size_t out_dim = cache.output.cols;
  const std::size_t hidden = net.lstm.hidden_size;

  std::vector<Vector> dh(n, Vector(hidden, 0.0));
  for (std::size_t t = 0; t < n; ++t) {
    Vector dlogit(out_dim);
    for (std::size_t j = 0; j < out_dim; ++j) {
      const double y = cache.output(t, j);
      dlogit[j] = d_output(t, j) * y * (1.0 - y);
    }
    if (grads) {
      axpy(grads->out_W, 1.0, outer(dlogit, cache.lstm.steps[t].h));
      axpy(grads->out_b, 1.0, dlogit);
    }
    dh[t] = matvec_transposed(net.out_W, dlogit);
  }

  auto back = lstm_backward(net.lstm, cache.lstm, dh);
  if (grads) grads->lstm.accumulate(back.grads);

  Matrix dz(n, net.lstm.input_size);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < net.lstm.input_size; ++j) dz(t, j) = back.dx[t][j];
  }
  return dz;
}

void sgd_apply(DiscriminatorNet& net, const DiscriminatorGrads& grads, double lr,
               SgdDirection direction) {
  if (!all_finite(grads.dense2_W) || !all_finite(grads.dense2_b) ||
      !all_finite(grads.out_W) || !std::isfinite(grads.out_b)) {
    throw DivergenceError("sgd_apply: non-finite discriminator gradients");
  }
  sgd_apply(net.lstm, grads.lstm, lr, direction);
  const double s = (direction == SgdDirection::descend) ? -lr : lr;
  axpy(net.dense2_W, s, grads.dense2_W);
  axpy(net.dense2_b, s, grads.dense2_b);
  axpy(net.out_W, s, grads.out_W);
  net.out_b += s * grads.out_b;
}

void sgd_apply(GeneratorNet& net, const GeneratorGrads& grads, double lr,
               SgdDirection direction) {
  if (!all_finite(grads.out_W) || !all_finite(grads.out_b)) {
    throw DivergenceError("sgd_apply: non-finite generator gradients");
  }
  sgd_apply(net.lstm, grads.lstm, lr, direction);
  const double s = (direction == SgdDirection::descend) ? -lr : lr;
  axpy(net.out_W, s, grads.out_W);
  axpy(net.out_b, s, grads.out_b);
}

GanLossTerms gan_loss_terms(const DiscriminatorNet& net, const Matrix& real,
                            const Matrix& fake) {
  const double p_real = discriminate(net, real);
  const double p_fake = discriminate(net, fake);
  GanLossTerms terms;
  terms.d_loss = -(log_clamped(p_real) + log_clamped(1.0 - p_fake));
  terms.g_loss = log_clamped(1.0 - p_fake);
  return terms;
}

TrainResult train(GanModel& model, const std::vector<Matrix>& dataset,
                  const GanConfig& config, std::size_t start_epoch) {
  config.validate();
  if (dataset.empty()) {
    throw ValidationError("train: no training data");
  }
  for (const Matrix& sample : dataset) {
    if (sample.rows != config.n_steps || sample.cols != config.feature_dim) {
      throw ValidationError("train: dataset matrix shape does not match config");
    }
  }
  if (start_epoch >= config.epochs) {
    throw ValidationError("train: start_epoch must be below config.epochs");
  }

  Rng rng(hash_combine(config.seed, start_epoch));
  TrainResult result;
  result.history.reserve(config.epochs - start_epoch);

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);

    double epoch_d_loss = 0.0;
    double epoch_g_loss = 0.0;
    std::size_t batches = 0;
    std::size_t correct = 0;
    std::size_t judged = 0;

    for (std::size_t start = 0; start < order.size(); start += config.minibatch_size) {
      // The two expectations in the minimax loss are estimated independently:
      // reals come from the shuffled epoch pass (short final chunk allowed),
      // latents are always a full minibatch.
      const std::size_t real_len = std::min(config.minibatch_size, order.size() - start);
      const std::size_t fake_len = config.minibatch_size;
      const double inv_real = 1.0 / static_cast<double>(real_len);
      const double inv_fake = 1.0 / static_cast<double>(fake_len);

      double batch_d_loss = 0.0;
      for (std::size_t k = 0; k < config.d_steps_per_g_step; ++k) {
        DiscriminatorGrads dgrads = DiscriminatorGrads::zeros(config);
        batch_d_loss = 0.0;
        for (std::size_t b = 0; b < real_len; ++b) {
          const Matrix& real = dataset[order[start + b]];
          DiscriminatorCache real_cache;
          const double p_real = discriminate(model.discriminator, real, real_cache);
          batch_d_loss -= log_clamped(p_real) * inv_real;
          const double dp_real = (p_real > kProbEps) ? -1.0 / p_real : 0.0;
          discriminate_backward(model.discriminator, real_cache, dp_real * inv_real,
                                &dgrads);
          if (k == 0) {
            correct += (p_real > 0.5) ? 1 : 0;
            ++judged;
          }
        }
        for (std::size_t b = 0; b < fake_len; ++b) {
          const Matrix z = sample_latent(config, rng);
          const Matrix fake = generate(model.generator, z);
          DiscriminatorCache fake_cache;
          const double p_fake = discriminate(model.discriminator, fake, fake_cache);
          batch_d_loss -= log_clamped(1.0 - p_fake) * inv_fake;
          const double dp_fake =
              (1.0 - p_fake > kProbEps) ? 1.0 / (1.0 - p_fake) : 0.0;
          discriminate_backward(model.discriminator, fake_cache, dp_fake * inv_fake,
                                &dgrads);
          if (k == 0) {
            correct += (p_fake < 0.5) ? 1 : 0;
            ++judged;
          }
        }
        dgrads.clip(config.grad_clip);
        sgd_apply(model.discriminator, dgrads, config.lr_d, SgdDirection::descend);
      }

      GeneratorGrads ggrads = GeneratorGrads::zeros(config);
      double batch_g_loss = 0.0;
      for (std::size_t b = 0; b < fake_len; ++b) {
        const Matrix z = sample_latent(config, rng);
        GeneratorCache gen_cache;
        const Matrix fake = generate(model.generator, z, gen_cache);
        DiscriminatorCache disc_cache;
        const double p = discriminate(model.discriminator, fake, disc_cache);
        double dp;
        if (config.non_saturating_g_loss) {
          batch_g_loss -= log_clamped(p);
          dp = (p > kProbEps) ? -1.0 / p : 0.0;
        } else {
          batch_g_loss += log_clamped(1.0 - p);
          dp = (1.0 - p > kProbEps) ? -1.0 / (1.0 - p) : 0.0;
        }
        const Matrix d_input =
            discriminate_backward(model.discriminator, disc_cache, dp * inv_fake, nullptr);
        generate_backward(model.generator, gen_cache, d_input, &ggrads);
      }
      batch_g_loss *= inv_fake;
      ggrads.clip(config.grad_clip);
      sgd_apply(model.generator, ggrads, config.lr_g, SgdDirection::descend);

      if (!std::isfinite(batch_d_loss) || !std::isfinite(batch_g_loss)) {
        throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      epoch_d_loss += batch_d_loss;
      epoch_g_loss += batch_g_loss;
      ++batches;
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.d_loss = epoch_d_loss / static_cast<double>(batches);
    stats.g_loss = epoch_g_loss / static_cast<double>(batches);
    stats.d_accuracy = judged ? static_cast<double>(correct) / static_cast<double>(judged) : 0.0;
    result.history.push_back(stats);
  }
  return result;
}

double discriminator_accuracy(const GanModel& model, const GanConfig& config,
                              const std::vector<Matrix>& reals, Rng& rng) {
  if (reals.empty()) throw ValidationError("discriminator_accuracy: no samples");
  std::size_t correct = 0;
  for (const Matrix& real : reals) {
    if (discriminate(model.discriminator, real) > 0.5) ++correct;
  }
  for (std::size_t i = 0; i < reals.size(); ++i) {
    const Matrix fake = generate(model.generator, sample_latent(config, rng));
    if (discriminate(model.discriminator, fake) < 0.5) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(2 * reals.size());
}

// ---------------------------------------------------------------------------
// Checkpoint I/O

namespace {

std::string hex_encode(const std::vector<double>& values) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(values.size() * 16);
  for (double v : values) {
    unsigned char bytes[8];
    std::memcpy(bytes, &v, 8);  // little-endian on every supported target
    for (int i = 0; i < 8; ++i) {
      out.push_back(digits[bytes[i] >> 4]);
      out.push_back(digits[bytes[i] & 0xf]);
    }
  }
  return out;
}

std::vector<double> hex_decode(const std::string& hex, const std::string& name) {
  if (hex.size() % 16 != 0) {
    throw IoError("checkpoint: '" + name + "' hex payload has invalid length");
  }
  auto nibble = [&](char c) -> unsigned {
    if (c >= '0' && c <= '9') return static_cast<unsigned>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<unsigned>(c - 'a' + 10);
    throw IoError("checkpoint: '" + name + "' contains a non-hex character");
  };
  std::vector<double> out(hex.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    unsigned char bytes[8];
    for (int b = 0; b < 8; ++b) {
      bytes[b] = static_cast<unsigned char>((nibble(hex[i * 16 + 2 * b]) << 4) |
                                            nibble(hex[i * 16 + 2 * b + 1]));
    }
    std::memcpy(&out[i], bytes, 8);
  }
  return out;
}

json encode_values(const std::vector<double>& values, FloatEncoding enc) {
  if (enc == FloatEncoding::decimal) return json(values);
  return json(hex_encode(values));
}

std::vector<double> decode_values(const json& j, FloatEncoding enc, const std::string& name) {
  if (enc == FloatEncoding::decimal) {
    if (!j.is_array()) throw IoError("checkpoint: '" + name + "' must be an array");
    return j.get<std::vector<double>>();
  }
  if (!j.is_string()) throw IoError("checkpoint: '" + name + "' must be a hex string");
  return hex_decode(j.get<std::string>(), name);
}

json encode_matrix(const Matrix& m, FloatEncoding enc) {
  return json{{"rows", m.rows}, {"cols", m.cols}, {"data", encode_values(m.data, enc)}};
}

Matrix decode_matrix(const json& j, FloatEncoding enc, const std::string& name) {
  Matrix m;
  m.rows = j.at("rows").get<std::size_t>();
  m.cols = j.at("cols").get<std::size_t>();
  m.data = decode_values(j.at("data"), enc, name);
  if (m.data.size() != m.rows * m.cols) {
    throw IoError("checkpoint: '" + name + "' data length disagrees with its shape");
  }
  return m;
}

json encode_lstm(const LstmParams& p, FloatEncoding enc) {
  return json{{"hidden_size", p.hidden_size},
              {"input_size", p.input_size},
              {"W_fh", encode_matrix(p.W_fh, enc)},
              {"W_fx", encode_matrix(p.W_fx, enc)},
              {"W_ih", encode_matrix(p.W_ih, enc)},
              {"W_ix", encode_matrix(p.W_ix, enc)},
              {"W_ch", encode_matrix(p.W_ch, enc)},
              {"W_cx", encode_matrix(p.W_cx, enc)},
              {"W_oh", encode_matrix(p.W_oh, enc)},
              {"W_ox", encode_matrix(p.W_ox, enc)},
              {"b_f", encode_values(p.b_f, enc)},
              {"b_i", encode_values(p.b_i, enc)},
              {"b_c", encode_values(p.b_c, enc)},
              {"b_o", encode_values(p.b_o, enc)}};
}

LstmParams decode_lstm(const json& j, FloatEncoding enc, const std::string& name) {
  LstmParams p;
  p.hidden_size = j.at("hidden_size").get<std::size_t>();
  p.input_size = j.at("input_size").get<std::size_t>();
  p.W_fh = decode_matrix(j.at("W_fh"), enc, name + ".W_fh");
  p.W_fx = decode_matrix(j.at("W_fx"), enc, name + ".W_fx");
  p.W_ih = decode_matrix(j.at("W_ih"), enc, name + ".W_ih");
  p.W_ix = decode_matrix(j.at("W_ix"), enc, name + ".W_ix");
  p.W_ch = decode_matrix(j.at("W_ch"), enc, name + ".W_ch");
  p.W_cx = decode_matrix(j.at("W_cx"), enc, name + ".W_cx");
  p.W_oh = decode_matrix(j.at("W_oh"), enc, name + ".W_oh");
  p.W_ox = decode_matrix(j.at("W_ox"), enc, name + ".W_ox");
  p.b_f = decode_values(j.at("b_f"), enc, name + ".b_f");
  p.b_i = decode_values(j.at("b_i"), enc, name + ".b_i");
  p.b_c = decode_values(j.at("b_c"), enc, name + ".b_c");
  p.b_o = decode_values(j.at("b_o"), enc, name + ".b_o");
  return p;
}

json encode_config(const GanConfig& c) {
  return json{{"n_steps", c.n_steps},
              {"feature_dim", c.feature_dim},
              {"hidden_size", c.hidden_size},
              {"latent_dim", c.latent_dim},
              {"lr_d", c.lr_d},
              {"lr_g", c.lr_g},
              {"d_steps_per_g_step", c.d_steps_per_g_step},
              {"minibatch_size", c.minibatch_size},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"non_saturating_g_loss", c.non_saturating_g_loss},
              {"grad_clip", c.grad_clip}};
}

GanConfig decode_config(const json& j) {
  GanConfig c;
  c.n_steps = j.at("n_steps").get<std::size_t>();
  c.feature_dim = j.at("feature_dim").get<std::size_t>();
  c.hidden_size = j.at("hidden_size").get<std::size_t>();
  c.latent_dim = j.at("latent_dim").get<std::size_t>();
  c.lr_d = j.at("lr_d").get<double>();
  c.lr_g = j.at("lr_g").get<double>();
  c.d_steps_per_g_step = j.at("d_steps_per_g_step").get<std::size_t>();
  c.minibatch_size = j.at("minibatch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.non_saturating_g_loss = j.at("non_saturating_g_loss").get<bool>();
  c.grad_clip = j.at("grad_clip").get<double>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path,
                     FloatEncoding encoding) {
  json doc;
  doc["kind"] = "gan-checkpoint";
  doc["format_version"] = ckpt.format_version;
  doc["float_encoding"] = (encoding == FloatEncoding::decimal) ? "decimal" : "binary_le";
  doc["seed"] = ckpt.seed;
  doc["epochs_completed"] = ckpt.epochs_completed;
  doc["config"] = encode_config(ckpt.config);
  doc["scaler"] = json{{"mins", encode_values(ckpt.scaler.mins, encoding)},
                       {"maxs", encode_values(ckpt.scaler.maxs, encoding)}};
  doc["generator"] = json{{"lstm", encode_lstm(ckpt.model.generator.lstm, encoding)},
                          {"out_W", encode_matrix(ckpt.model.generator.out_W, encoding)},
                          {"out_b", encode_values(ckpt.model.generator.out_b, encoding)}};
  doc["discriminator"] =
      json{{"lstm", encode_lstm(ckpt.model.discriminator.lstm, encoding)},
           {"dense2_W", encode_matrix(ckpt.model.discriminator.dense2_W, encoding)},
           {"dense2_b", encode_values(ckpt.model.discriminator.dense2_b, encoding)},
           {"out_W", encode_matrix(ckpt.model.discriminator.out_W, encoding)},
           {"out_b", ckpt.model.discriminator.out_b}};

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << doc.dump(1) << "\n";
  if (!f) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "' is not valid JSON: " + e.what());
  }
  try {
    Checkpoint ckpt;
    ckpt.format_version = doc.at("format_version").get<int>();
    if (ckpt.format_version != 1) {
      throw IoError("checkpoint '" + path + "' has unsupported format version " +
                    std::to_string(ckpt.format_version));
    }
    const std::string enc_name = doc.at("float_encoding").get<std::string>();
    FloatEncoding enc;
    if (enc_name == "decimal") {
      enc = FloatEncoding::decimal;
    } else if (enc_name == "binary_le") {
      enc = FloatEncoding::binary_le;
    } else {
      throw IoError("checkpoint '" + path + "' has unknown float encoding '" +
                    enc_name + "'");
    }
    ckpt.seed = doc.at("seed").get<std::uint64_t>();
    ckpt.epochs_completed = doc.at("epochs_completed").get<std::size_t>();
    ckpt.config = decode_config(doc.at("config"));
    ckpt.scaler.mins = decode_values(doc.at("scaler").at("mins"), enc, "scaler.mins");
    ckpt.scaler.maxs = decode_values(doc.at("scaler").at("maxs"), enc, "scaler.maxs");
    const json& gen = doc.at("generator");
    ckpt.model.generator.lstm = decode_lstm(gen.at("lstm"), enc, "generator.lstm");
    ckpt.model.generator.out_W = decode_matrix(gen.at("out_W"), enc, "generator.out_W");
    ckpt.model.generator.out_b = decode_values(gen.at("out_b"), enc, "generator.out_b");
    const json& disc = doc.at("discriminator");
    ckpt.model.discriminator.lstm = decode_lstm(disc.at("lstm"), enc, "discriminator.lstm");
    ckpt.model.discriminator.dense2_W =
        decode_matrix(disc.at("dense2_W"), enc, "discriminator.dense2_W");
    ckpt.model.discriminator.dense2_b =
        decode_values(disc.at("dense2_b"), enc, "discriminator.dense2_b");
    ckpt.model.discriminator.out_W =
        decode_matrix(disc.at("out_W"), enc, "discriminator.out_W");
    ckpt.model.discriminator.out_b = disc.at("out_b").get<double>();
    return ckpt;
  } catch (const json::exception& e) {
    throw IoError("checkpoint '" + path + "' is malformed: " + e.what());
  }
}

}  // namespace tse
