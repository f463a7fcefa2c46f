#include "tse/estimation.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "tse/errors.hpp"
#include "tse/rng.hpp"

namespace tse {

void LossWeights::validate() const {
  if (lambda_p < 0.0 || lambda_c < 0.0) {
    throw ValidationError("loss weights must be nonnegative");
  }
}

void EstimateConfig::validate() const {
  weights.validate();
  if (iterations < 1) throw ValidationError("estimate: iterations must be >= 1");
  if (restarts < 1) throw ValidationError("estimate: restarts must be >= 1");
  if (step_size <= 0.0) throw ValidationError("estimate: step_size must be positive");
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ValidationError(std::string(what) + ": shape mismatch (" +
                          std::to_string(a.rows) + "x" + std::to_string(a.cols) + " vs " +
                          std::to_string(b.rows) + "x" + std::to_string(b.cols) + ")");
  }
}

void check_geometry(const Matrix& gz, const Scaler& scaler, const CellGeometry& geometry) {
  if (geometry.dt_hours <= 0.0) {
    throw ValidationError("conservative_loss: dt must be positive");
  }
  for (double len : geometry.cell_lengths_km) {
    if (len <= 0.0) {
      throw ValidationError("conservative_loss: cell lengths must be positive");
    }
  }
  const std::size_t m = geometry.cell_lengths_km.size();
  if (gz.cols != 2 * m + 1) {
    throw ValidationError("conservative_loss: features have " + std::to_string(gz.cols) +
                          " columns, geometry implies " + std::to_string(2 * m + 1));
  }
  if (scaler.cols() != gz.cols) {
    throw ValidationError("conservative_loss: scaler/feature column mismatch");
  }
  if (gz.rows < 2) {
    throw ValidationError("conservative_loss: need at least two time steps");
  }
}

}  // namespace

double contextual_loss(const Matrix& gz, const Matrix& y, const Mask& mask) {
  check_same_shape(gz, y, "contextual_loss");
  check_same_shape(gz, mask.M, "contextual_loss");
  double sum = 0.0;
  for (std::size_t i = 0; i < gz.data.size(); ++i) {
    sum += mask.M.data[i] * std::abs(gz.data[i] - y.data[i]);
  }
  return sum;
}

double perceptual_loss(const DiscriminatorNet& net, const Matrix& gz) {
  return log_clamped(1.0 - discriminate(net, gz));
}

double conservative_loss(const Matrix& gz, const Scaler& scaler,
                         const CellGeometry& geometry) {
  check_geometry(gz, scaler, geometry);
  const std::size_t m = geometry.cell_lengths_km.size();
  const std::size_t n = gz.rows;
  const Matrix phys = denormalize_linear(gz, scaler);

  // Feature layout: columns 0..m are flows at detectors, m+1..2m densities.
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t s = 0; s < m; ++s) {
      const double ratio = geometry.dt_hours / geometry.cell_lengths_km[s];
      const double r = phys(t + 1, m + 1 + s) - phys(t, m + 1 + s) -
                       ratio * (phys(t, s) - phys(t, s + 1));
      sum += r * r;
    }
  }
  return sum / static_cast<double>((n - 1) * m);
}

Matrix conservative_loss_grad(const Matrix& gz, const Scaler& scaler,
                              const CellGeometry& geometry) {
  check_geometry(gz, scaler, geometry);
  const std::size_t m = geometry.cell_lengths_km.size();
  const std::size_t n = gz.rows;
  const Matrix phys = denormalize_linear(gz, scaler);
  const double inv_count = 1.0 / static_cast<double>((n - 1) * m);

  Matrix d_phys(n, gz.cols);
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t s = 0; s < m; ++s) {
      const double ratio = geometry.dt_hours / geometry.cell_lengths_km[s];
      const double r = phys(t + 1, m + 1 + s) - phys(t, m + 1 + s) -
                       ratio * (phys(t, s) - phys(t, s + 1));
      const double g = 2.0 * r * inv_count;
      d_phys(t + 1, m + 1 + s) += g;
      d_phys(t, m + 1 + s) -= g;
      d_phys(t, s) -= g * ratio;
      d_phys(t, s + 1) += g * ratio;
    }
  }

  // Chain through the linear de-normalization: d phys / d feature = range.
  Matrix d_gz(n, gz.cols);
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < gz.cols; ++j) {
      d_gz(t, j) = scaler.degenerate(j) ? 0.0 : d_phys(t, j) * scaler.range(j);
    }
  }
  return d_gz;
}

double total_loss(const Matrix& z, const GanModel& model, const Matrix& y,
                  const Mask& mask, const LossWeights& weights, const Scaler& scaler,
                  const CellGeometry& geometry) {
  weights.validate();
  const Matrix gz = generate(model.generator, z);
  double loss = contextual_loss(gz, y, mask);
  if (weights.lambda_p > 0.0) {
    loss += weights.lambda_p * perceptual_loss(model.discriminator, gz);
  }
  if (weights.lambda_c > 0.0) {
    loss += weights.lambda_c * conservative_loss(gz, scaler, geometry);
  }
  return loss;
}

LossAndGrad total_loss_and_grad(const Matrix& z, const GanModel& model, const Matrix& y,
                                const Mask& mask, const LossWeights& weights,
                                const Scaler& scaler, const CellGeometry& geometry) {
  weights.validate();
  GeneratorCache gen_cache;
  const Matrix gz = generate(model.generator, z, gen_cache);
  check_same_shape(gz, y, "total_loss");
  check_same_shape(gz, mask.M, "total_loss");

  LossAndGrad out;
  out.loss = contextual_loss(gz, y, mask);

  Matrix d_gz(gz.rows, gz.cols);
  for (std::size_t i = 0; i < gz.data.size(); ++i) {
    const double diff = gz.data[i] - y.data[i];
    d_gz.data[i] = mask.M.data[i] * ((diff > 0.0) ? 1.0 : (diff < 0.0 ? -1.0 : 0.0));
  }

  if (weights.lambda_p > 0.0) {
    DiscriminatorCache disc_cache;
    const double p = discriminate(model.discriminator, gz, disc_cache);
    out.loss += weights.lambda_p * log_clamped(1.0 - p);
    const double dp = (1.0 - p > kProbEps) ? -weights.lambda_p / (1.0 - p) : 0.0;
    const Matrix d_from_disc =
        discriminate_backward(model.discriminator, disc_cache, dp, nullptr);
    axpy(d_gz, 1.0, d_from_disc);
  }

  if (weights.lambda_c > 0.0) {
    out.loss += weights.lambda_c * conservative_loss(gz, scaler, geometry);
    axpy(d_gz, weights.lambda_c, conservative_loss_grad(gz, scaler, geometry));
  }

  out.dz = generate_backward(model.generator, gen_cache, d_gz, nullptr);
  return out;
}

EstimateResult estimate(const Checkpoint& model, const Matrix& y, const Mask& mask,
                        const EstimateConfig& config, const CellGeometry& geometry) {
  config.validate();
  if (y.rows != model.config.n_steps || y.cols != model.config.feature_dim) {
    throw ValidationError("estimate: input shape does not match the model config");
  }
  check_same_shape(y, mask.M, "estimate");

  EstimateResult result;
  result.loss_trace.reserve(config.restarts * (config.iterations + 1));
  double best_final = std::numeric_limits<double>::infinity();
  double best_so_far = std::numeric_limits<double>::infinity();

  for (std::size_t restart = 0; restart < config.restarts; ++restart) {
    Rng rng(hash_combine(config.seed, restart));
    Matrix z(model.config.n_steps, model.config.latent_dim);
    for (double& v : z.data) v = rng.uniform(-1.0, 1.0);

    double final_loss = 0.0;
    for (std::size_t it = 0; it <= config.iterations; ++it) {
      const LossAndGrad lg = total_loss_and_grad(z, model.model, y, mask,
                                                 config.weights, model.scaler, geometry);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("estimate: non-finite loss at iteration " +
                              std::to_string(it) + " of restart " +
                              std::to_string(restart));
      }
      best_so_far = std::min(best_so_far, lg.loss);
      result.loss_trace.push_back(best_so_far);
      final_loss = lg.loss;
      if (it < config.iterations) {
        axpy(z, -config.step_size, lg.dz);
        // Projected descent: the generator is only defined on the prior's
        // support, so z stays inside the unit box.
        for (double& v : z.data) v = std::clamp(v, -1.0, 1.0);
      }
    }

    if (final_loss < best_final) {
      best_final = final_loss;
      result.z_hat = z;
    }
  }

  result.gz_hat = generate(model.model.generator, result.z_hat);
  return result;
}

Matrix reconstruct(const Matrix& y, const Mask& mask, const Matrix& gz_hat) {
  check_same_shape(y, mask.M, "reconstruct");
  check_same_shape(y, gz_hat, "reconstruct");
  Matrix out(y.rows, y.cols);
  for (std::size_t i = 0; i < y.data.size(); ++i) {
    // Select, rather than blend, so observed entries are bit-identical.
    out.data[i] = (mask.M.data[i] != 0.0) ? y.data[i] : gz_hat.data[i];
  }
  return out;
}

}  // namespace tse
