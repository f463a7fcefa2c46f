#include "tse/gradcheck.hpp"

#include <cmath>
#include <cstdio>
#include <functional>

#include "tse/estimation.hpp"
#include "tse/rng.hpp"

namespace tse {

double gradient_relative_error(double analytic, double numeric) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= 1e-9) return 0.0;
  return diff / std::max(std::abs(analytic), std::abs(numeric));
}

double GradCheckReport::overall_max() const {
  double m = std::max({lstm_max, generator_through_discriminator_max, z_gradient_max});
  for (const auto& f : families) m = std::max(m, f.max_rel_error);
  return m;
}

namespace {

struct FamilyTracker {
  std::vector<GradCheckFamily>* families;

  void update(const std::string& name, double err) {
    for (auto& f : *families) {
      if (f.name == name) {
        f.max_rel_error = std::max(f.max_rel_error, err);
        return;
      }
    }
    families->push_back({name, err});
  }
};

// E = sum_t dot(weight_t, h_t): a scalar readout with fixed random weights so
// every gradient path is exercised.
double readout(const LstmParams& params, const std::vector<Vector>& inputs,
               const std::vector<Vector>& weights) {
  const auto fwd = lstm_forward(params, inputs);
  double e = 0.0;
  for (std::size_t t = 0; t < fwd.outputs.size(); ++t) {
    for (std::size_t k = 0; k < fwd.outputs[t].size(); ++k) {
      e += weights[t][k] * fwd.outputs[t][k];
    }
  }
  return e;
}

double fd_slope(const std::function<double()>& eval, double* slot) {
  const double saved = *slot;
  *slot = saved + kFdEpsilon;
  const double up = eval();
  *slot = saved - kFdEpsilon;
  const double down = eval();
  *slot = saved;
  return (up - down) / (2.0 * kFdEpsilon);
}

double check_lstm_instance(std::size_t hidden, std::size_t input, std::size_t n,
                           std::uint64_t seed, FamilyTracker& tracker,
                           bool corrupt_gradient) {
  Rng rng(seed);
  LstmParams params = LstmParams::seeded_init(hidden, input, rng);
  std::vector<Vector> inputs(n, Vector(input));
  for (auto& x : inputs) {
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  }
  std::vector<Vector> weights(n, Vector(hidden));
  for (auto& w : weights) {
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
  }

  const auto fwd = lstm_forward(params, inputs);
  auto back = lstm_backward(params, fwd.cache, weights);
  if (corrupt_gradient && !back.grads.W_ch.data.empty()) {
    back.grads.W_ch.data[0] += 1.0;
  }

  const auto eval = [&] { return readout(params, inputs, weights); };

  double worst = 0.0;
  const auto check_matrix = [&](const char* name, Matrix& live, const Matrix& analytic) {
    for (std::size_t idx = 0; idx < live.data.size(); ++idx) {
      const double numeric = fd_slope(eval, &live.data[idx]);
      const double err = gradient_relative_error(analytic.data[idx], numeric);
      tracker.update(name, err);
      worst = std::max(worst, err);
    }
  };
  const auto check_vector = [&](const char* name, Vector& live, const Vector& analytic) {
    for (std::size_t idx = 0; idx < live.size(); ++idx) {
      const double numeric = fd_slope(eval, &live[idx]);
      const double err = gradient_relative_error(analytic[idx], numeric);
      tracker.update(name, err);
      worst = std::max(worst, err);
    }
  };

  check_matrix("W_oh", params.W_oh, back.grads.W_oh);
  check_matrix("W_fh", params.W_fh, back.grads.W_fh);
  check_matrix("W_ih", params.W_ih, back.grads.W_ih);
  check_matrix("W_ch", params.W_ch, back.grads.W_ch);
  check_matrix("W_ox", params.W_ox, back.grads.W_ox);
  check_matrix("W_fx", params.W_fx, back.grads.W_fx);
  check_matrix("W_ix", params.W_ix, back.grads.W_ix);
  check_matrix("W_cx", params.W_cx, back.grads.W_cx);
  check_vector("b_o", params.b_o, back.grads.b_o);
  check_vector("b_f", params.b_f, back.grads.b_f);
  check_vector("b_i", params.b_i, back.grads.b_i);
  check_vector("b_c", params.b_c, back.grads.b_c);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t j = 0; j < input; ++j) {
      const double numeric = fd_slope(eval, &inputs[t][j]);
      const double err = gradient_relative_error(back.dx[t][j], numeric);
      tracker.update("d_input", err);
      worst = std::max(worst, err);
    }
  }
  return worst;
}

// g_loss = log(1 - D(G(z))) as a function of generator parameters, with the
// discriminator frozen.
double check_composed_instance(std::uint64_t seed, double* z_grad_max) {
  GanConfig config;
  config.n_steps = 3;
  config.feature_dim = 5;  // 2 cells
  config.hidden_size = 2;
  config.latent_dim = 2;

  Rng rng(seed);
  GanModel model = init_gan(config, rng);
  const Matrix z = sample_latent(config, rng);

  const auto g_loss = [&] {
    const Matrix fake = generate(model.generator, z);
    return log_clamped(1.0 - discriminate(model.discriminator, fake));
  };

  GeneratorCache gen_cache;
  const Matrix fake = generate(model.generator, z, gen_cache);
  DiscriminatorCache disc_cache;
  const double p = discriminate(model.discriminator, fake, disc_cache);
  const double dp = (1.0 - p > kProbEps) ? -1.0 / (1.0 - p) : 0.0;
  GeneratorGrads ggrads = GeneratorGrads::zeros(config);
  const Matrix d_input = discriminate_backward(model.discriminator, disc_cache, dp, nullptr);
  generate_backward(model.generator, gen_cache, d_input, &ggrads);

  double worst = 0.0;
  const auto sweep_matrix = [&](Matrix& live, const Matrix& analytic) {
    for (std::size_t idx = 0; idx < live.data.size(); ++idx) {
      const double numeric = fd_slope(g_loss, &live.data[idx]);
      worst = std::max(worst, gradient_relative_error(analytic.data[idx], numeric));
    }
  };
  const auto sweep_vector = [&](Vector& live, const Vector& analytic) {
    for (std::size_t idx = 0; idx < live.size(); ++idx) {
      const double numeric = fd_slope(g_loss, &live[idx]);
      worst = std::max(worst, gradient_relative_error(analytic[idx], numeric));
    }
  };
  sweep_matrix(model.generator.lstm.W_fh, ggrads.lstm.W_fh);
  sweep_matrix(model.generator.lstm.W_fx, ggrads.lstm.W_fx);
  sweep_matrix(model.generator.lstm.W_ih, ggrads.lstm.W_ih);
  sweep_matrix(model.generator.lstm.W_ix, ggrads.lstm.W_ix);
  sweep_matrix(model.generator.lstm.W_ch, ggrads.lstm.W_ch);
  sweep_matrix(model.generator.lstm.W_cx, ggrads.lstm.W_cx);
  sweep_matrix(model.generator.lstm.W_oh, ggrads.lstm.W_oh);
  sweep_matrix(model.generator.lstm.W_ox, ggrads.lstm.W_ox);
  sweep_vector(model.generator.lstm.b_f, ggrads.lstm.b_f);
  sweep_vector(model.generator.lstm.b_i, ggrads.lstm.b_i);
  sweep_vector(model.generator.lstm.b_c, ggrads.lstm.b_c);
  sweep_vector(model.generator.lstm.b_o, ggrads.lstm.b_o);
  sweep_matrix(model.generator.out_W, ggrads.out_W);
  sweep_vector(model.generator.out_b, ggrads.out_b);

  // Total estimation loss with respect to z, all three terms active.
  const std::size_t m = (config.feature_dim - 1) / 2;
  CellGeometry geometry;
  geometry.dt_hours = 1.0 / 12.0;
  geometry.cell_lengths_km.assign(m, 0.5);
  Scaler scaler;
  scaler.mins.assign(config.feature_dim, 0.0);
  scaler.maxs.assign(config.feature_dim, 0.0);
  for (std::size_t j = 0; j <= m; ++j) scaler.maxs[j] = 2000.0;
  for (std::size_t j = m + 1; j < config.feature_dim; ++j) scaler.maxs[j] = 150.0;

  Matrix y(config.n_steps, config.feature_dim);
  for (double& v : y.data) v = rng.uniform(0.0, 1.0);
  Mask mask = Mask::ones(config.n_steps, config.feature_dim);
  for (double& v : mask.M.data) v = (rng.uniform() < 0.3) ? 0.0 : 1.0;
  const LossWeights weights{0.1, 0.01};

  Matrix z_live = z;
  const LossAndGrad lg =
      total_loss_and_grad(z_live, model, y, mask, weights, scaler, geometry);
  const auto loss_eval = [&] {
    return total_loss(z_live, model, y, mask, weights, scaler, geometry);
  };
  for (std::size_t idx = 0; idx < z_live.data.size(); ++idx) {
    const double numeric = fd_slope(loss_eval, &z_live.data[idx]);
    *z_grad_max =
        std::max(*z_grad_max, gradient_relative_error(lg.dz.data[idx], numeric));
  }
  return worst;
}

}  // namespace

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  GradCheckReport report;
  FamilyTracker tracker{&report.families};

  bool corrupt_pending = options.corrupt_gradient;
  for (std::size_t hidden : options.hidden_sizes) {
    for (std::size_t input : options.input_sizes) {
      for (std::size_t n : options.step_counts) {
        for (std::size_t s = 0; s < options.seeds_per_combo; ++s) {
          const std::uint64_t seed = hash_combine(
              options.seed, hash_combine(hidden * 1000 + input * 100 + n, s));
          const double worst =
              check_lstm_instance(hidden, input, n, seed, tracker, corrupt_pending);
          corrupt_pending = false;  // one corrupted instance is enough to trip
          report.lstm_max = std::max(report.lstm_max, worst);
          ++report.instances;
        }
      }
    }
  }

  for (std::size_t i = 0; i < options.composed_instances; ++i) {
    const double worst = check_composed_instance(hash_combine(options.seed, 7000 + i),
                                                 &report.z_gradient_max);
    report.generator_through_discriminator_max =
        std::max(report.generator_through_discriminator_max, worst);
  }
  return report;
}

void print_gradcheck_report(const GradCheckReport& report, double tolerance) {
  std::printf("gradient check: %zu lstm instances\n", report.instances);
  for (const auto& f : report.families) {
    std::printf("  %-8s max relative error %.3e\n", f.name.c_str(), f.max_rel_error);
  }
  std::printf("  lstm overall                    %.3e\n", report.lstm_max);
  std::printf("  generator through discriminator %.3e\n",
              report.generator_through_discriminator_max);
  std::printf("  total loss wrt z                %.3e\n", report.z_gradient_max);
  std::printf("result: %s (tolerance %.1e)\n", report.pass(tolerance) ? "PASS" : "FAIL",
              tolerance);
}

}  // namespace tse
