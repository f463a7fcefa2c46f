#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "tse/data.hpp"
#include "tse/errors.hpp"
#include "tse/estimation.hpp"

#include "test_util.hpp"

using namespace tse;

namespace {

// Generator whose two output entries are independent monotone functions of
// the two latent entries; the toy for comparing against a grid search.
Checkpoint toy_model() {
  GanConfig cfg;
  cfg.n_steps = 1;
  cfg.feature_dim = 2;
  cfg.hidden_size = 2;
  cfg.latent_dim = 2;

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.model.generator.lstm = LstmParams::zeros(2, 2);
  ckpt.model.generator.lstm.W_cx(0, 0) = 3.0;
  ckpt.model.generator.lstm.W_cx(1, 1) = 3.0;
  ckpt.model.generator.out_W = Matrix(2, 2);
  ckpt.model.generator.out_W(0, 0) = 8.0;
  ckpt.model.generator.out_W(1, 1) = 8.0;
  ckpt.model.generator.out_b = Vector(2, 0.0);

  ckpt.model.discriminator.lstm = LstmParams::zeros(2, 2);
  ckpt.model.discriminator.dense2_W = Matrix(2, 2);
  ckpt.model.discriminator.dense2_b = Vector(2, 0.0);
  ckpt.model.discriminator.out_W = Matrix(1, 2);
  ckpt.model.discriminator.out_b = 0.0;

  ckpt.scaler.mins = {0.0, 0.0};
  ckpt.scaler.maxs = {1.0, 1.0};
  return ckpt;
}

CellGeometry toy_geometry(std::size_t m) {
  CellGeometry g;
  g.dt_hours = 1.0 / 12.0;
  g.cell_lengths_km.assign(m, 0.5);
  return g;
}

Scaler physical_scaler(std::size_t m) {
  Scaler sc;
  const std::size_t cols = 2 * m + 1;
  sc.mins.assign(cols, 0.0);
  sc.maxs.assign(cols, 0.0);
  for (std::size_t j = 0; j <= m; ++j) sc.maxs[j] = 2000.0;
  for (std::size_t j = m + 1; j < cols; ++j) sc.maxs[j] = 100.0;
  return sc;
}

}  // namespace

TEST_CASE("contextual loss") {
  Matrix gz(2, 2), y(2, 2);
  gz(0, 0) = 1;
  gz(0, 1) = 2;
  gz(1, 0) = 3;
  gz(1, 1) = 4;
  y(0, 0) = 0;
  y(0, 1) = 2;
  y(1, 0) = 3;
  y(1, 1) = 0;

  SUBCASE("identical matrices under a full mask") {
    CHECK(contextual_loss(y, y, Mask::ones(2, 2)) == 0.0);
  }

  SUBCASE("an all-zero mask ignores everything") {
    Mask none{Matrix(2, 2, 0.0)};
    CHECK(contextual_loss(gz, y, none) == 0.0);
  }

  SUBCASE("hand-computed 2x2 case") {
    Mask mask = Mask::ones(2, 2);
    mask.M(1, 1) = 0.0;
    CHECK(contextual_loss(gz, y, mask) == 1.0);
  }

  SUBCASE("masked entries of y never matter") {
    Mask mask = Mask::ones(2, 2);
    mask.M(0, 1) = 0.0;
    const double base = contextual_loss(gz, y, mask);
    Matrix y2 = y;
    y2(0, 1) = 1e9;
    CHECK(contextual_loss(gz, y2, mask) == base);
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(contextual_loss(gz, Matrix(3, 2), Mask::ones(2, 2)), ValidationError);
  }
}

TEST_CASE("perceptual loss") {
  Checkpoint ckpt = toy_model();

  SUBCASE("a constant-half discriminator gives exactly log 0.5") {
    Matrix gz(1, 2, 0.3);
    CHECK(perceptual_loss(ckpt.model.discriminator, gz) ==
          doctest::Approx(std::log(0.5)).epsilon(1e-15));
  }

  SUBCASE("higher discriminator score means lower perceptual loss") {
    // Make D respond to the first feature.
    DiscriminatorNet net = ckpt.model.discriminator;
    net.lstm.W_cx(0, 0) = 10.0;
    net.dense2_W(0, 0) = 5.0;
    net.out_W(0, 0) = 5.0;
    Matrix high(1, 2, 0.0), low(1, 2, 0.0);
    high(0, 0) = 1.0;
    low(0, 0) = -1.0;
    REQUIRE(discriminate(net, high) > discriminate(net, low));
    CHECK(perceptual_loss(net, high) < perceptual_loss(net, low));
  }
}

TEST_CASE("conservative loss") {
  const std::size_t m = 1;
  const Scaler sc = physical_scaler(m);
  const CellGeometry geom = toy_geometry(m);

  // Features encode: flow in 1860, flow out 1800, densities 10 then k_next.
  const auto features_for = [&](double k_next) {
    Matrix gz(2, 3);
    gz(0, 0) = 1860.0 / 2000.0;
    gz(0, 1) = 1800.0 / 2000.0;
    gz(0, 2) = 10.0 / 100.0;
    gz(1, 0) = 1860.0 / 2000.0;
    gz(1, 1) = 1800.0 / 2000.0;
    gz(1, 2) = k_next / 100.0;
    return gz;
  };

  SUBCASE("exactly conserved transition has zero residual") {
    // dk = (1/12)/0.5 * 60 = 10
    CHECK(conservative_loss(features_for(20.0), sc, geom) ==
          doctest::Approx(0.0).epsilon(1e-18));
  }

  SUBCASE("one extra vehicle per km costs a squared residual of one") {
    CHECK(conservative_loss(features_for(21.0), sc, geom) ==
          doctest::Approx(1.0).epsilon(1e-9));
  }

  SUBCASE("simulator output is conserved to rounding") {
    CtmConfig cfg = CtmConfig::i5_preset();
    cfg.seed = 31;
    cfg.noise_std_veh_h = 120.0;
    cfg.demand_profile.assign(cfg.n, 1500.0);
    const TrafficStateMatrix ts = ctm_simulate(cfg);
    const FeatureSequence fsq = to_features(ts);
    CHECK(conservative_loss(fsq.features, fsq.scaler, ts.geometry()) < 1e-18);
  }

  SUBCASE("bad geometry is rejected") {
    CellGeometry bad = geom;
    bad.dt_hours = 0.0;
    CHECK_THROWS_AS(conservative_loss(features_for(20.0), sc, bad), ValidationError);
    bad = geom;
    bad.cell_lengths_km[0] = -1.0;
    CHECK_THROWS_AS(conservative_loss(features_for(20.0), sc, bad), ValidationError);
  }

  SUBCASE("gradient matches finite differences") {
    Rng rng(3);
    Matrix gz(4, 3);
    for (double& v : gz.data) v = rng.uniform(0.1, 0.9);
    const Matrix grad = conservative_loss_grad(gz, sc, geom);
    for (std::size_t i = 0; i < gz.data.size(); ++i) {
      const double numeric = fd_central(
          [&] { return conservative_loss(gz, sc, geom); }, &gz.data[i], 1e-6);
      CHECK(rel_error(grad.data[i], numeric) < 1e-4);
    }
  }
}

TEST_CASE("total loss composition") {
  Checkpoint ckpt = toy_model();
  // Give the discriminator some structure so the perceptual term is not
  // identically log 0.5.
  ckpt.model.discriminator.lstm.W_cx(0, 0) = 4.0;
  ckpt.model.discriminator.dense2_W(0, 0) = 2.0;
  ckpt.model.discriminator.out_W(0, 0) = 2.0;

  // A 2-cell geometry needs 5 feature columns; rebuild the generator wider.
  GanConfig cfg;
  cfg.n_steps = 3;
  cfg.feature_dim = 5;
  cfg.hidden_size = 3;
  cfg.latent_dim = 2;
  Rng rng(21);
  Checkpoint wide;
  wide.config = cfg;
  wide.model = init_gan(cfg, rng);
  wide.scaler = physical_scaler(2);
  const CellGeometry geom = toy_geometry(2);

  Matrix y(3, 5);
  for (double& v : y.data) v = rng.uniform(0.0, 1.0);
  Mask mask = Mask::ones(3, 5);
  mask.M(0, 1) = 0.0;
  mask.M(2, 4) = 0.0;
  const Matrix z = sample_latent(cfg, rng);
  const Matrix gz = generate(wide.model.generator, z);

  SUBCASE("zero weights reduce to the contextual loss") {
    const double t = total_loss(z, wide.model, y, mask, LossWeights{0.0, 0.0},
                                wide.scaler, geom);
    CHECK(std::abs(t - contextual_loss(gz, y, mask)) < 1e-15);
  }

  SUBCASE("lambda_c = 0 keeps contextual plus weighted perceptual") {
    const double t = total_loss(z, wide.model, y, mask, LossWeights{0.3, 0.0},
                                wide.scaler, geom);
    const double expect = contextual_loss(gz, y, mask) +
                          0.3 * perceptual_loss(wide.model.discriminator, gz);
    CHECK(t == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("all three components add up") {
    const LossWeights w{0.2, 0.05};
    const double t = total_loss(z, wide.model, y, mask, w, wide.scaler, geom);
    const double expect = contextual_loss(gz, y, mask) +
                          w.lambda_p * perceptual_loss(wide.model.discriminator, gz) +
                          w.lambda_c * conservative_loss(gz, wide.scaler, geom);
    CHECK(t == doctest::Approx(expect).epsilon(1e-12));
  }

  SUBCASE("gradient with respect to z matches finite differences") {
    const LossWeights w{0.2, 0.05};
    Matrix z_live = z;
    const LossAndGrad lg =
        total_loss_and_grad(z_live, wide.model, y, mask, w, wide.scaler, geom);
    CHECK(lg.loss == doctest::Approx(total_loss(z, wide.model, y, mask, w, wide.scaler,
                                                geom)).epsilon(1e-12));
    for (std::size_t i = 0; i < z_live.data.size(); ++i) {
      const double numeric = fd_central(
          [&] { return total_loss(z_live, wide.model, y, mask, w, wide.scaler, geom); },
          &z_live.data[i]);
      CHECK(rel_error(lg.dz.data[i], numeric) < 1e-4);
    }
  }
}

TEST_CASE("latent descent finds the grid-search optimum on the affine toy") {
  const Checkpoint ckpt = toy_model();
  const CellGeometry geom = toy_geometry(0);  // unused: lambda_c = 0

  // Target generated by a known latent, so the optimum loss is ~0.
  Matrix z_star(1, 2);
  z_star(0, 0) = 0.31;
  z_star(0, 1) = -0.54;
  const Matrix y = generate(ckpt.model.generator, z_star);
  Mask mask = Mask::ones(1, 2);

  EstimateConfig cfg;
  cfg.iterations = 400;
  cfg.step_size = 0.1;
  cfg.restarts = 5;
  cfg.seed = 11;
  cfg.weights = LossWeights{0.0, 0.0};

  CellGeometry geom1 = toy_geometry(0);
  geom1.cell_lengths_km = {};  // feature_dim 2 has no conservation structure
  const EstimateResult res = estimate(ckpt, y, mask, cfg, geom1);

  // Brute-force grid over the latent square.
  double best_grid = std::numeric_limits<double>::infinity();
  Matrix best_z(1, 2);
  for (int a = 0; a <= 40; ++a) {
    for (int b = 0; b <= 40; ++b) {
      Matrix z(1, 2);
      z(0, 0) = -1.0 + 0.05 * a;
      z(0, 1) = -1.0 + 0.05 * b;
      const double loss = contextual_loss(generate(ckpt.model.generator, z), y, mask);
      if (loss < best_grid) {
        best_grid = loss;
        best_z = z;
      }
    }
  }

  const double final_loss =
      contextual_loss(generate(ckpt.model.generator, res.z_hat), y, mask);
  CHECK(final_loss <= best_grid + 1e-3);
  CHECK(std::abs(res.z_hat(0, 0) - best_z(0, 0)) < 0.06);
  CHECK(std::abs(res.z_hat(0, 1) - best_z(0, 1)) < 0.06);

  SUBCASE("the loss trace is non-strictly improving and ends at the bottom") {
    for (std::size_t i = 1; i < res.loss_trace.size(); ++i) {
      CHECK(res.loss_trace[i] <= res.loss_trace[i - 1]);
    }
    CHECK(res.loss_trace.back() <= res.loss_trace.front());
  }
}

TEST_CASE("estimate validates shapes and reports divergence") {
  const Checkpoint ckpt = toy_model();
  EstimateConfig cfg;
  cfg.iterations = 5;
  CellGeometry geom;
  geom.dt_hours = 1.0 / 12.0;

  CHECK_THROWS_AS(estimate(ckpt, Matrix(2, 2), Mask::ones(2, 2), cfg, geom),
                  ValidationError);
  CHECK_THROWS_AS(estimate(ckpt, Matrix(1, 2), Mask::ones(2, 2), cfg, geom),
                  ValidationError);
}

TEST_CASE("reconstruct") {
  Matrix y(2, 2), gz(2, 2);
  y(0, 0) = 1;
  y(0, 1) = 2;
  y(1, 0) = 3;
  y(1, 1) = 4;
  gz(0, 0) = 9;
  gz(0, 1) = 8;
  gz(1, 0) = 7;
  gz(1, 1) = 6;

  SUBCASE("full mask returns y exactly") {
    const Matrix out = reconstruct(y, Mask::ones(2, 2), gz);
    CHECK(out.data == y.data);
  }

  SUBCASE("empty mask returns the generated matrix exactly") {
    Mask none{Matrix(2, 2, 0.0)};
    const Matrix out = reconstruct(y, none, gz);
    CHECK(out.data == gz.data);
  }

  SUBCASE("mixed mask interleaves") {
    Mask mask = Mask::ones(2, 2);
    mask.M(0, 1) = 0.0;
    mask.M(1, 0) = 0.0;
    const Matrix out = reconstruct(y, mask, gz);
    CHECK(out(0, 0) == 1.0);
    CHECK(out(0, 1) == 8.0);
    CHECK(out(1, 0) == 7.0);
    CHECK(out(1, 1) == 4.0);
  }

  SUBCASE("observed entries pass through bit-exactly for random triples") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      Matrix yy(3, 4), gg(3, 4);
      Mask mask = Mask::ones(3, 4);
      for (double& v : yy.data) v = rng.uniform(-10, 10);
      for (double& v : gg.data) v = rng.uniform(-10, 10);
      for (double& v : mask.M.data) v = rng.uniform() < 0.4 ? 0.0 : 1.0;
      const Matrix out = reconstruct(yy, mask, gg);
      for (std::size_t i = 0; i < out.data.size(); ++i) {
        if (mask.M.data[i] == 1.0) {
          CHECK(std::memcmp(&out.data[i], &yy.data[i], sizeof(double)) == 0);
        } else {
          CHECK(out.data[i] == gg.data[i]);
        }
      }
    }
  }

  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(reconstruct(y, Mask::ones(3, 2), gz), ValidationError);
  }
}
