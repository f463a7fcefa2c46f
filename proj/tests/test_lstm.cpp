#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "tse/errors.hpp"
#include "tse/lstm.hpp"
#include "tse/rng.hpp"

#include "test_util.hpp"

using namespace tse;

namespace {

std::vector<Vector> random_inputs(std::size_t n, std::size_t dim, Rng& rng) {
  std::vector<Vector> xs(n, Vector(dim));
  for (auto& x : xs) {
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
  }
  return xs;
}

// E = sum of all h_t entries, re-evaluated from scratch.
double sum_outputs(const LstmParams& params, const std::vector<Vector>& inputs) {
  const auto fwd = lstm_forward(params, inputs);
  double e = 0.0;
  for (const auto& h : fwd.outputs) {
    for (double v : h) e += v;
  }
  return e;
}

}  // namespace

TEST_CASE("zero parameters give the closed-form gate values") {
  const LstmParams params = LstmParams::zeros(3, 2);
  Rng rng(5);
  const auto inputs = random_inputs(4, 2, rng);
  const auto fwd = lstm_forward(params, inputs);

  for (const auto& step : fwd.cache.steps) {
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(step.f[k] == 0.5);
      CHECK(step.i[k] == 0.5);
      CHECK(step.o[k] == 0.5);
      CHECK(step.q[k] == 0.0);
      CHECK(step.c[k] == 0.0);
      CHECK(step.h[k] == 0.0);
    }
  }
}

TEST_CASE("hand-evaluated scalar recurrence with candidate bias 1") {
  LstmParams params = LstmParams::zeros(1, 1);
  params.b_c[0] = 1.0;
  const std::vector<Vector> inputs = {{0.7}, {-0.2}};
  const auto fwd = lstm_forward(params, inputs);

  const double c1 = 0.5 * std::tanh(1.0);
  const double h1 = 0.5 * std::tanh(c1);
  const double c2 = 0.5 * c1 + 0.5 * std::tanh(1.0);
  CHECK(fwd.cache.steps[0].c[0] == doctest::Approx(c1).epsilon(1e-15));
  CHECK(fwd.cache.steps[0].h[0] == doctest::Approx(h1).epsilon(1e-15));
  CHECK(fwd.cache.steps[1].c[0] == doctest::Approx(c2).epsilon(1e-15));
}

TEST_CASE("a saturated-shut forget gate erases the previous cell state") {
  Rng rng(17);
  LstmParams params = LstmParams::seeded_init(2, 2, rng);
  for (double& v : params.b_f) v = -20.0;

  const auto inputs = random_inputs(5, 2, rng);
  const auto fwd = lstm_forward(params, inputs);
  for (const auto& step : fwd.cache.steps) {
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::abs(step.c[k] - step.i[k] * step.q[k]) < 1e-8);
    }
  }
}

TEST_CASE("gate ranges") {
  Rng rng(23);
  LstmParams params = LstmParams::seeded_init(4, 3, rng);
  const auto inputs = random_inputs(6, 3, rng);
  const auto fwd = lstm_forward(params, inputs);
  for (const auto& step : fwd.cache.steps) {
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(step.f[k] > 0.0);
      CHECK(step.f[k] < 1.0);
      CHECK(step.i[k] > 0.0);
      CHECK(step.i[k] < 1.0);
      CHECK(step.o[k] > 0.0);
      CHECK(step.o[k] < 1.0);
      CHECK(step.q[k] > -1.0);
      CHECK(step.q[k] < 1.0);
      CHECK(step.h[k] > -1.0);
      CHECK(step.h[k] < 1.0);
    }
  }
}

TEST_CASE("split-weight forward equals concatenated-weight forward") {
  Rng rng(29);
  const std::size_t hidden = 3, input = 2, n = 4;
  const LstmParams params = LstmParams::seeded_init(hidden, input, rng);
  const auto inputs = random_inputs(n, input, rng);
  const auto fwd = lstm_forward(params, inputs);

  // Reference recurrence using explicitly concatenated weight matrices.
  auto concat_w = [&](const Matrix& wh, const Matrix& wx) {
    Matrix w(hidden, hidden + input);
    for (std::size_t r = 0; r < hidden; ++r) {
      for (std::size_t c = 0; c < hidden; ++c) w(r, c) = wh(r, c);
      for (std::size_t c = 0; c < input; ++c) w(r, hidden + c) = wx(r, c);
    }
    return w;
  };
  const Matrix wf = concat_w(params.W_fh, params.W_fx);
  const Matrix wi = concat_w(params.W_ih, params.W_ix);
  const Matrix wc = concat_w(params.W_ch, params.W_cx);
  const Matrix wo = concat_w(params.W_oh, params.W_ox);

  Vector h(hidden, 0.0), c(hidden, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const Vector hx = concat(h, inputs[t]);
    const Vector pf = matvec(wf, hx), pi = matvec(wi, hx), pc = matvec(wc, hx),
                 po = matvec(wo, hx);
    Vector h_next(hidden), c_next(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      const double f = sigmoid(pf[k] + params.b_f[k]);
      const double i = sigmoid(pi[k] + params.b_i[k]);
      const double q = tanh_fn(pc[k] + params.b_c[k]);
      const double o = sigmoid(po[k] + params.b_o[k]);
      c_next[k] = f * c[k] + i * q;
      h_next[k] = o * tanh_fn(c_next[k]);
    }
    for (std::size_t k = 0; k < hidden; ++k) {
      CHECK(std::abs(fwd.outputs[t][k] - h_next[k]) < 1e-12);
    }
    h = h_next;
    c = c_next;
  }
}

TEST_CASE("zero upstream error gives zero gradients and zero dx") {
  Rng rng(31);
  const LstmParams params = LstmParams::seeded_init(3, 2, rng);
  const auto inputs = random_inputs(4, 2, rng);
  const auto fwd = lstm_forward(params, inputs);

  const std::vector<Vector> dh(4, Vector(3, 0.0));
  const auto back = lstm_backward(params, fwd.cache, dh);
  for (double v : back.grads.W_fh.data) CHECK(v == 0.0);
  for (double v : back.grads.W_cx.data) CHECK(v == 0.0);
  for (double v : back.grads.b_o) CHECK(v == 0.0);
  for (const auto& dx : back.dx) {
    for (double v : dx) CHECK(v == 0.0);
  }
}

TEST_CASE("single-step scalar gradients match the hand-derived chain rule") {
  LstmParams params = LstmParams::zeros(1, 1);
  params.W_fx(0, 0) = 0.4;
  params.W_ix(0, 0) = -0.3;
  params.W_cx(0, 0) = 0.8;
  params.W_ox(0, 0) = 0.6;
  params.b_f[0] = 0.1;
  params.b_i[0] = -0.2;
  params.b_c[0] = 0.3;
  params.b_o[0] = 0.05;
  const double x = 0.9;

  const auto fwd = lstm_forward(params, {{x}});
  const auto back = lstm_backward(params, fwd.cache, {{1.0}});

  // Closed-form derivatives of h = o*tanh(c), c = i*q (initial state zero).
  const double f = sigmoid(0.4 * x + 0.1);
  const double i = sigmoid(-0.3 * x - 0.2);
  const double q = std::tanh(0.8 * x + 0.3);
  const double o = sigmoid(0.6 * x + 0.05);
  const double c = i * q;
  const double tc = std::tanh(c);
  (void)f;

  const double delta_o = tc * o * (1.0 - o);
  const double delta_c = o * (1.0 - tc * tc);
  const double delta_i = delta_c * q * i * (1.0 - i);
  const double delta_q = delta_c * i * (1.0 - q * q);

  CHECK(back.grads.W_ox(0, 0) == doctest::Approx(delta_o * x).epsilon(1e-12));
  CHECK(back.grads.W_ix(0, 0) == doctest::Approx(delta_i * x).epsilon(1e-12));
  CHECK(back.grads.W_cx(0, 0) == doctest::Approx(delta_q * x).epsilon(1e-12));
  CHECK(back.grads.W_fx(0, 0) == 0.0);  // c_{t-1} = 0 kills the forget path
  CHECK(back.grads.b_o[0] == doctest::Approx(delta_o).epsilon(1e-12));
  CHECK(back.grads.b_i[0] == doctest::Approx(delta_i).epsilon(1e-12));
  CHECK(back.grads.b_c[0] == doctest::Approx(delta_q).epsilon(1e-12));
  // hidden-part weights see h_0 = 0
  CHECK(back.grads.W_oh(0, 0) == 0.0);

  const double dx_expected = delta_o * params.W_ox(0, 0) + delta_i * params.W_ix(0, 0) +
                             delta_q * params.W_cx(0, 0);
  CHECK(back.dx[0][0] == doctest::Approx(dx_expected).epsilon(1e-12));
}

TEST_CASE("backward matches central finite differences (hidden 4, input 3, 5 steps)") {
  Rng rng(41);
  LstmParams params = LstmParams::seeded_init(4, 3, rng);
  auto inputs = random_inputs(5, 3, rng);

  const auto fwd = lstm_forward(params, inputs);
  const std::vector<Vector> dh(5, Vector(4, 1.0));
  const auto back = lstm_backward(params, fwd.cache, dh);

  const auto eval = [&] { return sum_outputs(params, inputs); };

  const auto sweep = [&](Matrix& live, const Matrix& analytic) {
    for (std::size_t idx = 0; idx < live.data.size(); ++idx) {
      const double numeric = fd_central(eval, &live.data[idx]);
      CHECK(rel_error(analytic.data[idx], numeric) < 1e-6);
    }
  };
  const auto sweep_v = [&](Vector& live, const Vector& analytic) {
    for (std::size_t idx = 0; idx < live.size(); ++idx) {
      const double numeric = fd_central(eval, &live[idx]);
      CHECK(rel_error(analytic[idx], numeric) < 1e-6);
    }
  };

  sweep(params.W_fh, back.grads.W_fh);
  sweep(params.W_fx, back.grads.W_fx);
  sweep(params.W_ih, back.grads.W_ih);
  sweep(params.W_ix, back.grads.W_ix);
  sweep(params.W_ch, back.grads.W_ch);
  sweep(params.W_cx, back.grads.W_cx);
  sweep(params.W_oh, back.grads.W_oh);
  sweep(params.W_ox, back.grads.W_ox);
  sweep_v(params.b_f, back.grads.b_f);
  sweep_v(params.b_i, back.grads.b_i);
  sweep_v(params.b_c, back.grads.b_c);
  sweep_v(params.b_o, back.grads.b_o);

  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double numeric = fd_central(eval, &inputs[t][j]);
      CHECK(rel_error(back.dx[t][j], numeric) < 1e-6);
    }
  }
}

TEST_CASE("error propagates only backward in time") {
  Rng rng(43);
  const LstmParams params = LstmParams::seeded_init(3, 2, rng);
  const auto inputs = random_inputs(6, 2, rng);
  const auto fwd = lstm_forward(params, inputs);

  std::vector<Vector> dh(6, Vector(3, 0.0));
  dh[2] = Vector(3, 1.0);  // upstream error only at step 3 (index 2)
  const auto back = lstm_backward(params, fwd.cache, dh);

  for (std::size_t t = 3; t < 6; ++t) {
    for (double v : back.dx[t]) CHECK(v == 0.0);
  }
  bool any_nonzero = false;
  for (std::size_t t = 0; t <= 2; ++t) {
    for (double v : back.dx[t]) any_nonzero = any_nonzero || v != 0.0;
  }
  CHECK(any_nonzero);
}

TEST_CASE("sgd_apply") {
  Rng rng(47);
  const LstmParams original = LstmParams::seeded_init(2, 2, rng);
  LstmGrads grads = LstmGrads::zeros(2, 2);

  SUBCASE("zero gradients are a fixed point") {
    LstmParams p = original;
    sgd_apply(p, grads, 0.5, SgdDirection::descend);
    CHECK(p.W_fh.data == original.W_fh.data);
    CHECK(p.b_c == original.b_c);
  }

  SUBCASE("unit learning rate from zero parameters lands on minus the gradient") {
    LstmParams p = LstmParams::zeros(2, 2);
    for (double& v : grads.W_ih.data) v = 0.25;
    grads.b_o[1] = -2.0;
    sgd_apply(p, grads, 1.0, SgdDirection::descend);
    for (double v : p.W_ih.data) CHECK(v == -0.25);
    CHECK(p.b_o[1] == 2.0);

    LstmParams q = LstmParams::zeros(2, 2);
    sgd_apply(q, grads, 1.0, SgdDirection::ascend);
    for (double v : q.W_ih.data) CHECK(v == 0.25);
  }

  SUBCASE("two steps with fixed gradients equal one step at doubled rate") {
    for (double& v : grads.W_ch.data) v = 0.1;
    LstmParams two_steps = original;
    sgd_apply(two_steps, grads, 0.03, SgdDirection::descend);
    sgd_apply(two_steps, grads, 0.03, SgdDirection::descend);
    LstmParams one_step = original;
    sgd_apply(one_step, grads, 0.06, SgdDirection::descend);
    for (std::size_t k = 0; k < two_steps.W_ch.data.size(); ++k) {
      CHECK(two_steps.W_ch.data[k] == doctest::Approx(one_step.W_ch.data[k]).epsilon(1e-15));
    }
  }

  SUBCASE("non-finite gradients abort") {
    grads.W_fh(0, 0) = std::numeric_limits<double>::quiet_NaN();
    LstmParams p = original;
    CHECK_THROWS_AS(sgd_apply(p, grads, 0.1, SgdDirection::descend), DivergenceError);
  }
}

TEST_CASE("shape mismatches are rejected") {
  Rng rng(53);
  const LstmParams params = LstmParams::seeded_init(3, 2, rng);
  CHECK_THROWS_AS(lstm_forward(params, {{1.0, 2.0, 3.0}}), ValidationError);

  const auto fwd = lstm_forward(params, random_inputs(2, 2, rng));
  CHECK_THROWS_AS(lstm_backward(params, fwd.cache, {{1.0, 1.0, 1.0}}), ValidationError);
}

TEST_CASE("gradient clipping") {
  LstmGrads grads = LstmGrads::zeros(1, 1);
  grads.W_fh(0, 0) = 12.0;
  grads.b_c[0] = -7.5;
  grads.W_ox(0, 0) = 3.0;
  grads.clip(5.0);
  CHECK(grads.W_fh(0, 0) == 5.0);
  CHECK(grads.b_c[0] == -5.0);
  CHECK(grads.W_ox(0, 0) == 3.0);
}
