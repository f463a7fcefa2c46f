#include "tse/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tse/errors.hpp"

namespace tse {

namespace {

void fill_uniform(Matrix& m, Rng& rng, double r) {
  for (double& v : m.data) v = rng.uniform(-r, r);
}

void fill_uniform(Vector& v, Rng& rng, double r) {
  for (double& x : v) x = rng.uniform(-r, r);
}

// pre = W_h h + W_x x + b
Vector gate_preactivation(const Matrix& wh, const Matrix& wx, const Vector& b,
                          const Vector& h, const Vector& x) {
  Vector pre = matvec(wh, h);
  const Vector from_x = matvec(wx, x);
  for (std::size_t k = 0; k < pre.size(); ++k) pre[k] += from_x[k] + b[k];
  return pre;
}

void check_params_shape(const LstmParams& p) {
  const std::size_t h = p.hidden_size;
  const std::size_t in = p.input_size;
  auto bad_h = [&](const Matrix& m) { return m.rows != h || m.cols != h; };
  auto bad_x = [&](const Matrix& m) { return m.rows != h || m.cols != in; };
  if (bad_h(p.W_fh) || bad_h(p.W_ih) || bad_h(p.W_ch) || bad_h(p.W_oh) ||
      bad_x(p.W_fx) || bad_x(p.W_ix) || bad_x(p.W_cx) || bad_x(p.W_ox) ||
      p.b_f.size() != h || p.b_i.size() != h || p.b_c.size() != h ||
      p.b_o.size() != h) {
    throw ValidationError("lstm: parameter shapes inconsistent with hidden_size=" +
                          std::to_string(h) + " input_size=" + std::to_string(in));
  }
}

}  // namespace

LstmParams LstmParams::zeros(std::size_t hidden, std::size_t input) {
  LstmParams p;
  p.hidden_size = hidden;
  p.input_size = input;
  p.W_fh = Matrix(hidden, hidden);
  p.W_ih = Matrix(hidden, hidden);
  p.W_ch = Matrix(hidden, hidden);
  p.W_oh = Matrix(hidden, hidden);
  p.W_fx = Matrix(hidden, input);
  p.W_ix = Matrix(hidden, input);
  p.W_cx = Matrix(hidden, input);
  p.W_ox = Matrix(hidden, input);
  p.b_f = Vector(hidden, 0.0);
  p.b_i = Vector(hidden, 0.0);
  p.b_c = Vector(hidden, 0.0);
  p.b_o = Vector(hidden, 0.0);
  return p;
}

LstmParams LstmParams::seeded_init(std::size_t hidden, std::size_t input, Rng& rng) {
  LstmParams p = zeros(hidden, input);
  const double r = 1.0 / std::sqrt(static_cast<double>(hidden + input));
  fill_uniform(p.W_fh, rng, r);
  fill_uniform(p.W_fx, rng, r);
  fill_uniform(p.W_ih, rng, r);
  fill_uniform(p.W_ix, rng, r);
  fill_uniform(p.W_ch, rng, r);
  fill_uniform(p.W_cx, rng, r);
  fill_uniform(p.W_oh, rng, r);
  fill_uniform(p.W_ox, rng, r);
  fill_uniform(p.b_f, rng, r);
  fill_uniform(p.b_i, rng, r);
  fill_uniform(p.b_c, rng, r);
  fill_uniform(p.b_o, rng, r);
  return p;
}

LstmGrads LstmGrads::zeros(std::size_t hidden, std::size_t input) {
  LstmGrads g;
  g.hidden_size = hidden;
  g.input_size = input;
  g.W_fh = Matrix(hidden, hidden);
  g.W_ih = Matrix(hidden, hidden);
  g.W_ch = Matrix(hidden, hidden);
  g.W_oh = Matrix(hidden, hidden);
  g.W_fx = Matrix(hidden, input);
  g.W_ix = Matrix(hidden, input);
  g.W_cx = Matrix(hidden, input);
  g.W_ox = Matrix(hidden, input);
  g.b_f = Vector(hidden, 0.0);
  g.b_i = Vector(hidden, 0.0);
  g.b_c = Vector(hidden, 0.0);
  g.b_o = Vector(hidden, 0.0);
  return g;
}

void LstmGrads::accumulate(const LstmGrads& other) {
  axpy(W_fh, 1.0, other.W_fh);
  axpy(W_fx, 1.0, other.W_fx);
  axpy(W_ih, 1.0, other.W_ih);
  axpy(W_ix, 1.0, other.W_ix);
  axpy(W_ch, 1.0, other.W_ch);
  axpy(W_cx, 1.0, other.W_cx);
  axpy(W_oh, 1.0, other.W_oh);
  axpy(W_ox, 1.0, other.W_ox);
  axpy(b_f, 1.0, other.b_f);
  axpy(b_i, 1.0, other.b_i);
  axpy(b_c, 1.0, other.b_c);
  axpy(b_o, 1.0, other.b_o);
}

void LstmGrads::scale(double s) {
  auto sc = [s](auto& container) {
    for (double& v : container) v *= s;
  };
  sc(W_fh.data);
  sc(W_fx.data);
  sc(W_ih.data);
  sc(W_ix.data);
  sc(W_ch.data);
  sc(W_cx.data);
  sc(W_oh.data);
  sc(W_ox.data);
  sc(b_f);
  sc(b_i);
  sc(b_c);
  sc(b_o);
}

void LstmGrads::clip(double limit) {
  auto cl = [limit](auto& container) {
    for (double& v : container) v = std::clamp(v, -limit, limit);
  };
  cl(W_fh.data);
  cl(W_fx.data);
  cl(W_ih.data);
  cl(W_ix.data);
  cl(W_ch.data);
  cl(W_cx.data);
  cl(W_oh.data);
  cl(W_ox.data);
  cl(b_f);
  cl(b_i);
  cl(b_c);
  cl(b_o);
}

bool LstmGrads::finite() const {
  return all_finite(W_fh) && all_finite(W_fx) && all_finite(W_ih) &&
         all_finite(W_ix) && all_finite(W_ch) && all_finite(W_cx) &&
         all_finite(W_oh) && all_finite(W_ox) && all_finite(b_f) &&
         all_finite(b_i) && all_finite(b_c) && all_finite(b_o);
}

LstmForwardResult lstm_forward(const LstmParams& params,
                               const std::vector<Vector>& inputs,
                               const LstmState& initial) {
  check_params_shape(params);
  const std::size_t hidden = params.hidden_size;
  if (initial.h.size() != hidden || initial.c.size() != hidden) {
    throw ValidationError("lstm_forward: initial state length " +
                          std::to_string(initial.h.size()) + " != hidden_size " +
                          std::to_string(hidden));
  }

  LstmForwardResult res;
  res.cache.initial = initial;
  res.cache.steps.reserve(inputs.size());
  res.outputs.reserve(inputs.size());

  const Vector* h_prev = &initial.h;
  const Vector* c_prev = &initial.c;

  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Vector& x = inputs[t];
    if (x.size() != params.input_size) {
      throw ValidationError("lstm_forward: input " + std::to_string(t) +
                            " has length " + std::to_string(x.size()) +
                            " != input_size " + std::to_string(params.input_size));
    }

    LstmStep step;
    step.x = x;

    Vector pre_f = gate_preactivation(params.W_fh, params.W_fx, params.b_f, *h_prev, x);
    Vector pre_i = gate_preactivation(params.W_ih, params.W_ix, params.b_i, *h_prev, x);
    Vector pre_q = gate_preactivation(params.W_ch, params.W_cx, params.b_c, *h_prev, x);
    Vector pre_o = gate_preactivation(params.W_oh, params.W_ox, params.b_o, *h_prev, x);

    step.f.resize(hidden);
    step.i.resize(hidden);
    step.q.resize(hidden);
    step.o.resize(hidden);
    step.c.resize(hidden);
    step.h.resize(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      step.f[k] = sigmoid(pre_f[k]);
      step.i[k] = sigmoid(pre_i[k]);
      step.q[k] = tanh_fn(pre_q[k]);
      step.o[k] = sigmoid(pre_o[k]);
      step.c[k] = step.f[k] * (*c_prev)[k] + step.i[k] * step.q[k];
      step.h[k] = step.o[k] * tanh_fn(step.c[k]);
    }

    res.outputs.push_back(step.h);
    res.cache.steps.push_back(std::move(step));
    h_prev = &res.cache.steps.back().h;
    c_prev = &res.cache.steps.back().c;
  }
  return res;
}

LstmForwardResult lstm_forward(const LstmParams& params,
                               const std::vector<Vector>& inputs) {
  return lstm_forward(params, inputs, LstmState::zeros(params.hidden_size));
}

LstmBackwardResult lstm_backward(const LstmParams& params, const LstmCache& cache,
                                 const std::vector<Vector>& dh) {
  check_params_shape(params);
  const std::size_t hidden = params.hidden_size;
  const std::size_t n = cache.n_steps();
  if (dh.size() != n) {
    throw ValidationError("lstm_backward: dh has " + std::to_string(dh.size()) +
                          " steps, cache has " + std::to_string(n));
  }
  for (const Vector& d : dh) {
    if (d.size() != hidden) {
      throw ValidationError("lstm_backward: dh entry length != hidden_size");
    }
  }

  LstmBackwardResult res;
  res.grads = LstmGrads::zeros(hidden, params.input_size);
  res.dx.assign(n, Vector(params.input_size, 0.0));

  Vector dh_rec(hidden, 0.0);  // error entering step t from step t+1 gates
  Vector dc_rec(hidden, 0.0);  // cell-state error carried through c_t -> c_{t+1}

  for (std::size_t ti = n; ti-- > 0;) {
    const LstmStep& s = cache.steps[ti];
    const Vector& h_prev = (ti == 0) ? cache.initial.h : cache.steps[ti - 1].h;
    const Vector& c_prev = (ti == 0) ? cache.initial.c : cache.steps[ti - 1].c;

    Vector delta_h(hidden), delta_c(hidden);
    Vector d_o(hidden), d_f(hidden), d_i(hidden), d_q(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
      delta_h[k] = dh[ti][k] + dh_rec[k];
      const double tc = tanh_fn(s.c[k]);
      delta_c[k] = delta_h[k] * s.o[k] * (1.0 - tc * tc) + dc_rec[k];
      d_o[k] = delta_h[k] * tc * s.o[k] * (1.0 - s.o[k]);
      d_f[k] = delta_c[k] * c_prev[k] * s.f[k] * (1.0 - s.f[k]);
      d_i[k] = delta_c[k] * s.q[k] * s.i[k] * (1.0 - s.i[k]);
      d_q[k] = delta_c[k] * s.i[k] * (1.0 - s.q[k] * s.q[k]);
      dc_rec[k] = delta_c[k] * s.f[k];
    }

    axpy(res.grads.W_oh, 1.0, outer(d_o, h_prev));
    axpy(res.grads.W_fh, 1.0, outer(d_f, h_prev));
    axpy(res.grads.W_ih, 1.0, outer(d_i, h_prev));
    axpy(res.grads.W_ch, 1.0, outer(d_q, h_prev));
    axpy(res.grads.W_ox, 1.0, outer(d_o, s.x));
    axpy(res.grads.W_fx, 1.0, outer(d_f, s.x));
    axpy(res.grads.W_ix, 1.0, outer(d_i, s.x));
    axpy(res.grads.W_cx, 1.0, outer(d_q, s.x));
    axpy(res.grads.b_o, 1.0, d_o);
    axpy(res.grads.b_f, 1.0, d_f);
    axpy(res.grads.b_i, 1.0, d_i);
    axpy(res.grads.b_c, 1.0, d_q);

    dh_rec = matvec_transposed(params.W_oh, d_o);
    axpy(dh_rec, 1.0, matvec_transposed(params.W_fh, d_f));
    axpy(dh_rec, 1.0, matvec_transposed(params.W_ih, d_i));
    axpy(dh_rec, 1.0, matvec_transposed(params.W_ch, d_q));

    res.dx[ti] = matvec_transposed(params.W_ox, d_o);
    axpy(res.dx[ti], 1.0, matvec_transposed(params.W_fx, d_f));
    axpy(res.dx[ti], 1.0, matvec_transposed(params.W_ix, d_i));
    axpy(res.dx[ti], 1.0, matvec_transposed(params.W_cx, d_q));
  }
  return res;
}

void sgd_apply(LstmParams& params, const LstmGrads& grads, double lr,
               SgdDirection direction) {
  if (params.hidden_size != grads.hidden_size ||
      params.input_size != grads.input_size) {
    throw ValidationError("sgd_apply: params/grads size mismatch");
  }
  if (lr <= 0.0) {
    throw ValidationError("sgd_apply: learning rate must be positive");
  }
  if (!grads.finite()) {
    throw DivergenceError("sgd_apply: non-finite gradient entries");
  }
  const double s = (direction == SgdDirection::descend) ? -lr : lr;
  axpy(params.W_fh, s, grads.W_fh);
  axpy(params.W_fx, s, grads.W_fx);
  axpy(params.W_ih, s, grads.W_ih);
  axpy(params.W_ix, s, grads.W_ix);
  axpy(params.W_ch, s, grads.W_ch);
  axpy(params.W_cx, s, grads.W_cx);
  axpy(params.W_oh, s, grads.W_oh);
  axpy(params.W_ox, s, grads.W_ox);
  axpy(params.b_f, s, grads.b_f);
  axpy(params.b_i, s, grads.b_i);
  axpy(params.b_c, s, grads.b_c);
  axpy(params.b_o, s, grads.b_o);
}

}  // namespace tse
