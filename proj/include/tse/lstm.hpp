#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "tse/rng.hpp"
#include "tse/tensor.hpp"

namespace tse {

// One LSTM layer's weights, split into the hidden-state block (W_*h, acting
// on h_{t-1}) and the input block (W_*x, acting on x_t) of each gate. A
// forward pass with the split blocks is identical to one using concatenated
// weights on [h_{t-1}, x_t].
struct LstmParams {
  std::size_t hidden_size = 0;
  std::size_t input_size = 0;

  Matrix W_fh, W_fx;  // forget gate
  Matrix W_ih, W_ix;  // input gate
  Matrix W_ch, W_cx;  // candidate memory
  Matrix W_oh, W_ox;  // output gate
  Vector b_f, b_i, b_c, b_o;

  static LstmParams zeros(std::size_t hidden, std::size_t input);

  // Uniform on [-r, r] with r = 1/sqrt(hidden + input).
  static LstmParams seeded_init(std::size_t hidden, std::size_t input, Rng& rng);
};

struct LstmState {
  Vector h;
  Vector c;

  static LstmState zeros(std::size_t hidden) {
    return LstmState{Vector(hidden, 0.0), Vector(hidden, 0.0)};
  }
};

// Per-step activations retained for the backward pass.
struct LstmStep {
  Vector x;  // input
  Vector f, i, q, o;  // gate activations; f,i,o in (0,1), q in (-1,1)
  Vector c, h;
};

struct LstmCache {
  LstmState initial;
  std::vector<LstmStep> steps;

  std::size_t n_steps() const { return steps.size(); }
};

// Same shapes as LstmParams, holding dE/d(parameter).
struct LstmGrads {
  std::size_t hidden_size = 0;
  std::size_t input_size = 0;

  Matrix W_fh, W_fx, W_ih, W_ix, W_ch, W_cx, W_oh, W_ox;
  Vector b_f, b_i, b_c, b_o;

  static LstmGrads zeros(std::size_t hidden, std::size_t input);

  void accumulate(const LstmGrads& other);
  void scale(double s);
  // Elementwise clip to [-limit, limit]; used during adversarial training only.
  void clip(double limit);
  bool finite() const;
};

struct LstmForwardResult {
  std::vector<Vector> outputs;  // h_1..h_n
  LstmCache cache;
};

// Forward recurrence. Gate order per step: forget, input, candidate, cell
// state, output (computed from h_{t-1}), hidden output.
LstmForwardResult lstm_forward(const LstmParams& params,
                               const std::vector<Vector>& inputs,
                               const LstmState& initial);

LstmForwardResult lstm_forward(const LstmParams& params,
                               const std::vector<Vector>& inputs);

struct LstmBackwardResult {
  LstmGrads grads;
  std::vector<Vector> dx;  // dE/dx_t; the channel that reaches the latent input
};

// Backward through time. dh[t] is dE/dh_t supplied from above; the recursion
// carries both the hidden-state error (through the four gate weight blocks)
// and the cell-state error (through the forget-gate path c_t -> c_{t+1}).
// Parameter gradients are accumulated over all time steps.
LstmBackwardResult lstm_backward(const LstmParams& params, const LstmCache& cache,
                                 const std::vector<Vector>& dh);

enum class SgdDirection { descend, ascend };

// params -= lr * grads (descend) or += (ascend). Throws DivergenceError if
// any gradient entry is non-finite.
void sgd_apply(LstmParams& params, const LstmGrads& grads, double lr,
               SgdDirection direction);

}  // namespace tse
