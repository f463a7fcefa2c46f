#pragma once

#include <cstdint>
#include <vector>

#include "tse/data.hpp"
#include "tse/gan.hpp"
#include "tse/mask.hpp"
#include "tse/tensor.hpp"

namespace tse {

struct LossWeights {
  double lambda_p = 0.1;   // perceptual
  double lambda_c = 0.01;  // conservative; 0 disables the term

  void validate() const;
};

struct EstimateConfig {
  std::size_t iterations = 500;
  double step_size = 0.05;
  std::size_t restarts = 3;
  std::uint64_t seed = 0;
  LossWeights weights;

  void validate() const;
};

// l1 distance over observed entries only; masked entries of either matrix
// never contribute.
double contextual_loss(const Matrix& gz, const Matrix& y, const Mask& mask);

// log(1 - D(gz)), clamped away from log 0.
double perceptual_loss(const DiscriminatorNet& net, const Matrix& gz);

// Mean squared violation of the discrete conservation law over all interior
// (t,s), evaluated in physical units via linear de-normalization of gz.
double conservative_loss(const Matrix& gz, const Scaler& scaler,
                         const CellGeometry& geometry);

// d(conservative_loss)/d(gz) in normalized feature space.
Matrix conservative_loss_grad(const Matrix& gz, const Scaler& scaler,
                              const CellGeometry& geometry);

double total_loss(const Matrix& z, const GanModel& model, const Matrix& y,
                  const Mask& mask, const LossWeights& weights, const Scaler& scaler,
                  const CellGeometry& geometry);

// Loss and its gradient with respect to z, backpropagated through the frozen
// generator (and discriminator, for the perceptual term).
struct LossAndGrad {
  double loss = 0.0;
  Matrix dz;
};
LossAndGrad total_loss_and_grad(const Matrix& z, const GanModel& model, const Matrix& y,
                                const Mask& mask, const LossWeights& weights,
                                const Scaler& scaler, const CellGeometry& geometry);

struct EstimateResult {
  Matrix z_hat;
  Matrix gz_hat;
  // Best-so-far total loss, one entry per evaluation across all restarts;
  // non-strictly improving.
  std::vector<double> loss_trace;
};

// Gradient descent on z from `restarts` seeded uniform initializations;
// returns the restart whose final loss is lowest (ties broken by restart
// index). y's masked entries may hold any placeholder.
EstimateResult estimate(const Checkpoint& model, const Matrix& y, const Mask& mask,
                        const EstimateConfig& config, const CellGeometry& geometry);

// M (.) y + (1 - M) (.) gz_hat; observed entries pass through bit-exactly.
Matrix reconstruct(const Matrix& y, const Mask& mask, const Matrix& gz_hat);

}  // namespace tse
