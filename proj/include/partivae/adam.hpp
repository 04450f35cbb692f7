#pragma once

#include "partivae/math.hpp"
#include "partivae/mlp.hpp"

namespace partivae::nn {

// Defaults follow the common framework defaults (eps = 1e-7).
struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-7;
};

// Moment accumulators shaped like the parameters they update.
struct AdamState {
  long step = 0;
  AdamConfig cfg;
  MlpParams m;
  MlpParams v;

  static AdamState init(const MlpParams& shape, AdamConfig cfg = {});
};

// One bias-corrected Adam step applied as gradient ASCENT:
// params += lr * m_hat / (sqrt(v_hat) + eps). Gradients are gradients of the
// objective being maximized (the ELBO convention used throughout).
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

// Same update for a flat parameter vector (learned target parameters).
struct VecAdamState {
  long step = 0;
  AdamConfig cfg;
  Vector m;
  Vector v;

  static VecAdamState init(Index n, AdamConfig cfg = {});
};

void adam_step(Vector& params, const Vector& grads, VecAdamState& state);

}  // namespace partivae::nn
