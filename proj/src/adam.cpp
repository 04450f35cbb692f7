#include "partivae/adam.hpp"

#include "partivae/errors.hpp"

#include <cmath>
#include <string>

namespace partivae::nn {

namespace {

template <typename Plain>
void update_tensor(Plain& p, const Plain& g, Plain& m, Plain& v, double corr1, double corr2,
                   const AdamConfig& c) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v = (c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square()).matrix();
  p.array() += c.lr * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.eps);
}

}  // namespace

AdamState AdamState::init(const MlpParams& shape, AdamConfig cfg) {
  AdamState s;
  s.cfg = cfg;
  s.m = MlpParams::zeros(shape.in_dim(), shape.hidden_dim(), shape.out_dim());
  s.v = MlpParams::zeros(shape.in_dim(), shape.hidden_dim(), shape.out_dim());
  return s;
}

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  if (!params.same_shape(grads) || !params.same_shape(state.m))
    throw DimensionError("adam_step: parameter/gradient/state shapes disagree");
  if (!grads.all_finite())
    throw TrainError(state.step, "non-finite gradient in adam_step");
  ++state.step;
  const double corr1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  update_tensor(params.w1, grads.w1, state.m.w1, state.v.w1, corr1, corr2, state.cfg);
  update_tensor(params.b1, grads.b1, state.m.b1, state.v.b1, corr1, corr2, state.cfg);
  update_tensor(params.w2, grads.w2, state.m.w2, state.v.w2, corr1, corr2, state.cfg);
  update_tensor(params.b2, grads.b2, state.m.b2, state.v.b2, corr1, corr2, state.cfg);
}

VecAdamState VecAdamState::init(Index n, AdamConfig cfg) {
  VecAdamState s;
  s.cfg = cfg;
  s.m = Vector::Zero(n);
  s.v = Vector::Zero(n);
  return s;
}

void adam_step(Vector& params, const Vector& grads, VecAdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw DimensionError("adam_step: vector parameter shapes disagree");
  if (!grads.allFinite())
    throw TrainError(state.step, "non-finite gradient in adam_step");
  ++state.step;
  const double corr1 = 1.0 - std::pow(state.cfg.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(state.cfg.beta2, static_cast<double>(state.step));
  update_tensor(params, grads, state.m, state.v, corr1, corr2, state.cfg);
}

}  // namespace partivae::nn
