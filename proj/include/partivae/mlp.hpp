#pragma once

#include "partivae/math.hpp"
#include "partivae/rng.hpp"

#include <utility>

namespace partivae::nn {

// Parameters of the fixed architecture: one hidden SELU layer,
// out = w2 * selu(w1 * x + b1) + b2.
struct MlpParams {
  Matrix w1;  // hidden x in
  Vector b1;  // hidden
  Matrix w2;  // out x hidden
  Vector b2;  // out

  Index in_dim() const { return w1.cols(); }
  Index hidden_dim() const { return w1.rows(); }
  Index out_dim() const { return w2.rows(); }
  Index size() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  bool same_shape(const MlpParams& o) const {
    return w1.rows() == o.w1.rows() && w1.cols() == o.w1.cols() &&
           b1.size() == o.b1.size() && w2.rows() == o.w2.rows() &&
           w2.cols() == o.w2.cols() && b2.size() == o.b2.size();
  }

  bool all_finite() const {
    return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
  }

  void set_zero() {
    w1.setZero();
    b1.setZero();
    w2.setZero();
    b2.setZero();
  }

  static MlpParams zeros(Index in, Index hidden, Index out);

  // Glorot-uniform weights, zero biases. With zero_output_layer the second
  // layer starts at exactly zero so the represented fields are zero.
  static MlpParams glorot(Index in, Index hidden, Index out, SplitMix& rng,
                          bool zero_output_layer = true);
};

// Cached activations of one forward pass (columns = batch members).
// Immutable after the pass; enough to reproduce exact gradients.
struct GradTape {
  Matrix input;   // in x B
  Matrix hpre;    // hidden x B, pre-activation
  Matrix hidden;  // hidden x B, selu(hpre)
};

// Forward pass over a batch (each column one input). Fills *tape when given.
Matrix mlp_forward(const MlpParams& p, const Matrix& input, GradTape* tape = nullptr);

// Single-vector convenience overload.
std::pair<Vector, GradTape> mlp_forward(const MlpParams& p, const Vector& input);

struct MlpBackward {
  MlpParams grads;    // d(sum_b out_grad_b . output_b) / d params
  Matrix input_grad;  // in x B
};

// Exact reverse pass for the fixed architecture; gradients of
// sum over batch of out_grad . output.
MlpBackward mlp_backward(const MlpParams& p, const GradTape& tape, const Matrix& out_grad);

}  // namespace partivae::nn
