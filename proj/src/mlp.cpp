#include "partivae/mlp.hpp"

#include "partivae/errors.hpp"

#include <cmath>
#include <string>

namespace partivae::nn {

MlpParams MlpParams::zeros(Index in, Index hidden, Index out) {
  MlpParams p;
  p.w1 = Matrix::Zero(hidden, in);
  p.b1 = Vector::Zero(hidden);
  p.w2 = Matrix::Zero(out, hidden);
  p.b2 = Vector::Zero(out);
  return p;
}

MlpParams MlpParams::glorot(Index in, Index hidden, Index out, SplitMix& rng,
                            bool zero_output_layer) {
  MlpParams p = zeros(in, hidden, out);
  const double lim1 = std::sqrt(6.0 / static_cast<double>(in + hidden));
  for (Index j = 0; j < p.w1.cols(); ++j)
    for (Index i = 0; i < p.w1.rows(); ++i) p.w1(i, j) = rng.next_range(-lim1, lim1);
  if (!zero_output_layer) {
    const double lim2 = std::sqrt(6.0 / static_cast<double>(hidden + out));
    for (Index j = 0; j < p.w2.cols(); ++j)
      for (Index i = 0; i < p.w2.rows(); ++i) p.w2(i, j) = rng.next_range(-lim2, lim2);
  }
  return p;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& input, GradTape* tape) {
  if (input.rows() != p.in_dim())
    throw DimensionError("mlp_forward: input has " + std::to_string(input.rows()) +
                         " rows, net expects " + std::to_string(p.in_dim()));
  Matrix hpre = (p.w1 * input).colwise() + p.b1;
  Matrix hidden = hpre.unaryExpr([](double z) { return selu(z); });
  Matrix out = (p.w2 * hidden).colwise() + p.b2;
  if (tape) {
    tape->input = input;
    tape->hpre = std::move(hpre);
    tape->hidden = std::move(hidden);
  }
  return out;
}

std::pair<Vector, GradTape> mlp_forward(const MlpParams& p, const Vector& input) {
  GradTape tape;
  Matrix out = mlp_forward(p, Matrix(input), &tape);
  return {Vector(out.col(0)), std::move(tape)};
}

MlpBackward mlp_backward(const MlpParams& p, const GradTape& tape, const Matrix& out_grad) {
  if (out_grad.rows() != p.out_dim() || out_grad.cols() != tape.input.cols())
    throw DimensionError("mlp_backward: out_grad is " + std::to_string(out_grad.rows()) +
                         "x" + std::to_string(out_grad.cols()) + ", expected " +
                         std::to_string(p.out_dim()) + "x" + std::to_string(tape.input.cols()));
  MlpBackward r;
  r.grads.b2 = out_grad.rowwise().sum();
  r.grads.w2.noalias() = out_grad * tape.hidden.transpose();
  Matrix dh = p.w2.transpose() * out_grad;
  dh.array() *= tape.hpre.unaryExpr([](double z) { return selu_grad(z); }).array();
  r.grads.b1 = dh.rowwise().sum();
  r.grads.w1.noalias() = dh * tape.input.transpose();
  r.input_grad.noalias() = p.w1.transpose() * dh;
  return r;
}

}  // namespace partivae::nn
