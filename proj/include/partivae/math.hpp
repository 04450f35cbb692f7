#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace partivae {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// SELU self-normalizing constants.
inline constexpr double kSeluLambda = 1.0507009873554805;
inline constexpr double kSeluAlpha = 1.6732632423543772;

template <typename T>
inline T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// ln(1 + e^z) without overflow.
template <typename T>
inline T softplus(T z) {
  return z > T(0) ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Inverse of softplus on (0, inf).
template <typename T>
inline T softplus_inverse(T y) {
  return y > T(30) ? y : std::log(std::expm1(y));
}

// ln(2 cosh z) without overflow.
template <typename T>
inline T log2cosh(T z) {
  const T a = std::abs(z);
  return a + std::log1p(std::exp(T(-2) * a));
}

template <typename T>
inline T selu(T z) {
  return z > T(0) ? T(kSeluLambda) * z : T(kSeluLambda) * T(kSeluAlpha) * std::expm1(z);
}

template <typename T>
inline T selu_grad(T z) {
  return z > T(0) ? T(kSeluLambda) : T(kSeluLambda) * T(kSeluAlpha) * std::exp(z);
}

// ln u - ln(1-u); distributed as the difference of two standard Gumbels
// when u is uniform on (0,1).
template <typename T>
inline T logistic_noise(T u) {
  return std::log(u) - std::log1p(-u);
}

inline double log_sum_exp(std::span<const double> v) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : v) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// Streaming log-sum-exp with optional rescaled linear accumulators, so an
// exhaustive sweep can produce ln Z and expectations in one pass.
class OnlineLogSum {
 public:
  explicit OnlineLogSum(Index n_stats = 0) : stats_(Vector::Zero(n_stats)) {}

  void add(double ln_w) {
    rescale(ln_w);
    sum_ += std::exp(ln_w - max_);
  }

  void add(double ln_w, const Vector& stats) {
    rescale(ln_w);
    const double w = std::exp(ln_w - max_);
    sum_ += w;
    stats_.noalias() += w * stats;
  }

  double log_sum() const {
    if (sum_ <= 0.0) return -std::numeric_limits<double>::infinity();
    return max_ + std::log(sum_);
  }

  // Accumulated statistics normalized by the total weight.
  Vector mean_stats() const { return sum_ > 0.0 ? Vector(stats_ / sum_) : stats_; }

  double total_weight_scaled() const { return sum_; }

 private:
  void rescale(double ln_w) {
    if (ln_w <= max_) return;
    const double f = std::exp(max_ - ln_w);
    sum_ *= f;
    stats_ *= f;
    max_ = ln_w;
  }

  double max_ = -std::numeric_limits<double>::infinity();
  double sum_ = 0.0;
  Vector stats_;
};

// A real number carried as sign * e^{ln_abs}.
struct SignedLog {
  double ln_abs;
  int sign;  // -1, 0, +1
};

// ln |Σ_i s_i e^{l_i}| with the sign of the sum; the caller guarantees the
// total is positive where that matters (e.g. partition functions).
inline SignedLog signed_log_sum(std::span<const SignedLog> terms) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& t : terms)
    if (t.sign != 0) m = std::max(m, t.ln_abs);
  if (!std::isfinite(m)) return {-std::numeric_limits<double>::infinity(), 0};
  double s = 0.0;
  for (const auto& t : terms)
    if (t.sign != 0) s += t.sign * std::exp(t.ln_abs - m);
  if (s == 0.0) return {-std::numeric_limits<double>::infinity(), 0};
  return {m + std::log(std::abs(s)), s > 0 ? 1 : -1};
}

}  // namespace partivae
