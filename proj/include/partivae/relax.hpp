#pragma once

#include "partivae/math.hpp"

#include <cstdint>

namespace partivae::relax {

enum class BetaMode { kKumaraswamy, kBetaNewton };

struct RelaxConfig {
  double tau = 1.0 / 16.0;    // Gumbel-softmax temperature
  double sigmoid_k = 50.0;    // steepness of the indicator surrogate
  BetaMode beta_mode = BetaMode::kKumaraswamy;
};

// Uniform variates feeding one batch of reparameterized samples.
// u_latent is D x B, u_config is n x B; column b belongs to batch member b
// and is filled latent-first (see vae::draw_noise).
struct NoiseDraw {
  Matrix u_latent;
  Matrix u_config;
  std::uint64_t stream_id = 0;
};

// Uniform noise is clamped away from {0,1} before any transform.
inline constexpr double kNoiseEps = 1e-12;

inline double clamp_unit(double u) {
  return std::min(1.0 - kNoiseEps, std::max(kNoiseEps, u));
}

// Binary Concrete sample as a soft spin in (-1,1). log_odds = 2*phi for a
// spin with mass proportional to e^{x phi}. Differentiable in log_odds with
// d(spin)/d(log_odds) = 2 s (1-s) / tau for s = sigmoid((log_odds + L)/tau).
double gumbel_soft_spin(double log_odds, double tau, double u);

// Exact Bernoulli spin: +1 with probability sigmoid(log_odds); equals the
// tau -> 0 limit of gumbel_soft_spin with the same noise.
double harden_spin(double log_odds, double u);

// sigmoid(k*d), a differentiable surrogate for the indicator of d > 0.
// Satisfies soft_indicator(d,k) + soft_indicator(-d,k) == 1 exactly.
double soft_indicator(double d, double k);

// ---- Kumaraswamy distribution on (0,1) --------------------------------
// pdf(x; a, b) = a b x^{a-1} (1 - x^a)^{b-1}, closed-form quantile.

struct KumaSample {
  double x;
  double dx_da;
  double dx_db;
};

// Inverse-transform sample x = (1 - (1-u)^{1/b})^{1/a} with the partial
// derivatives of the sampling path.
KumaSample kuma_sample(double a, double b, double u);

double kuma_cdf(double x, double a, double b);

struct LogPdfEval {
  double value;
  double d_x;
  double d_a;
  double d_b;
};

LogPdfEval kuma_log_pdf(double x, double a, double b);

// ---- Beta distribution, Newton-inverted CDF (optional fidelity mode) ---
// Quantile solved by safeguarded Newton on the regularized incomplete beta
// function; parameter gradients via implicit differentiation,
// dx/da = -(dF/da)/pdf with dF/da evaluated by quadrature.

double beta_cdf(double x, double a, double b);

KumaSample beta_newton_sample(double a, double b, double u);

LogPdfEval beta_log_pdf(double x, double a, double b);

double digamma(double x);

}  // namespace partivae::relax
