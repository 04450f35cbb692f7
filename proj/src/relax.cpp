#include "partivae/relax.hpp"

#include "partivae/errors.hpp"

#include <array>
#include <cmath>
#include <string>

namespace partivae::relax {

namespace {

void check_unit(double u, const char* who) {
  if (!(u > 0.0 && u < 1.0))
    throw NumericError(std::string(who) + ": noise variate must lie strictly inside (0,1)");
}

void check_positive(double v, const char* who, const char* name) {
  if (!(v > 0.0))
    throw NumericError(std::string(who) + ": parameter " + name + " must be > 0");
}

}  // namespace

double gumbel_soft_spin(double log_odds, double tau, double u) {
  check_positive(tau, "gumbel_soft_spin", "tau");
  check_unit(u, "gumbel_soft_spin");
  const double noise = logistic_noise(clamp_unit(u));
  return 2.0 * sigmoid((log_odds + noise) / tau) - 1.0;
}

double harden_spin(double log_odds, double u) {
  check_unit(u, "harden_spin");
  return log_odds + logistic_noise(clamp_unit(u)) > 0.0 ? 1.0 : -1.0;
}

double soft_indicator(double d, double k) {
  check_positive(k, "soft_indicator", "k");
  if (d < 0.0) return 1.0 - soft_indicator(-d, k);
  return sigmoid(k * d);
}

KumaSample kuma_sample(double a, double b, double u) {
  check_positive(a, "kuma_sample", "a");
  check_positive(b, "kuma_sample", "b");
  check_unit(u, "kuma_sample");
  const double uc = clamp_unit(u);
  const double lt = std::log1p(-uc) / b;  // ln t, t = (1-u)^{1/b}
  const double t = std::exp(lt);
  const double s = -std::expm1(lt);  // 1 - t = x^a
  const double lnx = std::log(s) / a;
  const double x = std::exp(lnx);
  KumaSample r;
  r.x = x;
  r.dx_da = -x * lnx / a;
  r.dx_db = t * lt * std::exp((1.0 - a) * lnx) / (a * b);
  return r;
}

double kuma_cdf(double x, double a, double b) {
  check_positive(a, "kuma_cdf", "a");
  check_positive(b, "kuma_cdf", "b");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double s = -std::expm1(a * std::log(x));  // 1 - x^a
  if (s <= 0.0) return 1.0;
  return -std::expm1(b * std::log(s));
}

LogPdfEval kuma_log_pdf(double x, double a, double b) {
  check_positive(a, "kuma_log_pdf", "a");
  check_positive(b, "kuma_log_pdf", "b");
  if (!(x > 0.0 && x < 1.0))
    throw NumericError("kuma_log_pdf: x must lie strictly inside (0,1)");
  const double lnx = std::log(x);
  const double la = a * lnx;
  const double xa = std::exp(la);
  const double s = -std::expm1(la);  // 1 - x^a
  LogPdfEval r;
  r.value = std::log(a) + std::log(b) + (a - 1.0) * lnx + (b - 1.0) * std::log(s);
  r.d_x = (a - 1.0) / x - (b - 1.0) * a * xa / (x * s);
  r.d_a = 1.0 / a + lnx - (b - 1.0) * xa * lnx / s;
  r.d_b = 1.0 / b + std::log(s);
  return r;
}

// ---- Beta mode ---------------------------------------------------------

double digamma(double x) {
  if (!(x > 0.0)) throw NumericError("digamma: x must be > 0");
  double r = 0.0;
  while (x < 10.0) {
    r -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // asymptotic series through the 1/x^10 Bernoulli term
  return r + std::log(x) - 0.5 * inv -
         inv2 * (1.0 / 12.0 -
                 inv2 * (1.0 / 120.0 -
                         inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
}

namespace {

double ln_beta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

// Continued fraction for the regularized incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIt = 400;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIt; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

// 64-point Gauss-Legendre nodes/weights on [0,1], computed once by Newton
// iteration on the Legendre recurrence.
struct GaussLegendre {
  std::array<double, 64> node;
  std::array<double, 64> weight;

  GaussLegendre() {
    const int n = 64;
    for (int i = 0; i < n / 2 + 1; ++i) {
      double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        pp = n * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / pp;
        z -= dz;
        if (std::abs(dz) < 1e-15) break;
      }
      node[i] = 0.5 * (1.0 - z);
      node[n - 1 - i] = 0.5 * (1.0 + z);
      weight[i] = weight[n - 1 - i] = 1.0 / ((1.0 - z * z) * pp * pp);
    }
  }
};

const GaussLegendre& gl64() {
  static const GaussLegendre g;
  return g;
}

}  // namespace

double beta_cdf(double x, double a, double b) {
  check_positive(a, "beta_cdf", "a");
  check_positive(b, "beta_cdf", "b");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double bt =
      std::exp(a * std::log(x) + b * std::log1p(-x) - ln_beta(a, b));
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

LogPdfEval beta_log_pdf(double x, double a, double b) {
  check_positive(a, "beta_log_pdf", "a");
  check_positive(b, "beta_log_pdf", "b");
  if (!(x > 0.0 && x < 1.0))
    throw NumericError("beta_log_pdf: x must lie strictly inside (0,1)");
  const double lnx = std::log(x);
  const double ln1mx = std::log1p(-x);
  const double psi_ab = digamma(a + b);
  LogPdfEval r;
  r.value = (a - 1.0) * lnx + (b - 1.0) * ln1mx - ln_beta(a, b);
  r.d_x = (a - 1.0) / x - (b - 1.0) / (1.0 - x);
  r.d_a = lnx - digamma(a) + psi_ab;
  r.d_b = ln1mx - digamma(b) + psi_ab;
  return r;
}

KumaSample beta_newton_sample(double a, double b, double u) {
  check_positive(a, "beta_newton_sample", "a");
  check_positive(b, "beta_newton_sample", "b");
  check_unit(u, "beta_newton_sample");
  const double uc = clamp_unit(u);

  // Kumaraswamy quantile as the starting guess, then safeguarded Newton.
  double lo = 0.0, hi = 1.0;
  double x = kuma_sample(a, b, uc).x;
  x = std::min(1.0 - 1e-14, std::max(1e-14, x));
  for (int it = 0; it < 100; ++it) {
    const double f = beta_cdf(x, a, b) - uc;
    if (f > 0.0)
      hi = x;
    else
      lo = x;
    const double pdf = std::exp(beta_log_pdf(x, a, b).value);
    double step = pdf > 0.0 ? f / pdf : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // bisect when Newton escapes
    if (std::abs(xn - x) < 1e-15 * std::max(1.0, std::abs(x)) && std::abs(f) < 1e-13) {
      x = xn;
      break;
    }
    x = xn;
  }

  // Implicit differentiation: dx/da = -(dF/da)/pdf, with dF/da evaluated by
  // Gauss-Legendre quadrature after the substitution t = x s^2 (regularizes
  // the t -> 0 endpoint for a < 1).
  const double psi_a = digamma(a), psi_b = digamma(b), psi_ab = digamma(a + b);
  const double lnB = ln_beta(a, b);
  const auto& gq = gl64();
  double dFda = 0.0, dFdb = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double s = gq.node[i];
    const double t = x * s * s;
    if (t <= 0.0 || t >= 1.0) continue;
    const double lpdf = (a - 1.0) * std::log(t) + (b - 1.0) * std::log1p(-t) - lnB;
    const double jac = 2.0 * x * s;  // dt/ds
    const double w = gq.weight[i] * std::exp(lpdf) * jac;
    dFda += w * (std::log(t) - psi_a + psi_ab);
    dFdb += w * (std::log1p(-t) - psi_b + psi_ab);
  }
  const double pdf = std::exp(beta_log_pdf(x, a, b).value);
  KumaSample r;
  r.x = x;
  r.dx_da = pdf > 0.0 ? -dFda / pdf : 0.0;
  r.dx_db = pdf > 0.0 ? -dFdb / pdf : 0.0;
  return r;
}

}  // namespace partivae::relax
