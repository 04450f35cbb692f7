#include "partivae/vae.hpp"

#include "partivae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace partivae::vae {

using targets::TargetModel;

namespace {

constexpr double kLn2 = 0.6931471805599453;

Matrix logistic_mat(const Matrix& u) {
  return u.unaryExpr([](double v) { return logistic_noise(relax::clamp_unit(v)); });
}

Matrix soft_spin_mat(const Matrix& logits_plus_noise, double tau) {
  return logits_plus_noise.unaryExpr(
      [tau](double z) { return 2.0 * sigmoid(z / tau) - 1.0; });
}

Matrix log2cosh_mat(const Matrix& m) {
  return m.unaryExpr([](double z) { return log2cosh(z); });
}

double clamp_config(double x) {
  return std::min(1.0 - kConfigClamp, std::max(kConfigClamp, x));
}

void check_finite(double v, const char* factor) {
  if (!std::isfinite(v))
    throw NumericError(std::string("elbo_term: non-finite ") + factor);
}

int decoder_out_dim(const TargetModel& target) {
  return target.spin() ? target.dim() : 2 * target.dim();
}

relax::KumaSample draw_positive_family(relax::BetaMode mode, double a, double b, double u) {
  return mode == relax::BetaMode::kBetaNewton ? relax::beta_newton_sample(a, b, u)
                                              : relax::kuma_sample(a, b, u);
}

relax::LogPdfEval positive_family_log_pdf(relax::BetaMode mode, double x, double a, double b) {
  return mode == relax::BetaMode::kBetaNewton ? relax::beta_log_pdf(x, a, b)
                                              : relax::kuma_log_pdf(x, a, b);
}

}  // namespace

Model init_model(const TargetModel& target, int D, int hidden, std::uint64_t seed) {
  if (D < 0) throw ConfigError("init_model: D must be >= 0");
  if (hidden < 1) throw ConfigError("init_model: hidden must be >= 1");
  SplitMix droot = SplitMix(seed).split(stream::kDecoderInit);
  SplitMix eroot = SplitMix(seed).split(stream::kEncoderInit);
  Model m;
  m.latent.D = D;
  m.decoder.net = nn::MlpParams::glorot(D, hidden, decoder_out_dim(target), droot, true);
  m.encoder.net = nn::MlpParams::glorot(target.dim(), hidden, D, eroot, true);
  return m;
}

Vector decoder_fields(const DecoderR& dec, const Vector& y) {
  return nn::mlp_forward(dec.net, Matrix(y), nullptr).col(0);
}

std::pair<Vector, Vector> decoder_ab(const DecoderR& dec, const Vector& y) {
  const Vector raw = nn::mlp_forward(dec.net, Matrix(y), nullptr).col(0);
  const Index n = raw.size() / 2;
  Vector a(n), b(n);
  for (Index i = 0; i < n; ++i) {
    a[i] = softplus(raw[i] + kPositiveShift);
    b[i] = softplus(raw[n + i] + kPositiveShift);
  }
  return {a, b};
}

double elbo_term(const TargetModel& target, const DecoderR& dec, const EncoderQ& enc,
                 const Vector& y, const Vector& x, const relax::RelaxConfig& rc) {
  const int n = target.dim();
  const Index D = y.size();
  if (x.size() != n) throw DimensionError("elbo_term: configuration size mismatch");
  if (dec.net.in_dim() != D || enc.net.out_dim() != D)
    throw DimensionError("elbo_term: latent size mismatch");

  const double ln_p = -static_cast<double>(D) * kLn2;

  double ln_r = 0.0;
  if (target.spin()) {
    const Vector phi = decoder_fields(dec, y);
    for (int i = 0; i < n; ++i) ln_r += x[i] * phi[i] - log2cosh(phi[i]);
  } else {
    const auto [a, b] = decoder_ab(dec, y);
    for (int i = 0; i < n; ++i)
      ln_r += positive_family_log_pdf(rc.beta_mode, x[i], a[i], b[i]).value;
  }
  check_finite(ln_r, "ln R(x|y)");

  const Vector theta = mlp_forward(enc.net, Matrix(x), nullptr).col(0);
  double ln_q = 0.0;
  for (Index i = 0; i < D; ++i) ln_q += y[i] * theta[i] - log2cosh(theta[i]);
  check_finite(ln_q, "ln Q(y|x)");

  double ln_f = target.log_f_eval(x);
  if (!target.spin()) ln_f += std::lgamma(target.dim() + 1.0);  // simplex-volume factor
  check_finite(ln_f, "ln f(x)");

  return ln_f + ln_q - ln_p - ln_r;
}

relax::NoiseDraw draw_noise(SplitMix& stream, int D, int n, int batch) {
  relax::NoiseDraw nd;
  nd.u_latent.resize(D, batch);
  nd.u_config.resize(n, batch);
  for (int b = 0; b < batch; ++b) {
    for (int i = 0; i < D; ++i) nd.u_latent(i, b) = stream.next_unit();
    for (int i = 0; i < n; ++i) nd.u_config(i, b) = stream.next_unit();
  }
  return nd;
}

RelaxedElbo relaxed_elbo(const TargetModel& target, const DecoderR& dec, const EncoderQ& enc,
                         int D, const relax::RelaxConfig& rc, const relax::NoiseDraw& noise,
                         bool want_grads) {
  const int n = target.dim();
  const int B = static_cast<int>(noise.u_config.cols());
  if (noise.u_latent.rows() != D || noise.u_config.rows() != n ||
      noise.u_latent.cols() != B || B < 1)
    throw DimensionError("relaxed_elbo: noise shape mismatch");
  const double invB = 1.0 / B;
  const int n_learn = target.n_learnable();

  // soft prior draws (log-odds 0)
  const Matrix y = soft_spin_mat(logistic_mat(noise.u_latent), rc.tau);

  nn::GradTape dec_tape;
  const Matrix dec_out = nn::mlp_forward(dec.net, y, want_grads ? &dec_tape : nullptr);

  RelaxedElbo out;
  if (n_learn > 0) out.target_grad = Vector::Zero(n_learn);

  Matrix x;           // n x B soft configurations
  Matrix s;           // spin path: inner sigmoids
  Matrix a_par, b_par, dxda, dxdb, mask, d_pdf_x, d_pdf_a, d_pdf_b;  // ranking path
  Vector ln_r_col(B);

  if (target.spin()) {
    const Matrix lx = logistic_mat(noise.u_config);
    const Matrix z = (2.0 * dec_out + lx) / rc.tau;
    s = z.unaryExpr([](double v) { return sigmoid(v); });
    x = 2.0 * s - Matrix::Ones(n, B);
    ln_r_col = (x.cwiseProduct(dec_out) - log2cosh_mat(dec_out)).colwise().sum().transpose();
  } else {
    a_par.resize(n, B);
    b_par.resize(n, B);
    x.resize(n, B);
    dxda.resize(n, B);
    dxdb.resize(n, B);
    mask.resize(n, B);
    d_pdf_x.resize(n, B);
    d_pdf_a.resize(n, B);
    d_pdf_b.resize(n, B);
    for (int col = 0; col < B; ++col) {
      double lr = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = softplus(dec_out(i, col) + kPositiveShift);
        const double b = softplus(dec_out(n + i, col) + kPositiveShift);
        a_par(i, col) = a;
        b_par(i, col) = b;
        const auto ks = draw_positive_family(rc.beta_mode, a, b, noise.u_config(i, col));
        const double xc = clamp_config(ks.x);
        x(i, col) = xc;
        mask(i, col) = xc == ks.x ? 1.0 : 0.0;
        dxda(i, col) = ks.dx_da;
        dxdb(i, col) = ks.dx_db;
        const auto pe = positive_family_log_pdf(rc.beta_mode, xc, a, b);
        lr += pe.value;
        d_pdf_x(i, col) = pe.d_x;
        d_pdf_a(i, col) = pe.d_a;
        d_pdf_b(i, col) = pe.d_b;
      }
      ln_r_col[col] = lr;
    }
  }

  nn::GradTape enc_tape;
  const Matrix theta = nn::mlp_forward(enc.net, x, want_grads ? &enc_tape : nullptr);

  const Vector ln_q_col =
      D > 0 ? Vector((y.cwiseProduct(theta) - log2cosh_mat(theta)).colwise().sum().transpose())
            : Vector(Vector::Zero(B));

  double obj = 0.0;
  Vector ln_f_col(B);
  for (int col = 0; col < B; ++col) {
    ln_f_col[col] = target.log_f_soft(x.col(col), rc.sigmoid_k);
    obj += ln_f_col[col] + ln_q_col[col] + D * kLn2 - ln_r_col[col];
  }
  if (!target.spin()) obj += B * std::lgamma(n + 1.0);
  out.objective = obj * invB;

  if (!want_grads) return out;

  // encoder gradients; input gradient feeds d(term)/dx
  const Matrix g_theta = (y - theta.unaryExpr([](double v) { return std::tanh(v); })) * invB;
  nn::MlpBackward enc_back = nn::mlp_backward(enc.net, enc_tape, g_theta);
  out.enc_grad = std::move(enc_back.grads);

  Matrix gx = std::move(enc_back.input_grad);  // n x B
  {
    Vector gcol(n);
    Vector gp = n_learn > 0 ? Vector::Zero(n_learn) : Vector();
    for (int col = 0; col < B; ++col) {
      gcol.setZero();
      target.soft_grad(x.col(col), rc.sigmoid_k, invB, gcol, n_learn > 0 ? &gp : nullptr);
      gx.col(col) += gcol;
    }
    if (n_learn > 0) out.target_grad = gp;
  }

  Matrix g_dec_out;
  if (target.spin()) {
    gx -= dec_out * invB;  // -d ln R / d x
    const Matrix dxdphi = 4.0 / rc.tau * s.cwiseProduct(Matrix::Ones(n, B) - s);
    g_dec_out = -(x - dec_out.unaryExpr([](double v) { return std::tanh(v); })) * invB +
                gx.cwiseProduct(dxdphi);
  } else {
    gx -= d_pdf_x * invB;
    const Matrix g_a = gx.cwiseProduct(dxda).cwiseProduct(mask) - d_pdf_a * invB;
    const Matrix g_b = gx.cwiseProduct(dxdb).cwiseProduct(mask) - d_pdf_b * invB;
    g_dec_out.resize(2 * n, B);
    for (int col = 0; col < B; ++col)
      for (int i = 0; i < n; ++i) {
        g_dec_out(i, col) = g_a(i, col) * sigmoid(dec_out(i, col) + kPositiveShift);
        g_dec_out(n + i, col) = g_b(i, col) * sigmoid(dec_out(n + i, col) + kPositiveShift);
      }
  }
  nn::MlpBackward dec_back = nn::mlp_backward(dec.net, dec_tape, g_dec_out);
  out.dec_grad = std::move(dec_back.grads);
  return out;
}

TrainResult train(TargetModel& target, const LatentSpec& latent, const TrainConfig& cfg) {
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.n_steps < 0) throw ConfigError("train: n_steps must be >= 0");
  if (!(cfg.relax.tau > 0.0)) throw ConfigError("train: tau must be > 0");

  TrainResult r;
  r.model = init_model(target, latent.D, cfg.hidden, cfg.seed);
  r.trace.reserve(static_cast<size_t>(cfg.n_steps));

  nn::AdamState dec_state = nn::AdamState::init(r.model.decoder.net, cfg.adam);
  nn::AdamState enc_state = nn::AdamState::init(r.model.encoder.net, cfg.adam);
  const int n_learn = target.n_learnable();
  Vector tparams = target.learnable_params();
  nn::VecAdamState t_state = nn::VecAdamState::init(n_learn, cfg.adam);

  SplitMix noise_stream = SplitMix(cfg.seed).split(stream::kTrainNoise);
  const int n = target.dim();

  for (long step = 0; step < cfg.n_steps; ++step) {
    const relax::NoiseDraw nd = draw_noise(noise_stream, latent.D, n, cfg.batch_size);
    RelaxedElbo e;
    try {
      e = relaxed_elbo(target, r.model.decoder, r.model.encoder, latent.D, cfg.relax, nd, true);
    } catch (const NumericError& err) {
      throw TrainAbort(step, err.what(), r.model);
    }
    if (!std::isfinite(e.objective))
      throw TrainAbort(step, "non-finite relaxed objective", r.model);
    if (cfg.lr_decay) {
      const double lr = cfg.adam.lr * (1.0 - static_cast<double>(step) / cfg.n_steps);
      dec_state.cfg.lr = lr;
      enc_state.cfg.lr = lr;
      t_state.cfg.lr = lr;
    }
    try {
      nn::adam_step(r.model.decoder.net, e.dec_grad, dec_state);
      nn::adam_step(r.model.encoder.net, e.enc_grad, enc_state);
      if (n_learn > 0) {
        nn::adam_step(tparams, e.target_grad, t_state);
        target.set_learnable(tparams);
        tparams = target.learnable_params();  // after any projection
      }
    } catch (const TrainError& err) {
      throw TrainAbort(step, err.what(), r.model);
    }
    r.trace.push_back(e.objective);
  }
  r.target_params = target.learnable_params();
  return r;
}

namespace {

// Batched exact terms over hard draws; shares formulas with elbo_term.
void hard_terms(const TargetModel& target, const DecoderR& dec, const EncoderQ& enc, int D,
                const relax::RelaxConfig& rc, const relax::NoiseDraw& nd, Vector* terms,
                std::vector<Vector>* configs) {
  const int n = target.dim();
  const int B = static_cast<int>(nd.u_config.cols());
  Matrix y(D, B);
  for (int col = 0; col < B; ++col)
    for (int i = 0; i < D; ++i) y(i, col) = nd.u_latent(i, col) > 0.5 ? 1.0 : -1.0;

  const Matrix dec_out = nn::mlp_forward(dec.net, y, nullptr);
  Matrix x(n, B);
  Vector ln_r_col = Vector::Zero(B);
  if (target.spin()) {
    for (int col = 0; col < B; ++col) {
      double lr = 0.0;
      for (int i = 0; i < n; ++i) {
        const double phi = dec_out(i, col);
        x(i, col) = relax::harden_spin(2.0 * phi, nd.u_config(i, col));
        lr += x(i, col) * phi - log2cosh(phi);
      }
      ln_r_col[col] = lr;
    }
  } else {
    for (int col = 0; col < B; ++col) {
      double lr = 0.0;
      for (int i = 0; i < n; ++i) {
        const double a = softplus(dec_out(i, col) + kPositiveShift);
        const double b = softplus(dec_out(n + i, col) + kPositiveShift);
        const double xi = clamp_config(
            draw_positive_family(rc.beta_mode, a, b, nd.u_config(i, col)).x);
        x(i, col) = xi;
        lr += positive_family_log_pdf(rc.beta_mode, xi, a, b).value;
      }
      ln_r_col[col] = lr;
    }
  }

  if (terms) {
    const Matrix theta = nn::mlp_forward(enc.net, x, nullptr);
    const Vector ln_q_col =
        D > 0 ? Vector((y.cwiseProduct(theta) - log2cosh_mat(theta)).colwise().sum().transpose())
              : Vector(Vector::Zero(B));
    const double ln_fact = target.spin() ? 0.0 : std::lgamma(n + 1.0);
    for (int col = 0; col < B; ++col) {
      const double ln_f = target.log_f_eval(x.col(col)) + ln_fact;
      check_finite(ln_f, "ln f(x)");
      check_finite(ln_q_col[col], "ln Q(y|x)");
      check_finite(ln_r_col[col], "ln R(x|y)");
      (*terms)[col] = ln_f + ln_q_col[col] + D * kLn2 - ln_r_col[col];
    }
  }
  if (configs) {
    for (int col = 0; col < B; ++col) {
      if (target.spin())
        configs->push_back(x.col(col));
      else
        configs->push_back(targets::rank_round(x.col(col)));
    }
  }
}

}  // namespace

ElboEstimate estimate_lnZ(const TargetModel& target, const DecoderR& dec, const EncoderQ& enc,
                          const LatentSpec& latent, long n_samples, SplitMix stream,
                          const relax::RelaxConfig& rc) {
  if (n_samples < 2) throw ConfigError("estimate_lnZ: n_samples must be >= 2");
  const int n = target.dim();
  // Welford accumulation: exact for constant streams, no cancellation
  double mean = 0.0, m2 = 0.0;
  long seen = 0;
  long remaining = n_samples;
  Vector terms;
  while (remaining > 0) {
    const int B = static_cast<int>(std::min<long>(remaining, 4096));
    const relax::NoiseDraw nd = draw_noise(stream, latent.D, n, B);
    terms.resize(B);
    hard_terms(target, dec, enc, latent.D, rc, nd, &terms, nullptr);
    for (int i = 0; i < B; ++i) {
      ++seen;
      const double delta = terms[i] - mean;
      mean += delta / seen;
      m2 += delta * (terms[i] - mean);
    }
    remaining -= B;
  }
  ElboEstimate e;
  e.n_samples = n_samples;
  e.mode = ElboEstimate::Mode::kHard;
  e.mean = mean;
  e.stderr_ = std::sqrt(std::max(0.0, m2 / (n_samples - 1.0)) / n_samples);
  return e;
}

std::vector<Vector> sample_x(const TargetModel& target, const DecoderR& dec,
                             const LatentSpec& latent, long n_samples, SplitMix stream,
                             const relax::RelaxConfig& rc) {
  const int n = target.dim();
  // encoder is unused when sampling; pass a minimal stub of matching shapes
  EncoderQ unused;
  unused.net = nn::MlpParams::zeros(n, 1, latent.D);
  std::vector<Vector> out;
  out.reserve(static_cast<size_t>(std::max<long>(0, n_samples)));
  long remaining = n_samples;
  while (remaining > 0) {
    const int B = static_cast<int>(std::min<long>(remaining, 4096));
    const relax::NoiseDraw nd = draw_noise(stream, latent.D, n, B);
    hard_terms(target, dec, unused, latent.D, rc, nd, nullptr, &out);
    remaining -= B;
  }
  return out;
}

SweepResult sweep_D(const TargetModel& target, const std::vector<int>& D_set,
                    const TrainConfig& cfg, const SweepCallback& per_run) {
  if (D_set.empty()) throw ConfigError("sweep_D: D_set must be non-empty");
  SweepResult result;
  for (int D : D_set) {
    if (D < 0) throw ConfigError("sweep_D: D must be >= 0");
    TargetModel run_target = target;
    TrainConfig run_cfg = cfg;
    run_cfg.seed = cfg.seed ^ static_cast<std::uint64_t>(D);
    TrainResult tr = train(run_target, LatentSpec{D}, run_cfg);
    ElboEstimate est = estimate_lnZ(run_target, tr.model.decoder, tr.model.encoder,
                                    LatentSpec{D}, cfg.eval_samples,
                                    SplitMix(run_cfg.seed).split(stream::kEvalNoise), cfg.relax);
    result.rows.push_back({D, est});
    if (per_run) per_run(D, tr, est, run_target);
  }
  result.best_index = 0;
  for (size_t i = 1; i < result.rows.size(); ++i) {
    const auto& cand = result.rows[i];
    const auto& best = result.rows[result.best_index];
    if (cand.estimate.mean > best.estimate.mean ||
        (cand.estimate.mean == best.estimate.mean && cand.D < best.D))
      result.best_index = static_cast<int>(i);
  }
  return result;
}

MeanFieldResult mean_field(TargetModel& target, const TrainConfig& cfg) {
  if (!target.spin()) throw ConfigError("mean_field: requires a spin target");
  TrainResult tr = train(target, LatentSpec{0}, cfg);
  MeanFieldResult r;
  r.fields = decoder_fields(tr.model.decoder, Vector(0));
  r.bound = estimate_lnZ(target, tr.model.decoder, tr.model.encoder, LatentSpec{0},
                         cfg.eval_samples, SplitMix(cfg.seed).split(stream::kEvalNoise),
                         cfg.relax);
  r.model = std::move(tr.model);
  return r;
}

}  // namespace partivae::vae
