#pragma once

#include "partivae/adam.hpp"
#include "partivae/errors.hpp"
#include "partivae/mlp.hpp"
#include "partivae/relax.hpp"
#include "partivae/rng.hpp"
#include "partivae/targets.hpp"

#include <functional>
#include <vector>

namespace partivae::vae {

// D independent fair-coin auxiliary variables; -ln P(y) = D ln 2 for every y.
struct LatentSpec {
  int D = 1;
};

// Decoder network y -> phi fields (spin targets, n outputs) or raw values
// mapped to positive Beta/Kumaraswamy parameter pairs (ranking, 2n outputs).
struct DecoderR {
  nn::MlpParams net;
};

// Encoder network x -> theta fields of the product-Bernoulli posterior.
struct EncoderQ {
  nn::MlpParams net;
};

// Shift added before softplus so a zero output layer yields a = b = 1
// (the uniform decoder): softplus(kPositiveShift) == 1.
inline constexpr double kPositiveShift = 0.5413248546129181;  // ln(e - 1)

// Soft ranking configurations are kept inside [kConfigClamp, 1-kConfigClamp]
// to avoid the density singularities at the interval ends.
inline constexpr double kConfigClamp = 1e-6;

struct ElboEstimate {
  enum class Mode { kHard, kRelaxed };
  double mean = 0.0;
  double stderr_ = 0.0;
  long n_samples = 0;
  Mode mode = Mode::kHard;
};

struct TrainConfig {
  int batch_size = 128;
  long n_steps = 5000;
  int hidden = 1024;
  long eval_samples = 100000;
  std::uint64_t seed = 1;
  bool lr_decay = false;  // linear decay of the Adam step size to zero
  relax::RelaxConfig relax;  // tau, sigmoid_k, beta mode
  nn::AdamConfig adam;
};

struct Model {
  DecoderR decoder;
  EncoderQ encoder;
  LatentSpec latent;
};

// Glorot hidden layers, zero output layers: the initial R and Q are exactly
// uniform. Seeded via the decoder/encoder init streams of `seed`.
Model init_model(const targets::TargetModel& target, int D, int hidden, std::uint64_t seed);

// Decoder fields phi(y) for spin targets.
Vector decoder_fields(const DecoderR& dec, const Vector& y);

// Decoder (a, b) positive parameter pairs for the ranking target.
std::pair<Vector, Vector> decoder_ab(const DecoderR& dec, const Vector& y);

// One exact term ln f(x) + ln Q(y|x) - ln P(y) - ln R(x|y) for a hard draw
// (y from the prior, x from R). Ranking adds the ln n! simplex-volume
// constant and evaluates f at the sort order of the continuous draw.
// Throws NumericError naming the offending factor if any piece is non-finite.
double elbo_term(const targets::TargetModel& target, const DecoderR& dec, const EncoderQ& enc,
                 const Vector& y, const Vector& x, const relax::RelaxConfig& rc = {});

// Uniform variates for one batch, filled column by column (latent rows first,
// then configuration rows), so results are independent of batching.
relax::NoiseDraw draw_noise(SplitMix& stream, int D, int n, int batch);

// Batched reparameterized objective: the Monte Carlo relaxed ELBO and its
// exact gradients for the fixed architecture. Pure in (params, noise); with
// shared noise this is the function finite-difference checks probe.
struct RelaxedElbo {
  double objective = 0.0;
  nn::MlpParams dec_grad;
  nn::MlpParams enc_grad;
  Vector target_grad;
};

RelaxedElbo relaxed_elbo(const targets::TargetModel& target, const DecoderR& dec,
                         const EncoderQ& enc, int D, const relax::RelaxConfig& rc,
                         const relax::NoiseDraw& noise, bool want_grads = true);

struct TrainResult {
  Model model;
  std::vector<double> trace;  // per-step batch-mean relaxed objective
  Vector target_params;       // learned raw target parameters (may be empty)
};

// Adam ascent on the relaxed ELBO; learnable target parameters (SBM omega
// logits, ranking w) are updated jointly and mutated on `target`.
TrainResult train(targets::TargetModel& target, const LatentSpec& latent, const TrainConfig& cfg);

// Carries the model state at the failing step of an aborted training run.
struct TrainAbort : TrainError {
  TrainAbort(long step, const std::string& what, Model snapshot_at_failure)
      : TrainError(step, what), snapshot(std::move(snapshot_at_failure)) {}
  Model snapshot;
};

// Monte Carlo lower-bound estimate from hard draws with exact log masses.
ElboEstimate estimate_lnZ(const targets::TargetModel& target, const DecoderR& dec,
                          const EncoderQ& enc, const LatentSpec& latent, long n_samples,
                          SplitMix stream, const relax::RelaxConfig& rc = {});

// Two-stage sampler: y from the prior, x from R(.|y); ranking draws are
// rounded to permutations.
std::vector<Vector> sample_x(const targets::TargetModel& target, const DecoderR& dec,
                             const LatentSpec& latent, long n_samples, SplitMix stream,
                             const relax::RelaxConfig& rc = {});

struct SweepRow {
  int D = 0;
  ElboEstimate estimate;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  int best_index = 0;  // argmax mean; ties go to the smallest D
};

using SweepCallback = std::function<void(int D, const TrainResult&, const ElboEstimate&,
                                         const targets::TargetModel&)>;

// Independent training runs per D with seeds cfg.seed XOR D.
SweepResult sweep_D(const targets::TargetModel& target, const std::vector<int>& D_set,
                    const TrainConfig& cfg, const SweepCallback& per_run = nullptr);

struct MeanFieldResult {
  Vector fields;  // constant per-site fields phi
  ElboEstimate bound;
  Model model;
};

// The zero-auxiliary-variable special case: constant fields optimized by the
// same loop (spin targets only).
MeanFieldResult mean_field(targets::TargetModel& target, const TrainConfig& cfg);

}  // namespace partivae::vae
