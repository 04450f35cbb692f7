// partivae: estimate normalizing constants and sample from unnormalized
// distributions with a reversed VAE; exact oracles and MCMC baselines
// included for verification.

#include "partivae/config.hpp"
#include "partivae/errors.hpp"
#include "partivae/io.hpp"
#include "partivae/oracles.hpp"
#include "partivae/vae.hpp"
#include "partivae/version.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace partivae;
using io::Json;

namespace {

struct CliOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> model;
  std::optional<long> n;
};

config::ExperimentConfig resolved_config(const std::string& path, const CliOverrides& ov) {
  config::ExperimentConfig cfg = config::load_config(path);
  if (ov.seed) {
    cfg.seed = *ov.seed;
    cfg.train.seed = *ov.seed;
  }
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  return cfg;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir + "': " + ec.message());
}

Json target_params_json(const targets::TargetModel& target) {
  Json j = Json::object();
  if (target.kind() == targets::TargetModel::Kind::kSbm) {
    j["omega_in"] = target.sbm().omega_in();
    j["omega_out"] = target.sbm().omega_out();
    j["omega_in_logit"] = target.sbm().omega_in_logit;
    j["omega_out_logit"] = target.sbm().omega_out_logit;
  } else if (target.kind() == targets::TargetModel::Kind::kRanking) {
    j["w"] = target.rank().w;
  }
  return j;
}

void write_timing(const std::string& dir, double seconds) {
  Json j;
  j["wall_clock_seconds"] = seconds;
  io::write_text(dir + "/timing.json", io::canonical_dump(j) + "\n");
}

Json run_record(const char* command, const config::ExperimentConfig& cfg,
                const targets::TargetModel& target, const vae::ElboEstimate& est,
                const std::vector<double>& trace, const Json& files) {
  Json rec;
  rec["artifact_version"] = kVersion;
  rec["command"] = command;
  rec["config"] = config::config_snapshot(cfg);
  rec["estimate"] = io::estimate_to_json(est);
  rec["target_params"] = target_params_json(target);
  rec["files"] = files;
  Json ts;
  ts["n_steps"] = static_cast<std::int64_t>(trace.size());
  if (!trace.empty()) {
    ts["first"] = trace.front();
    ts["last"] = trace.back();
  }
  rec["trace_summary"] = ts;
  return rec;
}

int cmd_train(const std::string& config_path, const CliOverrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  config::ExperimentConfig cfg = resolved_config(config_path, ov);
  if (!cfg.D_set.empty())
    throw ConfigError("train expects latent.D; use the sweep command for latent.D_set");
  targets::TargetModel target = config::build_target(cfg);
  ensure_out_dir(cfg.out_dir);

  vae::TrainResult tr;
  try {
    tr = vae::train(target, vae::LatentSpec{cfg.D}, cfg.train);
  } catch (const vae::TrainAbort& abort) {
    const std::string snap = cfg.out_dir + "/abort_model.bin";
    io::save_model(snap, target, abort.snapshot, cfg.train.relax);
    std::cerr << "error: " << abort.what() << " (parameter snapshot: " << snap << ")\n";
    return 3;
  }
  const vae::ElboEstimate est = vae::estimate_lnZ(
      target, tr.model.decoder, tr.model.encoder, tr.model.latent, cfg.train.eval_samples,
      SplitMix(cfg.seed).split(stream::kEvalNoise), cfg.train.relax);

  io::write_trace_csv(cfg.out_dir + "/trace.csv", tr.trace);
  io::save_model(cfg.out_dir + "/model.bin", target, tr.model, cfg.train.relax);
  Json files;
  files["model"] = "model.bin";
  files["trace"] = "trace.csv";
  const Json rec = run_record("train", cfg, target, est, tr.trace, files);
  io::write_text(cfg.out_dir + "/record.json", io::canonical_dump(rec) + "\n");
  write_timing(cfg.out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());

  std::cout << "lnZ lower bound: " << est.mean << " +/- " << est.stderr_ << "  (n_samples "
            << est.n_samples << ")\nwrote " << cfg.out_dir << "/record.json\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const CliOverrides& ov) {
  const auto t0 = std::chrono::steady_clock::now();
  config::ExperimentConfig cfg = resolved_config(config_path, ov);
  targets::TargetModel target = config::build_target(cfg);
  std::vector<int> D_set = cfg.D_set;
  if (D_set.empty()) {
    if (cfg.latent_given) {
      D_set = {cfg.D};
    } else {
      // default grid: powers of two, stopping at the first size >= n
      for (int d = 1; d <= 64; d *= 2) {
        D_set.push_back(d);
        if (d >= target.dim()) break;
      }
    }
  }
  ensure_out_dir(cfg.out_dir);

  std::optional<Json> best_rec;
  vae::SweepResult sweep = vae::sweep_D(
      target, D_set, cfg.train,
      [&](int D, const vae::TrainResult& tr, const vae::ElboEstimate& est,
          const targets::TargetModel& trained) {
        const std::string dir = cfg.out_dir + "/D_" + std::to_string(D);
        ensure_out_dir(dir);
        io::write_trace_csv(dir + "/trace.csv", tr.trace);
        io::save_model(dir + "/model.bin", trained, tr.model, cfg.train.relax);
        config::ExperimentConfig run_cfg = cfg;
        run_cfg.D = D;
        run_cfg.D_set.clear();
        Json files;
        files["model"] = "model.bin";
        files["trace"] = "trace.csv";
        const Json rec = run_record("sweep", run_cfg, trained, est, tr.trace, files);
        io::write_text(dir + "/record.json", io::canonical_dump(rec) + "\n");
        std::cout << "D=" << D << "  bound " << est.mean << " +/- " << est.stderr_ << "\n";
      });

  io::write_sweep_csv(cfg.out_dir + "/sweep.csv", sweep);
  const int best_D = sweep.rows[sweep.best_index].D;
  Json best;
  best["artifact_version"] = kVersion;
  best["command"] = "sweep";
  best["config"] = config::config_snapshot(cfg);
  best["best_D"] = best_D;
  best["best_estimate"] = io::estimate_to_json(sweep.rows[sweep.best_index].estimate);
  Json rows = Json::array();
  for (const auto& r : sweep.rows) {
    Json row;
    row["D"] = r.D;
    row["estimate"] = io::estimate_to_json(r.estimate);
    rows.push_back(row);
  }
  best["rows"] = rows;
  best["files"] = Json{{"table", "sweep.csv"}, {"best_record", "D_" + std::to_string(best_D) + "/record.json"}};
  io::write_text(cfg.out_dir + "/best_record.json", io::canonical_dump(best) + "\n");
  write_timing(cfg.out_dir, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  std::cout << "best D = " << best_D << "\nwrote " << cfg.out_dir << "/best_record.json\n";
  return 0;
}

int cmd_sample(const std::string& config_path, const CliOverrides& ov) {
  std::string model_path;
  long n = 1000;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  if (!config_path.empty()) {
    config::ExperimentConfig cfg = resolved_config(config_path, ov);
    model_path = cfg.sample.model_path;
    n = cfg.sample.n;
    seed = cfg.seed;
    out_dir = cfg.out_dir;
  }
  if (ov.model) model_path = *ov.model;
  if (ov.n) n = *ov.n;
  if (ov.seed) seed = *ov.seed;
  if (ov.out_dir) out_dir = *ov.out_dir;
  if (model_path.empty())
    throw ConfigError("sample: provide --model or a config with sample.model");
  if (n < 0) throw ConfigError("sample: n must be >= 0");

  io::ModelFile mf = io::load_model(model_path);
  const auto samples = vae::sample_x(mf.target, mf.model.decoder, mf.model.latent, n,
                                     SplitMix(seed).split(stream::kSampleNoise), mf.relax);
  ensure_out_dir(out_dir);
  io::write_samples_csv(out_dir + "/samples.csv", samples, !mf.target.spin(), mf.target.dim());
  std::cout << "wrote " << out_dir << "/samples.csv (" << samples.size() << " rows)\n";
  return 0;
}

int cmd_estimate(const std::string& config_path, const CliOverrides& ov) {
  std::string model_path;
  long n_samples = 100000;
  std::uint64_t seed = 1;
  std::string out_dir = "runs/out";
  if (!config_path.empty()) {
    config::ExperimentConfig cfg = resolved_config(config_path, ov);
    model_path = cfg.estimate.model_path;
    n_samples = cfg.estimate.n_samples;
    seed = cfg.seed;
    out_dir = cfg.out_dir;
  }
  if (ov.model) model_path = *ov.model;
  if (ov.n) n_samples = *ov.n;
  if (ov.seed) seed = *ov.seed;
  if (ov.out_dir) out_dir = *ov.out_dir;
  if (model_path.empty())
    throw ConfigError("estimate: provide --model or a config with estimate.model");

  io::ModelFile mf = io::load_model(model_path);
  const vae::ElboEstimate est =
      vae::estimate_lnZ(mf.target, mf.model.decoder, mf.model.encoder, mf.model.latent, n_samples,
                        SplitMix(seed).split(stream::kEvalNoise), mf.relax);
  ensure_out_dir(out_dir);
  Json j;
  j["artifact_version"] = kVersion;
  j["command"] = "estimate";
  j["estimate"] = io::estimate_to_json(est);
  j["target_params"] = target_params_json(mf.target);
  io::write_text(out_dir + "/estimate.json", io::canonical_dump(j) + "\n");
  std::cout << "lnZ lower bound: " << est.mean << " +/- " << est.stderr_ << "  (n_samples "
            << est.n_samples << ")\nwrote " << out_dir << "/estimate.json\n";
  return 0;
}

int cmd_oracle(const std::string& config_path, const CliOverrides& ov) {
  config::ExperimentConfig cfg = resolved_config(config_path, ov);
  targets::TargetModel target = config::build_target(cfg);
  ensure_out_dir(cfg.out_dir);

  Json j;
  j["artifact_version"] = kVersion;
  j["command"] = "oracle";
  j["config"] = config::config_snapshot(cfg);

  const bool is_ising = target.kind() == targets::TargetModel::Kind::kIsing;
  if (is_ising)
    j["transfer_matrix"] = Json{{"lnZ", oracles::ising_exact_lnZ(target.ising().L, target.ising().beta)}};

  const bool enumerable = target.spin() ? target.dim() <= oracles::kMaxSpinBits
                                        : target.dim() <= oracles::kMaxRankObjects;
  if (enumerable) {
    const auto en = oracles::enumerate_lnZ(target, cfg.oracle.top_states);
    Json ej;
    ej["lnZ"] = en.lnZ;
    if (cfg.oracle.top_states > 0) {
      Json tops = Json::array();
      for (const auto& [state, prob] : en.top_states) {
        Json s;
        Json conf = Json::array();
        for (Index i = 0; i < state.size(); ++i)
          conf.push_back(target.spin() ? static_cast<std::int64_t>(std::lround(state[i]))
                                       : static_cast<std::int64_t>(std::lround(state[i] * target.dim())));
        s["config"] = conf;
        s["prob"] = prob;
        tops.push_back(s);
      }
      ej["top_states"] = tops;
    }
    j["enumeration"] = ej;
    io::write_site_means_csv(cfg.out_dir + "/oracle_site_means.csv", en.site_mean);
    if (en.pair_corr.size() > 0)
      io::write_pair_corr_csv(cfg.out_dir + "/oracle_pair_corr.csv", en.pair_corr);
    if (en.rank_position.size() > 0)
      io::write_rank_position_csv(cfg.out_dir + "/oracle_rank_position.csv", en.rank_position);
  } else if (is_ising) {
    j["enumeration_skipped"] = "state space exceeds the 2^" +
                               std::to_string(oracles::kMaxSpinBits) + " enumeration cap";
  } else {
    // non-Ising targets have no closed form; the cap is a hard refusal
    const auto unused = oracles::enumerate_lnZ(target, 0);  // throws CapacityError
    (void)unused;
  }
  io::write_text(cfg.out_dir + "/oracle.json", io::canonical_dump(j) + "\n");
  std::cout << "wrote " << cfg.out_dir << "/oracle.json\n";
  return 0;
}

int cmd_mcmc(const std::string& config_path, const CliOverrides& ov) {
  config::ExperimentConfig cfg = resolved_config(config_path, ov);
  targets::TargetModel target = config::build_target(cfg);
  ensure_out_dir(cfg.out_dir);

  oracles::McmcConfig mc;
  mc.n_sweeps = cfg.mcmc.n_sweeps;
  mc.burn_in = cfg.mcmc.burn_in;
  mc.thin = cfg.mcmc.thin;
  mc.seed = cfg.seed;
  mc.adjacent_transpositions = cfg.mcmc.adjacent_transpositions;

  std::vector<Vector> samples;
  switch (target.kind()) {
    case targets::TargetModel::Kind::kIsing: samples = oracles::mcmc_ising(target.ising(), mc); break;
    case targets::TargetModel::Kind::kSbm: samples = oracles::mcmc_sbm(target.sbm(), mc); break;
    default: samples = oracles::mcmc_rank(target.rank(), mc); break;
  }

  io::write_samples_csv(cfg.out_dir + "/mcmc_samples.csv", samples, !target.spin(), target.dim());
  io::write_site_means_csv(cfg.out_dir + "/mcmc_site_means.csv",
                           oracles::sample_site_means(samples));
  if (target.spin()) {
    io::write_pair_corr_csv(cfg.out_dir + "/mcmc_pair_corr.csv", oracles::sample_pair_corr(samples));
  } else {
    io::write_rank_position_csv(cfg.out_dir + "/mcmc_rank_position.csv",
                                oracles::sample_rank_position(samples));
  }
  std::cout << "wrote " << cfg.out_dir << "/mcmc_samples.csv (" << samples.size() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"partivae: variational lower bounds on ln Z and approximate samplers "
               "for distributions given by an unnormalized f(x)"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  std::string config_path;
  CliOverrides ov;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "experiment config (JSON)");
    if (config_required) opt->required();
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { ov.seed = s; }, "override the config seed");
    sub->add_option_function<std::string>(
        "--out", [&](std::string d) { ov.out_dir = std::move(d); }, "override the output directory");
  };

  auto* train = app.add_subcommand("train", "train a model and report the hard-sample bound");
  add_common(train, true);
  auto* sweep = app.add_subcommand("sweep", "train one model per latent size D, report all bounds");
  add_common(sweep, true);
  auto* sample = app.add_subcommand("sample", "draw hard configurations from a trained model");
  add_common(sample, false);
  sample->add_option_function<std::string>(
      "--model", [&](std::string m) { ov.model = std::move(m); }, "model file");
  sample->add_option_function<long>("--n", [&](long n) { ov.n = n; }, "number of samples");
  auto* estimate = app.add_subcommand("estimate", "re-estimate the bound from a trained model");
  add_common(estimate, false);
  estimate->add_option_function<std::string>(
      "--model", [&](std::string m) { ov.model = std::move(m); }, "model file");
  estimate->add_option_function<long>("--n", [&](long n) { ov.n = n; }, "number of samples");
  auto* oracle = app.add_subcommand("oracle", "exact ln Z by enumeration / transfer matrix");
  add_common(oracle, true);
  auto* mcmc = app.add_subcommand("mcmc", "baseline MCMC sampler for the configured target");
  add_common(mcmc, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors -> 1; --help/--version -> 0
  }

  try {
    if (train->parsed()) return cmd_train(config_path, ov);
    if (sweep->parsed()) return cmd_sweep(config_path, ov);
    if (sample->parsed()) return cmd_sample(config_path, ov);
    if (estimate->parsed()) return cmd_estimate(config_path, ov);
    if (oracle->parsed()) return cmd_oracle(config_path, ov);
    if (mcmc->parsed()) return cmd_mcmc(config_path, ov);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
