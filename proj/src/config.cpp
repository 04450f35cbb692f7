#include "partivae/config.hpp"

#include "partivae/errors.hpp"
#include "partivae/rng.hpp"

#include <algorithm>
#include <set>

namespace partivae::config {

using io::Json;

namespace {

// Rejects keys outside `allowed`, reporting the offending path.
void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key '" + where + "." + it.key() + "'");
}

double get_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("config: '" + where + "' must be a number");
  return j.get<double>();
}

long get_integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    throw ConfigError("config: '" + where + "' must be an integer");
  return j.get<long>();
}

bool get_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw ConfigError("config: '" + where + "' must be a boolean");
  return j.get<bool>();
}

std::string get_string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ConfigError("config: '" + where + "' must be a string");
  return j.get<std::string>();
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError("config: " + msg);
}

TargetSpec parse_target(const Json& j) {
  TargetSpec t;
  t.kind = j.contains("kind") ? get_string(j.at("kind"), "target.kind") : "";
  if (t.kind == "ising") {
    check_keys(j, {"kind", "L", "beta"}, "target");
    require(j.contains("L") && j.contains("beta"), "target.{L,beta} required for ising");
    t.L = static_cast<int>(get_integer(j.at("L"), "target.L"));
    t.beta = get_number(j.at("beta"), "target.beta");
    require(t.L >= 3, "target.L must be >= 3");
    require(t.beta >= 0.0, "target.beta must be >= 0");
  } else if (t.kind == "sbm") {
    check_keys(j, {"kind", "graph", "n", "omega_in", "omega_out", "learn_omega"}, "target");
    require(j.contains("graph"), "target.graph required for sbm");
    t.graph_path = get_string(j.at("graph"), "target.graph");
    if (j.contains("n")) {
      t.declared_n = static_cast<int>(get_integer(j.at("n"), "target.n"));
      require(*t.declared_n >= 2, "target.n must be >= 2");
    }
    if (j.contains("omega_in")) t.omega_in = get_number(j.at("omega_in"), "target.omega_in");
    if (j.contains("omega_out")) t.omega_out = get_number(j.at("omega_out"), "target.omega_out");
    require(t.omega_in > 0.0 && t.omega_in < 1.0, "target.omega_in must lie in (0,1)");
    require(t.omega_out > 0.0 && t.omega_out < 1.0, "target.omega_out must lie in (0,1)");
    if (j.contains("learn_omega")) t.learn_omega = get_bool(j.at("learn_omega"), "target.learn_omega");
  } else if (t.kind == "ranking") {
    check_keys(j, {"kind", "n", "comparisons", "synthetic_m", "synthetic_seed", "w", "learn_w"},
               "target");
    require(j.contains("n"), "target.n required for ranking");
    t.n = static_cast<int>(get_integer(j.at("n"), "target.n"));
    require(t.n >= 2, "target.n must be >= 2");
    const bool has_file = j.contains("comparisons");
    const bool has_synth = j.contains("synthetic_m");
    require(has_file != has_synth,
            "target needs exactly one of 'comparisons' (path) or 'synthetic_m'");
    if (has_file) t.comparisons_path = get_string(j.at("comparisons"), "target.comparisons");
    if (has_synth) {
      t.synthetic_m = get_integer(j.at("synthetic_m"), "target.synthetic_m");
      require(*t.synthetic_m >= 0, "target.synthetic_m must be >= 0");
    }
    if (j.contains("synthetic_seed"))
      t.synthetic_seed =
          static_cast<std::uint64_t>(get_integer(j.at("synthetic_seed"), "target.synthetic_seed"));
    if (j.contains("w")) t.w = get_number(j.at("w"), "target.w");
    require(t.w > 0.5 && t.w < 1.0, "target.w must lie in (1/2, 1)");
    if (j.contains("learn_w")) t.learn_w = get_bool(j.at("learn_w"), "target.learn_w");
  } else {
    throw ConfigError("config: target.kind must be one of ising|sbm|ranking");
  }
  return t;
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  Json j;
  try {
    j = io::read_json(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());  // unreadable or malformed config file
  }
  check_keys(j,
             {"target", "latent", "train", "relax", "mcmc", "oracle", "sample", "estimate",
              "seed", "out_dir"},
             "<root>");
  require(j.contains("target"), "'target' section is required");

  ExperimentConfig cfg;
  cfg.target = parse_target(j.at("target"));

  if (j.contains("latent")) {
    cfg.latent_given = true;
    const Json& l = j.at("latent");
    check_keys(l, {"D", "D_set"}, "latent");
    require(!(l.contains("D") && l.contains("D_set")), "latent takes either D or D_set, not both");
    if (l.contains("D")) {
      cfg.D = static_cast<int>(get_integer(l.at("D"), "latent.D"));
      require(cfg.D >= 0, "latent.D must be >= 0");
    }
    if (l.contains("D_set")) {
      require(l.at("D_set").is_array() && !l.at("D_set").empty(),
              "latent.D_set must be a non-empty array");
      std::set<int> seen;
      for (const auto& e : l.at("D_set")) {
        const int d = static_cast<int>(get_integer(e, "latent.D_set[]"));
        require(d >= 0, "latent.D_set entries must be >= 0");
        require(seen.insert(d).second, "latent.D_set entries must be distinct");
        cfg.D_set.push_back(d);
      }
      std::sort(cfg.D_set.begin(), cfg.D_set.end());
    }
  }

  if (j.contains("train")) {
    const Json& t = j.at("train");
    check_keys(t, {"batch_size", "n_steps", "hidden", "eval_samples", "lr", "beta1", "beta2", "eps"},
               "train");
    auto& tc = cfg.train;
    if (t.contains("batch_size"))
      tc.batch_size = static_cast<int>(get_integer(t.at("batch_size"), "train.batch_size"));
    if (t.contains("n_steps")) tc.n_steps = get_integer(t.at("n_steps"), "train.n_steps");
    if (t.contains("hidden")) tc.hidden = static_cast<int>(get_integer(t.at("hidden"), "train.hidden"));
    if (t.contains("eval_samples"))
      tc.eval_samples = get_integer(t.at("eval_samples"), "train.eval_samples");
    if (t.contains("lr")) tc.adam.lr = get_number(t.at("lr"), "train.lr");
    if (t.contains("beta1")) tc.adam.beta1 = get_number(t.at("beta1"), "train.beta1");
    if (t.contains("beta2")) tc.adam.beta2 = get_number(t.at("beta2"), "train.beta2");
    if (t.contains("eps")) tc.adam.eps = get_number(t.at("eps"), "train.eps");
    require(tc.batch_size >= 1, "train.batch_size must be >= 1");
    require(tc.n_steps >= 0, "train.n_steps must be >= 0");
    require(tc.hidden >= 1, "train.hidden must be >= 1");
    require(tc.eval_samples >= 2, "train.eval_samples must be >= 2");
    require(tc.adam.lr > 0.0, "train.lr must be > 0");
    require(tc.adam.beta1 >= 0.0 && tc.adam.beta1 < 1.0, "train.beta1 must lie in [0,1)");
    require(tc.adam.beta2 >= 0.0 && tc.adam.beta2 < 1.0, "train.beta2 must lie in [0,1)");
    require(tc.adam.eps > 0.0, "train.eps must be > 0");
  }

  if (j.contains("relax")) {
    const Json& r = j.at("relax");
    check_keys(r, {"tau", "sigmoid_k", "beta_mode"}, "relax");
    auto& rc = cfg.train.relax;
    if (r.contains("tau")) rc.tau = get_number(r.at("tau"), "relax.tau");
    if (r.contains("sigmoid_k")) rc.sigmoid_k = get_number(r.at("sigmoid_k"), "relax.sigmoid_k");
    if (r.contains("beta_mode")) {
      const std::string m = get_string(r.at("beta_mode"), "relax.beta_mode");
      if (m == "kumaraswamy")
        rc.beta_mode = relax::BetaMode::kKumaraswamy;
      else if (m == "beta_newton")
        rc.beta_mode = relax::BetaMode::kBetaNewton;
      else
        throw ConfigError("config: relax.beta_mode must be kumaraswamy|beta_newton");
    }
    require(rc.tau > 0.0, "relax.tau must be > 0");
    require(rc.sigmoid_k > 0.0, "relax.sigmoid_k must be > 0");
  }

  if (j.contains("mcmc")) {
    const Json& m = j.at("mcmc");
    check_keys(m, {"n_sweeps", "burn_in", "thin", "proposal"}, "mcmc");
    if (m.contains("n_sweeps")) cfg.mcmc.n_sweeps = get_integer(m.at("n_sweeps"), "mcmc.n_sweeps");
    if (m.contains("burn_in")) cfg.mcmc.burn_in = get_integer(m.at("burn_in"), "mcmc.burn_in");
    if (m.contains("thin")) cfg.mcmc.thin = get_integer(m.at("thin"), "mcmc.thin");
    if (m.contains("proposal")) {
      const std::string p = get_string(m.at("proposal"), "mcmc.proposal");
      if (p == "transposition")
        cfg.mcmc.adjacent_transpositions = false;
      else if (p == "adjacent")
        cfg.mcmc.adjacent_transpositions = true;
      else
        throw ConfigError("config: mcmc.proposal must be transposition|adjacent");
    }
    require(cfg.mcmc.n_sweeps >= 1, "mcmc.n_sweeps must be >= 1");
    require(cfg.mcmc.burn_in < cfg.mcmc.n_sweeps, "mcmc.burn_in must be < n_sweeps");
    require(cfg.mcmc.thin >= 1, "mcmc.thin must be >= 1");
  }

  if (j.contains("oracle")) {
    const Json& o = j.at("oracle");
    check_keys(o, {"top_states"}, "oracle");
    if (o.contains("top_states"))
      cfg.oracle.top_states = static_cast<int>(get_integer(o.at("top_states"), "oracle.top_states"));
    require(cfg.oracle.top_states >= 0, "oracle.top_states must be >= 0");
  }

  if (j.contains("sample")) {
    const Json& s = j.at("sample");
    check_keys(s, {"model", "n"}, "sample");
    if (s.contains("model")) cfg.sample.model_path = get_string(s.at("model"), "sample.model");
    if (s.contains("n")) cfg.sample.n = get_integer(s.at("n"), "sample.n");
    require(cfg.sample.n >= 0, "sample.n must be >= 0");
  }

  if (j.contains("estimate")) {
    const Json& e = j.at("estimate");
    check_keys(e, {"model", "n_samples"}, "estimate");
    if (e.contains("model")) cfg.estimate.model_path = get_string(e.at("model"), "estimate.model");
    if (e.contains("n_samples"))
      cfg.estimate.n_samples = get_integer(e.at("n_samples"), "estimate.n_samples");
    require(cfg.estimate.n_samples >= 2, "estimate.n_samples must be >= 2");
  }

  if (j.contains("seed")) {
    const long s = get_integer(j.at("seed"), "seed");
    require(s >= 0, "seed must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (j.contains("out_dir")) cfg.out_dir = get_string(j.at("out_dir"), "out_dir");

  cfg.train.seed = cfg.seed;
  return cfg;
}

io::Json config_snapshot(const ExperimentConfig& cfg) {
  Json t;
  t["kind"] = cfg.target.kind;
  if (cfg.target.kind == "ising") {
    t["L"] = cfg.target.L;
    t["beta"] = cfg.target.beta;
  } else if (cfg.target.kind == "sbm") {
    t["graph"] = cfg.target.graph_path;
    if (cfg.target.declared_n) t["n"] = *cfg.target.declared_n;
    t["omega_in"] = cfg.target.omega_in;
    t["omega_out"] = cfg.target.omega_out;
    t["learn_omega"] = cfg.target.learn_omega;
  } else {
    t["n"] = cfg.target.n;
    if (cfg.target.synthetic_m)
      t["synthetic_m"] = *cfg.target.synthetic_m;
    else
      t["comparisons"] = cfg.target.comparisons_path;
    if (cfg.target.synthetic_seed)
      t["synthetic_seed"] = static_cast<std::int64_t>(*cfg.target.synthetic_seed);
    t["w"] = cfg.target.w;
    t["learn_w"] = cfg.target.learn_w;
  }

  Json latent;
  if (!cfg.D_set.empty())
    latent["D_set"] = cfg.D_set;
  else
    latent["D"] = cfg.D;

  Json train;
  train["batch_size"] = cfg.train.batch_size;
  train["n_steps"] = cfg.train.n_steps;
  train["hidden"] = cfg.train.hidden;
  train["eval_samples"] = cfg.train.eval_samples;
  train["lr"] = cfg.train.adam.lr;
  train["beta1"] = cfg.train.adam.beta1;
  train["beta2"] = cfg.train.adam.beta2;
  train["eps"] = cfg.train.adam.eps;

  Json rl;
  rl["tau"] = cfg.train.relax.tau;
  rl["sigmoid_k"] = cfg.train.relax.sigmoid_k;
  rl["beta_mode"] = cfg.train.relax.beta_mode == relax::BetaMode::kBetaNewton ? "beta_newton"
                                                                              : "kumaraswamy";

  // out_dir is deliberately omitted: it locates the run, it does not define
  // the experiment, and records must be byte-identical across locations.
  Json j;
  j["target"] = t;
  j["latent"] = latent;
  j["train"] = train;
  j["relax"] = rl;
  j["seed"] = static_cast<std::int64_t>(cfg.seed);
  return j;
}

targets::TargetModel build_target(const ExperimentConfig& cfg) {
  const TargetSpec& t = cfg.target;
  if (t.kind == "ising") return targets::TargetModel(targets::IsingTarget::torus(t.L, t.beta));
  if (t.kind == "sbm") {
    int n_seen = 0;
    auto edges = targets::load_edge_list(t.graph_path, &n_seen);
    int n = t.declared_n.value_or(n_seen);
    if (n < n_seen)
      throw DataError("config: target.n = " + std::to_string(n) + " but '" + t.graph_path +
                      "' references node " + std::to_string(n_seen - 1));
    return targets::TargetModel(
        targets::SbmTarget::from_edges(n, std::move(edges), t.omega_in, t.omega_out, t.learn_omega));
  }
  // ranking
  std::vector<std::pair<int, int>> comps;
  if (t.synthetic_m) {
    // planted instance: random permutation, m uniform pairs, orientation
    // correct with probability w
    SplitMix rng = SplitMix(t.synthetic_seed.value_or(cfg.seed)).split(stream::kSynthetic);
    std::vector<int> rank(t.n);
    for (int i = 0; i < t.n; ++i) rank[i] = i + 1;
    for (int i = t.n - 1; i > 0; --i)
      std::swap(rank[i], rank[static_cast<int>(rng.next_below(i + 1))]);
    comps.reserve(static_cast<size_t>(*t.synthetic_m));
    for (long c = 0; c < *t.synthetic_m; ++c) {
      const int i = static_cast<int>(rng.next_below(t.n));
      int j = static_cast<int>(rng.next_below(t.n - 1));
      if (j >= i) ++j;
      const bool truthful = rng.next_unit() < t.w;
      const bool i_better = rank[i] < rank[j];
      if (i_better == truthful)
        comps.emplace_back(i, j);
      else
        comps.emplace_back(j, i);
    }
  } else {
    comps = targets::load_comparisons(t.comparisons_path, t.n);
  }
  return targets::TargetModel(
      targets::RankTarget::from_comparisons(t.n, std::move(comps), t.w, t.learn_w));
}

}  // namespace partivae::config
