#include "partivae/targets.hpp"

#include "partivae/errors.hpp"
#include "partivae/relax.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace partivae::targets {

namespace {

void check_dim(const Vector& x, int n, const char* who) {
  if (x.size() != n)
    throw DimensionError(std::string(who) + ": configuration has " + std::to_string(x.size()) +
                         " entries, target expects " + std::to_string(n));
}

// Ranks (1-based) of x under ascending sort, ties broken by original index.
std::vector<int> sort_ranks(const Vector& x) {
  const int n = static_cast<int>(x.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
  std::vector<int> rank(n);
  for (int pos = 0; pos < n; ++pos) rank[order[pos]] = pos + 1;
  return rank;
}

// Validates x is a permutation of {1/n, ..., n/n}; returns 1-based ranks.
std::vector<int> permutation_ranks(const Vector& x, int n, const char* who) {
  check_dim(x, n, who);
  std::vector<int> rank(n);
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    const double scaled = x[i] * n;
    const int k = static_cast<int>(std::lround(scaled));
    if (k < 1 || k > n || std::abs(scaled - k) > 1e-9 || seen[k - 1])
      throw DataError(std::string(who) + ": input is not a permutation of {1/n,...,n/n}");
    seen[k - 1] = true;
    rank[i] = k;
  }
  return rank;
}

}  // namespace

// ---- Ising ---------------------------------------------------------------

IsingTarget IsingTarget::torus(int L, double beta) {
  if (L < 3)
    throw ConfigError("IsingTarget: L must be >= 3 (L = 2 duplicates bonds on the torus)");
  if (!(beta >= 0.0)) throw ConfigError("IsingTarget: beta must be >= 0");
  IsingTarget t;
  t.L = L;
  t.n = L * L;
  t.beta = beta;
  t.bonds.reserve(static_cast<size_t>(2) * t.n);
  for (int r = 0; r < L; ++r)
    for (int c = 0; c < L; ++c) {
      const int site = r * L + c;
      t.bonds.emplace_back(site, r * L + (c + 1) % L);  // right
      t.bonds.emplace_back(site, ((r + 1) % L) * L + c);  // down
    }
  return t;
}

IsingTarget IsingTarget::from_bonds(int n, double beta, std::vector<std::pair<int, int>> bonds) {
  if (n < 1) throw ConfigError("IsingTarget: n must be >= 1");
  for (auto [i, j] : bonds)
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
      throw ConfigError("IsingTarget: invalid bond (" + std::to_string(i) + "," +
                        std::to_string(j) + ")");
  IsingTarget t;
  t.L = 0;
  t.n = n;
  t.beta = beta;
  t.bonds = std::move(bonds);
  return t;
}

double ising_log_f(const IsingTarget& t, const Vector& x) {
  check_dim(x, t.n, "ising_log_f");
  double s = 0.0;
  for (auto [i, j] : t.bonds) s += x[i] * x[j];
  return t.beta * s;
}

void ising_soft_grad(const IsingTarget& t, const Vector& x, double scale, Vector& gx) {
  check_dim(x, t.n, "ising_soft_grad");
  const double c = scale * t.beta;
  for (auto [i, j] : t.bonds) {
    gx[i] += c * x[j];
    gx[j] += c * x[i];
  }
}

// ---- SBM -----------------------------------------------------------------

SbmTarget SbmTarget::from_edges(int n, std::vector<std::pair<int, int>> edges, double omega_in,
                                double omega_out, bool learn_omega) {
  if (n < 2) throw ConfigError("SbmTarget: n must be >= 2");
  if (!(omega_in > 0.0 && omega_in < 1.0 && omega_out > 0.0 && omega_out < 1.0))
    throw ConfigError("SbmTarget: omega values must lie strictly inside (0,1)");
  SbmTarget t;
  t.n = n;
  t.adj.assign(static_cast<size_t>(n) * n, 0);
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw DataError("SbmTarget: edge endpoint out of range");
    if (i == j) throw DataError("SbmTarget: self-loops are not allowed");
    if (t.adj[static_cast<size_t>(i) * n + j])
      throw DataError("SbmTarget: duplicate edge (" + std::to_string(i) + "," +
                      std::to_string(j) + ")");
    t.adj[static_cast<size_t>(i) * n + j] = 1;
    t.adj[static_cast<size_t>(j) * n + i] = 1;
  }
  t.edges = std::move(edges);
  auto logit = [](double p) { return std::log(p) - std::log1p(-p); };
  t.omega_in_logit = logit(omega_in);
  t.omega_out_logit = logit(omega_out);
  t.learn_omega = learn_omega;
  return t;
}

double sbm_log_f(const SbmTarget& t, const Vector& x) {
  check_dim(x, t.n, "sbm_log_f");
  const double win = t.omega_in(), wout = t.omega_out();
  if (!(win > 0.0 && win < 1.0 && wout > 0.0 && wout < 1.0))
    throw NumericError("sbm_log_f: omega at 0 or 1");
  double s = -t.n * std::log(2.0);
  for (int i = 0; i < t.n; ++i)
    for (int j = i + 1; j < t.n; ++j) {
      const double p_in = 0.5 * (1.0 + x[i] * x[j]);
      const double w = wout + (win - wout) * p_in;
      s += t.has_edge(i, j) ? std::log(w) : std::log1p(-w);
    }
  return s;
}

void sbm_soft_grad(const SbmTarget& t, const Vector& x, double scale, Vector* gx,
                   double* g_logit_in, double* g_logit_out) {
  check_dim(x, t.n, "sbm_soft_grad");
  const double win = t.omega_in(), wout = t.omega_out();
  const double dwin = win * (1.0 - win);    // d omega_in / d logit
  const double dwout = wout * (1.0 - wout);
  for (int i = 0; i < t.n; ++i)
    for (int j = i + 1; j < t.n; ++j) {
      const double p_in = 0.5 * (1.0 + x[i] * x[j]);
      const double w = wout + (win - wout) * p_in;
      // d ln f / d w for this pair
      const double dldw = t.has_edge(i, j) ? 1.0 / w : -1.0 / (1.0 - w);
      if (gx) {
        const double dwdxi = (win - wout) * 0.5 * x[j];
        const double dwdxj = (win - wout) * 0.5 * x[i];
        (*gx)[i] += scale * dldw * dwdxi;
        (*gx)[j] += scale * dldw * dwdxj;
      }
      if (g_logit_in) *g_logit_in += scale * dldw * p_in * dwin;
      if (g_logit_out) *g_logit_out += scale * dldw * (1.0 - p_in) * dwout;
    }
}

Vector target_param_grads(const SbmTarget& t, const Vector& x_soft) {
  Vector g = Vector::Zero(2);
  sbm_soft_grad(t, x_soft, 1.0, nullptr, &g[0], &g[1]);
  return g;
}

// ---- Ranking ---------------------------------------------------------------

RankTarget RankTarget::from_comparisons(int n, std::vector<std::pair<int, int>> comparisons,
                                        double w, bool learn_w) {
  if (n < 2) throw ConfigError("RankTarget: n must be >= 2");
  if (!(w > 0.5 && w < 1.0))
    throw ConfigError("RankTarget: w must lie strictly inside (1/2, 1)");
  RankTarget t;
  t.n = n;
  t.w = w;
  t.learn_w = learn_w;
  t.touching.assign(n, {});
  for (int c = 0; c < static_cast<int>(comparisons.size()); ++c) {
    auto [i, j] = comparisons[c];
    if (i < 0 || j < 0 || i >= n || j >= n)
      throw DataError("RankTarget: comparison index out of range");
    if (i == j) throw DataError("RankTarget: comparison requires two distinct objects");
    t.touching[i].push_back(c);
    t.touching[j].push_back(c);
  }
  t.comparisons = std::move(comparisons);
  return t;
}

long rank_violations(const RankTarget& t, const Vector& x) {
  const auto rank = permutation_ranks(x, t.n, "rank_violations");
  long v = 0;
  for (auto [i, j] : t.comparisons)
    if (rank[i] > rank[j]) ++v;
  return v;
}

double rank_log_f_hard(const RankTarget& t, const Vector& x) {
  const long v = rank_violations(t, x);
  return t.m() * std::log(t.w) + v * (std::log1p(-t.w) - std::log(t.w));
}

double rank_log_f_soft(const RankTarget& t, const Vector& x, double k) {
  check_dim(x, t.n, "rank_log_f_soft");
  double v = 0.0;
  for (auto [i, j] : t.comparisons) v += relax::soft_indicator(x[i] - x[j], k);
  return t.m() * std::log(t.w) + v * (std::log1p(-t.w) - std::log(t.w));
}

void rank_soft_grad(const RankTarget& t, const Vector& x, double k, double scale, Vector* gx,
                    double* g_w) {
  check_dim(x, t.n, "rank_soft_grad");
  const double log_ratio = std::log1p(-t.w) - std::log(t.w);  // ln((1-w)/w)
  double v = 0.0;
  for (auto [i, j] : t.comparisons) {
    const double s = relax::soft_indicator(x[i] - x[j], k);
    v += s;
    if (gx) {
      const double d = scale * log_ratio * k * s * (1.0 - s);
      (*gx)[i] += d;
      (*gx)[j] -= d;
    }
  }
  if (g_w) *g_w += scale * (t.m() / t.w + v * (-1.0 / (1.0 - t.w) - 1.0 / t.w));
}

double target_param_grad_w(const RankTarget& t, const Vector& x_soft, double k) {
  double g = 0.0;
  rank_soft_grad(t, x_soft, k, 1.0, nullptr, &g);
  return g;
}

Vector rank_round(const Vector& x) {
  const int n = static_cast<int>(x.size());
  const auto rank = sort_ranks(x);
  Vector out(n);
  for (int i = 0; i < n; ++i) out[i] = static_cast<double>(rank[i]) / n;
  return out;
}

// ---- TargetModel -----------------------------------------------------------

TargetModel::Kind TargetModel::kind() const {
  if (std::holds_alternative<IsingTarget>(v_)) return Kind::kIsing;
  if (std::holds_alternative<SbmTarget>(v_)) return Kind::kSbm;
  return Kind::kRanking;
}

int TargetModel::dim() const {
  switch (kind()) {
    case Kind::kIsing: return std::get<IsingTarget>(v_).n;
    case Kind::kSbm: return std::get<SbmTarget>(v_).n;
    default: return std::get<RankTarget>(v_).n;
  }
}

double TargetModel::log_f_hard(const Vector& x) const {
  switch (kind()) {
    case Kind::kIsing: return ising_log_f(ising(), x);
    case Kind::kSbm: return sbm_log_f(sbm(), x);
    default: return rank_log_f_hard(rank(), x);
  }
}

double TargetModel::log_f_eval(const Vector& x) const {
  if (kind() == Kind::kRanking) return rank_log_f_hard(rank(), rank_round(x));
  return log_f_hard(x);
}

double TargetModel::log_f_soft(const Vector& x, double k) const {
  switch (kind()) {
    case Kind::kIsing: return ising_log_f(ising(), x);
    case Kind::kSbm: return sbm_log_f(sbm(), x);
    default: return rank_log_f_soft(rank(), x, k);
  }
}

void TargetModel::soft_grad(const Vector& x, double k, double scale, Vector& gx,
                            Vector* gp) const {
  switch (kind()) {
    case Kind::kIsing:
      ising_soft_grad(ising(), x, scale, gx);
      return;
    case Kind::kSbm: {
      double gi = 0.0, go = 0.0;
      sbm_soft_grad(sbm(), x, scale, &gx, gp ? &gi : nullptr, gp ? &go : nullptr);
      if (gp && n_learnable() == 2) {
        (*gp)[0] += gi;
        (*gp)[1] += go;
      }
      return;
    }
    default: {
      double gw = 0.0;
      rank_soft_grad(rank(), x, k, scale, &gx, gp ? &gw : nullptr);
      if (gp && n_learnable() == 1) (*gp)[0] += gw;
      return;
    }
  }
}

int TargetModel::n_learnable() const {
  switch (kind()) {
    case Kind::kIsing: return 0;
    case Kind::kSbm: return sbm().learn_omega ? 2 : 0;
    default: return rank().learn_w ? 1 : 0;
  }
}

Vector TargetModel::learnable_params() const {
  Vector p(n_learnable());
  if (kind() == Kind::kSbm && p.size() == 2) {
    p[0] = sbm().omega_in_logit;
    p[1] = sbm().omega_out_logit;
  } else if (kind() == Kind::kRanking && p.size() == 1) {
    p[0] = rank().w;
  }
  return p;
}

void TargetModel::set_learnable(const Vector& p) {
  if (p.size() != n_learnable())
    throw DimensionError("TargetModel::set_learnable: wrong parameter count");
  if (kind() == Kind::kSbm && p.size() == 2) {
    std::get<SbmTarget>(v_).omega_in_logit = p[0];
    std::get<SbmTarget>(v_).omega_out_logit = p[1];
  } else if (kind() == Kind::kRanking && p.size() == 1) {
    // keep w inside its legal open interval
    std::get<RankTarget>(v_).w = std::min(1.0 - 1e-6, std::max(0.5 + 1e-6, p[0]));
  }
}

const IsingTarget& TargetModel::ising() const {
  if (!std::holds_alternative<IsingTarget>(v_)) throw DataError("target is not an Ising model");
  return std::get<IsingTarget>(v_);
}
const SbmTarget& TargetModel::sbm() const {
  if (!std::holds_alternative<SbmTarget>(v_)) throw DataError("target is not an SBM");
  return std::get<SbmTarget>(v_);
}
const RankTarget& TargetModel::rank() const {
  if (!std::holds_alternative<RankTarget>(v_)) throw DataError("target is not a ranking model");
  return std::get<RankTarget>(v_);
}
IsingTarget& TargetModel::ising() { return const_cast<IsingTarget&>(std::as_const(*this).ising()); }
SbmTarget& TargetModel::sbm() { return const_cast<SbmTarget&>(std::as_const(*this).sbm()); }
RankTarget& TargetModel::rank() { return const_cast<RankTarget&>(std::as_const(*this).rank()); }

// ---- Ingestion ---------------------------------------------------------------

namespace {

std::vector<std::pair<int, int>> load_pairs(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(what) + ": cannot open '" + path + "'");
  std::vector<std::pair<int, int>> pairs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;  // blank line
    if (tok[0] == '#') continue;
    long u, v;
    try {
      size_t pos = 0;
      u = std::stol(tok, &pos);
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw DataError(std::string(what) + ": " + path + ":" + std::to_string(lineno) +
                      ": expected two integers");
    }
    if (!(ss >> v))
      throw DataError(std::string(what) + ": " + path + ":" + std::to_string(lineno) +
                      ": expected two integers");
    std::string extra;
    if (ss >> extra)
      throw DataError(std::string(what) + ": " + path + ":" + std::to_string(lineno) +
                      ": trailing tokens");
    if (u < 0 || v < 0)
      throw DataError(std::string(what) + ": " + path + ":" + std::to_string(lineno) +
                      ": negative index");
    pairs.emplace_back(static_cast<int>(u), static_cast<int>(v));
  }
  return pairs;
}

}  // namespace

std::vector<std::pair<int, int>> load_edge_list(const std::string& path, int* n_out) {
  auto edges = load_pairs(path, "edge list");
  int n = 0;
  std::set<std::pair<int, int>> seen;
  for (auto& [u, v] : edges) {
    if (u == v) throw DataError("edge list: " + path + ": self-loop at node " + std::to_string(u));
    auto key = std::minmax(u, v);
    if (!seen.insert({key.first, key.second}).second)
      throw DataError("edge list: " + path + ": duplicate edge (" + std::to_string(u) + "," +
                      std::to_string(v) + ")");
    n = std::max(n, std::max(u, v) + 1);
  }
  if (n_out) *n_out = n;
  return edges;
}

std::vector<std::pair<int, int>> load_comparisons(const std::string& path, int n) {
  auto comps = load_pairs(path, "comparisons");
  for (auto& [i, j] : comps) {
    if (i == j) throw DataError("comparisons: " + path + ": i and j must differ");
    if (i >= n || j >= n)
      throw DataError("comparisons: " + path + ": index exceeds n-1 = " + std::to_string(n - 1));
  }
  return comps;
}

}  // namespace partivae::targets
