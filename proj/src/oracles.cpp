#include "partivae/oracles.hpp"

#include "partivae/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace partivae::oracles {

using targets::TargetModel;

namespace {

// Keeps the top_k highest-weight states seen so far.
struct TopStates {
  int capacity;
  std::vector<std::pair<double, Vector>> heap;  // min-heap on ln f

  explicit TopStates(int k) : capacity(k) {}

  void offer(double ln_f, const Vector& x) {
    if (capacity <= 0) return;
    if (static_cast<int>(heap.size()) < capacity) {
      heap.emplace_back(ln_f, x);
      std::push_heap(heap.begin(), heap.end(), cmp);
    } else if (ln_f > heap.front().first) {
      std::pop_heap(heap.begin(), heap.end(), cmp);
      heap.back() = {ln_f, x};
      std::push_heap(heap.begin(), heap.end(), cmp);
    }
  }

  static bool cmp(const std::pair<double, Vector>& a, const std::pair<double, Vector>& b) {
    return a.first > b.first;
  }
};

EnumerationResult enumerate_spins(const TargetModel& target, int top_k, bool with_pairs) {
  const int n = target.dim();
  if (n > kMaxSpinBits)
    throw CapacityError("enumerate_lnZ: " + std::to_string(n) + " spins exceed the 2^" +
                        std::to_string(kMaxSpinBits) + " state cap");
  const bool pairs = with_pairs || n <= 16;
  const Index n_stats = pairs ? n + n * n : n;

  OnlineLogSum acc(n_stats);
  TopStates top(top_k);
  Vector x(n), stats(n_stats);
  const std::uint64_t n_states = 1ULL << n;
  for (std::uint64_t s = 0; s < n_states; ++s) {
    for (int i = 0; i < n; ++i) x[i] = (s >> i) & 1 ? 1.0 : -1.0;
    const double ln_f = target.log_f_hard(x);
    stats.head(n) = x;
    if (pairs) Eigen::Map<Matrix>(stats.data() + n, n, n).noalias() = x * x.transpose();
    acc.add(ln_f, stats);
    top.offer(ln_f, x);
  }

  EnumerationResult r;
  r.lnZ = acc.log_sum();
  const Vector mean = acc.mean_stats();
  r.site_mean = mean.head(n);
  if (pairs) r.pair_corr = Eigen::Map<const Matrix>(mean.data() + n, n, n);
  std::sort(top.heap.begin(), top.heap.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (auto& [ln_f, cfg] : top.heap) r.top_states.emplace_back(cfg, std::exp(ln_f - r.lnZ));
  return r;
}

EnumerationResult enumerate_ranking(const TargetModel& target, int top_k) {
  const auto& t = target.rank();
  const int n = t.n;
  if (n > kMaxRankObjects)
    throw CapacityError("enumerate_lnZ: " + std::to_string(n) + " objects exceed the " +
                        std::to_string(kMaxRankObjects) + "! permutation cap");

  OnlineLogSum acc(n * n);
  TopStates top(top_k);
  std::vector<int> rank(n);
  std::iota(rank.begin(), rank.end(), 1);
  Vector x(n), stats(n * n);
  do {
    for (int i = 0; i < n; ++i) x[i] = static_cast<double>(rank[i]) / n;
    const double ln_f = targets::rank_log_f_hard(t, x);
    stats.setZero();
    for (int i = 0; i < n; ++i) stats[i * n + (rank[i] - 1)] = 1.0;  // object-major
    acc.add(ln_f, stats);
    top.offer(ln_f, x);
  } while (std::next_permutation(rank.begin(), rank.end()));

  EnumerationResult r;
  r.lnZ = acc.log_sum();
  const Vector mean = acc.mean_stats();
  r.rank_position.resize(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) r.rank_position(i, k) = mean[i * n + k];
  r.site_mean = Vector(n);
  for (int i = 0; i < n; ++i) {
    double e = 0.0;
    for (int k = 0; k < n; ++k) e += (k + 1.0) * r.rank_position(i, k);
    r.site_mean[i] = e / n;
  }
  std::sort(top.heap.begin(), top.heap.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  for (auto& [ln_f, cfg] : top.heap) r.top_states.emplace_back(cfg, std::exp(ln_f - r.lnZ));
  return r;
}

}  // namespace

EnumerationResult enumerate_lnZ(const TargetModel& target, int top_k, bool with_pairs) {
  if (target.kind() == TargetModel::Kind::kRanking) return enumerate_ranking(target, top_k);
  return enumerate_spins(target, top_k, with_pairs);
}

// ---- Kaufman finite-size formula ------------------------------------------

double ising_exact_lnZ(int L, double beta) {
  if (L < 3) throw ConfigError("ising_exact_lnZ: L must be >= 3");
  if (!(beta >= 0.0)) throw ConfigError("ising_exact_lnZ: beta must be >= 0");
  const double n_sites = static_cast<double>(L) * L;
  if (beta == 0.0) return n_sites * std::log(2.0);  // f identically 1

  // Everything in log space so no intermediate can overflow.
  const double ln2 = std::log(2.0);
  const double ln_cosh2b = log2cosh(2.0 * beta) - ln2;
  const double ln_sinh2b = 2.0 * beta + std::log1p(-std::exp(-4.0 * beta)) - ln2;
  const double ln_ratio = 2.0 * ln_cosh2b - ln_sinh2b;  // ln[cosh(2b) coth(2b)]

  // gamma_l, l = 0..2L-1: cosh gamma_l = ratio - cos(pi l / L). gamma_0
  // carries the sign of 2b + ln tanh b, negative below the critical point.
  std::vector<double> gamma(2 * L);
  gamma[0] = 2.0 * beta + std::log(std::tanh(beta));
  for (int l = 1; l < 2 * L; ++l) {
    if (ln_ratio < 700.0) {
      const double ch = std::exp(ln_ratio) - std::cos(M_PI * l / L);
      gamma[l] = std::acosh(std::max(1.0, ch));
    } else {
      gamma[l] = ln2 + ln_ratio;  // acosh(x) -> ln(2x), cos term negligible
    }
  }

  auto ln2cosh = [](double z) { return std::abs(z) + std::log1p(std::exp(-2.0 * std::abs(z))); };
  auto ln2sinh_abs = [](double z) {
    return std::abs(z) + std::log1p(-std::exp(-2.0 * std::abs(z)));
  };

  double ln_p1 = 0.0, ln_p2 = 0.0, ln_p3 = 0.0, ln_p4 = 0.0;
  int sign_p4 = 1;
  for (int r = 0; r < L; ++r) {
    const double zo = 0.5 * L * gamma[2 * r + 1];
    const double ze = 0.5 * L * gamma[2 * r];
    ln_p1 += ln2cosh(zo);
    ln_p2 += ln2sinh_abs(zo);
    ln_p3 += ln2cosh(ze);
    if (ze == 0.0) {
      sign_p4 = 0;
    } else {
      ln_p4 += ln2sinh_abs(ze);
      if (ze < 0.0) sign_p4 = -sign_p4;
    }
  }
  if (sign_p4 == 0) ln_p4 = -std::numeric_limits<double>::infinity();

  const SignedLog terms[] = {{ln_p1, 1}, {ln_p2, 1}, {ln_p3, 1}, {ln_p4, sign_p4}};
  const SignedLog total = signed_log_sum(terms);
  if (total.sign <= 0)
    throw NumericError("ising_exact_lnZ: non-positive partition sum (unexpected)");
  return -ln2 + 0.5 * n_sites * (ln2 + ln_sinh2b) + total.ln_abs;
}

double ising_onsager_free_energy(double beta, int quad_points) {
  const double c2 = std::cosh(2.0 * beta);
  const double s2 = std::sinh(2.0 * beta);
  double acc = 0.0;
  // periodic integrand: midpoint rule over [0, 2pi)^2 converges fast
  const double h = 2.0 * M_PI / quad_points;
  for (int i = 0; i < quad_points; ++i) {
    const double t1 = (i + 0.5) * h;
    for (int j = 0; j < quad_points; ++j) {
      const double t2 = (j + 0.5) * h;
      acc += std::log(c2 * c2 - s2 * (std::cos(t1) + std::cos(t2)));
    }
  }
  return std::log(2.0) + acc * h * h / (8.0 * M_PI * M_PI);
}

// ---- MCMC -----------------------------------------------------------------

namespace {

long resolve_burn_in(const McmcConfig& cfg) {
  if (cfg.burn_in >= 0) {
    if (cfg.burn_in >= cfg.n_sweeps)
      throw ConfigError("McmcConfig: burn_in must be < n_sweeps");
    return cfg.burn_in;
  }
  return cfg.n_sweeps / 10;
}

void check_thin(const McmcConfig& cfg) {
  if (cfg.thin < 1) throw ConfigError("McmcConfig: thin must be >= 1");
}

}  // namespace

double ising_flip_log_ratio(const targets::IsingTarget& t, const Vector& x, int site) {
  double h = 0.0;
  for (auto [i, j] : t.bonds) {
    if (i == site) h += x[j];
    if (j == site) h += x[i];
  }
  return -2.0 * t.beta * x[site] * h;
}

std::vector<Vector> mcmc_ising(const targets::IsingTarget& t, const McmcConfig& cfg) {
  const long burn = resolve_burn_in(cfg);
  check_thin(cfg);
  SplitMix rng = SplitMix(cfg.seed).split(stream::kMcmc);

  // neighbor list with multiplicity
  std::vector<std::vector<int>> nbr(t.n);
  for (auto [i, j] : t.bonds) {
    nbr[i].push_back(j);
    nbr[j].push_back(i);
  }

  Vector x(t.n);
  for (int i = 0; i < t.n; ++i) x[i] = rng.next_unit() < 0.5 ? -1.0 : 1.0;

  std::vector<Vector> out;
  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    for (int prop = 0; prop < t.n; ++prop) {
      const int site = static_cast<int>(rng.next_below(t.n));
      double h = 0.0;
      for (int j : nbr[site]) h += x[j];
      const double log_ratio = -2.0 * t.beta * x[site] * h;
      if (log_ratio >= 0.0 || rng.next_unit() < std::exp(log_ratio)) x[site] = -x[site];
    }
    if (sweep >= burn && (sweep - burn) % cfg.thin == 0) out.push_back(x);
  }
  return out;
}

std::vector<Vector> mcmc_sbm(const targets::SbmTarget& t, const McmcConfig& cfg) {
  const long burn = resolve_burn_in(cfg);
  check_thin(cfg);
  SplitMix rng = SplitMix(cfg.seed).split(stream::kMcmc);

  const double win = t.omega_in(), wout = t.omega_out();
  // per-pair log-likelihood stakes for same vs. different group
  const double d_edge = std::log(win) - std::log(wout);
  const double d_gap = std::log1p(-win) - std::log1p(-wout);

  Vector x(t.n);
  for (int i = 0; i < t.n; ++i) x[i] = rng.next_unit() < 0.5 ? -1.0 : 1.0;

  std::vector<Vector> out;
  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    for (int prop = 0; prop < t.n; ++prop) {
      const int site = static_cast<int>(rng.next_below(t.n));
      // log odds of x_site = +1 against -1 under the heat-bath conditional
      double llr = 0.0;
      for (int j = 0; j < t.n; ++j) {
        if (j == site) continue;
        const double d = t.has_edge(site, j) ? d_edge : d_gap;
        llr += x[j] > 0.0 ? d : -d;
      }
      x[site] = rng.next_unit() < sigmoid(llr) ? 1.0 : -1.0;
    }
    if (sweep >= burn && (sweep - burn) % cfg.thin == 0) out.push_back(x);
  }
  return out;
}

std::vector<Vector> mcmc_rank(const targets::RankTarget& t, const McmcConfig& cfg) {
  const long burn = resolve_burn_in(cfg);
  check_thin(cfg);
  SplitMix rng = SplitMix(cfg.seed).split(stream::kMcmc);
  const int n = t.n;
  const double log_ratio = std::log1p(-t.w) - std::log(t.w);  // ln((1-w)/w) < 0

  // random starting permutation (Fisher-Yates)
  std::vector<int> rank(n), at(n);  // rank[obj] = 1-based rank; at[r] = object with rank r+1
  std::iota(rank.begin(), rank.end(), 1);
  for (int i = n - 1; i > 0; --i)
    std::swap(rank[i], rank[static_cast<int>(rng.next_below(i + 1))]);
  for (int i = 0; i < n; ++i) at[rank[i] - 1] = i;

  // Violations among comparisons touching p or q, each counted once.
  auto local_violations = [&](int p, int q) {
    long v = 0;
    for (int c : t.touching[p]) {
      auto [i, j] = t.comparisons[c];
      if (rank[i] > rank[j]) ++v;
    }
    for (int c : t.touching[q]) {
      auto [i, j] = t.comparisons[c];
      if (i == p || j == p) continue;  // comparisons between p and q already counted
      if (rank[i] > rank[j]) ++v;
    }
    return v;
  };

  std::vector<Vector> out;
  for (long sweep = 0; sweep < cfg.n_sweeps; ++sweep) {
    for (int prop = 0; prop < n; ++prop) {
      int p, q;
      if (cfg.adjacent_transpositions) {
        const int r = static_cast<int>(rng.next_below(n - 1));
        p = at[r];
        q = at[r + 1];
      } else {
        p = static_cast<int>(rng.next_below(n));
        q = static_cast<int>(rng.next_below(n - 1));
        if (q >= p) ++q;
      }
      const long before = local_violations(p, q);
      std::swap(rank[p], rank[q]);
      const long after = local_violations(p, q);
      const double log_acc = static_cast<double>(after - before) * log_ratio;
      if (log_acc >= 0.0 || rng.next_unit() < std::exp(log_acc)) {
        std::swap(at[rank[p] - 1], at[rank[q] - 1]);
      } else {
        std::swap(rank[p], rank[q]);  // reject: undo
      }
    }
    if (sweep >= burn && (sweep - burn) % cfg.thin == 0) {
      Vector x(n);
      for (int i = 0; i < n; ++i) x[i] = static_cast<double>(rank[i]) / n;
      out.push_back(x);
    }
  }
  return out;
}

// ---- Summaries --------------------------------------------------------------

Vector sample_site_means(const std::vector<Vector>& samples) {
  if (samples.empty()) return {};
  Vector m = Vector::Zero(samples.front().size());
  for (const auto& s : samples) m += s;
  return m / static_cast<double>(samples.size());
}

Matrix sample_pair_corr(const std::vector<Vector>& samples) {
  if (samples.empty()) return {};
  const Index n = samples.front().size();
  Matrix c = Matrix::Zero(n, n);
  for (const auto& s : samples) c.noalias() += s * s.transpose();
  return c / static_cast<double>(samples.size());
}

Matrix sample_rank_position(const std::vector<Vector>& samples) {
  if (samples.empty()) return {};
  const Index n = samples.front().size();
  Matrix h = Matrix::Zero(n, n);
  for (const auto& s : samples)
    for (Index i = 0; i < n; ++i) {
      const int k = static_cast<int>(std::lround(s[i] * static_cast<double>(n)));
      h(i, k - 1) += 1.0;
    }
  return h / static_cast<double>(samples.size());
}

}  // namespace partivae::oracles
