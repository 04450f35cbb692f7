#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "partivae/errors.hpp"
#include "partivae/oracles.hpp"
#include "testutil.hpp"

using namespace partivae;
using namespace partivae::oracles;
using targets::IsingTarget;
using targets::RankTarget;
using targets::SbmTarget;
using targets::TargetModel;

TEST_CASE("enumeration: closed-form values") {
  // Ising L=3, beta=0: ln Z = 9 ln 2
  auto ising = TargetModel(IsingTarget::torus(3, 0.0));
  CHECK(enumerate_lnZ(ising).lnZ == doctest::Approx(9.0 * std::log(2.0)).epsilon(1e-12));

  // ranking n=3, m=0: Z = 3! = 6
  auto rank = TargetModel(RankTarget::from_comparisons(3, {}, 0.75));
  CHECK(enumerate_lnZ(rank).lnZ == doctest::Approx(std::log(6.0)).epsilon(1e-12));

  // SBM n=3, empty graph, omega_in = omega_out = 0.1: ln Z = 3 ln 0.9
  auto sbm = TargetModel(SbmTarget::from_edges(3, {}, 0.1, 0.1));
  CHECK(enumerate_lnZ(sbm).lnZ == doctest::Approx(3.0 * std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("enumeration: probabilities normalize and marginals are sane") {
  auto ising = TargetModel(IsingTarget::torus(3, 0.3));
  auto r = enumerate_lnZ(ising, /*top_k=*/4);
  // h = 0: per-site magnetization vanishes by symmetry
  for (Index i = 0; i < r.site_mean.size(); ++i) CHECK(std::abs(r.site_mean[i]) < 1e-12);
  // top states are the two aligned ones, with equal probability
  REQUIRE(r.top_states.size() == 4);
  CHECK(r.top_states[0].second == doctest::Approx(r.top_states[1].second).epsilon(1e-12));
  const double total_prob = std::exp(ising.log_f_hard(Vector::Ones(9)) - r.lnZ);
  CHECK(r.top_states[0].second == doctest::Approx(total_prob).epsilon(1e-12));
  // pair correlations symmetric, unit diagonal
  CHECK(r.pair_corr(2, 5) == doctest::Approx(r.pair_corr(5, 2)).epsilon(1e-12));
  for (int i = 0; i < 9; ++i) CHECK(r.pair_corr(i, i) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("enumeration: capacity refusals") {
  CHECK_THROWS_AS((void)enumerate_lnZ(TargetModel(IsingTarget::torus(8, 0.1))), CapacityError);
  CHECK_THROWS_AS(
      (void)enumerate_lnZ(TargetModel(RankTarget::from_comparisons(10, {}, 0.75))),
      CapacityError);
}

TEST_CASE("enumeration: overflow-free for |ln f| up to 1e4") {
  // beta = 500 on L=3: max ln f = 9000
  auto hot = TargetModel(IsingTarget::torus(3, 500.0));
  const auto r = enumerate_lnZ(hot);
  CHECK(std::isfinite(r.lnZ));
  // dominated by the two aligned states: ln Z ~ ln 2 + 2 n beta
  CHECK(r.lnZ == doctest::Approx(std::log(2.0) + 9000.0).epsilon(1e-12));
}

TEST_CASE("kaufman formula agrees with enumeration at L in {3,4}") {
  double worst = 0.0;
  for (int L : {3, 4}) {
    auto make = [L](double beta) { return TargetModel(IsingTarget::torus(L, beta)); };
    for (double beta : {0.0, 0.2, 0.4407, 0.7, 1.0}) {
      const double exact = ising_exact_lnZ(L, beta);
      const double brute = enumerate_lnZ(make(beta)).lnZ;
      worst = std::max(worst, std::abs(exact - brute) / std::abs(brute));
    }
  }
  CHECK(worst < 1e-9);
  MESSAGE("kaufman vs enumeration worst relative error: ", worst);
}

TEST_CASE("kaufman formula: beta = 0 and large-beta asymptote") {
  CHECK(ising_exact_lnZ(4, 0.0) == doctest::Approx(16.0 * std::log(2.0)).epsilon(1e-12));
  // large beta: ln Z -> 2 n beta + ln 2
  const double lnZ = ising_exact_lnZ(5, 6.0);
  CHECK(lnZ == doctest::Approx(2.0 * 25.0 * 6.0 + std::log(2.0)).epsilon(1e-9));
  // far beyond double overflow in the naive evaluation
  CHECK(std::isfinite(ising_exact_lnZ(8, 400.0)));
  CHECK(ising_exact_lnZ(8, 400.0) == doctest::Approx(2.0 * 64.0 * 400.0 + std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("kaufman formula: per-spin values converge to the Onsager limit") {
  const double beta = 0.7;
  const double f_inf = ising_onsager_free_energy(beta, 512);
  double prev_gap = 1e9;
  for (int L : {4, 8, 16, 32}) {
    const double f_L = ising_exact_lnZ(L, beta) / (L * L);
    const double gap = std::abs(f_L - f_inf);
    CHECK(gap < prev_gap);
    prev_gap = gap;
  }
  CHECK(prev_gap < 1e-3);
}

TEST_CASE("ising metropolis: exact acceptance ratio for a 4-bond break") {
  const auto t = IsingTarget::torus(3, 0.5);
  const Vector up = Vector::Ones(9);
  // flipping any spin in the aligned state breaks 4 bonds: bond sum 18 -> 10
  const double log_ratio = ising_flip_log_ratio(t, up, 4);
  CHECK(std::exp(log_ratio) == doctest::Approx(std::exp(-0.5 * 8.0)).epsilon(1e-12));
  CHECK(std::exp(log_ratio) == doctest::Approx(0.0183156389).epsilon(1e-8));
}

TEST_CASE("ising metropolis: beta = 0 accepts everything and mixes to uniform") {
  const auto t = IsingTarget::torus(3, 0.0);
  McmcConfig cfg;
  cfg.n_sweeps = 20000;
  cfg.seed = 5;
  const auto samples = mcmc_ising(t, cfg);
  const Vector m = sample_site_means(samples);
  for (Index i = 0; i < m.size(); ++i) CHECK(std::abs(m[i]) < 0.03);
}

TEST_CASE("ising metropolis matches enumeration at L=3, beta=0.2") {
  const auto t = IsingTarget::torus(3, 0.2);
  const auto exact = enumerate_lnZ(TargetModel(t));
  McmcConfig cfg;
  cfg.n_sweeps = 1000000;
  cfg.seed = 11;
  const auto samples = mcmc_ising(t, cfg);
  const Vector m = sample_site_means(samples);
  const Matrix c = sample_pair_corr(samples);
  double worst = 0.0;
  for (int i = 0; i < 9; ++i) worst = std::max(worst, std::abs(m[i] - exact.site_mean[i]));
  for (auto [i, j] : t.bonds)
    worst = std::max(worst, std::abs(c(i, j) - exact.pair_corr(i, j)));
  CHECK(worst < 0.01);
  MESSAGE("metropolis vs enumeration worst marginal gap: ", worst);
}

TEST_CASE("sbm gibbs: uniform labels on the empty graph") {
  auto t = SbmTarget::from_edges(6, {}, 0.3, 0.3);
  McmcConfig cfg;
  cfg.n_sweeps = 100000;
  cfg.seed = 17;
  const auto samples = mcmc_sbm(t, cfg);
  const Vector m = sample_site_means(samples);
  for (Index i = 0; i < 6; ++i) CHECK(std::abs(m[i]) < 0.01 * 3);
}

TEST_CASE("sbm gibbs: two cliques concentrate on the planted split") {
  // two 4-cliques, no cross edges, omega_in >> omega_out
  std::vector<std::pair<int, int>> edges;
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) edges.emplace_back(4 * g + i, 4 * g + j);
  auto t = SbmTarget::from_edges(8, edges, 0.9, 0.05);
  McmcConfig cfg;
  cfg.n_sweeps = 20000;
  cfg.seed = 23;
  const auto samples = mcmc_sbm(t, cfg);
  const Matrix c = sample_pair_corr(samples);
  // in-group correlation near +1, cross-group near -1
  CHECK(c(0, 3) > 0.9);
  CHECK(c(4, 7) > 0.9);
  CHECK(c(0, 7) < -0.9);
}

TEST_CASE("sbm gibbs matches enumeration on a planted n=12 graph") {
  SplitMix rng(31);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j) {
      const bool same = (i < 6) == (j < 6);
      if (rng.next_unit() < (same ? 0.7 : 0.1)) edges.emplace_back(i, j);
    }
  auto t = SbmTarget::from_edges(12, edges, 0.7, 0.1);
  const auto exact = enumerate_lnZ(TargetModel(t));
  McmcConfig cfg;
  cfg.n_sweeps = 100000;
  cfg.seed = 37;
  const auto samples = mcmc_sbm(t, cfg);
  const Matrix c = sample_pair_corr(samples);
  double worst = 0.0;
  for (int i = 0; i < 12; ++i)
    for (int j = 0; j < 12; ++j)
      worst = std::max(worst, std::abs(c(i, j) - exact.pair_corr(i, j)));
  CHECK(worst < 0.02);  // co-membership = (1 + corr)/2, so this is tighter
  MESSAGE("sbm gibbs vs enumeration worst pair gap: ", worst);
}

TEST_CASE("rank metropolis: w -> 1/2 limit accepts everything, uniform marginals") {
  auto t = RankTarget::from_comparisons(4, {{0, 1}, {1, 2}, {2, 3}}, 0.5 + 1e-12);
  McmcConfig cfg;
  cfg.n_sweeps = 100000;
  cfg.seed = 41;
  const auto samples = mcmc_rank(t, cfg);
  const Matrix h = sample_rank_position(samples);
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) CHECK(std::abs(h(i, k) - 0.25) < 0.01);
}

TEST_CASE("rank metropolis: acceptance rule at dV = +2") {
  // ((1-w)/w)^2 at w = 0.75 is (1/3)^2
  const double w = 0.75;
  const double log_ratio = std::log1p(-w) - std::log(w);
  CHECK(std::exp(2.0 * log_ratio) == doctest::Approx(1.0 / 9.0).epsilon(1e-12));
}

TEST_CASE("rank metropolis matches enumeration at n=6, m=20") {
  SplitMix rng(43);
  // planted order = identity; comparisons truthful with probability 0.75
  std::vector<std::pair<int, int>> comps;
  for (int c = 0; c < 20; ++c) {
    int i = static_cast<int>(rng.next_below(6));
    int j = static_cast<int>(rng.next_below(5));
    if (j >= i) ++j;
    const bool truthful = rng.next_unit() < 0.75;
    if ((i < j) == truthful)
      comps.emplace_back(i, j);
    else
      comps.emplace_back(j, i);
  }
  auto t = RankTarget::from_comparisons(6, comps, 0.75);
  const auto exact = enumerate_lnZ(TargetModel(t));

  for (bool adjacent : {false, true}) {
    McmcConfig cfg;
    cfg.n_sweeps = 400000;  // n proposals per sweep
    cfg.seed = 47;
    cfg.adjacent_transpositions = adjacent;
    const auto samples = mcmc_rank(t, cfg);
    const Matrix h = sample_rank_position(samples);
    double worst_tv = 0.0;
    for (int i = 0; i < 6; ++i) {
      double tv = 0.0;
      for (int k = 0; k < 6; ++k) tv += std::abs(h(i, k) - exact.rank_position(i, k));
      worst_tv = std::max(worst_tv, 0.5 * tv);
    }
    CHECK(worst_tv < 0.02);
    MESSAGE("rank mcmc (adjacent=", adjacent, ") worst position TV: ", worst_tv);
  }
}

TEST_CASE("mcmc config validation") {
  const auto t = IsingTarget::torus(3, 0.1);
  McmcConfig bad;
  bad.n_sweeps = 10;
  bad.burn_in = 10;
  CHECK_THROWS_AS((void)mcmc_ising(t, bad), ConfigError);
  McmcConfig bad2;
  bad2.thin = 0;
  CHECK_THROWS_AS((void)mcmc_ising(t, bad2), ConfigError);
}
