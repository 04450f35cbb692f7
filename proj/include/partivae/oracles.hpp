#pragma once

#include "partivae/math.hpp"
#include "partivae/rng.hpp"
#include "partivae/targets.hpp"

#include <cstdint>
#include <vector>

namespace partivae::oracles {

// Exhaustive enumeration caps: 2^24 spin states, 8! permutations.
inline constexpr int kMaxSpinBits = 24;
inline constexpr int kMaxRankObjects = 8;

struct EnumerationResult {
  double lnZ = 0.0;
  Vector site_mean;      // spins: E[x_i]; ranking: E[rank_i]/n
  Matrix pair_corr;      // spins only: E[x_i x_j] (empty if skipped)
  Matrix rank_position;  // ranking only: P(object i at rank k), n x n
  std::vector<std::pair<Vector, double>> top_states;  // (config, probability)
};

// Exact ln Z and marginals by enumeration (log-sum-exp, single pass).
// pair_corr is filled for spin targets when n <= 16 unless with_pairs
// forces it. Throws CapacityError over the caps.
EnumerationResult enumerate_lnZ(const targets::TargetModel& target, int top_k = 0,
                                bool with_pairs = false);

// Exact ln Z of the L x L periodic-lattice Ising model (J=1, h=0) via the
// Kaufman four-product transfer-matrix formula, evaluated in log space.
double ising_exact_lnZ(int L, double beta);

// Infinite-lattice limit of (1/n) ln Z via the Onsager double integral
// (trapezoid quadrature); used as a convergence reference.
double ising_onsager_free_energy(double beta, int quad_points = 512);

struct McmcConfig {
  long n_sweeps = 10000;
  long burn_in = -1;  // negative: 10% of n_sweeps
  long thin = 1;      // retain every `thin` sweeps (one sweep = n proposals)
  std::uint64_t seed = 1;
  bool adjacent_transpositions = false;  // ranking proposal variant
};

// Single-site Metropolis for the Ising target; returns retained sweeps as
// hard configurations.
std::vector<Vector> mcmc_ising(const targets::IsingTarget& t, const McmcConfig& cfg);

// Single-site heat-bath (Gibbs) updates on SBM labels at fixed omega.
std::vector<Vector> mcmc_sbm(const targets::SbmTarget& t, const McmcConfig& cfg);

// Metropolis over permutations with transposition proposals; acceptance
// min(1, ((1-w)/w)^{dV}).
std::vector<Vector> mcmc_rank(const targets::RankTarget& t, const McmcConfig& cfg);

// Log acceptance ratio of flipping one site (exposed for exactness tests).
double ising_flip_log_ratio(const targets::IsingTarget& t, const Vector& x, int site);

// ---- Sample summaries ----------------------------------------------------
Vector sample_site_means(const std::vector<Vector>& samples);
Matrix sample_pair_corr(const std::vector<Vector>& samples);
// Histogram of (object, rank) occupancy for ranking samples (values k/n).
Matrix sample_rank_position(const std::vector<Vector>& samples);

}  // namespace partivae::oracles
