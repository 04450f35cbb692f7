#pragma once

#include "partivae/math.hpp"

#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace partivae::targets {

// ---- Ising model on a periodic square lattice --------------------------
// ln f(x) = beta * sum over bonds of x_i x_j  (J = 1, h = 0).
struct IsingTarget {
  int L = 0;  // lattice side; 0 for custom bond sets
  int n = 0;
  double beta = 0.0;
  std::vector<std::pair<int, int>> bonds;

  // Right+down neighbor per site with wraparound: exactly 2n bonds,
  // every site in exactly 4. Requires L >= 3 (L = 2 would double bonds).
  static IsingTarget torus(int L, double beta);

  // Arbitrary bond list (small exact cross-checks).
  static IsingTarget from_bonds(int n, double beta, std::vector<std::pair<int, int>> bonds);
};

// Identical polynomial for hard (+-1) and soft (-1,1) configurations.
double ising_log_f(const IsingTarget& t, const Vector& x);

// Accumulates scale * d(ln f)/dx into gx.
void ising_soft_grad(const IsingTarget& t, const Vector& x, double scale, Vector& gx);

// ---- Two-group stochastic block model ----------------------------------
// ln f(x) = -n ln 2 + sum_{i<j} [ G_ij ln w(x_i,x_j) + (1-G_ij) ln(1-w(x_i,x_j)) ]
// with w(x_i,x_j) = w_out + (w_in - w_out)(1 + x_i x_j)/2, the multilinear
// interpolation that is exact at hard spins.
struct SbmTarget {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<std::uint8_t> adj;  // n*n adjacency
  double omega_in_logit = 0.0;
  double omega_out_logit = 0.0;
  bool learn_omega = true;

  double omega_in() const { return sigmoid(omega_in_logit); }
  double omega_out() const { return sigmoid(omega_out_logit); }
  bool has_edge(int i, int j) const { return adj[static_cast<size_t>(i) * n + j] != 0; }

  static SbmTarget from_edges(int n, std::vector<std::pair<int, int>> edges, double omega_in,
                              double omega_out, bool learn_omega = true);
};

double sbm_log_f(const SbmTarget& t, const Vector& x);

// Accumulates scale * gradients of the soft ln f; any of the output pointers
// may be null.
void sbm_soft_grad(const SbmTarget& t, const Vector& x, double scale, Vector* gx,
                   double* g_logit_in, double* g_logit_out);

// ---- Ranking from noisy pairwise comparisons ---------------------------
// Hard configurations are permutations x_i in {1/n,...,n/n}; the posterior is
// ln f = m ln w + V(x) ln((1-w)/w) with V the number of violated comparisons.
struct RankTarget {
  int n = 0;
  std::vector<std::pair<int, int>> comparisons;  // (i, j): i ranked before j
  double w = 0.75;
  bool learn_w = false;
  std::vector<std::vector<int>> touching;  // object -> comparison indices

  int m() const { return static_cast<int>(comparisons.size()); }

  static RankTarget from_comparisons(int n, std::vector<std::pair<int, int>> comparisons,
                                     double w, bool learn_w = false);
};

// Number of comparisons (i before j) violated by the permutation x.
long rank_violations(const RankTarget& t, const Vector& x);

double rank_log_f_hard(const RankTarget& t, const Vector& x);

// Soft version: V replaced by sum of sigmoid(k (x_i - x_j)).
double rank_log_f_soft(const RankTarget& t, const Vector& x, double k);

void rank_soft_grad(const RankTarget& t, const Vector& x, double k, double scale, Vector* gx,
                    double* g_w);

// Round a soft configuration to the permutation of its sort order; ties
// broken by ascending original index.
Vector rank_round(const Vector& x);

// ---- Learnable-parameter gradients (exact, for the joint optimizer) ----
Vector target_param_grads(const SbmTarget& t, const Vector& x_soft);
double target_param_grad_w(const RankTarget& t, const Vector& x_soft, double k);

// ---- Polymorphic wrapper used by the trainer and CLI --------------------
class TargetModel {
 public:
  enum class Kind { kIsing, kSbm, kRanking };

  explicit TargetModel(IsingTarget t) : v_(std::move(t)) {}
  explicit TargetModel(SbmTarget t) : v_(std::move(t)) {}
  explicit TargetModel(RankTarget t) : v_(std::move(t)) {}

  Kind kind() const;
  int dim() const;
  bool spin() const { return kind() != Kind::kRanking; }

  // Exact log mass on a hard configuration (spins +-1, or a permutation).
  double log_f_hard(const Vector& x) const;

  // The f-factor of a reported estimate: spins use log_f_hard; ranking
  // evaluates the simplex-constant f at the sort order of the draw.
  double log_f_eval(const Vector& x) const;

  double log_f_soft(const Vector& x, double k) const;

  // Accumulates scale * d(soft ln f)/dx into gx and, when learnable, the
  // parameter gradient into gp.
  void soft_grad(const Vector& x, double k, double scale, Vector& gx, Vector* gp) const;

  int n_learnable() const;
  Vector learnable_params() const;
  void set_learnable(const Vector& p);

  const IsingTarget& ising() const;
  const SbmTarget& sbm() const;
  const RankTarget& rank() const;
  IsingTarget& ising();
  SbmTarget& sbm();
  RankTarget& rank();

 private:
  std::variant<IsingTarget, SbmTarget, RankTarget> v_;
};

// ---- Dataset ingestion ---------------------------------------------------
// Edge list: one "u v" per line, 0-indexed, undirected; self-loops and
// duplicates (either orientation) rejected. Returns edges; *n_out = max+1.
std::vector<std::pair<int, int>> load_edge_list(const std::string& path, int* n_out);

// Comparisons: one "i j" per line meaning i ranked before j, 0-indexed;
// repeats allowed, i != j and both < n required.
std::vector<std::pair<int, int>> load_comparisons(const std::string& path, int n);

}  // namespace partivae::targets
