#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrps/mdp.hpp"

namespace lrps {

// Latent chain of the combination-lock family: a good and a bad track of
// length d plus terminal states + and -. Observations are partitioned into
// equal cells, one per latent state.
struct LockParams {
  int d = 1;
  int H = 1;
  int cells_per_state = 8;
  std::vector<double> progress_probs;  // p_1..p_{d-1}, in (0,1)
  double epsilon = 0.1;                // terminal bias, in (0, 1/2)

  int num_latent() const { return 2 * d + 2; }
  int num_observations() const { return num_latent() * cells_per_state; }
  void validate() const;
};

// Latent indexing: (i,g) -> i-1, (i,b) -> d+i-1 for i in 1..d,
// plus -> 2d, minus -> 2d+1.
struct LatentMap {
  int d = 0;
  int cells_per_state = 0;
  std::vector<int> phi;                     // obs -> latent index
  std::vector<std::vector<int>> cells;      // latent index -> observations

  int good(int i) const { return i - 1; }
  int bad(int i) const { return d + i - 1; }
  int plus() const { return 2 * d; }
  int minus() const { return 2 * d + 1; }
  void validate() const;
};

// Uniformly random assignment of observations to equal-size cells.
LatentMap random_latent_map(const LockParams& params, std::uint64_t seed);

// Binary deterministic policies with pairwise Hamming disagreement >= N/4,
// verified exhaustively. Throws std::runtime_error when the rejection
// budget is exhausted (caller lowers class_size).
PolicyClass gv_policy_class(int N, int class_size, std::uint64_t seed);

// The lock whose good track is held only by playing pi_star.
TabularMdp build_lock_mdp(const Policy& pi_star, const LatentMap& phi,
                          const LockParams& params);

// Action-independent variant that splits progression mass evenly across the
// good and bad tracks; every policy has the same value.
TabularMdp build_null_lock(const LatentMap& phi, const LockParams& params);

struct LockSpectrumReport {
  bool pass = false;
  int numerical_rank = 0;
  // 2d: the goal rows differ by the epsilon bias but share the {+,-} support,
  // so the matrix carries a nilpotent part and its rank exceeds the count of
  // nonzero eigenvalues (2d - 1) by one.
  int rank_bound = 0;
  double max_eigenvalue_error = 0.0;
  std::vector<std::complex<double>> expected;  // closed-form nonzero list + 0 padding
  std::vector<std::complex<double>> observed;
  std::string detail;
};

// Compares spectrum_of(T^pi) with the closed-form eigenvalue list:
// 1 at -, (1-p_i) at (i,b), (1-p_i) * match_i at (i,g) where match_i is the
// fraction of the good cell on which pi agrees with pi_star, zeros elsewhere.
LockSpectrumReport verify_lock_spectrum(const TabularMdp& mdp, const Policy& policy,
                                        const Policy& pi_star, const LatentMap& phi,
                                        const LockParams& params,
                                        double tol = 1e-8);

// Null-lock variant: the split couples the tracks, so each level i < d
// contributes eigenvalues (1-p_i) (track sum) and 0 (track difference).
LockSpectrumReport verify_null_lock_spectrum(const TabularMdp& mdp, const Policy& policy,
                                             const LatentMap& phi, const LockParams& params,
                                             double tol = 1e-8);

struct GoalTimeStats {
  std::vector<double> cdf;     // cdf[h-1] = empirical Pr(G <= h)
  int num_samples = 0;
  bool upper_bound_ok = false;   // Pr(G <= (2d/p) ln(1/delta)) >= 1 - delta - 3 sigma
  bool lower_bound_ok = false;   // Pr(G <= h) <= (h-d+1)(2peh/d)^{d-1} + 3 sigma
  std::string detail;
};

// Simulates the latent progression chain only; requires equal progress
// probabilities for the closed-form checks (delta fixed at 0.1).
GoalTimeStats goal_time_stats(const LockParams& params, int num_samples,
                              std::uint64_t seed, int max_h = 0);

struct GapReport {
  double dp_gap = 0.0;      // exact_value(pi_star) - exact_value(pi)
  double latent_gap = 0.0;  // eps * Pr(G <= H-1 and some mismatch before G)
  double difference = 0.0;
};

// Both sides of the suboptimality identity computed independently: the left
// by the observation-level DP oracle, the right by a DP on the latent chain.
GapReport suboptimality_gap(const TabularMdp& mdp, const Policy& pi,
                            const Policy& pi_star, const LatentMap& phi,
                            const LockParams& params);

}  // namespace lrps
