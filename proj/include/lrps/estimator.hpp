#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lrps/coeffs.hpp"
#include "lrps/mdp.hpp"

namespace lrps {

enum class FitObjective { basic_minimax_residual, adaptive_geometric_product };

struct FitConfig {
  int d = 1;
  int restarts = 16;
  int iterations = 400;
  std::uint64_t seed = 0;
  FitObjective objective = FitObjective::basic_minimax_residual;
  double residual_cap = 0.0;  // Delta, adaptive objective only
  int horizon = 0;            // H, adaptive objective only
  int threads = 1;
  // Extra starting spectra probed verbatim (each must be conjugate-closed,
  // unit-disk, size d); used by tests to inject feasibility witnesses.
  std::vector<Spectrum> injected_starts;
};

struct FitResult {
  Spectrum lambda_hat;         // conjugate-closed, unit disk
  double delta_hat = 0.0;      // achieved max residual
  double objective_value = 0.0;
  bool feasible = true;        // adaptive only: residual cap met
};

struct PolicyEstimate {
  int policy_index = 0;
  double v_tilde = 0.0;
  FitResult fit;
  RewardProfile predicted;
  bool adaptive_fallback = false;  // adaptive fit infeasible, basic used
};

struct SearchReport {
  int chosen_policy_index = 0;
  std::vector<PolicyEstimate> estimates;
  std::uint64_t dataset_seed = 0;
  int rank_d = 0;
  double wall_clock_seconds = 0.0;
};

// Importance-sampling step rewards under uniform logging:
// R'_h = (1/n) sum_t r_h^t prod_{h' <= h} K 1{pi(x^t_h') = a^t_h'}.
RewardProfile is_reward_estimates(const Dataset& dataset, const Policy& policy, int steps);

// Upper bound on the importance-sampling error of Lemma-2 form:
// sqrt(2 K^{3d} log(6 d |Pi| / delta) / n) + 2 K^{3d} log(6 d |Pi| / delta) / n.
double is_error_bound(int K, int d, int policy_class_size, double delta, int n);

// Residual cap for the adaptive fit:
// Delta = 2 d 4^d min{ sqrt(8 K^{3d} L / n), 4 K^{3d} L / n }, L = log(6 d |Pi| / delta).
double adaptive_residual_cap(int K, int d, int policy_class_size, double delta, int n);

// Minimize Delta over unit-disk conjugate-closed spectra subject to
// |sum_k (-1)^{k+1} alpha_k(lambda) R'_{h-k} - R'_h| <= Delta, h = d+1..3d.
FitResult fit_basic(const RewardProfile& estimates, const FitConfig& config);

// Fix lambda_1 = 1 and minimize prod_{k=2..d} sum_{h<H} |lambda_k|^h subject
// to all residuals <= residual_cap. Infeasible within budget => feasible =
// false with the best residual found.
FitResult fit_adaptive(const RewardProfile& estimates, const FitConfig& config);

enum class FitMode { basic, adaptive };

struct ValueEstimate {
  double v_tilde = 0.0;
  FitResult fit;
  RewardProfile predicted;
  bool adaptive_fallback = false;
};

// IS estimates for steps 1..3d+1, eigenvalue fit on the one-step-shifted
// window (the recurrence first binds at step d+2 because the first reward is
// drawn at the initial observation), then extrapolation to H and
// v_tilde = sum_h R~_h. When 3d+1 > H every step is estimated directly and
// no fit is needed.
ValueEstimate estimate_policy_value(const Dataset& dataset, const Policy& policy,
                                    int d, int H, FitMode mode, const FitConfig& config);

SearchReport policy_search(const Dataset& dataset, const PolicyClass& pi_class,
                           int d, int H, FitMode mode, const FitConfig& config);

double monte_carlo_value(const TabularMdp& mdp, const Policy& policy, int m,
                         std::uint64_t seed);

// Rank-adaptive search: first n/2 uniform episodes shared across candidate
// searches for every d in [H]; each candidate policy evaluated on floor(n/2H)
// fresh Monte-Carlo episodes; argmax of evaluated values wins (ties: lowest d).
SearchReport rank_adaptive_search(const TabularMdp& mdp, const PolicyClass& pi_class,
                                  int H, int n, const FitConfig& config,
                                  std::uint64_t seed);

}  // namespace lrps
