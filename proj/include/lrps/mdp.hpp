#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lrps/spectrum.hpp"

namespace lrps {

enum class RewardNoise { deterministic, bernoulli };

// Finite episodic MDP. Transition slices are column-stochastic:
// transition[a](next, cur) = T(next | cur, a).
struct TabularMdp {
  int num_observations = 0;
  int num_actions = 0;
  int horizon = 0;
  std::vector<Eigen::MatrixXd> transition;  // one |X|x|X| slice per action
  Eigen::MatrixXd reward_mean;              // |X| x K, entries in [0,1]
  RewardNoise reward_noise = RewardNoise::deterministic;
  Eigen::VectorXd initial_dist;             // length |X|

  void validate() const;  // throws std::invalid_argument on violation
};

struct Policy {
  enum class Kind { deterministic, stochastic };
  Kind kind = Kind::deterministic;
  std::vector<int> actions;   // deterministic: obs -> action
  Eigen::MatrixXd probs;      // stochastic: |X| x K, rows sum to 1

  int action_at(int obs) const { return actions[obs]; }
  double prob(int obs, int a) const;
  void validate(int num_observations, int num_actions) const;

  static Policy make_deterministic(std::vector<int> actions);
  static Policy make_stochastic(Eigen::MatrixXd probs);
  static Policy uniform(int num_observations, int num_actions);
};

struct PolicyClass {
  std::vector<Policy> policies;
  int size() const { return static_cast<int>(policies.size()); }
};

struct Episode {
  std::vector<int> observations;
  std::vector<int> actions;
  std::vector<double> rewards;
};

struct Dataset {
  std::vector<Episode> episodes;
  std::uint64_t seed = 0;
  int horizon = 0;
  int num_actions = 0;
  int size() const { return static_cast<int>(episodes.size()); }
};

struct RewardProfile {
  enum class Kind { exact, estimated, predicted };
  Kind kind = Kind::exact;
  std::vector<double> values;  // values[h-1] = R_h
  double value_sum() const;
};

Episode sample_episode(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed);

// Actions i.i.d. uniform over K; episode t uses seed mix_seed(seed, t).
Dataset sample_uniform_dataset(const TabularMdp& mdp, int n, std::uint64_t seed,
                               int threads = 1);

// [T^pi]_(x',x) = E_{a~pi(x)} T(x'|x,a), column-stochastic.
Eigen::MatrixXd induced_transition(const TabularMdp& mdp, const Policy& policy);

// R_h = <nu^pi, mu_h> with mu_1 = mu0 and mu_h = T^pi mu_{h-1}.
RewardProfile exact_reward_profile(const TabularMdp& mdp, const Policy& policy);
double exact_value(const TabularMdp& mdp, const Policy& policy);

// Random instance whose every induced transition matrix has rank <= d:
// a shared nonnegative |X| x d factor of probability columns composed with
// per-action d x |X| column-stochastic mixing weights.
TabularMdp random_low_rank_mdp(int num_observations, int num_actions, int horizon,
                               int d, std::uint64_t seed,
                               RewardNoise noise = RewardNoise::deterministic);

Policy random_deterministic_policy(int num_observations, int num_actions, std::uint64_t seed);
PolicyClass random_policy_class(int num_observations, int num_actions, int size,
                                std::uint64_t seed);

}  // namespace lrps
