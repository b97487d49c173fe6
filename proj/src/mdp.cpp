#include "lrps/mdp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "lrps/rng.hpp"

namespace lrps {

namespace {

constexpr double kStochasticTol = 1e-12;

void check_distribution(const Eigen::VectorXd& v, const char* what) {
  double sum = 0.0;
  for (int i = 0; i < v.size(); ++i) {
    if (v(i) < 0.0) throw std::invalid_argument(std::string(what) + ": negative entry");
    sum += v(i);
  }
  if (std::abs(sum - 1.0) > kStochasticTol)
    throw std::invalid_argument(std::string(what) + ": does not sum to 1");
}

std::vector<double> column_cdf(const Eigen::MatrixXd& slice, int col) {
  std::vector<double> cdf(slice.rows());
  double acc = 0.0;
  for (int i = 0; i < slice.rows(); ++i) {
    acc += slice(i, col);
    cdf[i] = acc;
  }
  cdf.back() = 1.0;
  return cdf;
}

}  // namespace

void TabularMdp::validate() const {
  if (num_observations <= 0 || num_actions <= 0 || horizon <= 0)
    throw std::invalid_argument("TabularMdp: counts must be positive");
  if (static_cast<int>(transition.size()) != num_actions)
    throw std::invalid_argument("TabularMdp: one transition slice per action required");
  for (const auto& slice : transition) {
    if (slice.rows() != num_observations || slice.cols() != num_observations)
      throw std::invalid_argument("TabularMdp: transition slice shape mismatch");
    for (int x = 0; x < num_observations; ++x)
      check_distribution(slice.col(x), "TabularMdp transition column");
  }
  if (reward_mean.rows() != num_observations || reward_mean.cols() != num_actions)
    throw std::invalid_argument("TabularMdp: reward table shape mismatch");
  if ((reward_mean.array() < 0.0).any() || (reward_mean.array() > 1.0).any())
    throw std::invalid_argument("TabularMdp: rewards must lie in [0,1]");
  if (initial_dist.size() != num_observations)
    throw std::invalid_argument("TabularMdp: initial distribution length mismatch");
  check_distribution(initial_dist, "TabularMdp initial distribution");
}

double Policy::prob(int obs, int a) const {
  if (kind == Kind::deterministic) return actions[obs] == a ? 1.0 : 0.0;
  return probs(obs, a);
}

void Policy::validate(int num_observations, int num_actions) const {
  if (kind == Kind::deterministic) {
    if (static_cast<int>(actions.size()) != num_observations)
      throw std::invalid_argument("Policy: action map must cover all observations");
    for (int a : actions)
      if (a < 0 || a >= num_actions)
        throw std::invalid_argument("Policy: action out of range");
  } else {
    if (probs.rows() != num_observations || probs.cols() != num_actions)
      throw std::invalid_argument("Policy: probability table shape mismatch");
    for (int x = 0; x < num_observations; ++x)
      check_distribution(probs.row(x).transpose(), "Policy action distribution");
  }
}

Policy Policy::make_deterministic(std::vector<int> actions) {
  Policy p;
  p.kind = Kind::deterministic;
  p.actions = std::move(actions);
  return p;
}

Policy Policy::make_stochastic(Eigen::MatrixXd probs) {
  Policy p;
  p.kind = Kind::stochastic;
  p.probs = std::move(probs);
  return p;
}

Policy Policy::uniform(int num_observations, int num_actions) {
  Eigen::MatrixXd probs =
      Eigen::MatrixXd::Constant(num_observations, num_actions, 1.0 / num_actions);
  return make_stochastic(std::move(probs));
}

double RewardProfile::value_sum() const {
  return std::accumulate(values.begin(), values.end(), 0.0);
}

Episode sample_episode(const TabularMdp& mdp, const Policy& policy, std::uint64_t seed) {
  Rng rng(seed);
  Episode ep;
  const int H = mdp.horizon;
  ep.observations.resize(H);
  ep.actions.resize(H);
  ep.rewards.resize(H);

  std::vector<double> init_cdf(mdp.num_observations);
  double acc = 0.0;
  for (int i = 0; i < mdp.num_observations; ++i) {
    acc += mdp.initial_dist(i);
    init_cdf[i] = acc;
  }
  init_cdf.back() = 1.0;

  int x = rng.sample_cdf(init_cdf);
  for (int h = 0; h < H; ++h) {
    ep.observations[h] = x;
    int a;
    if (policy.kind == Policy::Kind::deterministic) {
      a = policy.actions[x];
    } else {
      std::vector<double> cdf(mdp.num_actions);
      double s = 0.0;
      for (int j = 0; j < mdp.num_actions; ++j) {
        s += policy.probs(x, j);
        cdf[j] = s;
      }
      cdf.back() = 1.0;
      a = rng.sample_cdf(cdf);
    }
    ep.actions[h] = a;
    double mean = mdp.reward_mean(x, a);
    if (mdp.reward_noise == RewardNoise::deterministic) {
      ep.rewards[h] = mean;
    } else {
      ep.rewards[h] = rng.next_double() < mean ? 1.0 : 0.0;
    }
    if (h + 1 < H) x = rng.sample_cdf(column_cdf(mdp.transition[a], x));
  }
  return ep;
}

Dataset sample_uniform_dataset(const TabularMdp& mdp, int n, std::uint64_t seed,
                               int threads) {
  if (n < 1) throw std::invalid_argument("sample_uniform_dataset: n must be >= 1");
  Dataset ds;
  ds.seed = seed;
  ds.horizon = mdp.horizon;
  ds.num_actions = mdp.num_actions;
  ds.episodes.resize(n);
  Policy uniform = Policy::uniform(mdp.num_observations, mdp.num_actions);

  auto work = [&](int lo, int hi) {
    for (int t = lo; t < hi; ++t)
      ds.episodes[t] = sample_episode(mdp, uniform, mix_seed(seed, t));
  };
  if (threads <= 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int lo = t * chunk, hi = std::min(n, lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }
  return ds;
}

Eigen::MatrixXd induced_transition(const TabularMdp& mdp, const Policy& policy) {
  const int X = mdp.num_observations;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(X, X);
  for (int x = 0; x < X; ++x) {
    if (policy.kind == Policy::Kind::deterministic) {
      T.col(x) = mdp.transition[policy.actions[x]].col(x);
    } else {
      for (int a = 0; a < mdp.num_actions; ++a)
        T.col(x) += policy.probs(x, a) * mdp.transition[a].col(x);
    }
  }
  return T;
}

RewardProfile exact_reward_profile(const TabularMdp& mdp, const Policy& policy) {
  const int X = mdp.num_observations;
  Eigen::VectorXd nu(X);
  for (int x = 0; x < X; ++x) {
    double v = 0.0;
    for (int a = 0; a < mdp.num_actions; ++a)
      v += policy.prob(x, a) * mdp.reward_mean(x, a);
    nu(x) = v;
  }
  Eigen::MatrixXd T = induced_transition(mdp, policy);
  RewardProfile profile;
  profile.kind = RewardProfile::Kind::exact;
  profile.values.resize(mdp.horizon);
  Eigen::VectorXd mu = mdp.initial_dist;
  for (int h = 0; h < mdp.horizon; ++h) {
    if (h > 0) mu = T * mu;
    profile.values[h] = nu.dot(mu);
  }
  return profile;
}

double exact_value(const TabularMdp& mdp, const Policy& policy) {
  return exact_reward_profile(mdp, policy).value_sum();
}

TabularMdp random_low_rank_mdp(int num_observations, int num_actions, int horizon,
                               int d, std::uint64_t seed, RewardNoise noise) {
  if (d < 1 || d > num_observations)
    throw std::invalid_argument("random_low_rank_mdp: rank out of range");
  Rng rng(mix_seed(seed, 0x10cca11));
  const int X = num_observations;

  // Shared emission factor: d probability columns over X. Every action slice
  // is Psi * Phi_a with column-stochastic Phi_a, so any policy mixture keeps
  // rank <= d.
  Eigen::MatrixXd psi(X, d);
  for (int j = 0; j < d; ++j) {
    double sum = 0.0;
    for (int i = 0; i < X; ++i) {
      double w = -std::log(1.0 - rng.next_double());
      psi(i, j) = w;
      sum += w;
    }
    psi.col(j) /= sum;
  }

  TabularMdp mdp;
  mdp.num_observations = X;
  mdp.num_actions = num_actions;
  mdp.horizon = horizon;
  mdp.reward_noise = noise;
  mdp.transition.resize(num_actions);
  for (int a = 0; a < num_actions; ++a) {
    Eigen::MatrixXd phi(d, X);
    for (int x = 0; x < X; ++x) {
      double sum = 0.0;
      for (int j = 0; j < d; ++j) {
        double w = -std::log(1.0 - rng.next_double());
        phi(j, x) = w;
        sum += w;
      }
      phi.col(x) /= sum;
    }
    mdp.transition[a] = psi * phi;
    // renormalize away accumulated rounding in each column
    for (int x = 0; x < X; ++x) mdp.transition[a].col(x) /= mdp.transition[a].col(x).sum();
  }

  mdp.reward_mean.resize(X, num_actions);
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < num_actions; ++a) mdp.reward_mean(x, a) = rng.next_double();

  mdp.initial_dist.resize(X);
  double sum = 0.0;
  for (int i = 0; i < X; ++i) {
    double w = -std::log(1.0 - rng.next_double());
    mdp.initial_dist(i) = w;
    sum += w;
  }
  mdp.initial_dist /= sum;
  mdp.validate();
  return mdp;
}

Policy random_deterministic_policy(int num_observations, int num_actions,
                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> actions(num_observations);
  for (int x = 0; x < num_observations; ++x) actions[x] = rng.next_index(num_actions);
  return Policy::make_deterministic(std::move(actions));
}

PolicyClass random_policy_class(int num_observations, int num_actions, int size,
                                std::uint64_t seed) {
  PolicyClass pc;
  for (int i = 0; i < size; ++i)
    pc.policies.push_back(
        random_deterministic_policy(num_observations, num_actions, mix_seed(seed, i)));
  return pc;
}

}  // namespace lrps
