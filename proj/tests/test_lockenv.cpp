#include <doctest.h>

#include <cmath>

#include "lrps/lockenv.hpp"
#include "lrps/rng.hpp"

using lrps::LatentMap;
using lrps::LockParams;
using lrps::Policy;
using lrps::TabularMdp;

namespace {

LockParams make_params(int d, int H, double p = 0.5, double eps = 0.1, int cells = 4) {
  LockParams params;
  params.d = d;
  params.H = H;
  params.cells_per_state = cells;
  params.progress_probs.assign(d - 1, p);
  params.epsilon = eps;
  return params;
}

// total transition mass from observation x into the given cell
double cell_mass(const Eigen::MatrixXd& slice, int x, const std::vector<int>& cell) {
  double total = 0.0;
  for (int obs : cell) total += slice(obs, x);
  return total;
}

Policy flip(const Policy& p) {
  std::vector<int> actions(p.actions);
  for (int& a : actions) a = 1 - a;
  return Policy::make_deterministic(std::move(actions));
}

// Pr(Binomial(n, p) >= k)
double binom_tail(int n, double p, int k) {
  double total = 0.0;
  for (int j = k; j <= n; ++j) {
    double logc = std::lgamma(n + 1.0) - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
    total += std::exp(logc + j * std::log(p) + (n - j) * std::log1p(-p));
  }
  return total;
}

}  // namespace

TEST_CASE("lock parameter and map validation") {
  LockParams params = make_params(3, 10);
  CHECK_NOTHROW(params.validate());
  SUBCASE("wrong probability count") {
    params.progress_probs.pop_back();
    CHECK_THROWS(params.validate());
  }
  SUBCASE("probability out of range") {
    params.progress_probs[0] = 1.0;
    CHECK_THROWS(params.validate());
  }
  SUBCASE("epsilon out of range") {
    params.epsilon = 0.5;
    CHECK_THROWS(params.validate());
  }
  SUBCASE("map partition enforced") {
    LatentMap map = lrps::random_latent_map(params, 5);
    CHECK_NOTHROW(map.validate());
    std::swap(map.cells[0][0], map.cells[1][0]);
    CHECK_THROWS(map.validate());
  }
}

TEST_CASE("random_latent_map partitions the observations") {
  LockParams params = make_params(2, 6);
  LatentMap map = lrps::random_latent_map(params, 9);
  CHECK(static_cast<int>(map.phi.size()) == params.num_observations());
  CHECK(static_cast<int>(map.cells.size()) == params.num_latent());
  std::vector<int> hit(map.phi.size(), 0);
  for (const auto& cell : map.cells) {
    CHECK(static_cast<int>(cell.size()) == params.cells_per_state);
    for (int obs : cell) hit[obs] += 1;
  }
  for (int c : hit) CHECK(c == 1);
  // deterministic in the seed
  LatentMap again = lrps::random_latent_map(params, 9);
  CHECK(again.phi == map.phi);
}

TEST_CASE("lock transition masses follow the latent rules") {
  LockParams params = make_params(3, 10, 0.3, 0.12);
  LatentMap map = lrps::random_latent_map(params, 13);
  lrps::Rng rng(7);
  std::vector<int> star_actions(params.num_observations());
  for (int& a : star_actions) a = static_cast<int>(rng.next_u64() & 1);
  Policy pi_star = Policy::make_deterministic(star_actions);
  TabularMdp mdp = lrps::build_lock_mdp(pi_star, map, params);
  const int d = params.d;

  for (int a = 0; a < 2; ++a) {
    const Eigen::MatrixXd& T = mdp.transition[a];
    // terminals feed the minus sink
    for (int x : map.cells[map.plus()]) CHECK(cell_mass(T, x, map.cells[map.minus()]) == 1.0);
    for (int x : map.cells[map.minus()]) CHECK(cell_mass(T, x, map.cells[map.minus()]) == 1.0);
    // goal cell is biased toward plus, end of the bad track is not
    for (int x : map.cells[map.good(d)]) {
      CHECK(cell_mass(T, x, map.cells[map.plus()]) == doctest::Approx(0.5 + params.epsilon));
      CHECK(cell_mass(T, x, map.cells[map.minus()]) == doctest::Approx(0.5 - params.epsilon));
    }
    for (int x : map.cells[map.bad(d)]) {
      CHECK(cell_mass(T, x, map.cells[map.plus()]) == doctest::Approx(0.5));
      CHECK(cell_mass(T, x, map.cells[map.minus()]) == doctest::Approx(0.5));
    }
    // bad track progresses regardless of the action
    for (int i = 1; i <= d - 1; ++i) {
      double p = params.progress_probs[i - 1];
      for (int x : map.cells[map.bad(i)]) {
        CHECK(cell_mass(T, x, map.cells[map.bad(i + 1)]) == doctest::Approx(p));
        CHECK(cell_mass(T, x, map.cells[map.bad(i)]) == doctest::Approx(1.0 - p));
      }
    }
    // good track holds only under pi_star, otherwise falls to the bad track
    for (int i = 1; i <= d - 1; ++i) {
      double p = params.progress_probs[i - 1];
      for (int x : map.cells[map.good(i)]) {
        bool on_policy = a == pi_star.actions[x];
        int up = on_policy ? map.good(i + 1) : map.bad(i + 1);
        int stay = on_policy ? map.good(i) : map.bad(i);
        CHECK(cell_mass(T, x, map.cells[up]) == doctest::Approx(p));
        CHECK(cell_mass(T, x, map.cells[stay]) == doctest::Approx(1.0 - p));
      }
    }
  }

  // rewards mark the plus cell only; start is uniform on the first good cell
  for (int x = 0; x < params.num_observations(); ++x) {
    double want = map.phi[x] == map.plus() ? 1.0 : 0.0;
    CHECK(mdp.reward_mean(x, 0) == want);
    CHECK(mdp.reward_mean(x, 1) == want);
    double init = map.phi[x] == map.good(1) ? 1.0 / params.cells_per_state : 0.0;
    CHECK(mdp.initial_dist(x) == init);
  }
}

TEST_CASE("null lock is action independent and policy independent") {
  LockParams params = make_params(3, 12, 0.4);
  LatentMap map = lrps::random_latent_map(params, 17);
  TabularMdp mdp = lrps::build_null_lock(map, params);
  CHECK((mdp.transition[0] - mdp.transition[1]).cwiseAbs().maxCoeff() == 0.0);
  // progression splits evenly across the two tracks
  for (int i = 1; i <= params.d - 1; ++i) {
    double p = params.progress_probs[i - 1];
    for (int x : map.cells[map.good(i)]) {
      CHECK(cell_mass(mdp.transition[0], x, map.cells[map.good(i + 1)]) == doctest::Approx(p / 2));
      CHECK(cell_mass(mdp.transition[0], x, map.cells[map.bad(i + 1)]) == doctest::Approx(p / 2));
    }
  }
  double v0 = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Policy pi = lrps::random_deterministic_policy(params.num_observations(), 2, 100 + trial);
    double v = lrps::exact_value(mdp, pi);
    if (trial == 0)
      v0 = v;
    else
      CHECK(v == doctest::Approx(v0).epsilon(1e-12));
  }
}

TEST_CASE("lock spectrum matches the closed form") {
  for (int d : {2, 3}) {
    LockParams params = make_params(d, 8, 0.35, 0.1);
    LatentMap map = lrps::random_latent_map(params, 23 + d);
    Policy pi_star = lrps::random_deterministic_policy(params.num_observations(), 2, 3 + d);
    TabularMdp mdp = lrps::build_lock_mdp(pi_star, map, params);

    SUBCASE("optimal policy") {
      auto rep = lrps::verify_lock_spectrum(mdp, pi_star, pi_star, map, params);
      CHECK(rep.pass);
      CHECK(rep.numerical_rank <= 2 * d);
      CHECK(rep.max_eigenvalue_error <= 1e-8);
    }
    SUBCASE("fully disagreeing policy zeroes the good-track eigenvalues") {
      auto rep = lrps::verify_lock_spectrum(mdp, flip(pi_star), pi_star, map, params);
      CHECK(rep.pass);
    }
    SUBCASE("random policy") {
      Policy pi = lrps::random_deterministic_policy(params.num_observations(), 2, 77 + d);
      auto rep = lrps::verify_lock_spectrum(mdp, pi, pi_star, map, params);
      CHECK(rep.pass);
    }
    SUBCASE("null lock") {
      TabularMdp null_mdp = lrps::build_null_lock(map, params);
      Policy pi = lrps::random_deterministic_policy(params.num_observations(), 2, 88 + d);
      auto rep = lrps::verify_null_lock_spectrum(null_mdp, pi, map, params);
      CHECK(rep.pass);
    }
  }
}

TEST_CASE("suboptimality gap identity") {
  SUBCASE("optimal policy has zero gap") {
    LockParams params = make_params(2, 8);
    LatentMap map = lrps::random_latent_map(params, 31);
    Policy pi_star = lrps::random_deterministic_policy(params.num_observations(), 2, 4);
    TabularMdp mdp = lrps::build_lock_mdp(pi_star, map, params);
    auto rep = lrps::suboptimality_gap(mdp, pi_star, pi_star, map, params);
    CHECK(std::abs(rep.dp_gap) <= 1e-12);
    CHECK(rep.latent_gap == 0.0);
  }
  SUBCASE("d=1 locks have no room to mismatch") {
    LockParams params = make_params(1, 6);
    LatentMap map = lrps::random_latent_map(params, 32);
    Policy pi_star = lrps::random_deterministic_policy(params.num_observations(), 2, 5);
    TabularMdp mdp = lrps::build_lock_mdp(pi_star, map, params);
    Policy pi = lrps::random_deterministic_policy(params.num_observations(), 2, 6);
    auto rep = lrps::suboptimality_gap(mdp, pi, pi_star, map, params);
    CHECK(std::abs(rep.dp_gap) <= 1e-12);
    CHECK(rep.latent_gap == 0.0);
  }
  SUBCASE("both sides agree on random policies") {
    for (int trial = 0; trial < 6; ++trial) {
      int d = 2 + trial % 2;
      LockParams params = make_params(d, 8, 0.5, 0.1);
      LatentMap map = lrps::random_latent_map(params, 40 + trial);
      Policy pi_star = lrps::random_deterministic_policy(params.num_observations(), 2, trial);
      TabularMdp mdp = lrps::build_lock_mdp(pi_star, map, params);
      Policy pi = trial % 3 == 0 ? flip(pi_star)
                                 : lrps::random_deterministic_policy(params.num_observations(),
                                                                     2, 60 + trial);
      auto rep = lrps::suboptimality_gap(mdp, pi, pi_star, map, params);
      CHECK(std::abs(rep.difference) <= 1e-8);
      CHECK(rep.dp_gap >= -1e-12);
    }
  }
}

TEST_CASE("goal time matches the negative-binomial law") {
  SUBCASE("d=1 reaches the goal immediately") {
    auto stats = lrps::goal_time_stats(make_params(1, 5), 1000, 3);
    CHECK(stats.cdf[0] == 1.0);
    CHECK(stats.upper_bound_ok);
    CHECK(stats.lower_bound_ok);
  }
  SUBCASE("empirical cdf tracks the binomial tail") {
    const int n = 200000;
    for (double p : {0.3, 0.7}) {
      LockParams params = make_params(3, 12, p);
      auto stats = lrps::goal_time_stats(params, n, 11, 30);
      double sigma = 0.5 / std::sqrt(static_cast<double>(n));
      for (int h = 1; h <= 30; ++h) {
        // G <= h iff the first h-1 progression trials hold d-1 successes
        double want = binom_tail(h - 1, p, params.d - 1);
        CHECK(std::abs(stats.cdf[h - 1] - want) <= 4.0 * sigma + 1e-12);
      }
      CHECK(stats.upper_bound_ok);
      CHECK(stats.lower_bound_ok);
    }
  }
  SUBCASE("unequal probabilities rejected") {
    LockParams params = make_params(3, 12, 0.5);
    params.progress_probs[1] = 0.6;
    CHECK_THROWS(lrps::goal_time_stats(params, 10, 1));
  }
}

TEST_CASE("gv_policy_class separation and limits") {
  const int N = 64;
  auto pc = lrps::gv_policy_class(N, 8, 5);
  REQUIRE(pc.size() == 8);
  for (int i = 0; i < pc.size(); ++i) {
    for (int j = i + 1; j < pc.size(); ++j) {
      int dist = 0;
      for (int x = 0; x < N; ++x)
        if (pc.policies[i].actions[x] != pc.policies[j].actions[x]) ++dist;
      CHECK(dist >= N / 4);
    }
  }
  // deterministic in the seed
  auto again = lrps::gv_policy_class(N, 8, 5);
  for (int i = 0; i < pc.size(); ++i) CHECK(again.policies[i].actions == pc.policies[i].actions);
  // beyond the existence regime: log(class_size) > N/8
  CHECK_THROWS_AS(lrps::gv_policy_class(16, 8, 5), std::invalid_argument);
}
