#include "lrps/lockenv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lrps/rng.hpp"

namespace lrps {

namespace {

// Adds mass spread uniformly over the target cell to a transition column.
void add_cell_mass(Eigen::MatrixXd& slice, int col, const std::vector<int>& cell,
                   double mass) {
  double per = mass / cell.size();
  for (int obs : cell) slice(obs, col) += per;
}

int hamming(const Policy& a, const Policy& b) {
  int dist = 0;
  for (std::size_t i = 0; i < a.actions.size(); ++i)
    if (a.actions[i] != b.actions[i]) ++dist;
  return dist;
}

}  // namespace

void LockParams::validate() const {
  if (d < 1 || H < 1 || cells_per_state < 1)
    throw std::invalid_argument("LockParams: counts must be positive");
  if (static_cast<int>(progress_probs.size()) != d - 1)
    throw std::invalid_argument("LockParams: need exactly d-1 progress probabilities");
  for (double p : progress_probs)
    if (p <= 0.0 || p >= 1.0)
      throw std::invalid_argument("LockParams: progress probabilities must lie in (0,1)");
  if (epsilon <= 0.0 || epsilon >= 0.5)
    throw std::invalid_argument("LockParams: epsilon must lie in (0, 1/2)");
}

void LatentMap::validate() const {
  const int S = 2 * d + 2;
  if (static_cast<int>(cells.size()) != S)
    throw std::invalid_argument("LatentMap: one cell per latent state required");
  std::vector<int> seen(phi.size(), 0);
  for (int s = 0; s < S; ++s) {
    if (static_cast<int>(cells[s].size()) != cells_per_state)
      throw std::invalid_argument("LatentMap: cells must have equal size");
    for (int obs : cells[s]) {
      if (obs < 0 || obs >= static_cast<int>(phi.size()) || phi[obs] != s)
        throw std::invalid_argument("LatentMap: cell/phi mismatch");
      seen[obs] += 1;
    }
  }
  for (int c : seen)
    if (c != 1) throw std::invalid_argument("LatentMap: cells must partition observations");
}

LatentMap random_latent_map(const LockParams& params, std::uint64_t seed) {
  params.validate();
  const int N = params.num_observations();
  const int S = params.num_latent();
  std::vector<int> perm(N);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(mix_seed(seed, 0x9a7));
  for (int i = N - 1; i > 0; --i) std::swap(perm[i], perm[rng.next_index(i + 1)]);

  LatentMap map;
  map.d = params.d;
  map.cells_per_state = params.cells_per_state;
  map.phi.assign(N, -1);
  map.cells.resize(S);
  for (int s = 0; s < S; ++s) {
    for (int j = 0; j < params.cells_per_state; ++j) {
      int obs = perm[s * params.cells_per_state + j];
      map.cells[s].push_back(obs);
      map.phi[obs] = s;
    }
    std::sort(map.cells[s].begin(), map.cells[s].end());
  }
  map.validate();
  return map;
}

PolicyClass gv_policy_class(int N, int class_size, std::uint64_t seed) {
  if (class_size < 1) throw std::invalid_argument("gv_policy_class: class_size must be >= 1");
  if (std::log(static_cast<double>(class_size)) > N / 8.0)
    throw std::invalid_argument("gv_policy_class: class_size beyond existence regime");
  const int min_dist = N / 4;
  const long budget = 4000L * class_size;
  Rng rng(mix_seed(seed, 0x617));
  PolicyClass pc;
  long attempts = 0;
  while (pc.size() < class_size) {
    if (++attempts > budget)
      throw std::runtime_error("gv_policy_class: rejection budget exhausted, lower class_size");
    std::vector<int> actions(N);
    for (int i = 0; i < N; ++i) actions[i] = static_cast<int>(rng.next_u64() & 1);
    Policy cand = Policy::make_deterministic(std::move(actions));
    bool ok = true;
    for (const Policy& prev : pc.policies)
      if (hamming(cand, prev) < min_dist) {
        ok = false;
        break;
      }
    if (ok) pc.policies.push_back(std::move(cand));
  }
  return pc;
}

TabularMdp build_lock_mdp(const Policy& pi_star, const LatentMap& phi,
                          const LockParams& params) {
  params.validate();
  phi.validate();
  const int N = params.num_observations();
  pi_star.validate(N, 2);
  const int d = params.d;

  TabularMdp mdp;
  mdp.num_observations = N;
  mdp.num_actions = 2;
  mdp.horizon = params.H;
  mdp.reward_noise = RewardNoise::deterministic;
  mdp.transition.assign(2, Eigen::MatrixXd::Zero(N, N));

  for (int x = 0; x < N; ++x) {
    int s = phi.phi[x];
    for (int a = 0; a < 2; ++a) {
      Eigen::MatrixXd& slice = mdp.transition[a];
      if (s == phi.minus() || s == phi.plus()) {
        add_cell_mass(slice, x, phi.cells[phi.minus()], 1.0);
      } else if (s == phi.bad(d)) {
        add_cell_mass(slice, x, phi.cells[phi.plus()], 0.5);
        add_cell_mass(slice, x, phi.cells[phi.minus()], 0.5);
      } else if (s == phi.good(d)) {
        add_cell_mass(slice, x, phi.cells[phi.plus()], 0.5 + params.epsilon);
        add_cell_mass(slice, x, phi.cells[phi.minus()], 0.5 - params.epsilon);
      } else if (s >= phi.bad(1) && s <= phi.bad(d - 1)) {
        int i = s - phi.bad(1) + 1;
        double p = params.progress_probs[i - 1];
        add_cell_mass(slice, x, phi.cells[phi.bad(i + 1)], p);
        add_cell_mass(slice, x, phi.cells[phi.bad(i)], 1.0 - p);
      } else {
        // good chain below the goal: staying on it requires playing pi_star
        int i = s - phi.good(1) + 1;
        double p = params.progress_probs[i - 1];
        if (a == pi_star.actions[x]) {
          add_cell_mass(slice, x, phi.cells[phi.good(i + 1)], p);
          add_cell_mass(slice, x, phi.cells[phi.good(i)], 1.0 - p);
        } else {
          add_cell_mass(slice, x, phi.cells[phi.bad(i + 1)], p);
          add_cell_mass(slice, x, phi.cells[phi.bad(i)], 1.0 - p);
        }
      }
    }
  }

  mdp.reward_mean = Eigen::MatrixXd::Zero(N, 2);
  for (int obs : phi.cells[phi.plus()]) mdp.reward_mean.row(obs).setOnes();

  mdp.initial_dist = Eigen::VectorXd::Zero(N);
  for (int obs : phi.cells[phi.good(1)])
    mdp.initial_dist(obs) = 1.0 / params.cells_per_state;

  mdp.validate();
  return mdp;
}

TabularMdp build_null_lock(const LatentMap& phi, const LockParams& params) {
  params.validate();
  phi.validate();
  const int N = params.num_observations();
  const int d = params.d;

  TabularMdp mdp;
  mdp.num_observations = N;
  mdp.num_actions = 2;
  mdp.horizon = params.H;
  mdp.reward_noise = RewardNoise::deterministic;
  mdp.transition.assign(2, Eigen::MatrixXd::Zero(N, N));

  Eigen::MatrixXd& slice = mdp.transition[0];
  for (int x = 0; x < N; ++x) {
    int s = phi.phi[x];
    if (s == phi.minus() || s == phi.plus()) {
      add_cell_mass(slice, x, phi.cells[phi.minus()], 1.0);
    } else if (s == phi.bad(d) || s == phi.good(d)) {
      add_cell_mass(slice, x, phi.cells[phi.plus()], 0.5);
      add_cell_mass(slice, x, phi.cells[phi.minus()], 0.5);
    } else {
      // both tracks split progression and stay mass evenly across good/bad
      int i = (s >= phi.bad(1)) ? s - phi.bad(1) + 1 : s - phi.good(1) + 1;
      double p = params.progress_probs[i - 1];
      add_cell_mass(slice, x, phi.cells[phi.good(i + 1)], p / 2.0);
      add_cell_mass(slice, x, phi.cells[phi.bad(i + 1)], p / 2.0);
      add_cell_mass(slice, x, phi.cells[phi.good(i)], (1.0 - p) / 2.0);
      add_cell_mass(slice, x, phi.cells[phi.bad(i)], (1.0 - p) / 2.0);
    }
  }
  mdp.transition[1] = slice;

  mdp.reward_mean = Eigen::MatrixXd::Zero(N, 2);
  for (int obs : phi.cells[phi.plus()]) mdp.reward_mean.row(obs).setOnes();

  mdp.initial_dist = Eigen::VectorXd::Zero(N);
  for (int obs : phi.cells[phi.good(1)])
    mdp.initial_dist(obs) = 1.0 / params.cells_per_state;

  mdp.validate();
  return mdp;
}

namespace {

LockSpectrumReport compare_spectrum(const TabularMdp& mdp, const Policy& policy,
                                    const std::vector<std::complex<double>>& expected_nonzero,
                                    int rank_bound, double tol) {
  LockSpectrumReport report;
  report.rank_bound = rank_bound;

  Eigen::MatrixXd T = induced_transition(mdp, policy);
  auto spec = spectrum_of(T);
  if (!spec.converged) {
    report.detail = "eigensolver did not converge";
    return report;
  }
  report.numerical_rank = spec.numerical_rank;

  std::vector<std::complex<double>> expected = expected_nonzero;
  expected.resize(mdp.num_observations, {0.0, 0.0});
  Spectrum exp_sorted = make_spectrum(expected);
  report.expected = exp_sorted.values;
  report.observed = spec.spectrum.values;

  // greedy nearest matching; adequate because expected values are well
  // separated reals plus a zero cluster
  std::vector<bool> used(report.observed.size(), false);
  double worst = 0.0;
  for (const auto& e : report.expected) {
    int best = -1;
    double bestdist = 0.0;
    for (std::size_t j = 0; j < report.observed.size(); ++j) {
      if (used[j]) continue;
      double dist = std::abs(report.observed[j] - e);
      if (best < 0 || dist < bestdist) {
        best = static_cast<int>(j);
        bestdist = dist;
      }
    }
    used[best] = true;
    worst = std::max(worst, bestdist);
  }
  report.max_eigenvalue_error = worst;
  report.pass = worst <= tol && report.numerical_rank <= rank_bound;
  if (!report.pass) {
    std::ostringstream oss;
    oss << "max eigenvalue error " << worst << " (tol " << tol << "), numerical rank "
        << report.numerical_rank << " (bound " << rank_bound << ")";
    report.detail = oss.str();
  }
  return report;
}

}  // namespace

LockSpectrumReport verify_lock_spectrum(const TabularMdp& mdp, const Policy& policy,
                                        const Policy& pi_star, const LatentMap& phi,
                                        const LockParams& params, double tol) {
  const int d = params.d;
  std::vector<std::complex<double>> expected;
  expected.emplace_back(1.0, 0.0);  // the minus sink
  for (int i = 1; i <= d - 1; ++i) {
    double p = params.progress_probs[i - 1];
    expected.emplace_back(1.0 - p, 0.0);  // bad chain
    int matches = 0;
    for (int obs : phi.cells[phi.good(i)])
      if (policy.actions[obs] == pi_star.actions[obs]) ++matches;
    double match_prob = static_cast<double>(matches) / params.cells_per_state;
    expected.emplace_back((1.0 - p) * match_prob, 0.0);  // good chain
  }
  return compare_spectrum(mdp, policy, expected, 2 * d, tol);
}

LockSpectrumReport verify_null_lock_spectrum(const TabularMdp& mdp, const Policy& policy,
                                             const LatentMap& phi, const LockParams& params,
                                             double tol) {
  // The even split couples the two tracks at every level, so each level
  // contributes the pair track-sum/track-difference with eigenvalues
  // (1 - p_i) and 0; the diagonal entries (1 - p_i)/2 are not eigenvalues.
  const int d = params.d;
  std::vector<std::complex<double>> expected;
  expected.emplace_back(1.0, 0.0);
  for (int i = 1; i <= d - 1; ++i) {
    double p = params.progress_probs[i - 1];
    expected.emplace_back(1.0 - p, 0.0);
  }
  return compare_spectrum(mdp, policy, expected, 2 * d, tol);
}

GoalTimeStats goal_time_stats(const LockParams& params, int num_samples,
                              std::uint64_t seed, int max_h) {
  params.validate();
  if (num_samples < 1) throw std::invalid_argument("goal_time_stats: need samples");
  const int d = params.d;
  double p = d > 1 ? params.progress_probs[0] : 1.0;
  for (double q : params.progress_probs)
    if (q != p)
      throw std::invalid_argument("goal_time_stats: closed-form checks need equal probabilities");

  const double delta = 0.1;
  int h_ub = d > 1 ? static_cast<int>(std::ceil((2.0 * d / p) * std::log(1.0 / delta))) : 1;
  if (max_h <= 0) max_h = std::max({params.H, h_ub + 1, 4 * d});

  std::vector<long> counts(max_h + 1, 0);  // counts[h] = #{G == h}, overflow in counts[max_h+..] dropped
  long overflow = 0;
  Rng rng(mix_seed(seed, 0x60a1));
  for (int t = 0; t < num_samples; ++t) {
    int level = 1, step = 1;
    while (level < d && step <= max_h) {
      if (rng.next_double() < p) ++level;
      ++step;
    }
    if (level < d || step > max_h) {
      ++overflow;
    } else {
      counts[step] += 1;
    }
  }
  (void)overflow;

  GoalTimeStats stats;
  stats.num_samples = num_samples;
  stats.cdf.resize(max_h);
  double acc = 0.0;
  for (int h = 1; h <= max_h; ++h) {
    acc += static_cast<double>(counts[h]) / num_samples;
    stats.cdf[h - 1] = acc;
  }

  double sigma = 0.5 / std::sqrt(static_cast<double>(num_samples));  // worst-case binomial sd

  std::ostringstream detail;
  // upper bound lemma: Pr(G <= (2d/p) ln(1/delta)) >= 1 - delta
  {
    int h = std::min(h_ub, max_h);
    double observed = h >= 1 ? stats.cdf[h - 1] : 0.0;
    stats.upper_bound_ok = observed >= 1.0 - delta - 3.0 * sigma;
    detail << "upper: Pr(G<=" << h << ")=" << observed << " vs " << 1.0 - delta << "; ";
  }
  // lower bound lemma: Pr(G <= h) <= (h-d+1) (2peh/d)^{d-1}
  {
    stats.lower_bound_ok = true;
    for (int h = d; h <= max_h; ++h) {
      double bound = (h - d + 1) * std::pow(2.0 * p * M_E * h / d, d - 1);
      if (stats.cdf[h - 1] > bound + 3.0 * sigma) {
        stats.lower_bound_ok = false;
        detail << "lower violated at h=" << h << ": " << stats.cdf[h - 1] << " > " << bound
               << "; ";
        break;
      }
    }
  }
  stats.detail = detail.str();
  return stats;
}

GapReport suboptimality_gap(const TabularMdp& mdp, const Policy& pi,
                            const Policy& pi_star, const LatentMap& phi,
                            const LockParams& params) {
  GapReport report;
  TabularMdp star_mdp = build_lock_mdp(pi_star, phi, params);
  report.dp_gap = exact_value(star_mdp, pi_star) - exact_value(mdp, pi);

  // Latent DP for eps * Pr(G <= H-1 and the bad track was entered before G).
  // State: (level i, on-good-track flag); arrival at level d is absorbing
  // and its track records whether a mismatch occurred earlier.
  const int d = params.d;
  std::vector<double> match_prob(d, 1.0);  // per good cell i = 1..d-1
  for (int i = 1; i <= d - 1; ++i) {
    int matches = 0;
    for (int obs : phi.cells[phi.good(i)])
      if (pi.actions[obs] == pi_star.actions[obs]) ++matches;
    match_prob[i - 1] = static_cast<double>(matches) / params.cells_per_state;
  }

  double arrived_bad = 0.0;  // mass absorbed at level d on the bad track by step H-1
  std::vector<double> good(d + 1, 0.0), bad(d + 1, 0.0);
  if (d > 1) {
    // transition t moves step t mass to step t+1; arrivals at level d on
    // steps 2..H-1 come from transitions 1..H-2
    good[1] = 1.0;
    for (int t = 1; t <= params.H - 2; ++t) {
      std::vector<double> ng(d + 1, 0.0), nb(d + 1, 0.0);
      for (int i = 1; i <= d - 1; ++i) {
        double p = params.progress_probs[i - 1];
        double q = match_prob[i - 1];
        double g = good[i], b = bad[i];
        ng[i + 1] += g * q * p;
        ng[i] += g * q * (1.0 - p);
        nb[i + 1] += g * (1.0 - q) * p;
        nb[i] += g * (1.0 - q) * (1.0 - p);
        nb[i + 1] += b * p;
        nb[i] += b * (1.0 - p);
      }
      arrived_bad += nb[d];
      ng[d] = 0.0;
      nb[d] = 0.0;
      good = std::move(ng);
      bad = std::move(nb);
    }
  }
  // d == 1 starts at the goal: G = 1 with no earlier step to mismatch on
  report.latent_gap = params.epsilon * arrived_bad;
  report.difference = report.dp_gap - report.latent_gap;
  return report;
}

}  // namespace lrps
