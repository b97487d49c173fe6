#include "lrps/estimator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "lrps/rng.hpp"

namespace lrps {

namespace {

constexpr double kThetaMin = 1e-8;  // keeps conjugate pairs strictly complex

// Spectra are searched as r real roots in [-1,1] plus c conjugate pairs
// (modulus in [0,1], phase in (0,pi)), r + 2c = d. Coefficients of the
// induced recurrence stay real by construction.
struct Partition {
  int num_real = 0;
  int num_pairs = 0;
  int dim() const { return num_real + 2 * num_pairs; }
};

std::vector<Partition> partitions_of(int d) {
  std::vector<Partition> out;
  for (int c = 0; 2 * c <= d; ++c) out.push_back({d - 2 * c, c});
  return out;
}

void param_bounds(const Partition& part, std::vector<double>& lo, std::vector<double>& hi) {
  lo.clear();
  hi.clear();
  for (int i = 0; i < part.num_real; ++i) {
    lo.push_back(-1.0);
    hi.push_back(1.0);
  }
  for (int i = 0; i < part.num_pairs; ++i) {
    lo.push_back(0.0);
    hi.push_back(1.0);
    lo.push_back(kThetaMin);
    hi.push_back(M_PI - kThetaMin);
  }
}

// Monic real polynomial with the parameterized roots; poly[j] multiplies
// z^{deg-j}, poly[0] = 1.
std::vector<double> monic_poly(const Partition& part, const std::vector<double>& p,
                               bool prepend_unit_root) {
  std::vector<double> poly{1.0};
  auto mul_linear = [&poly](double root) {
    poly.push_back(0.0);
    for (int j = static_cast<int>(poly.size()) - 1; j >= 1; --j) poly[j] -= root * poly[j - 1];
  };
  if (prepend_unit_root) mul_linear(1.0);
  int idx = 0;
  for (int i = 0; i < part.num_real; ++i) mul_linear(p[idx++]);
  for (int i = 0; i < part.num_pairs; ++i) {
    double rho = p[idx++], theta = p[idx++];
    // (z - rho e^{i theta})(z - rho e^{-i theta}) = z^2 - 2 rho cos(theta) z + rho^2
    double b = -2.0 * rho * std::cos(theta), c = rho * rho;
    std::vector<double> next(poly.size() + 2, 0.0);
    for (std::size_t j = 0; j < poly.size(); ++j) {
      next[j] += poly[j];
      next[j + 1] += b * poly[j];
      next[j + 2] += c * poly[j];
    }
    poly = std::move(next);
  }
  return poly;
}

// Recurrence coefficients c_k = -poly[k] for the monic polynomial above.
std::vector<double> poly_to_recurrence(const std::vector<double>& poly) {
  std::vector<double> c(poly.size() - 1);
  for (std::size_t k = 1; k < poly.size(); ++k) c[k - 1] = -poly[k];
  return c;
}

Spectrum params_to_spectrum(const Partition& part, const std::vector<double>& p,
                            bool prepend_unit_root) {
  std::vector<std::complex<double>> vals;
  if (prepend_unit_root) vals.emplace_back(1.0, 0.0);
  int idx = 0;
  for (int i = 0; i < part.num_real; ++i) vals.emplace_back(p[idx++], 0.0);
  for (int i = 0; i < part.num_pairs; ++i) {
    double rho = p[idx++], theta = p[idx++];
    vals.emplace_back(rho * std::cos(theta), rho * std::sin(theta));
    vals.emplace_back(rho * std::cos(theta), -rho * std::sin(theta));
  }
  return make_spectrum(std::move(vals));
}

double max_residual(const std::vector<double>& c, const std::vector<double>& r,
                    int d_total) {
  // residuals of the order-d recurrence on steps d+1..(r.size())
  double worst = 0.0;
  for (std::size_t h = d_total; h < r.size(); ++h) {
    double pred = 0.0;
    for (int k = 1; k <= d_total; ++k) pred += c[k - 1] * r[h - k];
    worst = std::max(worst, std::abs(pred - r[h]));
  }
  return worst;
}

double geometric_sum(double modulus, int H) {
  double s = 0.0, p = 1.0;
  for (int h = 0; h < H; ++h) {
    s += p;
    p *= modulus;
  }
  return s;
}

// Lexicographic score: any feasible point beats any infeasible one.
struct Score {
  bool feasible = true;
  double primary = 0.0;
  bool operator<(const Score& other) const {
    if (feasible != other.feasible) return feasible;
    return primary < other.primary;
  }
};

struct FitProblem {
  const std::vector<double>* estimates;
  int d_total;
  bool adaptive;        // unit root fixed, geometric-product objective
  double residual_cap;
  int horizon;

  Score evaluate(const Partition& part, const std::vector<double>& p) const {
    auto poly = monic_poly(part, p, adaptive);
    auto c = poly_to_recurrence(poly);
    double resid = max_residual(c, *estimates, d_total);
    if (!adaptive) return {true, resid};
    if (resid > residual_cap) return {false, resid};
    double prod = 1.0;
    int idx = 0;
    for (int i = 0; i < part.num_real; ++i) prod *= geometric_sum(std::abs(p[idx++]), horizon);
    for (int i = 0; i < part.num_pairs; ++i) {
      double rho = p[idx];
      idx += 2;
      double g = geometric_sum(rho, horizon);
      prod *= g * g;
    }
    return {true, prod};
  }
};

// Coordinate-wise pattern search with a shrinking step, greedy acceptance.
Score pattern_search(const FitProblem& problem, const Partition& part,
                     std::vector<double>& p, const std::vector<double>& lo,
                     const std::vector<double>& hi, int iterations) {
  const int n = static_cast<int>(p.size());
  Score best = problem.evaluate(part, p);
  if (n == 0) return best;
  std::vector<double> step(n);
  for (int i = 0; i < n; ++i) step[i] = 0.25 * (hi[i] - lo[i]);
  for (int it = 0; it < iterations; ++it) {
    bool improved = false;
    for (int i = 0; i < n; ++i) {
      double orig = p[i];
      for (double sign : {+1.0, -1.0}) {
        double cand = std::clamp(orig + sign * step[i], lo[i], hi[i]);
        if (cand == orig) continue;
        p[i] = cand;
        Score s = problem.evaluate(part, p);
        if (s < best) {
          best = s;
          orig = cand;
          improved = true;
        } else {
          p[i] = orig;
        }
      }
      p[i] = orig;
    }
    if (!improved) {
      double max_step = 0.0;
      for (int i = 0; i < n; ++i) {
        step[i] *= 0.5;
        max_step = std::max(max_step, step[i]);
      }
      if (max_step < 1e-13) break;
    }
  }
  return best;
}

// Least-squares fit of the recurrence coefficients, roots projected radially
// onto the closed unit disk; used to seed one restart.
bool lls_spectrum(const std::vector<double>& r, int d, bool drop_unit_root,
                  std::vector<std::complex<double>>& roots_out) {
  const int rows = static_cast<int>(r.size()) - d;
  if (rows < 1) return false;
  Eigen::MatrixXd M(rows, d);
  Eigen::VectorXd y(rows);
  for (int row = 0; row < rows; ++row) {
    int h = d + row;  // zero-based target index
    for (int k = 1; k <= d; ++k) M(row, k - 1) = r[h - k];
    y(row) = r[h];
  }
  Eigen::VectorXd c = M.colPivHouseholderQr().solve(y);
  if (!c.allFinite()) return false;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(d, d);
  for (int k = 0; k < d; ++k) comp(0, k) = c(k);
  for (int i = 1; i < d; ++i) comp(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp);
  if (solver.info() != Eigen::Success) return false;
  std::vector<std::complex<double>> roots(solver.eigenvalues().data(),
                                          solver.eigenvalues().data() + d);
  for (auto& z : roots) {
    double m = std::abs(z);
    if (m > 1.0) z /= m;
  }
  if (drop_unit_root) {
    // remove the root closest to 1 (the pinned eigenvalue)
    std::size_t drop = 0;
    double bestdist = std::abs(roots[0] - std::complex<double>(1.0));
    for (std::size_t i = 1; i < roots.size(); ++i) {
      double dist = std::abs(roots[i] - std::complex<double>(1.0));
      if (dist < bestdist) {
        bestdist = dist;
        drop = i;
      }
    }
    roots.erase(roots.begin() + drop);
    // the removed root may have been half of a conjugate pair; repair by
    // flattening the orphan onto the real axis
    Spectrum trial = make_spectrum(roots);
    if (!is_conjugate_closed(trial, 1e-9)) {
      for (auto& z : roots)
        if (std::abs(z.imag()) > 1e-9) {
          bool paired = false;
          for (const auto& w : roots)
            if (&w != &z && std::abs(w - std::conj(z)) <= 1e-9) paired = true;
          if (!paired) z = std::complex<double>(std::abs(z) * (z.real() < 0 ? -1.0 : 1.0), 0.0);
        }
    }
  }
  roots_out = std::move(roots);
  return true;
}

// Classify a conjugate-closed root set into a partition plus parameters.
bool roots_to_params(const std::vector<std::complex<double>>& roots, Partition& part,
                     std::vector<double>& p) {
  std::vector<double> reals;
  std::vector<std::pair<double, double>> pairs;
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    if (std::abs(roots[i].imag()) <= 1e-9) {
      reals.push_back(std::clamp(roots[i].real(), -1.0, 1.0));
      used[i] = true;
      continue;
    }
    bool found = false;
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      if (std::abs(roots[j] - std::conj(roots[i])) <= 1e-7) {
        double rho = std::clamp(std::abs(roots[i]), 0.0, 1.0);
        double theta = std::abs(std::arg(roots[i]));
        theta = std::clamp(theta, kThetaMin, M_PI - kThetaMin);
        pairs.emplace_back(rho, theta);
        used[i] = used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return false;
  }
  part = {static_cast<int>(reals.size()), static_cast<int>(pairs.size())};
  p.clear();
  for (double x : reals) p.push_back(x);
  for (auto [rho, theta] : pairs) {
    p.push_back(rho);
    p.push_back(theta);
  }
  return true;
}

struct Candidate {
  Partition part;
  std::vector<double> start;
};

FitResult run_fit(const RewardProfile& estimates, const FitConfig& config, bool adaptive) {
  const int d = config.d;
  if (d < 1) throw std::invalid_argument("fit: d must be >= 1");
  if (static_cast<int>(estimates.values.size()) != 3 * d)
    throw std::invalid_argument("fit: estimates must have length exactly 3d");
  if (adaptive && config.horizon < 1)
    throw std::invalid_argument("fit_adaptive: horizon required for the objective");

  FitProblem problem;
  problem.estimates = &estimates.values;
  problem.d_total = d;
  problem.adaptive = adaptive;
  problem.residual_cap = config.residual_cap;
  problem.horizon = config.horizon;

  const int free_dim = adaptive ? d - 1 : d;

  if (free_dim == 0) {
    // adaptive d = 1: the spectrum is pinned to (1)
    Partition part{0, 0};
    std::vector<double> p;
    Score s = problem.evaluate(part, p);
    FitResult res;
    res.lambda_hat = params_to_spectrum(part, p, true);
    auto poly = monic_poly(part, p, true);
    res.delta_hat = max_residual(poly_to_recurrence(poly), estimates.values, d);
    res.objective_value = 1.0;
    res.feasible = s.feasible;
    return res;
  }

  std::vector<Candidate> candidates;
  Rng rng(mix_seed(config.seed, 0xf17));
  for (const auto& part : partitions_of(free_dim)) {
    std::vector<double> lo, hi;
    param_bounds(part, lo, hi);
    for (int restart = 0; restart < std::max(1, config.restarts); ++restart) {
      std::vector<double> p(part.dim());
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = rng.uniform(lo[i], hi[i]);
      candidates.push_back({part, std::move(p)});
    }
  }

  std::vector<std::complex<double>> lls_roots;
  if (lls_spectrum(estimates.values, d, adaptive, lls_roots)) {
    Partition part;
    std::vector<double> p;
    if (roots_to_params(lls_roots, part, p)) candidates.push_back({part, std::move(p)});
  }
  for (const auto& inj : config.injected_starts) {
    std::vector<std::complex<double>> roots = inj.values;
    if (static_cast<int>(roots.size()) != d) continue;
    if (adaptive) {
      std::size_t drop = 0;
      double bestdist = std::abs(roots[0] - std::complex<double>(1.0));
      for (std::size_t i = 1; i < roots.size(); ++i) {
        double dist = std::abs(roots[i] - std::complex<double>(1.0));
        if (dist < bestdist) {
          bestdist = dist;
          drop = i;
        }
      }
      roots.erase(roots.begin() + drop);
    }
    Partition part;
    std::vector<double> p;
    if (roots_to_params(roots, part, p)) candidates.push_back({part, std::move(p)});
  }

  struct Outcome {
    Score score;
    Partition part;
    std::vector<double> p;
  };
  std::vector<Outcome> outcomes(candidates.size());
  auto work = [&](std::size_t lo_idx, std::size_t hi_idx) {
    for (std::size_t i = lo_idx; i < hi_idx; ++i) {
      std::vector<double> lo, hi;
      param_bounds(candidates[i].part, lo, hi);
      std::vector<double> p = candidates[i].start;
      Score s = pattern_search(problem, candidates[i].part, p, lo, hi, config.iterations);
      outcomes[i] = {s, candidates[i].part, std::move(p)};
    }
  };
  int threads = std::max(1, config.threads);
  if (threads == 1 || candidates.size() < 2) {
    work(0, candidates.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (candidates.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      std::size_t lo_idx = t * chunk, hi_idx = std::min(candidates.size(), lo_idx + chunk);
      if (lo_idx < hi_idx) pool.emplace_back(work, lo_idx, hi_idx);
    }
    for (auto& th : pool) th.join();
  }

  // deterministic merge: strict improvement only, ties keep the earlier index
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i)
    if (outcomes[i].score < outcomes[best].score) best = i;

  const Outcome& win = outcomes[best];
  FitResult res;
  res.lambda_hat = params_to_spectrum(win.part, win.p, adaptive);
  auto poly = monic_poly(win.part, win.p, adaptive);
  res.delta_hat = max_residual(poly_to_recurrence(poly), estimates.values, d);
  res.feasible = adaptive ? win.score.feasible : true;
  res.objective_value = adaptive && win.score.feasible ? win.score.primary : res.delta_hat;
  if (adaptive && !win.score.feasible) res.objective_value = res.delta_hat;
  return res;
}

}  // namespace

RewardProfile is_reward_estimates(const Dataset& dataset, const Policy& policy, int steps) {
  if (policy.kind != Policy::Kind::deterministic)
    throw std::invalid_argument("is_reward_estimates: policy must be deterministic");
  if (steps < 1 || steps > dataset.horizon)
    throw std::invalid_argument("is_reward_estimates: steps out of range");
  if (dataset.size() < 1) throw std::invalid_argument("is_reward_estimates: empty dataset");
  const double K = dataset.num_actions;
  std::vector<double> sums(steps, 0.0);
  for (const Episode& ep : dataset.episodes) {
    double weight = 1.0;
    for (int h = 0; h < steps; ++h) {
      if (policy.actions[ep.observations[h]] != ep.actions[h]) break;
      weight *= K;
      sums[h] += ep.rewards[h] * weight;
    }
  }
  RewardProfile profile;
  profile.kind = RewardProfile::Kind::estimated;
  profile.values.resize(steps);
  for (int h = 0; h < steps; ++h) profile.values[h] = sums[h] / dataset.size();
  return profile;
}

double is_error_bound(int K, int d, int policy_class_size, double delta, int n) {
  double L = std::log(6.0 * d * policy_class_size / delta);
  double k3d = std::pow(static_cast<double>(K), 3.0 * d);
  return std::sqrt(2.0 * k3d * L / n) + 2.0 * k3d * L / n;
}

double adaptive_residual_cap(int K, int d, int policy_class_size, double delta, int n) {
  double L = std::log(6.0 * d * policy_class_size / delta);
  double k3d = std::pow(static_cast<double>(K), 3.0 * d);
  double stat = std::min(std::sqrt(8.0 * k3d * L / n), 4.0 * k3d * L / n);
  return 2.0 * d * std::pow(4.0, d) * stat;
}

FitResult fit_basic(const RewardProfile& estimates, const FitConfig& config) {
  return run_fit(estimates, config, false);
}

FitResult fit_adaptive(const RewardProfile& estimates, const FitConfig& config) {
  return run_fit(estimates, config, true);
}

ValueEstimate estimate_policy_value(const Dataset& dataset, const Policy& policy,
                                    int d, int H, FitMode mode, const FitConfig& config) {
  if (H < d) throw std::invalid_argument("estimate_policy_value: need H >= d");
  ValueEstimate out;
  if (3 * d + 1 > H) {
    // the recurrence would never be applied; estimate every step directly
    RewardProfile est = is_reward_estimates(dataset, policy, H);
    out.predicted = est;
    out.predicted.kind = RewardProfile::Kind::predicted;
    out.v_tilde = est.value_sum();
    return out;
  }
  // The first reward is drawn at the initial observation, so the order-d
  // recurrence starts one step later; fit and extrapolate on the shifted
  // sequence S_h = R_{h+1} and carry R_1 over directly.
  RewardProfile est = is_reward_estimates(dataset, policy, 3 * d + 1);
  RewardProfile shifted;
  shifted.kind = RewardProfile::Kind::estimated;
  shifted.values.assign(est.values.begin() + 1, est.values.end());
  FitConfig cfg = config;
  cfg.d = d;
  if (mode == FitMode::adaptive) {
    cfg.horizon = H;
    out.fit = fit_adaptive(shifted, cfg);
    if (!out.fit.feasible) {
      out.fit = fit_basic(shifted, cfg);
      out.adaptive_fallback = true;
    }
  } else {
    out.fit = fit_basic(shifted, cfg);
  }
  std::vector<double> seeds(shifted.values.begin(), shifted.values.begin() + d);
  RewardProfile tail = extrapolate(out.fit.lambda_hat, seeds, H - 1);
  out.predicted.kind = RewardProfile::Kind::predicted;
  out.predicted.values.clear();
  out.predicted.values.push_back(est.values[0]);
  out.predicted.values.insert(out.predicted.values.end(), tail.values.begin(),
                              tail.values.end());
  out.v_tilde = out.predicted.value_sum();
  return out;
}

SearchReport policy_search(const Dataset& dataset, const PolicyClass& pi_class,
                           int d, int H, FitMode mode, const FitConfig& config) {
  if (pi_class.size() < 1) throw std::invalid_argument("policy_search: empty policy class");
  auto t0 = std::chrono::steady_clock::now();
  SearchReport report;
  report.dataset_seed = dataset.seed;
  report.rank_d = d;
  report.estimates.resize(pi_class.size());

  auto work = [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i) {
      ValueEstimate ve = estimate_policy_value(dataset, pi_class.policies[i], d, H, mode, config);
      report.estimates[i] = {i, ve.v_tilde, ve.fit, ve.predicted, ve.adaptive_fallback};
    }
  };
  int threads = std::max(1, config.threads);
  if (threads == 1 || pi_class.size() < 2) {
    work(0, pi_class.size());
  } else {
    std::vector<std::thread> pool;
    int chunk = (pi_class.size() + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int lo = t * chunk, hi = std::min(pi_class.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(work, lo, hi);
    }
    for (auto& th : pool) th.join();
  }

  int best = 0;
  for (int i = 1; i < pi_class.size(); ++i)
    if (report.estimates[i].v_tilde > report.estimates[best].v_tilde) best = i;
  report.chosen_policy_index = best;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

double monte_carlo_value(const TabularMdp& mdp, const Policy& policy, int m,
                         std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("monte_carlo_value: m must be >= 1");
  double total = 0.0;
  for (int t = 0; t < m; ++t) {
    Episode ep = sample_episode(mdp, policy, mix_seed(seed, t));
    for (double r : ep.rewards) total += r;
  }
  return total / m;
}

SearchReport rank_adaptive_search(const TabularMdp& mdp, const PolicyClass& pi_class,
                                  int H, int n, const FitConfig& config,
                                  std::uint64_t seed) {
  if (n < 4 * H)
    throw std::invalid_argument("rank_adaptive_search: n < 4H leaves no evaluation budget");
  auto t0 = std::chrono::steady_clock::now();
  Dataset shared = sample_uniform_dataset(mdp, n / 2, mix_seed(seed, 1),
                                          std::max(1, config.threads));
  const int m_eval = n / (2 * H);

  int best_d = 1;
  double best_value = 0.0;
  SearchReport best_report;
  for (int d = 1; d <= H; ++d) {
    FitConfig cfg = config;
    cfg.seed = mix_seed(config.seed, 0xd0 + d);
    SearchReport rep = policy_search(shared, pi_class, d, H, FitMode::basic, cfg);
    double value = monte_carlo_value(mdp, pi_class.policies[rep.chosen_policy_index],
                                     m_eval, mix_seed(seed, 0xe7a1 + d));
    if (d == 1 || value > best_value) {
      best_value = value;
      best_d = d;
      best_report = std::move(rep);
    }
  }
  best_report.rank_d = best_d;
  best_report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return best_report;
}

}  // namespace lrps
