// Command-line front end: instance generation, dataset collection, policy
// search, lock validation, and config-driven experiment runs.

#include <CLI11.hpp>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "lrps/estimator.hpp"
#include "lrps/io.hpp"
#include "lrps/lockenv.hpp"
#include "lrps/mdp.hpp"
#include "lrps/rng.hpp"

namespace {

std::uint64_t default_seed() {
  const char* env = std::getenv("LRPS_SEED");
  if (env == nullptr) return 0;
  return std::strtoull(env, nullptr, 10);
}

lrps::FitMode parse_mode(const std::string& mode) {
  if (mode == "basic") return lrps::FitMode::basic;
  if (mode == "adaptive") return lrps::FitMode::adaptive;
  throw CLI::ValidationError("mode", "expected basic or adaptive, got '" + mode + "'");
}

std::string spectrum_string(const lrps::Spectrum& s) {
  std::string out;
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    if (k > 0) out += ";";
    out += lrps::format_double(s.values[k].real()) + "," +
           lrps::format_double(s.values[k].imag());
  }
  return out.empty() ? "none" : out;
}

void describe_policy(const lrps::TabularMdp& mdp, const lrps::Policy& policy, int index) {
  auto spec = lrps::spectrum_of(lrps::induced_transition(mdp, policy));
  std::cout << "policy=" << index << " rank=" << spec.numerical_rank
            << " exact_value=" << lrps::format_double(lrps::exact_value(mdp, policy))
            << " spectrum=" << spectrum_string(lrps::truncate_spectrum(
                   spec.spectrum, std::min<int>(spec.numerical_rank + 1,
                                                static_cast<int>(spec.spectrum.values.size()))))
            << "\n";
}

struct LockOutputs {
  lrps::LockParams params;
  lrps::LatentMap map;
  lrps::PolicyClass policies;
  lrps::TabularMdp mdp;  // pi_star is policies[0]
};

LockOutputs make_lock(int d, int H, int cells, double epsilon, double progress,
                      int class_size, std::uint64_t seed) {
  LockOutputs out;
  out.params.d = d;
  out.params.H = H;
  out.params.cells_per_state = cells;
  out.params.epsilon = epsilon;
  out.params.progress_probs.assign(d - 1, progress);
  out.params.validate();
  out.map = lrps::random_latent_map(out.params, lrps::mix_seed(seed, 1));
  out.policies = lrps::gv_policy_class(out.params.num_observations(), class_size,
                                       lrps::mix_seed(seed, 2));
  out.mdp = lrps::build_lock_mdp(out.policies.policies[0], out.map, out.params);
  return out;
}

// One experiment repetition; returns the result record line.
struct RunSettings {
  std::map<std::string, std::string> config;
  std::string env_kind;
  std::string mode;
  int n = 0;
  int reps = 1;
  double delta = 0.1;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output;
};

std::string get_or(const std::map<std::string, std::string>& cfg, const std::string& key,
                   const std::string& fallback) {
  auto it = cfg.find(key);
  return it == cfg.end() ? fallback : it->second;
}

std::string require(const std::map<std::string, std::string>& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw std::runtime_error("config: missing required key '" + key + "'");
  return it->second;
}

std::string run_one(const RunSettings& rs, int rep, const lrps::TabularMdp* file_mdp,
                    const lrps::PolicyClass* file_policies) {
  const auto& cfg = rs.config;
  std::uint64_t rep_seed = lrps::mix_seed(rs.seed, rep);

  lrps::TabularMdp mdp;
  lrps::PolicyClass pc;
  int d = std::stoi(require(cfg, "env.d"));
  int H = std::stoi(require(cfg, "env.horizon"));
  if (rs.env_kind == "lowrank") {
    int obs = std::stoi(require(cfg, "env.obs"));
    int actions = std::stoi(require(cfg, "env.actions"));
    int class_size = std::stoi(require(cfg, "search.policies"));
    mdp = lrps::random_low_rank_mdp(obs, actions, H, d, lrps::mix_seed(rep_seed, 1));
    pc = lrps::random_policy_class(obs, actions, class_size, lrps::mix_seed(rep_seed, 2));
  } else if (rs.env_kind == "lock") {
    auto lock = make_lock(d, H, std::stoi(get_or(cfg, "env.cells_per_state", "8")),
                          std::stod(get_or(cfg, "env.epsilon", "0.1")),
                          std::stod(get_or(cfg, "env.progress_prob", "0.5")),
                          std::stoi(require(cfg, "search.policies")), rep_seed);
    mdp = std::move(lock.mdp);
    pc = std::move(lock.policies);
  } else {
    mdp = *file_mdp;
    pc = *file_policies;
  }

  lrps::FitConfig fit;
  fit.d = d;
  fit.seed = lrps::mix_seed(rep_seed, 4);
  fit.horizon = H;
  fit.threads = 1;  // repetitions are already parallel
  if (cfg.count("search.restarts")) fit.restarts = std::stoi(cfg.at("search.restarts"));
  if (cfg.count("search.iterations")) fit.iterations = std::stoi(cfg.at("search.iterations"));

  lrps::SearchReport report;
  if (rs.mode == "rank_adaptive") {
    report = lrps::rank_adaptive_search(mdp, pc, H, rs.n, fit, lrps::mix_seed(rep_seed, 3));
  } else {
    lrps::Dataset ds = lrps::sample_uniform_dataset(mdp, rs.n, lrps::mix_seed(rep_seed, 3));
    if (rs.mode == "adaptive")
      fit.residual_cap =
          lrps::adaptive_residual_cap(mdp.num_actions, d, pc.size(), rs.delta, rs.n);
    report = lrps::policy_search(ds, pc, d, H, parse_mode(rs.mode), fit);
  }

  std::vector<double> exact(pc.size());
  double v_best = 0.0;
  for (int i = 0; i < pc.size(); ++i) {
    exact[i] = lrps::exact_value(mdp, pc.policies[i]);
    v_best = std::max(v_best, exact[i]);
  }
  double max_err = 0.0, sum_err = 0.0;
  int fallbacks = 0;
  for (const auto& est : report.estimates) {
    double err = std::abs(est.v_tilde - exact[est.policy_index]);
    max_err = std::max(max_err, err);
    sum_err += err;
    if (est.adaptive_fallback) ++fallbacks;
  }
  int chosen = report.chosen_policy_index;
  double v_tilde = report.estimates.empty() ? 0.0 : report.estimates[chosen].v_tilde;
  if (rs.mode == "rank_adaptive") {
    // rank-adaptive reports carry only the winning candidate's estimate
    for (const auto& est : report.estimates)
      if (est.policy_index == chosen) v_tilde = est.v_tilde;
  }

  std::ostringstream line;
  line << "record=result rep=" << rep << " seed=" << rep_seed << " chosen=" << chosen
       << " v_tilde=" << lrps::format_double(v_tilde)
       << " v_exact=" << lrps::format_double(exact[chosen])
       << " v_best=" << lrps::format_double(v_best)
       << " suboptimality=" << lrps::format_double(v_best - exact[chosen])
       << " max_est_error=" << lrps::format_double(max_err)
       << " mean_est_error=" << lrps::format_double(sum_err / std::max(1, pc.size()))
       << " adaptive_fallbacks=" << fallbacks;
  if (rs.mode == "rank_adaptive") line << " rank_d=" << report.rank_d;
  line << " wall_clock_seconds=" << lrps::format_double(report.wall_clock_seconds) << "\n";
  return line.str();
}

int run_experiment(const std::string& config_path, const std::string& output_override,
                   int threads) {
  RunSettings rs;
  rs.config = lrps::load_config(config_path);
  rs.env_kind = require(rs.config, "env.kind");
  rs.mode = get_or(rs.config, "search.mode", "basic");
  rs.n = std::stoi(require(rs.config, "search.n"));
  rs.reps = std::stoi(get_or(rs.config, "search.repetitions", "1"));
  rs.delta = std::stod(get_or(rs.config, "search.delta", "0.1"));
  rs.seed = rs.config.count("search.seed")
                ? std::strtoull(rs.config.at("search.seed").c_str(), nullptr, 10)
                : default_seed();
  rs.output = output_override.empty() ? get_or(rs.config, "search.output", "") : output_override;
  rs.threads = std::max(1, threads);
  if (rs.env_kind != "lowrank" && rs.env_kind != "lock" && rs.env_kind != "file")
    throw std::runtime_error("config: env.kind must be lowrank, lock, or file");

  lrps::TabularMdp file_mdp;
  lrps::PolicyClass file_policies;
  if (rs.env_kind == "file") {
    file_mdp = lrps::load_mdp(require(rs.config, "env.mdp_path"));
    file_policies = lrps::load_policy_class(require(rs.config, "env.policies_path"));
  }

  std::vector<std::string> records(rs.reps);
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      int rep = next.fetch_add(1);
      if (rep >= rs.reps) return;
      records[rep] = run_one(rs, rep, &file_mdp, &file_policies);
    }
  };
  if (rs.threads > 1 && rs.reps > 1) {
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(rs.threads, rs.reps); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  } else {
    worker();
  }

  std::ostringstream body;
  for (const auto& [key, value] : rs.config) body << "config " << key << "=" << value << "\n";
  body << "config resolved.seed=" << rs.seed << "\n";
  for (const auto& rec : records) body << rec;

  std::cout << body.str();
  if (!rs.output.empty()) {
    std::ofstream out(rs.output);
    if (!out) throw std::runtime_error("cannot open for writing: " + rs.output);
    out << body.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy search in low-rank episodic MDPs"};
  app.require_subcommand(1);

  try {
    // gen-env
    auto* gen = app.add_subcommand("gen-env", "Generate a random low-rank MDP");
    int g_obs = 10, g_actions = 2, g_horizon = 20, g_d = 2;
    std::uint64_t g_seed = default_seed();
    std::string g_noise = "deterministic", g_out;
    gen->add_option("--obs", g_obs, "Observations");
    gen->add_option("--actions", g_actions, "Actions");
    gen->add_option("--horizon", g_horizon, "Horizon");
    gen->add_option("-d,--rank", g_d, "Rank bound");
    gen->add_option("--seed", g_seed, "Seed");
    gen->add_option("--noise", g_noise, "Reward noise: deterministic|bernoulli");
    gen->add_option("-o,--out", g_out, "Output MDP file")->required();
    gen->callback([&]() {
      auto noise = g_noise == "bernoulli" ? lrps::RewardNoise::bernoulli
                                          : lrps::RewardNoise::deterministic;
      lrps::save_mdp(lrps::random_low_rank_mdp(g_obs, g_actions, g_horizon, g_d, g_seed, noise),
                     g_out);
      std::cout << "wrote " << g_out << "\n";
    });

    // lock-build
    auto* lb = app.add_subcommand("lock-build", "Generate a combination-lock instance");
    int l_d = 2, l_horizon = 8, l_cells = 8, l_policies = 8;
    double l_epsilon = 0.1, l_progress = 0.5;
    std::uint64_t l_seed = default_seed();
    std::string l_mdp, l_sidecar, l_class;
    lb->add_option("-d,--depth", l_d, "Lock depth");
    lb->add_option("--horizon", l_horizon, "Horizon");
    lb->add_option("--cells", l_cells, "Observations per latent state");
    lb->add_option("--epsilon", l_epsilon, "Goal bias");
    lb->add_option("--progress", l_progress, "Progress probability");
    lb->add_option("--policies", l_policies, "Policy class size");
    lb->add_option("--seed", l_seed, "Seed");
    lb->add_option("--out-mdp", l_mdp, "Output MDP file")->required();
    lb->add_option("--out-sidecar", l_sidecar, "Output latent-map file")->required();
    lb->add_option("--out-policies", l_class, "Output policy class file")->required();
    lb->callback([&]() {
      auto lock = make_lock(l_d, l_horizon, l_cells, l_epsilon, l_progress, l_policies, l_seed);
      lrps::save_mdp(lock.mdp, l_mdp);
      lrps::save_lock_sidecar(lock.params, lock.map, l_sidecar);
      lrps::save_policy_class(lock.policies, l_class);
      std::cout << "wrote " << l_mdp << " " << l_sidecar << " " << l_class
                << " (pi_star is policy 0)\n";
    });

    // describe
    auto* desc = app.add_subcommand("describe", "Report spectra and exact values");
    std::string de_env, de_policies, de_sidecar;
    int de_star = 0;
    desc->add_option("--env", de_env, "MDP file")->required();
    desc->add_option("--policies", de_policies, "Policy class file");
    desc->add_option("--lock-sidecar", de_sidecar, "Lock latent-map file");
    desc->add_option("--star-index", de_star, "Index of pi_star in the class");
    desc->callback([&]() {
      lrps::TabularMdp mdp = lrps::load_mdp(de_env);
      std::cout << "observations=" << mdp.num_observations << " actions=" << mdp.num_actions
                << " horizon=" << mdp.horizon << "\n";
      lrps::PolicyClass pc;
      if (de_policies.empty())
        pc.policies = {lrps::Policy::uniform(mdp.num_observations, mdp.num_actions)};
      else
        pc = lrps::load_policy_class(de_policies);
      for (int i = 0; i < pc.size(); ++i) describe_policy(mdp, pc.policies[i], i);
      if (!de_sidecar.empty()) {
        lrps::LockParams params;
        lrps::LatentMap map;
        lrps::load_lock_sidecar(de_sidecar, params, map);
        for (int i = 0; i < pc.size(); ++i) {
          auto rep = lrps::verify_lock_spectrum(mdp, pc.policies[i],
                                                pc.policies[de_star], map, params);
          std::cout << "lock_spectrum policy=" << i << " pass=" << (rep.pass ? 1 : 0)
                    << " max_error=" << lrps::format_double(rep.max_eigenvalue_error)
                    << " rank=" << rep.numerical_rank << " bound=" << rep.rank_bound << "\n";
        }
      }
    });

    // collect
    auto* col = app.add_subcommand("collect", "Sample a uniform-logging dataset");
    std::string c_env, c_out;
    int c_n = 1000, c_threads = 1;
    std::uint64_t c_seed = default_seed();
    col->add_option("--env", c_env, "MDP file")->required();
    col->add_option("-n,--episodes", c_n, "Episode count");
    col->add_option("--seed", c_seed, "Seed");
    col->add_option("--threads", c_threads, "Worker threads");
    col->add_option("-o,--out", c_out, "Output dataset file")->required();
    col->callback([&]() {
      lrps::TabularMdp mdp = lrps::load_mdp(c_env);
      lrps::save_dataset(lrps::sample_uniform_dataset(mdp, c_n, c_seed, c_threads), c_out);
      std::cout << "wrote " << c_out << "\n";
    });

    // estimate
    auto* est = app.add_subcommand("estimate", "Estimate one policy's value from a dataset");
    std::string e_dataset, e_policies, e_mode = "basic", e_selfcheck_env;
    int e_index = 0, e_d = 1, e_horizon = 0, e_threads = 1;
    double e_delta = 0.1;
    std::uint64_t e_seed = default_seed();
    est->add_option("--dataset", e_dataset, "Dataset file")->required();
    est->add_option("--policies", e_policies, "Policy class file")->required();
    est->add_option("--index", e_index, "Policy index");
    est->add_option("-d,--rank", e_d, "Assumed rank");
    est->add_option("--horizon", e_horizon, "Horizon (default: dataset horizon)");
    est->add_option("--mode", e_mode, "basic|adaptive");
    est->add_option("--delta", e_delta, "Confidence parameter for the adaptive cap");
    est->add_option("--seed", e_seed, "Fit seed");
    est->add_option("--threads", e_threads, "Worker threads");
    est->add_option("--selfcheck-env", e_selfcheck_env,
                    "MDP file; re-collects the dataset in-process and verifies bitwise");
    est->callback([&]() {
      lrps::Dataset ds = lrps::load_dataset(e_dataset);
      lrps::PolicyClass pc = lrps::load_policy_class(e_policies);
      if (e_index < 0 || e_index >= pc.size())
        throw std::runtime_error("estimate: policy index out of range");
      int H = e_horizon > 0 ? e_horizon : ds.horizon;
      lrps::FitConfig cfg;
      cfg.d = e_d;
      cfg.seed = e_seed;
      cfg.horizon = H;
      cfg.threads = e_threads;
      if (e_mode == "adaptive")
        cfg.residual_cap =
            lrps::adaptive_residual_cap(ds.num_actions, e_d, pc.size(), e_delta, ds.size());
      auto ve = lrps::estimate_policy_value(ds, pc.policies[e_index], e_d, H,
                                            parse_mode(e_mode), cfg);
      if (!e_selfcheck_env.empty()) {
        lrps::TabularMdp mdp = lrps::load_mdp(e_selfcheck_env);
        lrps::Dataset fresh = lrps::sample_uniform_dataset(mdp, ds.size(), ds.seed);
        for (int t = 0; t < ds.size(); ++t)
          if (fresh.episodes[t].observations != ds.episodes[t].observations ||
              fresh.episodes[t].actions != ds.episodes[t].actions ||
              fresh.episodes[t].rewards != ds.episodes[t].rewards)
            throw std::runtime_error("selfcheck: stored dataset diverges from in-process run");
        auto ve2 = lrps::estimate_policy_value(fresh, pc.policies[e_index], e_d, H,
                                               parse_mode(e_mode), cfg);
        if (ve2.v_tilde != ve.v_tilde)
          throw std::runtime_error("selfcheck: estimate diverges from in-process run");
        std::cout << "selfcheck=pass\n";
      }
      std::cout << "policy_index=" << e_index << " v_tilde=" << lrps::format_double(ve.v_tilde)
                << " delta_hat=" << lrps::format_double(ve.fit.delta_hat)
                << " feasible=" << (ve.fit.feasible ? 1 : 0)
                << " adaptive_fallback=" << (ve.adaptive_fallback ? 1 : 0) << "\n";
    });

    // search
    auto* sea = app.add_subcommand("search", "Run policy search over a class");
    std::string s_dataset, s_policies, s_mode = "basic", s_out;
    int s_d = 1, s_horizon = 0, s_threads = 1;
    double s_delta = 0.1;
    std::uint64_t s_seed = default_seed();
    sea->add_option("--dataset", s_dataset, "Dataset file")->required();
    sea->add_option("--policies", s_policies, "Policy class file")->required();
    sea->add_option("-d,--rank", s_d, "Assumed rank");
    sea->add_option("--horizon", s_horizon, "Horizon (default: dataset horizon)");
    sea->add_option("--mode", s_mode, "basic|adaptive");
    sea->add_option("--delta", s_delta, "Confidence parameter for the adaptive cap");
    sea->add_option("--seed", s_seed, "Fit seed");
    sea->add_option("--threads", s_threads, "Worker threads");
    sea->add_option("-o,--out", s_out, "Output report file");
    sea->callback([&]() {
      lrps::Dataset ds = lrps::load_dataset(s_dataset);
      lrps::PolicyClass pc = lrps::load_policy_class(s_policies);
      int H = s_horizon > 0 ? s_horizon : ds.horizon;
      lrps::FitConfig cfg;
      cfg.d = s_d;
      cfg.seed = s_seed;
      cfg.horizon = H;
      cfg.threads = s_threads;
      if (s_mode == "adaptive")
        cfg.residual_cap =
            lrps::adaptive_residual_cap(ds.num_actions, s_d, pc.size(), s_delta, ds.size());
      auto report = lrps::policy_search(ds, pc, s_d, H, parse_mode(s_mode), cfg);
      lrps::write_search_report(report, std::cout);
      if (!s_out.empty()) lrps::save_search_report(report, s_out);
    });

    // lock-verify
    auto* lv = app.add_subcommand("lock-verify", "Check lock spectra and the gap identity");
    std::string v_env, v_sidecar, v_policies;
    int v_star = 0;
    lv->add_option("--env", v_env, "MDP file")->required();
    lv->add_option("--sidecar", v_sidecar, "Latent-map file")->required();
    lv->add_option("--policies", v_policies, "Policy class file")->required();
    lv->add_option("--star-index", v_star, "Index of pi_star in the class");
    lv->callback([&]() {
      lrps::TabularMdp mdp = lrps::load_mdp(v_env);
      lrps::LockParams params;
      lrps::LatentMap map;
      lrps::load_lock_sidecar(v_sidecar, params, map);
      lrps::PolicyClass pc = lrps::load_policy_class(v_policies);
      if (v_star < 0 || v_star >= pc.size())
        throw std::runtime_error("lock-verify: star index out of range");
      const lrps::Policy& star = pc.policies[v_star];
      bool all_pass = true;
      for (int i = 0; i < pc.size(); ++i) {
        auto rep = lrps::verify_lock_spectrum(mdp, pc.policies[i], star, map, params);
        auto gap = lrps::suboptimality_gap(mdp, pc.policies[i], star, map, params);
        bool gap_ok = std::abs(gap.difference) <= 1e-8;
        all_pass = all_pass && rep.pass && gap_ok;
        std::cout << "policy=" << i << " spectrum_pass=" << (rep.pass ? 1 : 0)
                  << " max_error=" << lrps::format_double(rep.max_eigenvalue_error)
                  << " rank=" << rep.numerical_rank << " bound=" << rep.rank_bound
                  << " gap=" << lrps::format_double(gap.dp_gap)
                  << " gap_identity_pass=" << (gap_ok ? 1 : 0) << "\n";
      }
      if (!all_pass) throw std::runtime_error("lock-verify: checks failed");
    });

    // run
    auto* run = app.add_subcommand("run", "Run a config-driven experiment");
    std::string r_config, r_out;
    int r_threads = 1;
    run->add_option("--config", r_config, "Config file")->required();
    run->add_option("-o,--out", r_out, "Output records file (overrides config)");
    run->add_option("--threads", r_threads, "Concurrent repetitions");
    run->callback([&]() { run_experiment(r_config, r_out, r_threads); });

    CLI11_PARSE(app, argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
