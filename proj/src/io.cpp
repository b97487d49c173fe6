#include "lrps/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lrps {

namespace {

[[noreturn]] void fail(const std::string& context, int line, const std::string& message) {
  std::ostringstream oss;
  oss << context << ":" << line << ": " << message;
  throw std::runtime_error(oss.str());
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

struct LineReader {
  std::istream& in;
  std::string context;
  int line_no = 0;

  std::string next_line() {
    std::string line;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      return line;
    }
    fail(context, line_no, "unexpected end of file");
  }

  std::istringstream expect_keyword(const std::string& keyword) {
    std::string line = next_line();
    std::istringstream iss(line);
    std::string word;
    iss >> word;
    if (word != keyword) fail(context, line_no, "expected '" + keyword + "', got '" + word + "'");
    return iss;
  }
};

void read_doubles(LineReader& reader, double* out, long count) {
  long got = 0;
  while (got < count) {
    std::istringstream iss(reader.next_line());
    double v;
    while (iss >> v) {
      if (got >= count) fail(reader.context, reader.line_no, "too many numbers");
      out[got++] = v;
    }
  }
}

}  // namespace

std::string format_double(double v) {
  std::ostringstream oss;
  oss.precision(17);
  oss << v;
  return oss.str();
}

void write_mdp(const TabularMdp& mdp, std::ostream& out) {
  const int X = mdp.num_observations, K = mdp.num_actions;
  out << "mdp v1\n";
  out << "num_observations " << X << "\n";
  out << "num_actions " << K << "\n";
  out << "horizon " << mdp.horizon << "\n";
  out << "reward_noise "
      << (mdp.reward_noise == RewardNoise::deterministic ? "deterministic" : "bernoulli")
      << "\n";
  out << "transition\n";
  // row-major over (next_obs, obs, action)
  for (int next = 0; next < X; ++next) {
    for (int x = 0; x < X; ++x) {
      for (int a = 0; a < K; ++a) {
        out << format_double(mdp.transition[a](next, x));
        out << (a + 1 == K ? "\n" : " ");
      }
    }
  }
  out << "reward_mean\n";
  for (int x = 0; x < X; ++x) {
    for (int a = 0; a < K; ++a)
      out << format_double(mdp.reward_mean(x, a)) << (a + 1 == K ? "\n" : " ");
  }
  out << "initial_dist\n";
  for (int x = 0; x < X; ++x)
    out << format_double(mdp.initial_dist(x)) << (x + 1 == X ? "\n" : " ");
}

TabularMdp read_mdp(std::istream& in, const std::string& context) {
  LineReader reader{in, context};
  reader.expect_keyword("mdp");
  TabularMdp mdp;
  reader.expect_keyword("num_observations") >> mdp.num_observations;
  reader.expect_keyword("num_actions") >> mdp.num_actions;
  reader.expect_keyword("horizon") >> mdp.horizon;
  std::string noise;
  reader.expect_keyword("reward_noise") >> noise;
  if (noise == "deterministic")
    mdp.reward_noise = RewardNoise::deterministic;
  else if (noise == "bernoulli")
    mdp.reward_noise = RewardNoise::bernoulli;
  else
    fail(context, reader.line_no, "unknown reward_noise '" + noise + "'");
  const int X = mdp.num_observations, K = mdp.num_actions;
  if (X < 1 || K < 1 || mdp.horizon < 1) fail(context, reader.line_no, "bad dimensions");

  reader.expect_keyword("transition");
  std::vector<double> flat(static_cast<long>(X) * X * K);
  read_doubles(reader, flat.data(), static_cast<long>(flat.size()));
  mdp.transition.assign(K, Eigen::MatrixXd::Zero(X, X));
  for (int next = 0; next < X; ++next)
    for (int x = 0; x < X; ++x)
      for (int a = 0; a < K; ++a)
        mdp.transition[a](next, x) = flat[(static_cast<long>(next) * X + x) * K + a];

  reader.expect_keyword("reward_mean");
  std::vector<double> rewards(static_cast<long>(X) * K);
  read_doubles(reader, rewards.data(), static_cast<long>(rewards.size()));
  mdp.reward_mean.resize(X, K);
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < K; ++a) mdp.reward_mean(x, a) = rewards[static_cast<long>(x) * K + a];

  reader.expect_keyword("initial_dist");
  mdp.initial_dist.resize(X);
  read_doubles(reader, mdp.initial_dist.data(), X);

  try {
    mdp.validate();
  } catch (const std::exception& e) {
    throw std::runtime_error(context + ": " + e.what());
  }
  return mdp;
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  auto out = open_out(path);
  write_mdp(mdp, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

TabularMdp load_mdp(const std::string& path) {
  auto in = open_in(path);
  return read_mdp(in, path);
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  auto out = open_out(path);
  out << dataset.horizon << " " << dataset.num_actions << " " << dataset.size() << " "
      << dataset.seed << "\n";
  for (int t = 0; t < dataset.size(); ++t) {
    const Episode& ep = dataset.episodes[t];
    for (int h = 0; h < dataset.horizon; ++h)
      out << t << " " << h + 1 << " " << ep.observations[h] << " " << ep.actions[h] << " "
          << format_double(ep.rewards[h]) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  auto in = open_in(path);
  LineReader reader{in, path};
  Dataset ds;
  long n = 0;
  {
    std::istringstream iss(reader.next_line());
    if (!(iss >> ds.horizon >> ds.num_actions >> n >> ds.seed))
      fail(path, reader.line_no, "bad dataset header, expected 'H K n seed'");
  }
  if (ds.horizon < 1 || ds.num_actions < 1 || n < 1)
    fail(path, reader.line_no, "bad dataset header values");
  ds.episodes.assign(n, Episode{});
  for (auto& ep : ds.episodes) {
    ep.observations.resize(ds.horizon);
    ep.actions.resize(ds.horizon);
    ep.rewards.resize(ds.horizon);
  }
  for (long row = 0; row < n * ds.horizon; ++row) {
    std::istringstream iss(reader.next_line());
    long t;
    int h, obs, action;
    double reward;
    if (!(iss >> t >> h >> obs >> action >> reward))
      fail(path, reader.line_no, "bad dataset row");
    if (t < 0 || t >= n || h < 1 || h > ds.horizon)
      fail(path, reader.line_no, "dataset row out of range");
    Episode& ep = ds.episodes[t];
    ep.observations[h - 1] = obs;
    ep.actions[h - 1] = action;
    ep.rewards[h - 1] = reward;
  }
  return ds;
}

void save_policy_class(const PolicyClass& pi_class, const std::string& path) {
  auto out = open_out(path);
  int num_obs =
      pi_class.size() > 0 ? static_cast<int>(pi_class.policies[0].actions.size()) : 0;
  out << "policies " << pi_class.size() << " " << num_obs << "\n";
  for (const Policy& p : pi_class.policies) {
    if (p.kind != Policy::Kind::deterministic)
      throw std::runtime_error("save_policy_class: only deterministic policies serialize");
    for (std::size_t i = 0; i < p.actions.size(); ++i)
      out << p.actions[i] << (i + 1 == p.actions.size() ? "\n" : " ");
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PolicyClass load_policy_class(const std::string& path) {
  auto in = open_in(path);
  LineReader reader{in, path};
  int count = 0, num_obs = 0;
  reader.expect_keyword("policies") >> count >> num_obs;
  if (count < 1 || num_obs < 1) fail(path, reader.line_no, "bad policy class header");
  PolicyClass pc;
  for (int i = 0; i < count; ++i) {
    std::istringstream iss(reader.next_line());
    std::vector<int> actions(num_obs);
    for (int j = 0; j < num_obs; ++j)
      if (!(iss >> actions[j])) fail(path, reader.line_no, "bad policy row");
    pc.policies.push_back(Policy::make_deterministic(std::move(actions)));
  }
  return pc;
}

std::string latent_label(const LatentMap& phi, int latent) {
  if (latent == phi.plus()) return "+";
  if (latent == phi.minus()) return "-";
  int d = phi.d;
  if (latent < d) return std::to_string(latent + 1) + "g";
  return std::to_string(latent - d + 1) + "b";
}

void save_lock_sidecar(const LockParams& params, const LatentMap& phi,
                       const std::string& path) {
  auto out = open_out(path);
  out << "lock v1\n";
  out << "d " << params.d << "\n";
  out << "H " << params.H << "\n";
  out << "cells_per_state " << params.cells_per_state << "\n";
  out << "epsilon " << format_double(params.epsilon) << "\n";
  out << "progress_probs";
  for (double p : params.progress_probs) out << " " << format_double(p);
  out << "\n";
  out << "phi\n";
  for (std::size_t obs = 0; obs < phi.phi.size(); ++obs)
    out << obs << " " << latent_label(phi, phi.phi[obs]) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

void load_lock_sidecar(const std::string& path, LockParams& params, LatentMap& phi) {
  auto in = open_in(path);
  LineReader reader{in, path};
  reader.expect_keyword("lock");
  reader.expect_keyword("d") >> params.d;
  reader.expect_keyword("H") >> params.H;
  reader.expect_keyword("cells_per_state") >> params.cells_per_state;
  reader.expect_keyword("epsilon") >> params.epsilon;
  {
    auto iss = reader.expect_keyword("progress_probs");
    params.progress_probs.clear();
    double p;
    while (iss >> p) params.progress_probs.push_back(p);
  }
  params.validate();
  reader.expect_keyword("phi");
  const int N = params.num_observations();
  phi.d = params.d;
  phi.cells_per_state = params.cells_per_state;
  phi.phi.assign(N, -1);
  phi.cells.assign(params.num_latent(), {});
  for (int row = 0; row < N; ++row) {
    std::istringstream iss(reader.next_line());
    int obs;
    std::string label;
    if (!(iss >> obs >> label) || obs < 0 || obs >= N)
      fail(path, reader.line_no, "bad phi row");
    int latent;
    if (label == "+") {
      latent = phi.plus();
    } else if (label == "-") {
      latent = phi.minus();
    } else {
      char track = label.back();
      int level = std::stoi(label.substr(0, label.size() - 1));
      if (level < 1 || level > params.d || (track != 'g' && track != 'b'))
        fail(path, reader.line_no, "bad latent label '" + label + "'");
      latent = track == 'g' ? phi.good(level) : phi.bad(level);
    }
    phi.phi[obs] = latent;
    phi.cells[latent].push_back(obs);
  }
  for (auto& cell : phi.cells) std::sort(cell.begin(), cell.end());
  phi.validate();
}

void write_search_report(const SearchReport& report, std::ostream& out) {
  for (const PolicyEstimate& est : report.estimates) {
    out << "record=policy policy_index=" << est.policy_index
        << " v_tilde=" << format_double(est.v_tilde)
        << " delta_hat=" << format_double(est.fit.delta_hat) << " lambda_hat=";
    const auto& vals = est.fit.lambda_hat.values;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      out << format_double(std::abs(vals[k])) << "," << format_double(std::arg(vals[k]));
      if (k + 1 < vals.size()) out << ";";
    }
    if (vals.empty()) out << "none";
    if (est.adaptive_fallback) out << " adaptive_fallback=1";
    out << "\n";
  }
  out << "record=final chosen_policy_index=" << report.chosen_policy_index
      << " rank_d=" << report.rank_d << " dataset_seed=" << report.dataset_seed
      << " wall_clock_seconds=" << format_double(report.wall_clock_seconds) << "\n";
}

void save_search_report(const SearchReport& report, const std::string& path) {
  auto out = open_out(path);
  write_search_report(report, out);
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                     const std::string& context) {
  std::map<std::string, std::string> config;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string trimmed = line;
    auto strip = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t");
      if (a == std::string::npos) return std::string();
      std::size_t b = s.find_last_not_of(" \t");
      return s.substr(a, b - a + 1);
    };
    trimmed = strip(trimmed);
    if (trimmed.empty() || trimmed[0] == '#') continue;
    if (trimmed.front() == '[' && trimmed.back() == ']') {
      section = strip(trimmed.substr(1, trimmed.size() - 2));
      continue;
    }
    std::size_t eq = trimmed.find('=');
    if (eq == std::string::npos) fail(context, line_no, "expected 'key = value'");
    std::string key = strip(trimmed.substr(0, eq));
    std::string value = strip(trimmed.substr(eq + 1));
    if (key.empty()) fail(context, line_no, "empty key");
    config[section.empty() ? key : section + "." + key] = value;
  }
  return config;
}

std::map<std::string, std::string> load_config(const std::string& path) {
  auto in = open_in(path);
  return parse_config_text(in, path);
}

}  // namespace lrps
