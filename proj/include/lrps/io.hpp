#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lrps/estimator.hpp"
#include "lrps/lockenv.hpp"
#include "lrps/mdp.hpp"

namespace lrps {

// All loaders throw std::runtime_error with the offending path (and a line
// number for schema violations).

void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(const std::string& path);
void write_mdp(const TabularMdp& mdp, std::ostream& out);
TabularMdp read_mdp(std::istream& in, const std::string& context);

// Header line `H K n seed`, then one line `episode_index h obs action reward`
// per step.
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

// Header `policies <count> <num_observations>`, then one action row per
// deterministic policy.
void save_policy_class(const PolicyClass& pi_class, const std::string& path);
PolicyClass load_policy_class(const std::string& path);

// Lock sidecar: params block plus one `obs latent_label` line per observation.
void save_lock_sidecar(const LockParams& params, const LatentMap& phi,
                       const std::string& path);
void load_lock_sidecar(const std::string& path, LockParams& params, LatentMap& phi);
std::string latent_label(const LatentMap& phi, int latent);

// One self-contained `key=value ...` record per line; final record carries
// the chosen index and wall clock.
void write_search_report(const SearchReport& report, std::ostream& out);
void save_search_report(const SearchReport& report, const std::string& path);

// Flat key = value configuration with [section] headers; section keys are
// exposed as "section.key".
std::map<std::string, std::string> parse_config_text(std::istream& in,
                                                     const std::string& context);
std::map<std::string, std::string> load_config(const std::string& path);

std::string format_double(double v);  // 17 significant digits, round-trip safe

}  // namespace lrps
