#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "automarg/grad.hpp"

namespace automarg {

struct NutsConfig {
  int warmup = 2000;
  int draws = 10000;
  int max_tree_depth = 10;
  double target_accept = 0.8;
  std::uint64_t seed = 0;
  int chains = 4;
};

// Post-warmup draws of one chain. `draws` is constrained space,
// `unconstrained` the raw sampler coordinates (used for ESS and recovery).
struct Trace {
  std::vector<std::string> names;
  std::vector<std::vector<double>> draws;
  std::vector<std::vector<double>> unconstrained;
  std::vector<double> accept_stat;
  std::vector<int> tree_depth;
  std::vector<std::uint8_t> divergent;
  double step_size = 0.0;
  double wall_time_s = 0.0;

  int num_divergent() const;
};

// Uniform(-2, 2) per coordinate, redrawn until the log density is finite.
// Throws std::runtime_error after 100 failed attempts.
std::vector<double> init_point(const LogDensityFn& fn, std::mt19937_64& rng);

// One leapfrog step with a diagonal (inverse) mass matrix. `grad` and `logp`
// must be current for `q` on entry and are current on exit.
void leapfrog(const LogDensityFn& fn, GradWorkspace& ws, std::vector<double>& q,
              std::vector<double>& p, std::span<const double> inv_mass, double eps,
              std::vector<double>& grad, double& logp);

// Multinomial no-U-turn sampler for a single chain: dual-averaging step-size
// adaptation and windowed diagonal mass estimation during warmup.
Trace run_nuts(const LogDensityFn& fn, const NutsConfig& cfg, std::mt19937_64& rng);

// Independent chains seeded cfg.seed, cfg.seed+1, ...
std::vector<Trace> run_chains(const LogDensityFn& fn, const NutsConfig& cfg);

}  // namespace automarg
