#pragma once

#include <string>
#include <vector>

#include "automarg/sampler.hpp"

namespace automarg {

struct EssReport {
  std::vector<std::string> names;
  std::vector<double> ess;  // per variable
  double min_ess = 0.0;
  std::string min_ess_name;
  double wall_time_s = 0.0;
  double min_ess_per_s = 0.0;
  bool constant_chain_warning = false;
};

// Effective sample size across chains: per-lag autocovariances averaged over
// chains, pooled variance with a between-chain term, Geyer
// initial-monotone-positive-sequence truncation. A constant input yields the
// total draw count and sets `warned`.
double ess(const std::vector<std::vector<double>>& chains, bool* warned = nullptr);

// Per-variable ESS over the constrained draws of the traces, all of which
// must share names and draw counts.
EssReport summarize(const std::vector<Trace>& traces, double wall_time_s);

}  // namespace automarg
