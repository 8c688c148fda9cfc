#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "automarg/model.hpp"

namespace automarg {

// Column-oriented dataset, as loaded from a headered CSV.
struct Dataset {
  std::map<std::string, std::vector<double>> columns;

  bool has(const std::string& name) const { return columns.count(name) > 0; }
  const std::vector<double>& column(const std::string& name) const;
  std::vector<int> int_column(const std::string& name) const;
  std::size_t rows() const;
};

// Partial pooling of treatment effects across 8 groups: global mean and
// scale, one latent effect per group, noisy observation of each effect.
GraphicalModel eight_schools(std::span<const double> y, std::span<const double> sigma);

// Per-unit success rates pooled through a reparameterized beta prior:
// m ~ Uniform(0,1), kappa ~ Pareto(1, 1.5), theta_i ~ Beta(m*kappa,
// (1-m)*kappa), y_i ~ Binomial(K_i, theta_i).
GraphicalModel repeated_binary_trials(std::span<const int> K, std::span<const int> y);

// Paired treatment/control regression with per-grade intercept means,
// effects and noise scales. g, p are 1-based grade / pair indices; the grade
// of each pair is derived from the class rows.
GraphicalModel electric_company(std::span<const int> g, std::span<const int> p,
                                std::span<const int> t, std::span<const double> y);

// Hierarchical linear regression of a longitudinal score on time, per-patient
// slopes and intercepts. id is 1-based and dense.
GraphicalModel pulmonary_fibrosis(std::span<const int> id, std::span<const double> t,
                                  std::span<const double> y);

// Two-observation, two-effect version of the paired regression; used to
// check the engine's reformulation against hand-derived closed forms.
GraphicalModel electric_micro(double t1, double t2, double y1, double y2);

// Scale/latent funnel with no conjugate structure through the variance.
GraphicalModel funnel(int n_latent = 5);

// Conjugacy-free model: a squared latent mean breaks every pattern.
GraphicalModel quadratic_mean();

// Bundled fixtures and deterministic desk-scale synthetic datasets.
Dataset eight_schools_data();
Dataset baseball1970_data();
Dataset electric_desk_data();    // G=4, P=24, C=48, prior-sampled scores
Dataset pulmonary_desk_data();   // J=20 patients, 3 visits each

struct ZooEntry {
  std::string name;
  std::vector<std::string> default_exempt;
  std::function<GraphicalModel(const Dataset&)> build;
  std::function<Dataset()> default_data;
};

const std::vector<ZooEntry>& zoo_registry();
const ZooEntry& zoo_entry(const std::string& name);  // throws if unknown

}  // namespace automarg
