#pragma once

#include <random>
#include <span>
#include <string>

namespace automarg {

// Distribution families. Normal carries (mean, variance); Gamma is in rate
// form. BetaBinomial and CompoundGamma appear as marginals produced by edge
// reversal but can also be constructed directly.
enum class Family {
  Normal,         // (mu, sigma^2)
  HalfCauchy,     // (scale)
  Cauchy,         // (loc, scale)
  Beta,           // (alpha, beta)
  Binomial,       // (n, p)
  Bernoulli,      // (p)
  Gamma,          // (shape alpha, rate beta)
  Exponential,    // (rate)
  Uniform,        // (lo, hi)
  Pareto,         // (scale m, shape k)
  BetaBinomial,   // (n, alpha, beta)
  CompoundGamma,  // (a, b, scale q)
};

int param_arity(Family f);
const char* family_name(Family f);
bool is_discrete(Family f);

// Natural-log density. Out-of-support x yields -infinity; invalid parameters
// throw std::invalid_argument.
double log_density(Family f, std::span<const double> params, double x);

double sample(Family f, std::span<const double> params, std::mt19937_64& rng);

// Support check for observed values; parameter-independent bounds only are
// enforced when parameters are not available.
bool in_support(Family f, std::span<const double> params, double x);

// Map between a family's support and the real line. `forward` goes
// constrained -> unconstrained; `log_det_jacobian` is that of the inverse,
// evaluated at an unconstrained point.
struct Bijection {
  enum class Kind { Identity, Log, Logit01, LogitScaled, LogShift };
  Kind kind = Kind::Identity;
  double a = 0.0;  // LogitScaled: lo, LogShift: offset
  double b = 1.0;  // LogitScaled: hi

  double forward(double x) const;
  double inverse(double u) const;
  double log_det_jacobian(double u) const;
};

// Throws for discrete families (no real-line embedding; HMC-ineligible).
Bijection unconstraining(Family f, std::span<const double> params);

double digamma(double x);

}  // namespace automarg
