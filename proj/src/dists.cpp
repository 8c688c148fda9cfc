#include "automarg/dists.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace automarg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLogTwoPi = 1.8378770664093454836;
constexpr double kLogPi = 1.1447298858494001741;

void require(bool ok, const char* msg) {
  if (!ok) throw std::invalid_argument(msg);
}

bool near_integer(double x) { return std::abs(x - std::round(x)) < 1e-9; }

double lbeta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

int param_arity(Family f) {
  switch (f) {
    case Family::HalfCauchy:
    case Family::Bernoulli:
    case Family::Exponential:
      return 1;
    case Family::Normal:
    case Family::Cauchy:
    case Family::Beta:
    case Family::Binomial:
    case Family::Gamma:
    case Family::Uniform:
    case Family::Pareto:
      return 2;
    case Family::BetaBinomial:
    case Family::CompoundGamma:
      return 3;
  }
  return 0;
}

const char* family_name(Family f) {
  switch (f) {
    case Family::Normal: return "Normal";
    case Family::HalfCauchy: return "HalfCauchy";
    case Family::Cauchy: return "Cauchy";
    case Family::Beta: return "Beta";
    case Family::Binomial: return "Binomial";
    case Family::Bernoulli: return "Bernoulli";
    case Family::Gamma: return "Gamma";
    case Family::Exponential: return "Exponential";
    case Family::Uniform: return "Uniform";
    case Family::Pareto: return "Pareto";
    case Family::BetaBinomial: return "BetaBinomial";
    case Family::CompoundGamma: return "CompoundGamma";
  }
  return "?";
}

bool is_discrete(Family f) {
  switch (f) {
    case Family::Binomial:
    case Family::Bernoulli:
    case Family::BetaBinomial:
      return true;
    default:
      return false;
  }
}

double log_density(Family f, std::span<const double> params, double x) {
  if (static_cast<int>(params.size()) != param_arity(f))
    throw std::invalid_argument("parameter arity mismatch");
  switch (f) {
    case Family::Normal: {
      double mu = params[0], var = params[1];
      require(var > 0.0, "Normal variance must be positive");
      double d = x - mu;
      return -0.5 * (kLogTwoPi + std::log(var) + d * d / var);
    }
    case Family::HalfCauchy: {
      double s = params[0];
      require(s > 0.0, "HalfCauchy scale must be positive");
      if (x < 0.0) return kNegInf;
      double z = x / s;
      return std::log(2.0) - kLogPi - std::log(s) - std::log1p(z * z);
    }
    case Family::Cauchy: {
      double loc = params[0], s = params[1];
      require(s > 0.0, "Cauchy scale must be positive");
      double z = (x - loc) / s;
      return -kLogPi - std::log(s) - std::log1p(z * z);
    }
    case Family::Beta: {
      double a = params[0], b = params[1];
      require(a > 0.0 && b > 0.0, "Beta parameters must be positive");
      if (x <= 0.0 || x >= 1.0) return kNegInf;
      return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - lbeta(a, b);
    }
    case Family::Binomial: {
      double n = params[0], p = params[1];
      require(n >= 0.0 && near_integer(n), "Binomial n must be a nonnegative integer");
      require(p >= 0.0 && p <= 1.0, "Binomial p must be in [0,1]");
      if (!near_integer(x) || x < 0.0 || x > n) return kNegInf;
      double y = std::round(x);
      double lp;
      if (p == 0.0) lp = (y == 0.0) ? 0.0 : kNegInf;
      else if (p == 1.0) lp = (y == n) ? 0.0 : kNegInf;
      else lp = y * std::log(p) + (n - y) * std::log1p(-p);
      return lp == kNegInf ? kNegInf : log_choose(n, y) + lp;
    }
    case Family::Bernoulli: {
      double p = params[0];
      require(p >= 0.0 && p <= 1.0, "Bernoulli p must be in [0,1]");
      if (x == 0.0) return p == 1.0 ? kNegInf : std::log1p(-p);
      if (x == 1.0) return p == 0.0 ? kNegInf : std::log(p);
      return kNegInf;
    }
    case Family::Gamma: {
      double a = params[0], b = params[1];
      require(a > 0.0 && b > 0.0, "Gamma parameters must be positive");
      if (x <= 0.0) return kNegInf;
      return a * std::log(b) - std::lgamma(a) + (a - 1.0) * std::log(x) - b * x;
    }
    case Family::Exponential: {
      double rate = params[0];
      require(rate > 0.0, "Exponential rate must be positive");
      if (x < 0.0) return kNegInf;
      return std::log(rate) - rate * x;
    }
    case Family::Uniform: {
      double lo = params[0], hi = params[1];
      require(hi > lo, "Uniform requires hi > lo");
      if (x < lo || x > hi) return kNegInf;
      return -std::log(hi - lo);
    }
    case Family::Pareto: {
      double m = params[0], k = params[1];
      require(m > 0.0 && k > 0.0, "Pareto parameters must be positive");
      if (x < m) return kNegInf;
      return std::log(k) + k * std::log(m) - (k + 1.0) * std::log(x);
    }
    case Family::BetaBinomial: {
      double n = params[0], a = params[1], b = params[2];
      require(n >= 0.0 && near_integer(n), "BetaBinomial n must be a nonnegative integer");
      require(a > 0.0 && b > 0.0, "BetaBinomial alpha/beta must be positive");
      if (!near_integer(x) || x < 0.0 || x > n) return kNegInf;
      double y = std::round(x);
      return log_choose(n, y) + lbeta(y + a, n - y + b) - lbeta(a, b);
    }
    case Family::CompoundGamma: {
      double a = params[0], b = params[1], q = params[2];
      require(a > 0.0 && b > 0.0 && q > 0.0, "CompoundGamma parameters must be positive");
      if (x <= 0.0) return kNegInf;
      return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + b * std::log(q) +
             (a - 1.0) * std::log(x) - (a + b) * std::log(q + x);
    }
  }
  return kNegInf;
}

double sample(Family f, std::span<const double> params, std::mt19937_64& rng) {
  if (static_cast<int>(params.size()) != param_arity(f))
    throw std::invalid_argument("parameter arity mismatch");
  switch (f) {
    case Family::Normal: {
      double mu = params[0], var = params[1];
      require(var > 0.0, "Normal variance must be positive");
      return std::normal_distribution<double>(mu, std::sqrt(var))(rng);
    }
    case Family::HalfCauchy: {
      double s = params[0];
      require(s > 0.0, "HalfCauchy scale must be positive");
      return std::abs(std::cauchy_distribution<double>(0.0, s)(rng));
    }
    case Family::Cauchy: {
      double loc = params[0], s = params[1];
      require(s > 0.0, "Cauchy scale must be positive");
      return std::cauchy_distribution<double>(loc, s)(rng);
    }
    case Family::Beta: {
      double a = params[0], b = params[1];
      require(a > 0.0 && b > 0.0, "Beta parameters must be positive");
      double g1 = std::gamma_distribution<double>(a, 1.0)(rng);
      double g2 = std::gamma_distribution<double>(b, 1.0)(rng);
      double v = g1 / (g1 + g2);
      // keep strictly inside (0,1) so log densities stay finite
      return std::clamp(v, 1e-300, 1.0 - 1e-16);
    }
    case Family::Binomial: {
      double n = params[0], p = params[1];
      require(n >= 0.0 && near_integer(n), "Binomial n must be a nonnegative integer");
      require(p >= 0.0 && p <= 1.0, "Binomial p must be in [0,1]");
      return static_cast<double>(
          std::binomial_distribution<long>(static_cast<long>(std::round(n)), p)(rng));
    }
    case Family::Bernoulli: {
      double p = params[0];
      require(p >= 0.0 && p <= 1.0, "Bernoulli p must be in [0,1]");
      return std::bernoulli_distribution(p)(rng) ? 1.0 : 0.0;
    }
    case Family::Gamma: {
      double a = params[0], b = params[1];
      require(a > 0.0 && b > 0.0, "Gamma parameters must be positive");
      return std::gamma_distribution<double>(a, 1.0 / b)(rng);
    }
    case Family::Exponential: {
      double rate = params[0];
      require(rate > 0.0, "Exponential rate must be positive");
      return std::exponential_distribution<double>(rate)(rng);
    }
    case Family::Uniform: {
      double lo = params[0], hi = params[1];
      require(hi > lo, "Uniform requires hi > lo");
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    }
    case Family::Pareto: {
      double m = params[0], k = params[1];
      require(m > 0.0 && k > 0.0, "Pareto parameters must be positive");
      double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      u = std::max(u, 1e-300);
      return m * std::pow(u, -1.0 / k);
    }
    case Family::BetaBinomial: {
      // beta-then-binomial composition
      double n = params[0], a = params[1], b = params[2];
      double bp[2] = {a, b};
      double theta = sample(Family::Beta, bp, rng);
      double np[2] = {n, theta};
      return sample(Family::Binomial, np, rng);
    }
    case Family::CompoundGamma: {
      // gamma-then-gamma composition
      double a = params[0], b = params[1], q = params[2];
      double lp[2] = {b, q};
      double lambda = sample(Family::Gamma, lp, rng);
      double xp[2] = {a, lambda};
      return sample(Family::Gamma, xp, rng);
    }
  }
  throw std::invalid_argument("unknown family");
}

bool in_support(Family f, std::span<const double> params, double x) {
  if (!std::isfinite(x)) return false;
  switch (f) {
    case Family::Normal:
    case Family::Cauchy:
      return true;
    case Family::HalfCauchy:
    case Family::Exponential:
      return x >= 0.0;
    case Family::Gamma:
    case Family::CompoundGamma:
      return x > 0.0;
    case Family::Beta:
      return x > 0.0 && x < 1.0;
    case Family::Bernoulli:
      return x == 0.0 || x == 1.0;
    case Family::Binomial:
    case Family::BetaBinomial: {
      if (!near_integer(x) || x < 0.0) return false;
      if (!params.empty()) return x <= params[0] + 1e-9;
      return true;
    }
    case Family::Uniform:
      if (params.size() == 2) return x >= params[0] && x <= params[1];
      return true;
    case Family::Pareto:
      if (!params.empty()) return x >= params[0];
      return x > 0.0;
  }
  return false;
}

double Bijection::forward(double x) const {
  switch (kind) {
    case Kind::Identity: return x;
    case Kind::Log: return std::log(x);
    case Kind::Logit01: return std::log(x) - std::log1p(-x);
    case Kind::LogitScaled: {
      double s = (x - a) / (b - a);
      return std::log(s) - std::log1p(-s);
    }
    case Kind::LogShift: return std::log(x - a);
  }
  return x;
}

double Bijection::inverse(double u) const {
  switch (kind) {
    case Kind::Identity: return u;
    case Kind::Log: return std::exp(u);
    case Kind::Logit01: return 1.0 / (1.0 + std::exp(-u));
    case Kind::LogitScaled: return a + (b - a) / (1.0 + std::exp(-u));
    case Kind::LogShift: return a + std::exp(u);
  }
  return u;
}

double Bijection::log_det_jacobian(double u) const {
  switch (kind) {
    case Kind::Identity: return 0.0;
    case Kind::Log: return u;
    case Kind::Logit01: {
      double s = 1.0 / (1.0 + std::exp(-u));
      return std::log(s) + std::log1p(-s);
    }
    case Kind::LogitScaled: {
      double s = 1.0 / (1.0 + std::exp(-u));
      return std::log(b - a) + std::log(s) + std::log1p(-s);
    }
    case Kind::LogShift: return u;
  }
  return 0.0;
}

Bijection unconstraining(Family f, std::span<const double> params) {
  switch (f) {
    case Family::Normal:
    case Family::Cauchy:
      return {Bijection::Kind::Identity};
    case Family::HalfCauchy:
    case Family::Gamma:
    case Family::Exponential:
    case Family::CompoundGamma:
      return {Bijection::Kind::Log};
    case Family::Beta:
      return {Bijection::Kind::Logit01};
    case Family::Uniform: {
      require(params.size() == 2 && params[1] > params[0], "Uniform requires hi > lo");
      return {Bijection::Kind::LogitScaled, params[0], params[1]};
    }
    case Family::Pareto: {
      require(!params.empty() && params[0] > 0.0, "Pareto scale must be positive");
      return {Bijection::Kind::LogShift, params[0]};
    }
    case Family::Binomial:
    case Family::Bernoulli:
    case Family::BetaBinomial:
      throw std::invalid_argument(std::string(family_name(f)) +
                                  " is discrete and has no unconstraining bijection");
  }
  return {Bijection::Kind::Identity};
}

double digamma(double x) {
  // recurrence into the asymptotic regime, then the standard series
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  double inv = 1.0 / x, inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)));
  return result;
}

}  // namespace automarg
