#include "automarg/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace automarg {

namespace {

double chain_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / x.size();
}

// Lag-t autocovariance with the biased 1/n normalization.
double autocov(const std::vector<double>& x, double mean, std::size_t t) {
  double s = 0.0;
  for (std::size_t i = t; i < x.size(); ++i) s += (x[i] - mean) * (x[i - t] - mean);
  return s / x.size();
}

}  // namespace

double ess(const std::vector<std::vector<double>>& chains, bool* warned) {
  if (chains.empty()) throw std::invalid_argument("ess: no chains");
  const std::size_t m = chains.size();
  const std::size_t n = chains[0].size();
  if (n < 4) throw std::invalid_argument("ess: need at least 4 draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("ess: unequal chain lengths");

  // An exactly constant input would otherwise reach the correlation sums
  // with a variance made of pure rounding noise.
  bool constant = true;
  for (const auto& c : chains)
    for (double v : c) constant = constant && v == chains[0][0];
  if (constant) {
    if (warned) *warned = true;
    return static_cast<double>(m * n);
  }

  std::vector<double> means(m);
  std::vector<double> vars(m);  // biased within-chain variance (lag-0 autocov)
  for (std::size_t j = 0; j < m; ++j) {
    means[j] = chain_mean(chains[j]);
    vars[j] = autocov(chains[j], means[j], 0);
  }

  double w = 0.0;  // mean within-chain variance, unbiased
  for (std::size_t j = 0; j < m; ++j) w += vars[j] * n / (n - 1.0);
  w /= m;

  double var_plus;
  if (m > 1) {
    double grand = chain_mean(means);
    double b_over_n = 0.0;
    for (double mu : means) b_over_n += (mu - grand) * (mu - grand);
    b_over_n /= (m - 1.0);
    var_plus = (n - 1.0) / n * w + b_over_n;
  } else {
    var_plus = (n - 1.0) / n * w;
  }

  if (!(var_plus > 0.0)) {
    if (warned) *warned = true;
    return static_cast<double>(m * n);
  }

  auto rho = [&](std::size_t t) {
    double acov = 0.0;
    for (std::size_t j = 0; j < m; ++j) acov += autocov(chains[j], means[j], t);
    acov /= m;
    return 1.0 - (w - acov) / var_plus;
  };

  // Sum paired correlations while the pair sums stay positive, then enforce
  // monotone decrease.
  double rho_sum = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    rho_sum += pair;
  }

  double tau = 1.0 + 2.0 * rho_sum;
  double result = static_cast<double>(m * n) / tau;
  return std::min(result, static_cast<double>(m * n));
}

EssReport summarize(const std::vector<Trace>& traces, double wall_time_s) {
  if (traces.empty()) throw std::invalid_argument("summarize: no traces");
  EssReport report;
  report.names = traces[0].names;
  report.wall_time_s = wall_time_s;
  const std::size_t dim = report.names.size();

  report.min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < dim; ++v) {
    std::vector<std::vector<double>> per_chain;
    per_chain.reserve(traces.size());
    for (const Trace& t : traces) {
      std::vector<double> col;
      col.reserve(t.draws.size());
      for (const auto& row : t.draws) col.push_back(row[v]);
      per_chain.push_back(std::move(col));
    }
    bool warned = false;
    double e = ess(per_chain, &warned);
    report.constant_chain_warning = report.constant_chain_warning || warned;
    report.ess.push_back(e);
    if (e < report.min_ess) {
      report.min_ess = e;
      report.min_ess_name = report.names[v];
    }
  }
  report.min_ess_per_s = wall_time_s > 0.0 ? report.min_ess / wall_time_s : 0.0;
  return report;
}

}  // namespace automarg
