#include "automarg/sampler.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace automarg {

int Trace::num_divergent() const {
  return static_cast<int>(std::count(divergent.begin(), divergent.end(), 1));
}

std::vector<double> init_point(const LogDensityFn& fn, std::mt19937_64& rng) {
  GradWorkspace ws;
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  std::vector<double> q(fn.dim());
  for (int attempt = 0; attempt < 100; ++attempt) {
    for (double& x : q) x = unif(rng);
    if (std::isfinite(fn.value(q, ws))) return q;
  }
  throw std::runtime_error(
      "no finite log density found in 100 initialization attempts");
}

void leapfrog(const LogDensityFn& fn, GradWorkspace& ws, std::vector<double>& q,
              std::vector<double>& p, std::span<const double> inv_mass, double eps,
              std::vector<double>& grad, double& logp) {
  const int d = fn.dim();
  for (int i = 0; i < d; ++i) p[i] += 0.5 * eps * grad[i];
  for (int i = 0; i < d; ++i) q[i] += eps * inv_mass[i] * p[i];
  logp = fn.value_and_grad(q, grad, ws);
  for (int i = 0; i < d; ++i) p[i] += 0.5 * eps * grad[i];
}

namespace {

constexpr double kDivergenceThreshold = 1000.0;

struct Phase {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

double kinetic(std::span<const double> p, std::span<const double> inv_mass) {
  double k = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) k += p[i] * p[i] * inv_mass[i];
  return 0.5 * k;
}

// Generalized U-turn check: momentum at both ends still points along the
// trajectory's net displacement direction.
bool no_uturn(std::span<const double> p_sharp_beg, std::span<const double> p_sharp_end,
              std::span<const double> rho) {
  double beg = 0.0, end = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    beg += p_sharp_beg[i] * rho[i];
    end += p_sharp_end[i] * rho[i];
  }
  return beg > 0.0 && end > 0.0;
}

double log_sum_exp(double a, double b) {
  double m = std::max(a, b);
  if (!std::isfinite(m)) return m;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// Welford accumulator for the diagonal mass matrix.
struct VarianceEstimator {
  int n = 0;
  std::vector<double> mean, m2;

  void reset(int dim) {
    n = 0;
    mean.assign(dim, 0.0);
    m2.assign(dim, 0.0);
  }
  void add(std::span<const double> x) {
    ++n;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double d = x[i] - mean[i];
      mean[i] += d / n;
      m2[i] += d * (x[i] - mean[i]);
    }
  }
  // Sample variance shrunk toward unity, as in standard windowed adaptation.
  std::vector<double> regularized() const {
    std::vector<double> v(mean.size(), 1.0);
    if (n < 2) return v;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double s = m2[i] / (n - 1);
      v[i] = (double(n) / (n + 5.0)) * s + 1e-3 * (5.0 / (n + 5.0));
      if (!(v[i] > 0.0) || !std::isfinite(v[i])) v[i] = 1.0;
    }
    return v;
  }
};

struct DualAveraging {
  double mu = 0.0, log_eps = 0.0, log_eps_bar = 0.0, h_bar = 0.0;
  int count = 0;
  static constexpr double gamma = 0.05, t0 = 10.0, kappa = 0.75;

  void restart(double eps) {
    mu = std::log(10.0 * eps);
    log_eps = std::log(eps);
    log_eps_bar = 0.0;
    h_bar = 0.0;
    count = 0;
  }
  double update(double accept_prob, double target) {
    ++count;
    h_bar += (target - accept_prob - h_bar) / (count + t0);
    log_eps = mu - std::sqrt(double(count)) / gamma * h_bar;
    double w = std::pow(double(count), -kappa);
    log_eps_bar = w * log_eps + (1.0 - w) * log_eps_bar;
    return std::exp(log_eps);
  }
  double averaged() const { return std::exp(log_eps_bar); }
};

class NutsKernel {
 public:
  NutsKernel(const LogDensityFn& fn, const NutsConfig& cfg, std::mt19937_64& rng)
      : fn_(fn), cfg_(cfg), rng_(rng), dim_(fn.dim()), inv_mass_(fn.dim(), 1.0) {}

  std::vector<double> inv_mass_;
  double eps_ = 1.0;

  void init(std::vector<double> q) {
    z_.q = std::move(q);
    z_.p.assign(dim_, 0.0);
    z_.grad.assign(dim_, 0.0);
    z_.logp = fn_.value_and_grad(z_.q, z_.grad, ws_);
  }

  double find_reasonable_epsilon() {
    double eps = 1.0;
    Phase z = z_;
    sample_momentum(z.p);
    double h0 = -z.logp + kinetic(z.p, inv_mass_);
    Phase trial = z;
    leapfrog(fn_, ws_, trial.q, trial.p, inv_mass_, eps, trial.grad, trial.logp);
    double h = -trial.logp + kinetic(trial.p, inv_mass_);
    if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
    double direction = (h0 - h) > std::log(0.5) ? 1.0 : -1.0;
    for (int i = 0; i < 50; ++i) {
      trial = z;
      leapfrog(fn_, ws_, trial.q, trial.p, inv_mass_, eps, trial.grad, trial.logp);
      h = -trial.logp + kinetic(trial.p, inv_mass_);
      if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
      if (direction > 0.0 ? (h0 - h) <= std::log(0.5) : (h0 - h) >= std::log(0.5))
        break;
      eps *= direction > 0.0 ? 2.0 : 0.5;
    }
    return std::clamp(eps, 1e-10, 1e7);
  }

  // One NUTS transition from the current state; returns (accept stat, depth,
  // divergent flag).
  struct Stats {
    double accept = 0.0;
    int depth = 0;
    bool divergent = false;
  };

  Stats transition() {
    sample_momentum(z_.p);
    h0_ = -z_.logp + kinetic(z_.p, inv_mass_);

    Phase fwd = z_, bwd = z_;
    std::vector<double> sample_q = z_.q;
    std::vector<double> rho(dim_);
    for (int i = 0; i < dim_; ++i) rho[i] = z_.p[i];
    std::vector<double> p_sharp_bwd = p_sharp(z_.p), p_sharp_fwd = p_sharp(z_.p);

    double log_sum_weight = 0.0;
    double sum_accept = 0.0;
    int n_leapfrog = 0;
    Stats stats;

    for (int depth = 0; depth < cfg_.max_tree_depth; ++depth) {
      std::vector<double> rho_sub(dim_, 0.0);
      double lsw_sub = -std::numeric_limits<double>::infinity();
      std::vector<double> prop_sub;
      bool divergent = false;
      std::vector<double> p_sharp_inner;
      bool going_fwd = coin();
      Phase& edge = going_fwd ? fwd : bwd;
      std::vector<double>& p_sharp_edge = going_fwd ? p_sharp_fwd : p_sharp_bwd;

      bool ok = build_tree(depth, edge, going_fwd ? 1.0 : -1.0, prop_sub, p_sharp_inner,
                           p_sharp_edge, rho_sub, lsw_sub, sum_accept, n_leapfrog,
                           divergent);
      if (divergent) stats.divergent = true;
      if (!ok) break;
      stats.depth = depth + 1;

      if (lsw_sub > log_sum_weight) {
        sample_q = prop_sub;
      } else if (uniform() < std::exp(lsw_sub - log_sum_weight)) {
        sample_q = prop_sub;
      }
      log_sum_weight = log_sum_exp(log_sum_weight, lsw_sub);
      for (int i = 0; i < dim_; ++i) rho[i] += rho_sub[i];
      if (!no_uturn(p_sharp_bwd, p_sharp_fwd, rho)) break;
    }

    stats.accept = n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
    z_.q = std::move(sample_q);
    z_.logp = fn_.value_and_grad(z_.q, z_.grad, ws_);
    return stats;
  }

  const Phase& state() const { return z_; }
  GradWorkspace& workspace() { return ws_; }

 private:
  // Builds a subtree of 2^depth leapfrog steps extending `edge` in `sign`
  // direction. On return `edge` is the new trajectory end, `p_sharp_edge`
  // its sharpened momentum, `p_sharp_first` that of the subtree's first
  // state. Returns false when the subtree diverged or turned.
  bool build_tree(int depth, Phase& edge, double sign, std::vector<double>& proposal,
                  std::vector<double>& p_sharp_first, std::vector<double>& p_sharp_edge,
                  std::vector<double>& rho, double& log_sum_weight, double& sum_accept,
                  int& n_leapfrog, bool& divergent) {
    if (depth == 0) {
      leapfrog(fn_, ws_, edge.q, edge.p, inv_mass_, sign * eps_, edge.grad, edge.logp);
      ++n_leapfrog;
      double h = -edge.logp + kinetic(edge.p, inv_mass_);
      if (!std::isfinite(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0_ > kDivergenceThreshold) {
        divergent = true;
        return false;
      }
      double lw = h0_ - h;
      log_sum_weight = log_sum_exp(log_sum_weight, lw);
      sum_accept += std::min(1.0, std::exp(lw));
      for (int i = 0; i < dim_; ++i) rho[i] += edge.p[i];
      proposal = edge.q;
      p_sharp_edge = p_sharp(edge.p);
      p_sharp_first = p_sharp_edge;
      return true;
    }

    std::vector<double> rho_left(dim_, 0.0), rho_right(dim_, 0.0);
    double lsw_left = -std::numeric_limits<double>::infinity();
    double lsw_right = -std::numeric_limits<double>::infinity();
    std::vector<double> prop_left, prop_right;
    std::vector<double> ps_left_end, ps_right_first;

    if (!build_tree(depth - 1, edge, sign, prop_left, p_sharp_first, ps_left_end,
                    rho_left, lsw_left, sum_accept, n_leapfrog, divergent))
      return false;
    if (!build_tree(depth - 1, edge, sign, prop_right, ps_right_first, p_sharp_edge,
                    rho_right, lsw_right, sum_accept, n_leapfrog, divergent))
      return false;

    double lsw = log_sum_exp(lsw_left, lsw_right);
    proposal = uniform() < std::exp(lsw_right - lsw) ? std::move(prop_right)
                                                     : std::move(prop_left);
    std::vector<double> rho_sub(dim_);
    for (int i = 0; i < dim_; ++i) rho_sub[i] = rho_left[i] + rho_right[i];
    log_sum_weight = log_sum_exp(log_sum_weight, lsw);
    for (int i = 0; i < dim_; ++i) rho[i] += rho_sub[i];

    // Check the merged subtree and its interior seam for a turn.
    if (!no_uturn(p_sharp_first, p_sharp_edge, rho_sub)) return false;
    std::vector<double> rho_seam(dim_);
    for (int i = 0; i < dim_; ++i) rho_seam[i] = rho_left[i] + rho_right[i];
    return no_uturn(ps_left_end, ps_right_first, rho_seam);
  }

  std::vector<double> p_sharp(std::span<const double> p) const {
    std::vector<double> s(dim_);
    for (int i = 0; i < dim_; ++i) s[i] = inv_mass_[i] * p[i];
    return s;
  }

  void sample_momentum(std::vector<double>& p) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < dim_; ++i) p[i] = normal(rng_) / std::sqrt(inv_mass_[i]);
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool coin() { return std::uniform_int_distribution<int>(0, 1)(rng_) == 1; }

  const LogDensityFn& fn_;
  const NutsConfig& cfg_;
  std::mt19937_64& rng_;
  int dim_;
  Phase z_;
  GradWorkspace ws_;
  double h0_ = 0.0;
};

// Warmup layout: fast start, doubling slow windows for mass adaptation,
// fast tail. Collapses gracefully for short warmups.
struct WarmupSchedule {
  int init_buffer = 75, term_buffer = 50, base_window = 25;

  explicit WarmupSchedule(int warmup) {
    if (warmup < 20) {
      init_buffer = warmup;
      term_buffer = 0;
      base_window = 0;
      return;
    }
    if (init_buffer + term_buffer + base_window > warmup) {
      init_buffer = warmup * 15 / 100;
      term_buffer = warmup * 10 / 100;
      base_window = warmup - init_buffer - term_buffer;
    }
  }

  bool in_slow(int iter, int warmup) const {
    return iter >= init_buffer && iter < warmup - term_buffer && base_window > 0;
  }
  // True when `iter` is the last iteration of a slow window.
  bool window_end(int iter, int warmup) const {
    if (!in_slow(iter, warmup)) return false;
    int last_slow = warmup - term_buffer;
    int start = init_buffer, size = base_window;
    while (true) {
      int end = start + size;
      if (end + 2 * size > last_slow) end = last_slow;  // absorb the remainder
      if (iter == end - 1) return true;
      if (iter < end) return false;
      start = end;
      size *= 2;
    }
  }
};

}  // namespace

Trace run_nuts(const LogDensityFn& fn, const NutsConfig& cfg, std::mt19937_64& rng) {
  if (fn.dim() < 1) throw std::invalid_argument("sampler requires latent dimension >= 1");
  auto t_start = std::chrono::steady_clock::now();

  NutsKernel kernel(fn, cfg, rng);
  kernel.init(init_point(fn, rng));
  kernel.eps_ = kernel.find_reasonable_epsilon();

  DualAveraging da;
  da.restart(kernel.eps_);
  VarianceEstimator var;
  var.reset(fn.dim());
  WarmupSchedule sched(cfg.warmup);

  for (int iter = 0; iter < cfg.warmup; ++iter) {
    auto stats = kernel.transition();
    kernel.eps_ = da.update(stats.accept, cfg.target_accept);
    if (sched.in_slow(iter, cfg.warmup)) {
      var.add(kernel.state().q);
      if (sched.window_end(iter, cfg.warmup)) {
        kernel.inv_mass_ = var.regularized();
        var.reset(fn.dim());
        kernel.eps_ = kernel.find_reasonable_epsilon();
        da.restart(kernel.eps_);
      }
    }
  }
  if (cfg.warmup > 0) kernel.eps_ = da.averaged();
  kernel.eps_ = std::clamp(kernel.eps_, 1e-10, 1e7);

  Trace trace;
  trace.names = fn.latent_names();
  trace.step_size = kernel.eps_;
  trace.draws.reserve(cfg.draws);
  trace.unconstrained.reserve(cfg.draws);
  for (int iter = 0; iter < cfg.draws; ++iter) {
    auto stats = kernel.transition();
    trace.unconstrained.push_back(kernel.state().q);
    trace.draws.push_back(fn.constrain(kernel.state().q, kernel.workspace()));
    trace.accept_stat.push_back(stats.accept);
    trace.tree_depth.push_back(stats.depth);
    trace.divergent.push_back(stats.divergent ? 1 : 0);
  }
  trace.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return trace;
}

std::vector<Trace> run_chains(const LogDensityFn& fn, const NutsConfig& cfg) {
  std::vector<Trace> traces;
  traces.reserve(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    std::mt19937_64 rng(cfg.seed + static_cast<std::uint64_t>(c));
    traces.push_back(run_nuts(fn, cfg, rng));
  }
  return traces;
}

}  // namespace automarg
