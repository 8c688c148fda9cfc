#include <cmath>
#include <numbers>
#include <random>

#include "automarg/sampler.hpp"
#include "automarg/zoo.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace automarg;

namespace {

GraphicalModel standard_normal_model() {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  return m;
}

std::vector<double> column(const Trace& t, std::size_t j) {
  std::vector<double> out;
  out.reserve(t.draws.size());
  for (const auto& row : t.draws) out.push_back(row[j]);
  return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TEST_SUITE("sampler") {

TEST_CASE("init point is finite and inside the box") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  std::mt19937_64 rng(1);
  GradWorkspace ws;
  for (int i = 0; i < 100; ++i) {
    auto q = init_point(fn, rng);
    REQUIRE(q.size() == 1);
    CHECK(std::abs(q[0]) <= 2.0);
    CHECK(std::isfinite(fn.value(q, ws)));
  }
}

TEST_CASE("init gives up on an everywhere-invalid density") {
  // sqrt(-x^2) is NaN for every x != 0, and the box draw never hits 0 exactly
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Normal,
                        {g.apply(Op::Sqrt, g.apply(Op::Neg, g.apply(Op::Square, g.input(x)))),
                         g.constant(1.0)});
  m.observe(y, 0.0);
  LogDensityFn fn = build_logdensity(m);
  std::mt19937_64 rng(2);
  CHECK_THROWS_AS(init_point(fn, rng), std::runtime_error);
}

TEST_CASE("leapfrog nearly conserves the hamiltonian") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  GradWorkspace ws;
  std::vector<double> q = {1.0}, p = {0.5}, grad(1), inv_mass = {1.0};
  double logp = fn.value_and_grad(q, grad, ws);
  double h0 = -logp + 0.5 * p[0] * p[0];
  for (int i = 0; i < 100; ++i) leapfrog(fn, ws, q, p, inv_mass, 0.01, grad, logp);
  double h1 = -logp + 0.5 * p[0] * p[0];
  CHECK(std::abs(h1 - h0) < 1e-3);
  // one step is deterministic and moves in the expected direction
  CHECK(q[0] != 1.0);
}

TEST_CASE("leapfrog is reversible") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  GradWorkspace ws;
  std::vector<double> q = {0.3}, p = {-1.1}, grad(1), inv_mass = {2.0};
  double logp = fn.value_and_grad(q, grad, ws);
  for (int i = 0; i < 10; ++i) leapfrog(fn, ws, q, p, inv_mass, 0.05, grad, logp);
  p[0] = -p[0];
  for (int i = 0; i < 10; ++i) leapfrog(fn, ws, q, p, inv_mass, 0.05, grad, logp);
  CHECK(q[0] == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(-p[0] == doctest::Approx(-1.1).epsilon(1e-9));
}

TEST_CASE("standard normal moments and distribution") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 2000;
  cfg.draws = 50000;
  cfg.chains = 1;
  cfg.seed = 5;
  std::mt19937_64 rng(cfg.seed);
  Trace t = run_nuts(fn, cfg, rng);
  REQUIRE(int(t.draws.size()) == cfg.draws);
  CHECK(t.num_divergent() == 0);
  auto xs = column(t, 0);
  CHECK(std::abs(testutil::mean(xs)) < 0.05);
  CHECK(testutil::variance(xs) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(testutil::ks_statistic(xs, normal_cdf) < 0.01);
}

TEST_CASE("correlated bivariate normal") {
  // x ~ N(0,1), y | x ~ N(0.9 x, 0.19): both marginals are standard normal
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  m.add_node("y", Family::Normal,
             {g.apply(Op::Mul, g.constant(0.9), g.input(x)), g.constant(0.19)});
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 1000;
  cfg.draws = 20000;
  cfg.chains = 1;
  cfg.seed = 7;
  std::mt19937_64 rng(cfg.seed);
  Trace t = run_nuts(fn, cfg, rng);
  auto xs = column(t, 0), ys = column(t, 1);
  CHECK(testutil::variance(xs) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(testutil::variance(ys) == doctest::Approx(1.0).epsilon(0.1));
  CHECK(testutil::correlation(xs, ys) == doctest::Approx(0.9).epsilon(0.05));
}

TEST_CASE("acceptance adapts toward the target") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 1000;
  cfg.draws = 4000;
  cfg.chains = 1;
  cfg.seed = 11;
  cfg.target_accept = 0.8;
  std::mt19937_64 rng(cfg.seed);
  Trace t = run_nuts(fn, cfg, rng);
  CHECK(t.step_size > 0.0);
  CHECK(testutil::mean(t.accept_stat) == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("a funnel-shaped posterior produces divergences") {
  Dataset d = eight_schools_data();
  GraphicalModel m = eight_schools(d.column("y"), d.column("sigma"));
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 500;
  cfg.draws = 2000;
  cfg.chains = 2;
  cfg.seed = 13;
  cfg.target_accept = 0.6;
  auto traces = run_chains(fn, cfg);
  int total = 0;
  for (const auto& t : traces) total += t.num_divergent();
  CHECK(total > 0);
}

TEST_CASE("chains are bitwise deterministic per seed") {
  Dataset d = eight_schools_data();
  GraphicalModel m = eight_schools(d.column("y"), d.column("sigma"));
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 200;
  cfg.draws = 300;
  cfg.chains = 2;
  cfg.seed = 17;
  auto a = run_chains(fn, cfg);
  auto b = run_chains(fn, cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t c = 0; c < a.size(); ++c) {
    CHECK(a[c].draws == b[c].draws);
    CHECK(a[c].unconstrained == b[c].unconstrained);
    CHECK(a[c].divergent == b[c].divergent);
    CHECK(a[c].step_size == b[c].step_size);
  }
  // different seeds give different chains
  cfg.seed = 18;
  auto c2 = run_chains(fn, cfg);
  CHECK(c2[0].draws != a[0].draws);
}

TEST_CASE("tree depth respects the cap") {
  GraphicalModel m = standard_normal_model();
  LogDensityFn fn = build_logdensity(m);
  NutsConfig cfg;
  cfg.warmup = 200;
  cfg.draws = 500;
  cfg.chains = 1;
  cfg.seed = 19;
  cfg.max_tree_depth = 3;
  std::mt19937_64 rng(cfg.seed);
  Trace t = run_nuts(fn, cfg, rng);
  for (int depth : t.tree_depth) CHECK(depth <= 3);
}

}  // TEST_SUITE
