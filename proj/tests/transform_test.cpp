#include <cmath>
#include <random>

#include "automarg/transform.hpp"
#include "automarg/zoo.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace automarg;

namespace {

// Joint-preservation hook: samples points from the current model right
// before a reversal and re-checks the log joint right after.
struct JointCheck {
  std::vector<Assignment> points;
  std::vector<double> before;
  std::mt19937_64 rng{101};
  int n_points = 20;

  void operator()(const GraphicalModel& m, NodeId, NodeId, bool phase_before) {
    if (phase_before) {
      points.clear();
      before.clear();
      for (int i = 0; i < n_points; ++i) {
        Assignment a = m.forward_sample(rng, GraphicalModel::ObservedMode::Clamp);
        points.push_back(a);
        before.push_back(m.log_joint(a));
      }
    } else {
      for (int i = 0; i < n_points; ++i) {
        double after = m.log_joint(points[i]);
        double denom = std::max(std::abs(before[i]), 1.0);
        CHECK(std::abs(after - before[i]) / denom < 1e-9);
      }
    }
  }
};

std::vector<std::string> surviving_latents(const GraphicalModel& m) {
  std::vector<std::string> out;
  for (NodeId id : m.latent_nodes()) out.push_back(m.node(id).name);
  return out;
}

}  // namespace

TEST_SUITE("transform") {

TEST_CASE("glob matching") {
  CHECK(glob_match("mu", "mu"));
  CHECK_FALSE(glob_match("mu", "mu_1"));
  CHECK(glob_match("mu_*", "mu_1"));
  CHECK(glob_match("mu_*", "mu_"));
  CHECK(glob_match("*", "anything"));
  CHECK(glob_match("x_?", "x_7"));
  CHECK_FALSE(glob_match("x_?", "x_17"));
  CHECK(glob_match("a*b*c", "axxbyyc"));
  CHECK_FALSE(glob_match("a*b*c", "axxbyy"));
}

TEST_CASE("conjugacy detection") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Normal, {g.input(x), g.constant(1.0)});
  NodeId z = m.add_node("z", Family::Normal,
                        {g.input(x), g.apply(Op::Square, g.input(x))});
  NodeId w = m.add_node("w", Family::Normal,
                        {g.apply(Op::Square, g.input(x)), g.constant(1.0)});
  CHECK(conjugate(m, x, y));
  CHECK_FALSE(conjugate(m, x, z));  // variance depends on the parent
  CHECK_FALSE(conjugate(m, x, w));  // mean is not affine in the parent

  NodeId r = m.add_node("r", Family::Gamma, {g.constant(2.0), g.constant(1.0)});
  NodeId e = m.add_node("e", Family::Exponential, {g.input(r)});
  NodeId gm = m.add_node("gm", Family::Gamma,
                         {g.constant(3.0), g.apply(Op::Mul, g.constant(2.0), g.input(r))});
  NodeId bad = m.add_node("bad", Family::Gamma,
                          {g.input(r), g.constant(1.0)});  // shape depends on parent
  CHECK(conjugate(m, r, e));
  CHECK(conjugate(m, r, gm));
  CHECK_FALSE(conjugate(m, r, bad));

  NodeId p = m.add_node("p", Family::Beta, {g.constant(1.0), g.constant(1.0)});
  NodeId k = m.add_node("k", Family::Binomial, {g.constant(10.0), g.input(p)});
  NodeId kh = m.add_node("kh", Family::Binomial,
                         {g.constant(10.0), g.apply(Op::Mul, g.constant(0.5), g.input(p))});
  NodeId be = m.add_node("be", Family::Bernoulli, {g.input(p)});
  CHECK(conjugate(m, p, k));
  CHECK_FALSE(conjugate(m, p, kh));  // success probability must be the parent itself
  CHECK(conjugate(m, p, be));
}

TEST_CASE("reversing x ~ N(0,1), y ~ N(x,1)") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Normal, {g.input(x), g.constant(1.0)});
  reverse_edge(m, x, y);

  auto bind = [&](int id) { return id == y ? 3.0 : 0.0; };
  const ModelNode& ny = m.node(y);
  CHECK(ny.parents.empty());
  CHECK(g.evaluate(ny.params[0], bind) == doctest::Approx(0.0));
  CHECK(g.evaluate(ny.params[1], bind) == doctest::Approx(2.0));
  const ModelNode& nx = m.node(x);
  CHECK(nx.parents == std::vector<NodeId>{y});
  CHECK(g.evaluate(nx.params[0], bind) == doctest::Approx(1.5));   // y/2
  CHECK(g.evaluate(nx.params[1], bind) == doctest::Approx(0.5));
}

TEST_CASE("eight-schools reversal closed form") {
  Dataset d = eight_schools_data();
  const auto& ys = d.column("y");
  const auto& sigmas = d.column("sigma");
  GraphicalModel m = eight_schools(ys, sigmas);
  NodeId mu = m.find("mu"), tau = m.find("tau");
  NodeId x1 = m.find("x_1"), y1 = m.find("y_1");
  reverse_edge(m, x1, y1);

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unif(0.2, 4.0);
  ExprGraph& g = m.graph();
  for (int i = 0; i < 25; ++i) {
    double mv = unif(rng) - 2.0, tv = unif(rng);
    auto bind = [&](int id) {
      if (id == mu) return mv;
      if (id == tau) return tv;
      if (id == y1) return ys[0];
      throw std::logic_error("unexpected input " + std::to_string(id));
    };
    double s2 = sigmas[0] * sigmas[0], t2 = tv * tv;
    // child marginal: y_1 ~ N(mu, tau^2 + sigma_1^2)
    CHECK(g.evaluate(m.node(y1).params[0], bind) == doctest::Approx(mv).epsilon(1e-10));
    CHECK(g.evaluate(m.node(y1).params[1], bind) ==
          doctest::Approx(t2 + s2).epsilon(1e-10));
    // parent conditional: x_1 | y_1 ~ N(mu + k (y_1 - mu), k sigma_1^2),
    // k = tau^2 / (tau^2 + sigma_1^2)
    double k = t2 / (t2 + s2);
    CHECK(g.evaluate(m.node(x1).params[0], bind) ==
          doctest::Approx(mv + k * (ys[0] - mv)).epsilon(1e-10));
    CHECK(g.evaluate(m.node(x1).params[1], bind) ==
          doctest::Approx(k * s2).epsilon(1e-10));
  }
}

TEST_CASE("beta-bernoulli reversal and removal") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId p = m.add_node("p", Family::Beta, {g.constant(1.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Bernoulli, {g.input(p)});
  m.observe(y, 1.0);
  auto res = marginalize(m);
  REQUIRE(res.log.size() == 1);
  CHECK(res.log[0].pattern == "Beta/Bernoulli");
  CHECK_FALSE(m.node(p).alive);
  CHECK(m.node(y).family == Family::BetaBinomial);
  auto bind = [&](int id) { return id == y ? 1.0 : 0.0; };
  CHECK(g.evaluate(m.node(y).params[0], bind) == 1.0);
  CHECK(g.evaluate(m.node(y).params[1], bind) == 1.0);
  CHECK(g.evaluate(m.node(y).params[2], bind) == 1.0);
  // frozen conditional p | y=1 ~ Beta(2, 1)
  REQUIRE(res.stack.size() == 1);
  CHECK(res.stack[0].family == Family::Beta);
  CHECK(g.evaluate(res.stack[0].params[0], bind) == 2.0);
  CHECK(g.evaluate(res.stack[0].params[1], bind) == 1.0);
}

TEST_CASE("marginalize eight schools") {
  Dataset d = eight_schools_data();
  SUBCASE("with the global mean exempt") {
    GraphicalModel m = eight_schools(d.column("y"), d.column("sigma"));
    auto res = marginalize(m, {.exempt = {"mu"}});
    CHECK(surviving_latents(m) == std::vector<std::string>{"mu", "tau"});
    CHECK(res.stack.size() == 8);
    CHECK(res.log.size() == 8);
    for (const auto& ev : res.log) CHECK(ev.pattern == "Normal/Normal");
  }
  SUBCASE("without exemptions the mean is eliminated too") {
    GraphicalModel m = eight_schools(d.column("y"), d.column("sigma"));
    auto res = marginalize(m);
    CHECK(surviving_latents(m) == std::vector<std::string>{"tau"});
    CHECK(res.stack.size() == 9);
  }
}

TEST_CASE("marginalize pooled binary trials") {
  Dataset d = baseball1970_data();
  GraphicalModel m = repeated_binary_trials(d.int_column("K"), d.int_column("y"));
  auto res = marginalize(m);
  CHECK(surviving_latents(m) == std::vector<std::string>{"m", "kappa"});
  CHECK(res.stack.size() == 18);
  for (const auto& ev : res.log) CHECK(ev.pattern == "Beta/Binomial");
}

TEST_CASE("a squared mean blocks marginalization entirely") {
  GraphicalModel m = quadratic_mean();
  std::size_t before = m.latent_nodes().size();
  auto res = marginalize(m);
  CHECK(res.log.empty());
  CHECK(res.stack.empty());
  CHECK(m.latent_nodes().size() == before);
}

TEST_CASE("unobserved leaves strip without any reversal") {
  GraphicalModel m = funnel(5);
  auto res = marginalize(m);
  CHECK(res.log.empty());       // nothing conjugate through Exp(v)
  CHECK(res.stack.size() == 6);  // five leaves, then the scale itself
  CHECK(m.latent_nodes().empty());
}

TEST_CASE("recovery samples the frozen conditional") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Normal, {g.input(x), g.constant(1.0)});
  m.observe(y, 2.0);
  auto res = marginalize(m);
  REQUIRE(res.stack.size() == 1);
  std::mt19937_64 rng(41);
  std::vector<double> draws;
  for (int i = 0; i < 40000; ++i) {
    Assignment a = recover(m, res.stack, Assignment{}, rng);
    REQUIRE(a.has(x));
    draws.push_back(a.get(x));
  }
  // x | y=2 ~ N(1, 1/2)
  CHECK(testutil::mean(draws) == doctest::Approx(1.0).epsilon(0.02));
  CHECK(testutil::variance(draws) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("recovery with an empty stack returns the input unchanged") {
  GraphicalModel m = quadratic_mean();
  std::mt19937_64 rng(1);
  Assignment in;
  in.set(m.find("x"), 0.7);
  Assignment out = recover(m, {}, in, rng);
  CHECK(out.get(m.find("x")) == 0.7);
}

TEST_CASE("recovered joint matches forward sampling (eight schools)") {
  // Sampling the reduced model from its prior and recovering should
  // reproduce the prior of the full model.
  Dataset d = eight_schools_data();
  GraphicalModel full = eight_schools(d.column("y"), d.column("sigma"));
  GraphicalModel m = eight_schools(d.column("y"), d.column("sigma"));
  auto res = marginalize(m, {.exempt = {"mu"}});
  // ids are shared with `full` since both models are built identically
  NodeId mu = full.find("mu"), tau = full.find("tau"), x1 = full.find("x_1");
  std::mt19937_64 rng(43);
  std::vector<double> rec, fwd;
  for (int i = 0; i < 60000; ++i) {
    Assignment reduced = m.forward_sample(rng, GraphicalModel::ObservedMode::Sample);
    Assignment a = recover(m, res.stack, reduced, rng);
    if (std::abs(a.get(tau)) < 3.0) rec.push_back(a.get(x1) - a.get(mu));
    Assignment b = full.forward_sample(rng, GraphicalModel::ObservedMode::Sample);
    if (std::abs(b.get(tau)) < 3.0) fwd.push_back(b.get(x1) - b.get(mu));
  }
  CHECK(std::abs(testutil::mean(rec) - testutil::mean(fwd)) < 0.05);
  CHECK(testutil::ks_statistic(rec, fwd) < 0.02);
}

TEST_CASE("every reversal preserves the joint on zoo models") {
  for (const auto& entry : zoo_registry()) {
    CAPTURE(entry.name);
    GraphicalModel m = entry.build(entry.default_data());
    MarginalizeOptions opts;
    opts.exempt = entry.default_exempt;
    JointCheck check;
    opts.on_reverse = std::ref(check);
    marginalize(m, opts);
  }
}

TEST_CASE("random conjugate normal dags marginalize cleanly") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    GraphicalModel m;
    ExprGraph& g = m.graph();
    std::uniform_int_distribution<int> nn(2, 12);
    int n = nn(rng);
    for (int i = 0; i < n; ++i) {
      ExprRef mean = g.constant(std::round(coef(rng) * 4.0) / 4.0);
      std::uniform_int_distribution<int> np(0, std::min(i, 3));
      int k = np(rng);
      for (int j = 0; j < k; ++j) {
        std::uniform_int_distribution<int> pp(0, i - 1);
        ExprRef term = g.apply(Op::Mul, g.constant(std::round(coef(rng) * 4.0) / 4.0),
                               g.input(pp(rng)));
        mean = g.apply(Op::Add, mean, term);
      }
      m.add_node("n" + std::to_string(i), Family::Normal,
                 {mean, g.constant(0.5 + std::abs(coef(rng)))});
    }
    // observe a random subset of leaves
    std::bernoulli_distribution obs(0.5);
    for (NodeId id : m.live_nodes())
      if (m.children(id).empty() && obs(rng)) m.observe(id, coef(rng));

    MarginalizeOptions opts;
    JointCheck check;
    check.n_points = 3;
    opts.on_reverse = std::ref(check);
    auto res = marginalize(m, opts);
    CHECK(m.latent_nodes().empty());  // a pure normal dag always reduces fully
    Assignment rec = recover(m, res.stack, Assignment{}, rng);
    for (NodeId id = 0; id < NodeId(m.num_nodes()); ++id)
      if (!m.node(id).observed) CHECK(rec.has(id));
  }
}

TEST_CASE("reversing against topological order is caught") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId v = m.add_node("v", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId c1 = m.add_node("c1", Family::Normal, {g.input(v), g.constant(1.0)});
  NodeId c2 = m.add_node("c2", Family::Normal,
                         {g.apply(Op::Add, g.input(v), g.input(c1)), g.constant(1.0)});
  CHECK_THROWS_AS(reverse_edge(m, v, c2), std::logic_error);
}

TEST_CASE("non-centered reparameterization shifts the joint by log sigma") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId mu = m.add_node("mu", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId x = m.add_node("x", Family::Normal, {g.input(mu), g.constant(4.0)});
  NodeId y = m.add_node("y", Family::Normal, {g.input(x), g.constant(1.0)});
  m.observe(y, 0.3);

  GraphicalModel ref;
  ExprGraph& rg = ref.graph();
  NodeId rmu = ref.add_node("mu", Family::Normal, {rg.constant(0.0), rg.constant(1.0)});
  NodeId rx = ref.add_node("x", Family::Normal, {rg.input(rmu), rg.constant(4.0)});
  NodeId ry = ref.add_node("y", Family::Normal, {rg.input(rx), rg.constant(1.0)});
  ref.observe(ry, 0.3);

  reparam_noncentered(m, x);
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    double mv = unif(rng), eps = unif(rng);
    Assignment a;
    a.set(mu, mv);
    a.set(x, eps);
    Assignment b;
    b.set(rmu, mv);
    b.set(rx, mv + 2.0 * eps);
    // p_new(mu, eps) = p_old(mu, mu + sigma eps) * sigma
    CHECK(m.log_joint(a) ==
          doctest::Approx(ref.log_joint(b) + std::log(2.0)).epsilon(1e-10));
  }
}

TEST_CASE("reparameterizing a standard normal changes nothing") {
  GraphicalModel m;
  ExprGraph& g = m.graph();
  NodeId x = m.add_node("x", Family::Normal, {g.constant(0.0), g.constant(1.0)});
  NodeId y = m.add_node("y", Family::Normal, {g.input(x), g.constant(1.0)});
  m.observe(y, 1.0);
  ExprRef mean_before = m.node(y).params[0];
  reparam_noncentered(m, x);
  CHECK(m.node(y).params[0] == mean_before);
  CHECK(g.is_const_zero(m.node(x).params[0]));
  CHECK(g.is_const_one(m.node(x).params[1]));
}

}  // TEST_SUITE
