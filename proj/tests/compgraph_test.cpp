#include <cmath>
#include <random>

#include "automarg/compgraph.hpp"
#include "doctest.h"

using namespace automarg;

TEST_SUITE("compgraph") {

TEST_CASE("inputs are interned and appended in order") {
  ExprGraph g;
  ExprRef a = g.input(7);
  ExprRef b = g.input(9);
  CHECK(a.idx == 0);
  CHECK(b.idx == 1);
  CHECK(g.input(7) == a);
  CHECK(g.size() == 2);
}

TEST_CASE("constants are interned and must be finite") {
  ExprGraph g;
  ExprRef five = g.constant(5.0);
  CHECK(g.constant(5.0) == five);
  CHECK(g.node(five).value == 5.0);
  CHECK_THROWS_AS(g.constant(std::nan("")), std::invalid_argument);
  CHECK_THROWS_AS(g.constant(std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
}

TEST_CASE("zero and one simplifications avoid new nodes") {
  ExprGraph g;
  ExprRef x = g.input(0);
  ExprRef zero = g.constant(0.0);
  ExprRef one = g.constant(1.0);
  CHECK(g.apply(Op::Add, x, zero) == x);
  CHECK(g.apply(Op::Add, zero, x) == x);
  CHECK(g.apply(Op::Sub, x, zero) == x);
  CHECK(g.apply(Op::Mul, x, zero) == zero);
  CHECK(g.apply(Op::Mul, zero, x) == zero);
  CHECK(g.apply(Op::Mul, x, one) == x);
  CHECK(g.apply(Op::Mul, one, x) == x);
  CHECK(g.apply(Op::Div, zero, x) == zero);
  CHECK(g.apply(Op::Div, x, one) == x);
  CHECK(g.size() == 3);  // x, 0, 1 only
}

TEST_CASE("constant folding") {
  ExprGraph g;
  ExprRef r = g.apply(Op::Mul, g.constant(2.0), g.constant(3.0));
  CHECK(g.is_const(r));
  double v;
  CHECK(g.is_const(r, v));
  CHECK(v == 6.0);
}

TEST_CASE("division by literal zero is rejected") {
  ExprGraph g;
  ExprRef x = g.input(0);
  CHECK_THROWS_AS(g.apply(Op::Div, x, g.constant(0.0)), EvalError);
}

TEST_CASE("operation nodes are interned structurally") {
  ExprGraph g;
  ExprRef x = g.input(0), y = g.input(1);
  ExprRef s1 = g.apply(Op::Add, x, y);
  ExprRef s2 = g.apply(Op::Add, x, y);
  CHECK(s1 == s2);
  CHECK(g.apply(Op::Add, y, x) != s1);  // not commutativity-aware
}

TEST_CASE("evaluate (x-y)^2 + (x+y)^2 at x=1, y=2") {
  ExprGraph g;
  ExprRef x = g.input(0), y = g.input(1);
  ExprRef r = g.apply(Op::Add, g.apply(Op::Square, g.apply(Op::Sub, x, y)),
                      g.apply(Op::Square, g.apply(Op::Add, x, y)));
  double v = g.evaluate(r, [](int id) { return id == 0 ? 1.0 : 2.0; });
  CHECK(v == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("evaluate a lone constant") {
  ExprGraph g;
  CHECK(g.evaluate(g.constant(5.0), [](int) { return 0.0; }) == 5.0);
}

TEST_CASE("log of a negative binding is a domain error carrying the node") {
  ExprGraph g;
  ExprRef r = g.apply(Op::Log, g.input(0));
  try {
    g.evaluate(r, [](int) { return -1.0; });
    FAIL("expected EvalError");
  } catch (const EvalError& e) {
    CHECK(e.node_index == r.idx);
  }
}

TEST_CASE("simplified construction matches a reference evaluation at random points") {
  // Random expressions over {+,-,*,neg,square} seeded with constants that
  // trigger every simplification rule.
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    ExprGraph g;
    ExprRef x = g.input(0), y = g.input(1);
    struct Node {
      ExprRef ref;
      std::function<double(double, double)> eval;
    };
    std::vector<Node> pool = {
        {x, [](double a, double) { return a; }},
        {y, [](double, double b) { return b; }},
        {g.constant(0.0), [](double, double) { return 0.0; }},
        {g.constant(1.0), [](double, double) { return 1.0; }},
        {g.constant(2.5), [](double, double) { return 2.5; }},
    };
    std::uniform_int_distribution<int> pick_op(0, 4);
    for (int step = 0; step < 20; ++step) {
      std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
      Node a = pool[pick(rng)];
      Node b = pool[pick(rng)];
      Node out;
      switch (pick_op(rng)) {
        case 0:
          out = {g.apply(Op::Add, a.ref, b.ref),
                 [=](double u, double v) { return a.eval(u, v) + b.eval(u, v); }};
          break;
        case 1:
          out = {g.apply(Op::Sub, a.ref, b.ref),
                 [=](double u, double v) { return a.eval(u, v) - b.eval(u, v); }};
          break;
        case 2:
          out = {g.apply(Op::Mul, a.ref, b.ref),
                 [=](double u, double v) { return a.eval(u, v) * b.eval(u, v); }};
          break;
        case 3:
          out = {g.apply(Op::Neg, a.ref),
                 [=](double u, double v) { return -a.eval(u, v); }};
          break;
        default:
          out = {g.apply(Op::Square, a.ref), [=](double u, double v) {
                   double t = a.eval(u, v);
                   return t * t;
                 }};
      }
      pool.push_back(out);
    }
    double u = unif(rng), v = unif(rng);
    for (const Node& n : pool) {
      double got = g.evaluate(n.ref, [&](int id) { return id == 0 ? u : v; });
      double want = n.eval(u, v);
      double denom = std::max({std::abs(want), 1.0});
      CHECK(std::abs(got - want) / denom < 1e-12);
    }
  }
}

TEST_CASE("appending never disturbs earlier values") {
  ExprGraph g;
  ExprRef x = g.input(0);
  ExprRef r = g.apply(Op::Exp, x);
  double before = g.evaluate(r, [](int) { return 0.5; });
  for (int i = 0; i < 100; ++i) g.apply(Op::Add, r, g.constant(double(i + 2)));
  CHECK(g.evaluate(r, [](int) { return 0.5; }) == before);
}

TEST_CASE("reachable_inputs is ascending and complete") {
  ExprGraph g;
  ExprRef c = g.input(5);
  ExprRef a = g.input(3);
  ExprRef r = g.apply(Op::Mul, g.apply(Op::Add, c, a), a);
  auto ins = g.reachable_inputs(r);
  CHECK(ins == std::vector<int>{3, 5});
}

TEST_CASE("transplant remaps inputs and re-simplifies") {
  ExprGraph src;
  ExprRef x = src.input(0);
  ExprRef r = src.apply(Op::Add, src.apply(Op::Mul, x, src.constant(2.0)), x);
  ExprGraph dst;
  // x -> 0 collapses the whole expression at construction time
  ExprRef zero = dst.constant(0.0);
  ExprRef out = ExprGraph::transplant(src, r, dst, [&](int) { return zero; });
  CHECK(dst.is_const_zero(out));
}

TEST_CASE("dump lists one node per line") {
  ExprGraph g;
  ExprRef r = g.apply(Op::Add, g.input(0), g.constant(2.0));
  std::string d = g.dump(r);
  CHECK(d.find("ADD") != std::string::npos);
  CHECK(std::count(d.begin(), d.end(), '\n') >= 3);
}

}  // TEST_SUITE
