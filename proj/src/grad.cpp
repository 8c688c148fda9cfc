#include "automarg/grad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

namespace automarg {

namespace {

// Builds the log-density expression of one node in the tape graph. `x` and
// `p` are already tape-resident.
ExprRef logpdf_expr(ExprGraph& g, Family f, const std::vector<ExprRef>& p, ExprRef x) {
  auto C = [&](double v) { return g.constant(v); };
  auto add = [&](ExprRef a, ExprRef b) { return g.apply(Op::Add, a, b); };
  auto sub = [&](ExprRef a, ExprRef b) { return g.apply(Op::Sub, a, b); };
  auto mul = [&](ExprRef a, ExprRef b) { return g.apply(Op::Mul, a, b); };
  auto div = [&](ExprRef a, ExprRef b) { return g.apply(Op::Div, a, b); };
  auto lg = [&](ExprRef a) { return g.apply(Op::Lgamma, a); };
  auto lognode = [&](ExprRef a) { return g.apply(Op::Log, a); };

  switch (f) {
    case Family::Normal: {
      ExprRef z2 = g.apply(Op::Square, sub(x, p[0]));
      return sub(sub(C(-0.5 * std::log(2.0 * std::numbers::pi)),
                     mul(C(0.5), lognode(p[1]))),
                 div(z2, mul(C(2.0), p[1])));
    }
    case Family::HalfCauchy: {
      ExprRef z = div(x, p[0]);
      return sub(sub(C(std::log(2.0 / std::numbers::pi)), lognode(p[0])),
                 lognode(add(C(1.0), g.apply(Op::Square, z))));
    }
    case Family::Cauchy: {
      ExprRef z = div(sub(x, p[0]), p[1]);
      return sub(sub(C(-std::log(std::numbers::pi)), lognode(p[1])),
                 lognode(add(C(1.0), g.apply(Op::Square, z))));
    }
    case Family::Beta: {
      ExprRef norm = sub(sub(lg(add(p[0], p[1])), lg(p[0])), lg(p[1]));
      return add(norm, add(mul(sub(p[0], C(1.0)), lognode(x)),
                           mul(sub(p[1], C(1.0)), lognode(sub(C(1.0), x)))));
    }
    case Family::Binomial: {
      ExprRef n = p[0], prob = p[1];
      ExprRef choose = sub(sub(lg(add(n, C(1.0))), lg(add(x, C(1.0)))),
                           lg(add(sub(n, x), C(1.0))));
      return add(choose, add(mul(x, lognode(prob)),
                             mul(sub(n, x), lognode(sub(C(1.0), prob)))));
    }
    case Family::Bernoulli:
      return add(mul(x, lognode(p[0])),
                 mul(sub(C(1.0), x), lognode(sub(C(1.0), p[0]))));
    case Family::Gamma:
      return add(sub(mul(p[0], lognode(p[1])), lg(p[0])),
                 sub(mul(sub(p[0], C(1.0)), lognode(x)), mul(p[1], x)));
    case Family::Exponential:
      return sub(lognode(p[0]), mul(p[0], x));
    case Family::Uniform:
      return g.apply(Op::Neg, lognode(sub(p[1], p[0])));
    case Family::Pareto:
      return sub(add(lognode(p[1]), mul(p[1], lognode(p[0]))),
                 mul(add(p[1], C(1.0)), lognode(x)));
    case Family::BetaBinomial: {
      ExprRef n = p[0], a = p[1], b = p[2];
      ExprRef choose = sub(sub(lg(add(n, C(1.0))), lg(add(x, C(1.0)))),
                           lg(add(sub(n, x), C(1.0))));
      ExprRef num = sub(add(lg(add(x, a)), lg(add(sub(n, x), b))), lg(add(n, add(a, b))));
      ExprRef norm = sub(lg(add(a, b)), add(lg(a), lg(b)));
      return add(choose, add(num, norm));
    }
    case Family::CompoundGamma: {
      ExprRef a = p[0], b = p[1], q = p[2];
      ExprRef norm = sub(lg(add(a, b)), add(lg(a), lg(b)));
      return add(add(norm, mul(b, lognode(q))),
                 sub(mul(sub(a, C(1.0)), lognode(x)),
                     mul(add(a, b), lognode(add(q, x)))));
    }
  }
  throw std::logic_error("logpdf_expr: unhandled family");
}

struct Unconstrained {
  ExprRef x;    // constrained value
  ExprRef jac;  // log |d constrained / d unconstrained|
};

Unconstrained apply_bijection(ExprGraph& g, const Bijection& bij, ExprRef u) {
  auto C = [&](double v) { return g.constant(v); };
  switch (bij.kind) {
    case Bijection::Kind::Identity:
      return {u, C(0.0)};
    case Bijection::Kind::Log:
      return {g.apply(Op::Exp, u), u};
    case Bijection::Kind::Logit01: {
      ExprRef s = g.apply(Op::Div, C(1.0),
                          g.apply(Op::Add, C(1.0), g.apply(Op::Exp, g.apply(Op::Neg, u))));
      ExprRef jac = g.apply(Op::Add, g.apply(Op::Log, s),
                            g.apply(Op::Log, g.apply(Op::Sub, C(1.0), s)));
      return {s, jac};
    }
    case Bijection::Kind::LogitScaled: {
      ExprRef s = g.apply(Op::Div, C(1.0),
                          g.apply(Op::Add, C(1.0), g.apply(Op::Exp, g.apply(Op::Neg, u))));
      ExprRef x = g.apply(Op::Add, C(bij.a), g.apply(Op::Mul, C(bij.b - bij.a), s));
      ExprRef jac = g.apply(
          Op::Add, C(std::log(bij.b - bij.a)),
          g.apply(Op::Add, g.apply(Op::Log, s),
                  g.apply(Op::Log, g.apply(Op::Sub, C(1.0), s))));
      return {x, jac};
    }
    case Bijection::Kind::LogShift:
      return {g.apply(Op::Add, C(bij.a), g.apply(Op::Exp, u)), u};
  }
  throw std::logic_error("apply_bijection: unhandled kind");
}

}  // namespace

LogDensityFn build_logdensity(const GraphicalModel& m) {
  LogDensityFn fn;
  ExprGraph tape;
  const ExprGraph& src = m.graph();

  std::vector<NodeId> order = m.topo_order();
  for (NodeId id : order) {
    const ModelNode& n = m.node(id);
    if (!n.observed && is_discrete(n.family))
      throw std::invalid_argument("node '" + n.name +
                                  "' is discrete and unobserved; marginalize or "
                                  "observe it before gradient-based sampling");
  }

  // Constrained value of each live node as a tape expression.
  std::unordered_map<NodeId, ExprRef> val;
  auto map_input = [&](int var_id) -> ExprRef {
    auto it = val.find(var_id);
    if (it == val.end())
      throw std::logic_error("tape build hit an unresolved parent reference");
    return it->second;
  };

  ExprRef total = tape.constant(0.0);
  std::vector<ExprRef> constrained;
  for (NodeId id : order) {
    const ModelNode& n = m.node(id);
    std::vector<ExprRef> p;
    p.reserve(n.params.size());
    for (ExprRef pe : n.params)
      p.push_back(ExprGraph::transplant(src, pe, tape, map_input));

    ExprRef x;
    if (n.observed) {
      x = tape.constant(n.value);
    } else {
      // Support bounds must be numeric so the bijection is fixed at build
      // time; evaluate the source expressions where constant.
      std::vector<double> pv(n.params.size(), 1.0);
      for (std::size_t i = 0; i < n.params.size(); ++i)
        src.is_const(n.params[i], pv[i]);
      if (n.family == Family::Uniform &&
          (!src.is_const(n.params[0]) || !src.is_const(n.params[1])))
        throw std::invalid_argument("node '" + n.name +
                                    "' has non-constant Uniform bounds");
      if (n.family == Family::Pareto && !src.is_const(n.params[0]))
        throw std::invalid_argument("node '" + n.name +
                                    "' has a non-constant Pareto scale");
      Bijection bij = unconstraining(n.family, pv);

      int k = static_cast<int>(fn.latent_ids_.size());
      auto uc = apply_bijection(tape, bij, tape.input(k));
      x = uc.x;
      total = tape.apply(Op::Add, total, uc.jac);
      fn.latent_ids_.push_back(id);
      fn.latent_names_.push_back(n.name);
      constrained.push_back(x);
    }
    val[id] = x;
    total = tape.apply(Op::Add, total, logpdf_expr(tape, n.family, p, x));
  }

  // Flatten the reachable part of the tape graph, keeping relative order so
  // one forward sweep computes everything.
  std::vector<ExprRef> roots;
  roots.push_back(total);
  for (ExprRef c : constrained) roots.push_back(c);
  std::vector<std::int32_t> remap(tape.size(), -1);
  {
    std::vector<std::uint8_t> seen(tape.size(), 0);
    std::vector<ExprRef> stack(roots);
    while (!stack.empty()) {
      ExprRef r = stack.back();
      stack.pop_back();
      if (seen[r.idx]) continue;
      seen[r.idx] = 1;
      const ExprNode& node = tape.node(r);
      if (node.tag == ExprNode::Tag::Operation) {
        stack.push_back(node.a);
        if (op_arity(node.op) == 2) stack.push_back(node.b);
      }
    }
    for (std::size_t i = 0; i < tape.size(); ++i) {
      if (!seen[i]) continue;
      const ExprNode& node = tape.node(ExprRef{static_cast<std::int32_t>(i)});
      LogDensityFn::TapeOp op;
      switch (node.tag) {
        case ExprNode::Tag::Input:
          op.tag = 0;
          op.a = node.var_id;
          break;
        case ExprNode::Tag::Const:
          op.tag = 1;
          op.payload = node.value;
          break;
        case ExprNode::Tag::Operation:
          op.tag = 2;
          op.op = node.op;
          op.a = remap[node.a.idx];
          if (op_arity(node.op) == 2) op.b = remap[node.b.idx];
          if (node.op == Op::PowConst) op.payload = node.value;
          break;
      }
      remap[i] = static_cast<std::int32_t>(fn.ops_.size());
      fn.ops_.push_back(op);
    }
  }
  fn.root_ = remap[total.idx];
  for (ExprRef c : constrained) fn.constrained_pos_.push_back(remap[c.idx]);
  return fn;
}

void LogDensityFn::forward(std::span<const double> u, GradWorkspace& ws) const {
  ws.values.resize(ops_.size());
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const TapeOp& t = ops_[i];
    double r;
    if (t.tag == 0) {
      r = u[t.a];
    } else if (t.tag == 1) {
      r = t.payload;
    } else {
      double a = ws.values[t.a];
      double b = t.b >= 0 ? ws.values[t.b] : 0.0;
      switch (t.op) {
        case Op::Add: r = a + b; break;
        case Op::Sub: r = a - b; break;
        case Op::Mul: r = a * b; break;
        case Op::Div: r = a / b; break;
        case Op::Neg: r = -a; break;
        case Op::Square: r = a * a; break;
        case Op::Sqrt: r = std::sqrt(a); break;
        case Op::Exp: r = std::exp(a); break;
        case Op::Log: r = std::log(a); break;
        case Op::PowConst: r = std::pow(a, t.payload); break;
        case Op::Lgamma: r = std::lgamma(a); break;
        default: r = std::numeric_limits<double>::quiet_NaN();
      }
    }
    ws.values[i] = r;
  }
}

double LogDensityFn::value(std::span<const double> u, GradWorkspace& ws) const {
  forward(u, ws);
  return ws.values[root_];
}

double LogDensityFn::value_and_grad(std::span<const double> u, std::span<double> grad,
                                    GradWorkspace& ws) const {
  forward(u, ws);
  double result = ws.values[root_];
  ws.adjoints.assign(ops_.size(), 0.0);
  ws.adjoints[root_] = 1.0;
  std::fill(grad.begin(), grad.end(), 0.0);
  if (!std::isfinite(result)) return result;

  for (std::size_t i = ops_.size(); i-- > 0;) {
    double adj = ws.adjoints[i];
    if (adj == 0.0) continue;
    const TapeOp& t = ops_[i];
    if (t.tag == 0) {
      grad[t.a] += adj;
      continue;
    }
    if (t.tag == 1) continue;
    double a = ws.values[t.a];
    switch (t.op) {
      case Op::Add:
        ws.adjoints[t.a] += adj;
        ws.adjoints[t.b] += adj;
        break;
      case Op::Sub:
        ws.adjoints[t.a] += adj;
        ws.adjoints[t.b] -= adj;
        break;
      case Op::Mul:
        ws.adjoints[t.a] += adj * ws.values[t.b];
        ws.adjoints[t.b] += adj * a;
        break;
      case Op::Div: {
        double b = ws.values[t.b];
        ws.adjoints[t.a] += adj / b;
        ws.adjoints[t.b] -= adj * a / (b * b);
        break;
      }
      case Op::Neg: ws.adjoints[t.a] -= adj; break;
      case Op::Square: ws.adjoints[t.a] += adj * 2.0 * a; break;
      case Op::Sqrt: ws.adjoints[t.a] += adj * 0.5 / ws.values[i]; break;
      case Op::Exp: ws.adjoints[t.a] += adj * ws.values[i]; break;
      case Op::Log: ws.adjoints[t.a] += adj / a; break;
      case Op::PowConst:
        ws.adjoints[t.a] += adj * t.payload * std::pow(a, t.payload - 1.0);
        break;
      case Op::Lgamma: ws.adjoints[t.a] += adj * digamma(a); break;
    }
  }
  return result;
}

std::vector<double> LogDensityFn::constrain(std::span<const double> u,
                                            GradWorkspace& ws) const {
  forward(u, ws);
  std::vector<double> out;
  out.reserve(constrained_pos_.size());
  for (std::int32_t pos : constrained_pos_) out.push_back(ws.values[pos]);
  return out;
}

double gradient_check(const LogDensityFn& fn, std::span<const double> point, double h) {
  GradWorkspace ws;
  std::vector<double> grad(fn.dim());
  fn.value_and_grad(point, grad, ws);
  std::vector<double> x(point.begin(), point.end());
  double worst = 0.0;
  for (int i = 0; i < fn.dim(); ++i) {
    double orig = x[i];
    x[i] = orig + h;
    double hi = fn.value(x, ws);
    x[i] = orig - h;
    double lo = fn.value(x, ws);
    x[i] = orig;
    double fd = (hi - lo) / (2.0 * h);
    double denom = std::max({std::abs(grad[i]), std::abs(fd), 1.0});
    worst = std::max(worst, std::abs(grad[i] - fd) / denom);
  }
  return worst;
}

}  // namespace automarg
