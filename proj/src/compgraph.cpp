#include "automarg/compgraph.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace automarg {

int op_arity(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
      return 2;
    default:
      return 1;
  }
}

const char* op_name(Op op) {
  switch (op) {
    case Op::Add: return "ADD";
    case Op::Sub: return "SUB";
    case Op::Mul: return "MUL";
    case Op::Div: return "DIV";
    case Op::Neg: return "NEG";
    case Op::Square: return "SQUARE";
    case Op::Sqrt: return "SQRT";
    case Op::Exp: return "EXP";
    case Op::Log: return "LOG";
    case Op::PowConst: return "POW_CONST";
    case Op::Lgamma: return "LGAMMA";
  }
  return "?";
}

namespace {

std::uint64_t bits_of(double v) {
  std::uint64_t u;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

double apply_scalar(Op op, double x, double y, double payload, int node_idx) {
  switch (op) {
    case Op::Add: return x + y;
    case Op::Sub: return x - y;
    case Op::Mul: return x * y;
    case Op::Div:
      if (y == 0.0) throw EvalError("division by zero", node_idx);
      return x / y;
    case Op::Neg: return -x;
    case Op::Square: return x * x;
    case Op::Sqrt:
      if (x < 0.0) throw EvalError("SQRT of negative value", node_idx);
      return std::sqrt(x);
    case Op::Exp: return std::exp(x);
    case Op::Log:
      if (x <= 0.0) throw EvalError("LOG of non-positive value", node_idx);
      return std::log(x);
    case Op::PowConst: return std::pow(x, payload);
    case Op::Lgamma:
      if (x <= 0.0) throw EvalError("LGAMMA of non-positive value", node_idx);
      return std::lgamma(x);
  }
  throw EvalError("unknown op", node_idx);
}

}  // namespace

std::size_t ExprGraph::OpKeyHash::operator()(const OpKey& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.op);
  auto mix = [&h](std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  };
  mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.a)));
  mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(k.b)));
  mix(k.payload);
  return static_cast<std::size_t>(h);
}

void ExprGraph::check_ref(ExprRef r, const char* what) const {
  if (!r.valid() || static_cast<std::size_t>(r.idx) >= nodes_.size())
    throw std::invalid_argument(std::string("invalid ExprRef for ") + what);
}

ExprRef ExprGraph::append(const ExprNode& n) {
  nodes_.push_back(n);
  return ExprRef{static_cast<std::int32_t>(nodes_.size() - 1)};
}

ExprRef ExprGraph::input(int var_id) {
  auto it = input_lookup_.find(var_id);
  if (it != input_lookup_.end()) return ExprRef{it->second};
  ExprNode n{ExprNode::Tag::Input};
  n.var_id = var_id;
  ExprRef r = append(n);
  input_lookup_.emplace(var_id, r.idx);
  return r;
}

ExprRef ExprGraph::constant(double value) {
  if (!std::isfinite(value))
    throw std::invalid_argument("constant must be finite");
  if (value == 0.0) value = 0.0;  // canonicalize -0.0
  auto it = const_lookup_.find(bits_of(value));
  if (it != const_lookup_.end()) return ExprRef{it->second};
  ExprNode n{ExprNode::Tag::Const};
  n.value = value;
  ExprRef r = append(n);
  const_lookup_.emplace(bits_of(value), r.idx);
  return r;
}

bool ExprGraph::is_const(ExprRef r) const {
  double dummy;
  return is_const(r, dummy);
}

bool ExprGraph::is_const(ExprRef r, double& out) const {
  check_ref(r, "is_const");
  const ExprNode& n = nodes_[r.idx];
  if (n.tag != ExprNode::Tag::Const) return false;
  out = n.value;
  return true;
}

bool ExprGraph::is_const_zero(ExprRef r) const {
  double v;
  return is_const(r, v) && v == 0.0;
}

bool ExprGraph::is_const_one(ExprRef r) const {
  double v;
  return is_const(r, v) && v == 1.0;
}

bool ExprGraph::is_input(ExprRef r, int var_id) const {
  check_ref(r, "is_input");
  const ExprNode& n = nodes_[r.idx];
  return n.tag == ExprNode::Tag::Input && n.var_id == var_id;
}

ExprRef ExprGraph::fold(Op op, double x, double y, double payload) {
  double v = apply_scalar(op, x, y, payload, -1);
  if (!std::isfinite(v)) throw EvalError("constant folding produced a non-finite value", -1);
  return constant(v);
}

ExprRef ExprGraph::apply(Op op, ExprRef x) {
  if (op_arity(op) != 1) throw std::invalid_argument("binary op given one operand");
  check_ref(x, op_name(op));
  double cx;
  if (is_const(x, cx)) return fold(op, cx, 0.0, 0.0);
  if (op == Op::Neg) {
    // NEG(NEG(x)) -> x
    const ExprNode& n = nodes_[x.idx];
    if (n.tag == ExprNode::Tag::Operation && n.op == Op::Neg) return n.a;
  }
  ExprNode n{ExprNode::Tag::Operation};
  n.op = op;
  n.a = x;
  OpKey key{op, x.idx, -1, 0};
  auto it = op_lookup_.find(key);
  if (it != op_lookup_.end()) return ExprRef{it->second};
  ExprRef r = append(n);
  op_lookup_.emplace(key, r.idx);
  return r;
}

ExprRef ExprGraph::pow_const(ExprRef x, double exponent) {
  check_ref(x, "POW_CONST");
  if (!std::isfinite(exponent))
    throw std::invalid_argument("POW_CONST exponent must be finite");
  double cx;
  if (is_const(x, cx)) return fold(Op::PowConst, cx, 0.0, exponent);
  if (exponent == 1.0) return x;
  if (exponent == 0.0) return constant(1.0);
  ExprNode n{ExprNode::Tag::Operation};
  n.op = Op::PowConst;
  n.a = x;
  n.value = exponent;
  OpKey key{Op::PowConst, x.idx, -1, bits_of(exponent)};
  auto it = op_lookup_.find(key);
  if (it != op_lookup_.end()) return ExprRef{it->second};
  ExprRef r = append(n);
  op_lookup_.emplace(key, r.idx);
  return r;
}

ExprRef ExprGraph::apply(Op op, ExprRef x, ExprRef y) {
  if (op_arity(op) != 2) throw std::invalid_argument("unary op given two operands");
  check_ref(x, op_name(op));
  check_ref(y, op_name(op));
  double cx, cy;
  bool kx = is_const(x, cx), ky = is_const(y, cy);
  if (kx && ky) return fold(op, cx, cy, 0.0);

  // Literal zero/one rules keep reversal formulas small and keep symbolic
  // zeros recognizable as the interned Const(0) node.
  switch (op) {
    case Op::Add:
      if (kx && cx == 0.0) return y;
      if (ky && cy == 0.0) return x;
      break;
    case Op::Sub:
      if (ky && cy == 0.0) return x;
      if (x == y) return constant(0.0);
      break;
    case Op::Mul:
      if ((kx && cx == 0.0) || (ky && cy == 0.0)) return constant(0.0);
      if (kx && cx == 1.0) return y;
      if (ky && cy == 1.0) return x;
      break;
    case Op::Div:
      if (ky && cy == 0.0) throw EvalError("division by literal zero", -1);
      if (kx && cx == 0.0) return constant(0.0);
      if (ky && cy == 1.0) return x;
      break;
    default:
      break;
  }
  ExprNode n{ExprNode::Tag::Operation};
  n.op = op;
  n.a = x;
  n.b = y;
  OpKey key{op, x.idx, y.idx, 0};
  auto it = op_lookup_.find(key);
  if (it != op_lookup_.end()) return ExprRef{it->second};
  ExprRef r = append(n);
  op_lookup_.emplace(key, r.idx);
  return r;
}

void ExprGraph::evaluate_many(std::span<const ExprRef> roots, const Bindings& bind,
                              std::vector<double>& values,
                              std::vector<std::uint8_t>& computed) const {
  values.assign(nodes_.size(), 0.0);
  computed.assign(nodes_.size(), 0);
  // Mark reachable nodes.
  std::vector<std::int32_t> stack;
  for (ExprRef r : roots) {
    check_ref(r, "evaluate");
    stack.push_back(r.idx);
  }
  while (!stack.empty()) {
    std::int32_t i = stack.back();
    stack.pop_back();
    if (computed[i]) continue;
    computed[i] = 1;
    const ExprNode& n = nodes_[i];
    if (n.tag == ExprNode::Tag::Operation) {
      stack.push_back(n.a.idx);
      if (n.b.valid()) stack.push_back(n.b.idx);
    }
  }
  // Forward pass in topological (index) order.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!computed[i]) continue;
    const ExprNode& n = nodes_[i];
    switch (n.tag) {
      case ExprNode::Tag::Input:
        values[i] = bind(n.var_id);
        break;
      case ExprNode::Tag::Const:
        values[i] = n.value;
        break;
      case ExprNode::Tag::Operation: {
        double a = values[n.a.idx];
        double b = n.b.valid() ? values[n.b.idx] : 0.0;
        values[i] = apply_scalar(n.op, a, b, n.value, static_cast<int>(i));
        break;
      }
    }
  }
}

double ExprGraph::evaluate(ExprRef root, const Bindings& bind) const {
  std::vector<double> values;
  std::vector<std::uint8_t> computed;
  ExprRef roots[1] = {root};
  evaluate_many(roots, bind, values, computed);
  return values[root.idx];
}

void ExprGraph::collect_inputs(ExprRef root, std::vector<std::uint8_t>& seen,
                               std::vector<int>& out) const {
  check_ref(root, "collect_inputs");
  seen.resize(nodes_.size(), 0);
  std::vector<std::int32_t> stack{root.idx};
  while (!stack.empty()) {
    std::int32_t i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = 1;
    const ExprNode& n = nodes_[i];
    if (n.tag == ExprNode::Tag::Input) {
      out.push_back(n.var_id);
    } else if (n.tag == ExprNode::Tag::Operation) {
      stack.push_back(n.a.idx);
      if (n.b.valid()) stack.push_back(n.b.idx);
    }
  }
}

std::vector<int> ExprGraph::reachable_inputs(ExprRef root) const {
  std::vector<std::uint8_t> seen;
  std::vector<int> out;
  collect_inputs(root, seen, out);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExprRef ExprGraph::transplant(const ExprGraph& src, ExprRef root, ExprGraph& dst,
                              const std::function<ExprRef(int var_id)>& map_input) {
  src.check_ref(root, "transplant");
  std::vector<std::int32_t> mapped(src.nodes_.size(), -1);
  // Iterative post-order rebuild.
  std::vector<std::int32_t> order;
  {
    std::vector<std::uint8_t> seen(src.nodes_.size(), 0);
    std::vector<std::int32_t> stack{root.idx};
    while (!stack.empty()) {
      std::int32_t i = stack.back();
      stack.pop_back();
      if (seen[i]) continue;
      seen[i] = 1;
      order.push_back(i);
      const ExprNode& n = src.nodes_[i];
      if (n.tag == ExprNode::Tag::Operation) {
        stack.push_back(n.a.idx);
        if (n.b.valid()) stack.push_back(n.b.idx);
      }
    }
    std::sort(order.begin(), order.end());  // ascending index = topological
  }
  for (std::int32_t i : order) {
    const ExprNode n = src.nodes_[i];  // by value: dst may alias src and grow
    ExprRef r;
    switch (n.tag) {
      case ExprNode::Tag::Input:
        r = map_input(n.var_id);
        break;
      case ExprNode::Tag::Const:
        r = dst.constant(n.value);
        break;
      case ExprNode::Tag::Operation: {
        ExprRef a{mapped[n.a.idx]};
        if (n.op == Op::PowConst) {
          r = dst.pow_const(a, n.value);
        } else if (n.b.valid()) {
          r = dst.apply(n.op, a, ExprRef{mapped[n.b.idx]});
        } else {
          r = dst.apply(n.op, a);
        }
        break;
      }
    }
    mapped[i] = r.idx;
  }
  return ExprRef{mapped[root.idx]};
}

std::string ExprGraph::dump() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ExprNode& n = nodes_[i];
    os << "%" << i << " = ";
    switch (n.tag) {
      case ExprNode::Tag::Input:
        os << "INPUT x" << n.var_id;
        break;
      case ExprNode::Tag::Const:
        os << "CONST " << n.value;
        break;
      case ExprNode::Tag::Operation:
        os << op_name(n.op);
        if (n.op == Op::PowConst) os << "(" << n.value << ")";
        os << " %" << n.a.idx;
        if (n.b.valid()) os << " %" << n.b.idx;
        break;
    }
    os << "\n";
  }
  return os.str();
}

std::string ExprGraph::dump(ExprRef root) const {
  check_ref(root, "dump");
  std::vector<std::uint8_t> seen(nodes_.size(), 0);
  std::vector<std::int32_t> stack{root.idx};
  while (!stack.empty()) {
    std::int32_t i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = 1;
    const ExprNode& n = nodes_[i];
    if (n.tag == ExprNode::Tag::Operation) {
      stack.push_back(n.a.idx);
      if (n.b.valid()) stack.push_back(n.b.idx);
    }
  }
  std::ostringstream os;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!seen[i]) continue;
    const ExprNode& n = nodes_[i];
    os << "%" << i << " = ";
    switch (n.tag) {
      case ExprNode::Tag::Input:
        os << "INPUT x" << n.var_id;
        break;
      case ExprNode::Tag::Const:
        os << "CONST " << n.value;
        break;
      case ExprNode::Tag::Operation:
        os << op_name(n.op);
        if (n.op == Op::PowConst) os << "(" << n.value << ")";
        os << " %" << n.a.idx;
        if (n.b.valid()) os << " %" << n.b.idx;
        break;
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace automarg
