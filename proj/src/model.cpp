#include "automarg/model.hpp"

#include <algorithm>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace automarg {

namespace {

// Memoized single-node evaluation against a shared value cache, so repeated
// calls within one sweep touch each graph node at most once.
double eval_memo(const ExprGraph& g, ExprRef root, const ExprGraph::Bindings& bind,
                 std::vector<double>& vals, std::vector<std::uint8_t>& done) {
  vals.resize(g.size(), 0.0);
  done.resize(g.size(), 0);
  std::vector<std::int32_t> stack{root.idx};
  while (!stack.empty()) {
    std::int32_t i = stack.back();
    if (done[i]) {
      stack.pop_back();
      continue;
    }
    const ExprNode& n = g.node(ExprRef{i});
    switch (n.tag) {
      case ExprNode::Tag::Input:
        vals[i] = bind(n.var_id);
        done[i] = 1;
        stack.pop_back();
        break;
      case ExprNode::Tag::Const:
        vals[i] = n.value;
        done[i] = 1;
        stack.pop_back();
        break;
      case ExprNode::Tag::Operation: {
        bool ready = true;
        if (!done[n.a.idx]) {
          stack.push_back(n.a.idx);
          ready = false;
        }
        if (n.b.valid() && !done[n.b.idx]) {
          stack.push_back(n.b.idx);
          ready = false;
        }
        if (!ready) break;
        double a = vals[n.a.idx];
        double b = n.b.valid() ? vals[n.b.idx] : 0.0;
        switch (n.op) {
          case Op::Add: vals[i] = a + b; break;
          case Op::Sub: vals[i] = a - b; break;
          case Op::Mul: vals[i] = a * b; break;
          case Op::Div:
            if (b == 0.0) throw EvalError("division by zero", i);
            vals[i] = a / b;
            break;
          case Op::Neg: vals[i] = -a; break;
          case Op::Square: vals[i] = a * a; break;
          case Op::Sqrt:
            if (a < 0.0) throw EvalError("SQRT of negative value", i);
            vals[i] = std::sqrt(a);
            break;
          case Op::Exp: vals[i] = std::exp(a); break;
          case Op::Log:
            if (a <= 0.0) throw EvalError("LOG of non-positive value", i);
            vals[i] = std::log(a);
            break;
          case Op::PowConst: vals[i] = std::pow(a, n.value); break;
          case Op::Lgamma:
            if (a <= 0.0) throw EvalError("LGAMMA of non-positive value", i);
            vals[i] = std::lgamma(a);
            break;
        }
        done[i] = 1;
        stack.pop_back();
        break;
      }
    }
  }
  return vals[root.idx];
}

}  // namespace

void GraphicalModel::check_live(NodeId id, const char* what) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size() || !nodes_[id].alive)
    throw std::invalid_argument(std::string(what) + ": no such live node");
}

NodeId GraphicalModel::add_node(std::string name, Family family,
                                std::vector<ExprRef> params) {
  if (static_cast<int>(params.size()) != param_arity(family))
    throw std::invalid_argument("parameter arity mismatch for " +
                                std::string(family_name(family)));
  NodeId id = static_cast<NodeId>(nodes_.size());
  ModelNode n;
  n.name = std::move(name);
  n.family = family;
  n.params = std::move(params);
  for (ExprRef p : n.params) {
    for (int v : graph_.reachable_inputs(p)) {
      if (v < 0 || v >= id || !nodes_[v].alive)
        throw std::invalid_argument("parameter expression references nonexistent node " +
                                    std::to_string(v));
    }
  }
  nodes_.push_back(std::move(n));
  recompute_parents(id);
  return id;
}

void GraphicalModel::observe(NodeId id, double value) {
  check_live(id, "observe");
  ModelNode& n = nodes_[id];
  // Bound checks that need parameter values use them only when constant.
  std::vector<double> const_params;
  bool all_const = true;
  for (ExprRef p : n.params) {
    double v;
    if (graph_.is_const(p, v)) const_params.push_back(v);
    else { all_const = false; break; }
  }
  bool ok = all_const ? in_support(n.family, const_params, value)
                      : in_support(n.family, {}, value);
  if (!ok)
    throw std::invalid_argument("observed value " + std::to_string(value) +
                                " outside support of " + family_name(n.family) +
                                " node '" + n.name + "'");
  n.observed = true;
  n.value = value;
}

std::vector<NodeId> GraphicalModel::live_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive) out.push_back(static_cast<NodeId>(i));
  return out;
}

std::vector<NodeId> GraphicalModel::latent_nodes() const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive && !nodes_[i].observed) out.push_back(static_cast<NodeId>(i));
  return out;
}

std::vector<NodeId> GraphicalModel::children(NodeId id) const {
  check_live(id, "children");
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].alive) continue;
    const auto& ps = nodes_[i].parents;
    if (std::find(ps.begin(), ps.end(), id) != ps.end())
      out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

NodeId GraphicalModel::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive && nodes_[i].name == name) return static_cast<NodeId>(i);
  return -1;
}

std::vector<NodeId> GraphicalModel::topo_order() const {
  std::vector<int> indegree(nodes_.size(), 0);
  std::vector<std::vector<NodeId>> kids(nodes_.size());
  std::size_t live = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].alive) continue;
    ++live;
    for (NodeId p : nodes_[i].parents) {
      ++indegree[i];
      kids[p].push_back(static_cast<NodeId>(i));
    }
  }
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].alive && indegree[i] == 0) ready.push(static_cast<NodeId>(i));
  std::vector<NodeId> order;
  order.reserve(live);
  while (!ready.empty()) {
    NodeId id = ready.top();
    ready.pop();
    order.push_back(id);
    for (NodeId c : kids[id])
      if (--indegree[c] == 0) ready.push(c);
  }
  if (order.size() != live)
    throw std::runtime_error("cycle detected in graphical model");
  return order;
}

double GraphicalModel::log_joint(const Assignment& a) const {
  std::vector<ExprRef> roots;
  for (const ModelNode& n : nodes_)
    if (n.alive) roots.insert(roots.end(), n.params.begin(), n.params.end());
  auto bind = [&](int var_id) -> double {
    const ModelNode& n = nodes_.at(var_id);
    if (n.observed) return n.value;
    if (!a.has(var_id))
      throw std::invalid_argument("assignment missing value for node '" + n.name + "'");
    return a.get(var_id);
  };
  std::vector<double> vals;
  std::vector<std::uint8_t> done;
  graph_.evaluate_many(roots, bind, vals, done);

  double total = 0.0;
  std::vector<double> params;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ModelNode& n = nodes_[i];
    if (!n.alive) continue;
    params.clear();
    for (ExprRef p : n.params) params.push_back(vals[p.idx]);
    double x = n.observed ? n.value : bind(static_cast<int>(i));
    total += log_density(n.family, params, x);
  }
  return total;
}

Assignment GraphicalModel::forward_sample(std::mt19937_64& rng,
                                          ObservedMode mode) const {
  Assignment a(nodes_.size());
  std::vector<double> vals;
  std::vector<std::uint8_t> done;
  auto bind = [&](int var_id) -> double {
    if (!a.has(var_id))
      throw std::logic_error("forward_sample visited a node before its parents");
    return a.get(var_id);
  };
  std::vector<double> params;
  for (NodeId id : topo_order()) {
    const ModelNode& n = nodes_[id];
    params.clear();
    for (ExprRef p : n.params)
      params.push_back(eval_memo(graph_, p, bind, vals, done));
    if (n.observed && mode == ObservedMode::Clamp)
      a.set(id, n.value);
    else
      a.set(id, sample(n.family, params, rng));
  }
  return a;
}

void GraphicalModel::recompute_parents(NodeId id) {
  ModelNode& n = nodes_.at(id);
  std::vector<std::uint8_t> seen;
  std::vector<int> inputs;
  for (ExprRef p : n.params) graph_.collect_inputs(p, seen, inputs);
  std::sort(inputs.begin(), inputs.end());
  inputs.erase(std::unique(inputs.begin(), inputs.end()), inputs.end());
  n.parents.assign(inputs.begin(), inputs.end());
}

void GraphicalModel::remove_node(NodeId id) {
  check_live(id, "remove_node");
  if (!children(id).empty())
    throw std::logic_error("remove_node: node '" + nodes_[id].name + "' is not a leaf");
  nodes_[id].alive = false;
}

std::string GraphicalModel::dump() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const ModelNode& n = nodes_[i];
    if (!n.alive) continue;
    os << n.name << " ~ " << family_name(n.family) << "(";
    for (std::size_t j = 0; j < n.params.size(); ++j) {
      if (j) os << ", ";
      double v;
      if (graph_.is_const(n.params[j], v)) os << v;
      else os << "%" << n.params[j].idx;
    }
    os << ")";
    if (!n.parents.empty()) {
      os << " parents=[";
      for (std::size_t j = 0; j < n.parents.size(); ++j) {
        if (j) os << ", ";
        os << nodes_[n.parents[j]].name;
      }
      os << "]";
    }
    if (n.observed) os << " observed=" << n.value;
    os << "\n";
  }
  return os.str();
}

}  // namespace automarg
