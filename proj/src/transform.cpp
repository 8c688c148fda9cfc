#include "automarg/transform.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include "automarg/analysis.hpp"

namespace automarg {

bool glob_match(const std::string& pattern, const std::string& text) {
  // iterative '*'/'?' matcher with backtracking
  std::size_t p = 0, t = 0, star = std::string::npos, mark = 0;
  while (t < text.size()) {
    if (p < pattern.size() && (pattern[p] == '?' || pattern[p] == text[t])) {
      ++p;
      ++t;
    } else if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = t;
    } else if (star != std::string::npos) {
      p = star + 1;
      t = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

namespace {

bool is_parent(const GraphicalModel& m, NodeId v, NodeId c) {
  const auto& ps = m.node(c).parents;
  return std::find(ps.begin(), ps.end(), v) != ps.end();
}

void assert_acyclic(GraphicalModel& m, NodeId v, NodeId c) {
  try {
    m.topo_order();
  } catch (const std::runtime_error&) {
    throw std::logic_error("reverse(" + m.node(v).name + " -> " + m.node(c).name +
                           ") formed a cycle; children must be reversed in "
                           "topological order");
  }
}

}  // namespace

bool conjugate(GraphicalModel& m, NodeId v, NodeId c) {
  if (!is_parent(m, v, c)) return false;
  const ModelNode& nv = m.node(v);
  const ModelNode& nc = m.node(c);
  Analyzer an(m.graph());
  switch (nv.family) {
    case Family::Normal:
      return nc.family == Family::Normal && an.affine(nc.params[0], v) &&
             !an.dependent(nc.params[1], v);
    case Family::Gamma:
      if (nc.family == Family::Gamma)
        return an.linear(nc.params[1], v) && !an.dependent(nc.params[0], v);
      if (nc.family == Family::Exponential) return an.linear(nc.params[0], v);
      return false;
    case Family::Beta:
      if (nc.family == Family::Binomial)
        return m.graph().is_input(nc.params[1], v) && !an.dependent(nc.params[0], v);
      if (nc.family == Family::Bernoulli) return m.graph().is_input(nc.params[0], v);
      return false;
    default:
      return false;
  }
}

void reverse_edge(GraphicalModel& m, NodeId v, NodeId c) {
  if (!conjugate(m, v, c))
    throw std::logic_error("reverse requested for a non-conjugate edge " +
                           m.node(v).name + " -> " + m.node(c).name);
  ExprGraph& g = m.graph();
  Analyzer an(g);
  ModelNode& nv = m.node_mut(v);
  ModelNode& nc = m.node_mut(c);
  ExprRef x_c = g.input(c);

  if (nv.family == Family::Normal) {
    ExprRef mu_v = nv.params[0], var_v = nv.params[1];
    ExprRef mu_c = nc.params[0], var_c = nc.params[1];
    auto [p, q] = an.affine_coeff(mu_c, v);
    ExprRef var_c_new = g.apply(Op::Add, g.apply(Op::Mul, g.apply(Op::Square, p), var_v), var_c);
    ExprRef k = g.apply(Op::Div, g.apply(Op::Mul, var_v, p), var_c_new);
    ExprRef mu_c_new = g.apply(Op::Add, g.apply(Op::Mul, p, mu_v), q);
    ExprRef mu_v_new =
        g.apply(Op::Add, mu_v, g.apply(Op::Mul, k, g.apply(Op::Sub, x_c, mu_c_new)));
    ExprRef var_v_new =
        g.apply(Op::Mul, g.apply(Op::Sub, g.constant(1.0), g.apply(Op::Mul, k, p)), var_v);
    nc.params = {mu_c_new, var_c_new};
    nv.params = {mu_v_new, var_v_new};
  } else if (nv.family == Family::Beta) {
    ExprRef alpha_v = nv.params[0], beta_v = nv.params[1];
    ExprRef n_c = nc.family == Family::Bernoulli ? g.constant(1.0) : nc.params[0];
    nv.params = {g.apply(Op::Add, alpha_v, x_c),
                 g.apply(Op::Add, beta_v, g.apply(Op::Sub, n_c, x_c))};
    nc.family = Family::BetaBinomial;
    nc.params = {n_c, alpha_v, beta_v};
  } else if (nv.family == Family::Gamma) {
    ExprRef alpha_v = nv.params[0], beta_v = nv.params[1];
    ExprRef alpha_c, beta_c;
    if (nc.family == Family::Exponential) {
      alpha_c = g.constant(1.0);
      beta_c = nc.params[0];
    } else {
      alpha_c = nc.params[0];
      beta_c = nc.params[1];
    }
    auto [p, q] = an.affine_coeff(beta_c, v);
    if (!g.is_const_zero(q))
      throw std::logic_error("gamma-rate relationship is affine but not linear");
    nv.params = {g.apply(Op::Add, alpha_v, alpha_c),
                 g.apply(Op::Add, beta_v, g.apply(Op::Mul, p, x_c))};
    nc.family = Family::CompoundGamma;
    nc.params = {alpha_c, alpha_v, g.apply(Op::Div, beta_v, p)};
  } else {
    throw std::logic_error("unsupported family pair for edge reversal");
  }

  m.recompute_parents(v);
  m.recompute_parents(c);
  assert_acyclic(m, v, c);
}

MarginalizeResult marginalize(GraphicalModel& m, const MarginalizeOptions& opts) {
  MarginalizeResult result;
  std::vector<NodeId> order = m.topo_order();
  std::unordered_map<NodeId, int> pos;
  for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = static_cast<int>(i);

  auto exempt = [&](const std::string& name) {
    for (const std::string& pat : opts.exempt)
      if (glob_match(pat, name)) return true;
    return false;
  };

  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeId v = *it;
    const ModelNode& nv = m.node(v);
    if (nv.observed || exempt(nv.name)) continue;

    std::vector<NodeId> kids = m.children(v);
    bool all_conjugate = std::all_of(kids.begin(), kids.end(),
                                     [&](NodeId c) { return conjugate(m, v, c); });
    if (!all_conjugate) continue;

    std::sort(kids.begin(), kids.end(),
              [&](NodeId a, NodeId b) { return pos.at(a) < pos.at(b); });
    for (NodeId c : kids) {
      // Reversals mutate f_c, so re-check against the current structure.
      if (!conjugate(m, v, c))
        throw std::logic_error("conjugacy lost mid-marginalization for node " +
                               m.node(v).name);
      std::string pattern = std::string(family_name(m.node(v).family)) + "/" +
                            family_name(m.node(c).family);
      if (opts.on_reverse) opts.on_reverse(m, v, c, true);
      reverse_edge(m, v, c);
      if (opts.on_reverse) opts.on_reverse(m, v, c, false);
      result.log.push_back({v, c, std::move(pattern)});
    }
    result.stack.push_back({v, nv.name, nv.family, nv.params});
    m.remove_node(v);
  }
  return result;
}

Assignment recover(const GraphicalModel& m, const RecoveryStack& stack,
                   Assignment reduced, std::mt19937_64& rng) {
  auto bind = [&](int var_id) -> double {
    if (reduced.has(var_id)) return reduced.get(var_id);
    const ModelNode& n = m.node(var_id);
    if (n.alive && n.observed) return n.value;
    throw std::invalid_argument("recover: missing value for node '" + n.name + "'");
  };
  std::vector<double> params;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
    params.clear();
    for (ExprRef p : it->params)
      params.push_back(m.graph().evaluate(p, bind));
    reduced.set(it->id, sample(it->family, params, rng));
  }
  return reduced;
}

void reparam_noncentered(GraphicalModel& m, NodeId v) {
  const ModelNode& nv = m.node(v);
  if (nv.observed) throw std::invalid_argument("cannot reparameterize an observed node");
  if (nv.family != Family::Normal)
    throw std::invalid_argument("non-centered reparameterization requires a Normal node");
  ExprGraph& g = m.graph();
  ExprRef mu = nv.params[0], var = nv.params[1];
  ExprRef sub =
      g.apply(Op::Add, mu, g.apply(Op::Mul, g.apply(Op::Sqrt, var), g.input(v)));

  auto map_input = [&](int var_id) {
    return var_id == v ? sub : g.input(var_id);
  };
  for (NodeId id : m.live_nodes()) {
    if (id == v) continue;
    ModelNode& n = m.node_mut(id);
    bool touched = false;
    for (ExprRef& p : n.params) {
      ExprRef np = ExprGraph::transplant(g, p, g, map_input);
      touched = touched || !(np == p);
      p = np;
    }
    if (touched) m.recompute_parents(id);
  }
  ModelNode& node = m.node_mut(v);
  node.params = {g.constant(0.0), g.constant(1.0)};
  m.recompute_parents(v);
  m.topo_order();  // sanity: still acyclic
}

}  // namespace automarg
