#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "automarg/compgraph.hpp"
#include "automarg/dists.hpp"

namespace automarg {

using NodeId = int;

// Values indexed by NodeId; NaN marks "unset".
class Assignment {
 public:
  Assignment() = default;
  explicit Assignment(std::size_t n)
      : values_(n, std::numeric_limits<double>::quiet_NaN()) {}

  double get(NodeId id) const { return values_.at(id); }
  bool has(NodeId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < values_.size() &&
           !std::isnan(values_[id]);
  }
  void set(NodeId id, double v) {
    if (static_cast<std::size_t>(id) >= values_.size())
      values_.resize(id + 1, std::numeric_limits<double>::quiet_NaN());
    values_[id] = v;
  }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
};

struct ModelNode {
  std::string name;
  Family family;
  std::vector<ExprRef> params;   // arity fixed per family
  std::vector<NodeId> parents;   // exactly the Inputs reachable from params
  bool observed = false;
  double value = 0.0;            // observed value
  bool alive = true;             // tombstoned when marginalized out
};

// Directed graphical model over a single shared expression graph. Nodes can
// only reference earlier nodes at construction time, so the parent relation
// starts out acyclic; transformations re-check acyclicity explicitly.
class GraphicalModel {
 public:
  ExprGraph& graph() { return graph_; }
  const ExprGraph& graph() const { return graph_; }

  NodeId add_node(std::string name, Family family, std::vector<ExprRef> params);
  void observe(NodeId id, double value);

  const ModelNode& node(NodeId id) const { return nodes_.at(id); }
  ModelNode& node_mut(NodeId id) { return nodes_.at(id); }
  std::size_t num_nodes() const { return nodes_.size(); }

  std::vector<NodeId> live_nodes() const;
  std::vector<NodeId> latent_nodes() const;  // live and unobserved
  std::vector<NodeId> children(NodeId id) const;
  NodeId find(const std::string& name) const;  // -1 if absent

  // Kahn's algorithm over live nodes, ties broken by ascending NodeId.
  // Throws std::runtime_error on a cycle.
  std::vector<NodeId> topo_order() const;

  // Sum of per-node log densities; observed nodes use their stored values,
  // the assignment must cover every live unobserved node.
  double log_joint(const Assignment& a) const;

  enum class ObservedMode { Sample, Clamp };
  Assignment forward_sample(std::mt19937_64& rng,
                            ObservedMode mode = ObservedMode::Sample) const;

  // Parents := Inputs reachable from the node's parameter expressions.
  void recompute_parents(NodeId id);
  void remove_node(NodeId id);  // tombstone; NodeIds stay stable

  // `name ~ Family(params) [observed=v]`, one node per line.
  std::string dump() const;

 private:
  void check_live(NodeId id, const char* what) const;

  ExprGraph graph_;
  std::vector<ModelNode> nodes_;
};

}  // namespace automarg
