#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "automarg/model.hpp"

namespace automarg {

struct ReversalEvent {
  NodeId v;
  NodeId c;
  std::string pattern;  // e.g. "Normal/Normal"
};

// Frozen conditional of a marginalized node: family and parameter
// expressions snapshotted at removal time, referencing only nodes that were
// still in the model at that point.
struct RecoveryEntry {
  NodeId id;
  std::string name;
  Family family;
  std::vector<ExprRef> params;
};

// LIFO: back() is the top of the stack.
using RecoveryStack = std::vector<RecoveryEntry>;

struct MarginalizeOptions {
  std::vector<std::string> exempt;  // node-name globs never marginalized
  // Called right before and right after each edge reversal (phase_before
  // true/false); used by the joint-preservation checks.
  std::function<void(const GraphicalModel&, NodeId v, NodeId c, bool phase_before)>
      on_reverse;
};

struct MarginalizeResult {
  RecoveryStack stack;
  std::vector<ReversalEvent> log;
};

// Glob match with '*' and '?'.
bool glob_match(const std::string& pattern, const std::string& text);

// True iff some conjugacy pattern row matches the (parent, child) pair
// against the current symbolic structure.
bool conjugate(GraphicalModel& m, NodeId v, NodeId c);

// Reverses edge v -> c in place. Requires conjugate(m, v, c) and that the
// edge is the only v ~> c path; a violation surfaces as a cycle error.
void reverse_edge(GraphicalModel& m, NodeId v, NodeId c);

// Marginalizes every eligible unobserved node (descending topological scan),
// tombstoning removed nodes and recording their conditionals on the stack.
MarginalizeResult marginalize(GraphicalModel& m, const MarginalizeOptions& opts = {});

// Samples marginalized nodes from their frozen conditionals in LIFO order.
// `reduced` must cover all surviving unobserved nodes.
Assignment recover(const GraphicalModel& m, const RecoveryStack& stack,
                   Assignment reduced, std::mt19937_64& rng);

// Non-centered reparameterization: v becomes standard normal and
// mu + sqrt(var) * v is substituted into every dependent expression.
void reparam_noncentered(GraphicalModel& m, NodeId v);

}  // namespace automarg
