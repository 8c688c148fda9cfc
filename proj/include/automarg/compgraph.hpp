#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace automarg {

// Primitive scalar operations. The set is closed over every distribution
// parameter expression and every reversal formula the engine produces.
// Lgamma is included so log-density tapes stay in the same IR.
enum class Op : std::uint8_t {
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Square,
  Sqrt,
  Exp,
  Log,
  PowConst,
  Lgamma,
};

int op_arity(Op op);
const char* op_name(Op op);

// Index of a node within its owning ExprGraph.
struct ExprRef {
  std::int32_t idx = -1;

  bool valid() const { return idx >= 0; }
  friend auto operator<=>(ExprRef, ExprRef) = default;
};

struct ExprNode {
  enum class Tag : std::uint8_t { Input, Const, Operation } tag;
  Op op = Op::Add;
  std::int32_t var_id = -1;  // Input only
  double value = 0.0;        // Const literal, or PowConst exponent
  ExprRef a;
  ExprRef b;  // unset for unary ops
};

class EvalError : public std::runtime_error {
 public:
  EvalError(const std::string& msg, int node)
      : std::runtime_error(msg), node_index(node) {}
  int node_index;
};

// Append-only computation graph. Inputs, constants and operation nodes are
// interned, so structurally equal subexpressions share storage. Existing
// node indices are never invalidated by later appends.
class ExprGraph {
 public:
  using Bindings = std::function<double(int var_id)>;

  ExprRef input(int var_id);
  ExprRef constant(double value);
  ExprRef apply(Op op, ExprRef x);
  ExprRef apply(Op op, ExprRef x, ExprRef y);
  ExprRef pow_const(ExprRef x, double exponent);

  const ExprNode& node(ExprRef r) const { return nodes_.at(r.idx); }
  std::size_t size() const { return nodes_.size(); }

  bool is_const(ExprRef r) const;
  bool is_const(ExprRef r, double& out) const;
  bool is_const_zero(ExprRef r) const;
  bool is_const_one(ExprRef r) const;
  bool is_input(ExprRef r, int var_id) const;

  // Single forward pass over the nodes reachable from `root`; each node is
  // computed exactly once. Domain errors carry the offending node index.
  double evaluate(ExprRef root, const Bindings& bind) const;

  // Evaluates everything reachable from `roots` into `values` (indexed by
  // node id); `computed[i]` marks which entries are meaningful.
  void evaluate_many(std::span<const ExprRef> roots, const Bindings& bind,
                     std::vector<double>& values,
                     std::vector<std::uint8_t>& computed) const;

  // All Input var_ids reachable from `root`, ascending.
  std::vector<int> reachable_inputs(ExprRef root) const;
  void collect_inputs(ExprRef root, std::vector<std::uint8_t>& seen,
                      std::vector<int>& out) const;

  // Rebuilds `root` from `src` inside `dst`, mapping every Input through
  // `map_input`. Simplification and interning re-apply along the way.
  static ExprRef transplant(const ExprGraph& src, ExprRef root, ExprGraph& dst,
                            const std::function<ExprRef(int var_id)>& map_input);

  // One node per line: `%idx = OP %a %b`.
  std::string dump() const;
  std::string dump(ExprRef root) const;

 private:
  struct OpKey {
    Op op;
    std::int32_t a, b;
    std::uint64_t payload;  // PowConst exponent bits
    bool operator==(const OpKey&) const = default;
  };
  struct OpKeyHash {
    std::size_t operator()(const OpKey& k) const;
  };

  ExprRef append(const ExprNode& n);
  ExprRef fold(Op op, double x, double y, double payload);
  void check_ref(ExprRef r, const char* what) const;

  std::vector<ExprNode> nodes_;
  std::unordered_map<int, std::int32_t> input_lookup_;
  std::unordered_map<std::uint64_t, std::int32_t> const_lookup_;
  std::unordered_map<OpKey, std::int32_t, OpKeyHash> op_lookup_;
};

}  // namespace automarg
