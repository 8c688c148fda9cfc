#pragma once

#include <cstdint>
#include <unordered_map>
#include <utility>

#include "automarg/compgraph.hpp"

namespace automarg {

struct AffineTriple {
  bool is_affine = false;
  bool slope_nonzero = false;      // slope possibly nonzero
  bool intercept_nonzero = false;  // intercept possibly nonzero
};

// Memoized symbolic analyses over one expression graph. Results stay valid
// as the graph is appended to (nodes are immutable); the transform layer
// still discards analyzers after each edge reversal.
class Analyzer {
 public:
  explicit Analyzer(ExprGraph& g) : g_(g) {}

  // True iff a path exists from Input(var) to expr.
  bool dependent(ExprRef expr, int var);

  AffineTriple affine_all(ExprRef expr, int var);
  bool affine(ExprRef expr, int var) { return affine_all(expr, var).is_affine; }
  bool linear(ExprRef expr, int var) {
    AffineTriple t = affine_all(expr, var);
    return t.is_affine && !t.intercept_nonzero;
  }

  // Symbolic (slope, intercept) with expr == slope * x_var + intercept.
  // Zeros come back as the interned Const(0), so downstream "is 0" tests are
  // symbolic. Requires affine(expr, var); throws otherwise.
  std::pair<ExprRef, ExprRef> affine_coeff(ExprRef expr, int var);

  // Graph nodes touched since construction (at most once per node per query
  // kind, by memoization). Exposed for the complexity tests.
  std::size_t visit_count() const { return visit_count_; }

 private:
  using Key = std::uint64_t;
  static Key key(ExprRef e, int var) {
    return (static_cast<Key>(static_cast<std::uint32_t>(e.idx)) << 32) |
           static_cast<std::uint32_t>(var);
  }

  ExprGraph& g_;
  std::unordered_map<Key, bool> dep_cache_;
  std::unordered_map<Key, AffineTriple> aff_cache_;
  std::unordered_map<Key, std::pair<ExprRef, ExprRef>> coeff_cache_;
  std::size_t visit_count_ = 0;
};

}  // namespace automarg
