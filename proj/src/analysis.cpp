#include "automarg/analysis.hpp"

#include <stdexcept>

namespace automarg {

bool Analyzer::dependent(ExprRef expr, int var) {
  Key k = key(expr, var);
  auto it = dep_cache_.find(k);
  if (it != dep_cache_.end()) return it->second;
  ++visit_count_;
  const ExprNode& n = g_.node(expr);
  bool result = false;
  switch (n.tag) {
    case ExprNode::Tag::Input:
      result = (n.var_id == var);
      break;
    case ExprNode::Tag::Const:
      result = false;
      break;
    case ExprNode::Tag::Operation:
      result = dependent(n.a, var) || (n.b.valid() && dependent(n.b, var));
      break;
  }
  dep_cache_.emplace(k, result);
  return result;
}

AffineTriple Analyzer::affine_all(ExprRef expr, int var) {
  Key k = key(expr, var);
  auto it = aff_cache_.find(k);
  if (it != aff_cache_.end()) return it->second;
  ++visit_count_;
  const ExprNode& n = g_.node(expr);
  AffineTriple result;
  switch (n.tag) {
    case ExprNode::Tag::Input:
      result = (n.var_id == var) ? AffineTriple{true, true, false}
                                 : AffineTriple{true, false, true};
      break;
    case ExprNode::Tag::Const:
      result = {true, false, n.value != 0.0};
      break;
    case ExprNode::Tag::Operation:
      switch (n.op) {
        case Op::Add:
        case Op::Sub: {
          AffineTriple l = affine_all(n.a, var), r = affine_all(n.b, var);
          result = {l.is_affine && r.is_affine,
                    l.slope_nonzero || r.slope_nonzero,
                    l.intercept_nonzero || r.intercept_nonzero};
          break;
        }
        case Op::Mul: {
          AffineTriple l = affine_all(n.a, var), r = affine_all(n.b, var);
          if (!l.slope_nonzero)
            result = {l.is_affine && r.is_affine,
                      l.intercept_nonzero && r.slope_nonzero,
                      l.intercept_nonzero && r.intercept_nonzero};
          else if (!r.slope_nonzero)
            result = {l.is_affine && r.is_affine,
                      l.slope_nonzero && r.intercept_nonzero,
                      l.intercept_nonzero && r.intercept_nonzero};
          else
            result = {false, false, false};
          break;
        }
        case Op::Div: {
          AffineTriple l = affine_all(n.a, var), r = affine_all(n.b, var);
          if (!r.slope_nonzero)
            result = {l.is_affine && r.is_affine, l.slope_nonzero,
                      l.intercept_nonzero};
          else
            result = {false, false, false};
          break;
        }
        default: {
          // Opaque ops: affine only when fully independent of var.
          AffineTriple l = affine_all(n.a, var);
          bool opaque_ok = l.is_affine && !l.slope_nonzero;
          if (opaque_ok && n.b.valid()) {
            AffineTriple r = affine_all(n.b, var);
            opaque_ok = r.is_affine && !r.slope_nonzero;
          }
          result = opaque_ok ? AffineTriple{true, false, true}
                             : AffineTriple{false, false, false};
          break;
        }
      }
      break;
  }
  if (!result.is_affine) result = {false, false, false};
  aff_cache_.emplace(k, result);
  return result;
}

std::pair<ExprRef, ExprRef> Analyzer::affine_coeff(ExprRef expr, int var) {
  Key k = key(expr, var);
  auto it = coeff_cache_.find(k);
  if (it != coeff_cache_.end()) return it->second;

  std::pair<ExprRef, ExprRef> result;
  const ExprNode& n = g_.node(expr);
  if (n.tag == ExprNode::Tag::Input && n.var_id == var) {
    result = {g_.constant(1.0), g_.constant(0.0)};
  } else if (!dependent(expr, var)) {
    result = {g_.constant(0.0), expr};
  } else if (n.tag == ExprNode::Tag::Operation) {
    switch (n.op) {
      case Op::Add: {
        auto [s1, t1] = affine_coeff(n.a, var);
        auto [s2, t2] = affine_coeff(n.b, var);
        result = {g_.apply(Op::Add, s1, s2), g_.apply(Op::Add, t1, t2)};
        break;
      }
      case Op::Sub: {
        auto [s1, t1] = affine_coeff(n.a, var);
        auto [s2, t2] = affine_coeff(n.b, var);
        result = {g_.apply(Op::Sub, s1, s2), g_.apply(Op::Sub, t1, t2)};
        break;
      }
      case Op::Mul: {
        auto [s1, t1] = affine_coeff(n.a, var);
        auto [s2, t2] = affine_coeff(n.b, var);
        if (g_.is_const_zero(s1))
          result = {g_.apply(Op::Mul, t1, s2), g_.apply(Op::Mul, t1, t2)};
        else if (g_.is_const_zero(s2))
          result = {g_.apply(Op::Mul, s1, t2), g_.apply(Op::Mul, t1, t2)};
        else
          throw std::logic_error("affine_coeff: MUL with both sides slope-bearing");
        break;
      }
      case Op::Div: {
        auto [s1, t1] = affine_coeff(n.a, var);
        auto [s2, t2] = affine_coeff(n.b, var);
        if (g_.is_const_zero(s2))
          result = {g_.apply(Op::Div, s1, t2), g_.apply(Op::Div, t1, t2)};
        else
          throw std::logic_error("affine_coeff: DIV with slope-bearing divisor");
        break;
      }
      default:
        throw std::logic_error("affine_coeff: non-affine operation over dependent input");
    }
  } else {
    throw std::logic_error("affine_coeff called on non-affine expression");
  }
  coeff_cache_.emplace(k, result);
  return result;
}

}  // namespace automarg
