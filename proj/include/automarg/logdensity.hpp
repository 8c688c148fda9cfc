#pragma once

#include <span>

namespace automarg {

// Differentiable unconstrained-space log-density, the contract the sampler
// runs against. Implementations may keep per-instance scratch, so one
// instance per chain.
class LogDensity {
 public:
  virtual ~LogDensity() = default;
  virtual int dim() const = 0;
  // Returns log density at `u` and writes the gradient; a non-finite return
  // means "reject", and the gradient contents are unspecified.
  virtual double value_and_grad(std::span<const double> u, std::span<double> grad) = 0;
};

}  // namespace automarg
