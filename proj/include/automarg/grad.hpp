#pragma once

#include <span>
#include <string>
#include <vector>

#include "automarg/logdensity.hpp"
#include "automarg/model.hpp"

namespace automarg {

struct GradWorkspace {
  std::vector<double> values;
  std::vector<double> adjoints;
};

// The log joint of a model (plus unconstraining Jacobian terms) flattened
// onto a single primitive-op tape, differentiated by one reverse sweep.
class LogDensityFn {
 public:
  int dim() const { return static_cast<int>(latent_ids_.size()); }
  const std::vector<NodeId>& latent_ids() const { return latent_ids_; }
  const std::vector<std::string>& latent_names() const { return latent_names_; }

  // IEEE semantics throughout: out-of-domain intermediate values surface as
  // a non-finite result rather than an error.
  double value_and_grad(std::span<const double> u, std::span<double> grad,
                        GradWorkspace& ws) const;
  double value(std::span<const double> u, GradWorkspace& ws) const;

  // Constrained values of the latent coordinates at `u`.
  std::vector<double> constrain(std::span<const double> u, GradWorkspace& ws) const;

  std::size_t tape_size() const { return ops_.size(); }

 private:
  friend LogDensityFn build_logdensity(const GraphicalModel& m);

  struct TapeOp {
    std::uint8_t tag;  // 0 input, 1 const, 2 op
    Op op;
    std::int32_t a = -1, b = -1;  // operands, or coordinate index for inputs
    double payload = 0.0;         // const value or PowConst exponent
  };

  void forward(std::span<const double> u, GradWorkspace& ws) const;

  std::vector<TapeOp> ops_;
  std::int32_t root_ = -1;
  std::vector<NodeId> latent_ids_;
  std::vector<std::string> latent_names_;
  std::vector<std::int32_t> constrained_pos_;  // tape index per coordinate
};

// Flattens bijections, parameter expressions and per-family log densities
// into one tape. Throws if any live unobserved node is discrete.
LogDensityFn build_logdensity(const GraphicalModel& m);

// Adapter giving the sampler a per-chain scratch buffer.
class TapeTarget final : public LogDensity {
 public:
  explicit TapeTarget(const LogDensityFn& fn) : fn_(fn) {}
  int dim() const override { return fn_.dim(); }
  double value_and_grad(std::span<const double> u, std::span<double> grad) override {
    return fn_.value_and_grad(u, grad, ws_);
  }

 private:
  const LogDensityFn& fn_;
  GradWorkspace ws_;
};

// Max relative discrepancy between the reverse-mode gradient and central
// finite differences with step h.
double gradient_check(const LogDensityFn& fn, std::span<const double> point, double h);

}  // namespace automarg
