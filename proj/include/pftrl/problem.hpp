#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/scalar_func.hpp"

namespace pftrl {

/// R_tau(x) = sqrt(tau) * ||x||^2, strongly convex with modulus 2 sqrt(tau).
struct RegularizerSpec {
    double scale(std::int64_t tau) const;
    double value(std::int64_t tau, std::span<const double> x) const;
    double modulus(std::int64_t tau) const { return 2.0 * scale(tau); }
};

/// Loss sequence f_1, f_2, ... given as a finite list that is cycled.
class LossSequence {
public:
    explicit LossSequence(std::vector<ScalarFunc> cycle);

    /// f_tau for tau >= 1.
    const ScalarFunc& at(std::int64_t tau) const;
    const std::vector<ScalarFunc>& cycle() const { return cycle_; }
    double lipschitz(const BoxDomain& box) const;

private:
    std::vector<ScalarFunc> cycle_;
};

/// Round tau (>= 1) -> the m constraint functions g_tau^{(1..m)}.
/// Must be a pure function of tau.
using ConstraintSource = std::function<std::vector<ScalarFunc>(std::int64_t tau)>;

struct ProblemInstance {
    BoxDomain domain;
    LossSequence losses;
    ConstraintSource constraints;
    std::size_t m = 1;
    RegularizerSpec regularizer{};
    double gamma = 0.0;
    double lipschitz_loss = 0.0;        // L_f
    double lipschitz_constraint = 0.0;  // L_g

    /// Constraints of round tau, checked for count m.
    std::vector<ScalarFunc> constraints_at(std::int64_t tau) const;
};

/// Builds an instance and fills L_f from the loss list. L_g must be
/// supplied because the constraint source is opaque.
ProblemInstance make_instance(BoxDomain domain, LossSequence losses, ConstraintSource constraints, std::size_t m,
                              double lipschitz_constraint, double gamma = 0.0);

/// Constraint source that never changes: g_tau = fixed for every tau.
ConstraintSource time_invariant(std::vector<ScalarFunc> fixed);

}  // namespace pftrl
