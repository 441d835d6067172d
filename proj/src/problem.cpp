#include "pftrl/problem.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pftrl {

double RegularizerSpec::scale(std::int64_t tau) const {
    if (tau < 1) throw std::invalid_argument("regularizer: tau must be >= 1");
    return std::sqrt(static_cast<double>(tau));
}

double RegularizerSpec::value(std::int64_t tau, std::span<const double> x) const {
    return scale(tau) * squared_norm(x);
}

LossSequence::LossSequence(std::vector<ScalarFunc> cycle) : cycle_(std::move(cycle)) {
    if (cycle_.empty()) throw std::invalid_argument("loss sequence: empty");
}

const ScalarFunc& LossSequence::at(std::int64_t tau) const {
    if (tau < 1) throw std::invalid_argument("loss sequence: tau must be >= 1");
    return cycle_[static_cast<std::size_t>((tau - 1) % static_cast<std::int64_t>(cycle_.size()))];
}

double LossSequence::lipschitz(const BoxDomain& box) const {
    double l = 0.0;
    for (const auto& f : cycle_) l = std::max(l, lipschitz_on_box(f, box));
    return l;
}

std::vector<ScalarFunc> ProblemInstance::constraints_at(std::int64_t tau) const {
    auto g = constraints(tau);
    if (g.size() != m)
        throw std::runtime_error("constraint source returned " + std::to_string(g.size()) + " functions at round " +
                                 std::to_string(tau) + ", expected " + std::to_string(m));
    return g;
}

ProblemInstance make_instance(BoxDomain domain, LossSequence losses, ConstraintSource constraints, std::size_t m,
                              double lipschitz_constraint, double gamma) {
    if (m < 1) throw std::invalid_argument("instance: need at least one constraint");
    if (!(gamma >= 0.0)) throw std::invalid_argument("instance: gamma must be nonnegative");
    const double lf = losses.lipschitz(domain);
    return ProblemInstance{std::move(domain), std::move(losses), std::move(constraints), m, RegularizerSpec{},
                           gamma, lf, lipschitz_constraint};
}

ConstraintSource time_invariant(std::vector<ScalarFunc> fixed) {
    return [fixed = std::move(fixed)](std::int64_t) { return fixed; };
}

}  // namespace pftrl
