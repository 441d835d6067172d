#pragma once

#include <cstdint>
#include <random>

#include "pftrl/generators.hpp"
#include "pftrl/problem.hpp"

namespace fixtures {

inline pftrl::BoxDomain unit_box() { return pftrl::BoxDomain({-10.0}, {10.0}); }

/// a_1 = -0.01, a_2 = x, a_2 drawn with probability 0.1 c / tau^(1-c).
inline pftrl::FamilySpec activation_family(double c) {
    using pftrl::ScalarFunc;
    return pftrl::FamilySpec{{pftrl::StreamSpec{{ScalarFunc::constant(-0.01), ScalarFunc::affine({1.0})},
                                                pftrl::ActivationRateLaw{c, 0.1},
                                                {}}}};
}

inline pftrl::ProblemInstance activation_instance(double c, std::uint64_t seed, double gamma = 25.0) {
    return pftrl::make_instance(unit_box(), pftrl::LossSequence({pftrl::ScalarFunc::affine({-2.0})}), activation_family(c),
                                seed, gamma);
}

inline pftrl::ProblemInstance time_invariant_instance(pftrl::ScalarFunc f, pftrl::ScalarFunc g, double gamma = 0.0) {
    const pftrl::BoxDomain box = unit_box();
    const double lg = pftrl::lipschitz_on_box(g, box);
    return pftrl::make_instance(box, pftrl::LossSequence({std::move(f)}), pftrl::time_invariant({std::move(g)}), 1, lg,
                                gamma);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace fixtures
