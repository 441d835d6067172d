#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <random>

#include "fixtures.hpp"
#include "pftrl/box.hpp"
#include "pftrl/scalar_func.hpp"
#include "pftrl/trace.hpp"

using namespace pftrl;

TEST_SUITE("core_model") {

TEST_CASE("eval examples") {
    CHECK(eval(ScalarFunc::affine({-2.0}, 0.0), Vec{3.0}) == -6.0);
    CHECK(eval(ScalarFunc::constant(-0.01), Vec{7.0}) == -0.01);
    CHECK(eval(ScalarFunc::affine({0.0}, 0.0), Vec{123.0}) == 0.0);
    CHECK(eval(ScalarFunc::quadratic({1.0, 2.0}, {0.5, -1.0}, 3.0), Vec{1.0, 2.0}) == doctest::Approx(1 + 8 + 0.5 - 2 + 3));
}

TEST_CASE("eval rejects dimension mismatch") {
    CHECK_THROWS_AS(eval(ScalarFunc::affine({1.0, 2.0}), Vec{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(subgrad(ScalarFunc::quadratic({1.0}, {0.0}), Vec{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("subgrad examples") {
    CHECK(subgrad(ScalarFunc::affine({-2.0}), Vec{0.0}) == Vec{-2.0});
    CHECK(subgrad(ScalarFunc::constant(4.0), Vec{1.0}) == Vec{0.0});
    CHECK(subgrad(ScalarFunc::quadratic({1.0}, {0.0}), Vec{3.0}) == Vec{6.0});
}

TEST_CASE("lipschitz examples") {
    const BoxDomain box = fixtures::unit_box();
    CHECK(lipschitz_on_box(ScalarFunc::affine({-2.0}), box) == 2.0);
    CHECK(lipschitz_on_box(ScalarFunc::constant(5.0), box) == 0.0);
    // max |2x| on [-10, 10]
    CHECK(lipschitz_on_box(ScalarFunc::quadratic({1.0}, {0.0}), box) == 20.0);
    CHECK(lipschitz_on_box(ScalarFunc::affine({3.0, 4.0}), BoxDomain({0, 0}, {1, 1})) == doctest::Approx(5.0));
}

TEST_CASE("min and max on box") {
    const BoxDomain box({-1.0, 0.0}, {2.0, 3.0});
    const auto q = ScalarFunc::quadratic({1.0, 0.0}, {-2.0, 1.0}, 0.5);
    // separable: x^2 - 2x on [-1, 2] has min -1 at 1, max 3 at -1; y on [0, 3]
    CHECK(min_on_box(q, box) == doctest::Approx(-1.0 + 0.0 + 0.5));
    CHECK(max_on_box(q, box) == doctest::Approx(3.0 + 3.0 + 0.5));
}

TEST_CASE("symbolic sums stay in the union") {
    const auto s = ScalarFunc::affine({1.0}) + ScalarFunc::constant(-0.01);
    CHECK(s.is_affine());
    CHECK(eval(s, Vec{2.0}) == doctest::Approx(1.99));
    const auto q = s + ScalarFunc::quadratic({2.0}, {0.0});
    CHECK_FALSE(q.is_affine());
    CHECK(eval(q, Vec{2.0}) == doctest::Approx(9.99));
    CHECK_THROWS(-1.0 * ScalarFunc::quadratic({1.0}, {0.0}));
}

TEST_CASE("quadratic rejects negative diagonal") {
    CHECK_THROWS_AS(ScalarFunc::quadratic({-1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("box domain invariants") {
    CHECK_THROWS_AS(BoxDomain({1.0}, {1.0}), std::invalid_argument);
    CHECK_THROWS_AS(BoxDomain({0.0, 0.0}, {1.0}), std::invalid_argument);
    const BoxDomain box({-1.0, -2.0}, {1.0, 2.0});
    CHECK(box.diameter() == doctest::Approx(std::sqrt(4.0 + 16.0)));
    CHECK(box.center() == Vec{0.0, 0.0});
    CHECK(box.project(Vec{5.0, -5.0}) == Vec{1.0, -2.0});
    CHECK(box.corners().size() == 4);
    CHECK(box.corners().front() == Vec{-1.0, -2.0});
    CHECK(box.contains(Vec{1.0 + 1e-10, 0.0}, 1e-9));
    CHECK_FALSE(box.contains(Vec{1.0 + 1e-8, 0.0}, 1e-9));
}

namespace {

std::vector<ScalarFunc> random_functions(std::mt19937_64& rng, std::size_t n) {
    auto r = [&](double lo, double hi) { return fixtures::uniform(rng, lo, hi); };
    Vec slope(n), diag(n), lin(n);
    for (std::size_t d = 0; d < n; ++d) {
        slope[d] = r(-3, 3);
        diag[d] = r(0, 2);
        lin[d] = r(-3, 3);
    }
    return {ScalarFunc::affine(slope, r(-1, 1)), ScalarFunc::constant(r(-1, 1)), ScalarFunc::quadratic(diag, lin, r(-1, 1))};
}

Vec random_point(std::mt19937_64& rng, const BoxDomain& box) {
    Vec x(box.dim());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = fixtures::uniform(rng, box.lower()[d], box.upper()[d]);
    return x;
}

}  // namespace

TEST_CASE("property: convexity, subgradient inequality, reported Lipschitz constant") {
    std::mt19937_64 rng(11);
    for (std::size_t n : {1u, 2u}) {
        const BoxDomain box(Vec(n, -10.0), Vec(n, 10.0));
        for (int trial = 0; trial < 1000; ++trial) {
            for (const auto& f : random_functions(rng, n)) {
                const Vec x = random_point(rng, box), y = random_point(rng, box);
                const double th = fixtures::uniform(rng, 0.0, 1.0);
                Vec z(n);
                for (std::size_t d = 0; d < n; ++d) z[d] = th * x[d] + (1 - th) * y[d];
                const double scale = 1.0 + std::abs(eval(f, x)) + std::abs(eval(f, y));
                CHECK(eval(f, z) <= th * eval(f, x) + (1 - th) * eval(f, y) + 1e-12 * scale);
                const Vec s = subgrad(f, x);
                double lin = eval(f, x);
                for (std::size_t d = 0; d < n; ++d) lin += s[d] * (y[d] - x[d]);
                CHECK(eval(f, y) >= lin - 1e-12 * scale);
                CHECK(std::abs(eval(f, x) - eval(f, y)) <= lipschitz_on_box(f, box) * distance(x, y) + 1e-12 * scale);
            }
        }
    }
}

TEST_CASE("trace checks catch malformed traces") {
    const BoxDomain box = fixtures::unit_box();
    RunTrace t;
    t.actions = {{0.0}, {11.0}};
    t.losses = {ScalarFunc::constant(0), ScalarFunc::constant(0)};
    t.loss_values = {0, 0};
    t.penalty_values = {0, -1};
    t.constraint_values = {{0}, {0}};
    t.violation_h = {0, 0};
    t.violation_sum = {0};
    t.duals = {{0}, {-1}};
    const auto p = trace_problems(t, box);
    CHECK(p.size() == 4);  // violation_sum length, negative h, outside box, negative dual
    t.actions[1] = {10.0 + 1e-10};
    t.penalty_values[1] = 0;
    t.violation_sum = {0, 0};
    t.duals[1] = {0};
    CHECK(trace_problems(t, box).empty());
}

TEST_CASE("loss sequence cycles and instance checks constraint count") {
    const LossSequence L({ScalarFunc::affine({1.0}), ScalarFunc::affine({-1.0})});
    CHECK(eval(L.at(3), Vec{1.0}) == 1.0);
    CHECK(eval(L.at(4), Vec{1.0}) == -1.0);
    CHECK_THROWS(L.at(0));
    auto inst = make_instance(fixtures::unit_box(), L, time_invariant({ScalarFunc::affine({1.0})}), 2, 1.0);
    CHECK_THROWS_AS(inst.constraints_at(1), std::runtime_error);
    CHECK(inst.lipschitz_loss == 1.0);
    CHECK(inst.regularizer.modulus(4) == 4.0);
}

}  // TEST_SUITE
