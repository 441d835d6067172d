#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <numeric>

#include "fixtures.hpp"
#include "pftrl/generators.hpp"

using namespace pftrl;

namespace {

FamilySpec periodic_family(std::int64_t T) {
    return FamilySpec{{StreamSpec{{ScalarFunc::constant(-0.01), ScalarFunc::affine({1.0}, -1.0)}, PeriodicLaw{{T}}, {}}}};
}

FamilySpec perturbed_family(OffsetStream offsets, double bound) {
    return FamilySpec{{StreamSpec{{ScalarFunc::affine({1.0}, -2.0)}, PerturbedLaw{std::move(offsets), bound}, {}}}};
}

}  // namespace

TEST_SUITE("generators") {

TEST_CASE("activation probability") {
    CHECK(activation_probability(ActivationRateLaw{1.0, 0.1}, 1) == doctest::Approx(0.1));
    CHECK(activation_probability(ActivationRateLaw{1.0, 0.1}, 5000) == doctest::Approx(0.1));
    CHECK(activation_probability(ActivationRateLaw{0.5, 0.1}, 100) == doctest::Approx(0.005));
    CHECK(activation_probability(ActivationRateLaw{1.0, 20.0}, 1) == 1.0);
}

TEST_CASE("activation rate c = 1 visits member 1 about 10 percent of the time") {
    const auto fam = fixtures::activation_family(1.0);
    const auto seq = member_sequence(fam, 0, 100000, 1);
    const auto hits = std::count(seq.begin(), seq.end(), 1u);
    CHECK(std::abs(static_cast<double>(hits) / 1e5 - 0.1) <= 4 * std::sqrt(0.09 / 1e5));
}

TEST_CASE("periodic T = 3 pattern") {
    const auto seq = member_sequence(periodic_family(3), 0, 9, 0);
    CHECK(seq == std::vector<std::size_t>{0, 0, 1, 0, 0, 1, 0, 0, 1});
    // smallest k wins at common multiples
    const FamilySpec two{{StreamSpec{{ScalarFunc::constant(0), ScalarFunc::constant(1), ScalarFunc::constant(2)},
                                     PeriodicLaw{{2, 3}}, {}}}};
    CHECK(member_sequence(two, 0, 6, 0) == std::vector<std::size_t>{0, 1, 2, 1, 0, 1});
}

TEST_CASE("perturbed stream with zero offsets is time invariant") {
    const auto fam = perturbed_family(ConstantOffset{0.0}, 0.0);
    for (std::int64_t tau = 1; tau <= 20; ++tau) CHECK(eval(generate(fam, tau, 3)[0], Vec{4.0}) == 2.0);
    const auto u = perturbed_family(UniformOffset{-1.0, 1.0}, 1.0);
    for (std::int64_t tau = 1; tau <= 200; ++tau) CHECK(std::abs(perturbed_offset(std::get<PerturbedLaw>(u.streams[0].law), 0, tau, 3)) <= 1.0);
    const auto s = perturbed_family(SequenceOffset{{0.5, -0.5}}, 0.5);
    CHECK(eval(generate(s, 1, 0)[0], Vec{0.0}) == -1.5);
    CHECK(eval(generate(s, 2, 0)[0], Vec{0.0}) == -2.5);
}

TEST_CASE("validation rejects malformed streams") {
    CHECK_THROWS_AS(validate(FamilySpec{{StreamSpec{{ScalarFunc::constant(0)}, IidLaw{{0.5}}, {}}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate(FamilySpec{{StreamSpec{{ScalarFunc::constant(0), ScalarFunc::constant(1)}, PeriodicLaw{{0}}, {}}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate(FamilySpec{{StreamSpec{{ScalarFunc::constant(0), ScalarFunc::constant(1)},
                                                   ActivationRateLaw{1.5, 0.1}, {}}}}),
                    std::invalid_argument);
    CHECK_THROWS_AS(validate(perturbed_family(ConstantOffset{2.0}, 1.0)), std::invalid_argument);
    CHECK_NOTHROW(validate(fixtures::activation_family(0.5)));
}

TEST_CASE("property: generation is pure and order independent") {
    const auto fam = fixtures::activation_family(0.75);
    std::vector<ScalarFunc> forward;
    for (std::int64_t tau = 1; tau <= 500; ++tau) forward.push_back(generate(fam, tau, 42)[0]);
    for (std::int64_t tau = 500; tau >= 1; --tau) CHECK(generate(fam, tau, 42)[0] == forward[static_cast<std::size_t>(tau - 1)]);
    CHECK(counter_uniform(1, 2, 0) == counter_uniform(1, 2, 0));
    CHECK(counter_uniform(1, 2, 0) != counter_uniform(2, 2, 0));
    CHECK(counter_uniform(1, 2, 0, 0) != counter_uniform(1, 2, 0, 1));
}

TEST_CASE("property: periodic indicator bound holds exactly") {
    for (std::int64_t T : {1, 2, 3, 7, 13, 50}) {
        std::int64_t hits = 0;
        for (std::int64_t tau = 1; tau <= 100000; ++tau) {
            if (tau % T == 0) ++hits;
            const double err = std::abs(static_cast<double>(hits) / static_cast<double>(tau) - 1.0 / static_cast<double>(T));
            if (err > 1.0 / static_cast<double>(tau) + 1e-15) {
                FAIL("bound violated at T=" << T << " tau=" << tau);
            }
        }
        const auto seq = member_sequence(periodic_family(T), 0, 1000, 0);
        CHECK(std::count(seq.begin(), seq.end(), 1u) == 1000 / T);
    }
}

TEST_CASE("limit frequencies") {
    CHECK(*limit_frequencies(periodic_family(4).streams[0]) == Vec{0.75, 0.25});
    CHECK(*limit_frequencies(fixtures::activation_family(1.0).streams[0]) == Vec{0.9, 0.1});
    CHECK(*limit_frequencies(fixtures::activation_family(0.5).streams[0]) == Vec{1.0, 0.0});
    const StreamSpec iid{{ScalarFunc::constant(0), ScalarFunc::constant(1)}, IidLaw{{0.3, 0.7}}, {}};
    CHECK(*limit_frequencies(iid) == Vec{0.3, 0.7});
}

TEST_CASE("condition 3 examples") {
    for (std::int64_t T : {2, 3, 7, 50}) {
        const auto fam = periodic_family(T);
        const auto r = check_condition3(member_sequence(fam, 0, 10000, 0), 2, limit_frequencies(fam.streams[0]), 1.0, 0);
        CHECK(r.pass);
        CHECK(r.margin <= 1.0);
        CHECK(std::accumulate(r.counts.begin(), r.counts.end(), std::int64_t{0}) == 10000);
    }
    const auto single = check_condition3(std::vector<std::size_t>(100, 0), 1, Vec{1.0}, 1.0, 0);
    CHECK(single.pass);
    CHECK(single.margin == 0.0);
    const auto fam = fixtures::activation_family(0.75);
    const auto fail = check_condition3(member_sequence(fam, 0, 10000, 0), 2, limit_frequencies(fam.streams[0]), 1.0, 0);
    CHECK_FALSE(fail.pass);
    const auto est = check_condition3(std::vector<std::size_t>{0, 1, 0, 1}, 2, std::nullopt, 1.0, 0);
    CHECK(est.limits_estimated);
    CHECK(est.limits == Vec{0.5, 0.5});
    CHECK_THROWS(check_condition3(std::vector<std::size_t>{0, 1}, 2, std::nullopt, 1.0, 2));
}

TEST_CASE("condition 3 margin against a direct oracle") {
    const auto fam = fixtures::activation_family(1.0);
    const auto seq = member_sequence(fam, 0, 3000, 6);
    const auto r = check_condition3(seq, 2, Vec{0.9, 0.1}, 1.0, 10);
    double sup = 0.0;
    std::int64_t n1 = 0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        n1 += seq[i] == 1;
        const double tau = static_cast<double>(i + 1);
        if (i + 1 > 10) sup = std::max(sup, std::sqrt(tau) * std::abs(static_cast<double>(n1) / tau - 0.1));
    }
    CHECK(r.margin == doctest::Approx(sup).epsilon(1e-12));
}

TEST_CASE("condition 2 examples") {
    const BoxDomain box = fixtures::unit_box();
    PenaltyState ti(1, 1);
    for (int i = 0; i < 256; ++i) ti.push(std::vector{ScalarFunc::affine({1.0})});
    const auto a = check_condition2(ti, box);
    CHECK(a.eta == doctest::Approx(10.0));
    CHECK(a.slater_point == Vec{-10.0});
    CHECK(a.beta == doctest::Approx(10.0));
    CHECK(a.pass);

    const auto b = check_condition2(accumulate(fixtures::activation_family(0.75), 1, 10000, 0), box);
    CHECK_FALSE(b.pass);
    CHECK(b.growth_exponent < 0.9);

    PenaltyState bad(1, 1);
    for (int i = 0; i < 8; ++i) bad.push(std::vector{ScalarFunc::constant(1.0)});
    const auto c = check_condition2(bad, box);
    CHECK(c.eta <= 0.0);
    CHECK_FALSE(c.pass);
}

TEST_CASE("partition examples") {
    const BoxDomain box = fixtures::unit_box();
    const FamilySpec fam{{StreamSpec{{ScalarFunc::constant(-0.01)}, IidLaw{{1.0}}, {}},
                          StreamSpec{{ScalarFunc::affine({1.0})}, IidLaw{{1.0}}, {}}}};
    const auto p = partition_constraints(accumulate(fam, 1, 4000, 0), box, 201);
    CHECK(p[0].in_p_minus);
    CHECK(p[0].curve_at_t == 0.0);
    CHECK_FALSE(p[1].in_p_minus);
    CHECK(p[1].curve_at_t == doctest::Approx(40000.0));
    const auto half = partition_constraints(accumulate(fixtures::activation_family(0.5), 1, 10000, 0), box, 201);
    CHECK(half[0].in_p_minus);
}

TEST_CASE("perturbed decomposition") {
    const BoxDomain box = fixtures::unit_box();
    const auto constant = perturbed_family(ConstantOffset{1.0}, 1.0);
    const auto d = perturbed_decomposition(constant.streams[0], 0, 500, 0, box, 201);
    for (double v : d.delta_upper) CHECK(v == 0.0);
    for (double v : d.delta_mean) CHECK(std::abs(v) <= 1e-15);

    const auto u = perturbed_family(UniformOffset{-1.0, 1.0}, 1.0);
    int within = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = perturbed_decomposition(u.streams[0], 0, 10000, seed, box, 201);
        CHECK(r.upper_nonpositive);
        CHECK(r.lipschitz_bound_holds);
        within += r.sqrt_margin_mean <= 5.0;
    }
    CHECK(within == 10);
}

TEST_CASE("condition report for a time-invariant stream passes both conditions") {
    const FamilySpec fam{{StreamSpec{{ScalarFunc::affine({1.0}, -1.0)}, IidLaw{{1.0}}, {}}}};
    ConditionOptions opt;
    opt.grid = 201;
    const auto r = build_condition_report(fam, fixtures::unit_box(), 1000, 0, opt);
    CHECK(r.condition3);
    CHECK(r.condition2.pass);
    CHECK(r.streams.size() == 1);
}

}  // TEST_SUITE
