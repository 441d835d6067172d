#include "pftrl/generators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pftrl/solver.hpp"

namespace pftrl {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double sup_abs(const ScalarFunc& f, const BoxDomain& box) {
    return std::max(std::abs(min_on_box(f, box)), std::abs(max_on_box(f, box)));
}

std::vector<Vec> grid_points(const BoxDomain& box, int points) {
    const std::size_t n = box.dim();
    if (n > 2) throw std::invalid_argument("grid: dimension must be <= 2");
    std::vector<Vec> out;
    const int rows = n == 2 ? points : 1;
    out.reserve(static_cast<std::size_t>(points) * rows);
    for (int a = 0; a < points; ++a) {
        for (int b = 0; b < rows; ++b) {
            Vec x{grid_point(box.lower()[0], box.upper()[0], a, points)};
            if (n == 2) x.push_back(grid_point(box.lower()[1], box.upper()[1], b, points));
            out.push_back(std::move(x));
        }
    }
    return out;
}

std::vector<std::int64_t> dyadic_schedule(std::int64_t t) {
    std::vector<std::int64_t> s;
    for (std::int64_t tau = 1; tau <= t; tau *= 2) s.push_back(tau);
    if (s.empty() || s.back() != t) s.push_back(t);
    return s;
}

double offset_abs_max(const OffsetStream& o) {
    return std::visit(overloaded{[](const ConstantOffset& c) { return std::abs(c.value); },
                                 [](const UniformOffset& u) { return std::max(std::abs(u.lo), std::abs(u.hi)); },
                                 [](const SequenceOffset& s) {
                                     double b = 0.0;
                                     for (double v : s.values) b = std::max(b, std::abs(v));
                                     return b;
                                 }},
                      o);
}

}  // namespace

std::size_t FamilySpec::n_bar() const {
    std::size_t n = 0;
    for (const auto& s : streams) n = std::max(n, s.members.size());
    return n;
}

double FamilySpec::a_max(const BoxDomain& box) const {
    double a = 0.0;
    for (const auto& s : streams) {
        const double extra = std::holds_alternative<PerturbedLaw>(s.law) ? std::get<PerturbedLaw>(s.law).bound : 0.0;
        for (const auto& f : s.members) a = std::max(a, sup_abs(f, box) + extra);
    }
    return a;
}

double FamilySpec::lipschitz(const BoxDomain& box) const {
    double l = 0.0;
    for (const auto& s : streams)
        for (const auto& f : s.members) l = std::max(l, lipschitz_on_box(f, box));
    return l;
}

void validate(const FamilySpec& spec) {
    if (spec.streams.empty()) throw std::invalid_argument("family: need at least one constraint stream");
    for (std::size_t j = 0; j < spec.streams.size(); ++j) {
        const StreamSpec& s = spec.streams[j];
        const std::string where = "family stream " + std::to_string(j) + ": ";
        const std::size_t n = s.members.size();
        if (n == 0) throw std::invalid_argument(where + "no members");
        std::visit(overloaded{
                       [&](const IidLaw& law) {
                           if (law.probs.size() != n) throw std::invalid_argument(where + "probs must match members");
                           double sum = 0.0;
                           for (double p : law.probs) {
                               if (!(p >= 0.0)) throw std::invalid_argument(where + "negative probability");
                               sum += p;
                           }
                           if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(where + "probs must sum to 1");
                       },
                       [&](const PeriodicLaw& law) {
                           if (law.periods.size() + 1 != n)
                               throw std::invalid_argument(where + "periodic law needs one period per member after the first");
                           for (auto T : law.periods)
                               if (T < 1) throw std::invalid_argument(where + "periods must be >= 1");
                       },
                       [&](const ActivationRateLaw& law) {
                           if (n != 2) throw std::invalid_argument(where + "activation law needs exactly two members");
                           if (!(law.c > 0.0 && law.c <= 1.0)) throw std::invalid_argument(where + "c must be in (0, 1]");
                           if (!(law.scale > 0.0)) throw std::invalid_argument(where + "scale must be positive");
                       },
                       [&](const PerturbedLaw& law) {
                           if (n != 1) throw std::invalid_argument(where + "perturbed law needs exactly one base member");
                           if (!(law.bound >= 0.0)) throw std::invalid_argument(where + "bound must be >= 0");
                           if (offset_abs_max(law.offsets) > law.bound)
                               throw std::invalid_argument(where + "offsets exceed the bound");
                           if (const auto* u = std::get_if<UniformOffset>(&law.offsets); u && !(u->lo <= u->hi))
                               throw std::invalid_argument(where + "uniform offsets need lo <= hi");
                           if (const auto* q = std::get_if<SequenceOffset>(&law.offsets); q && q->values.empty())
                               throw std::invalid_argument(where + "offset sequence is empty");
                       }},
                   s.law);
        if (s.limit_probs) {
            if (s.limit_probs->size() != n) throw std::invalid_argument(where + "limit probs must match members");
            double sum = 0.0;
            for (double p : *s.limit_probs) sum += p;
            if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument(where + "limit probs must sum to 1");
        }
    }
}

std::string law_name(const Law& law) {
    return std::visit(overloaded{[](const IidLaw&) { return std::string("iid"); },
                                 [](const PeriodicLaw&) { return std::string("periodic"); },
                                 [](const ActivationRateLaw&) { return std::string("activation"); },
                                 [](const PerturbedLaw&) { return std::string("perturbed"); }},
                      law);
}

double counter_uniform(std::uint64_t seed, std::int64_t tau, std::size_t j, std::uint64_t lane) {
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ static_cast<std::uint64_t>(tau));
    h = splitmix64(h ^ static_cast<std::uint64_t>(j));
    h = splitmix64(h ^ lane);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double activation_probability(const ActivationRateLaw& law, std::int64_t tau) {
    return std::min(1.0, law.scale * law.c / std::pow(static_cast<double>(tau), 1.0 - law.c));
}

std::size_t member_index(const FamilySpec& spec, std::size_t j, std::int64_t tau, std::uint64_t seed) {
    const StreamSpec& s = spec.streams.at(j);
    return std::visit(overloaded{[&](const IidLaw& law) {
                                     const double u = counter_uniform(seed, tau, j);
                                     double cum = 0.0;
                                     for (std::size_t k = 0; k + 1 < law.probs.size(); ++k) {
                                         cum += law.probs[k];
                                         if (u < cum) return k;
                                     }
                                     return law.probs.size() - 1;
                                 },
                                 [&](const PeriodicLaw& law) {
                                     for (std::size_t k = 0; k < law.periods.size(); ++k)
                                         if (tau % law.periods[k] == 0) return k + 1;
                                     return std::size_t{0};
                                 },
                                 [&](const ActivationRateLaw& law) {
                                     return counter_uniform(seed, tau, j) < activation_probability(law, tau)
                                                ? std::size_t{1}
                                                : std::size_t{0};
                                 },
                                 [](const PerturbedLaw&) { return std::size_t{0}; }},
                      s.law);
}

double perturbed_offset(const PerturbedLaw& law, std::size_t j, std::int64_t tau, std::uint64_t seed) {
    return std::visit(overloaded{[](const ConstantOffset& c) { return c.value; },
                                 [&](const UniformOffset& u) {
                                     return u.lo + (u.hi - u.lo) * counter_uniform(seed, tau, j, 1);
                                 },
                                 [&](const SequenceOffset& q) {
                                     return q.values[static_cast<std::size_t>((tau - 1) %
                                                                              static_cast<std::int64_t>(q.values.size()))];
                                 }},
                      law.offsets);
}

std::vector<ScalarFunc> generate(const FamilySpec& spec, std::int64_t tau, std::uint64_t seed) {
    if (tau < 1) throw std::invalid_argument("generate: rounds start at 1");
    std::vector<ScalarFunc> out;
    out.reserve(spec.streams.size());
    for (std::size_t j = 0; j < spec.streams.size(); ++j) {
        const StreamSpec& s = spec.streams[j];
        if (const auto* p = std::get_if<PerturbedLaw>(&s.law)) {
            const double b = perturbed_offset(*p, j, tau, seed);
            out.push_back(b == 0.0 ? s.members[0] : s.members[0] + ScalarFunc::constant(b));
        } else {
            out.push_back(s.members[member_index(spec, j, tau, seed)]);
        }
    }
    return out;
}

std::optional<Vec> limit_frequencies(const StreamSpec& stream) {
    if (stream.limit_probs) return stream.limit_probs;
    return std::visit(
        overloaded{[](const IidLaw& law) -> std::optional<Vec> { return law.probs; },
                   [&](const PeriodicLaw& law) -> std::optional<Vec> {
                       std::int64_t L = 1;
                       for (auto T : law.periods) {
                           L = std::lcm(L, T);
                           if (L > 100'000'000) return std::nullopt;
                       }
                       Vec counts(stream.members.size(), 0.0);
                       for (std::int64_t tau = 1; tau <= L; ++tau) {
                           std::size_t k = 0;
                           for (std::size_t q = 0; q < law.periods.size(); ++q)
                               if (tau % law.periods[q] == 0) {
                                   k = q + 1;
                                   break;
                               }
                           counts[k] += 1.0;
                       }
                       for (double& c : counts) c /= static_cast<double>(L);
                       return counts;
                   },
                   [](const ActivationRateLaw& law) -> std::optional<Vec> {
                       if (law.c == 1.0) {
                           const double p = std::min(1.0, law.scale);
                           return Vec{1.0 - p, p};
                       }
                       return Vec{1.0, 0.0};
                   },
                   [](const PerturbedLaw&) -> std::optional<Vec> { return Vec{1.0}; }},
        stream.law);
}

std::vector<std::size_t> member_sequence(const FamilySpec& spec, std::size_t j, std::int64_t horizon,
                                         std::uint64_t seed) {
    std::vector<std::size_t> seq;
    seq.reserve(static_cast<std::size_t>(std::max<std::int64_t>(horizon, 0)));
    for (std::int64_t tau = 1; tau <= horizon; ++tau) seq.push_back(member_index(spec, j, tau, seed));
    return seq;
}

ConstraintSource constraint_source(FamilySpec spec, std::uint64_t seed) {
    validate(spec);
    return [spec = std::move(spec), seed](std::int64_t tau) { return generate(spec, tau, seed); };
}

ProblemInstance make_instance(BoxDomain domain, LossSequence losses, const FamilySpec& spec, std::uint64_t seed,
                              double gamma) {
    const double lg = spec.lipschitz(domain);
    return make_instance(std::move(domain), std::move(losses), constraint_source(spec, seed), spec.m(), lg, gamma);
}

PenaltyState accumulate(const FamilySpec& spec, std::size_t n, std::int64_t horizon, std::uint64_t seed) {
    PenaltyState state(spec.m(), n);
    for (std::int64_t tau = 1; tau <= horizon; ++tau) state.push(generate(spec, tau, seed));
    return state;
}

// ---------------------------------------------------------------------------

Condition3Result check_condition3(const std::vector<std::size_t>& sequence, std::size_t members,
                                  const std::optional<Vec>& limits, double epsilon, std::int64_t t0) {
    const auto t = static_cast<std::int64_t>(sequence.size());
    if (t <= t0) throw std::invalid_argument("condition 3: horizon must exceed t0");
    if (members == 0) throw std::invalid_argument("condition 3: empty family");
    Condition3Result r;
    r.epsilon = epsilon;
    r.t0 = t0;
    r.counts.assign(members, 0);
    for (std::size_t k : sequence) {
        if (k >= members) throw std::invalid_argument("condition 3: member index out of range");
        ++r.counts[k];
    }
    if (limits) {
        if (limits->size() != members) throw std::invalid_argument("condition 3: limits size mismatch");
        r.limits = *limits;
    } else {
        r.limits_estimated = true;
        r.limits.resize(members);
        for (std::size_t k = 0; k < members; ++k) r.limits[k] = static_cast<double>(r.counts[k]) / static_cast<double>(t);
    }
    std::vector<std::int64_t> running(members, 0);
    for (std::int64_t tau = 1; tau <= t; ++tau) {
        ++running[sequence[static_cast<std::size_t>(tau - 1)]];
        if (tau <= t0) continue;
        const double td = static_cast<double>(tau);
        double dev = 0.0;
        for (std::size_t k = 0; k < members; ++k)
            dev = std::max(dev, std::abs(static_cast<double>(running[k]) / td - r.limits[k]));
        const double scaled = std::sqrt(td) * dev;
        if (scaled > r.margin) {
            r.margin = scaled;
            r.margin_tau = tau;
        }
    }
    r.pass = r.margin <= epsilon;
    return r;
}

Condition2Result check_condition2(const PenaltyState& state, const BoxDomain& box, const Condition2Options& opt) {
    if (state.steps() < 1) throw std::invalid_argument("condition 2: empty state");
    Condition2Result r;
    r.eta = -std::numeric_limits<double>::infinity();
    for (const Vec& z : grid_points(box, opt.z_points)) {
        const double eta = slater_margin(state, z);
        if (eta > r.eta) {
            r.eta = eta;
            r.slater_point = z;
        }
    }
    if (!(r.eta > 0.0)) return r;

    double min_ratio = std::numeric_limits<double>::infinity();
    for (std::int64_t tau : dyadic_schedule(state.steps())) {
        try {
            const std::int64_t k = estimate_k_tau(state, box, opt.k_points, tau);
            r.k_schedule.emplace_back(tau, k);
            min_ratio = std::min(min_ratio, static_cast<double>(k) / static_cast<double>(tau));
        } catch (const std::runtime_error&) {
            r.no_boundary.push_back(tau);
        }
    }
    if (r.k_schedule.empty()) {
        // the prefix zero sets never have a boundary inside the box
        r.beta = r.eta;
        r.growth_exponent = 1.0;
        r.pass = true;
        return r;
    }
    r.beta = r.eta * min_ratio;
    if (r.k_schedule.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(r.k_schedule.size());
        for (const auto& [tau, k] : r.k_schedule) {
            const double x = std::log(static_cast<double>(tau)), y = std::log(static_cast<double>(k));
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double den = n * sxx - sx * sx;
        r.growth_exponent = den > 0.0 ? (n * sxy - sx * sy) / den : 1.0;
    } else {
        r.growth_exponent = 1.0;
    }
    r.pass = r.beta >= opt.beta_floor && r.growth_exponent >= opt.min_growth_exponent;
    return r;
}

std::vector<PartitionEntry> partition_constraints(const PenaltyState& state, const BoxDomain& box, int points_per_axis,
                                                  std::optional<double> kappa, std::int64_t reference) {
    const std::int64_t t = state.steps();
    if (t < 1) throw std::invalid_argument("partition: empty state");
    const std::int64_t ref = std::min(reference, t);
    const auto grid = grid_points(box, points_per_axis);
    std::vector<PartitionEntry> out;
    for (std::size_t j = 0; j < state.constraint_count(); ++j) {
        PartitionEntry e;
        e.j = j;
        for (const Vec& x : grid) {
            double s = 0.0;
            for (std::int64_t i = 1; i <= t; ++i) {
                s += std::max(0.0, state.average_value(j, i, x));
                if (i == ref) e.curve_at_ref = std::max(e.curve_at_ref, s);
            }
            e.curve_at_t = std::max(e.curve_at_t, s);
        }
        e.kappa = kappa ? *kappa : e.curve_at_ref / 50.0;
        e.in_p_minus = e.curve_at_t <= e.kappa * std::sqrt(static_cast<double>(t));
        out.push_back(e);
    }
    return out;
}

PerturbedDecomposition perturbed_decomposition(const StreamSpec& stream, std::size_t j, std::int64_t horizon,
                                               std::uint64_t seed, const BoxDomain& box, int points_per_axis) {
    const auto* law = std::get_if<PerturbedLaw>(&stream.law);
    if (!law) throw std::invalid_argument("perturbed decomposition: stream is not perturbed");
    if (horizon < 1) throw std::invalid_argument("perturbed decomposition: horizon must be >= 1");
    PerturbedDecomposition d;
    Vec b(static_cast<std::size_t>(horizon));
    for (std::int64_t tau = 1; tau <= horizon; ++tau) b[static_cast<std::size_t>(tau - 1)] = perturbed_offset(*law, j, tau, seed);
    d.mean_center = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(horizon);
    d.upper_center = law->bound;

    const auto grid = grid_points(box, points_per_axis);
    Vec base(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) base[g] = eval(stream.members[0], grid[g]);

    double running = 0.0;
    for (std::int64_t i = 1; i <= horizon; ++i) {
        running += b[static_cast<std::size_t>(i - 1)];
        const double avg = running / static_cast<double>(i);
        const double dm = avg - d.mean_center, du = avg - d.upper_center;
        d.delta_mean.push_back(dm);
        d.delta_upper.push_back(du);
        d.sqrt_margin_mean = std::max(d.sqrt_margin_mean, std::sqrt(static_cast<double>(i)) * std::abs(dm));
        double abs_mean = 0.0, max_upper = -std::numeric_limits<double>::infinity();
        for (double v : base) {
            const double sm = std::max(0.0, v + d.mean_center + dm) - std::max(0.0, v + d.mean_center);
            const double su = std::max(0.0, v + d.upper_center + du) - std::max(0.0, v + d.upper_center);
            abs_mean = std::max(abs_mean, std::abs(sm));
            max_upper = std::max(max_upper, su);
            if (std::abs(sm) > std::abs(dm) + 1e-12 || std::abs(su) > std::abs(du) + 1e-12)
                d.lipschitz_bound_holds = false;
        }
        if (max_upper > 1e-12) d.upper_nonpositive = false;
        d.small_delta_abs_mean.push_back(abs_mean);
        d.small_delta_max_upper.push_back(max_upper);
    }
    return d;
}

ConditionReport build_condition_report(const FamilySpec& spec, const BoxDomain& box, std::int64_t horizon,
                                       std::uint64_t seed, const ConditionOptions& opt) {
    validate(spec);
    ConditionReport report;
    report.horizon = horizon;
    report.seed = seed;
    const PenaltyState state = accumulate(spec, box.dim(), horizon, seed);
    const auto partition = partition_constraints(state, box, opt.grid, opt.kappa);
    report.condition3 = true;
    for (std::size_t j = 0; j < spec.m(); ++j) {
        const StreamSpec& s = spec.streams[j];
        StreamReport sr;
        sr.j = j;
        sr.law = law_name(s.law);
        sr.condition3 = check_condition3(member_sequence(spec, j, horizon, seed), s.members.size(),
                                         limit_frequencies(s), opt.epsilon, opt.t0);
        for (auto c : sr.condition3.counts)
            sr.empirical.push_back(static_cast<double>(c) / static_cast<double>(horizon));
        if (std::holds_alternative<PerturbedLaw>(s.law))
            sr.perturbed = perturbed_decomposition(s, j, horizon, seed, box, opt.grid);
        sr.partition = partition[j];
        report.condition3 = report.condition3 && sr.condition3.pass;
        report.streams.push_back(std::move(sr));
    }
    report.condition2 = check_condition2(state, box, opt.condition2);
    return report;
}

}  // namespace pftrl
