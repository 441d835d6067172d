#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/penalty.hpp"
#include "pftrl/problem.hpp"
#include "pftrl/scalar_func.hpp"

namespace pftrl {

/// Member k drawn independently each round with probability probs[k].
struct IidLaw {
    Vec probs;
};

/// Member k (k >= 1) is emitted at multiples of periods[k-1]; the smallest
/// such k wins, and rounds matching no period emit member 0.
struct PeriodicLaw {
    std::vector<std::int64_t> periods;
};

/// Two members. Member 1 is emitted at round tau with probability
/// min{1, scale * c / tau^(1-c)}, member 0 otherwise.
struct ActivationRateLaw {
    double c = 1.0;
    double scale = 0.1;
};

struct ConstantOffset {
    double value = 0.0;
};
struct UniformOffset {
    double lo = 0.0;
    double hi = 0.0;
};
struct SequenceOffset {
    Vec values;  // cycled
};
using OffsetStream = std::variant<ConstantOffset, UniformOffset, SequenceOffset>;

/// g_tau = base + b_tau with |b_tau| <= bound. Uses members[0] as the base.
struct PerturbedLaw {
    OffsetStream offsets;
    double bound = 0.0;
};

using Law = std::variant<IidLaw, PeriodicLaw, ActivationRateLaw, PerturbedLaw>;

/// One constraint stream j: the family A^{(j)} and how rounds pick from it.
struct StreamSpec {
    std::vector<ScalarFunc> members;
    Law law;
    std::optional<Vec> limit_probs;  // overrides the law's own limits
};

struct FamilySpec {
    std::vector<StreamSpec> streams;

    std::size_t m() const { return streams.size(); }
    /// max_j n_j
    std::size_t n_bar() const;
    /// max over members of sup_{x in box} |a_k^{(j)}(x)|
    double a_max(const BoxDomain& box) const;
    /// max over members (base for perturbed streams) of the Lipschitz constant.
    double lipschitz(const BoxDomain& box) const;
};

/// Throws std::invalid_argument when a stream is malformed.
void validate(const FamilySpec& spec);

std::string law_name(const Law& law);

/// Counter-based uniform draw in [0, 1) for (seed, tau, j, lane).
double counter_uniform(std::uint64_t seed, std::int64_t tau, std::size_t j, std::uint64_t lane = 0);

/// Probability that an activation-rate stream emits member 1 at round tau.
double activation_probability(const ActivationRateLaw& law, std::int64_t tau);

/// Index of the family member used by stream j at round tau; 0 for
/// perturbed streams.
std::size_t member_index(const FamilySpec& spec, std::size_t j, std::int64_t tau, std::uint64_t seed);

/// Offset b_tau of a perturbed stream.
double perturbed_offset(const PerturbedLaw& law, std::size_t j, std::int64_t tau, std::uint64_t seed);

/// g_tau^{(1..m)}; pure in (spec, tau, seed).
std::vector<ScalarFunc> generate(const FamilySpec& spec, std::int64_t tau, std::uint64_t seed);

/// Limit visit frequencies p_k^{(j)} if known in closed form (or supplied).
std::optional<Vec> limit_frequencies(const StreamSpec& stream);

/// Member indices of stream j for rounds 1..horizon.
std::vector<std::size_t> member_sequence(const FamilySpec& spec, std::size_t j, std::int64_t horizon,
                                         std::uint64_t seed);

ConstraintSource constraint_source(FamilySpec spec, std::uint64_t seed);

/// Problem instance whose constraints come from the family spec.
ProblemInstance make_instance(BoxDomain domain, LossSequence losses, const FamilySpec& spec, std::uint64_t seed,
                              double gamma = 0.0);

/// State with rounds 1..horizon pushed.
PenaltyState accumulate(const FamilySpec& spec, std::size_t n, std::int64_t horizon, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Condition checks

struct Condition3Result {
    bool pass = false;
    double margin = 0.0;          // sup_{t0 < tau <= t} sqrt(tau) max_k |p_{k,tau} - p_k|
    std::int64_t margin_tau = 0;  // where the sup is attained
    double epsilon = 0.0;
    std::int64_t t0 = 0;
    Vec limits;
    bool limits_estimated = false;  // limits taken as p_{k,t}
    std::vector<std::int64_t> counts;  // n_{k,t}
};

/// sequence[i] is the member visited at round i+1.
Condition3Result check_condition3(const std::vector<std::size_t>& sequence, std::size_t members,
                                  const std::optional<Vec>& limits, double epsilon, std::int64_t t0);

struct Condition2Result {
    double eta = 0.0;
    Vec slater_point;
    double beta = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> k_schedule;  // (tau, k_tau)
    std::vector<std::int64_t> no_boundary;                         // taus skipped: zero set is the whole box
    double growth_exponent = 0.0;  // least-squares slope of log k_tau against log tau
    bool pass = false;
};

struct Condition2Options {
    int z_points = 201;  // per axis
    int k_points = 201;  // per axis, >= 100
    double beta_floor = 1e-6;
    double min_growth_exponent = 0.9;
};

/// Largest common Slater margin over a z grid, then beta from k_tau on the
/// dyadic schedule {1, 2, 4, ..., t}. Passes when eta > 0, beta >= floor
/// and k_tau grows linearly in tau.
Condition2Result check_condition2(const PenaltyState& state, const BoxDomain& box, const Condition2Options& opt = {});

struct PartitionEntry {
    std::size_t j = 0;
    double curve_at_t = 0.0;    // C_j(t)
    double curve_at_ref = 0.0;  // C_j(min(ref, t))
    double kappa = 0.0;
    bool in_p_minus = false;
};

/// C_j(tau) = max over grid x of sum_{i<=tau} max{0, (1/i) sum_{k<=i} g_k^{(j)}(x)}.
/// j is in P- iff C_j(t) <= kappa sqrt(t); kappa defaults to C_j(min(2500, t)) / 50.
std::vector<PartitionEntry> partition_constraints(const PenaltyState& state, const BoxDomain& box, int points_per_axis,
                                                  std::optional<double> kappa = std::nullopt,
                                                  std::int64_t reference = 2500);

struct PerturbedDecomposition {
    double mean_center = 0.0;   // empirical mean of b over the horizon
    double upper_center = 0.0;  // the bound
    Vec delta_mean;             // Delta_i under mean centering
    Vec delta_upper;            // Delta_i under upper centering
    Vec small_delta_abs_mean;   // max_x |delta_i(x)|, mean centering
    Vec small_delta_max_upper;  // max_x delta_i(x), upper centering
    double sqrt_margin_mean = 0.0;  // max_i sqrt(i) |Delta_i| (mean centering)
    bool lipschitz_bound_holds = true;  // |delta_i| <= |Delta_i| everywhere
    bool upper_nonpositive = true;      // delta_i <= 0 everywhere under upper centering
};

PerturbedDecomposition perturbed_decomposition(const StreamSpec& stream, std::size_t j, std::int64_t horizon,
                                               std::uint64_t seed, const BoxDomain& box, int points_per_axis);

struct StreamReport {
    std::size_t j = 0;
    std::string law;
    Vec empirical;  // p_{k,t}
    Condition3Result condition3;
    std::optional<PerturbedDecomposition> perturbed;
    PartitionEntry partition;
};

struct ConditionReport {
    std::int64_t horizon = 0;
    std::uint64_t seed = 0;
    std::vector<StreamReport> streams;
    Condition2Result condition2;
    bool condition3 = false;  // all streams
};

struct ConditionOptions {
    double epsilon = 1.0;
    std::int64_t t0 = 0;
    int grid = 2001;
    Condition2Options condition2;
    std::optional<double> kappa;
};

ConditionReport build_condition_report(const FamilySpec& spec, const BoxDomain& box, std::int64_t horizon,
                                       std::uint64_t seed, const ConditionOptions& opt = {});

}  // namespace pftrl
