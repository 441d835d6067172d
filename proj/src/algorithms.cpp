#include "pftrl/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "pftrl/metrics.hpp"
#include "pftrl/penalty.hpp"

namespace pftrl {

std::string algorithm_name(AlgorithmKind kind) {
    switch (kind) {
        case AlgorithmKind::PenalizedFtrl: return "ftrl";
        case AlgorithmKind::PrimalDual: return "primal_dual";
        case AlgorithmKind::PrimalDualAveraged: return "primal_dual_avg";
        case AlgorithmKind::FtlPenaltyOnly: return "ftl_penalty";
    }
    return "unknown";
}

AlgorithmKind parse_algorithm(const std::string& name) {
    for (auto k : {AlgorithmKind::PenalizedFtrl, AlgorithmKind::PrimalDual, AlgorithmKind::PrimalDualAveraged,
                   AlgorithmKind::FtlPenaltyOnly})
        if (algorithm_name(k) == name) return k;
    throw std::invalid_argument("unknown algorithm '" + name + "'");
}

std::string gamma_mode_name(GammaMode mode) {
    switch (mode) {
        case GammaMode::Fixed: return "fixed";
        case GammaMode::Certificate: return "certificate";
        case GammaMode::Adaptive: return "adaptive";
    }
    return "unknown";
}

GammaMode parse_gamma_mode(const std::string& name) {
    for (auto m : {GammaMode::Fixed, GammaMode::Certificate, GammaMode::Adaptive})
        if (gamma_mode_name(m) == name) return m;
    throw std::invalid_argument("unknown gamma mode '" + name + "'");
}

void validate(const AlgorithmConfig& c) {
    if (c.horizon < 1) throw std::invalid_argument("algorithm: horizon must be >= 1");
    if (!(c.gamma >= 0.0)) throw std::invalid_argument("algorithm: gamma must be >= 0");
    if (!(c.step_scale > 0.0)) throw std::invalid_argument("algorithm: step scale must be > 0");
    if (!(c.gamma_cap >= c.gamma)) throw std::invalid_argument("algorithm: gamma cap below gamma");
}

namespace {

RunTrace new_trace(const std::string& name, const AlgorithmConfig& config) {
    RunTrace t;
    t.algorithm = name;
    t.seed = config.seed;
    const auto n = static_cast<std::size_t>(config.horizon);
    t.actions.reserve(n);
    t.losses.reserve(n);
    t.loss_values.reserve(n);
    t.penalty_values.reserve(n);
    t.constraint_values.reserve(n);
    return t;
}

Vec values_at(const std::vector<ScalarFunc>& g, std::span<const double> x) {
    Vec v;
    v.reserve(g.size());
    for (const auto& gj : g) v.push_back(eval(gj, x));
    return v;
}

SolveReport solve_round(const ConvexObjective& obj, const BoxDomain& box, SolveOptions opt, const Vec& warm,
                        std::int64_t round) {
    opt.warm_start = warm;
    try {
        return solve(obj, box, opt);
    } catch (const SolverError& e) {
        throw SolverError(std::string(e.what()) + " at round " + std::to_string(round), e.best(), e.gap(), round);
    }
}

RunTrace run_primal_dual_impl(const ProblemInstance& inst, const AlgorithmConfig& config, bool averaged) {
    validate(config);
    const BoxDomain& box = inst.domain;
    const std::size_t n = box.dim(), m = inst.m;
    RunTrace trace = new_trace(algorithm_name(averaged ? AlgorithmKind::PrimalDualAveraged : AlgorithmKind::PrimalDual),
                               config);
    trace.experimental = averaged;
    trace.duals.reserve(static_cast<std::size_t>(config.horizon));

    PenaltyState state(m, n);
    Vec x = box.center();
    Vec lambda(m, 0.0);
    for (std::int64_t t = 1; t <= config.horizon; ++t) {
        const ScalarFunc& f = inst.losses.at(t);
        const auto g = inst.constraints_at(t);
        state.push(g);
        trace.actions.push_back(x);
        trace.duals.push_back(lambda);
        trace.losses.push_back(f);
        trace.loss_values.push_back(eval(f, x));
        trace.constraint_values.push_back(values_at(g, x));
        trace.penalty_values.push_back(state.h(x));

        const double alpha = config.step_scale / std::sqrt(static_cast<double>(t));
        Vec step = subgrad(f, x);
        for (std::size_t j = 0; j < m; ++j) {
            if (lambda[j] == 0.0) continue;
            const Vec dg = averaged ? state.average_gradient(j, t, x) : subgrad(g[j], x);
            for (std::size_t d = 0; d < n; ++d) step[d] += lambda[j] * dg[d];
        }
        Vec next(n);
        for (std::size_t d = 0; d < n; ++d) next[d] = x[d] - alpha * step[d];
        next = box.project(next);
        for (std::size_t j = 0; j < m; ++j) {
            const double gv = averaged ? state.average_value(j, t, next) : eval(g[j], next);
            lambda[j] = std::max(0.0, lambda[j] + alpha * gv);
            if (!std::isfinite(lambda[j])) throw std::overflow_error("primal-dual: dual variable overflowed at round " + std::to_string(t));
        }
        x = std::move(next);
    }
    fill_violation(trace);
    return trace;
}

}  // namespace

RunTrace run_penalized_ftrl(const ProblemInstance& inst, const AlgorithmConfig& config) {
    validate(config);
    const BoxDomain& box = inst.domain;
    const std::size_t n = box.dim(), m = inst.m;
    RunTrace trace = new_trace(algorithm_name(AlgorithmKind::PenalizedFtrl), config);
    trace.gammas.reserve(static_cast<std::size_t>(config.horizon));

    PenaltyState state(m, n);
    ScalarFunc loss_sum = ScalarFunc::constant(0.0);
    Vec x = box.center();
    double gamma = config.gamma;
    const bool adaptive = config.gamma_mode == GammaMode::Adaptive;
    bool frozen = false;
    std::int64_t quiet = 0;
    int events = 0;

    for (std::int64_t tau = 1; tau <= config.horizon; ++tau) {
        const ScalarFunc& f = inst.losses.at(tau);
        const auto g = inst.constraints_at(tau);
        trace.actions.push_back(x);
        trace.gammas.push_back(gamma);
        trace.losses.push_back(f);
        trace.loss_values.push_back(eval(f, x));
        trace.constraint_values.push_back(values_at(g, x));
        state.push(g);
        trace.penalty_values.push_back(state.h(x));
        loss_sum = loss_sum + f;
        if (tau == config.horizon) break;

        const FtrlObjective obj(inst.regularizer.scale(tau), loss_sum, gamma, state);
        x = solve_round(obj, box, config.solve, x, tau).minimizer;

        if (adaptive && !frozen) {
            if (state.prefix_penalty(x) > config.adaptive_threshold) {
                quiet = 0;
                ++events;
                gamma = std::min(config.gamma_cap, config.gamma * std::ldexp(1.0, events));
            } else if (++quiet >= config.adaptive_freeze_after) {
                frozen = true;
            }
        }
    }
    fill_violation(trace);
    return trace;
}

RunTrace run_primal_dual(const ProblemInstance& instance, const AlgorithmConfig& config) {
    return run_primal_dual_impl(instance, config, false);
}

RunTrace run_primal_dual_averaged(const ProblemInstance& instance, const AlgorithmConfig& config) {
    return run_primal_dual_impl(instance, config, true);
}

RunTrace ftl_penalty_only(const ProblemInstance& inst, std::int64_t horizon, const SolveOptions& solve_opt) {
    AlgorithmConfig config;
    config.kind = AlgorithmKind::FtlPenaltyOnly;
    config.horizon = horizon;
    validate(config);
    const BoxDomain& box = inst.domain;
    RunTrace trace = new_trace(algorithm_name(AlgorithmKind::FtlPenaltyOnly), config);
    PenaltyState state(inst.m, box.dim());
    Vec w = box.center();
    for (std::int64_t tau = 1; tau <= horizon; ++tau) {
        const auto g = inst.constraints_at(tau);
        state.push(g);
        const FtrlObjective obj(0.0, ScalarFunc::constant(0.0), 1.0, state);
        w = solve_round(obj, box, solve_opt, w, tau).minimizer;
        trace.actions.push_back(w);
        trace.losses.push_back(ScalarFunc::constant(0.0));
        trace.loss_values.push_back(0.0);
        trace.constraint_values.push_back(values_at(g, w));
        trace.penalty_values.push_back(state.h(w));
    }
    fill_violation(trace);
    return trace;
}

RunTrace run_algorithm(const ProblemInstance& instance, const AlgorithmConfig& config) {
    switch (config.kind) {
        case AlgorithmKind::PenalizedFtrl: return run_penalized_ftrl(instance, config);
        case AlgorithmKind::PrimalDual: return run_primal_dual(instance, config);
        case AlgorithmKind::PrimalDualAveraged: return run_primal_dual_averaged(instance, config);
        case AlgorithmKind::FtlPenaltyOnly: return ftl_penalty_only(instance, config.horizon, config.solve);
    }
    throw std::invalid_argument("unknown algorithm kind");
}

StaticSolveResult exact_penalty_static_solve(const ScalarFunc& f, const std::vector<ScalarFunc>& constraints,
                                             const BoxDomain& box, std::span<const double> z, double feas_tol,
                                             const SolveOptions& solve_opt) {
    if (constraints.empty()) throw std::invalid_argument("exact penalty: no constraints");
    if (!box.contains(z)) throw std::invalid_argument("exact penalty: Slater point outside the domain");
    double max_gz = -std::numeric_limits<double>::infinity();
    double min_abs_gz = std::numeric_limits<double>::infinity();
    for (const auto& g : constraints) {
        const double v = eval(g, z);
        if (!(v < 0.0)) throw std::invalid_argument("exact penalty: z is not strictly feasible");
        max_gz = std::max(max_gz, v);
        min_abs_gz = std::min(min_abs_gz, std::abs(v));
    }
    // any lower bound on the constrained optimum works; the box minimum is exact and cheap
    const double f_lb = min_on_box(f, box);
    const double fz = eval(f, z);
    StaticSolveResult r;
    r.gamma_candidate = (f_lb - fz - 1.0) / max_gz;
    r.gamma_used = std::max(1.0, 1.1 * std::abs(f_lb - fz - 1.0) / min_abs_gz);
    for (r.doublings = 0;; ++r.doublings) {
        const ExactPenaltyObjective obj(f, constraints, r.gamma_used, box.dim());
        const SolveReport s = solve(obj, box, solve_opt);
        r.x = s.minimizer;
        r.value = eval(f, r.x);
        r.max_violation = 0.0;
        for (const auto& g : constraints) r.max_violation = std::max(r.max_violation, eval(g, r.x));
        if (r.max_violation <= feas_tol) return r;
        if (r.doublings == 20)
            throw std::runtime_error("exact penalty: minimiser still infeasible after 20 doublings of gamma");
        r.gamma_used *= 2.0;
    }
}

}  // namespace pftrl
