#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/problem.hpp"
#include "pftrl/scalar_func.hpp"
#include "pftrl/solver.hpp"
#include "pftrl/trace.hpp"

namespace pftrl {

enum class AlgorithmKind { PenalizedFtrl, PrimalDual, PrimalDualAveraged, FtlPenaltyOnly };

enum class GammaMode { Fixed, Certificate, Adaptive };

std::string algorithm_name(AlgorithmKind kind);
AlgorithmKind parse_algorithm(const std::string& name);
std::string gamma_mode_name(GammaMode mode);
GammaMode parse_gamma_mode(const std::string& name);

struct AlgorithmConfig {
    AlgorithmKind kind = AlgorithmKind::PenalizedFtrl;
    double gamma = 0.0;
    /// Fixed and Certificate both run with the given gamma; Adaptive
    /// starts from it and doubles on violation events.
    GammaMode gamma_mode = GammaMode::Fixed;
    double gamma_cap = 1e6;
    double adaptive_threshold = 1e-6;
    std::int64_t adaptive_freeze_after = 100;
    double step_scale = 5.0;  // alpha_t = step_scale / sqrt(t)
    std::int64_t horizon = 1;
    std::uint64_t seed = 0;
    SolveOptions solve{};
};

/// Checks horizon >= 1, gamma >= 0, step_scale > 0.
void validate(const AlgorithmConfig& config);

/// x_1 = box center; x_{tau+1} = argmin sqrt(tau)||x||^2 + sum_{i<=tau} (f_i + gamma h_i).
RunTrace run_penalized_ftrl(const ProblemInstance& instance, const AlgorithmConfig& config);

/// x_{t+1} = P(x_t - a_t (df_t(x_t) + sum_j lambda_j dg_j(x_t))),
/// lambda_{t+1} = [lambda_t + a_t g_t(x_{t+1})]^+.
RunTrace run_primal_dual(const ProblemInstance& instance, const AlgorithmConfig& config);

/// Same recursion with g_t replaced by the running average (1/t) sum_{i<=t} g_i.
RunTrace run_primal_dual_averaged(const ProblemInstance& instance, const AlgorithmConfig& config);

/// w_{tau+1} = argmin sum_{i<=tau} h_i. Entry i of the trace holds w_{i+1}
/// and h_i(w_{i+1}).
RunTrace ftl_penalty_only(const ProblemInstance& instance, std::int64_t horizon, const SolveOptions& solve = {});

/// Dispatches on config.kind.
RunTrace run_algorithm(const ProblemInstance& instance, const AlgorithmConfig& config);

struct StaticSolveResult {
    Vec x;
    double value = 0.0;            // f(x)
    double gamma_used = 0.0;
    double gamma_candidate = 0.0;  // (f_lb - f(z) - 1) / max_j g_j(z)
    int doublings = 0;
    double max_violation = 0.0;    // max_j max{0, g_j(x)}
};

/// Minimises f + gamma sum_j max{0, g_j} over the box with gamma taken from
/// the Slater point z, doubling gamma (up to 20 times) until the minimiser
/// is feasible within feas_tol.
StaticSolveResult exact_penalty_static_solve(const ScalarFunc& f, const std::vector<ScalarFunc>& constraints,
                                             const BoxDomain& box, std::span<const double> z,
                                             double feas_tol = 1e-6, const SolveOptions& solve = {});

}  // namespace pftrl
