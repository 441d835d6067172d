#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/scalar_func.hpp"

namespace pftrl {

/// Per-round record of one online run. Index i holds round i+1: the action
/// x_i played, then what was charged once f_i and g_i were revealed.
struct RunTrace {
    std::string algorithm;
    bool experimental = false;

    std::vector<Vec> actions;
    std::vector<ScalarFunc> losses;       // f_i as revealed
    std::vector<double> loss_values;      // f_i(x_i)
    std::vector<double> penalty_values;   // h_i(x_i)
    std::vector<Vec> constraint_values;   // g_i^{(j)}(x_i), j = 1..m
    std::vector<Vec> duals;               // lambda_i; empty unless primal-dual
    std::vector<double> gammas;           // penalty weight in force at round i; FTRL only

    std::vector<double> regret;           // filled once a benchmark point is chosen
    std::vector<double> violation_h;      // sum_{k<=i} h_k(x_k)
    std::vector<double> violation_sum;    // sum_j max{0, sum_{k<=i} g_k^{(j)}(x_k)}

    std::uint64_t seed = 0;
    std::string config_digest;

    std::size_t size() const { return actions.size(); }
};

/// Problems found by the post-hoc trace checks; empty when the trace is sound.
std::vector<std::string> trace_problems(const RunTrace& trace, const BoxDomain& box, double box_tol = 1e-9);

}  // namespace pftrl
