#include "pftrl/trace.hpp"

#include <cmath>

namespace pftrl {

std::vector<std::string> trace_problems(const RunTrace& trace, const BoxDomain& box, double box_tol) {
    std::vector<std::string> out;
    const std::size_t t = trace.size();
    auto same = [&](std::size_t len, const char* name) {
        if (len != t) out.push_back(std::string(name) + " has length " + std::to_string(len) + ", expected " + std::to_string(t));
    };
    same(trace.losses.size(), "losses");
    same(trace.loss_values.size(), "loss_values");
    same(trace.penalty_values.size(), "penalty_values");
    same(trace.constraint_values.size(), "constraint_values");
    same(trace.violation_h.size(), "violation_h");
    same(trace.violation_sum.size(), "violation_sum");
    if (!trace.duals.empty()) same(trace.duals.size(), "duals");
    if (!trace.gammas.empty()) same(trace.gammas.size(), "gammas");
    if (!trace.regret.empty()) same(trace.regret.size(), "regret");

    for (std::size_t i = 0; i < trace.penalty_values.size(); ++i) {
        if (!(trace.penalty_values[i] >= 0.0)) {
            out.push_back("negative penalty at round " + std::to_string(i + 1));
            break;
        }
    }
    for (std::size_t i = 0; i < t; ++i) {
        if (!box.contains(trace.actions[i], box_tol)) {
            out.push_back("action outside domain at round " + std::to_string(i + 1));
            break;
        }
    }
    for (std::size_t i = 0; i < trace.duals.size(); ++i) {
        bool bad = false;
        for (double l : trace.duals[i]) bad = bad || !(l >= 0.0);
        if (bad) {
            out.push_back("negative dual at round " + std::to_string(i + 1));
            break;
        }
    }
    return out;
}

}  // namespace pftrl
