#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/problem.hpp"
#include "pftrl/scalar_func.hpp"

namespace pftrl {

enum class Side { Left, Right };

/// Sum of 1-D hinges max{0, a x + b} with O(log N) value and one-sided
/// derivative queries. Insertion is O(N).
class HingeIndex {
public:
    void insert(double a, double b);
    double value(double x) const;
    double derivative(double x, Side side) const;
    std::size_t size() const { return rising_.size() + falling_.size() + flat_count_; }

private:
    struct Piece {
        double root;
        double a;
        double b;
    };
    // rising: a > 0, active for x > root. prefix sums over sorted roots.
    std::vector<Piece> rising_;
    Vec rise_a_{0.0}, rise_b_{0.0};
    // falling: a < 0, active for x < root. suffix sums over sorted roots.
    std::vector<Piece> falling_;
    Vec fall_a_{0.0}, fall_b_{0.0};
    double flat_ = 0.0;
    std::size_t flat_count_ = 0;
};

/// Running constraint averages for the time-varying penalty
///   h_tau(x) = sum_j max{0, (1/tau) sum_{i<=tau} g_i^{(j)}(x)}.
/// Keeps the symbolic running sum per constraint plus the averaged
/// coefficients of every prefix, so prefix penalties sum_{i<=tau} h_i(x)
/// can be evaluated without the raw stream. One-dimensional affine
/// streams additionally feed a HingeIndex for fast prefix queries.
class PenaltyState {
public:
    PenaltyState(std::size_t m, std::size_t n);

    std::size_t constraint_count() const { return m_; }
    std::size_t dim() const { return n_; }
    std::int64_t steps() const { return tau_; }
    bool uses_hinge_index() const { return n_ == 1 && affine_; }

    void push(std::span<const ScalarFunc> g);
    PenaltyState pushed(std::span<const ScalarFunc> g) const;

    /// sum_{i<=tau} g_i^{(j)}
    ScalarFunc accumulated(std::size_t j) const;
    /// (1/i) sum_{k<=i} g_k^{(j)} for 1 <= i <= tau
    ScalarFunc averaged(std::size_t j, std::int64_t i) const;
    double average_value(std::size_t j, std::int64_t i, std::span<const double> x) const;
    Vec average_gradient(std::size_t j, std::int64_t i, std::span<const double> x) const;

    /// h_i(x); i defaults to the current step.
    double h(std::span<const double> x) const { return h_at(tau_, x); }
    double h_at(std::int64_t i, std::span<const double> x) const;

    /// sum_{i<=upto} h_i(x); upto <= 0 means the current step.
    double prefix_penalty(std::span<const double> x, std::int64_t upto = 0) const;
    /// One-sided derivative of the prefix penalty (1-D only).
    double prefix_penalty_derivative(double x, Side side, std::int64_t upto = 0) const;
    /// One subgradient of the prefix penalty.
    Vec prefix_penalty_subgradient(std::span<const double> x, std::int64_t upto = 0) const;

    /// Number of pairs (i, j), i <= upto, with average >= -tol at x.
    std::size_t active_pairs(std::span<const double> x, std::int64_t upto, double tol) const;
    /// max over after < i <= upto and all j of the running averages at x.
    double max_average(std::span<const double> x, std::int64_t after = 0, std::int64_t upto = 0) const;

private:
    const double* coeffs(std::int64_t i, std::size_t j) const;
    double eval_coeffs(const double* c, std::span<const double> x) const;
    std::int64_t resolve(std::int64_t upto) const;

    std::size_t m_;
    std::size_t n_;
    std::size_t stride_;
    std::int64_t tau_ = 0;
    bool affine_ = true;
    Vec sums_;
    Vec history_;
    HingeIndex hinges_;
};

PenaltyState push_constraints(const PenaltyState& state, std::span<const ScalarFunc> g);
double eval_h(const PenaltyState& state, std::span<const double> x);
double eval_prefix_penalty(const PenaltyState& state, std::span<const double> x);

/// Minimum number of active prefix constraints on the boundary of the
/// zero set of the prefix penalty at step upto, located on a uniform grid
/// and refined by bisection along each grid edge that crosses the boundary.
std::int64_t estimate_k_tau(const PenaltyState& state, const BoxDomain& box, int points_per_axis,
                            std::int64_t upto = 0, double active_tol = 1e-9);

/// (E + L + 1) / beta.
double gamma_threshold(double E, double L, double beta);

struct LossGapConstants {
    double E = 0.0;         // max_y ||y||^2 - ||z||^2
    double L = 0.0;         // L_f * diameter(D)
    double L_direct = 0.0;  // max_{y, f in loss cycle} f(y) - f(z)
};
LossGapConstants compute_E_L(const ProblemInstance& instance, std::span<const double> z);

/// -max_{after < i <= tau, j} (1/i) sum_{k<=i} g_k^{(j)}(z).
double slater_margin(const PenaltyState& state, std::span<const double> z, std::int64_t after = 0);

struct GammaCertificate {
    double E = 0.0;
    double L = 0.0;
    double eta = 0.0;
    double beta = 0.0;
    std::vector<std::pair<std::int64_t, std::int64_t>> k_schedule;  // (tau, k_tau)
    std::int64_t t_eps = 0;
    double gamma0 = 0.0;
    Vec slater_point;
};

}  // namespace pftrl
