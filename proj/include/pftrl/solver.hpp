#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/penalty.hpp"
#include "pftrl/scalar_func.hpp"

namespace pftrl {

/// Convex function on a box.
class ConvexObjective {
public:
    virtual ~ConvexObjective() = default;

    virtual std::size_t dim() const = 0;
    virtual double value(std::span<const double> x) const = 0;
    virtual Vec subgradient(std::span<const double> x) const = 0;
    /// One-sided derivative for 1-D objectives. The default reads the
    /// subgradient and is only exact where the function is differentiable.
    virtual double derivative(double x, Side side) const;
    /// Lower bound on the strong convexity modulus; 0 if unknown.
    virtual double strong_convexity() const { return 0.0; }
};

/// scale * ||x||^2 + loss_sum(x) + gamma * sum_{i<=tau} h_i(x)
class FtrlObjective final : public ConvexObjective {
public:
    FtrlObjective(double reg_scale, ScalarFunc loss_sum, double gamma, const PenaltyState& penalty);

    std::size_t dim() const override { return penalty_->dim(); }
    double value(std::span<const double> x) const override;
    Vec subgradient(std::span<const double> x) const override;
    double derivative(double x, Side side) const override;
    double strong_convexity() const override { return 2.0 * reg_scale_; }

private:
    double reg_scale_;
    ScalarFunc loss_sum_;
    double gamma_;
    const PenaltyState* penalty_;
};

/// f(x) + gamma * sum_j max{0, g_j(x)}
class ExactPenaltyObjective final : public ConvexObjective {
public:
    ExactPenaltyObjective(ScalarFunc f, std::vector<ScalarFunc> constraints, double gamma, std::size_t n);

    std::size_t dim() const override { return n_; }
    double value(std::span<const double> x) const override;
    Vec subgradient(std::span<const double> x) const override;
    double derivative(double x, Side side) const override;

private:
    ScalarFunc f_;
    std::vector<ScalarFunc> constraints_;
    double gamma_;
    std::size_t n_;
};

struct SolveOptions {
    double tol = 1e-9;
    std::int64_t max_iterations = 1'000'000;
    /// Golden-section bracket width at which the 1-D search hands over to
    /// certification.
    double bracket_width = 1e-10;
    Vec warm_start;  // used by the subgradient method only
};

struct SolveReport {
    Vec minimizer;
    double value = 0.0;
    std::int64_t iterations = 0;
    double certified_gap = 0.0;
};

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, Vec best, double gap, std::int64_t round = 0)
        : std::runtime_error(what), best_(std::move(best)), gap_(gap), round_(round) {}
    const Vec& best() const { return best_; }
    double gap() const { return gap_; }
    std::int64_t round() const { return round_; }

private:
    Vec best_;
    double gap_;
    std::int64_t round_;
};

/// Minimises a convex objective over the box.
///  - n = 1: golden-section search, then a cutting-plane certificate from
///    one-sided derivatives, refined by derivative bisection if needed.
///  - n = 2, 3: nested golden-section search (partial minimisation keeps
///    convexity), certified with chord bounds on the outer search.
///  - n >= 4: projected subgradient with step 2 / (sigma (k + 1)) and
///    weighted averaging; needs sigma > 0.
SolveReport solve(const ConvexObjective& objective, const BoxDomain& box, const SolveOptions& options = {});

struct GridMinimum {
    Vec point;
    double value = 0.0;
};

/// Exhaustive minimum over a uniform grid (dimension <= 2); ties go to the
/// lexicographically smallest grid point.
GridMinimum grid_minimize(const std::function<double(std::span<const double>)>& f, const BoxDomain& box,
                          int points_per_axis);

/// Coordinate k of a uniform grid with the given number of points on [lo, hi].
double grid_point(double lo, double hi, int k, int points);

}  // namespace pftrl
