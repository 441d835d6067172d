#pragma once

#include <span>
#include <string>
#include <variant>

#include "pftrl/box.hpp"

namespace pftrl {

/// x -> <slope, x> + intercept
struct Affine {
    Vec slope;
    double intercept = 0.0;
};

/// x -> value, for any dimension.
struct Constant {
    double value = 0.0;
};

/// x -> sum_d diag[d] x_d^2 + linear[d] x_d + intercept, with diag >= 0.
struct QuadraticDiag {
    Vec diag;
    Vec linear;
    double intercept = 0.0;
};

/// Symbolic convex scalar function. Every variant has an exact value,
/// gradient and Lipschitz constant on a box, and sums of functions stay
/// inside the union (affine + constant is affine, anything + quadratic
/// is quadratic).
class ScalarFunc {
public:
    using Rep = std::variant<Affine, Constant, QuadraticDiag>;

    ScalarFunc() : rep_(Constant{0.0}) {}
    ScalarFunc(Affine a);
    ScalarFunc(Constant c) : rep_(c) {}
    ScalarFunc(QuadraticDiag q);

    static ScalarFunc affine(Vec slope, double intercept = 0.0) { return Affine{std::move(slope), intercept}; }
    static ScalarFunc constant(double value) { return Constant{value}; }
    static ScalarFunc quadratic(Vec diag, Vec linear, double intercept = 0.0) {
        return QuadraticDiag{std::move(diag), std::move(linear), intercept};
    }

    const Rep& rep() const { return rep_; }

    /// Number of coordinates the function is defined on; 0 for constants.
    std::size_t dim() const;
    /// True for Affine and Constant.
    bool is_affine() const { return !std::holds_alternative<QuadraticDiag>(rep_); }

    /// Coefficients as a diagonal quadratic in dimension n.
    QuadraticDiag as_quadratic(std::size_t n) const;

    std::string describe() const;

    friend bool operator==(const ScalarFunc& a, const ScalarFunc& b);

private:
    Rep rep_;
};

double eval(const ScalarFunc& f, std::span<const double> x);
Vec subgrad(const ScalarFunc& f, std::span<const double> x);
/// <grad f(x), dir>; all variants are differentiable.
double directional_derivative(const ScalarFunc& f, std::span<const double> x, std::span<const double> dir);
double lipschitz_on_box(const ScalarFunc& f, const BoxDomain& box);

double min_on_box(const ScalarFunc& f, const BoxDomain& box);
double max_on_box(const ScalarFunc& f, const BoxDomain& box);

ScalarFunc operator+(const ScalarFunc& a, const ScalarFunc& b);
ScalarFunc operator*(double s, const ScalarFunc& f);

}  // namespace pftrl
