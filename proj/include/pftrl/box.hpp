#pragma once

#include <span>
#include <vector>

namespace pftrl {

using Vec = std::vector<double>;

/// Axis-aligned box D = [lower, upper] in R^n.
class BoxDomain {
public:
    BoxDomain(Vec lower, Vec upper);

    std::size_t dim() const { return lower_.size(); }
    const Vec& lower() const { return lower_; }
    const Vec& upper() const { return upper_; }

    /// Euclidean diameter ||upper - lower||.
    double diameter() const;
    Vec center() const;

    bool contains(std::span<const double> x, double tol = 0.0) const;
    Vec project(std::span<const double> x) const;

    /// All 2^n corners, coordinate 0 varying slowest.
    std::vector<Vec> corners() const;

private:
    Vec lower_;
    Vec upper_;
};

double norm2(std::span<const double> x);
double squared_norm(std::span<const double> x);
double distance(std::span<const double> x, std::span<const double> y);

}  // namespace pftrl
