#include "pftrl/box.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace pftrl {

BoxDomain::BoxDomain(Vec lower, Vec upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
    if (lower_.empty())
        throw std::invalid_argument("box: dimension must be positive");
    if (lower_.size() != upper_.size())
        throw std::invalid_argument("box: lower/upper dimension mismatch");
    for (std::size_t d = 0; d < lower_.size(); ++d) {
        if (!std::isfinite(lower_[d]) || !std::isfinite(upper_[d]) || !(lower_[d] < upper_[d]))
            throw std::invalid_argument("box: need finite lower < upper at coordinate " + std::to_string(d));
    }
}

double BoxDomain::diameter() const {
    double s = 0.0;
    for (std::size_t d = 0; d < dim(); ++d) {
        const double w = upper_[d] - lower_[d];
        s += w * w;
    }
    return std::sqrt(s);
}

Vec BoxDomain::center() const {
    Vec c(dim());
    for (std::size_t d = 0; d < dim(); ++d) c[d] = 0.5 * (lower_[d] + upper_[d]);
    return c;
}

bool BoxDomain::contains(std::span<const double> x, double tol) const {
    if (x.size() != dim()) return false;
    for (std::size_t d = 0; d < dim(); ++d) {
        if (x[d] < lower_[d] - tol || x[d] > upper_[d] + tol) return false;
    }
    return true;
}

Vec BoxDomain::project(std::span<const double> x) const {
    if (x.size() != dim()) throw std::invalid_argument("box: projection dimension mismatch");
    Vec p(x.begin(), x.end());
    for (std::size_t d = 0; d < dim(); ++d) p[d] = std::clamp(p[d], lower_[d], upper_[d]);
    return p;
}

std::vector<Vec> BoxDomain::corners() const {
    const std::size_t n = dim();
    std::vector<Vec> out;
    out.reserve(std::size_t{1} << n);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
        Vec c(n);
        for (std::size_t d = 0; d < n; ++d)
            c[d] = (mask >> (n - 1 - d)) & 1U ? upper_[d] : lower_[d];
        out.push_back(std::move(c));
    }
    return out;
}

double squared_norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double norm2(std::span<const double> x) { return std::sqrt(squared_norm(x)); }

double distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double w = x[d] - y[d];
        s += w * w;
    }
    return std::sqrt(s);
}

}  // namespace pftrl
