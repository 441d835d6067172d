#include "pftrl/scalar_func.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pftrl {
namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_dim(std::size_t expected, std::size_t got) {
    if (expected != got)
        throw std::invalid_argument("scalar function: dimension mismatch (expected " + std::to_string(expected) +
                                    ", got " + std::to_string(got) + ")");
}

}  // namespace

ScalarFunc::ScalarFunc(Affine a) : rep_(std::move(a)) {
    if (std::get<Affine>(rep_).slope.empty()) throw std::invalid_argument("affine: empty slope");
}

ScalarFunc::ScalarFunc(QuadraticDiag q) : rep_(std::move(q)) {
    const auto& v = std::get<QuadraticDiag>(rep_);
    if (v.diag.empty()) throw std::invalid_argument("quadratic: empty coefficients");
    require_dim(v.diag.size(), v.linear.size());
    for (double d : v.diag)
        if (!(d >= 0.0)) throw std::invalid_argument("quadratic: diagonal must be nonnegative");
}

std::size_t ScalarFunc::dim() const {
    return std::visit(overloaded{[](const Affine& a) { return a.slope.size(); },
                                 [](const Constant&) { return std::size_t{0}; },
                                 [](const QuadraticDiag& q) { return q.diag.size(); }},
                      rep_);
}

QuadraticDiag ScalarFunc::as_quadratic(std::size_t n) const {
    return std::visit(overloaded{[n](const Affine& a) {
                                     require_dim(n, a.slope.size());
                                     return QuadraticDiag{Vec(n, 0.0), a.slope, a.intercept};
                                 },
                                 [n](const Constant& c) { return QuadraticDiag{Vec(n, 0.0), Vec(n, 0.0), c.value}; },
                                 [n](const QuadraticDiag& q) {
                                     require_dim(n, q.diag.size());
                                     return q;
                                 }},
                      rep_);
}

std::string ScalarFunc::describe() const {
    std::ostringstream os;
    os.precision(17);
    auto vec = [&os](const Vec& v) {
        os << '[';
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
        os << ']';
    };
    std::visit(overloaded{[&](const Affine& a) {
                              os << "affine(slope=";
                              vec(a.slope);
                              os << ",intercept=" << a.intercept << ')';
                          },
                          [&](const Constant& c) { os << "constant(" << c.value << ')'; },
                          [&](const QuadraticDiag& q) {
                              os << "quadratic(diag=";
                              vec(q.diag);
                              os << ",linear=";
                              vec(q.linear);
                              os << ",intercept=" << q.intercept << ')';
                          }},
               rep_);
    return os.str();
}

bool operator==(const ScalarFunc& a, const ScalarFunc& b) {
    if (a.rep_.index() != b.rep_.index()) return false;
    return std::visit(overloaded{[&](const Affine& x) {
                                     const auto& y = std::get<Affine>(b.rep_);
                                     return x.slope == y.slope && x.intercept == y.intercept;
                                 },
                                 [&](const Constant& x) { return x.value == std::get<Constant>(b.rep_).value; },
                                 [&](const QuadraticDiag& x) {
                                     const auto& y = std::get<QuadraticDiag>(b.rep_);
                                     return x.diag == y.diag && x.linear == y.linear && x.intercept == y.intercept;
                                 }},
                      a.rep_);
}

double eval(const ScalarFunc& f, std::span<const double> x) {
    return std::visit(overloaded{[x](const Affine& a) {
                                     require_dim(a.slope.size(), x.size());
                                     double s = a.intercept;
                                     for (std::size_t d = 0; d < x.size(); ++d) s += a.slope[d] * x[d];
                                     return s;
                                 },
                                 [](const Constant& c) { return c.value; },
                                 [x](const QuadraticDiag& q) {
                                     require_dim(q.diag.size(), x.size());
                                     double s = q.intercept;
                                     for (std::size_t d = 0; d < x.size(); ++d)
                                         s += (q.diag[d] * x[d] + q.linear[d]) * x[d];
                                     return s;
                                 }},
                      f.rep());
}

Vec subgrad(const ScalarFunc& f, std::span<const double> x) {
    return std::visit(overloaded{[x](const Affine& a) {
                                     require_dim(a.slope.size(), x.size());
                                     return a.slope;
                                 },
                                 [x](const Constant&) { return Vec(x.size(), 0.0); },
                                 [x](const QuadraticDiag& q) {
                                     require_dim(q.diag.size(), x.size());
                                     Vec g(x.size());
                                     for (std::size_t d = 0; d < x.size(); ++d) g[d] = 2.0 * q.diag[d] * x[d] + q.linear[d];
                                     return g;
                                 }},
                      f.rep());
}

double directional_derivative(const ScalarFunc& f, std::span<const double> x, std::span<const double> dir) {
    require_dim(x.size(), dir.size());
    const Vec g = subgrad(f, x);
    double s = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) s += g[d] * dir[d];
    return s;
}

double lipschitz_on_box(const ScalarFunc& f, const BoxDomain& box) {
    return std::visit(overloaded{[&](const Affine& a) {
                                     require_dim(box.dim(), a.slope.size());
                                     return norm2(a.slope);
                                 },
                                 [](const Constant&) { return 0.0; },
                                 [&](const QuadraticDiag& q) {
                                     require_dim(box.dim(), q.diag.size());
                                     // gradient is separable; its norm is maximised coordinatewise at a corner
                                     double s = 0.0;
                                     for (std::size_t d = 0; d < q.diag.size(); ++d) {
                                         const double lo = std::abs(2.0 * q.diag[d] * box.lower()[d] + q.linear[d]);
                                         const double hi = std::abs(2.0 * q.diag[d] * box.upper()[d] + q.linear[d]);
                                         const double m = std::max(lo, hi);
                                         s += m * m;
                                     }
                                     return std::sqrt(s);
                                 }},
                      f.rep());
}

double min_on_box(const ScalarFunc& f, const BoxDomain& box) {
    const QuadraticDiag q = f.as_quadratic(box.dim());
    double s = q.intercept;
    for (std::size_t d = 0; d < box.dim(); ++d) {
        const double lo = box.lower()[d], hi = box.upper()[d];
        auto term = [&](double v) { return (q.diag[d] * v + q.linear[d]) * v; };
        double best = std::min(term(lo), term(hi));
        if (q.diag[d] > 0.0) best = std::min(best, term(std::clamp(-q.linear[d] / (2.0 * q.diag[d]), lo, hi)));
        s += best;
    }
    return s;
}

double max_on_box(const ScalarFunc& f, const BoxDomain& box) {
    const QuadraticDiag q = f.as_quadratic(box.dim());
    double s = q.intercept;
    for (std::size_t d = 0; d < box.dim(); ++d) {
        auto term = [&](double v) { return (q.diag[d] * v + q.linear[d]) * v; };
        s += std::max(term(box.lower()[d]), term(box.upper()[d]));
    }
    return s;
}

ScalarFunc operator+(const ScalarFunc& a, const ScalarFunc& b) {
    if (const auto* ca = std::get_if<Constant>(&a.rep())) {
        if (const auto* cb = std::get_if<Constant>(&b.rep())) return Constant{ca->value + cb->value};
    }
    const std::size_t n = std::max(a.dim(), b.dim());
    if (a.dim() != 0 && b.dim() != 0) require_dim(a.dim(), b.dim());
    if (a.is_affine() && b.is_affine()) {
        const QuadraticDiag qa = a.as_quadratic(n), qb = b.as_quadratic(n);
        Vec slope(n);
        for (std::size_t d = 0; d < n; ++d) slope[d] = qa.linear[d] + qb.linear[d];
        return Affine{std::move(slope), qa.intercept + qb.intercept};
    }
    QuadraticDiag qa = a.as_quadratic(n);
    const QuadraticDiag qb = b.as_quadratic(n);
    for (std::size_t d = 0; d < n; ++d) {
        qa.diag[d] += qb.diag[d];
        qa.linear[d] += qb.linear[d];
    }
    qa.intercept += qb.intercept;
    return qa;
}

ScalarFunc operator*(double s, const ScalarFunc& f) {
    if (!(s >= 0.0) && !f.is_affine())
        throw std::invalid_argument("scaling a quadratic by a negative factor breaks convexity");
    return std::visit(overloaded{[s](const Affine& a) -> ScalarFunc {
                                     Affine r = a;
                                     for (double& v : r.slope) v *= s;
                                     r.intercept *= s;
                                     return r;
                                 },
                                 [s](const Constant& c) -> ScalarFunc { return Constant{s * c.value}; },
                                 [s](const QuadraticDiag& q) -> ScalarFunc {
                                     QuadraticDiag r = q;
                                     for (double& v : r.diag) v *= s;
                                     for (double& v : r.linear) v *= s;
                                     r.intercept *= s;
                                     return r;
                                 }},
                      f.rep());
}

}  // namespace pftrl
