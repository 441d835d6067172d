#include "pftrl/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pftrl {

// ---------------------------------------------------------------------------
// HingeIndex

void HingeIndex::insert(double a, double b) {
    if (a == 0.0) {
        flat_ += std::max(0.0, b);
        ++flat_count_;
        return;
    }
    const Piece p{-b / a, a, b};
    auto by_root = [](const Piece& l, const Piece& r) { return l.root < r.root; };
    if (a > 0.0) {
        auto it = std::upper_bound(rising_.begin(), rising_.end(), p, by_root);
        const auto pos = static_cast<std::size_t>(it - rising_.begin());
        rising_.insert(it, p);
        rise_a_.resize(rising_.size() + 1);
        rise_b_.resize(rising_.size() + 1);
        for (std::size_t k = pos; k < rising_.size(); ++k) {
            rise_a_[k + 1] = rise_a_[k] + rising_[k].a;
            rise_b_[k + 1] = rise_b_[k] + rising_[k].b;
        }
    } else {
        falling_.insert(std::upper_bound(falling_.begin(), falling_.end(), p, by_root), p);
        const std::size_t n = falling_.size();
        fall_a_.resize(n + 1);
        fall_b_.resize(n + 1);
        fall_a_[n] = 0.0;
        fall_b_[n] = 0.0;
        for (std::size_t k = n; k-- > 0;) {
            fall_a_[k] = fall_a_[k + 1] + falling_[k].a;
            fall_b_[k] = fall_b_[k + 1] + falling_[k].b;
        }
    }
}

namespace {
template <class It, class T, class Cmp>
std::size_t bound_index(It first, It last, const T& v, Cmp cmp) {
    return static_cast<std::size_t>(std::partition_point(first, last, [&](const auto& p) { return cmp(p.root, v); }) - first);
}
}  // namespace

double HingeIndex::value(double x) const {
    // rising active where root < x; falling active where root > x
    const std::size_t kr = bound_index(rising_.begin(), rising_.end(), x, [](double r, double v) { return r < v; });
    const std::size_t kf = bound_index(falling_.begin(), falling_.end(), x, [](double r, double v) { return r <= v; });
    const double rise = kr ? rise_a_[kr] * x + rise_b_[kr] : 0.0;
    const double fall = kf < falling_.size() ? fall_a_[kf] * x + fall_b_[kf] : 0.0;
    return std::max(0.0, rise) + std::max(0.0, fall) + flat_;
}

double HingeIndex::derivative(double x, Side side) const {
    std::size_t kr, kf;
    if (side == Side::Right) {
        kr = bound_index(rising_.begin(), rising_.end(), x, [](double r, double v) { return r <= v; });
        kf = bound_index(falling_.begin(), falling_.end(), x, [](double r, double v) { return r <= v; });
    } else {
        kr = bound_index(rising_.begin(), rising_.end(), x, [](double r, double v) { return r < v; });
        kf = bound_index(falling_.begin(), falling_.end(), x, [](double r, double v) { return r < v; });
    }
    return rise_a_[kr] + fall_a_[kf];
}

// ---------------------------------------------------------------------------
// PenaltyState

PenaltyState::PenaltyState(std::size_t m, std::size_t n) : m_(m), n_(n), stride_(2 * n + 1), sums_(m * (2 * n + 1), 0.0) {
    if (m == 0) throw std::invalid_argument("penalty: need at least one constraint");
    if (n == 0) throw std::invalid_argument("penalty: dimension must be positive");
}

void PenaltyState::push(std::span<const ScalarFunc> g) {
    if (g.size() != m_)
        throw std::invalid_argument("penalty: expected " + std::to_string(m_) + " constraints, got " +
                                    std::to_string(g.size()));
    for (const auto& f : g) {
        if (f.dim() != 0 && f.dim() != n_) throw std::invalid_argument("penalty: constraint dimension mismatch");
    }
    ++tau_;
    const double count = static_cast<double>(tau_);
    history_.resize(static_cast<std::size_t>(tau_) * m_ * stride_);
    double* avg = history_.data() + static_cast<std::size_t>(tau_ - 1) * m_ * stride_;
    for (std::size_t j = 0; j < m_; ++j) {
        const QuadraticDiag q = g[j].as_quadratic(n_);
        affine_ = affine_ && g[j].is_affine();
        double* s = sums_.data() + j * stride_;
        for (std::size_t d = 0; d < n_; ++d) {
            s[d] += q.diag[d];
            s[n_ + d] += q.linear[d];
        }
        s[2 * n_] += q.intercept;
        for (std::size_t k = 0; k < stride_; ++k) avg[j * stride_ + k] = s[k] / count;
        if (uses_hinge_index()) hinges_.insert(avg[j * stride_ + 1], avg[j * stride_ + 2]);
    }
}

PenaltyState PenaltyState::pushed(std::span<const ScalarFunc> g) const {
    PenaltyState next = *this;
    next.push(g);
    return next;
}

const double* PenaltyState::coeffs(std::int64_t i, std::size_t j) const {
    if (i < 1 || i > tau_) throw std::out_of_range("penalty: prefix index " + std::to_string(i) + " out of range");
    if (j >= m_) throw std::out_of_range("penalty: constraint index out of range");
    return history_.data() + (static_cast<std::size_t>(i - 1) * m_ + j) * stride_;
}

double PenaltyState::eval_coeffs(const double* c, std::span<const double> x) const {
    double s = c[2 * n_];
    for (std::size_t d = 0; d < n_; ++d) s += (c[d] * x[d] + c[n_ + d]) * x[d];
    return s;
}

std::int64_t PenaltyState::resolve(std::int64_t upto) const {
    if (tau_ < 1) throw std::logic_error("penalty: undefined before the first push");
    if (upto <= 0) return tau_;
    if (upto > tau_) throw std::out_of_range("penalty: prefix beyond current step");
    return upto;
}

ScalarFunc PenaltyState::accumulated(std::size_t j) const {
    if (j >= m_) throw std::out_of_range("penalty: constraint index out of range");
    const double* s = sums_.data() + j * stride_;
    if (affine_) {
        if (tau_ == 0) return ScalarFunc::constant(0.0);
        bool flat = true;
        for (std::size_t d = 0; d < n_; ++d) flat = flat && s[n_ + d] == 0.0;
        if (flat) return ScalarFunc::constant(s[2 * n_]);
        return ScalarFunc::affine(Vec(s + n_, s + 2 * n_), s[2 * n_]);
    }
    return ScalarFunc::quadratic(Vec(s, s + n_), Vec(s + n_, s + 2 * n_), s[2 * n_]);
}

ScalarFunc PenaltyState::averaged(std::size_t j, std::int64_t i) const {
    const double* c = coeffs(i, j);
    if (affine_) {
        bool flat = true;
        for (std::size_t d = 0; d < n_; ++d) flat = flat && c[n_ + d] == 0.0;
        if (flat) return ScalarFunc::constant(c[2 * n_]);
        return ScalarFunc::affine(Vec(c + n_, c + 2 * n_), c[2 * n_]);
    }
    return ScalarFunc::quadratic(Vec(c, c + n_), Vec(c + n_, c + 2 * n_), c[2 * n_]);
}

double PenaltyState::average_value(std::size_t j, std::int64_t i, std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    return eval_coeffs(coeffs(i, j), x);
}

Vec PenaltyState::average_gradient(std::size_t j, std::int64_t i, std::span<const double> x) const {
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    const double* c = coeffs(i, j);
    Vec g(n_);
    for (std::size_t d = 0; d < n_; ++d) g[d] = 2.0 * c[d] * x[d] + c[n_ + d];
    return g;
}

double PenaltyState::h_at(std::int64_t i, std::span<const double> x) const {
    i = resolve(i);
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 0; j < m_; ++j) s += std::max(0.0, eval_coeffs(coeffs(i, j), x));
    return s;
}

double PenaltyState::prefix_penalty(std::span<const double> x, std::int64_t upto) const {
    upto = resolve(upto);
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    if (upto == tau_ && uses_hinge_index()) return hinges_.value(x[0]);
    double s = 0.0;
    const double* c = history_.data();
    const std::size_t count = static_cast<std::size_t>(upto) * m_;
    for (std::size_t k = 0; k < count; ++k, c += stride_) s += std::max(0.0, eval_coeffs(c, x));
    return s;
}

double PenaltyState::prefix_penalty_derivative(double x, Side side, std::int64_t upto) const {
    upto = resolve(upto);
    if (n_ != 1) throw std::logic_error("penalty: one-sided derivative needs dimension 1");
    if (upto == tau_ && uses_hinge_index()) return hinges_.derivative(x, side);
    double s = 0.0;
    const double* c = history_.data();
    const std::size_t count = static_cast<std::size_t>(upto) * m_;
    for (std::size_t k = 0; k < count; ++k, c += stride_) {
        const double v = (c[0] * x + c[1]) * x + c[2];
        const double d = 2.0 * c[0] * x + c[1];
        if (v > 0.0)
            s += d;
        else if (v == 0.0)
            s += side == Side::Right ? std::max(0.0, d) : std::min(0.0, d);
    }
    return s;
}

Vec PenaltyState::prefix_penalty_subgradient(std::span<const double> x, std::int64_t upto) const {
    upto = resolve(upto);
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    if (upto == tau_ && uses_hinge_index()) return Vec{hinges_.derivative(x[0], Side::Right)};
    Vec g(n_, 0.0);
    const double* c = history_.data();
    const std::size_t count = static_cast<std::size_t>(upto) * m_;
    for (std::size_t k = 0; k < count; ++k, c += stride_) {
        if (eval_coeffs(c, x) > 0.0)
            for (std::size_t d = 0; d < n_; ++d) g[d] += 2.0 * c[d] * x[d] + c[n_ + d];
    }
    return g;
}

std::size_t PenaltyState::active_pairs(std::span<const double> x, std::int64_t upto, double tol) const {
    upto = resolve(upto);
    std::size_t count = 0;
    const double* c = history_.data();
    const std::size_t total = static_cast<std::size_t>(upto) * m_;
    for (std::size_t k = 0; k < total; ++k, c += stride_)
        if (eval_coeffs(c, x) >= -tol) ++count;
    return count;
}

double PenaltyState::max_average(std::span<const double> x, std::int64_t after, std::int64_t upto) const {
    upto = resolve(upto);
    if (x.size() != n_) throw std::invalid_argument("penalty: point dimension mismatch");
    if (after < 0 || after >= upto) throw std::invalid_argument("penalty: empty prefix window");
    double best = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = after + 1; i <= upto; ++i)
        for (std::size_t j = 0; j < m_; ++j) best = std::max(best, eval_coeffs(coeffs(i, j), x));
    return best;
}

// ---------------------------------------------------------------------------
// free operations

PenaltyState push_constraints(const PenaltyState& state, std::span<const ScalarFunc> g) { return state.pushed(g); }

double eval_h(const PenaltyState& state, std::span<const double> x) { return state.h(x); }

double eval_prefix_penalty(const PenaltyState& state, std::span<const double> x) { return state.prefix_penalty(x); }

namespace {

Vec lerp(const Vec& a, const Vec& b, double s) {
    Vec r(a.size());
    for (std::size_t d = 0; d < a.size(); ++d) r[d] = a[d] + s * (b[d] - a[d]);
    return r;
}

double grid_coord(const BoxDomain& box, std::size_t d, int k, int points) {
    const double lo = box.lower()[d], hi = box.upper()[d];
    if (k == points - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

}  // namespace

std::int64_t estimate_k_tau(const PenaltyState& state, const BoxDomain& box, int points_per_axis, std::int64_t upto,
                            double active_tol) {
    const std::size_t n = box.dim();
    if (n != state.dim()) throw std::invalid_argument("k_tau: box/state dimension mismatch");
    if (n > 2) throw std::invalid_argument("k_tau: grid estimate supports dimension <= 2");
    if (points_per_axis < 100) throw std::invalid_argument("k_tau: need at least 100 grid points per axis");
    if (upto <= 0) upto = state.steps();

    const int p = points_per_axis;
    const int rows = n == 2 ? p : 1;
    std::vector<Vec> points;
    std::vector<char> zero;
    points.reserve(static_cast<std::size_t>(p) * rows);
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < rows; ++b) {
            Vec x{grid_coord(box, 0, a, p)};
            if (n == 2) x.push_back(grid_coord(box, 1, b, p));
            zero.push_back(state.prefix_penalty(x, upto) == 0.0 ? 1 : 0);
            points.push_back(std::move(x));
        }
    }

    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    auto refine = [&](std::size_t inside, std::size_t outside) {
        Vec lo = points[inside], hi = points[outside];
        for (int it = 0; it < 200; ++it) {
            Vec mid = lerp(lo, hi, 0.5);
            if (mid == lo || mid == hi) break;
            if (state.prefix_penalty(mid, upto) == 0.0)
                lo = std::move(mid);
            else
                hi = std::move(mid);
        }
        best = std::min(best, static_cast<std::int64_t>(state.active_pairs(lo, upto, active_tol)));
    };
    auto edge = [&](std::size_t u, std::size_t v) {
        if (zero[u] && !zero[v]) refine(u, v);
        if (zero[v] && !zero[u]) refine(v, u);
    };
    for (int a = 0; a < p; ++a) {
        for (int b = 0; b < rows; ++b) {
            const std::size_t u = static_cast<std::size_t>(a) * rows + b;
            if (a + 1 < p) edge(u, u + rows);
            if (n == 2 && b + 1 < rows) edge(u, u + 1);
        }
    }
    if (best == std::numeric_limits<std::int64_t>::max())
        throw std::runtime_error("k_tau: no boundary (feasible prefix set is empty or the whole box)");
    return best;
}

double gamma_threshold(double E, double L, double beta) {
    if (!(beta > 0.0)) throw std::domain_error("gamma threshold: penalty growth condition violated (beta <= 0)");
    return (E + L + 1.0) / beta;
}

LossGapConstants compute_E_L(const ProblemInstance& instance, std::span<const double> z) {
    const BoxDomain& box = instance.domain;
    if (!box.contains(z)) throw std::invalid_argument("E/L: reference point outside the domain");
    LossGapConstants out;
    const double zz = squared_norm(z);
    double e = -std::numeric_limits<double>::infinity();
    for (const Vec& y : box.corners()) e = std::max(e, squared_norm(y) - zz);
    out.E = e;
    out.L = instance.lipschitz_loss * box.diameter();
    double ld = -std::numeric_limits<double>::infinity();
    for (const auto& f : instance.losses.cycle()) ld = std::max(ld, max_on_box(f, box) - eval(f, z));
    out.L_direct = ld;
    return out;
}

double slater_margin(const PenaltyState& state, std::span<const double> z, std::int64_t after) {
    return -state.max_average(z, after);
}

}  // namespace pftrl
