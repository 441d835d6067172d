#include "pftrl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace pftrl {
namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
constexpr double kInf = std::numeric_limits<double>::infinity();

double hinge_derivative(double v, double d, Side side) {
    if (v > 0.0) return d;
    if (v < 0.0) return 0.0;
    return side == Side::Right ? std::max(0.0, d) : std::min(0.0, d);
}

// ---------------------------------------------------------------------------
// 1-D: golden section + cutting-plane certificate

SolveReport solve_1d(const ConvexObjective& obj, double lo, double hi, const SolveOptions& opt) {
    std::int64_t evals = 0;
    auto f = [&](double x) {
        ++evals;
        return obj.value(std::span<const double>(&x, 1));
    };

    double a = lo, b = hi;
    double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > opt.bracket_width && evals < opt.max_iterations) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }

    double best_x = fc <= fd ? c : d;
    double best_f = std::min(fc, fd);
    auto consider = [&](double x) {
        const double v = f(x);
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
        return v;
    };

    double gap = kInf;
    for (int round = 0; round < 600 && evals < opt.max_iterations; ++round) {
        // the minimiser must sit inside [a, b]; widen back to the box edge otherwise
        if (a > lo && obj.derivative(a, Side::Left) > 0.0) {
            b = a;
            a = lo;
            continue;
        }
        if (b < hi && obj.derivative(b, Side::Right) < 0.0) {
            a = b;
            b = hi;
            continue;
        }
        const double fa = consider(a), fb = consider(b);
        const double sa = obj.derivative(a, Side::Right), sb = obj.derivative(b, Side::Left);
        double lower;
        if (sa >= 0.0) {
            lower = fa;
        } else if (sb <= 0.0) {
            lower = fb;
        } else {
            double y = (fb - fa + sa * a - sb * b) / (sa - sb);
            y = std::clamp(y, a, b);
            lower = std::max(fa + sa * (y - a), fb + sb * (y - b));
            consider(y);
        }
        gap = std::max(0.0, best_f - lower);
        if (gap <= opt.tol) return SolveReport{Vec{best_x}, best_f, evals, gap};

        const double mid = 0.5 * (a + b);
        if (!(mid > a && mid < b)) break;
        if (obj.derivative(mid, Side::Right) < 0.0) {
            a = mid;
        } else if (obj.derivative(mid, Side::Left) > 0.0) {
            b = mid;
        } else {
            // 0 lies in the subdifferential at mid
            const double v = f(mid);
            return SolveReport{Vec{mid}, v, evals, std::max(0.0, v - std::min(v, best_f))};
        }
    }
    throw SolverError("solver: 1-D certificate did not reach tolerance (gap " + std::to_string(gap) + ")",
                      Vec{best_x}, gap);
}

// ---------------------------------------------------------------------------
// n = 2, 3: nested golden section on values only

struct NestedResult {
    double value;
    double gap;
};

// Chord lower bound of a convex function over the final bracket [a, b]
// from four points a < c < d < b. Regions discarded earlier are covered by
// convexity: they lie beyond a probe whose value is not below the best one.
double chord_lower_bound(double a, double c, double d, double b, double fa, double fc, double fd, double fb) {
    auto line = [](double x0, double f0, double x1, double f1) {
        const double s = (f1 - f0) / (x1 - x0);
        return [=](double y) { return f0 + s * (y - x0); };
    };
    double lower = std::min({fa, fb, fc, fd});
    if (c > a && d > c && b > d) {
        const auto cd = line(c, fc, d, fd);
        const auto ac = line(a, fa, c, fc);
        const auto db = line(d, fd, b, fb);
        lower = std::min({lower, cd(a), cd(b)});
        // middle: max of the two outer chords, minimised over [c, d]
        const double sac = (fc - fa) / (c - a), sdb = (fb - fd) / (b - d);
        double y = c;
        if (sdb != sac) y = std::clamp((fd - fa + sac * a - sdb * d) / (sac - sdb), c, d);
        lower = std::min({lower, std::max(ac(y), db(y)), std::max(ac(c), db(c)), std::max(ac(d), db(d))});
    }
    return lower;
}

NestedResult nested_golden(const ConvexObjective& obj, const BoxDomain& box, Vec& x, std::size_t axis,
                           std::int64_t& evals) {
    const std::size_t n = box.dim();
    const double lo = box.lower()[axis], hi = box.upper()[axis];

    struct Probe {
        double at;
        double value;
        double gap;
        Vec x;
    };
    auto probe = [&](double v) {
        Probe p{v, 0.0, 0.0, x};
        p.x[axis] = v;
        if (axis + 1 == n) {
            ++evals;
            p.value = obj.value(p.x);
        } else {
            const NestedResult r = nested_golden(obj, box, p.x, axis + 1, evals);
            p.value = r.value;
            p.gap = r.gap;
        }
        return p;
    };

    Probe pa = probe(lo), pb = probe(hi);
    Probe pc = probe(hi - kInvPhi * (hi - lo)), pd = probe(lo + kInvPhi * (hi - lo));
    double inner_gap = std::max({pa.gap, pb.gap, pc.gap, pd.gap});
    for (int it = 0; it < 200; ++it) {
        const double width = pb.at - pa.at;
        if (width <= 8.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(pa.at), std::abs(pb.at)}))
            break;
        if (pc.value <= pd.value) {
            pb = std::move(pd);
            pd = pc;
            pc = probe(pb.at - kInvPhi * (pb.at - pa.at));
            inner_gap = std::max(inner_gap, pc.gap);
        } else {
            pa = std::move(pc);
            pc = pd;
            pd = probe(pa.at + kInvPhi * (pb.at - pa.at));
            inner_gap = std::max(inner_gap, pd.gap);
        }
        if (!(pa.at < pc.at && pc.at < pd.at && pd.at < pb.at)) break;
    }
    const Probe* best = &pa;
    for (const Probe* p : {&pb, &pc, &pd})
        if (p->value < best->value) best = p;
    const double lower = chord_lower_bound(pa.at, pc.at, pd.at, pb.at, pa.value, pc.value, pd.value, pb.value);
    x = best->x;
    // inexact inner values can mislead a discard by at most (1 + phi) * inner_gap
    return NestedResult{best->value, std::max(0.0, best->value - lower) + (2.0 + kInvPhi) * inner_gap};
}

// ---------------------------------------------------------------------------
// n >= 4: projected subgradient with weighted averaging

double strong_convexity_gap(const ConvexObjective& obj, const BoxDomain& box, std::span<const double> x,
                            double sigma) {
    const Vec s = obj.subgradient(x);
    double g = 0.0;
    for (std::size_t d = 0; d < x.size(); ++d) {
        const double u = std::clamp(-s[d] / sigma, box.lower()[d] - x[d], box.upper()[d] - x[d]);
        g -= s[d] * u + 0.5 * sigma * u * u;
    }
    return std::max(0.0, g);
}

SolveReport solve_subgradient(const ConvexObjective& obj, const BoxDomain& box, const SolveOptions& opt) {
    const double sigma = obj.strong_convexity();
    if (!(sigma > 0.0)) throw std::invalid_argument("solver: subgradient method needs a strongly convex objective");
    Vec x = opt.warm_start.size() == box.dim() ? box.project(opt.warm_start) : box.center();
    Vec avg = x;
    double weight = 0.0;
    double gap = kInf;
    for (std::int64_t k = 1; k <= opt.max_iterations; ++k) {
        const Vec g = obj.subgradient(x);
        const double step = 2.0 / (sigma * static_cast<double>(k + 1));
        for (std::size_t d = 0; d < x.size(); ++d) x[d] -= step * g[d];
        x = box.project(x);
        const double w = static_cast<double>(k);
        weight += w;
        for (std::size_t d = 0; d < x.size(); ++d) avg[d] += (w / weight) * (x[d] - avg[d]);
        if (k % 64 == 0 || k == opt.max_iterations) {
            gap = std::min(strong_convexity_gap(obj, box, avg, sigma), strong_convexity_gap(obj, box, x, sigma));
            if (gap <= opt.tol) {
                const Vec& pick = strong_convexity_gap(obj, box, avg, sigma) <= opt.tol ? avg : x;
                return SolveReport{pick, obj.value(pick), k, gap};
            }
        }
    }
    throw SolverError("solver: subgradient method hit the iteration cap (gap " + std::to_string(gap) + ")", avg,
                      gap);
}

}  // namespace

// ---------------------------------------------------------------------------

double ConvexObjective::derivative(double x, Side) const { return subgradient(std::span<const double>(&x, 1))[0]; }

FtrlObjective::FtrlObjective(double reg_scale, ScalarFunc loss_sum, double gamma, const PenaltyState& penalty)
    : reg_scale_(reg_scale), loss_sum_(std::move(loss_sum)), gamma_(gamma), penalty_(&penalty) {
    if (!(reg_scale >= 0.0)) throw std::invalid_argument("ftrl objective: negative regulariser scale");
    if (!(gamma >= 0.0)) throw std::invalid_argument("ftrl objective: negative gamma");
}

double FtrlObjective::value(std::span<const double> x) const {
    double v = reg_scale_ * squared_norm(x) + eval(loss_sum_, x);
    if (gamma_ != 0.0 && penalty_->steps() > 0) v += gamma_ * penalty_->prefix_penalty(x);
    return v;
}

Vec FtrlObjective::subgradient(std::span<const double> x) const {
    Vec g = subgrad(loss_sum_, x);
    for (std::size_t d = 0; d < x.size(); ++d) g[d] += 2.0 * reg_scale_ * x[d];
    if (gamma_ != 0.0 && penalty_->steps() > 0) {
        const Vec p = penalty_->prefix_penalty_subgradient(x);
        for (std::size_t d = 0; d < x.size(); ++d) g[d] += gamma_ * p[d];
    }
    return g;
}

double FtrlObjective::derivative(double x, Side side) const {
    const double one = 1.0;
    double v = 2.0 * reg_scale_ * x + directional_derivative(loss_sum_, std::span<const double>(&x, 1),
                                                             std::span<const double>(&one, 1));
    if (gamma_ != 0.0 && penalty_->steps() > 0) v += gamma_ * penalty_->prefix_penalty_derivative(x, side);
    return v;
}

ExactPenaltyObjective::ExactPenaltyObjective(ScalarFunc f, std::vector<ScalarFunc> constraints, double gamma,
                                             std::size_t n)
    : f_(std::move(f)), constraints_(std::move(constraints)), gamma_(gamma), n_(n) {
    if (!(gamma >= 0.0)) throw std::invalid_argument("exact penalty objective: negative gamma");
}

double ExactPenaltyObjective::value(std::span<const double> x) const {
    double v = eval(f_, x);
    for (const auto& g : constraints_) v += gamma_ * std::max(0.0, eval(g, x));
    return v;
}

Vec ExactPenaltyObjective::subgradient(std::span<const double> x) const {
    Vec s = subgrad(f_, x);
    for (const auto& g : constraints_) {
        if (eval(g, x) > 0.0) {
            const Vec gg = subgrad(g, x);
            for (std::size_t d = 0; d < s.size(); ++d) s[d] += gamma_ * gg[d];
        }
    }
    return s;
}

double ExactPenaltyObjective::derivative(double x, Side side) const {
    const std::span<const double> xs(&x, 1);
    double v = subgrad(f_, xs)[0];
    for (const auto& g : constraints_) v += gamma_ * hinge_derivative(eval(g, xs), subgrad(g, xs)[0], side);
    return v;
}

SolveReport solve(const ConvexObjective& objective, const BoxDomain& box, const SolveOptions& options) {
    if (objective.dim() != box.dim()) throw std::invalid_argument("solver: objective/box dimension mismatch");
    if (!(options.tol >= 1e-12)) throw std::invalid_argument("solver: tolerance must be >= 1e-12");
    const std::size_t n = box.dim();
    if (n == 1) return solve_1d(objective, box.lower()[0], box.upper()[0], options);
    if (n <= 3) {
        std::int64_t evals = 0;
        Vec x = box.center();
        const NestedResult r = nested_golden(objective, box, x, 0, evals);
        if (r.gap > options.tol)
            throw SolverError("solver: nested search certificate above tolerance (gap " + std::to_string(r.gap) + ")",
                              x, r.gap);
        return SolveReport{x, r.value, evals, r.gap};
    }
    return solve_subgradient(objective, box, options);
}

double grid_point(double lo, double hi, int k, int points) {
    if (k >= points - 1) return hi;
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
}

GridMinimum grid_minimize(const std::function<double(std::span<const double>)>& f, const BoxDomain& box,
                          int points_per_axis) {
    const std::size_t n = box.dim();
    if (n > 2) throw std::invalid_argument("grid oracle: dimension must be <= 2");
    if (points_per_axis < 2) throw std::invalid_argument("grid oracle: need at least 2 points per axis");
    GridMinimum best{Vec(n), kInf};
    Vec x(n);
    const int rows = n == 2 ? points_per_axis : 1;
    for (int a = 0; a < points_per_axis; ++a) {
        x[0] = grid_point(box.lower()[0], box.upper()[0], a, points_per_axis);
        for (int b = 0; b < rows; ++b) {
            if (n == 2) x[1] = grid_point(box.lower()[1], box.upper()[1], b, points_per_axis);
            const double v = f(x);
            if (v < best.value) best = GridMinimum{x, v};
        }
    }
    return best;
}

}  // namespace pftrl
