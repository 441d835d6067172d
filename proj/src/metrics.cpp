#include "pftrl/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include "pftrl/solver.hpp"

namespace pftrl {

BenchmarkSets compute_benchmarks(const ProblemInstance& instance, std::int64_t horizon, int grid, double tol) {
    const BoxDomain& box = instance.domain;
    const std::size_t n = box.dim();
    if (n > 2) throw std::invalid_argument("benchmarks: dimension must be <= 2");
    if (horizon < 1) throw std::invalid_argument("benchmarks: horizon must be >= 1");
    if (grid < 2) throw std::invalid_argument("benchmarks: grid needs at least 2 points per axis");

    BenchmarkSets s;
    s.horizon = horizon;
    s.grid = grid;
    s.tol = tol;
    const int rows = n == 2 ? grid : 1;
    for (int a = 0; a < grid; ++a) {
        for (int b = 0; b < rows; ++b) {
            Vec x{grid_point(box.lower()[0], box.upper()[0], a, grid)};
            if (n == 2) x.push_back(grid_point(box.lower()[1], box.upper()[1], b, grid));
            s.points.push_back(std::move(x));
        }
    }
    const std::size_t P = s.points.size();
    const std::size_t m = instance.m;
    s.x_min.assign(P, 1);
    s.x_hat_max.assign(P, 1);
    s.x_max.assign(P, 1);

    std::vector<double> sums(P * m, 0.0);
    std::size_t hat_alive = P;
    std::int64_t first_empty = 0;
    ScalarFunc loss_sum = ScalarFunc::constant(0.0);
    for (std::int64_t i = 1; i <= horizon; ++i) {
        const auto g = instance.constraints_at(i);
        loss_sum = loss_sum + instance.losses.at(i);
        const double di = static_cast<double>(i);
        for (std::size_t p = 0; p < P; ++p) {
            for (std::size_t j = 0; j < m; ++j) {
                const double v = eval(g[j], s.points[p]);
                double& acc = sums[p * m + j];
                acc += v;
                if (v > tol) s.x_min[p] = 0;
                if (s.x_hat_max[p] && acc / di > tol) {
                    s.x_hat_max[p] = 0;
                    --hat_alive;
                }
            }
        }
        if (hat_alive == 0 && first_empty == 0) first_empty = i;
    }
    if (first_empty != 0)
        throw std::runtime_error("benchmarks: X_hat_max is empty on the grid; first infeasible prefix i = " +
                                 std::to_string(first_empty));
    const double dt = static_cast<double>(horizon);
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t j = 0; j < m; ++j)
            if (sums[p * m + j] / dt > tol) s.x_max[p] = 0;

    auto best_of = [&](const std::vector<char>& mask) {
        BenchmarkPoint b;
        b.value = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < P; ++p) {
            if (!mask[p]) continue;
            const double v = eval(loss_sum, s.points[p]);
            if (v < b.value) {
                b.value = v;
                b.point = s.points[p];
                b.empty = false;
            }
        }
        return b;
    };
    s.best_min = best_of(s.x_min);
    s.best_hat_max = best_of(s.x_hat_max);
    s.best_max = best_of(s.x_max);
    return s;
}

std::int64_t first_containment_failure(const BenchmarkSets& sets) {
    for (std::size_t p = 0; p < sets.points.size(); ++p) {
        if (sets.x_min[p] && !sets.x_hat_max[p]) return static_cast<std::int64_t>(p);
        if (sets.x_hat_max[p] && !sets.x_max[p]) return static_cast<std::int64_t>(p);
    }
    return -1;
}

std::vector<double> regret(const RunTrace& trace, std::span<const double> y) {
    std::vector<double> r;
    r.reserve(trace.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        acc += trace.loss_values[i] - eval(trace.losses[i], y);
        r.push_back(acc);
    }
    return r;
}

ViolationSeries violation(const RunTrace& trace) {
    ViolationSeries v;
    v.v_h.reserve(trace.size());
    v.v_sum.reserve(trace.size());
    double vh = 0.0;
    Vec sums;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        vh += trace.penalty_values[i];
        v.v_h.push_back(vh);
        const Vec& g = trace.constraint_values[i];
        if (sums.empty()) sums.assign(g.size(), 0.0);
        double vs = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            sums[j] += g[j];
            vs += std::max(0.0, sums[j]);
        }
        v.v_sum.push_back(vs);
    }
    return v;
}

void fill_violation(RunTrace& trace) {
    ViolationSeries v = violation(trace);
    trace.violation_h = std::move(v.v_h);
    trace.violation_sum = std::move(v.v_sum);
}

// ---------------------------------------------------------------------------
// CSV

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace {

std::string join(const Vec& v) {
    std::string s;
    for (std::size_t d = 0; d < v.size(); ++d) {
        if (d) s += ';';
        s += format_double(v[d]);
    }
    return s;
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error("csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
    return v;
}

Vec parse_vec(std::string_view s, std::size_t line) {
    Vec out;
    std::size_t start = 0;
    while (true) {
        const std::size_t end = s.find(';', start);
        out.push_back(parse_double(s.substr(start, end == std::string_view::npos ? end : end - start), line));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

void write_csv(const RunTrace& trace, std::ostream& out) {
    if (!trace.config_digest.empty()) out << "# config_digest=" << trace.config_digest << '\n';
    out << kCsvHeader << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << (i + 1) << ',' << join(trace.actions[i]) << ',' << format_double(trace.loss_values[i]) << ',';
        if (!trace.duals.empty()) out << join(trace.duals[i]);
        out << ',' << format_double(trace.penalty_values[i]) << ',' << format_double(trace.violation_h[i]) << ','
            << format_double(trace.violation_sum[i]) << ',';
        if (!trace.regret.empty()) out << format_double(trace.regret[i]);
        out << '\n';
    }
}

void emit_csv(const RunTrace& trace, const std::string& path) {
    std::ostringstream buf;
    write_csv(trace, buf);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    const std::string s = buf.str();
    f.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

CsvTrace parse_csv(std::istream& in) {
    CsvTrace out;
    std::string line;
    std::size_t lineno = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string key = "# config_digest=";
            if (line.rfind(key, 0) == 0) out.config_digest = line.substr(key.size());
            continue;
        }
        if (!header) {
            if (line != kCsvHeader) throw std::runtime_error("csv line " + std::to_string(lineno) + ": unexpected header");
            header = true;
            continue;
        }
        std::vector<std::string_view> f;
        std::string_view rest(line);
        while (true) {
            const std::size_t c = rest.find(',');
            f.push_back(rest.substr(0, c));
            if (c == std::string_view::npos) break;
            rest.remove_prefix(c + 1);
        }
        if (f.size() != 8) throw std::runtime_error("csv line " + std::to_string(lineno) + ": expected 8 fields");
        CsvRow r;
        r.t = static_cast<std::int64_t>(parse_double(f[0], lineno));
        r.x = parse_vec(f[1], lineno);
        r.f = parse_double(f[2], lineno);
        if (!f[3].empty()) r.lambda = parse_vec(f[3], lineno);
        r.h = parse_double(f[4], lineno);
        r.v_h = parse_double(f[5], lineno);
        r.v_sum = parse_double(f[6], lineno);
        if (!f[7].empty()) r.r = parse_double(f[7], lineno);
        out.rows.push_back(std::move(r));
    }
    if (!header) throw std::runtime_error("csv: missing header");
    return out;
}

std::string csv_filename(const std::string& experiment, const std::string& algorithm, double c, std::uint64_t seed) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, c);
    return experiment + "_" + algorithm + "_c" + std::string(buf, res.ptr) + "_seed" + std::to_string(seed) + ".csv";
}

}  // namespace pftrl
