#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pftrl/box.hpp"
#include "pftrl/problem.hpp"
#include "pftrl/trace.hpp"

namespace pftrl {

struct BenchmarkPoint {
    Vec point;
    double value = 0.0;  // sum_{i<=t} f_i(point)
    bool empty = true;
};

/// Grid masks of the three benchmark sets at horizon t:
///   X_min:      g_i^{(j)}(x) <= tol for every i <= t, j
///   X_hat_max:  (1/i) sum_{k<=i} g_k^{(j)}(x) <= tol for every i <= t, j
///   X_max:      (1/t) sum_{k<=t} g_k^{(j)}(x) <= tol for every j
struct BenchmarkSets {
    std::int64_t horizon = 0;
    int grid = 0;
    double tol = 1e-9;
    std::vector<Vec> points;  // lexicographic grid order
    std::vector<char> x_min;
    std::vector<char> x_hat_max;
    std::vector<char> x_max;
    BenchmarkPoint best_min;
    BenchmarkPoint best_hat_max;
    BenchmarkPoint best_max;
};

/// Throws std::runtime_error naming the first prefix at which X_hat_max
/// became empty.
BenchmarkSets compute_benchmarks(const ProblemInstance& instance, std::int64_t horizon, int grid = 2001,
                                 double tol = 1e-9);

/// Index of the first grid point where the masks are not nested, or -1.
std::int64_t first_containment_failure(const BenchmarkSets& sets);

/// R_tau = sum_{i<=tau} (f_i(x_i) - f_i(y)).
std::vector<double> regret(const RunTrace& trace, std::span<const double> y);

struct ViolationSeries {
    std::vector<double> v_h;    // sum_{i<=tau} h_i(x_i)
    std::vector<double> v_sum;  // sum_j max{0, sum_{i<=tau} g_i^{(j)}(x_i)}
};
ViolationSeries violation(const RunTrace& trace);

/// Fills trace.violation_h / violation_sum.
void fill_violation(RunTrace& trace);

// ---------------------------------------------------------------------------
// CSV: t,x,f,lambda,h_inst,V_h,V_sum,R

inline constexpr const char* kCsvHeader = "t,x,f,lambda,h_inst,V_h,V_sum,R";

/// Shortest text that keeps 17 significant digits.
std::string format_double(double v);

void write_csv(const RunTrace& trace, std::ostream& out);
/// Writes the file; errors carry the path.
void emit_csv(const RunTrace& trace, const std::string& path);

struct CsvRow {
    std::int64_t t = 0;
    Vec x;
    double f = 0.0;
    std::optional<Vec> lambda;
    double h = 0.0;
    double v_h = 0.0;
    double v_sum = 0.0;
    std::optional<double> r;
};

struct CsvTrace {
    std::string config_digest;
    std::vector<CsvRow> rows;
};

CsvTrace parse_csv(std::istream& in);

/// "{experiment}_{algo}_c{c}_seed{seed}.csv"
std::string csv_filename(const std::string& experiment, const std::string& algorithm, double c, std::uint64_t seed);

}  // namespace pftrl
