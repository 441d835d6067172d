// Acceptance suite: one PASS/FAIL line per criterion. Exits 0 when the set
// of failing criteria equals --expected-fail (empty by default).

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pftrl/algorithms.hpp"
#include "pftrl/digest.hpp"
#include "pftrl/experiment.hpp"
#include "pftrl/generators.hpp"
#include "pftrl/metrics.hpp"
#include "pftrl/penalty.hpp"
#include "pftrl/solver.hpp"

#ifndef PFTRL_CONFIG_DIR
#define PFTRL_CONFIG_DIR "configs"
#endif

using namespace pftrl;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace tol {
constexpr double kStaticFeasibility = 1e-6;
constexpr double kStaticValue = 1e-6;  // plus grid spacing * L_f
constexpr double kStaticSeconds = 10.0;
constexpr double kBtl = 1e-6;
constexpr double kBtlSeconds = 30.0;
constexpr double kLipschitz = 1e-12;
constexpr double kStability = 1e-6;
constexpr double kFeasibility = 1e-6;
constexpr double kRateViolationMax = 2.6;
constexpr double kRateRegretMax = 1.5;
constexpr double kRateViolationMin = 2.55;
constexpr double kRateSeconds = 300.0;
constexpr double kPeriodicMargin = 1.0;
constexpr double kActivationMargin = 5.0;
}  // namespace tol

namespace {

std::set<int> failed;

void verdict(int id, bool pass, const std::string& name, const std::string& detail) {
    std::printf("%s criterion %2d  %-28s %s\n", pass ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) failed.insert(id);
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

const BoxDomain kPaperBox({-10.0}, {10.0});

FamilySpec activation_family(double c) {
    return FamilySpec{{StreamSpec{{ScalarFunc::constant(-0.01), ScalarFunc::affine({1.0})}, ActivationRateLaw{c, 0.1}, {}}}};
}

// ---------------------------------------------------------------------------

void exact_penalty() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(1001);
    int bad = 0;
    double worst_gap = 0.0, worst_violation = 0.0;
    for (int k = 0; k < 20; ++k) {
        const std::size_t n = k < 10 ? 1 : 2;
        const BoxDomain box(Vec(n, -10.0), Vec(n, 10.0));
        Vec z(n), slope(n), diag(n), lin(n);
        for (std::size_t d = 0; d < n; ++d) {
            z[d] = uniform(rng, -5, 5);
            slope[d] = uniform(rng, -3, 3);
            diag[d] = uniform(rng, 0, 1);
            lin[d] = uniform(rng, -3, 3);
        }
        const ScalarFunc f = k % 2 ? ScalarFunc::quadratic(diag, lin, 0.0) : ScalarFunc::affine(slope);
        std::vector<ScalarFunc> g;
        const int m = 1 + static_cast<int>(uniform(rng, 0, 3));
        for (int j = 0; j < m; ++j) {
            Vec a(n);
            for (double& v : a) v = uniform(rng, -2, 2);
            double az = 0.0;
            for (std::size_t d = 0; d < n; ++d) az += a[d] * z[d];
            g.push_back(ScalarFunc::affine(a, -az - uniform(rng, 0.5, 3)));
        }
        for (const auto& gj : g)
            if (!(eval(gj, z) < 0)) ++bad;  // Slater point check
        const auto r = exact_penalty_static_solve(f, g, box, z);
        const int points = 2001;
        const auto opt = grid_minimize(
            [&](std::span<const double> x) {
                for (const auto& gj : g)
                    if (eval(gj, x) > 0) return std::numeric_limits<double>::infinity();
                return eval(f, x);
            },
            box, points);
        const double spacing = 20.0 / (points - 1);
        const double allowed = tol::kStaticValue + spacing * lipschitz_on_box(f, box);
        const double gap = std::abs(eval(f, r.x) - opt.value);
        worst_gap = std::max(worst_gap, gap / allowed);
        worst_violation = std::max(worst_violation, r.max_violation);
        if (r.max_violation > tol::kStaticFeasibility || gap > allowed) ++bad;
    }
    const double secs = seconds_since(t0);
    verdict(1, bad == 0 && secs < tol::kStaticSeconds, "exact penalty",
            fmt("20 instances, max violation %.2e (<= %.0e), max gap/allowed %.3f, %.1fs (< %.0fs)", worst_violation,
                tol::kStaticFeasibility, worst_gap, secs, tol::kStaticSeconds));
}

void be_the_leader() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(2002);
    const std::int64_t t = 200;
    int bad = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < 30; ++s) {
        const std::size_t n = s < 20 ? 1 : 2;
        const BoxDomain box(Vec(n, -10.0), Vec(n, 10.0));
        std::vector<ScalarFunc> seq;
        for (std::int64_t i = 0; i < t; ++i) {
            Vec a(n);
            for (double& v : a) v = uniform(rng, -2, 2);
            // alternating sign on odd streams for an adversarial flavour
            if (s % 2 && i % 2) for (double& v : a) v = -v;
            seq.push_back(ScalarFunc::affine(a, uniform(rng, -1, 1)));
        }
        const auto inst = make_instance(box, LossSequence({ScalarFunc::constant(0.0)}),
                                        [seq](std::int64_t tau) { return std::vector{seq[static_cast<std::size_t>(tau - 1)]}; },
                                        1, 2.0 * std::sqrt(static_cast<double>(n)));
        const auto trace = ftl_penalty_only(inst, t);
        const double btl = trace.violation_h.back();
        PenaltyState state(1, n);
        for (std::int64_t tau = 1; tau <= t; ++tau) state.push(inst.constraints_at(tau));
        for (int k = 0; k < 100; ++k) {
            Vec y(n);
            for (double& v : y) v = uniform(rng, -10, 10);
            const double diff = btl - state.prefix_penalty(y);
            worst = std::max(worst, diff);
            if (diff > tol::kBtl) ++bad;
        }
    }
    const double secs = seconds_since(t0);
    verdict(2, bad == 0 && secs < tol::kBtlSeconds, "be-the-leader",
            fmt("30 streams x 100 y, max(BTL - sum h(y)) %.3e (<= %.0e), %.1fs (< %.0fs)", worst, tol::kBtl, secs,
                tol::kBtlSeconds));
}

void max_lipschitz() {
    std::mt19937_64 rng(3003);
    int bad = 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < 10000; ++k) {
        const std::size_t n = 1 + static_cast<std::size_t>(k % 2);
        Vec a(n), x(n), y(n);
        for (std::size_t d = 0; d < n; ++d) {
            a[d] = uniform(rng, -5, 5);
            x[d] = uniform(rng, -10, 10);
            y[d] = uniform(rng, -10, 10);
        }
        const ScalarFunc h = ScalarFunc::affine(a, uniform(rng, -20, 20));
        const double L = norm2(a);
        const double lhs = std::abs(std::max(0.0, eval(h, x)) - std::max(0.0, eval(h, y)));
        const double rhs = L * distance(x, y);
        worst = std::max(worst, lhs - rhs);
        if (lhs > rhs + tol::kLipschitz) ++bad;
    }
    verdict(3, bad == 0, "max-Lipschitz", fmt("10^4 probes, max(lhs - L|x-y|) %.3e (<= %.0e)", worst, tol::kLipschitz));
}

void iterate_stability() {
    const double Lf = 2.0, Lg = 1.0, gamma = 25.0;
    int bad = 0;
    double worst = 0.0;
    for (double c : {0.5, 0.75, 1.0}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const auto inst = make_instance(kPaperBox, LossSequence({ScalarFunc::affine({-2.0})}), activation_family(c), seed);
            AlgorithmConfig ac;
            ac.gamma = gamma;
            ac.horizon = 10000;
            ac.seed = seed;
            const auto trace = run_penalized_ftrl(inst, ac);
            for (std::size_t tau = 2; tau < trace.size(); ++tau) {
                const double s_tau = 2 * std::sqrt(static_cast<double>(tau));
                const double s_prev = 2 * std::sqrt(static_cast<double>(tau - 1));
                const double bound = 2 * (Lf + gamma * Lg) / (s_tau + s_prev);
                const double step = distance(trace.actions[tau], trace.actions[tau - 1]);
                worst = std::max(worst, step / (bound + tol::kStability));
                if (step > bound + tol::kStability) ++bad;
            }
        }
    }
    verdict(4, bad == 0, "iterate stability",
            fmt("30 FTRL runs t=10^4, max step/bound %.4f (<= 1), %d violations", worst, bad));
}

void certificate_feasibility() {
    const std::int64_t t = 10000;
    const auto inst = make_instance(kPaperBox, LossSequence({ScalarFunc::affine({-2.0})}),
                                    time_invariant({ScalarFunc::affine({1.0})}), 1, 1.0);
    const PenaltyState full = [&] {
        PenaltyState s(1, 1);
        for (std::int64_t tau = 1; tau <= t; ++tau) s.push(inst.constraints_at(tau));
        return s;
    }();
    const auto c2 = check_condition2(full, kPaperBox);
    const auto cert = gamma_certificate(inst, c2);
    if (!cert.certificate || !cert.condition2) {
        verdict(5, false, "certificate feasibility", "no certificate: " + cert.failure);
        return;
    }
    const double gamma = 1.01 * cert.certificate->gamma0;
    auto run = [&](double g) {
        AlgorithmConfig ac;
        ac.gamma = g;
        ac.horizon = t;
        return run_penalized_ftrl(inst, ac);
    };
    auto worst_prefix = [&](const RunTrace& trace) {
        PenaltyState s(1, 1);
        double worst = 0.0;
        for (std::int64_t tau = 1; tau < t; ++tau) {
            s.push(inst.constraints_at(tau));
            worst = std::max(worst, s.prefix_penalty(trace.actions[static_cast<std::size_t>(tau)]));
        }
        return worst;
    };
    const double with_cert = worst_prefix(run(gamma));
    const double without = worst_prefix(run(0.0));
    verdict(5, with_cert <= tol::kFeasibility && without > tol::kFeasibility, "certificate feasibility",
            fmt("gamma=%.4f (gamma0 %.4f): max prefix penalty %.2e (<= %.0e); gamma=0: %.3g (> %.0e)", gamma,
                cert.certificate->gamma0, with_cert, tol::kFeasibility, without, tol::kFeasibility));
}

// ---------------------------------------------------------------------------

struct RunKey {
    std::string algorithm;
    double c;
    bool operator<(const RunKey& o) const { return std::tie(algorithm, c) < std::tie(o.algorithm, o.c); }
};

struct Ratios {
    std::vector<double> violation;
    std::vector<double> regret;
    std::vector<double> raw_regret;
};

// V_sum(T)/V_sum(t0) with 0/0 -> 1 and positive/0 -> inf.
double violation_ratio(double early, double late) {
    if (early > 0) return late / early;
    return late > 0 ? std::numeric_limits<double>::infinity() : 1.0;
}

// (R_T/sqrt T)/(R_t0/sqrt t0) when R_t0 > 0; otherwise 0 if R_T <= 0 and inf if R_T > 0.
double regret_ratio(double early, double late) {
    if (early > 0) return late / early;
    return late > 0 ? std::numeric_limits<double>::infinity() : 0.0;
}

std::map<RunKey, Ratios> collect(const json& report) {
    std::map<RunKey, Ratios> out;
    for (const auto& r : report.at("runs")) {
        const auto& per = r.at("per_horizon");
        if (per.size() < 2) continue;
        const auto& a = per.front();
        const auto& b = per.back();
        auto& slot = out[{r.at("algorithm").get<std::string>(), r.at("c").get<double>()}];
        slot.violation.push_back(violation_ratio(a.at("V_sum").get<double>(), b.at("V_sum").get<double>()));
        const double ra = a.at("R_t_over_sqrt_t").get<double>(), rb = b.at("R_t_over_sqrt_t").get<double>();
        slot.regret.push_back(regret_ratio(ra, rb));
        slot.raw_regret.push_back(rb / ra);
    }
    return out;
}

void rates(const json& report, bool run_ok, double secs) {
    const auto all = collect(report);
    auto check = [&](int id, const std::string& algo, const std::string& name, bool with_regret) {
        bool pass = run_ok;
        std::string detail;
        for (double c : {0.5, 0.75, 1.0}) {
            const auto it = all.find({algo, c});
            if (it == all.end() || it->second.violation.size() != 10) {
                pass = false;
                detail += fmt(" c=%g: missing runs;", c);
                continue;
            }
            const double v = median(it->second.violation);
            if (c == 0.75) {
                pass = pass && v >= tol::kRateViolationMin;
                detail += fmt(" c=%g V %.3f (>= %.2f)", c, v, tol::kRateViolationMin);
            } else {
                pass = pass && v <= tol::kRateViolationMax;
                detail += fmt(" c=%g V %.3f (<= %.1f)", c, v, tol::kRateViolationMax);
                if (with_regret) {
                    const double r = median(it->second.regret);
                    pass = pass && r <= tol::kRateRegretMax;
                    detail += fmt(" R %.3f (<= %.1f; raw %.3f)", r, tol::kRateRegretMax, median(it->second.raw_regret));
                }
            }
            detail += ";";
        }
        if (id == 6) {
            pass = pass && secs < tol::kRateSeconds;
            detail += fmt(" %.0fs (< %.0fs)", secs, tol::kRateSeconds);
        }
        verdict(id, pass, name, detail);
    };
    check(6, "ftrl", "penalised FTRL rates", true);
    check(7, "primal_dual", "primal-dual baseline", false);
}

void containment(const std::vector<std::string>& configs) {
    std::size_t checked = 0;
    std::vector<std::string> bad;
    for (const auto& path : configs) {
        const auto cfg = load_config(path);
        for (double c : cfg.c_values())
            for (auto seed : cfg.seeds) {
                const auto inst = make_instance(cfg.domain(), LossSequence(cfg.losses), cfg.family_for(c), seed);
                for (auto h : cfg.horizons) {
                    try {
                        const auto sets = compute_benchmarks(inst, h, cfg.grid);
                        ++checked;
                        for (std::size_t p = 0; p < sets.points.size(); ++p) {
                            const bool ok = (!sets.x_min[p] || sets.x_hat_max[p]) && (!sets.x_hat_max[p] || sets.x_max[p]);
                            if (!ok) {
                                bad.push_back(fmt("%s c=%g seed=%llu t=%lld", cfg.experiment.c_str(), c,
                                                  static_cast<unsigned long long>(seed), static_cast<long long>(h)));
                                break;
                            }
                        }
                    } catch (const std::exception& e) {
                        bad.push_back(cfg.experiment + ": " + e.what());
                    }
                }
            }
    }
    verdict(8, bad.empty() && checked > 0, "benchmark containment",
            fmt("%zu (experiment, c, seed, t) mask sets, %zu not nested%s", checked, bad.size(),
                bad.empty() ? "" : (" first: " + bad.front()).c_str()));
}

void condition_checkers() {
    double periodic_worst = 0.0;
    bool periodic_ok = true;
    for (std::int64_t T : {2, 3, 7, 50}) {
        const FamilySpec fam{{StreamSpec{{ScalarFunc::constant(-0.01), ScalarFunc::affine({1.0}, -1.0)}, PeriodicLaw{{T}}, {}}}};
        const auto r = check_condition3(member_sequence(fam, 0, 10000, 0), 2, limit_frequencies(fam.streams[0]), 1.0, 0);
        periodic_ok = periodic_ok && r.pass && r.margin <= tol::kPeriodicMargin;
        periodic_worst = std::max(periodic_worst, r.margin);
    }
    const auto fam = activation_family(0.75);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    int failed_c3 = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = check_condition3(member_sequence(fam, 0, 10000, seed), 2, limit_frequencies(fam.streams[0]), 1.0, 0);
        lo = std::min(lo, r.margin);
        hi = std::max(hi, r.margin);
        failed_c3 += !r.pass;
    }
    verdict(9, periodic_ok && lo > tol::kActivationMargin, "condition checkers",
            fmt("periodic T in {2,3,7,50}: max margin %.3f (<= %.0f); c=0.75 t=10^4: margin %.3f..%.3f over 10 seeds "
                "(> %.0f required), condition 3 failed on %d/10",
                periodic_worst, tol::kPeriodicMargin, lo, hi, tol::kActivationMargin, failed_c3));
}

std::map<std::string, std::string> csv_digests(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".csv") out[e.path().filename().string()] = sha256_file(e.path().string());
    return out;
}

void determinism(const std::vector<std::string>& configs, const fs::path& scratch) {
    std::size_t files = 0;
    std::vector<std::string> bad;
    for (const auto& path : configs) {
        auto cfg = load_config(path);
        if (cfg.seeds.size() > 2) cfg.seeds.resize(2);
        std::vector<std::int64_t> hs;
        for (auto h : cfg.horizons) hs.push_back(std::min<std::int64_t>(h, 2500));
        std::sort(hs.begin(), hs.end());
        hs.erase(std::unique(hs.begin(), hs.end()), hs.end());
        cfg.horizons = hs;
        std::map<std::string, std::string> digests[2];
        for (int rep = 0; rep < 2; ++rep) {
            const fs::path dir = scratch / (cfg.experiment + "-" + std::to_string(rep));
            fs::remove_all(dir);
            cfg.output_dir = dir.string();
            cfg.workers = rep == 0 ? 0 : 1;
            run_experiment(cfg);
            digests[rep] = csv_digests(dir);
        }
        files += digests[0].size();
        if (digests[0] != digests[1] || digests[0].empty()) bad.push_back(cfg.experiment);
    }
    verdict(10, bad.empty() && files > 0, "determinism",
            fmt("%zu CSVs from %zu experiments re-run twice, %zu experiments differ", files, configs.size(), bad.size()));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::string config_arg = PFTRL_CONFIG_DIR;
    std::vector<int> expected;
    app.add_option("--configs", config_arg, "directory of experiment configs");
    app.add_option("--expected-fail", expected, "criteria known to be unattainable");
    CLI11_PARSE(app, argc, argv);
    const fs::path config_dir = config_arg;
    std::vector<std::string> configs;
    for (const auto& e : fs::directory_iterator(config_dir))
        if (e.path().extension() == ".json") configs.push_back(e.path().string());
    std::sort(configs.begin(), configs.end());
    const fs::path scratch = fs::temp_directory_path() / "pftrl-acceptance";
    fs::create_directories(scratch);

    exact_penalty();
    be_the_leader();
    max_lipschitz();
    iterate_stability();
    certificate_feasibility();

    {
        auto cfg = load_config((config_dir / "activation-sweep.json").string());
        cfg.output_dir = (scratch / "activation-sweep").string();
        fs::remove_all(cfg.output_dir);
        const auto t0 = std::chrono::steady_clock::now();
        const auto out = run_experiment(cfg);
        const double secs = seconds_since(t0);
        for (const auto& f : out.failures) std::printf("  run failure: %s\n", f.c_str());
        rates(out.report, out.failures.empty(), secs);
    }

    containment(configs);
    condition_checkers();
    determinism(configs, scratch);

    std::printf("%zu of 10 criteria failed", failed.size());
    for (int id : failed) std::printf(" [%d]", id);
    std::printf("\n");
    const std::set<int> known(expected.begin(), expected.end());
    if (!known.empty()) {
        std::printf("expected failures:");
        for (int id : known) std::printf(" [%d]", id);
        std::printf("%s\n", failed == known ? " (match)" : " (MISMATCH)");
    }
    return failed == known ? 0 : 1;
}
