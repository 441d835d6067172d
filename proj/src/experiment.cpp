#include "pftrl/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "pftrl/digest.hpp"

namespace pftrl {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + msg);
}

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(path + "/" + key, "unknown key");
    }
}

const json& need(const json& j, const char* key, const std::string& path) {
    if (!j.contains(key)) fail(path + "/" + key, "missing required key");
    return j.at(key);
}

double number(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(path, "must be finite");
    return d;
}

std::int64_t integer(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<std::int64_t>();
}

std::string text(const json& v, const std::string& path) {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
}

const json& array(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array");
    return v;
}

Vec vec(const json& v, const std::string& path) {
    Vec out;
    std::size_t i = 0;
    for (const auto& e : array(v, path)) out.push_back(number(e, path + "/" + std::to_string(i++)));
    return out;
}

double number_or(const json& j, const char* key, const std::string& path, double dflt) {
    return j.contains(key) ? number(j.at(key), path + "/" + key) : dflt;
}

// ---- laws -----------------------------------------------------------------

Law law_from_json(const json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 1) fail(path, "expected an object with exactly one law key");
    const auto& [name, body] = *j.items().begin();
    const std::string p = path + "/" + name;
    if (name == "iid") {
        only_keys(body, p, {"probs"});
        return IidLaw{vec(need(body, "probs", p), p + "/probs")};
    }
    if (name == "periodic") {
        only_keys(body, p, {"periods"});
        PeriodicLaw law;
        std::size_t i = 0;
        for (const auto& e : array(need(body, "periods", p), p + "/periods"))
            law.periods.push_back(integer(e, p + "/periods/" + std::to_string(i++)));
        return law;
    }
    if (name == "activation") {
        only_keys(body, p, {"c", "scale"});
        return ActivationRateLaw{number(need(body, "c", p), p + "/c"), number_or(body, "scale", p, 0.1)};
    }
    if (name == "perturbed") {
        only_keys(body, p, {"offsets", "bound"});
        PerturbedLaw law;
        law.bound = number(need(body, "bound", p), p + "/bound");
        const json& o = need(body, "offsets", p);
        const std::string op = p + "/offsets";
        if (!o.is_object() || o.size() != 1) fail(op, "expected an object with exactly one offset kind");
        const auto& [kind, ob] = *o.items().begin();
        if (kind == "constant") {
            law.offsets = ConstantOffset{number(ob, op + "/constant")};
        } else if (kind == "uniform") {
            only_keys(ob, op + "/uniform", {"lo", "hi"});
            law.offsets = UniformOffset{number(need(ob, "lo", op + "/uniform"), op + "/uniform/lo"),
                                        number(need(ob, "hi", op + "/uniform"), op + "/uniform/hi")};
        } else if (kind == "sequence") {
            law.offsets = SequenceOffset{vec(ob, op + "/sequence")};
        } else {
            fail(op + "/" + kind, "unknown offset kind (constant | uniform | sequence)");
        }
        return law;
    }
    fail(p, "unknown law (iid | periodic | activation | perturbed)");
}

json law_to_json(const Law& law) {
    return std::visit(
        overloaded{[](const IidLaw& l) { return json{{"iid", {{"probs", l.probs}}}}; },
                   [](const PeriodicLaw& l) { return json{{"periodic", {{"periods", l.periods}}}}; },
                   [](const ActivationRateLaw& l) { return json{{"activation", {{"c", l.c}, {"scale", l.scale}}}}; },
                   [](const PerturbedLaw& l) {
                       json o = std::visit(
                           overloaded{[](const ConstantOffset& c) { return json{{"constant", c.value}}; },
                                      [](const UniformOffset& u) { return json{{"uniform", {{"lo", u.lo}, {"hi", u.hi}}}}; },
                                      [](const SequenceOffset& s) { return json{{"sequence", s.values}}; }},
                           l.offsets);
                       return json{{"perturbed", {{"bound", l.bound}, {"offsets", o}}}};
                   }},
        law);
}

// ---- misc -----------------------------------------------------------------

std::string parse_error_location(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class F>
void parallel_for(std::size_t jobs, int workers, F&& body) {
    unsigned threads = workers > 0 ? static_cast<unsigned>(workers) : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(jobs, 1)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs; i = next++) body(i);
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace

// ---------------------------------------------------------------------------
// functions

json function_to_json(const ScalarFunc& f) {
    return std::visit(overloaded{[](const Affine& a) {
                                     return json{{"affine", {{"slope", a.slope}, {"intercept", a.intercept}}}};
                                 },
                                 [](const Constant& c) { return json{{"constant", c.value}}; },
                                 [](const QuadraticDiag& q) {
                                     return json{{"quadratic",
                                                  {{"diag", q.diag}, {"linear", q.linear}, {"intercept", q.intercept}}}};
                                 }},
                      f.rep());
}

ScalarFunc function_from_json(const json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 1) fail(path, "expected an object with exactly one of affine | constant | quadratic");
    const auto& [name, body] = *j.items().begin();
    const std::string p = path + "/" + name;
    try {
        if (name == "constant") return ScalarFunc::constant(number(body, p));
        if (name == "affine") {
            only_keys(body, p, {"slope", "intercept"});
            return ScalarFunc::affine(vec(need(body, "slope", p), p + "/slope"), number_or(body, "intercept", p, 0.0));
        }
        if (name == "quadratic") {
            only_keys(body, p, {"diag", "linear", "intercept"});
            return ScalarFunc::quadratic(vec(need(body, "diag", p), p + "/diag"),
                                         vec(need(body, "linear", p), p + "/linear"),
                                         number_or(body, "intercept", p, 0.0));
        }
    } catch (const std::invalid_argument& e) {
        fail(p, e.what());
    }
    fail(p, "unknown function kind (affine | constant | quadratic)");
}

// ---------------------------------------------------------------------------
// config

std::int64_t ExperimentConfig::max_horizon() const { return *std::max_element(horizons.begin(), horizons.end()); }

std::vector<double> ExperimentConfig::c_values() const {
    if (!sweep_c.empty()) return sweep_c;
    for (const auto& s : family.streams)
        if (const auto* a = std::get_if<ActivationRateLaw>(&s.law)) return {a->c};
    return {0.0};
}

FamilySpec ExperimentConfig::family_for(double c) const {
    FamilySpec f = family;
    if (sweep_c.empty()) return f;
    for (auto& s : f.streams)
        if (auto* a = std::get_if<ActivationRateLaw>(&s.law)) a->c = c;
    return f;
}

ExperimentConfig parse_config(const std::string& text_in) {
    json j;
    try {
        j = json::parse(text_in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config syntax error at " + parse_error_location(text_in, e.byte) + ": " + e.what());
    }
    const std::string root = "";
    only_keys(j, root, {"experiment", "domain", "losses", "constraints", "sweep_c", "algorithms", "horizons", "seeds",
                       "grid", "output_dir", "kappa", "condition", "workers", "certificate_margin"});
    ExperimentConfig c;
    c.experiment = text(need(j, "experiment", root), "/experiment");
    if (c.experiment.empty() || c.experiment.find_first_of("/\\ ") != std::string::npos)
        fail("/experiment", "must be a non-empty name without spaces or slashes");

    const json& dom = need(j, "domain", root);
    only_keys(dom, "/domain", {"lower", "upper"});
    c.lower = vec(need(dom, "lower", "/domain"), "/domain/lower");
    c.upper = vec(need(dom, "upper", "/domain"), "/domain/upper");
    if (c.lower.size() != c.upper.size() || c.lower.empty()) fail("/domain", "lower and upper need the same positive length");
    try {
        (void)c.domain();
    } catch (const std::invalid_argument& e) {
        fail("/domain", e.what());
    }
    const std::size_t n = c.lower.size();
    if (n > 2) fail("/domain", "benchmark oracles support dimension <= 2");

    auto check_dim = [&](const ScalarFunc& f, const std::string& p) {
        if (f.dim() != 0 && f.dim() != n) fail(p, "function dimension does not match the domain");
    };
    std::size_t i = 0;
    for (const auto& f : array(need(j, "losses", root), "/losses")) {
        const std::string p = "/losses/" + std::to_string(i++);
        c.losses.push_back(function_from_json(f, p));
        check_dim(c.losses.back(), p);
    }
    if (c.losses.empty()) fail("/losses", "need at least one loss");

    i = 0;
    for (const auto& s : array(need(j, "constraints", root), "/constraints")) {
        const std::string p = "/constraints/" + std::to_string(i++);
        only_keys(s, p, {"members", "law", "limit_probs"});
        StreamSpec stream;
        std::size_t k = 0;
        for (const auto& f : array(need(s, "members", p), p + "/members")) {
            const std::string fp = p + "/members/" + std::to_string(k++);
            stream.members.push_back(function_from_json(f, fp));
            check_dim(stream.members.back(), fp);
        }
        stream.law = law_from_json(need(s, "law", p), p + "/law");
        if (s.contains("limit_probs")) stream.limit_probs = vec(s.at("limit_probs"), p + "/limit_probs");
        c.family.streams.push_back(std::move(stream));
    }
    try {
        validate(c.family);
    } catch (const std::invalid_argument& e) {
        fail("/constraints", e.what());
    }

    if (j.contains("sweep_c")) {
        c.sweep_c = vec(j.at("sweep_c"), "/sweep_c");
        for (double v : c.sweep_c)
            if (!(v > 0.0 && v <= 1.0)) fail("/sweep_c", "values must lie in (0, 1]");
        const bool has_activation = std::any_of(c.family.streams.begin(), c.family.streams.end(), [](const auto& s) {
            return std::holds_alternative<ActivationRateLaw>(s.law);
        });
        if (!has_activation && !c.sweep_c.empty()) fail("/sweep_c", "needs at least one activation stream");
        if (std::set<double>(c.sweep_c.begin(), c.sweep_c.end()).size() != c.sweep_c.size())
            fail("/sweep_c", "duplicate values");
    }

    i = 0;
    std::set<AlgorithmKind> kinds;
    for (const auto& a : array(need(j, "algorithms", root), "/algorithms")) {
        const std::string p = "/algorithms/" + std::to_string(i++);
        only_keys(a, p, {"kind", "gamma", "gamma_mode", "gamma_cap", "step_scale", "solver_tol"});
        AlgorithmEntry e;
        try {
            e.kind = parse_algorithm(text(need(a, "kind", p), p + "/kind"));
            if (a.contains("gamma_mode")) e.gamma_mode = parse_gamma_mode(text(a.at("gamma_mode"), p + "/gamma_mode"));
        } catch (const std::invalid_argument& ex) {
            fail(p, ex.what());
        }
        e.gamma = number_or(a, "gamma", p, 0.0);
        e.gamma_cap = number_or(a, "gamma_cap", p, 1e6);
        e.step_scale = number_or(a, "step_scale", p, 5.0);
        e.solver_tol = number_or(a, "solver_tol", p, 1e-9);
        if (!(e.gamma >= 0.0)) fail(p + "/gamma", "must be >= 0");
        if (!(e.gamma_cap >= e.gamma)) fail(p + "/gamma_cap", "must be >= gamma");
        if (!(e.step_scale > 0.0)) fail(p + "/step_scale", "must be > 0");
        if (!(e.solver_tol >= 1e-12)) fail(p + "/solver_tol", "must be >= 1e-12");
        if (e.gamma_mode == GammaMode::Adaptive && !(e.gamma > 0.0))
            fail(p + "/gamma", "adaptive mode needs a positive starting gamma");
        if (!kinds.insert(e.kind).second) fail(p + "/kind", "each algorithm kind may appear once");
        c.algorithms.push_back(e);
    }
    if (c.algorithms.empty()) fail("/algorithms", "need at least one algorithm");

    i = 0;
    for (const auto& h : array(need(j, "horizons", root), "/horizons")) {
        const auto t = integer(h, "/horizons/" + std::to_string(i++));
        if (t < 1 || t > 10'000'000) fail("/horizons", "values must lie in [1, 1e7]");
        c.horizons.push_back(t);
    }
    if (c.horizons.empty()) fail("/horizons", "need at least one horizon");
    i = 0;
    for (const auto& s : array(need(j, "seeds", root), "/seeds")) {
        const std::string p = "/seeds/" + std::to_string(i++);
        if (!s.is_number_unsigned()) fail(p, "expected a non-negative integer");
        c.seeds.push_back(s.get<std::uint64_t>());
    }
    if (c.seeds.empty()) fail("/seeds", "need at least one seed");
    if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) fail("/seeds", "duplicate seeds");

    if (j.contains("grid")) {
        const auto g = integer(j.at("grid"), "/grid");
        if (g < 101 || g > 100'001) fail("/grid", "must lie in [101, 100001]");
        c.grid = static_cast<int>(g);
    }
    if (j.contains("output_dir")) c.output_dir = text(j.at("output_dir"), "/output_dir");
    if (j.contains("kappa") && !j.at("kappa").is_null()) {
        c.kappa = number(j.at("kappa"), "/kappa");
        if (!(*c.kappa >= 0.0)) fail("/kappa", "must be >= 0");
    }
    if (j.contains("condition")) {
        const json& cond = j.at("condition");
        only_keys(cond, "/condition", {"epsilon", "t0"});
        c.epsilon = number_or(cond, "epsilon", "/condition", 1.0);
        if (cond.contains("t0")) c.t0 = integer(cond.at("t0"), "/condition/t0");
        if (!(c.epsilon > 0.0)) fail("/condition/epsilon", "must be > 0");
        if (c.t0 < 0) fail("/condition/t0", "must be >= 0");
    }
    if (j.contains("workers")) {
        const auto w = integer(j.at("workers"), "/workers");
        if (w < 0 || w > 256) fail("/workers", "must lie in [0, 256]");
        c.workers = static_cast<int>(w);
    }
    if (j.contains("certificate_margin")) {
        c.certificate_margin = number(j.at("certificate_margin"), "/certificate_margin");
        if (!(c.certificate_margin > 1.0)) fail("/certificate_margin", "must be > 1");
    }
    if (c.t0 >= c.max_horizon()) fail("/condition/t0", "must be below the largest horizon");
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config file " + path);
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_config(buf.str());
}

json to_json(const ExperimentConfig& c) {
    json j;
    j["experiment"] = c.experiment;
    j["domain"] = {{"lower", c.lower}, {"upper", c.upper}};
    j["losses"] = json::array();
    for (const auto& f : c.losses) j["losses"].push_back(function_to_json(f));
    j["constraints"] = json::array();
    for (const auto& s : c.family.streams) {
        json sj;
        sj["members"] = json::array();
        for (const auto& f : s.members) sj["members"].push_back(function_to_json(f));
        sj["law"] = law_to_json(s.law);
        if (s.limit_probs) sj["limit_probs"] = *s.limit_probs;
        j["constraints"].push_back(sj);
    }
    j["sweep_c"] = c.sweep_c;
    j["algorithms"] = json::array();
    for (const auto& a : c.algorithms)
        j["algorithms"].push_back({{"kind", algorithm_name(a.kind)},
                                   {"gamma", a.gamma},
                                   {"gamma_mode", gamma_mode_name(a.gamma_mode)},
                                   {"gamma_cap", a.gamma_cap},
                                   {"step_scale", a.step_scale},
                                   {"solver_tol", a.solver_tol}});
    j["horizons"] = c.horizons;
    j["seeds"] = c.seeds;
    j["grid"] = c.grid;
    j["output_dir"] = c.output_dir;
    j["kappa"] = c.kappa ? json(*c.kappa) : json(nullptr);
    j["condition"] = {{"epsilon", c.epsilon}, {"t0", c.t0}};
    j["workers"] = c.workers;
    j["certificate_margin"] = c.certificate_margin;
    return j;
}

std::string config_digest(const ExperimentConfig& config) {
    // workers and output_dir do not change results
    json j = to_json(config);
    j.erase("workers");
    j.erase("output_dir");
    return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------
// certificates and reports

CertificateResult gamma_certificate(const ProblemInstance& instance, const Condition2Result& c2) {
    CertificateResult r;
    r.condition2 = c2.pass;
    if (!(c2.eta > 0.0)) {
        r.failure = "no common Slater point on the grid";
        return r;
    }
    GammaCertificate g;
    const LossGapConstants el = compute_E_L(instance, c2.slater_point);
    g.E = el.E;
    g.L = el.L;
    r.L_direct = el.L_direct;
    g.eta = c2.eta;
    g.beta = c2.beta;
    g.k_schedule = c2.k_schedule;
    g.t_eps = 0;
    g.slater_point = c2.slater_point;
    if (!(c2.beta > 0.0)) {
        r.failure = "penalty growth condition violated (beta <= 0)";
        return r;
    }
    g.gamma0 = gamma_threshold(g.E, g.L, g.beta);
    r.certificate = g;
    if (!c2.pass) r.failure = "growth condition not met on the observed prefixes; threshold not certified";
    return r;
}

json to_json(const GammaCertificate& c) {
    json ks = json::array();
    for (const auto& [tau, k] : c.k_schedule) ks.push_back({tau, k});
    return {{"E", c.E},   {"L", c.L},         {"eta", c.eta},         {"beta", c.beta},
            {"k_schedule", ks}, {"t_eps", c.t_eps}, {"gamma0", nullable(c.gamma0)}, {"slater_point", c.slater_point}};
}

json to_json(const BenchmarkPoint& b) {
    if (b.empty) return nullptr;
    return {{"point", b.point}, {"cumulative_loss", b.value}};
}

json to_json(const ConditionReport& r) {
    json streams = json::array();
    for (const auto& s : r.streams) {
        json sj;
        sj["j"] = s.j;
        sj["law"] = s.law;
        sj["empirical"] = s.empirical;
        const auto& c3 = s.condition3;
        sj["condition3"] = {{"pass", c3.pass},         {"margin", c3.margin},   {"margin_tau", c3.margin_tau},
                            {"epsilon", c3.epsilon},   {"t0", c3.t0},           {"limits", c3.limits},
                            {"limits_estimated", c3.limits_estimated}, {"counts", c3.counts}};
        if (s.perturbed) {
            const auto& p = *s.perturbed;
            auto absmax = [](const Vec& v) {
                double m = 0.0;
                for (double x : v) m = std::max(m, std::abs(x));
                return m;
            };
            sj["perturbed"] = {{"mean_center", p.mean_center},
                               {"upper_center", p.upper_center},
                               {"max_abs_Delta_mean", absmax(p.delta_mean)},
                               {"max_abs_Delta_upper", absmax(p.delta_upper)},
                               {"sqrt_margin_mean", p.sqrt_margin_mean},
                               {"lipschitz_bound_holds", p.lipschitz_bound_holds},
                               {"upper_nonpositive", p.upper_nonpositive}};
        }
        sj["partition"] = {{"set", s.partition.in_p_minus ? "P-" : "P+"},
                           {"curve_at_t", s.partition.curve_at_t},
                           {"curve_at_ref", s.partition.curve_at_ref},
                           {"kappa", s.partition.kappa}};
        streams.push_back(sj);
    }
    const auto& c2 = r.condition2;
    json ks = json::array();
    for (const auto& [tau, k] : c2.k_schedule) ks.push_back({tau, k});
    return {{"horizon", r.horizon},
            {"seed", r.seed},
            {"streams", streams},
            {"condition2",
             {{"eta", c2.eta},
              {"slater_point", c2.slater_point},
              {"beta", c2.beta},
              {"k_schedule", ks},
              {"no_boundary", c2.no_boundary},
              {"growth_exponent", c2.growth_exponent},
              {"pass", c2.pass}}},
            {"condition3", r.condition3}};
}

// ---------------------------------------------------------------------------
// runs

std::vector<RunPlanEntry> plan_runs(const ExperimentConfig& config) {
    std::vector<RunPlanEntry> plan;
    for (double c : config.c_values())
        for (std::uint64_t seed : config.seeds)
            for (const auto& a : config.algorithms) {
                const std::string name = algorithm_name(a.kind);
                plan.push_back({name, c, seed, config.max_horizon(), csv_filename(config.experiment, name, c, seed)});
            }
    return plan;
}

namespace {

struct JobResult {
    json runs = json::array();
    json condition;
    json certificate;
    json benchmarks = json::array();
    std::vector<std::string> failures;
    std::vector<std::string> files;
};

std::string coords(const std::string& algo, double c, std::uint64_t seed) {
    std::ostringstream s;
    s << "[algorithm=" << algo << " c=" << c << " seed=" << seed << "]";
    return s.str();
}

JobResult run_job(const ExperimentConfig& config, const std::string& digest, double c, std::uint64_t seed) {
    JobResult out;
    const BoxDomain box = config.domain();
    const FamilySpec family = config.family_for(c);
    const ProblemInstance instance = make_instance(box, LossSequence(config.losses), family, seed);
    const std::int64_t T = config.max_horizon();

    ConditionOptions copt;
    copt.epsilon = config.epsilon;
    copt.t0 = config.t0;
    copt.grid = config.grid;
    copt.kappa = config.kappa;
    const ConditionReport cond = build_condition_report(family, box, T, seed, copt);
    out.condition = {{"c", c}, {"seed", seed}, {"report", to_json(cond)}};
    const CertificateResult cert = gamma_certificate(instance, cond.condition2);
    out.certificate = {{"c", c},
                       {"seed", seed},
                       {"certificate", cert.certificate ? to_json(*cert.certificate) : json(nullptr)},
                       {"L_direct", nullable(cert.L_direct)},
                       {"condition2", cert.condition2},
                       {"note", cert.failure}};

    std::vector<BenchmarkSets> bench;
    std::vector<std::int64_t> horizons = config.horizons;
    std::sort(horizons.begin(), horizons.end());
    horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
    try {
        for (std::int64_t h : horizons) {
            bench.push_back(compute_benchmarks(instance, h, config.grid));
            const auto& b = bench.back();
            const auto bad = first_containment_failure(b);
            std::size_t nmin = 0, nhat = 0, nmax = 0;
            for (std::size_t p = 0; p < b.points.size(); ++p) {
                nmin += b.x_min[p];
                nhat += b.x_hat_max[p];
                nmax += b.x_max[p];
            }
            out.benchmarks.push_back({{"c", c},
                                      {"seed", seed},
                                      {"t", h},
                                      {"x_min", to_json(b.best_min)},
                                      {"x_hat_max", to_json(b.best_hat_max)},
                                      {"x_max", to_json(b.best_max)},
                                      {"grid_counts", {nmin, nhat, nmax}},
                                      {"containment", bad < 0}});
            if (bad >= 0)
                out.failures.push_back(coords("benchmarks", c, seed) + " mask containment fails at grid index " +
                                       std::to_string(bad));
        }
    } catch (const std::exception& e) {
        out.failures.push_back(coords("benchmarks", c, seed) + " " + e.what());
        bench.clear();
    }

    for (const auto& a : config.algorithms) {
        const std::string name = algorithm_name(a.kind);
        json rj = {{"algorithm", name}, {"c", c}, {"seed", seed}, {"gamma_mode", gamma_mode_name(a.gamma_mode)}};
        try {
            AlgorithmConfig ac;
            ac.kind = a.kind;
            ac.gamma = a.gamma;
            ac.gamma_mode = a.gamma_mode;
            ac.gamma_cap = a.gamma_cap;
            ac.step_scale = a.step_scale;
            ac.horizon = T;
            ac.seed = seed;
            ac.solve.tol = a.solver_tol;
            if (a.kind == AlgorithmKind::PenalizedFtrl && a.gamma_mode == GammaMode::Certificate) {
                if (!cert.certificate || !cert.condition2)
                    throw std::runtime_error("certificate gamma unavailable: " + cert.failure);
                ac.gamma = cert.certificate->gamma0 * config.certificate_margin;
                ac.gamma_cap = std::max(ac.gamma_cap, ac.gamma);
            }
            if (a.kind == AlgorithmKind::PenalizedFtrl) rj["gamma"] = ac.gamma;
            RunTrace trace = run_algorithm(instance, ac);
            trace.config_digest = digest;
            rj["experimental"] = trace.experimental;
            const auto problems = trace_problems(trace, box);
            rj["trace_problems"] = problems;
            for (const auto& p : problems) out.failures.push_back(coords(name, c, seed) + " " + p);

            json per = json::array();
            if (!bench.empty()) {
                trace.regret = regret(trace, bench.back().best_hat_max.point);
                for (std::size_t k = 0; k < horizons.size(); ++k) {
                    const auto h = static_cast<std::size_t>(horizons[k]);
                    const double R = regret(trace, bench[k].best_hat_max.point)[h - 1];
                    const double rt = std::sqrt(static_cast<double>(h));
                    per.push_back({{"t", horizons[k]},
                                   {"R_t", R},
                                   {"R_t_over_sqrt_t", R / rt},
                                   {"V_h", trace.violation_h[h - 1]},
                                   {"V_sum", trace.violation_sum[h - 1]},
                                   {"V_sum_over_sqrt_t", trace.violation_sum[h - 1] / rt}});
                }
            }
            rj["per_horizon"] = per;
            if (!trace.gammas.empty()) rj["final_gamma"] = trace.gammas.back();
            const std::string file = csv_filename(config.experiment, name, c, seed);
            const std::string path = (fs::path(config.output_dir) / file).string();
            emit_csv(trace, path);
            rj["csv"] = file;
            out.files.push_back(file);
        } catch (const std::exception& e) {
            out.failures.push_back(coords(name, c, seed) + " " + e.what());
            rj["error"] = e.what();
        }
        out.runs.push_back(rj);
    }
    return out;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << body;
    if (!f) throw std::runtime_error("write failed for " + path);
}

json summary(const ExperimentConfig& config, const json& runs) {
    // median over seeds of V_sum(t_max)/V_sum(t_min) and of R_t/sqrt(t), per algorithm and c
    json s = json::array();
    if (config.horizons.size() < 2) return s;
    for (const auto& a : config.algorithms) {
        const std::string name = algorithm_name(a.kind);
        for (double c : config.c_values()) {
            std::vector<double> vratio, r_lo, r_hi;
            for (const auto& r : runs) {
                if (r["algorithm"] != name || r["c"].get<double>() != c || !r.contains("per_horizon")) continue;
                const auto& ph = r["per_horizon"];
                if (ph.size() < 2) continue;
                const auto& lo = ph.front();
                const auto& hi = ph.back();
                const double v0 = lo["V_sum"].get<double>(), v1 = hi["V_sum"].get<double>();
                vratio.push_back(v0 > 0.0 ? v1 / v0 : (v1 > 0.0 ? std::numeric_limits<double>::infinity() : 1.0));
                r_lo.push_back(lo["R_t_over_sqrt_t"].get<double>());
                r_hi.push_back(hi["R_t_over_sqrt_t"].get<double>());
            }
            if (vratio.empty()) continue;
            s.push_back({{"algorithm", name},
                         {"c", c},
                         {"median_V_sum_ratio", nullable(median(vratio))},
                         {"median_R_over_sqrt_t_first", nullable(median(r_lo))},
                         {"median_R_over_sqrt_t_last", nullable(median(r_hi))}});
        }
    }
    return s;
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
    fs::create_directories(config.output_dir);
    const std::string digest = config_digest(config);
    struct Job {
        double c;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double c : config.c_values())
        for (std::uint64_t seed : config.seeds) jobs.push_back({c, seed});
    std::vector<JobResult> results(jobs.size());
    parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
        try {
            results[i] = run_job(config, digest, jobs[i].c, jobs[i].seed);
        } catch (const std::exception& e) {
            results[i].failures.push_back(coords("job", jobs[i].c, jobs[i].seed) + " " + e.what());
        }
    });

    ExperimentOutcome out;
    json runs = json::array(), conditions = json::array(), certificates = json::array(), benchmarks = json::array();
    for (auto& r : results) {
        for (auto& x : r.runs) runs.push_back(std::move(x));
        if (!r.condition.is_null()) conditions.push_back(std::move(r.condition));
        if (!r.certificate.is_null()) certificates.push_back(std::move(r.certificate));
        for (auto& x : r.benchmarks) benchmarks.push_back(std::move(x));
        out.failures.insert(out.failures.end(), r.failures.begin(), r.failures.end());
        out.files.insert(out.files.end(), r.files.begin(), r.files.end());
    }
    json files = json::object();
    for (const auto& f : out.files) files[f] = sha256_file((fs::path(config.output_dir) / f).string());

    json report;
    report["experiment"] = config.experiment;
    report["config_digest"] = digest;
    report["config"] = to_json(config);
    report["config"].erase("workers");
    report["config"].erase("output_dir");
    report["runs"] = runs;
    report["conditions"] = conditions;
    report["certificates"] = certificates;
    report["benchmarks"] = benchmarks;
    report["summary"] = summary(config, runs);
    report["files"] = files;
    report["failures"] = out.failures;
    report["ok"] = out.failures.empty();
    out.report = report;
    write_text((fs::path(config.output_dir) / "report.json").string(), report.dump(2) + "\n");
    out.files.push_back("report.json");
    return out;
}

ExperimentOutcome verify_experiment(const ExperimentConfig& config) {
    fs::create_directories(config.output_dir);
    const BoxDomain box = config.domain();
    struct Job {
        double c;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (double c : config.c_values())
        for (std::uint64_t seed : config.seeds) jobs.push_back({c, seed});
    std::vector<json> reports(jobs.size());
    std::vector<std::string> errors(jobs.size());
    ConditionOptions copt;
    copt.epsilon = config.epsilon;
    copt.t0 = config.t0;
    copt.grid = config.grid;
    copt.kappa = config.kappa;
    parallel_for(jobs.size(), config.workers, [&](std::size_t i) {
        try {
            const FamilySpec family = config.family_for(jobs[i].c);
            const auto r = build_condition_report(family, box, config.max_horizon(), jobs[i].seed, copt);
            reports[i] = {{"c", jobs[i].c}, {"seed", jobs[i].seed}, {"report", to_json(r)}};
        } catch (const std::exception& e) {
            errors[i] = coords("verify", jobs[i].c, jobs[i].seed) + " " + e.what();
        }
    });
    ExperimentOutcome out;
    json list = json::array();
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (!errors[i].empty()) out.failures.push_back(errors[i]);
        else list.push_back(std::move(reports[i]));
    }
    out.report = {{"experiment", config.experiment},
                  {"config_digest", config_digest(config)},
                  {"conditions", list},
                  {"failures", out.failures}};
    write_text((fs::path(config.output_dir) / "conditions.json").string(), out.report.dump(2) + "\n");
    out.files.push_back("conditions.json");
    return out;
}

std::vector<std::string> audit_report(const std::string& report_path) {
    std::ifstream f(report_path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + report_path);
    const json report = json::parse(f);
    const fs::path dir = fs::path(report_path).parent_path();
    const std::string digest = report.at("config_digest").get<std::string>();
    std::vector<std::string> bad;
    for (const auto& [name, sha] : report.at("files").items()) {
        const std::string path = (dir / name).string();
        std::string actual;
        try {
            actual = sha256_file(path);
        } catch (const std::exception& e) {
            bad.push_back(name + ": " + e.what());
            continue;
        }
        if (actual != sha.get<std::string>()) bad.push_back(name + ": digest mismatch");
        std::ifstream csv(path);
        std::string first;
        std::getline(csv, first);
        if (first != "# config_digest=" + digest) bad.push_back(name + ": config digest line does not match the report");
    }
    return bad;
}

}  // namespace pftrl
