#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pftrl/algorithms.hpp"
#include "pftrl/box.hpp"
#include "pftrl/generators.hpp"
#include "pftrl/metrics.hpp"
#include "pftrl/penalty.hpp"

namespace pftrl {

/// Bad config file or value; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AlgorithmEntry {
    AlgorithmKind kind = AlgorithmKind::PenalizedFtrl;
    double gamma = 0.0;
    GammaMode gamma_mode = GammaMode::Fixed;
    double gamma_cap = 1e6;
    double step_scale = 5.0;
    double solver_tol = 1e-9;
};

struct ExperimentConfig {
    std::string experiment;
    Vec lower, upper;
    std::vector<ScalarFunc> losses;  // cycled
    FamilySpec family;
    std::vector<double> sweep_c;  // empty: run the family as written
    std::vector<AlgorithmEntry> algorithms;
    std::vector<std::int64_t> horizons;
    std::vector<std::uint64_t> seeds;
    int grid = 2001;
    std::string output_dir = "out";
    std::optional<double> kappa;
    double epsilon = 1.0;
    std::int64_t t0 = 0;
    int workers = 0;  // 0: hardware concurrency
    double certificate_margin = 1.01;

    std::int64_t max_horizon() const;
    BoxDomain domain() const { return BoxDomain(lower, upper); }
    /// c labels of the run matrix; {c of the first activation stream} or {0}
    /// when no sweep is given.
    std::vector<double> c_values() const;
    /// Family with every activation stream set to c (unchanged if no sweep).
    FamilySpec family_for(double c) const;
};

/// Strict parse; unknown keys and out-of-range values raise ConfigError
/// with the JSON path (and line for syntax errors).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const ExperimentConfig& config);

/// SHA-256 of the canonical JSON text.
std::string config_digest(const ExperimentConfig& config);

nlohmann::json function_to_json(const ScalarFunc& f);
ScalarFunc function_from_json(const nlohmann::json& j, const std::string& path);

// ---------------------------------------------------------------------------

struct CertificateResult {
    std::optional<GammaCertificate> certificate;  // empty when beta <= 0
    double L_direct = 0.0;
    bool condition2 = false;
    std::string failure;
};

/// E, L from the Slater point found by the Condition 2 search; gamma0 when beta > 0.
CertificateResult gamma_certificate(const ProblemInstance& instance, const Condition2Result& condition2);

nlohmann::json to_json(const GammaCertificate& c);
nlohmann::json to_json(const ConditionReport& r);
nlohmann::json to_json(const BenchmarkPoint& b);

struct RunPlanEntry {
    std::string algorithm;
    double c = 0.0;
    std::uint64_t seed = 0;
    std::int64_t horizon = 0;
    std::string csv;
};

std::vector<RunPlanEntry> plan_runs(const ExperimentConfig& config);

struct ExperimentOutcome {
    nlohmann::json report;
    std::vector<std::string> failures;  // run coordinates + reason
    std::vector<std::string> files;     // written paths
};

/// Executes the run matrix with a bounded worker pool, writes the CSVs and
/// report.json into config.output_dir.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// Condition reports only (no learners); writes conditions.json.
ExperimentOutcome verify_experiment(const ExperimentConfig& config);

/// Recomputes the digests listed in a report; returns mismatches.
std::vector<std::string> audit_report(const std::string& report_path);

}  // namespace pftrl
