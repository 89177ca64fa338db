#pragma once

// Scenario configuration, dispatch and report emission for the rotadic runner.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rotadic/cz.hpp"
#include "rotadic/geometry.hpp"
#include "rotadic/group.hpp"
#include "rotadic/kernel.hpp"
#include "rotadic/operator.hpp"

namespace rotadic::experiments {

inline constexpr std::string_view kToolVersion = "0.1.0";

enum class Scenario { Validate, Geometry, Kernel, Operator, CZ };

std::string_view to_string(Scenario s);
/// ParseError for unknown names.
Scenario scenario_from_string(std::string_view name);

struct GroupBlock {
    Family family = Family::ParabolicR2;
    double rate = 1.0;
    double alpha = 1.0;
    double beta = 1.4142135623730951;
    double a = 1.0;
    std::vector<double> tail_exponents;

    GroupDescriptor build() const;
};

/// Profile psi used by the kernel, operator and bounds checks.
struct PsiBlock {
    /// "laplacian_gaussian", "compact" (G1 only) or "hermite"
    std::string kind = "laplacian_gaussian";
    /// Multi-index for "hermite".
    std::vector<int> alpha;
};

struct ValidateSampling {
    std::size_t samples = 10000;
    double tolerance = 1e-10;
};

struct GeometrySampling {
    GeometryConfig config;
    /// Closed-form vs Monte Carlo volume cases; used when the space has closed-form volumes.
    std::size_t volume_cases = 200;
    std::size_t volume_mc_samples = 20000;
};

struct OperatorSampling {
    bool l2_family = true;
    L2FamilyConfig l2;
    bool adjoint = true;
    std::size_t adjoint_pairs = 4;
    bool bounds = true;
    BoundsConfig bounds_config;
};

struct CZSampling {
    std::size_t cases = 100;
    std::optional<GridSpec> grid;
    CoverPolicy policy;
    bool tall_gaussian = true;
    /// Node counts of the two grids on [-1, 1]^2 for the tall Gaussian.
    std::vector<std::size_t> tall_counts = {49, 65};
};

struct ScenarioConfig {
    Scenario scenario = Scenario::Validate;
    std::uint64_t seed = 0;
    GroupBlock group;
    NormVariant norm = NormVariant::MaxType;
    PsiBlock psi;
    /// Grid for T (operator scenario); the cz block carries its own grid.
    std::optional<GridSpec> grid;
    QuadratureSpec quadrature;

    ValidateSampling validate;
    GeometrySampling geometry;
    KernelConfig kernel;
    OperatorSampling op;
    CZSampling cz;

    /// Overrides of the frozen bounds, by check name.
    std::map<std::string, double> bounds;
    std::filesystem::path output = "rotadic-out";

    /// The parsed document, echoed into the manifest.
    nlohmann::json source;
};

/// Strict parse: unknown keys, wrong types, empty ranges and a missing seed are
/// ParseErrors naming the field (syntax errors name line and column).
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

enum class Relation { AtMost, AtLeast, Finite };

struct CheckResult {
    std::string name;
    double value = 0.0;
    Relation relation = Relation::Finite;
    double bound = 0.0;
    bool passed = false;
    std::string note;
};

/// Frozen bound for a check on a family (nullopt: finiteness and stability only).
std::optional<double> frozen_bound(std::string_view check, Family family);

struct RunOptions {
    std::optional<std::filesystem::path> output;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

struct RunManifest {
    nlohmann::json config;
    std::string tool_version;
    double wall_seconds = 0.0;
    std::vector<CheckResult> checks;
    /// Emitted files, relative to the output directory.
    std::vector<std::string> artifacts;
    std::filesystem::path output;

    bool passed() const noexcept;
    std::vector<std::string> failed() const;
};

/// Runs the scenario and writes <scenario>.csv (plus scenario tables), checks.csv,
/// summary.json and manifest.json into the output directory.
RunManifest run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// CLI entry: returns the process exit status (0 pass, 1 check failure, 2 usage or config error).
int run_cli(int argc, char** argv);

} // namespace rotadic::experiments
