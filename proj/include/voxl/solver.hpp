#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxl/commodel.hpp"
#include "voxl/lbm.hpp"
#include "voxl/multires.hpp"
#include "voxl/partition.hpp"
#include "voxl/sparse.hpp"

namespace voxl {

enum class Scenario { LidDrivenCavity, FlowOverObstacle, PeriodicBox };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

/// A configuration file that fails schema validation raises this; the CLI
/// maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverConfig {
    LatticeKind lattice = LatticeKind::D3Q19;
    Extents domain{32, 32, 32};
    double tau = 0.56;
    Scenario scenario = Scenario::LidDrivenCavity;
    std::array<double, 3> velocity{0.05, 0.0, 0.0}; // lid velocity or inflow velocity
    int steps = 200;
    LayoutScheme layout = LayoutScheme::DisagSoA;
    int partitions = 1;
    sparse::Strategy strategy = sparse::Strategy::Naive;
    double obstacle_radius = 0.0; // voxels; 0 selects a fifth of the smallest extent
    int levels = 1;               // > 1 switches the cavity to the multires engine
    bool fused = true;            // multires execution graph shape
    unsigned long seed = 42;      // initial-state perturbation seed (PeriodicBox)
    double perturbation = 0.0;    // relative amplitude of the initial perturbation

    int dim() const { return lattice == LatticeKind::D2Q9 ? 2 : 3; }
    int partition_axis() const { return dim() == 2 ? 1 : 2; }
    void validate() const; // throws ConfigError
};

/// Parses a JSON configuration document; throws ConfigError with diagnostics.
SolverConfig config_from_json(const std::string& text);
std::string config_to_json(const SolverConfig& config);
/// Human-readable description of the accepted keys.
std::string config_schema();

struct RunResult {
    SolverConfig config;
    /// Final populations. Dense runs: canonical domain order (voxel-major,
    /// component innermost). Sparse and multires runs: active cells sorted by
    /// coordinate (multires: per level, finest to coarsest).
    std::vector<double> field;
    std::string field_header_json;
    struct DiagRow {
        int step;
        double mass;
        double max_speed;
    };
    std::vector<DiagRow> diagnostics;
    TransferLedger ledger; // dense partitioned runs
    TraceLog trace;
    std::string dispatch_json; // sparse runs
    std::string graph_dot;     // multires runs
    std::string distribution;  // multires runs

    std::string diagnostics_csv() const;
};

/// Executes the configured scenario on the configured representation.
RunResult run(const SolverConfig& config);

/// Flow rules of a dense scenario for a single unpartitioned grid (every
/// periodic axis wrapped arithmetically).
lbm::FlowRules rules_for(const SolverConfig& config);

/// The run's initial populations in canonical order: rest equilibrium, or the
/// seeded perturbed state for PeriodicBox.
std::vector<double> initial_canonical_state(const SolverConfig& config);

/// Plain dense single-grid execution of a dense scenario; the reference the
/// partitioned engine is checked against.
std::vector<double> reference_dense_run(const SolverConfig& config,
                                        std::vector<RunResult::DiagRow>* diagnostics = nullptr);

/// u_x along the partition-axis centerline of a canonical dense field.
std::vector<double> centerline_profile(const std::vector<double>& canonical, Extents domain,
                                       const Lattice& lat);

} // namespace voxl
