#include "voxl/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

namespace voxl {

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::LidDrivenCavity: return "lid_driven_cavity";
        case Scenario::FlowOverObstacle: return "flow_over_obstacle";
        case Scenario::PeriodicBox: return "periodic_box";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& name) {
    if (name == "lid_driven_cavity") return Scenario::LidDrivenCavity;
    if (name == "flow_over_obstacle") return Scenario::FlowOverObstacle;
    if (name == "periodic_box") return Scenario::PeriodicBox;
    throw ConfigError("unknown scenario: " + name);
}

void SolverConfig::validate() const {
    std::ostringstream err;
    const double speed =
        std::sqrt(velocity[0] * velocity[0] + velocity[1] * velocity[1] + velocity[2] * velocity[2]);
    if (!(tau > 0.5)) err << "tau must be > 0.5; ";
    if (speed > 0.1) err << "|velocity| must be <= 0.1 (stability envelope); ";
    if (steps < 0) err << "steps must be >= 0; ";
    if (domain.nx < 2 || domain.ny < 2) err << "domain extents must be >= 2; ";
    if (dim() == 2 && domain.nz != 1) err << "D2Q9 requires nz == 1; ";
    if (dim() == 3 && domain.nz < 2) err << "3D lattices require nz >= 2; ";
    if (partitions < 1) err << "partitions must be >= 1; ";
    if (partitions > 1 && domain[partition_axis()] < 2 * partitions)
        err << "partition axis too small for the partition count; ";
    if (levels < 1 || levels > 4) err << "levels must be in [1, 4]; ";
    if (levels > 1 && scenario != Scenario::LidDrivenCavity)
        err << "multi-level runs support the lid_driven_cavity scenario only; ";
    if (levels > 1 && partitions > 1) err << "multi-level runs are single-partition; ";
    if (levels > 1) {
        const int scale = 1 << (levels - 1);
        if (domain.nx % scale || domain.ny % scale || (dim() == 3 && domain.nz % scale))
            err << "domain extents must divide the coarsest cell size; ";
    }
    if (perturbation < 0.0 || perturbation > 0.5) err << "perturbation must be in [0, 0.5]; ";
    if (scenario == Scenario::FlowOverObstacle) {
        const int min_extent = std::min(domain.nx, std::min(domain.ny, domain.nz));
        const double r = obstacle_radius > 0.0 ? obstacle_radius : min_extent / 5.0;
        if (2.0 * r >= min_extent - 4) err << "obstacle does not fit the domain; ";
    }
    const std::string msg = err.str();
    if (!msg.empty()) throw ConfigError("invalid configuration: " + msg);
}

SolverConfig config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
    }
    SolverConfig c;
    try {
        if (j.contains("lattice")) c.lattice = lattice_kind_from_string(j.at("lattice"));
        if (j.contains("domain")) {
            const auto& d = j.at("domain");
            if (!d.is_array() || d.size() < 2 || d.size() > 3)
                throw ConfigError("domain must be [nx, ny] or [nx, ny, nz]");
            c.domain.nx = d[0];
            c.domain.ny = d[1];
            c.domain.nz = d.size() == 3 ? int(d[2]) : 1;
        }
        if (j.contains("tau")) c.tau = j.at("tau");
        if (j.contains("scenario")) c.scenario = scenario_from_string(j.at("scenario"));
        if (j.contains("velocity")) {
            const auto& u = j.at("velocity");
            for (std::size_t a = 0; a < 3 && a < u.size(); ++a) c.velocity[a] = u[a];
        }
        if (j.contains("steps")) c.steps = j.at("steps");
        if (j.contains("layout")) c.layout = layout_scheme_from_string(j.at("layout"));
        if (j.contains("partitions")) c.partitions = j.at("partitions");
        if (j.contains("strategy")) c.strategy = sparse::strategy_from_string(j.at("strategy"));
        if (j.contains("obstacle_radius")) c.obstacle_radius = j.at("obstacle_radius");
        if (j.contains("levels")) c.levels = j.at("levels");
        if (j.contains("fused")) c.fused = j.at("fused");
        if (j.contains("seed")) c.seed = j.at("seed");
        if (j.contains("perturbation")) c.perturbation = j.at("perturbation");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(std::string("configuration error: ") + e.what());
    }
    c.validate();
    return c;
}

std::string config_to_json(const SolverConfig& c) {
    nlohmann::json j;
    j["lattice"] = to_string(c.lattice);
    j["domain"] = c.dim() == 2 ? nlohmann::json::array({c.domain.nx, c.domain.ny})
                               : nlohmann::json::array({c.domain.nx, c.domain.ny, c.domain.nz});
    j["tau"] = c.tau;
    j["scenario"] = to_string(c.scenario);
    j["velocity"] = {c.velocity[0], c.velocity[1], c.velocity[2]};
    j["steps"] = c.steps;
    j["layout"] = to_string(c.layout);
    j["partitions"] = c.partitions;
    j["strategy"] = sparse::to_string(c.strategy);
    j["levels"] = c.levels;
    j["fused"] = c.fused;
    j["seed"] = c.seed;
    j["perturbation"] = c.perturbation;
    if (c.obstacle_radius > 0.0) j["obstacle_radius"] = c.obstacle_radius;
    return j.dump(2) + "\n";
}

std::string config_schema() {
    return "configuration keys (JSON object):\n"
           "  lattice          \"D2Q9\" | \"D3Q19\" | \"D3Q27\"\n"
           "  domain           [nx, ny] or [nx, ny, nz]\n"
           "  tau              relaxation time, > 0.5 (coarsest level for multires)\n"
           "  scenario         \"lid_driven_cavity\" | \"flow_over_obstacle\" | \"periodic_box\"\n"
           "  velocity         [ux, uy, uz]; lid velocity or inflow velocity, |u| <= 0.1\n"
           "  steps            time steps (coarse steps for multires)\n"
           "  layout           \"AoS\" | \"SoA\" | \"DisagSoA\" (dense runs)\n"
           "  partitions       1D partition count (dense runs)\n"
           "  strategy         \"naive\" | \"disag_bitmask\" | \"disag_mem\" (sparse runs)\n"
           "  obstacle_radius  sphere radius in voxels (flow_over_obstacle)\n"
           "  levels           resolution levels, 1-4 (lid_driven_cavity)\n"
           "  fused            multires kernel fusion on uniform blocks (bool)\n"
           "  seed             RNG seed for the periodic_box initial state\n"
           "  perturbation     relative amplitude of the initial perturbation\n";
}

std::string RunResult::diagnostics_csv() const {
    std::ostringstream os;
    os << "step,mass,max_u\n";
    char buf[80];
    for (const DiagRow& row : diagnostics) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", row.step, row.mass, row.max_speed);
        os << buf;
    }
    return os.str();
}

lbm::FlowRules rules_for(const SolverConfig& config) {
    lbm::FlowRules r;
    r.domain = config.domain;
    if (config.scenario == Scenario::PeriodicBox) {
        r.periodic = {true, true, config.dim() == 3};
        r.wrap = r.periodic;
    } else if (config.scenario == Scenario::LidDrivenCavity) {
        r.has_lid = true;
        r.lid_axis = config.partition_axis();
        r.lid_at_max = true;
        r.lid_u = {config.velocity[0], config.velocity[1], config.velocity[2]};
    }
    return r;
}

std::vector<double> initial_canonical_state(const SolverConfig& config) {
    const Lattice lat = build_lattice(config.lattice);
    std::vector<double> state(std::size_t(config.domain.volume()) * lat.q);
    double feq[27];
    if (config.scenario == Scenario::PeriodicBox && config.perturbation > 0.0) {
        std::mt19937_64 rng(config.seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        for (std::int64_t v = 0; v < config.domain.volume(); ++v) {
            const double rho = 1.0 + config.perturbation * unit(rng);
            const double u[3] = {0.1 * config.perturbation * unit(rng),
                                 0.1 * config.perturbation * unit(rng),
                                 config.dim() == 3 ? 0.1 * config.perturbation * unit(rng) : 0.0};
            equilibrium(lat, rho, u, feq);
            for (int i = 0; i < lat.q; ++i) state[std::size_t(v) * lat.q + i] = feq[i];
        }
    } else {
        const double u0[3] = {0.0, 0.0, 0.0};
        equilibrium(lat, 1.0, u0, feq);
        for (std::int64_t v = 0; v < config.domain.volume(); ++v)
            for (int i = 0; i < lat.q; ++i) state[std::size_t(v) * lat.q + i] = feq[i];
    }
    return state;
}

std::vector<double> reference_dense_run(const SolverConfig& config,
                                        std::vector<RunResult::DiagRow>* diagnostics) {
    const Lattice lat = build_lattice(config.lattice);
    const lbm::FlowRules rules = rules_for(config);
    lbm::DenseState a(config.domain, lat.q), b(config.domain, lat.q);
    a.f = initial_canonical_state(config);
    const double inv_tau = 1.0 / config.tau;
    for (int step = 0; step < config.steps; ++step) {
        lbm::fused_stream_collide(lat, rules, inv_tau, a, b);
        std::swap(a, b);
        if (diagnostics) {
            const lbm::Diagnostics d = lbm::probe_field(lat, a.f, step);
            diagnostics->push_back({step, d.mass, d.max_speed});
        }
    }
    if (!diagnostics && config.steps > 0) lbm::probe_field(lat, a.f, config.steps - 1);
    return a.f;
}

std::vector<double> centerline_profile(const std::vector<double>& canonical, Extents domain,
                                       const Lattice& lat) {
    const int axis = lat.dim == 2 ? 1 : 2;
    std::vector<double> profile;
    Vec3i v{domain.nx / 2, lat.dim == 2 ? 0 : domain.ny / 2, 0};
    for (int k = 0; k < domain[axis]; ++k) {
        v[axis] = k;
        const double* f = canonical.data() + std::size_t(linear_index(v, domain)) * lat.q;
        double rho, u[3];
        macroscopic(lat, f, rho, u);
        profile.push_back(u[0]);
    }
    return profile;
}

namespace {

RunResult run_dense(const SolverConfig& config, const Lattice& lat) {
    RunResult result;
    result.config = config;

    const int axis = config.partition_axis();
    const bool periodic_axis =
        config.scenario == Scenario::PeriodicBox; // wrap handled through halos
    Decomposition decomp = decompose(config.domain, config.partitions, axis, periodic_axis);
    const TransferSets transfer = TransferSets::for_lattice(lat, axis);
    PartitionedField a(decomp, config.layout, lat.q, transfer);
    PartitionedField b(decomp, config.layout, lat.q, transfer);
    a.fill_canonical(initial_canonical_state(config));

    lbm::GatherKernel kernel;
    kernel.lat = &lat;
    kernel.rules = rules_for(config);
    // The partition axis stays unwrapped; halos carry the wrapped neighbor.
    kernel.rules.wrap[axis] = false;
    kernel.inv_tau = 1.0 / config.tau;

    for (int step = 0; step < config.steps; ++step) {
        try {
            step_occ(a, b, kernel, &result.ledger, &result.trace, step);
            std::swap(a, b);
            const lbm::Diagnostics d = lbm::probe_field(lat, a.to_canonical(), step);
            result.diagnostics.push_back({step, d.mass, d.max_speed});
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("run aborted at step " + std::to_string(step) + ": " +
                                     e.what());
        }
    }
    result.field = a.to_canonical();

    std::ostringstream hdr;
    hdr << "{\"shape\": [" << config.domain.nx << ", " << config.domain.ny << ", "
        << config.domain.nz << "], \"lattice\": \"" << to_string(config.lattice)
        << "\", \"representation\": \"dense\", \"layout\": \"" << to_string(config.layout)
        << "\", \"cardinality\": " << lat.q
        << ", \"order\": \"voxel-major (x fastest), component innermost\"}\n";
    result.field_header_json = hdr.str();
    return result;
}

RunResult run_sparse(const SolverConfig& config, const Lattice& lat) {
    RunResult result;
    result.config = config;

    const int min_extent = std::min(config.domain.nx, std::min(config.domain.ny, config.domain.nz));
    const double radius = config.obstacle_radius > 0.0 ? config.obstacle_radius : min_extent / 5.0;
    const double cx = config.domain.nx / 2.0 - 0.5, cy = config.domain.ny / 2.0 - 0.5,
                 cz = config.domain.nz / 2.0 - 0.5;
    std::vector<Vec3i> active;
    Vec3i v;
    for (v.z = 0; v.z < config.domain.nz; ++v.z)
        for (v.y = 0; v.y < config.domain.ny; ++v.y)
            for (v.x = 0; v.x < config.domain.nx; ++v.x) {
                const double dx = v.x - cx, dy = v.y - cy, dz = v.z - cz;
                if (dx * dx + dy * dy + dz * dz > radius * radius) active.push_back(v);
            }

    sparse::SparseScenario scenario =
        sparse::SparseScenario::wind_tunnel(config.domain, config.tau, config.velocity);
    sparse::SparseLbmEngine engine(lat, scenario, active, 4, config.strategy);
    for (int step = 0; step < config.steps; ++step) {
        try {
            engine.step();
            const lbm::Diagnostics d = lbm::probe_field(lat, engine.canonical_state(), step);
            result.diagnostics.push_back({step, d.mass, d.max_speed});
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("run aborted at step " + std::to_string(step) + ": " +
                                     e.what());
        }
    }
    result.field = engine.canonical_state();
    result.dispatch_json = engine.report().to_json() + "\n";

    std::ostringstream hdr;
    hdr << "{\"shape\": [" << config.domain.nx << ", " << config.domain.ny << ", "
        << config.domain.nz << "], \"lattice\": \"" << to_string(config.lattice)
        << "\", \"representation\": \"block_sparse\", \"strategy\": \""
        << sparse::to_string(config.strategy) << "\", \"cardinality\": " << lat.q
        << ", \"active_voxels\": " << engine.grid().num_active()
        << ", \"order\": \"active cells sorted by (z, y, x), component innermost\"}\n";
    result.field_header_json = hdr.str();
    return result;
}

RunResult run_multires(const SolverConfig& config, const Lattice& lat) {
    RunResult result;
    result.config = config;

    // Finest level under the lid, each coarser level below the previous one:
    // the moving-lid region keeps full resolution, the quiescent bottom does
    // not.
    const int axis = config.partition_axis();
    const Extents dom = config.domain;
    std::vector<int> level_map(std::size_t(dom.volume()));
    Vec3i v;
    for (v.z = 0; v.z < dom.nz; ++v.z)
        for (v.y = 0; v.y < dom.ny; ++v.y)
            for (v.x = 0; v.x < dom.nx; ++v.x) {
                const int k = v[axis];
                int level = config.levels - 1;
                for (int l = 0; l < config.levels - 1; ++l) {
                    if (k >= (dom[axis] >> (l + 1))) {
                        level = l;
                        break;
                    }
                }
                level_map[std::size_t(linear_index(v, dom))] = level;
            }

    mres::MultiResGrid grid =
        mres::MultiResGrid::build(dom, config.levels, lat, level_map, config.tau);
    lbm::FlowRules rules = rules_for(config);
    mres::MultiResLbm engine(lat, std::move(grid), rules, config.fused);

    for (int step = 0; step < config.steps; ++step) {
        try {
            engine.coarse_step();
            const lbm::Diagnostics d = lbm::probe_field(lat, engine.canonical_state(), step);
            result.diagnostics.push_back({step, d.mass, d.max_speed});
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("run aborted at step " + std::to_string(step) + ": " +
                                     e.what());
        }
    }
    result.field = engine.canonical_state();
    result.graph_dot = engine.graph().to_dot();
    result.distribution = engine.distribution_report() + "\n";

    std::ostringstream hdr;
    hdr << "{\"shape\": [" << dom.nx << ", " << dom.ny << ", " << dom.nz
        << "], \"lattice\": \"" << to_string(config.lattice)
        << "\", \"representation\": \"multires\", \"levels\": " << config.levels
        << ", \"cardinality\": " << lat.q
        << ", \"order\": \"levels finest to coarsest, cells sorted by (z, y, x), component "
           "innermost\"}\n";
    result.field_header_json = hdr.str();
    return result;
}

} // namespace

RunResult run(const SolverConfig& config) {
    config.validate();
    const Lattice lat = build_lattice(config.lattice);
    if (config.levels > 1) return run_multires(config, lat);
    if (config.scenario == Scenario::FlowOverObstacle) return run_sparse(config, lat);
    return run_dense(config, lat);
}

} // namespace voxl
