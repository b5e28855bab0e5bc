#include <cstring>

#include "doctest.h"
#include "voxl/solver.hpp"

using namespace voxl;

TEST_CASE("config parsing and validation") {
    const std::string good = R"({
        "lattice": "D3Q19", "domain": [16, 16, 16], "tau": 0.56,
        "scenario": "lid_driven_cavity", "velocity": [0.05, 0, 0],
        "steps": 10, "layout": "DisagSoA", "partitions": 2
    })";
    const SolverConfig c = config_from_json(good);
    CHECK(c.lattice == LatticeKind::D3Q19);
    CHECK(c.domain.nz == 16);
    CHECK(c.partitions == 2);

    CHECK_THROWS_AS(config_from_json("{ not json"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"tau": 0.4})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"velocity": [0.5, 0, 0]})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"lattice": "D4Q35"})"), ConfigError);
    CHECK_THROWS_AS(config_from_json(R"({"domain": [16, 16, 16], "partitions": 9})"), ConfigError);
    CHECK_THROWS_AS(
        config_from_json(R"({"scenario": "periodic_box", "levels": 2, "domain": [16,16,16]})"),
        ConfigError);

    // Round trip.
    const SolverConfig back = config_from_json(config_to_json(c));
    CHECK(back.domain.nx == c.domain.nx);
    CHECK(back.tau == c.tau);
    CHECK(back.layout == c.layout);
}

TEST_CASE("periodic box: mass drift below 1e-12 over 100 steps") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {16, 16, 16};
    config.scenario = Scenario::PeriodicBox;
    config.tau = 0.9;
    config.velocity = {0.0, 0.0, 0.0};
    config.steps = 100;
    config.partitions = 2;
    config.layout = LayoutScheme::DisagSoA;
    config.perturbation = 0.05;
    config.seed = 2024;

    const RunResult result = run(config);
    REQUIRE(result.diagnostics.size() == 100);
    const double mass0 = result.diagnostics.front().mass;
    for (const auto& row : result.diagnostics)
        CHECK(std::abs(row.mass - mass0) <= 1e-12 * std::abs(mass0));
}

TEST_CASE("partitioned periodic box matches the wrapped dense reference bitwise") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {12, 12, 12};
    config.scenario = Scenario::PeriodicBox;
    config.tau = 0.8;
    config.steps = 20;
    config.perturbation = 0.05;
    config.seed = 7;

    const std::vector<double> reference = reference_dense_run(config);
    for (int parts : {1, 2, 3}) {
        config.partitions = parts;
        for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
            config.layout = scheme;
            const RunResult r = run(config);
            REQUIRE(r.field.size() == reference.size());
            CHECK(std::memcmp(r.field.data(), reference.data(),
                              reference.size() * sizeof(double)) == 0);
        }
    }
}

TEST_CASE("cavity: partitioned runs match the dense reference bitwise, 2D and 3D") {
    for (LatticeKind kind : {LatticeKind::D2Q9, LatticeKind::D3Q19}) {
        SolverConfig config;
        config.lattice = kind;
        config.domain = kind == LatticeKind::D2Q9 ? Extents{16, 16, 1} : Extents{12, 12, 12};
        config.scenario = Scenario::LidDrivenCavity;
        config.tau = 0.56;
        config.velocity = {0.05, 0.0, 0.0};
        config.steps = 15;

        const std::vector<double> reference = reference_dense_run(config);
        for (int parts : {1, 2, 4}) {
            config.partitions = parts;
            for (LayoutScheme scheme :
                 {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
                config.layout = scheme;
                const RunResult r = run(config);
                REQUIRE(r.field.size() == reference.size());
                CHECK(std::memcmp(r.field.data(), reference.data(),
                                  reference.size() * sizeof(double)) == 0);
            }
        }
    }
}

TEST_CASE("cavity centerline profile matches the reference run") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {12, 12, 12};
    config.scenario = Scenario::LidDrivenCavity;
    config.tau = 0.56;
    config.velocity = {0.05, 0.0, 0.0};
    config.steps = 50;
    config.partitions = 3;
    config.layout = LayoutScheme::DisagSoA;

    const Lattice lat = build_lattice(config.lattice);
    const RunResult r = run(config);
    const std::vector<double> ref = reference_dense_run(config);
    const std::vector<double> got = centerline_profile(r.field, config.domain, lat);
    const std::vector<double> expected = centerline_profile(ref, config.domain, lat);
    REQUIRE(got.size() == 12);
    CHECK(std::memcmp(got.data(), expected.data(), got.size() * sizeof(double)) == 0);
    // The top of the centerline is dragged along +x by the lid.
    CHECK(got.back() > 1e-5);
}

TEST_CASE("sparse run emits a dispatch report and conserves activity") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {16, 16, 16};
    config.scenario = Scenario::FlowOverObstacle;
    config.tau = 0.7;
    config.velocity = {0.04, 0.0, 0.0};
    config.steps = 5;
    config.strategy = sparse::Strategy::DisagMem;

    const RunResult r = run(config);
    CHECK(r.dispatch_json.find("\"strategy\": \"disag_mem\"") != std::string::npos);
    CHECK(r.dispatch_json.find("\"extra_storage_bytes\": 0") != std::string::npos);
    CHECK(r.diagnostics.size() == 5);
}

TEST_CASE("multires run emits graph and distribution artifacts") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {16, 16, 16};
    config.scenario = Scenario::LidDrivenCavity;
    config.tau = 0.56;
    config.velocity = {0.05, 0.0, 0.0};
    config.steps = 3;
    config.levels = 2;

    const RunResult r = run(config);
    CHECK(r.graph_dot.find("digraph") == 0);
    CHECK(r.graph_dot.find("FusedCollideStream") != std::string::npos);
    CHECK(r.distribution == "50, 6.25\n");
    CHECK(r.diagnostics.size() == 3);

    config.fused = false;
    const RunResult staged = run(config);
    CHECK(staged.graph_dot.find("FusedCollideStream") == std::string::npos);
    REQUIRE(staged.field.size() == r.field.size());
    CHECK(std::memcmp(staged.field.data(), r.field.data(), r.field.size() * sizeof(double)) == 0);
}

TEST_CASE("diagnostics CSV is byte-stable across repeated runs") {
    SolverConfig config;
    config.lattice = LatticeKind::D2Q9;
    config.domain = {16, 16, 1};
    config.scenario = Scenario::LidDrivenCavity;
    config.tau = 0.6;
    config.velocity = {0.05, 0.0, 0.0};
    config.steps = 10;
    config.partitions = 2;

    const RunResult r1 = run(config);
    const RunResult r2 = run(config);
    CHECK(r1.diagnostics_csv() == r2.diagnostics_csv());
    CHECK(r1.ledger.to_csv() == r2.ledger.to_csv());
    CHECK(r1.diagnostics_csv().rfind("step,mass,max_u\n", 0) == 0);
}

TEST_CASE("instability aborts with the failing step index") {
    SolverConfig config;
    config.lattice = LatticeKind::D3Q19;
    config.domain = {8, 8, 8};
    config.scenario = Scenario::LidDrivenCavity;
    config.tau = 0.501; // far too close to the stability limit
    config.velocity = {0.1, 0.0, 0.0};
    config.steps = 2000;
    CHECK_THROWS_WITH_AS(run(config), doctest::Contains("aborted at step"), std::runtime_error);
}
