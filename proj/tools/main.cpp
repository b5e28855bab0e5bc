#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "voxl/solver.hpp"

namespace fs = std::filesystem;
using namespace voxl;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    SolverConfig config = config_from_json(read_file(config_path));
    RunResult result = run(config);

    fs::create_directories(out_dir);
    const fs::path base(out_dir);
    {
        std::ofstream bin(base / "fields.bin", std::ios::binary);
        bin.write(reinterpret_cast<const char*>(result.field.data()),
                  std::streamsize(result.field.size() * sizeof(double)));
    }
    write_file(base / "fields.json", result.field_header_json);
    write_file(base / "diagnostics.csv", result.diagnostics_csv());
    write_file(base / "config.json", config_to_json(config));
    if (!result.ledger.records().empty()) write_file(base / "ledger.csv", result.ledger.to_csv());
    if (!result.trace.events().empty()) write_file(base / "trace.json", result.trace.to_json());
    if (!result.dispatch_json.empty()) write_file(base / "dispatch.json", result.dispatch_json);
    if (!result.graph_dot.empty()) write_file(base / "graph.dot", result.graph_dot);
    if (!result.distribution.empty()) write_file(base / "distribution.txt", result.distribution);

    const auto& last = result.diagnostics.back();
    std::cout << "run complete: " << config.steps << " steps, final mass " << last.mass
              << ", max |u| " << last.max_speed << "\n";
    std::cout << "outputs written to " << out_dir << "\n";
    return 0;
}

int report_divergence(const std::vector<double>& a, const std::vector<double>& b,
                      const std::string& what) {
    if (a.size() != b.size()) {
        std::cout << "FAIL " << what << ": size mismatch " << a.size() << " vs " << b.size()
                  << "\n";
        return 1;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::memcmp(&a[i], &b[i], sizeof(double)) != 0) {
            std::cout << "FAIL " << what << ": first divergence at flat index " << i << " ("
                      << a[i] << " vs " << b[i] << ")\n";
            return 1;
        }
    }
    std::cout << "PASS " << what << "\n";
    return 0;
}

int cmd_verify() {
    int failures = 0;

    // Partition-count and layout invariance against the plain dense reference.
    {
        SolverConfig config;
        config.lattice = LatticeKind::D3Q19;
        config.domain = {16, 16, 16};
        config.scenario = Scenario::LidDrivenCavity;
        config.tau = 0.56;
        config.velocity = {0.05, 0.0, 0.0};
        config.steps = 20;
        const std::vector<double> reference = reference_dense_run(config);
        for (LayoutScheme layout : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA})
            for (int parts : {1, 2, 4}) {
                config.layout = layout;
                config.partitions = parts;
                RunResult r = run(config);
                std::ostringstream what;
                what << "partition_invariance " << to_string(layout) << " x" << parts;
                failures += report_divergence(reference, r.field, what.str());
            }
    }

    // The three sparse dispatch strategies agree bitwise.
    {
        SolverConfig config;
        config.lattice = LatticeKind::D3Q19;
        config.domain = {16, 16, 16};
        config.scenario = Scenario::FlowOverObstacle;
        config.tau = 0.7;
        config.velocity = {0.04, 0.0, 0.0};
        config.steps = 10;
        config.strategy = sparse::Strategy::Naive;
        RunResult naive = run(config);
        for (sparse::Strategy s : {sparse::Strategy::DisagBitmask, sparse::Strategy::DisagMem}) {
            config.strategy = s;
            RunResult r = run(config);
            failures += report_divergence(naive.field, r.field,
                                          std::string("sparse_equivalence ") + sparse::to_string(s));
        }
    }

    // Fused and staged multires execution agree bitwise.
    {
        SolverConfig config;
        config.lattice = LatticeKind::D3Q19;
        config.domain = {16, 16, 16};
        config.scenario = Scenario::LidDrivenCavity;
        config.tau = 0.56;
        config.velocity = {0.05, 0.0, 0.0};
        config.steps = 5;
        config.levels = 2;
        config.fused = false;
        RunResult staged = run(config);
        config.fused = true;
        RunResult fused = run(config);
        failures += report_divergence(staged.field, fused.field, "fusion_soundness 2-level");
    }

    if (failures == 0) std::cout << "all verification suites passed\n";
    return failures == 0 ? 0 : 1;
}

int cmd_ledger(const std::string& config_path) {
    SolverConfig config = config_from_json(read_file(config_path));
    if (config.levels > 1 || config.scenario == Scenario::FlowOverObstacle)
        throw ConfigError("ledger requires a dense partitioned run");
    const int steps = std::min(config.steps, 10);
    config.steps = steps;
    RunResult result = run(config);

    const Lattice lat = build_lattice(config.lattice);
    const std::int64_t s =
        config.domain.volume() / config.domain[config.partition_axis()];
    const CommParams model = layout_params(config.lattice, config.layout, s);

    std::cout << "step,partition,alpha,beta,model_alpha,model_beta,match\n";
    bool all_match = true;
    const bool periodic = config.scenario == Scenario::PeriodicBox;
    for (int step = 0; step < steps; ++step) {
        for (int p = 0; p < config.partitions; ++p) {
            // With periodic wrap every partition has two neighbors.
            const bool interior = periodic || (p > 0 && p < config.partitions - 1);
            const auto stats = result.ledger.partition_send_stats(step, p);
            if (!interior) {
                std::cout << step << "," << p << "," << stats.alpha << "," << stats.beta
                          << ",,,(end partition)\n";
                continue;
            }
            const bool match = stats.alpha == model.alpha && stats.beta == model.beta;
            all_match = all_match && match;
            std::cout << step << "," << p << "," << stats.alpha << "," << stats.beta << ","
                      << model.alpha << "," << model.beta << "," << (match ? "yes" : "NO") << "\n";
        }
    }
    if (!all_match) {
        std::cout << "ledger does not match the model\n";
        return 1;
    }
    return 0;
}

int cmd_model() {
    std::cout << "# five-point stencil on a 2-component vector field (beta per boundary row)\n";
    std::cout << vector_field_table_csv();
    std::cout << "# LBM halo update, s = boundary cross-section voxels\n";
    std::cout << lbm_table_csv();
    return 0;
}

int cmd_report(const std::string& dir) {
    const fs::path base(dir);
    if (!fs::exists(base)) {
        std::cerr << "report: directory not found: " << dir << "\n";
        return 2;
    }
    std::cout << "report for " << dir << "\n";
    if (fs::exists(base / "config.json")) {
        SolverConfig config = config_from_json(read_file(base / "config.json"));
        std::cout << "  scenario: " << to_string(config.scenario) << ", lattice "
                  << to_string(config.lattice) << ", domain " << config.domain.nx << "x"
                  << config.domain.ny << "x" << config.domain.nz << ", steps " << config.steps
                  << "\n";
    }
    if (fs::exists(base / "diagnostics.csv")) {
        std::ifstream in(base / "diagnostics.csv");
        std::string line, last;
        std::getline(in, line); // header
        while (std::getline(in, line))
            if (!line.empty()) last = line;
        std::cout << "  final diagnostics (step,mass,max_u): " << last << "\n";
    }
    if (fs::exists(base / "ledger.csv")) {
        std::ifstream in(base / "ledger.csv");
        std::string line;
        std::getline(in, line);
        std::int64_t records = 0, elements = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            ++records;
            elements += std::stoll(line.substr(line.rfind(',') + 1));
        }
        std::cout << "  ledger: " << records << " transfer records, " << elements
                  << " elements total\n";
    }
    if (fs::exists(base / "dispatch.json")) {
        std::cout << "  dispatch: " << read_file(base / "dispatch.json");
    }
    if (fs::exists(base / "distribution.txt")) {
        std::cout << "  level distribution (% of finest cells): "
                  << read_file(base / "distribution.txt");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"volumetric layouts and LBM verification driver"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", report_dir;

    CLI::App* c_run = app.add_subcommand("run", "execute a scenario configuration");
    c_run->add_option("--config", config_path, "JSON configuration file")->required();
    c_run->add_option("--out", out_dir, "output directory");

    app.add_subcommand("verify", "run the equivalence suites");

    CLI::App* c_ledger =
        app.add_subcommand("ledger", "per-step transfer counts vs the analytical model");
    c_ledger->add_option("--config", config_path, "JSON configuration file")->required();

    app.add_subcommand("model", "print the layout communication tables as CSV");

    CLI::App* c_report = app.add_subcommand("report", "summarize a run output directory");
    c_report->add_option("--dir", report_dir, "run output directory")->required();

    try {
        app.parse(argc, argv);
        if (c_run->parsed()) return cmd_run(config_path, out_dir);
        if (app.get_subcommand("verify")->parsed()) return cmd_verify();
        if (c_ledger->parsed()) return cmd_ledger(config_path);
        if (app.get_subcommand("model")->parsed()) return cmd_model();
        if (c_report->parsed()) return cmd_report(report_dir);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n" << config_schema();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
