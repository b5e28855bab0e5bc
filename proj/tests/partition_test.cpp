#include <cstring>
#include <random>

#include "doctest.h"
#include "voxl/commodel.hpp"
#include "voxl/partition.hpp"

using namespace voxl;

TEST_CASE("balanced decomposition") {
    const Decomposition even = decompose({16, 16, 64}, 8, 2);
    REQUIRE(even.slabs.size() == 8);
    for (int p = 0; p < 8; ++p) {
        CHECK(even.thickness(p) == 8);
        CHECK(even.slabs[p].first == 8 * p);
    }

    const Decomposition uneven = decompose({4, 4, 10}, 3, 2);
    CHECK(uneven.thickness(0) == 4);
    CHECK(uneven.thickness(1) == 3);
    CHECK(uneven.thickness(2) == 3);
    CHECK(uneven.slabs.back().second == 10);

    CHECK_THROWS_AS(decompose({4, 4, 4}, 3, 2), std::invalid_argument);
}

TEST_CASE("neighbor links") {
    const Decomposition d = decompose({4, 4, 16}, 4, 2);
    CHECK(d.upper_neighbor(0) == -1);
    CHECK(d.lower_neighbor(0) == 1);
    CHECK(d.upper_neighbor(2) == 1);
    CHECK(d.lower_neighbor(3) == -1);

    const Decomposition p = decompose({4, 4, 16}, 4, 2, true);
    CHECK(p.upper_neighbor(0) == 3);
    CHECK(p.lower_neighbor(3) == 0);

    const Decomposition single = decompose({4, 4, 16}, 1, 2, true);
    CHECK(single.upper_neighbor(0) == 0);
    CHECK(single.lower_neighbor(0) == 0);
}

TEST_CASE("voxel classification") {
    const Decomposition d = decompose({4, 4, 16}, 4, 2);

    // Interior partition: both boundary slabs shared -> 2 * cross-section.
    auto cls = classify_voxels(d, 1);
    std::int64_t shared = 0;
    for (VoxelClass c : cls) shared += c == VoxelClass::Shared;
    CHECK(shared == 2 * 16);

    // Topmost partition: shared only on its interior-facing side.
    cls = classify_voxels(d, 0);
    shared = 0;
    for (VoxelClass c : cls) shared += c == VoxelClass::Shared;
    CHECK(shared == 16);
    // The shared slab is the last one along the axis (k == thickness-1).
    Extents shape{4, 4, 4};
    Vec3i v{0, 0, 3};
    CHECK(cls[std::size_t(linear_index(v, shape))] == VoxelClass::Shared);
    v.z = 0;
    CHECK(cls[std::size_t(linear_index(v, shape))] == VoxelClass::Private);

    // No neighbors at all: everything private.
    const Decomposition single = decompose({4, 4, 16}, 1, 2);
    cls = classify_voxels(single, 0);
    for (VoxelClass c : cls) CHECK(c == VoxelClass::Private);
}

TEST_CASE("ledger validates record consistency") {
    TransferLedger ledger;
    CHECK_THROWS_AS(ledger.append({0, 0, 1, {0, 4}, {0, 5}, 4}), std::invalid_argument);
    CHECK_THROWS_AS(ledger.append({0, 0, 1, {0, 4}, {0, 4}, 5}), std::invalid_argument);
    ledger.append({0, 0, 1, {0, 4}, {8, 4}, 4});
    CHECK(ledger.records().size() == 1);
    CHECK(ledger.to_csv() == "step,src,dst,base_src,base_dst,elements\n0,0,1,0,8,4\n");
}

TEST_CASE("halo update fills halos with neighbor boundary values") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const Decomposition d = decompose({4, 4, 8}, 2, 2);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);

    for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
        PartitionedField f(d, scheme, lat.q, transfer);
        // Value encodes (global voxel, component) so misplaced copies show up.
        for (int p = 0; p < 2; ++p) {
            Vec3i local;
            for (local.z = 0; local.z < d.thickness(p); ++local.z)
                for (local.y = 0; local.y < 4; ++local.y)
                    for (local.x = 0; local.x < 4; ++local.x)
                        for (int c = 0; c < lat.q; ++c) {
                            Vec3i global = local;
                            global.z += d.slabs[p].first;
                            f.write(p, local, c,
                                    double(linear_index(global, d.domain) * lat.q + c));
                        }
        }
        TransferLedger ledger;
        halo_update(f, &ledger, nullptr, 0);

        // Partition 0's lower halo mirrors partition 1's first slab for every
        // down-crossing component; partition 1's upper halo mirrors partition
        // 0's last slab for the up-crossing set.
        for (int c : transfer.down) {
            Vec3i local{1, 2, 4}; // halo slab of partition 0
            Vec3i global{1, 2, 4};
            CHECK(f.read(0, local, c) == double(linear_index(global, d.domain) * lat.q + c));
        }
        for (int c : transfer.up) {
            Vec3i local{3, 1, -1};
            Vec3i global{3, 1, 3};
            CHECK(f.read(1, local, c) == double(linear_index(global, d.domain) * lat.q + c));
        }
    }
}

TEST_CASE("per-step ledger counts reproduce the layout accounting") {
    for (LatticeKind kind : {LatticeKind::D2Q9, LatticeKind::D3Q19, LatticeKind::D3Q27}) {
        const Lattice lat = build_lattice(kind);
        const int axis = lat.dim == 2 ? 1 : 2;
        Extents domain = lat.dim == 2 ? Extents{8, 16, 1} : Extents{4, 4, 16};
        const std::int64_t s = domain.volume() / domain[axis];
        const Decomposition d = decompose(domain, 4, axis);
        const TransferSets transfer = TransferSets::for_lattice(lat, axis);

        for (LayoutScheme scheme :
             {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
            PartitionedField f(d, scheme, lat.q, transfer);
            TransferLedger ledger;
            halo_update(f, &ledger, nullptr, 7);

            const CommParams model = layout_params(kind, scheme, s);
            for (int p = 1; p <= 2; ++p) { // interior partitions
                const auto stats = ledger.partition_send_stats(7, p);
                CHECK(stats.alpha == model.alpha);
                CHECK(stats.beta == model.beta);
            }
            // End partitions send half of an interior partition's traffic.
            const auto end_stats = ledger.partition_send_stats(7, 0);
            CHECK(end_stats.alpha == model.alpha / 2);
            CHECK(end_stats.beta == model.beta / 2);
        }
    }
}

TEST_CASE("generic 2-component stencil field: per-side ledger structure") {
    const Extents domain{16, 8, 1};
    const Decomposition d = decompose(domain, 2, 1);
    const TransferSets transfer = TransferSets::all(2);

    struct Expect {
        LayoutScheme scheme;
        std::int64_t records_per_side;
    };
    for (const Expect e : {Expect{LayoutScheme::AoS, 1}, Expect{LayoutScheme::SoA, 2},
                           Expect{LayoutScheme::DisagSoA, 1}}) {
        PartitionedField f(d, e.scheme, 2, transfer);
        TransferLedger ledger;
        halo_update(f, &ledger, nullptr, 0);
        const auto stats = ledger.partition_send_stats(0, 0); // one neighbor
        CHECK(stats.alpha == e.records_per_side);
        CHECK(stats.beta == 2 * 16); // full cardinality times the boundary row
    }
}

TEST_CASE("asymmetric neighbor links are rejected") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const Decomposition d = decompose({4, 4, 8}, 2, 2);
    PartitionedField f(d, LayoutScheme::SoA, lat.q, TransferSets::for_lattice(lat, 2));
    f.set_neighbor_links(0, -1, -1); // break 0 <-> 1
    TransferLedger ledger;
    CHECK_THROWS_AS(halo_update(f, &ledger, nullptr, 0), std::runtime_error);
}

TEST_CASE("identity kernel: field unchanged, ledger still accounts transfers") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const Decomposition d = decompose({4, 4, 8}, 2, 2);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);
    PartitionedField a(d, LayoutScheme::DisagSoA, lat.q, transfer);
    PartitionedField b(d, LayoutScheme::DisagSoA, lat.q, transfer);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> dist(0.5, 1.5);
    std::vector<double> init(std::size_t(d.domain.volume()) * lat.q);
    for (double& x : init) x = dist(rng);
    a.fill_canonical(init);

    auto identity = [&](const PartView& view, Vec3i v, double* out) {
        for (int c = 0; c < lat.q; ++c) out[c] = view(v, c);
    };
    TransferLedger ledger;
    TraceLog trace;
    step_occ(a, b, identity, &ledger, &trace, 0);

    CHECK(b.to_canonical() == init);
    const auto stats = ledger.step_stats(0);
    CHECK(stats.alpha == 2); // one record per (partition, neighbor) pair
    CHECK(stats.beta == 2 * 5 * 16);
}

TEST_CASE("OCC trace: every shared event follows every halo event of its step") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const Decomposition d = decompose({4, 4, 16}, 4, 2);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);
    PartitionedField a(d, LayoutScheme::SoA, lat.q, transfer);
    PartitionedField b(d, LayoutScheme::SoA, lat.q, transfer);

    auto identity = [&](const PartView& view, Vec3i v, double* out) {
        for (int c = 0; c < lat.q; ++c) out[c] = view(v, c);
    };
    TraceLog trace;
    for (int step = 0; step < 3; ++step) {
        step_occ(a, b, identity, nullptr, &trace, step);
        std::swap(a, b);
    }
    for (int step = 0; step < 3; ++step) {
        int last_stage1 = -1, first_stage2 = 1 << 30;
        for (int i = 0; i < int(trace.events().size()); ++i) {
            const auto& e = trace.events()[i];
            if (e.step != step) continue;
            if (e.stage == 1) last_stage1 = std::max(last_stage1, i);
            else first_stage2 = std::min(first_stage2, i);
        }
        CHECK(last_stage1 < first_stage2);
    }
}

TEST_CASE("five-point Jacobi on a vector field: partition-count invariance") {
    // Generic radius-1 kernel over a 2-component field, partitioned along y.
    const Extents domain{12, 16, 1};
    const TransferSets transfer = TransferSets::all(2);

    auto jacobi = [&](const PartView& view, Vec3i v, double* out) {
        for (int c = 0; c < 2; ++c) {
            double sum = 0.0;
            int n = 0;
            const Vec3i offsets[4] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}};
            for (const Vec3i& d : offsets) {
                const Vec3i s = v + d;
                if (s.x < 0 || s.x >= domain.nx || s.y < 0 || s.y >= domain.ny) continue;
                sum += view(s, c);
                ++n;
            }
            out[c] = 0.5 * view(v, c) + 0.5 * (n ? sum / n : 0.0);
        }
    };

    std::mt19937_64 rng(3210);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> init(std::size_t(domain.volume()) * 2);
    for (double& x : init) x = dist(rng);

    std::vector<std::vector<double>> results;
    for (int parts : {1, 2, 4}) {
        for (LayoutScheme scheme :
             {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
            const Decomposition d = decompose(domain, parts, 1);
            PartitionedField a(d, scheme, 2, transfer);
            PartitionedField b(d, scheme, 2, transfer);
            a.fill_canonical(init);
            for (int step = 0; step < 10; ++step) {
                step_occ(a, b, jacobi, nullptr, nullptr, step);
                std::swap(a, b);
            }
            results.push_back(a.to_canonical());
        }
    }
    for (std::size_t i = 1; i < results.size(); ++i) {
        REQUIRE(results[i].size() == results[0].size());
        CHECK(std::memcmp(results[i].data(), results[0].data(),
                          results[0].size() * sizeof(double)) == 0);
    }
}

#ifndef NDEBUG
TEST_CASE("kernel reads outside the stencil radius are rejected in debug builds") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const Decomposition d = decompose({4, 4, 8}, 2, 2);
    PartitionedField a(d, LayoutScheme::SoA, lat.q, TransferSets::for_lattice(lat, 2));
    PartitionedField b(d, LayoutScheme::SoA, lat.q, TransferSets::for_lattice(lat, 2));
    auto bad_kernel = [&](const PartView& view, Vec3i v, double* out) {
        (void)view({(v.x + 2) % 4, v.y, v.z}, 0); // radius-2 read
        for (int c = 0; c < lat.q; ++c) out[c] = 0.0;
    };
    CHECK_THROWS_AS(step_occ(a, b, bad_kernel, nullptr, nullptr, 0), std::runtime_error);
}
#endif
