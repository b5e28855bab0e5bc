#include <fstream>
#include <sstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "voxl/layout.hpp"

using namespace voxl;

namespace {

// Every (voxel, component) of the extended slab in scan order.
template <class Fn>
void for_each_cell(const LayoutMap& m, Fn&& fn) {
    const Extents shape = m.shape();
    const int axis = m.axis();
    Vec3i v;
    for (int k = -1; k <= shape[axis]; ++k) {
        v[axis] = k;
        const int a0 = axis == 0 ? 1 : 0;
        const int a1 = axis == 2 ? 1 : 2;
        for (int j = 0; j < shape[a1]; ++j)
            for (int i = 0; i < shape[a0]; ++i) {
                v[a0] = i;
                v[a1] = j;
                for (int c = 0; c < m.cardinality(); ++c) fn(v, c);
            }
    }
}

void check_bijection(const LayoutMap& m) {
    std::vector<bool> seen(std::size_t(m.total_len()), false);
    for_each_cell(m, [&](Vec3i v, int c) {
        const std::int64_t a = m.address(v, c);
        REQUIRE(a >= 0);
        REQUIRE(a < m.total_len());
        REQUIRE_FALSE(seen[std::size_t(a)]);
        seen[std::size_t(a)] = true;
    });
    // total_len cells seen without collision => addresses cover [0, total_len)
}

} // namespace

TEST_CASE("AoS addressing: components of one voxel are adjacent") {
    const LayoutMap m = LayoutMap::build(LayoutScheme::AoS, {4, 4, 1}, 2, 1);
    for_each_cell(m, [&](Vec3i v, int c) {
        if (c + 1 < m.cardinality()) CHECK(m.address(v, c + 1) == m.address(v, c) + 1);
    });
    const std::int64_t a = m.address({2, 1, 0}, 0);
    CHECK(m.address({2, 1, 0}, 1) == a + 1);
}

TEST_CASE("SoA addressing: component planes with the extended-slab stride") {
    const LayoutMap m = LayoutMap::build(LayoutScheme::SoA, {4, 4, 1}, 2, 1);
    const std::int64_t plane = std::int64_t(4 + 2) * 4; // (extent+2 halos) * cross-section
    for_each_cell(m, [&](Vec3i v, int c) {
        if (c + 1 < m.cardinality()) CHECK(m.address(v, c + 1) == m.address(v, c) + plane);
    });
    // Fixed-component addresses over row-adjacent voxels are consecutive.
    CHECK(m.address({1, 2, 0}, 0) + 1 == m.address({2, 2, 0}, 0));
}

TEST_CASE("bijectivity over all schemes, shapes, and axes") {
    for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
        check_bijection(LayoutMap::build(scheme, {4, 4, 1}, 2, 1));
        check_bijection(LayoutMap::build(scheme, {5, 3, 4}, 9, 2));
        check_bijection(LayoutMap::build(scheme, {3, 6, 2}, 3, 1));
        check_bijection(LayoutMap::build(scheme, {2, 4, 4}, 5, 0));
        // Thickness 2 leaves an empty interior group.
        check_bijection(LayoutMap::build(scheme, {4, 4, 2}, 9, 2));
    }
}

TEST_CASE("address bounds checking") {
    const LayoutMap m = LayoutMap::build(LayoutScheme::SoA, {4, 4, 4}, 9, 2);
    CHECK_THROWS_AS(m.address({0, 0, -2}, 0), std::out_of_range);
    CHECK_THROWS_AS(m.address({0, 0, 6}, 0), std::out_of_range);
    CHECK_THROWS_AS(m.address({4, 0, 0}, 0), std::out_of_range);
    CHECK_THROWS_AS(m.address({0, 0, 0}, 9), std::out_of_range);
    CHECK_NOTHROW(m.address({0, 0, -1}, 0));
    CHECK_NOTHROW(m.address({3, 3, 4}, 8));
}

TEST_CASE("shape error when the partition axis cannot host two shared slabs") {
    CHECK_THROWS_AS(LayoutMap::build(LayoutScheme::AoS, {4, 4, 1}, 2, 2), std::invalid_argument);
    CHECK_THROWS_AS(LayoutMap::build(LayoutScheme::DisagSoA, {4, 1, 1}, 2, 1),
                    std::invalid_argument);
}

TEST_CASE("group classification along the partition axis") {
    const LayoutMap m = LayoutMap::build(LayoutScheme::DisagSoA, {4, 4, 4}, 9, 2);
    CHECK(m.group_of({0, 0, -1}) == GroupTag::UpperHalo);
    CHECK(m.group_of({0, 0, 0}) == GroupTag::UpperShared);
    CHECK(m.group_of({0, 0, 1}) == GroupTag::Interior);
    CHECK(m.group_of({0, 0, 2}) == GroupTag::Interior);
    CHECK(m.group_of({0, 0, 3}) == GroupTag::LowerShared);
    CHECK(m.group_of({0, 0, 4}) == GroupTag::LowerHalo);
}

TEST_CASE("DisagSoA groups are contiguous and ordered") {
    const Lattice lat = build_lattice(LatticeKind::D2Q9);
    const TransferSets transfer = TransferSets::for_lattice(lat, 1);
    const LayoutMap m = LayoutMap::build(LayoutScheme::DisagSoA, {8, 4, 1}, 9, 1, transfer);

    std::int64_t expected = 0;
    for (int g = 0; g < kGroupCount; ++g) {
        CHECK(m.group_offset(GroupTag(g)) == expected);
        expected += m.group_voxels(GroupTag(g)) * m.cardinality();
    }
    CHECK(expected == m.total_len());

    // Interior addresses start at or beyond the end of the UpperShared region.
    const std::int64_t upper_shared_end =
        m.group_offset(GroupTag::UpperShared) + m.group_voxels(GroupTag::UpperShared) * 9;
    for_each_cell(m, [&](Vec3i v, int c) {
        if (m.group_of(v) == GroupTag::Interior) CHECK(m.address(v, c) >= upper_shared_end);
    });
}

TEST_CASE("DisagSoA: crossing directions occupy one contiguous sub-span per shared group") {
    const Lattice lat = build_lattice(LatticeKind::D2Q9);
    const TransferSets transfer = TransferSets::for_lattice(lat, 1);
    REQUIRE(transfer.up.size() == 3);
    const LayoutMap m = LayoutMap::build(LayoutScheme::DisagSoA, {8, 4, 1}, 9, 1, transfer);

    // The three up-crossing directions of the LowerShared group: one span of
    // 3 * d_x cells.
    auto spans = m.contiguous_spans(GroupTag::LowerShared, transfer.up);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].len == 3 * 8);

    // Same property on the receiving halo side.
    spans = m.contiguous_spans(GroupTag::UpperHalo, transfer.up);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].len == 3 * 8);

    // UpperShared leads with the down-crossing directions instead.
    spans = m.contiguous_spans(GroupTag::UpperShared, transfer.down);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].base == m.group_offset(GroupTag::UpperShared));
}

TEST_CASE("span counts per layout match the transfer accounting") {
    const Lattice lat = build_lattice(LatticeKind::D2Q9);
    const TransferSets transfer = TransferSets::for_lattice(lat, 1);
    const std::vector<int> up = transfer.up;
    std::vector<int> all(9);
    for (int c = 0; c < 9; ++c) all[c] = c;

    // Plain SoA: one span per crossing direction.
    const LayoutMap soa = LayoutMap::build(LayoutScheme::SoA, {8, 4, 1}, 9, 1, transfer);
    CHECK(soa.contiguous_spans(GroupTag::LowerShared, up).size() == 3);

    // AoS: the whole boundary row with all components is a single span.
    const LayoutMap aos = LayoutMap::build(LayoutScheme::AoS, {8, 4, 1}, 9, 1, transfer);
    auto spans = aos.contiguous_spans(GroupTag::LowerShared, all);
    REQUIRE(spans.size() == 1);
    CHECK(spans[0].len == 9 * 8);
}

TEST_CASE("span minimality: consecutive spans never touch") {
    std::mt19937_64 rng(2024);
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);
    for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
        const LayoutMap m = LayoutMap::build(scheme, {4, 3, 5}, 19, 2, transfer);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<int> comps;
            for (int c = 0; c < 19; ++c)
                if (rng() & 1) comps.push_back(c);
            if (comps.empty()) comps.push_back(int(rng() % 19));
            for (int g = 0; g < kGroupCount; ++g) {
                if (m.group_voxels(GroupTag(g)) == 0) continue;
                const auto spans = m.contiguous_spans(GroupTag(g), comps);
                std::int64_t total = 0;
                for (std::size_t s = 0; s < spans.size(); ++s) {
                    CHECK(spans[s].len >= 1);
                    total += spans[s].len;
                    if (s) CHECK(spans[s].base > spans[s - 1].base + spans[s - 1].len);
                }
                CHECK(total == m.group_voxels(GroupTag(g)) * std::int64_t(comps.size()));
            }
        }
    }
}

TEST_CASE("coalescing predicate: fixed-component consecutive addressing") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);
    auto coalesced_within_groups = [&](LayoutScheme scheme) {
        const LayoutMap m = LayoutMap::build(scheme, {6, 5, 4}, 19, 2, transfer);
        for (int g = 0; g < kGroupCount; ++g) {
            if (m.group_voxels(GroupTag(g)) == 0) continue;
            for (int c = 0; c < 19; ++c)
                if (m.contiguous_spans(GroupTag(g), {c}).size() != 1) return false;
        }
        return true;
    };
    CHECK(coalesced_within_groups(LayoutScheme::SoA));
    CHECK(coalesced_within_groups(LayoutScheme::DisagSoA));
    CHECK_FALSE(coalesced_within_groups(LayoutScheme::AoS));
}

TEST_CASE("cross-layout field equivalence") {
    const Lattice lat = build_lattice(LatticeKind::D3Q19);
    const TransferSets transfer = TransferSets::for_lattice(lat, 2);
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);

    // Write a reference field through each layout, read it back, compare.
    std::vector<std::vector<double>> extracted;
    for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
        const LayoutMap m = LayoutMap::build(scheme, {4, 4, 4}, 19, 2, transfer);
        std::vector<double> buffer(std::size_t(m.total_len()));
        std::mt19937_64 gen(99);
        std::vector<double> reference;
        for_each_cell(m, [&](Vec3i v, int c) {
            const double value = std::uniform_real_distribution<double>(-1, 1)(gen);
            buffer[std::size_t(m.address(v, c))] = value;
            reference.push_back(value);
        });
        std::vector<double> readback;
        for_each_cell(m, [&](Vec3i v, int c) {
            readback.push_back(buffer[std::size_t(m.address(v, c))]);
        });
        CHECK(readback == reference);
        extracted.push_back(std::move(readback));
    }
    CHECK(extracted[0] == extracted[1]);
    CHECK(extracted[1] == extracted[2]);
}

TEST_CASE("layout descriptor golden file (DisagSoA, D2Q9, 8 wide)") {
    const Lattice lat = build_lattice(LatticeKind::D2Q9);
    const TransferSets transfer = TransferSets::for_lattice(lat, 1);
    const LayoutMap m = LayoutMap::build(LayoutScheme::DisagSoA, {8, 4, 1}, 9, 1, transfer);
    std::ifstream in(std::string(VOXL_TEST_DATA_DIR) + "/golden/layout_disag_d2q9.json",
                     std::ios::binary);
    REQUIRE(in.good());
    std::stringstream golden;
    golden << in.rdbuf();
    CHECK(m.to_json() == golden.str());
}
