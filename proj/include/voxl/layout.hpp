#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "voxl/common.hpp"
#include "voxl/lattice.hpp"

namespace voxl {

enum class LayoutScheme { AoS, SoA, DisagSoA };

const char* to_string(LayoutScheme s);
LayoutScheme layout_scheme_from_string(const std::string& name);

/// Voxel groups of a 1D-partitioned slab, in memory order for DisagSoA.
enum class GroupTag : int { UpperHalo = 0, UpperShared = 1, Interior = 2, LowerShared = 3, LowerHalo = 4 };
constexpr int kGroupCount = 5;

const char* to_string(GroupTag g);

/// Contiguous address range [base, base + len).
struct Span {
    std::int64_t base = 0;
    std::int64_t len = 0;
    friend bool operator==(const Span& a, const Span& b) { return a.base == b.base && a.len == b.len; }
};

/// Component sets crossing each partition face. `up` lists the directions
/// needed in the upper halo (positive axis component), `down` those needed in
/// the lower halo. For generic stencil fields both sides carry the full
/// cardinality.
struct TransferSets {
    std::vector<int> up;
    std::vector<int> down;

    static TransferSets all(int cardinality);
    static TransferSets for_lattice(const Lattice& lat, int axis);
};

/// Maps (voxel, component) of one partition, including its two one-deep halo
/// slabs, onto [0, total_len).
///
/// AoS interleaves components per voxel; SoA stores one component plane over
/// the whole extended slab; DisagSoA lays the five groups out contiguously in
/// the order UpperHalo, UpperShared, Interior, LowerShared, LowerHalo and maps
/// each group in SoA order. In the shared and halo groups of DisagSoA the
/// face-crossing components form a contiguous prefix, so one halo message per
/// neighbor covers them with a single copy.
class LayoutMap {
public:
    /// Generic build: crossing sets default to the full cardinality.
    static LayoutMap build(LayoutScheme scheme, Extents owned_shape, int cardinality, int axis);
    static LayoutMap build(LayoutScheme scheme, Extents owned_shape, int cardinality, int axis,
                           const TransferSets& transfer);

    /// Address of (voxel, component). The voxel's axis coordinate may be -1 or
    /// shape[axis] to reach the halo slabs. Throws std::out_of_range otherwise.
    std::int64_t address(Vec3i v, int component) const;

    GroupTag group_of(Vec3i v) const;

    /// Minimal sorted list of maximal contiguous spans covering exactly the
    /// (voxel in group, component in comps) cells.
    std::vector<Span> contiguous_spans(GroupTag group, const std::vector<int>& comps) const;

    LayoutScheme scheme() const { return scheme_; }
    Extents shape() const { return shape_; }
    int cardinality() const { return cardinality_; }
    int axis() const { return axis_; }
    std::int64_t total_len() const { return total_len_; }
    std::int64_t cross_section() const { return cross_section_; }
    const TransferSets& transfer() const { return transfer_; }

    std::int64_t group_offset(GroupTag g) const { return group_offset_[int(g)]; }
    std::int64_t group_voxels(GroupTag g) const { return group_voxels_[int(g)]; }
    /// Axis-coordinate range [begin, end) of the group, in owned coordinates.
    std::pair<int, int> group_slab(GroupTag g) const;
    /// Per-group permutation: component -> slot within the group (DisagSoA);
    /// identity for AoS and SoA.
    const std::vector<int>& component_order(GroupTag g) const { return order_[int(g)]; }

    std::string to_json() const;

private:
    LayoutScheme scheme_ = LayoutScheme::AoS;
    Extents shape_;
    int cardinality_ = 1;
    int axis_ = 0;
    TransferSets transfer_;
    std::int64_t cross_section_ = 0;   // voxels per axis slab
    std::int64_t extended_voxels_ = 0; // (shape[axis] + 2) * cross_section
    std::int64_t total_len_ = 0;
    std::array<std::int64_t, kGroupCount> group_offset_{};
    std::array<std::int64_t, kGroupCount> group_voxels_{};
    std::array<std::vector<int>, kGroupCount> order_;

    std::int64_t extended_linear(Vec3i v) const; // axis slab outermost, others row-major
};

std::string layout_to_json(const LayoutMap& map);

} // namespace voxl
