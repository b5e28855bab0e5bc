#include "voxl/layout.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace voxl {

const char* to_string(LayoutScheme s) {
    switch (s) {
        case LayoutScheme::AoS: return "AoS";
        case LayoutScheme::SoA: return "SoA";
        case LayoutScheme::DisagSoA: return "DisagSoA";
    }
    return "?";
}

LayoutScheme layout_scheme_from_string(const std::string& name) {
    if (name == "AoS") return LayoutScheme::AoS;
    if (name == "SoA") return LayoutScheme::SoA;
    if (name == "DisagSoA") return LayoutScheme::DisagSoA;
    throw std::invalid_argument("unknown layout scheme: " + name);
}

const char* to_string(GroupTag g) {
    switch (g) {
        case GroupTag::UpperHalo: return "UpperHalo";
        case GroupTag::UpperShared: return "UpperShared";
        case GroupTag::Interior: return "Interior";
        case GroupTag::LowerShared: return "LowerShared";
        case GroupTag::LowerHalo: return "LowerHalo";
    }
    return "?";
}

TransferSets TransferSets::all(int cardinality) {
    TransferSets t;
    t.up.resize(cardinality);
    std::iota(t.up.begin(), t.up.end(), 0);
    t.down = t.up;
    return t;
}

TransferSets TransferSets::for_lattice(const Lattice& lat, int axis) {
    TransferSets t;
    t.up = lat.crossing_directions(axis, +1);
    t.down = lat.crossing_directions(axis, -1);
    return t;
}

namespace {

// Prefix components first (canonical order), remaining components after.
std::vector<int> prefix_order(int cardinality, const std::vector<int>& prefix) {
    std::vector<bool> in_prefix(cardinality, false);
    for (int c : prefix) in_prefix.at(c) = true;
    std::vector<int> slot_of(cardinality, -1);
    int slot = 0;
    for (int c = 0; c < cardinality; ++c)
        if (in_prefix[c]) slot_of[c] = slot++;
    for (int c = 0; c < cardinality; ++c)
        if (!in_prefix[c]) slot_of[c] = slot++;
    return slot_of;
}

} // namespace

LayoutMap LayoutMap::build(LayoutScheme scheme, Extents owned, int cardinality, int axis) {
    return build(scheme, owned, cardinality, axis, TransferSets::all(cardinality));
}

LayoutMap LayoutMap::build(LayoutScheme scheme, Extents owned, int cardinality, int axis,
                           const TransferSets& transfer) {
    if (axis < 0 || axis > 2) throw std::invalid_argument("layout: axis must be 0, 1, or 2");
    if (owned.nx < 1 || owned.ny < 1 || owned.nz < 1)
        throw std::invalid_argument("layout: extents must be >= 1");
    if (cardinality < 1) throw std::invalid_argument("layout: cardinality must be >= 1");
    if (owned[axis] < 2)
        throw std::invalid_argument("layout: partition-axis extent < 2, shared slabs would overlap");

    LayoutMap m;
    m.scheme_ = scheme;
    m.shape_ = owned;
    m.cardinality_ = cardinality;
    m.axis_ = axis;
    m.transfer_ = transfer;
    m.cross_section_ = owned.volume() / owned[axis];
    const int n = owned[axis];
    m.extended_voxels_ = std::int64_t(n + 2) * m.cross_section_;
    m.total_len_ = m.extended_voxels_ * cardinality;

    const std::int64_t s = m.cross_section_;
    m.group_voxels_ = {s, s, std::int64_t(n - 2) * s, s, s};
    std::int64_t off = 0;
    for (int g = 0; g < kGroupCount; ++g) {
        m.group_offset_[g] = off;
        off += m.group_voxels_[g] * cardinality;
    }

    std::vector<int> identity(cardinality);
    std::iota(identity.begin(), identity.end(), 0);
    for (int g = 0; g < kGroupCount; ++g) m.order_[g] = identity;
    if (scheme == LayoutScheme::DisagSoA) {
        // Components that cross a face lead their group so each halo message
        // is one contiguous copy. Upper halo and lower shared hold the
        // up-crossing set; upper shared and lower halo the down-crossing set.
        m.order_[int(GroupTag::UpperHalo)] = prefix_order(cardinality, transfer.up);
        m.order_[int(GroupTag::LowerShared)] = prefix_order(cardinality, transfer.up);
        m.order_[int(GroupTag::UpperShared)] = prefix_order(cardinality, transfer.down);
        m.order_[int(GroupTag::LowerHalo)] = prefix_order(cardinality, transfer.down);
    }
    return m;
}

std::pair<int, int> LayoutMap::group_slab(GroupTag g) const {
    const int n = shape_[axis_];
    switch (g) {
        case GroupTag::UpperHalo: return {-1, 0};
        case GroupTag::UpperShared: return {0, 1};
        case GroupTag::Interior: return {1, n - 1};
        case GroupTag::LowerShared: return {n - 1, n};
        case GroupTag::LowerHalo: return {n, n + 1};
    }
    return {0, 0};
}

GroupTag LayoutMap::group_of(Vec3i v) const {
    const int k = v[axis_];
    const int n = shape_[axis_];
    if (k == -1) return GroupTag::UpperHalo;
    if (k == 0) return GroupTag::UpperShared;
    if (k == n - 1) return GroupTag::LowerShared;
    if (k == n) return GroupTag::LowerHalo;
    return GroupTag::Interior;
}

std::int64_t LayoutMap::extended_linear(Vec3i v) const {
    // Axis slab outermost; remaining axes row-major in ascending axis order.
    std::int64_t cross = 0;
    std::int64_t stride = 1;
    for (int a = 0; a < 3; ++a) {
        if (a == axis_) continue;
        cross += v[a] * stride;
        stride *= shape_[a];
    }
    return std::int64_t(v[axis_] + 1) * cross_section_ + cross;
}

std::int64_t LayoutMap::address(Vec3i v, int component) const {
    const int k = v[axis_];
    bool ok = component >= 0 && component < cardinality_ && k >= -1 && k <= shape_[axis_];
    for (int a = 0; a < 3 && ok; ++a) {
        if (a == axis_) continue;
        ok = v[a] >= 0 && v[a] < shape_[a];
    }
    if (!ok) throw std::out_of_range("layout: voxel or component out of bounds");

    const std::int64_t lin = extended_linear(v);
    switch (scheme_) {
        case LayoutScheme::AoS:
            return lin * cardinality_ + component;
        case LayoutScheme::SoA:
            return std::int64_t(component) * extended_voxels_ + lin;
        case LayoutScheme::DisagSoA: {
            const GroupTag g = group_of(v);
            const int gi = int(g);
            const std::int64_t group_start = std::int64_t(group_slab(g).first + 1) * cross_section_;
            return group_offset_[gi] + std::int64_t(order_[gi][component]) * group_voxels_[gi] +
                   (lin - group_start);
        }
    }
    throw std::logic_error("layout: unreachable");
}

std::vector<Span> LayoutMap::contiguous_spans(GroupTag group, const std::vector<int>& comps) const {
    if (comps.empty()) throw std::invalid_argument("contiguous_spans: empty component set");
    auto [lo, hi] = group_slab(group);
    std::vector<std::int64_t> addrs;
    addrs.reserve(std::size_t((hi - lo) * cross_section_ * std::int64_t(comps.size())));
    for (int k = lo; k < hi; ++k) {
        Vec3i v;
        v[axis_] = k;
        int a0 = (axis_ == 0) ? 1 : 0;
        int a1 = (axis_ == 2) ? 1 : 2;
        for (int j = 0; j < shape_[a1]; ++j)
            for (int i = 0; i < shape_[a0]; ++i) {
                v[a0] = i;
                v[a1] = j;
                for (int c : comps) addrs.push_back(address(v, c));
            }
    }
    std::sort(addrs.begin(), addrs.end());
    std::vector<Span> spans;
    for (std::size_t i = 0; i < addrs.size();) {
        std::size_t j = i + 1;
        while (j < addrs.size() && addrs[j] == addrs[j - 1] + 1) ++j;
        spans.push_back({addrs[i], std::int64_t(j - i)});
        i = j;
    }
    return spans;
}

std::string LayoutMap::to_json() const {
    std::ostringstream os;
    os << "{\n  \"scheme\": \"" << to_string(scheme_) << "\",\n";
    os << "  \"shape\": [" << shape_.nx << ", " << shape_.ny << ", " << shape_.nz << "],\n";
    os << "  \"cardinality\": " << cardinality_ << ",\n";
    os << "  \"axis\": " << axis_ << ",\n";
    os << "  \"halo_depth\": 1,\n";
    os << "  \"total_len\": " << total_len_ << ",\n";
    os << "  \"groups\": [\n";
    std::vector<int> all(cardinality_);
    std::iota(all.begin(), all.end(), 0);
    for (int g = 0; g < kGroupCount; ++g) {
        const GroupTag tag = GroupTag(g);
        os << "    {\"tag\": \"" << to_string(tag) << "\", \"offset\": " << group_offset_[g]
           << ", \"voxels\": " << group_voxels_[g] << ", \"component_order\": [";
        for (int c = 0; c < cardinality_; ++c) os << (c ? ", " : "") << order_[g][c];
        os << "], \"spans\": [";
        if (group_voxels_[g] > 0) {
            auto spans = contiguous_spans(tag, all);
            for (std::size_t i = 0; i < spans.size(); ++i)
                os << (i ? ", " : "") << "[" << spans[i].base << ", " << spans[i].len << "]";
        }
        os << "]}" << (g + 1 < kGroupCount ? "," : "") << "\n";
    }
    os << "  ]\n}\n";
    return os.str();
}

std::string layout_to_json(const LayoutMap& map) { return map.to_json(); }

} // namespace voxl
