#pragma once

#include <cassert>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "voxl/common.hpp"
#include "voxl/layout.hpp"

namespace voxl {

/// Balanced 1D slab decomposition of a domain along one axis.
struct Decomposition {
    Extents domain;
    int num_partitions = 1;
    int axis = 2;
    bool periodic = false; // wrap along the partition axis
    std::vector<std::pair<int, int>> slabs; // [begin, end) per partition

    int thickness(int p) const { return slabs[p].second - slabs[p].first; }
    /// Neighbor toward smaller axis coordinates, or -1 at a non-periodic end.
    int upper_neighbor(int p) const;
    /// Neighbor toward larger axis coordinates, or -1 at a non-periodic end.
    int lower_neighbor(int p) const;
};

/// Splits `domain[axis]` into `num_partitions` balanced slabs (earlier slabs
/// take the remainder). Throws std::invalid_argument if the axis extent is
/// less than 2 voxels per partition.
Decomposition decompose(Extents domain, int num_partitions, int axis, bool periodic = false);

enum class VoxelClass : std::uint8_t { Private = 0, Shared = 1 };

/// Per-voxel classification of partition p's owned voxels, canonical local
/// order. A voxel is Shared when its radius-1 stencil reaches a neighbor
/// partition.
std::vector<VoxelClass> classify_voxels(const Decomposition& decomp, int p);

/// One contiguous copy between two partition buffers.
struct TransferRecord {
    int step = 0;
    int src = 0;
    int dst = 0;
    Span src_span;
    Span dst_span;
    std::int64_t elements = 0;
};

/// Append-only record of all halo-update copies.
class TransferLedger {
public:
    void append(const TransferRecord& r);
    const std::vector<TransferRecord>& records() const { return records_; }

    struct StepStats {
        std::int64_t alpha = 0;
        std::int64_t beta = 0;
    };
    /// (alpha, beta) over every record of a step.
    StepStats step_stats(int step) const;
    /// (alpha, beta) over the records a partition sent in a step.
    StepStats partition_send_stats(int step, int partition) const;

    /// CSV with header step,src,dst,base_src,base_dst,elements.
    std::string to_csv() const;

private:
    std::vector<TransferRecord> records_;
};

/// Ordered execution trace of the two-phase OCC schedule. Stage 1 holds the
/// halo update and private-voxel compute (logically concurrent); stage 2 the
/// shared-voxel compute that depends on the halo.
class TraceLog {
public:
    struct Event {
        int step = 0;
        int stage = 0; // 1 = private/halo phase, 2 = shared phase
        std::string phase; // "halo", "private", "shared"
        int partition = 0;
    };
    void append(Event e) { events_.push_back(std::move(e)); }
    const std::vector<Event>& events() const { return events_; }
    std::string to_json() const;

private:
    std::vector<Event> events_;
};

/// Per-partition buffers addressed through a LayoutMap, plus symmetric
/// neighbor links. All partitions live in one process; a halo update is a
/// buffer-to-buffer copy.
class PartitionedField {
public:
    PartitionedField(const Decomposition& decomp, LayoutScheme scheme, int cardinality,
                     const TransferSets& transfer);

    const Decomposition& decomp() const { return decomp_; }
    int parts() const { return decomp_.num_partitions; }
    int cardinality() const { return cardinality_; }
    const LayoutMap& layout(int p) const { return layouts_[p]; }
    double* data(int p) { return buffers_[p].data(); }
    const double* data(int p) const { return buffers_[p].data(); }

    double read(int p, Vec3i local, int c) const { return buffers_[p][layouts_[p].address(local, c)]; }
    void write(int p, Vec3i local, int c, double v) { buffers_[p][layouts_[p].address(local, c)] = v; }

    std::pair<int, int> neighbors(int p) const { return links_[p]; }
    /// Fault-injection hook used by tests; normal construction derives links
    /// from the decomposition.
    void set_neighbor_links(int p, int upper, int lower) { links_[p] = {upper, lower}; }

    /// Owned voxels of all partitions in canonical domain order, component
    /// innermost.
    std::vector<double> to_canonical() const;
    void fill_canonical(const std::vector<double>& values);

private:
    Decomposition decomp_;
    int cardinality_ = 1;
    std::vector<LayoutMap> layouts_;
    std::vector<std::vector<double>> buffers_;
    std::vector<std::pair<int, int>> links_; // (upper, lower) per partition
};

/// Refreshes every halo slab from its neighbor's shared slab, appending one
/// ledger record per contiguous copy, ordered by (partition, upper-then-lower).
/// Throws std::runtime_error on asymmetric neighbor links.
void halo_update(PartitionedField& field, TransferLedger* ledger, TraceLog* trace, int step);

/// Read access for kernels: global-coordinate reads resolved through the
/// partition's layout, halos included. In debug builds enforces the radius-1
/// stencil contract around the anchor voxel.
class PartView {
public:
    PartView(const PartitionedField& f, int p)
        : field_(&f), p_(p), slab_begin_(f.decomp().slabs[p].first), axis_(f.decomp().axis),
          domain_(f.decomp().domain) {}

    void anchor(Vec3i global) { anchor_ = global; }

    double operator()(Vec3i global, int c) const {
#ifndef NDEBUG
        for (int a = 0; a < 3; ++a) {
            int d = global[a] - anchor_[a];
            if (d < 0) d = -d;
            // Wrapped reads in periodic runs appear as distance extent-1.
            if (d > 1 && domain_[a] - d > 1)
                throw std::runtime_error(
                    "kernel contract violation: read outside radius-1 neighborhood");
        }
#endif
        Vec3i local = global;
        local[axis_] -= slab_begin_;
        return field_->read(p_, local, c);
    }

private:
    const PartitionedField* field_;
    int p_;
    int slab_begin_;
    int axis_;
    Extents domain_;
    Vec3i anchor_{};
};

/// One OCC step: stage 1 runs the halo update on `current` and the kernel over
/// private voxels; stage 2 runs the kernel over shared voxels. The kernel maps
/// (view, global voxel) to the voxel's new component values:
///   kernel(const PartView&, Vec3i global, double* out)
template <class Kernel>
void step_occ(PartitionedField& current, PartitionedField& next, Kernel&& kernel,
              TransferLedger* ledger, TraceLog* trace, int step) {
    const Decomposition& d = current.decomp();
    const int axis = d.axis;
    const int card = current.cardinality();
    std::vector<double> out(card);

    halo_update(current, ledger, trace, step);

    auto sweep = [&](int p, bool shared_pass) {
        const auto [begin, end] = d.slabs[p];
        const bool has_upper = current.neighbors(p).first >= 0;
        const bool has_lower = current.neighbors(p).second >= 0;
        PartView view(current, p);
        Extents shape = d.domain;
        shape[axis] = end - begin;
        Vec3i local;
        for (local.z = 0; local.z < shape.nz; ++local.z)
            for (local.y = 0; local.y < shape.ny; ++local.y)
                for (local.x = 0; local.x < shape.nx; ++local.x) {
                    const int k = local[axis];
                    const bool shared = (k == 0 && has_upper) || (k == shape[axis] - 1 && has_lower);
                    if (shared != shared_pass) continue;
                    Vec3i global = local;
                    global[axis] += begin;
                    view.anchor(global);
                    kernel(view, global, out.data());
                    Vec3i loc = local;
                    for (int c = 0; c < card; ++c) next.write(p, loc, c, out[c]);
                }
    };

    for (int p = 0; p < d.num_partitions; ++p) {
        if (trace) trace->append({step, 1, "private", p});
        sweep(p, false);
    }
    for (int p = 0; p < d.num_partitions; ++p) {
        if (trace) trace->append({step, 2, "shared", p});
        sweep(p, true);
    }
}

} // namespace voxl
