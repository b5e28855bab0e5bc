#pragma once

#include <cstdint>
#include <string>

#include "voxl/lattice.hpp"
#include "voxl/layout.hpp"

namespace voxl {

/// Halo-update cost parameters: alpha = transfer operations, beta = elements
/// sent, per interior partition per step.
struct CommParams {
    std::int64_t alpha = 0;
    std::int64_t beta = 0;
    bool coalesced = false;
};

/// Linear link cost model: per-transfer setup time plus element throughput.
struct LinkModel {
    double t_setup = 0.0; // seconds per transfer operation
    double b_com = 1.0;   // bytes per second
};

/// t = alpha * t_setup + beta * elem_size / b_com.
double halo_update_time(const CommParams& params, double elem_size_bytes, const LinkModel& link);

/// Halo-update parameters for an LBM field partitioned along one axis.
/// `cross_section` is the voxel count of one boundary slab (d_x in 2D,
/// d_x*d_y in 3D). The face-crossing direction count is derived from the
/// lattice geometry.
CommParams layout_params(LatticeKind kind, LayoutScheme scheme, std::int64_t cross_section);

/// Marker for a generic radius-1 stencil field of some per-voxel cardinality
/// where whole vectors are exchanged (e.g. a 2-component five-point stencil).
struct GenericField {
    int cardinality = 2;
};

CommParams layout_params(GenericField field, LayoutScheme scheme, std::int64_t cross_section);

/// One overlapped iteration: max(private compute, halo update) + shared compute.
double occ_iteration_time(double t_private, double t_halo, double t_shared);

/// Number of lattice directions with a positive component along `axis`.
int crossing_count(const Lattice& lat, int axis);

/// The vector-field table as CSV: layout,alpha,beta,coalesced with beta in
/// units of boundary-row elements (symbolic "2*dx").
std::string vector_field_table_csv();

/// The LBM table as CSV: lattice,layout,alpha,beta,coalesced with beta in
/// units of s (symbolic, e.g. "10s").
std::string lbm_table_csv();

} // namespace voxl
