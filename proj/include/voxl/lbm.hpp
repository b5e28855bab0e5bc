#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "voxl/common.hpp"
#include "voxl/lattice.hpp"
#include "voxl/partition.hpp"

namespace voxl {
namespace lbm {

/// Reference density used in the moving-wall momentum correction.
inline constexpr double kRho0 = 1.0;

/// Domain-level flow rules for dense grids: per-axis periodicity, solid walls
/// on non-periodic faces, and an optional moving lid on one face.
///
/// `wrap` selects the axes the gather wraps arithmetically. A single dense
/// grid wraps every periodic axis; a partitioned field leaves the partition
/// axis unwrapped because its halos already carry the wrapped neighbor data.
struct FlowRules {
    Extents domain;
    std::array<bool, 3> periodic{false, false, false};
    std::array<bool, 3> wrap{false, false, false};
    bool has_lid = false;
    int lid_axis = 2;
    bool lid_at_max = true;
    std::array<double, 3> lid_u{0.0, 0.0, 0.0};
};

/// Pulls the q populations streaming into voxel `v` from the previous
/// post-collision state. Off-domain pulls on non-periodic faces resolve to
/// halfway bounce-back off the voxel's own populations; pulls crossing the lid
/// face add the moving-wall momentum term 2 w_i rho0 (e_i . u_lid) / cs2.
///
/// `read(src, i)` must return population i of in-domain voxel `src` (for
/// partitioned fields the partition axis may extend one slab into the halo).
template <class Reader>
inline void gather_pull(const Lattice& lat, const FlowRules& r, Vec3i v, Reader&& read,
                        double* g) {
    for (int i = 0; i < lat.q; ++i) {
        Vec3i src = v - lat.velocities[i];
        bool oob = false;
        bool lid = false;
        for (int a = 0; a < 3; ++a) {
            if (src[a] >= 0 && src[a] < r.domain[a]) continue;
            if (r.wrap[a]) {
                src[a] = (src[a] + r.domain[a]) % r.domain[a];
            } else if (r.periodic[a]) {
                // Periodic but not wrapped here: the halo slab already carries
                // the wrapped neighbor data, so the coordinate passes through.
            } else {
                oob = true;
                if (r.has_lid && a == r.lid_axis &&
                    (r.lid_at_max ? src[a] >= r.domain[a] : src[a] < 0))
                    lid = true;
            }
        }
        if (!oob) {
            g[i] = read(src, i);
        } else {
            double val = read(v, lat.opposite[i]);
            if (lid) {
                const Vec3i e = lat.velocities[i];
                const double eu =
                    e.x * r.lid_u[0] + e.y * r.lid_u[1] + e.z * r.lid_u[2];
                val += 2.0 * lat.weights[i] * kRho0 * 3.0 * eu;
            }
            g[i] = val;
        }
    }
}

/// Reconstructs a face voxel's populations from a prescribed velocity: a
/// Zou/He-style density closure over the known populations, then equilibrium
/// plus the regularized projection of the non-equilibrium stress. The face's
/// inward normal is +/- one axis. Touches 3Q population slots: Q known values,
/// Q equilibrium values, Q reconstructed writes.
void regularized_reconstruct(const Lattice& lat, int normal_axis, int normal_sign,
                             const double u_bc[3], double* f);

/// Per-voxel boundary condition. Bounce-back touches 2Q population slots
/// (Q reads, Q writes); the regularized reconstruction touches 3Q.
enum class BoundaryKind : std::uint8_t { None, BounceBack, Regularized, MovingLid };

/// Classifies a fluid voxel of a dense domain: MovingLid when it touches the
/// lid face, BounceBack when it touches any other solid wall, None in the
/// interior (periodic faces are not boundaries).
BoundaryKind boundary_kind(const FlowRules& rules, Vec3i v);

/// Plain dense population state in canonical order (voxel-major, component
/// innermost). Used by the naive-dense reference solver and the unit tests.
struct DenseState {
    Extents domain;
    int q = 0;
    std::vector<double> f;

    DenseState() = default;
    DenseState(Extents d, int q_) : domain(d), q(q_), f(std::size_t(d.volume()) * q_, 0.0) {}
    double& at(Vec3i v, int i) { return f[std::size_t(linear_index(v, domain)) * q + i]; }
    double at(Vec3i v, int i) const { return f[std::size_t(linear_index(v, domain)) * q + i]; }
};

/// State with every voxel at equilibrium(rho, u).
DenseState make_equilibrium_state(const Lattice& lat, Extents domain, double rho,
                                  const double u[3]);

/// BGK collision over every voxel, in place.
void collide_bgk(const Lattice& lat, double tau, DenseState& state);

/// Pull streaming: out(v, i) = in(v - e_i, i), with wall rules from `rules`.
void stream(const Lattice& lat, const FlowRules& rules, const DenseState& in, DenseState& out);

/// One fused traversal: gather then collide, bitwise-equal to stream() followed
/// by collide_bgk().
void fused_stream_collide(const Lattice& lat, const FlowRules& rules, double inv_tau,
                          const DenseState& in, DenseState& out);

/// Kernel for the partitioned OCC engine; same gather and relaxation as the
/// dense reference, read through a partition view.
struct GatherKernel {
    const Lattice* lat = nullptr;
    FlowRules rules;
    double inv_tau = 1.0;

    template <class View>
    void operator()(const View& view, Vec3i v, double* out) const {
        gather_pull(*lat, rules, v, [&](Vec3i s, int c) { return view(s, c); }, out);
        bgk_relax(*lat, inv_tau, out);
    }
};

/// Total mass and max |u| of a canonical population field; throws
/// std::runtime_error with the step index when a population exceeds the
/// stability bound.
struct Diagnostics {
    double mass = 0.0;
    double max_speed = 0.0;
};
Diagnostics probe_field(const Lattice& lat, const std::vector<double>& canonical, int step);

} // namespace lbm
} // namespace voxl
