#include "voxl/lbm.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace voxl {
namespace lbm {

void regularized_reconstruct(const Lattice& lat, int normal_axis, int normal_sign,
                             const double u_bc[3], double* f) {
    if (normal_axis < 0 || normal_axis > 2 || (normal_sign != 1 && normal_sign != -1))
        throw std::invalid_argument("regularized_reconstruct: bad face normal");
    const double u_n = u_bc[normal_axis] * normal_sign;
    if (!(std::abs(1.0 - u_n) > 1e-12))
        throw std::runtime_error("regularized_reconstruct: density closure is singular");

    // Zou/He-style closure: rho from the populations that did not cross the
    // face (e.n == 0) plus twice the ones arriving from the fluid (e.n < 0).
    double sum0 = 0.0, sum_in = 0.0;
    for (int i = 0; i < lat.q; ++i) {
        const int en = lat.velocities[i][normal_axis] * normal_sign;
        if (en == 0) sum0 += f[i];
        else if (en < 0) sum_in += f[i];
    }
    const double rho = (sum0 + 2.0 * sum_in) / (1.0 - u_n);

    double feq[27];
    equilibrium(lat, rho, u_bc, feq);

    // Non-equilibrium part: known populations directly, unknown ones bounced
    // from their opposites.
    double fneq[27];
    for (int i = 0; i < lat.q; ++i) {
        const int en = lat.velocities[i][normal_axis] * normal_sign;
        const int j = (en > 0) ? lat.opposite[i] : i;
        fneq[i] = f[j] - feq[j];
    }

    // Pi = sum_i fneq_i e_i e_i, then f_i = feq_i + w_i 9/2 (Q_i : Pi) with
    // Q_i = e_i e_i - cs2 I.
    double pi[3][3] = {};
    for (int i = 0; i < lat.q; ++i) {
        const Vec3i e = lat.velocities[i];
        const double ev[3] = {double(e.x), double(e.y), double(e.z)};
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) pi[a][b] += fneq[i] * ev[a] * ev[b];
    }
    const double cs2 = 1.0 / 3.0;
    for (int i = 0; i < lat.q; ++i) {
        const Vec3i e = lat.velocities[i];
        const double ev[3] = {double(e.x), double(e.y), double(e.z)};
        double qpi = 0.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                qpi += (ev[a] * ev[b] - (a == b ? cs2 : 0.0)) * pi[a][b];
        f[i] = feq[i] + lat.weights[i] * 4.5 * qpi;
    }
}

BoundaryKind boundary_kind(const FlowRules& rules, Vec3i v) {
    if (rules.has_lid && !rules.periodic[rules.lid_axis] &&
        v[rules.lid_axis] == (rules.lid_at_max ? rules.domain[rules.lid_axis] - 1 : 0))
        return BoundaryKind::MovingLid;
    for (int a = 0; a < 3; ++a) {
        if (rules.periodic[a]) continue;
        if (v[a] == 0 || v[a] == rules.domain[a] - 1) return BoundaryKind::BounceBack;
    }
    return BoundaryKind::None;
}

DenseState make_equilibrium_state(const Lattice& lat, Extents domain, double rho,
                                  const double u[3]) {
    DenseState s(domain, lat.q);
    double feq[27];
    equilibrium(lat, rho, u, feq);
    Vec3i v;
    for (v.z = 0; v.z < domain.nz; ++v.z)
        for (v.y = 0; v.y < domain.ny; ++v.y)
            for (v.x = 0; v.x < domain.nx; ++v.x)
                for (int i = 0; i < lat.q; ++i) s.at(v, i) = feq[i];
    return s;
}

void collide_bgk(const Lattice& lat, double tau, DenseState& state) {
    if (!(tau > 0.5)) throw std::invalid_argument("collide_bgk: tau must be > 0.5");
    const double inv_tau = 1.0 / tau;
    Vec3i v;
    for (v.z = 0; v.z < state.domain.nz; ++v.z)
        for (v.y = 0; v.y < state.domain.ny; ++v.y)
            for (v.x = 0; v.x < state.domain.nx; ++v.x)
                bgk_relax(lat, inv_tau, &state.at(v, 0));
}

void stream(const Lattice& lat, const FlowRules& rules, const DenseState& in, DenseState& out) {
    Vec3i v;
    for (v.z = 0; v.z < in.domain.nz; ++v.z)
        for (v.y = 0; v.y < in.domain.ny; ++v.y)
            for (v.x = 0; v.x < in.domain.nx; ++v.x)
                gather_pull(lat, rules, v, [&](Vec3i s, int c) { return in.at(s, c); },
                            &out.at(v, 0));
}

void fused_stream_collide(const Lattice& lat, const FlowRules& rules, double inv_tau,
                          const DenseState& in, DenseState& out) {
    Vec3i v;
    for (v.z = 0; v.z < in.domain.nz; ++v.z)
        for (v.y = 0; v.y < in.domain.ny; ++v.y)
            for (v.x = 0; v.x < in.domain.nx; ++v.x) {
                double* g = &out.at(v, 0);
                gather_pull(lat, rules, v, [&](Vec3i s, int c) { return in.at(s, c); }, g);
                bgk_relax(lat, inv_tau, g);
            }
}

Diagnostics probe_field(const Lattice& lat, const std::vector<double>& canonical, int step) {
    Diagnostics d;
    const std::size_t q = std::size_t(lat.q);
    const std::size_t voxels = canonical.size() / q;
    double fcell[27];
    for (std::size_t n = 0; n < voxels; ++n) {
        for (std::size_t i = 0; i < q; ++i) {
            const double fi = canonical[n * q + i];
            if (!std::isfinite(fi) || std::abs(fi) > 1e3) {
                std::ostringstream os;
                os << "instability at step " << step << ", voxel " << n << ", population " << i;
                throw std::runtime_error(os.str());
            }
            fcell[i] = fi;
            d.mass += fi;
        }
        double rho, u[3];
        macroscopic(lat, fcell, rho, u);
        const double speed = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
        if (speed > d.max_speed) d.max_speed = speed;
    }
    return d;
}

} // namespace lbm
} // namespace voxl
