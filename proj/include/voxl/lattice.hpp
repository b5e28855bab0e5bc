#pragma once

#include <string>
#include <vector>

#include "voxl/common.hpp"

namespace voxl {

enum class LatticeKind { D2Q9, D3Q19, D3Q27 };

const char* to_string(LatticeKind kind);
LatticeKind lattice_kind_from_string(const std::string& name);

/// Exact weight as a fraction; converted once to double at construction.
struct Rational {
    long long num = 0;
    long long den = 1;
    double value() const { return double(num) / double(den); }
};

/// Velocity-set descriptor for one of the supported lattices.
///
/// Directions follow a fixed canonical order: the rest direction first, then
/// unit (axis) directions, then diagonals grouped by squared speed, each class
/// sorted lexicographically by (x, y, z). Every layout, ledger, and dump in
/// the project indexes populations by this order.
struct Lattice {
    LatticeKind kind;
    int dim = 0;                    // 2 or 3
    int q = 0;                      // number of directions
    std::vector<Vec3i> velocities;  // e_i, z component 0 in 2D
    std::vector<double> weights;    // w_i as doubles
    std::vector<Rational> weights_exact;
    std::vector<int> opposite;      // opposite[i] = index of -e_i
    double cs2 = 1.0 / 3.0;         // lattice speed of sound squared

    /// Directions with a nonzero axis component of the given sign (+1 or -1).
    /// These are the populations that cross a partition face along that axis.
    std::vector<int> crossing_directions(int axis, int sign) const;
};

/// Builds the descriptor for a lattice kind. Total over the enum.
Lattice build_lattice(LatticeKind kind);

/// f_i^eq = w_i rho (1 + 3 e.u + 4.5 (e.u)^2 - 1.5 u.u). Writes q values.
/// Throws std::domain_error on non-finite inputs.
void equilibrium(const Lattice& lat, double rho, const double u[3], double* f_out);

/// Recovers rho = sum f_i and u = sum f_i e_i / rho.
/// Throws std::runtime_error if the density is not positive.
void macroscopic(const Lattice& lat, const double* f, double& rho, double u[3]);

/// Per-voxel BGK relaxation: f <- (1 - 1/tau) f + (1/tau) f_eq(rho, u).
/// The (1-w)f + w*feq form makes tau = 1 yield f = f_eq exactly.
void bgk_relax(const Lattice& lat, double inv_tau, double* f);

/// Descriptor as a JSON document (kind, velocities, exact weights, opposite).
std::string lattice_to_json(const Lattice& lat);

} // namespace voxl
