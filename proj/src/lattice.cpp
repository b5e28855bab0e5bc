#include "voxl/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace voxl {

const char* to_string(LatticeKind kind) {
    switch (kind) {
        case LatticeKind::D2Q9: return "D2Q9";
        case LatticeKind::D3Q19: return "D3Q19";
        case LatticeKind::D3Q27: return "D3Q27";
    }
    return "?";
}

LatticeKind lattice_kind_from_string(const std::string& name) {
    if (name == "D2Q9") return LatticeKind::D2Q9;
    if (name == "D3Q19") return LatticeKind::D3Q19;
    if (name == "D3Q27") return LatticeKind::D3Q27;
    throw std::invalid_argument("unknown lattice kind: " + name);
}

namespace {

// Weight per squared speed class. Index = |e|^2.
Rational weight_for(LatticeKind kind, int speed2) {
    switch (kind) {
        case LatticeKind::D2Q9:
            if (speed2 == 0) return {4, 9};
            if (speed2 == 1) return {1, 9};
            return {1, 36};
        case LatticeKind::D3Q19:
            if (speed2 == 0) return {1, 3};
            if (speed2 == 1) return {1, 18};
            return {1, 36};
        case LatticeKind::D3Q27:
            if (speed2 == 0) return {8, 27};
            if (speed2 == 1) return {2, 27};
            if (speed2 == 2) return {1, 54};
            return {1, 216};
    }
    return {0, 1};
}

} // namespace

std::vector<int> Lattice::crossing_directions(int axis, int sign) const {
    std::vector<int> out;
    for (int i = 0; i < q; ++i) {
        int c = velocities[i][axis];
        if ((sign > 0 && c > 0) || (sign < 0 && c < 0)) out.push_back(i);
    }
    return out;
}

Lattice build_lattice(LatticeKind kind) {
    Lattice lat;
    lat.kind = kind;
    lat.dim = (kind == LatticeKind::D2Q9) ? 2 : 3;
    const int max_speed2 = (kind == LatticeKind::D3Q19) ? 2 : 3;

    // Enumerate {-1,0,1}^dim, keep |e|^2 within the lattice's speed classes,
    // then sort into the canonical order: speed class ascending, (x,y,z)
    // lexicographic within each class.
    const int zlo = (lat.dim == 3) ? -1 : 0;
    const int zhi = (lat.dim == 3) ? 1 : 0;
    for (int x = -1; x <= 1; ++x)
        for (int y = -1; y <= 1; ++y)
            for (int z = zlo; z <= zhi; ++z) {
                int s2 = x * x + y * y + z * z;
                if (s2 <= max_speed2) lat.velocities.push_back({x, y, z});
            }
    std::sort(lat.velocities.begin(), lat.velocities.end(), [](Vec3i a, Vec3i b) {
        int sa = a.x * a.x + a.y * a.y + a.z * a.z;
        int sb = b.x * b.x + b.y * b.y + b.z * b.z;
        return std::tie(sa, a.x, a.y, a.z) < std::tie(sb, b.x, b.y, b.z);
    });

    lat.q = int(lat.velocities.size());
    lat.weights_exact.reserve(lat.q);
    lat.weights.reserve(lat.q);
    for (const Vec3i& e : lat.velocities) {
        Rational w = weight_for(kind, e.x * e.x + e.y * e.y + e.z * e.z);
        lat.weights_exact.push_back(w);
        lat.weights.push_back(w.value());
    }

    lat.opposite.assign(lat.q, -1);
    for (int i = 0; i < lat.q; ++i) {
        Vec3i neg{-lat.velocities[i].x, -lat.velocities[i].y, -lat.velocities[i].z};
        for (int j = 0; j < lat.q; ++j) {
            if (lat.velocities[j] == neg) {
                lat.opposite[i] = j;
                break;
            }
        }
    }
    return lat;
}

void equilibrium(const Lattice& lat, double rho, const double u[3], double* f_out) {
    if (!std::isfinite(rho) || !std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(u[2]))
        throw std::domain_error("equilibrium: non-finite input");
    const double uu = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    for (int i = 0; i < lat.q; ++i) {
        const Vec3i& e = lat.velocities[i];
        const double eu = e.x * u[0] + e.y * u[1] + e.z * u[2];
        f_out[i] = lat.weights[i] * rho * (1.0 + 3.0 * eu + 4.5 * eu * eu - 1.5 * uu);
    }
}

void macroscopic(const Lattice& lat, const double* f, double& rho, double u[3]) {
    double r = 0.0, mx = 0.0, my = 0.0, mz = 0.0;
    for (int i = 0; i < lat.q; ++i) {
        const Vec3i& e = lat.velocities[i];
        r += f[i];
        mx += f[i] * e.x;
        my += f[i] * e.y;
        mz += f[i] * e.z;
    }
    if (!(r > 0.0)) throw std::runtime_error("macroscopic: non-positive density");
    rho = r;
    u[0] = mx / r;
    u[1] = my / r;
    u[2] = mz / r;
}

void bgk_relax(const Lattice& lat, double inv_tau, double* f) {
    double rho, u[3];
    macroscopic(lat, f, rho, u);
    double feq[27];
    equilibrium(lat, rho, u, feq);
    const double keep = 1.0 - inv_tau;
    for (int i = 0; i < lat.q; ++i) f[i] = keep * f[i] + inv_tau * feq[i];
}

std::string lattice_to_json(const Lattice& lat) {
    std::ostringstream os;
    os << "{\n  \"kind\": \"" << to_string(lat.kind) << "\",\n";
    os << "  \"dim\": " << lat.dim << ",\n  \"q\": " << lat.q << ",\n";
    os << "  \"velocities\": [";
    for (int i = 0; i < lat.q; ++i) {
        const Vec3i& e = lat.velocities[i];
        os << (i ? ", " : "") << "[" << e.x << ", " << e.y << ", " << e.z << "]";
    }
    os << "],\n  \"weights\": [";
    for (int i = 0; i < lat.q; ++i) {
        os << (i ? ", " : "") << "[" << lat.weights_exact[i].num << ", "
           << lat.weights_exact[i].den << "]";
    }
    os << "],\n  \"opposite\": [";
    for (int i = 0; i < lat.q; ++i) os << (i ? ", " : "") << lat.opposite[i];
    os << "]\n}\n";
    return os.str();
}

} // namespace voxl
