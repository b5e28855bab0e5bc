#include "voxl/commodel.hpp"

#include <sstream>
#include <stdexcept>

namespace voxl {

double halo_update_time(const CommParams& params, double elem_size_bytes, const LinkModel& link) {
    if (link.b_com <= 0.0) throw std::invalid_argument("halo_update_time: b_com must be > 0");
    if (link.t_setup < 0.0) throw std::invalid_argument("halo_update_time: t_setup must be >= 0");
    return double(params.alpha) * link.t_setup +
           double(params.beta) * elem_size_bytes / link.b_com;
}

int crossing_count(const Lattice& lat, int axis) {
    return int(lat.crossing_directions(axis, +1).size());
}

CommParams layout_params(LatticeKind kind, LayoutScheme scheme, std::int64_t s) {
    if (s < 1) throw std::invalid_argument("layout_params: cross_section must be >= 1");
    const Lattice lat = build_lattice(kind);
    const int axis = (lat.dim == 2) ? 1 : 2;
    const std::int64_t c = crossing_count(lat, axis);
    switch (scheme) {
        case LayoutScheme::AoS: return {2, 2 * lat.q * s, false};
        case LayoutScheme::SoA: return {2 * c, 2 * c * s, true};
        case LayoutScheme::DisagSoA: return {2, 2 * c * s, true};
    }
    throw std::logic_error("layout_params: unreachable");
}

CommParams layout_params(GenericField field, LayoutScheme scheme, std::int64_t s) {
    if (s < 1) throw std::invalid_argument("layout_params: cross_section must be >= 1");
    if (field.cardinality < 1) throw std::invalid_argument("layout_params: cardinality must be >= 1");
    const std::int64_t card = field.cardinality;
    switch (scheme) {
        case LayoutScheme::AoS: return {2, card * s, false};
        case LayoutScheme::SoA: return {2 * card, card * s, true};
        case LayoutScheme::DisagSoA: return {2, card * s, true};
    }
    throw std::logic_error("layout_params: unreachable");
}

double occ_iteration_time(double t_private, double t_halo, double t_shared) {
    if (t_private < 0.0 || t_halo < 0.0 || t_shared < 0.0)
        throw std::invalid_argument("occ_iteration_time: times must be >= 0");
    return (t_private > t_halo ? t_private : t_halo) + t_shared;
}

std::string vector_field_table_csv() {
    std::ostringstream os;
    os << "layout,alpha,beta,coalesced\n";
    const GenericField field{2};
    for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
        CommParams p = layout_params(field, scheme, 1);
        os << to_string(scheme) << "," << p.alpha << "," << p.beta << "*dx,"
           << (p.coalesced ? "yes" : "no") << "\n";
    }
    return os.str();
}

std::string lbm_table_csv() {
    std::ostringstream os;
    os << "lattice,layout,alpha,beta,coalesced\n";
    for (LatticeKind kind : {LatticeKind::D2Q9, LatticeKind::D3Q19, LatticeKind::D3Q27}) {
        for (LayoutScheme scheme : {LayoutScheme::AoS, LayoutScheme::SoA, LayoutScheme::DisagSoA}) {
            CommParams p = layout_params(kind, scheme, 1);
            os << to_string(kind) << "," << to_string(scheme) << "," << p.alpha << "," << p.beta
               << "s," << (p.coalesced ? "yes" : "no") << "\n";
        }
    }
    return os.str();
}

} // namespace voxl
