#include "voxl/partition.hpp"

#include <algorithm>
#include <cstring>
#include <sstream>
#include <stdexcept>

namespace voxl {

int Decomposition::upper_neighbor(int p) const {
    if (p > 0) return p - 1;
    return periodic ? num_partitions - 1 : -1;
}

int Decomposition::lower_neighbor(int p) const {
    if (p < num_partitions - 1) return p + 1;
    return periodic ? 0 : -1;
}

Decomposition decompose(Extents domain, int num_partitions, int axis, bool periodic) {
    if (num_partitions < 1) throw std::invalid_argument("decompose: num_partitions must be >= 1");
    if (axis < 0 || axis > 2) throw std::invalid_argument("decompose: axis must be 0, 1, or 2");
    const int extent = domain[axis];
    if (extent < 2 * num_partitions)
        throw std::invalid_argument("decompose: axis extent must be >= 2 per partition");

    Decomposition d;
    d.domain = domain;
    d.num_partitions = num_partitions;
    d.axis = axis;
    d.periodic = periodic;
    const int base = extent / num_partitions;
    const int extra = extent % num_partitions;
    int begin = 0;
    for (int p = 0; p < num_partitions; ++p) {
        const int thick = base + (p < extra ? 1 : 0);
        d.slabs.emplace_back(begin, begin + thick);
        begin += thick;
    }
    return d;
}

std::vector<VoxelClass> classify_voxels(const Decomposition& d, int p) {
    if (p < 0 || p >= d.num_partitions) throw std::out_of_range("classify_voxels: bad partition");
    Extents shape = d.domain;
    const int thick = d.thickness(p);
    shape[d.axis] = thick;
    const bool has_upper = d.upper_neighbor(p) >= 0;
    const bool has_lower = d.lower_neighbor(p) >= 0;

    std::vector<VoxelClass> cls(std::size_t(shape.volume()), VoxelClass::Private);
    Vec3i v;
    for (v.z = 0; v.z < shape.nz; ++v.z)
        for (v.y = 0; v.y < shape.ny; ++v.y)
            for (v.x = 0; v.x < shape.nx; ++v.x) {
                const int k = v[d.axis];
                if ((k == 0 && has_upper) || (k == thick - 1 && has_lower))
                    cls[std::size_t(linear_index(v, shape))] = VoxelClass::Shared;
            }
    return cls;
}

void TransferLedger::append(const TransferRecord& r) {
    if (r.src_span.len != r.dst_span.len || r.elements != r.src_span.len)
        throw std::invalid_argument("ledger: span lengths and element count must agree");
    records_.push_back(r);
}

TransferLedger::StepStats TransferLedger::step_stats(int step) const {
    StepStats s;
    for (const auto& r : records_)
        if (r.step == step) {
            s.alpha += 1;
            s.beta += r.elements;
        }
    return s;
}

TransferLedger::StepStats TransferLedger::partition_send_stats(int step, int partition) const {
    StepStats s;
    for (const auto& r : records_)
        if (r.step == step && r.src == partition) {
            s.alpha += 1;
            s.beta += r.elements;
        }
    return s;
}

std::string TransferLedger::to_csv() const {
    std::ostringstream os;
    os << "step,src,dst,base_src,base_dst,elements\n";
    for (const auto& r : records_)
        os << r.step << "," << r.src << "," << r.dst << "," << r.src_span.base << ","
           << r.dst_span.base << "," << r.elements << "\n";
    return os.str();
}

std::string TraceLog::to_json() const {
    std::ostringstream os;
    os << "[\n";
    for (std::size_t i = 0; i < events_.size(); ++i) {
        const Event& e = events_[i];
        os << "  {\"step\": " << e.step << ", \"stage\": " << e.stage << ", \"phase\": \""
           << e.phase << "\", \"partition\": " << e.partition << "}"
           << (i + 1 < events_.size() ? "," : "") << "\n";
    }
    os << "]\n";
    return os.str();
}

PartitionedField::PartitionedField(const Decomposition& decomp, LayoutScheme scheme,
                                   int cardinality, const TransferSets& transfer)
    : decomp_(decomp), cardinality_(cardinality) {
    for (int p = 0; p < decomp.num_partitions; ++p) {
        Extents shape = decomp.domain;
        shape[decomp.axis] = decomp.thickness(p);
        layouts_.push_back(LayoutMap::build(scheme, shape, cardinality, decomp.axis, transfer));
        buffers_.emplace_back(std::size_t(layouts_.back().total_len()), 0.0);
        links_.emplace_back(decomp.upper_neighbor(p), decomp.lower_neighbor(p));
    }
}

std::vector<double> PartitionedField::to_canonical() const {
    std::vector<double> out(std::size_t(decomp_.domain.volume()) * cardinality_);
    for (int p = 0; p < parts(); ++p) {
        const auto [begin, end] = decomp_.slabs[p];
        Extents shape = decomp_.domain;
        shape[decomp_.axis] = end - begin;
        Vec3i local;
        for (local.z = 0; local.z < shape.nz; ++local.z)
            for (local.y = 0; local.y < shape.ny; ++local.y)
                for (local.x = 0; local.x < shape.nx; ++local.x) {
                    Vec3i global = local;
                    global[decomp_.axis] += begin;
                    const std::int64_t base = linear_index(global, decomp_.domain) * cardinality_;
                    for (int c = 0; c < cardinality_; ++c)
                        out[std::size_t(base + c)] = read(p, local, c);
                }
    }
    return out;
}

void PartitionedField::fill_canonical(const std::vector<double>& values) {
    if (values.size() != std::size_t(decomp_.domain.volume()) * cardinality_)
        throw std::invalid_argument("fill_canonical: size mismatch");
    for (int p = 0; p < parts(); ++p) {
        const auto [begin, end] = decomp_.slabs[p];
        Extents shape = decomp_.domain;
        shape[decomp_.axis] = end - begin;
        Vec3i local;
        for (local.z = 0; local.z < shape.nz; ++local.z)
            for (local.y = 0; local.y < shape.ny; ++local.y)
                for (local.x = 0; local.x < shape.nx; ++local.x) {
                    Vec3i global = local;
                    global[decomp_.axis] += begin;
                    const std::int64_t base = linear_index(global, decomp_.domain) * cardinality_;
                    for (int c = 0; c < cardinality_; ++c)
                        write(p, local, c, values[std::size_t(base + c)]);
                }
    }
}

void halo_update(PartitionedField& field, TransferLedger* ledger, TraceLog* trace, int step) {
    const Decomposition& d = field.decomp();
    for (int p = 0; p < d.num_partitions; ++p) {
        auto [up, low] = field.neighbors(p);
        if (up >= 0 && field.neighbors(up).second != p)
            throw std::runtime_error("halo_update: asymmetric neighbor links");
        if (low >= 0 && field.neighbors(low).first != p)
            throw std::runtime_error("halo_update: asymmetric neighbor links");
    }

    auto copy_spans = [&](int src_p, GroupTag src_group, const std::vector<int>& comps, int dst_p,
                          GroupTag dst_group) {
        const auto src_spans = field.layout(src_p).contiguous_spans(src_group, comps);
        const auto dst_spans = field.layout(dst_p).contiguous_spans(dst_group, comps);
        if (src_spans.size() != dst_spans.size())
            throw std::runtime_error("halo_update: span structure mismatch");
        for (std::size_t i = 0; i < src_spans.size(); ++i) {
            const Span& s = src_spans[i];
            const Span& t = dst_spans[i];
            if (s.len != t.len) throw std::runtime_error("halo_update: span length mismatch");
            std::memcpy(field.data(dst_p) + t.base, field.data(src_p) + s.base,
                        std::size_t(s.len) * sizeof(double));
            if (ledger) ledger->append({step, src_p, dst_p, s, t, s.len});
        }
    };

    // AoS keeps whole voxels contiguous, so a single bulk copy per neighbor
    // necessarily carries every component; SoA and DisagSoA send only the
    // face-crossing set.
    std::vector<int> all_comps(field.cardinality());
    for (int c = 0; c < field.cardinality(); ++c) all_comps[c] = c;

    // Sends ordered by (partition index, upper then lower neighbor).
    for (int p = 0; p < d.num_partitions; ++p) {
        if (trace) trace->append({step, 1, "halo", p});
        auto [up, low] = field.neighbors(p);
        const bool aos = field.layout(p).scheme() == LayoutScheme::AoS;
        const TransferSets& t = field.layout(p).transfer();
        const std::vector<int>& up_comps = aos ? all_comps : t.down;
        const std::vector<int>& low_comps = aos ? all_comps : t.up;
        if (up >= 0) copy_spans(p, GroupTag::UpperShared, up_comps, up, GroupTag::LowerHalo);
        if (low >= 0) copy_spans(p, GroupTag::LowerShared, low_comps, low, GroupTag::UpperHalo);
    }
}

} // namespace voxl
