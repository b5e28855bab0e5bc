#include "voxl/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>

namespace voxl {
namespace sparse {

namespace {

Vec3i block_coord_of(Vec3i voxel, int edge) {
    auto div_floor = [edge](int a) { return (a >= 0) ? a / edge : -((-a + edge - 1) / edge); };
    return {div_floor(voxel.x), div_floor(voxel.y), div_floor(voxel.z)};
}

} // namespace

BlockSparseGrid BlockSparseGrid::build(const std::vector<Vec3i>& active_voxels, int block_edge) {
    if (block_edge < 1 || block_edge > 4)
        throw std::invalid_argument("block sparse: edge must be in [1, 4] (64-bit mask)");
    if (active_voxels.empty()) throw std::invalid_argument("block sparse: empty active set");

    BlockSparseGrid g;
    g.edge_ = block_edge;
    std::unordered_map<std::uint64_t, std::uint64_t> masks; // packed block coord -> mask
    for (const Vec3i& v : active_voxels) {
        const Vec3i bc = block_coord_of(v, block_edge);
        const int local = ((v.z - bc.z * block_edge) * block_edge + (v.y - bc.y * block_edge)) *
                              block_edge +
                          (v.x - bc.x * block_edge);
        masks[pack_coord(bc)] |= std::uint64_t(1) << local;
    }

    std::vector<std::uint64_t> keys;
    keys.reserve(masks.size());
    for (const auto& [key, mask] : masks) keys.push_back(key);
    std::sort(keys.begin(), keys.end(), [](std::uint64_t a, std::uint64_t b) {
        const Vec3i va = unpack_coord(a), vb = unpack_coord(b);
        return std::tie(va.z, va.y, va.x) < std::tie(vb.z, vb.y, vb.x);
    });

    for (std::uint64_t key : keys) {
        const Vec3i bc = unpack_coord(key);
        Block blk;
        blk.origin = {bc.x * block_edge, bc.y * block_edge, bc.z * block_edge};
        blk.mask = masks[key];
        blk.offset = std::int64_t(g.blocks_.size());
        g.index_[key] = int(g.blocks_.size());
        g.blocks_.push_back(blk);
#if defined(__GNUC__)
        g.num_active_ += __builtin_popcountll(blk.mask);
#else
        for (std::uint64_t m = blk.mask; m; m &= m - 1) ++g.num_active_;
#endif
    }
    return g;
}

int BlockSparseGrid::find_block(Vec3i block_coord) const {
    auto it = index_.find(pack_coord(block_coord));
    return it == index_.end() ? -1 : it->second;
}

bool BlockSparseGrid::is_active(Vec3i voxel) const {
    const int b = find_block(block_coord_of(voxel, edge_));
    if (b < 0) return false;
    return (blocks_[b].mask >> local_index(voxel)) & 1;
}

void BlockSparseGrid::permute_blocks(const std::vector<int>& permutation) {
    if (permutation.size() != blocks_.size())
        throw std::invalid_argument("permute_blocks: size mismatch");
    std::vector<Block> reordered;
    reordered.reserve(blocks_.size());
    for (int old_pos : permutation) reordered.push_back(blocks_[old_pos]);
    blocks_ = std::move(reordered);
    index_.clear();
    for (int i = 0; i < int(blocks_.size()); ++i) {
        blocks_[i].offset = i;
        index_[pack_coord(block_coord_of(blocks_[i].origin, edge_))] = i;
    }
}

std::vector<Vec3i> BlockSparseGrid::active_voxels() const {
    std::vector<Vec3i> out;
    out.reserve(std::size_t(num_active_));
    for (const Block& blk : blocks_)
        for (int local = 0; local < block_volume(); ++local)
            if ((blk.mask >> local) & 1) {
                const int lx = local % edge_;
                const int ly = (local / edge_) % edge_;
                const int lz = local / (edge_ * edge_);
                out.push_back({blk.origin.x + lx, blk.origin.y + ly, blk.origin.z + lz});
            }
    return out;
}

void BlockField::permute_blocks(const std::vector<int>& permutation) {
    std::vector<double> reordered(data_.size());
    const std::size_t stride = std::size_t(block_volume_) * cardinality_;
    for (std::size_t i = 0; i < permutation.size(); ++i)
        std::copy_n(data_.begin() + std::size_t(permutation[i]) * stride, stride,
                    reordered.begin() + i * stride);
    data_ = std::move(reordered);
}

ClassifyResult classify_blocks(const BlockSparseGrid& grid,
                               const std::function<bool(Vec3i)>& boundary_pred) {
    ClassifyResult r;
    r.classes.reserve(grid.num_blocks());
    const int edge = grid.edge();
    for (const Block& blk : grid.blocks()) {
        bool boundary = false;
        for (int local = 0; local < grid.block_volume() && !boundary; ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            boundary = boundary_pred(v);
        }
        r.classes.push_back(boundary ? BlockClass::Boundary : BlockClass::NonBoundary);
        (boundary ? r.n_boundary : r.n_non_boundary) += 1;
    }
    return r;
}

const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::Naive: return "naive";
        case Strategy::DisagBitmask: return "disag_bitmask";
        case Strategy::DisagMem: return "disag_mem";
    }
    return "?";
}

Strategy strategy_from_string(const std::string& name) {
    if (name == "naive") return Strategy::Naive;
    if (name == "disag_bitmask") return Strategy::DisagBitmask;
    if (name == "disag_mem") return Strategy::DisagMem;
    throw std::invalid_argument("unknown sparse strategy: " + name);
}

Arrangement arrange(Strategy strategy, BlockSparseGrid& grid, std::vector<BlockField*> fields,
                    ClassifyResult& classes, const std::function<bool(Vec3i)>& boundary_pred) {
    Arrangement a;
    a.strategy = strategy;
    a.permutation.resize(grid.num_blocks());
    for (int i = 0; i < grid.num_blocks(); ++i) a.permutation[i] = i;

    if (strategy == Strategy::DisagMem) {
        // Stable partition: boundary blocks first, original order within each
        // group.
        std::stable_sort(a.permutation.begin(), a.permutation.end(), [&](int x, int y) {
            return int(classes.classes[x]) > int(classes.classes[y]);
        });
        grid.permute_blocks(a.permutation);
        for (BlockField* f : fields) f->permute_blocks(a.permutation);
        std::vector<BlockClass> cls;
        cls.reserve(classes.classes.size());
        for (int old_pos : a.permutation) cls.push_back(classes.classes[old_pos]);
        classes.classes = std::move(cls);
    } else if (strategy == Strategy::DisagBitmask) {
        a.boundary_bitmask.resize(grid.num_blocks());
        for (int b = 0; b < grid.num_blocks(); ++b)
            a.boundary_bitmask[b] = classes.classes[b] == BlockClass::Boundary ? 1 : 0;
        // Indirect index: compact ids assigned by prefix sum over the
        // boundary-voxel mask in block-list, local-index order.
        a.voxel_meta_index.assign(std::size_t(grid.num_blocks()) * grid.block_volume(), -1);
        const int edge = grid.edge();
        std::int32_t next_id = 0;
        for (int b = 0; b < grid.num_blocks(); ++b) {
            const Block& blk = grid.blocks()[b];
            for (int local = 0; local < grid.block_volume(); ++local) {
                if (!((blk.mask >> local) & 1)) continue;
                const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                              blk.origin.z + local / (edge * edge)};
                if (boundary_pred(v))
                    a.voxel_meta_index[std::size_t(b) * grid.block_volume() + local] = next_id++;
            }
        }
        a.boundary_voxel_count = next_id;
    }
    return a;
}

std::string DispatchPlan::to_json() const {
    std::ostringstream os;
    os << "{\"strategy\": \"" << to_string(strategy) << "\", \"kernels\": [";
    for (std::size_t i = 0; i < kernels.size(); ++i)
        os << (i ? ", " : "") << "{\"name\": \"" << kernels[i].name
           << "\", \"blocks\": " << kernels[i].blocks_covered
           << ", \"cost\": " << kernels[i].cost_r << "}";
    os << "], \"extra_storage_bytes\": " << extra_storage_bytes << ", \"indexing\": \""
       << (indexing == Indexing::Direct ? "direct" : "indirect") << "\"}";
    return os.str();
}

DispatchPlan dispatch_plan(Strategy strategy, std::int64_t n_b, std::int64_t n_nb, int q,
                           int block_size, int s_w, int s_i, bool naive_full_domain_storage) {
    if (n_b < 0 || n_nb < 0) throw std::invalid_argument("dispatch_plan: negative block counts");
    const std::int64_t r_b = 3 * std::int64_t(q);
    const std::int64_t r_nb = 2 * std::int64_t(q);
    DispatchPlan p;
    p.strategy = strategy;
    switch (strategy) {
        case Strategy::Naive:
            p.kernels = {{"combined", n_b + n_nb, r_b}};
            p.extra_storage_bytes =
                std::int64_t(s_w) * (naive_full_domain_storage ? n_b + n_nb : n_nb) * block_size;
            p.indexing = Indexing::Direct;
            break;
        case Strategy::DisagBitmask:
            p.kernels = {{"boundary", n_b + n_nb, r_b}, {"non_boundary", n_b + n_nb, r_nb}};
            p.extra_storage_bytes = std::int64_t(s_i) * (n_b + n_nb) * block_size;
            p.indexing = Indexing::Indirect;
            break;
        case Strategy::DisagMem:
            p.kernels = {{"boundary", n_b, r_b}, {"non_boundary", n_nb, r_nb}};
            p.extra_storage_bytes = 0;
            p.indexing = Indexing::Direct;
            break;
    }
    return p;
}

SparseScenario SparseScenario::wind_tunnel(Extents domain, double tau,
                                           std::array<double, 3> u_bc) {
    SparseScenario s;
    s.domain = domain;
    s.tau = tau;
    s.u_bc = u_bc;
    s.normal_axis = 0;
    const int nx = domain.nx;
    s.regularized = [nx](Vec3i v) { return v.x == 0 || v.x == nx - 1; };
    s.normal_sign = [nx](Vec3i v) { return v.x == 0 ? 1 : -1; };
    return s;
}

std::string ExecutionReport::to_json() const {
    std::ostringstream os;
    os << "{\"strategy\": \"" << to_string(strategy) << "\", \"kernels\": [";
    for (std::size_t i = 0; i < kernels.size(); ++i)
        os << (i ? ", " : "") << "{\"name\": \"" << kernels[i].name
           << "\", \"blocks\": " << kernels[i].blocks_covered
           << ", \"cost\": " << kernels[i].cost_r << "}";
    os << "], \"extra_storage_bytes\": " << extra_storage_bytes << ", \"indexing\": \""
       << (indexing == Indexing::Direct ? "direct" : "indirect")
       << "\", \"peak_cost\": " << peak_cost << "}";
    return os.str();
}

SparseLbmEngine::SparseLbmEngine(const Lattice& lat, SparseScenario scenario,
                                 const std::vector<Vec3i>& active_voxels, int block_edge,
                                 Strategy strategy)
    : lat_(lat), scenario_(std::move(scenario)), strategy_(strategy),
      grid_(BlockSparseGrid::build(active_voxels, block_edge)),
      classes_(classify_blocks(grid_, scenario_.regularized)), arrangement_(), plan_(),
      cur_(grid_, lat.q), nxt_(grid_, lat.q), inv_tau_(1.0 / scenario_.tau) {
    if (!(scenario_.tau > 0.5)) throw std::invalid_argument("sparse engine: tau must be > 0.5");
    std::vector<BlockField*> fields{&cur_, &nxt_};
    arrangement_ = arrange(strategy, grid_, fields, classes_, scenario_.regularized);

    const int s_w = int(sizeof(double)) * (lat_.dim);
    const int s_i = int(sizeof(std::int32_t));
    plan_ = dispatch_plan(strategy, classes_.n_boundary, classes_.n_non_boundary, lat_.q,
                          grid_.block_volume(), s_w, s_i);

    // Boundary metadata realization. Naive keeps an inline per-slot velocity
    // table, the bitmask strategy routes through the indirect index into a
    // compact buffer, and the memory-grouped strategy derives the value from
    // the face geometry with no storage at all.
    const int edge = grid_.edge();
    if (strategy == Strategy::Naive) {
        naive_meta_.assign(std::size_t(grid_.num_blocks()) * grid_.block_volume() * 3, 0.0);
        for (int b = 0; b < grid_.num_blocks(); ++b) {
            const Block& blk = grid_.blocks()[b];
            for (int local = 0; local < grid_.block_volume(); ++local) {
                if (!((blk.mask >> local) & 1)) continue;
                const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                              blk.origin.z + local / (edge * edge)};
                if (scenario_.regularized(v)) {
                    const std::size_t base = (std::size_t(b) * grid_.block_volume() + local) * 3;
                    for (int d = 0; d < 3; ++d) naive_meta_[base + d] = scenario_.u_bc[d];
                }
            }
        }
    } else if (strategy == Strategy::DisagBitmask) {
        compact_meta_.assign(std::size_t(arrangement_.boundary_voxel_count) * 3, 0.0);
        for (std::size_t slot = 0; slot < arrangement_.voxel_meta_index.size(); ++slot) {
            const std::int32_t id = arrangement_.voxel_meta_index[slot];
            if (id >= 0)
                for (int d = 0; d < 3; ++d) compact_meta_[std::size_t(id) * 3 + d] = scenario_.u_bc[d];
        }
    }

    // Start from rest equilibrium.
    double feq[27];
    const double u0[3] = {0.0, 0.0, 0.0};
    equilibrium(lat_, 1.0, u0, feq);
    for (int b = 0; b < grid_.num_blocks(); ++b)
        for (int local = 0; local < grid_.block_volume(); ++local)
            for (int i = 0; i < lat_.q; ++i) cur_.at(b, local, i) = feq[i];
}

const double* SparseLbmEngine::prescribed_velocity(int b, int local) const {
    switch (strategy_) {
        case Strategy::Naive:
            return &naive_meta_[(std::size_t(b) * grid_.block_volume() + local) * 3];
        case Strategy::DisagBitmask: {
            const std::int32_t id =
                arrangement_.voxel_meta_index[std::size_t(b) * grid_.block_volume() + local];
            return &compact_meta_[std::size_t(id) * 3];
        }
        case Strategy::DisagMem:
            return scenario_.u_bc.data();
    }
    return nullptr;
}

void SparseLbmEngine::update_voxel(Vec3i v, int b, int local, bool boundary_kernel) {
    double g[27];
    const int edge = grid_.edge();
    for (int i = 0; i < lat_.q; ++i) {
        const Vec3i src = v - lat_.velocities[i];
        bool solid = !scenario_.domain.contains(src);
        int sb = -1, slocal = 0;
        if (!solid) {
            const Vec3i bc{src.x / edge - (src.x % edge < 0 ? 1 : 0),
                           src.y / edge - (src.y % edge < 0 ? 1 : 0),
                           src.z / edge - (src.z % edge < 0 ? 1 : 0)};
            sb = grid_.find_block(bc);
            if (sb < 0) {
                solid = true;
            } else {
                slocal = grid_.local_index(src);
                if (!((grid_.blocks()[sb].mask >> slocal) & 1)) solid = true;
            }
        }
        if (solid) {
            // Bounce off the wall or obstacle surface.
            g[i] = cur_.at(b, local, lat_.opposite[i]);
        } else {
            g[i] = cur_.at(sb, slocal, i);
        }
    }
    if (boundary_kernel && scenario_.regularized(v)) {
        const double* u = prescribed_velocity(b, local);
        lbm::regularized_reconstruct(lat_, scenario_.normal_axis, scenario_.normal_sign(v), u, g);
    }
#ifndef NDEBUG
    if (!boundary_kernel && scenario_.regularized(v))
        throw std::runtime_error("sparse engine: boundary voxel reached non-boundary kernel");
#endif
    bgk_relax(lat_, inv_tau_, g);
    for (int i = 0; i < lat_.q; ++i) nxt_.at(b, local, i) = g[i];
}

void SparseLbmEngine::sweep(bool boundary_kernel, bool identity) {
    const int edge = grid_.edge();
    for (int b = 0; b < grid_.num_blocks(); ++b) {
        // Kernel-to-block dispatch per strategy.
        if (strategy_ == Strategy::DisagBitmask) {
            const bool is_boundary = arrangement_.boundary_bitmask[b] != 0;
            if (is_boundary != boundary_kernel) continue; // swept but skipped
        } else if (strategy_ == Strategy::DisagMem) {
            const bool is_boundary = classes_.classes[b] == BlockClass::Boundary;
            if (is_boundary != boundary_kernel) continue;
        }
        const Block& blk = grid_.blocks()[b];
        for (int local = 0; local < grid_.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            if (identity) {
                for (int i = 0; i < lat_.q; ++i) nxt_.at(b, local, i) = cur_.at(b, local, i);
            } else {
                const bool voxel_boundary_path =
                    (strategy_ == Strategy::Naive) ? true : boundary_kernel;
                update_voxel(v, b, local, voxel_boundary_path);
            }
        }
    }
}

void SparseLbmEngine::step() {
    if (strategy_ == Strategy::Naive) {
        sweep(true, false);
    } else {
        sweep(true, false);
        sweep(false, false);
    }
    std::swap(cur_, nxt_);
}

void SparseLbmEngine::step_identity() {
    if (strategy_ == Strategy::Naive) {
        sweep(true, true);
    } else {
        sweep(true, true);
        sweep(false, true);
    }
    std::swap(cur_, nxt_);
}

ExecutionReport SparseLbmEngine::report() const {
    ExecutionReport r;
    r.strategy = strategy_;
    r.kernels = plan_.kernels;
    r.extra_storage_bytes = plan_.extra_storage_bytes;
    r.indexing = plan_.indexing;
    for (const KernelPlan& k : plan_.kernels) r.peak_cost = std::max(r.peak_cost, k.cost_r);
    return r;
}

std::vector<double> SparseLbmEngine::canonical_state() const {
    std::vector<std::pair<std::uint64_t, int>> order; // packed coord, (block, local)
    std::vector<std::pair<int, int>> where;
    const int edge = grid_.edge();
    for (int b = 0; b < grid_.num_blocks(); ++b) {
        const Block& blk = grid_.blocks()[b];
        for (int local = 0; local < grid_.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            order.emplace_back(pack_coord(v), int(where.size()));
            where.emplace_back(b, local);
        }
    }
    std::sort(order.begin(), order.end());
    std::vector<double> out;
    out.reserve(order.size() * std::size_t(lat_.q));
    for (const auto& [key, idx] : order) {
        const auto [b, local] = where[idx];
        for (int i = 0; i < lat_.q; ++i) out.push_back(cur_.at(b, local, i));
    }
    return out;
}

void SparseLbmEngine::set_state(const std::function<void(Vec3i, double*)>& init) {
    const int edge = grid_.edge();
    double vals[27];
    for (int b = 0; b < grid_.num_blocks(); ++b) {
        const Block& blk = grid_.blocks()[b];
        for (int local = 0; local < grid_.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            init(v, vals);
            for (int i = 0; i < lat_.q; ++i) cur_.at(b, local, i) = vals[i];
        }
    }
}

} // namespace sparse
} // namespace voxl
