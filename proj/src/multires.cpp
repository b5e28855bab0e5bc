#include "voxl/multires.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace voxl {
namespace mres {

namespace {

// Box neighborhood offsets in fixed scan order; 2D keeps dz = 0.
std::vector<Vec3i> box_offsets(int dim) {
    std::vector<Vec3i> out;
    const int zlo = dim == 3 ? -1 : 0, zhi = dim == 3 ? 1 : 0;
    for (int dz = zlo; dz <= zhi; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx)
                if (dx || dy || dz) out.push_back({dx, dy, dz});
    return out;
}

std::uint64_t pull_key(Vec3i voxel, int direction) {
    // 14 bits per (biased) coordinate plus the direction; collision-free for
    // level domains below 8192 cells per axis.
    constexpr std::uint64_t bias = 1u << 13;
    return ((std::uint64_t(voxel.x) + bias) << 45) | ((std::uint64_t(voxel.y) + bias) << 31) |
           ((std::uint64_t(voxel.z) + bias) << 17) | std::uint64_t(direction);
}

} // namespace

std::vector<Vec3i> MultiResGrid::children_of(Vec3i v) const {
    std::vector<Vec3i> out;
    const int zhi = dim_ == 3 ? 1 : 0;
    for (int dz = 0; dz <= zhi; ++dz)
        for (int dy = 0; dy <= 1; ++dy)
            for (int dx = 0; dx <= 1; ++dx)
                out.push_back({2 * v.x + dx, 2 * v.y + dy, dim_ == 3 ? 2 * v.z + dz : v.z});
    return out;
}

int MultiResGrid::ghost_slot(int l, Vec3i cell) const {
    auto it = ghost_index_[l].find(pack_coord(cell));
    return it == ghost_index_[l].end() ? -1 : it->second;
}

int MultiResGrid::pull_slot(int l, Vec3i voxel, int direction) const {
    auto it = pull_index_[l].find(pull_key(voxel, direction));
    return it == pull_index_[l].end() ? -1 : it->second;
}

MultiResGrid MultiResGrid::build(Extents virtual_domain, int num_levels, const Lattice& lat,
                                 const std::vector<int>& level_of_cell, double tau_coarsest) {
    const int dim = lat.dim;
    if (num_levels < 1 || num_levels > 4)
        throw std::invalid_argument("multires: 1 to 4 levels supported");
    if (dim == 2 && virtual_domain.nz != 1)
        throw std::invalid_argument("multires: 2D grids must have nz == 1");
    if (level_of_cell.size() != std::size_t(virtual_domain.volume()))
        throw std::invalid_argument("multires: level map size mismatch");
    const int top_scale = 1 << (num_levels - 1);
    if (virtual_domain.nx % top_scale || virtual_domain.ny % top_scale ||
        (dim == 3 && virtual_domain.nz % top_scale))
        throw std::invalid_argument("multires: domain extents must divide the coarsest cell size");

    MultiResGrid g;
    g.virtual_domain_ = virtual_domain;
    g.dim_ = dim;
    g.levels_.resize(num_levels);
    g.ghosts_.resize(num_levels);
    g.ghost_index_.resize(num_levels);
    g.pulls_.resize(num_levels);
    g.pull_index_.resize(num_levels);

    // No level skipping across any face or corner of the virtual grid.
    const auto offsets = box_offsets(dim);
    Vec3i fc;
    for (fc.z = 0; fc.z < virtual_domain.nz; ++fc.z)
        for (fc.y = 0; fc.y < virtual_domain.ny; ++fc.y)
            for (fc.x = 0; fc.x < virtual_domain.nx; ++fc.x) {
                const int l = level_of_cell[std::size_t(linear_index(fc, virtual_domain))];
                if (l < 0 || l >= num_levels)
                    throw std::invalid_argument("multires: level id out of range");
                for (const Vec3i& d : offsets) {
                    const Vec3i n = fc + d;
                    if (!virtual_domain.contains(n)) continue;
                    const int ln = level_of_cell[std::size_t(linear_index(n, virtual_domain))];
                    if (std::abs(ln - l) > 1)
                        throw std::invalid_argument("multires: resolution jump skips a level");
                }
            }

    // Active cells per level, validating alignment of each region to its
    // level's cell size.
    std::vector<std::vector<Vec3i>> active_cells(num_levels);
    for (int l = 0; l < num_levels; ++l) {
        const int scale = 1 << l;
        Extents dom{virtual_domain.nx / scale, virtual_domain.ny / scale,
                    dim == 3 ? virtual_domain.nz / scale : virtual_domain.nz};
        g.levels_[l].domain = dom;
        Vec3i c;
        for (c.z = 0; c.z < dom.nz; ++c.z)
            for (c.y = 0; c.y < dom.ny; ++c.y)
                for (c.x = 0; c.x < dom.nx; ++c.x) {
                    int count_l = 0, count_total = 0;
                    const int zspan = dim == 3 ? scale : 1;
                    for (int dz = 0; dz < zspan; ++dz)
                        for (int dy = 0; dy < scale; ++dy)
                            for (int dx = 0; dx < scale; ++dx) {
                                const Vec3i f{c.x * scale + dx, c.y * scale + dy,
                                              dim == 3 ? c.z * scale + dz : c.z};
                                ++count_total;
                                if (level_of_cell[std::size_t(linear_index(f, virtual_domain))] == l)
                                    ++count_l;
                            }
                    if (count_l == count_total) {
                        active_cells[l].push_back(c);
                        g.levels_[l].active.insert(pack_coord(c));
                    } else if (count_l != 0) {
                        throw std::invalid_argument(
                            "multires: level region not aligned to its cell size");
                    }
                }
        if (active_cells[l].empty())
            throw std::invalid_argument("multires: every level must have active cells");
        g.levels_[l].blocks = sparse::BlockSparseGrid::build(active_cells[l], 4);
    }

    // Relaxation times: tau_fine = 2 tau_coarse - 1/2 walking down the stack.
    g.levels_[num_levels - 1].tau = tau_coarsest;
    for (int l = num_levels - 2; l >= 0; --l)
        g.levels_[l].tau = 2.0 * g.levels_[l + 1].tau - 0.5;

    // Coverage relations between adjacent levels.
    for (int l = 0; l < num_levels; ++l) {
        if (l > 0)
            for (const Vec3i& c : active_cells[l - 1])
                g.levels_[l].refined.insert(pack_coord(g.parent_of(c)));
        if (l + 1 < num_levels)
            for (const Vec3i& c : active_cells[l]) {
                if (g.levels_[l + 1].active.count(pack_coord(g.parent_of(c))))
                    throw std::invalid_argument("multires: levels overlap in space");
            }
    }
    for (int l = 0; l + 1 < num_levels; ++l) {
        Vec3i c;
        const Extents dom = g.levels_[l].domain;
        for (c.z = 0; c.z < dom.nz; ++c.z)
            for (c.y = 0; c.y < dom.ny; ++c.y)
                for (c.x = 0; c.x < dom.nx; ++c.x)
                    if (g.levels_[l + 1].active.count(pack_coord(g.parent_of(c))))
                        g.levels_[l].under_coarse.insert(pack_coord(c));
    }

    // Transition metadata: one-deep ghost ring (fine side) and the coalesced
    // pulls (coarse side), in deterministic block/mask scan order.
    for (int l = 0; l + 1 < num_levels; ++l) {
        for (const Vec3i& x : g.levels_[l].blocks.active_voxels()) {
            for (const Vec3i& d : offsets) {
                const Vec3i y = x + d;
                if (!g.levels_[l].domain.contains(y)) continue;
                const std::uint64_t key = pack_coord(y);
                if (g.levels_[l].active.count(key)) continue;
                if (g.levels_[l].under_coarse.count(key)) {
                    if (g.ghost_index_[l].count(key)) continue;
                    g.ghost_index_[l][key] = int(g.ghosts_[l].size());
                    g.ghosts_[l].push_back({y, g.parent_of(y)});
                } else if (!g.levels_[l].refined.count(key)) {
                    throw std::invalid_argument("multires: active region has an uncovered neighbor");
                }
            }
        }
    }
    for (int l = 1; l < num_levels; ++l) {
        for (const Vec3i& x : g.levels_[l].blocks.active_voxels()) {
            for (int i = 0; i < lat.q; ++i) {
                const Vec3i src = x - lat.velocities[i];
                if (!g.levels_[l].domain.contains(src)) continue;
                const std::uint64_t key = pack_coord(src);
                if (g.levels_[l].active.count(key) || !g.levels_[l].refined.count(key)) continue;
                for (const Vec3i& ch : g.children_of(src))
                    if (!g.levels_[l - 1].active.count(pack_coord(ch)))
                        throw std::invalid_argument("multires: refined cell with inactive children");
                g.pull_index_[l][pull_key(x, i)] = int(g.pulls_[l].size());
                g.pulls_[l].push_back({x, i, src});
            }
        }
    }
    return g;
}

namespace {

bool crosses_level(const MultiResGrid& g, int l, Vec3i v) {
    static thread_local std::vector<Vec3i> offs2 = box_offsets(2);
    static thread_local std::vector<Vec3i> offs3 = box_offsets(3);
    const auto& offsets = g.dim() == 3 ? offs3 : offs2;
    const auto& level = g.level(l);
    for (const Vec3i& d : offsets) {
        const Vec3i y = v + d;
        if (!level.domain.contains(y)) continue;
        const std::uint64_t key = pack_coord(y);
        if (level.active.count(key)) continue;
        if (level.refined.count(key) || level.under_coarse.count(key)) return true;
    }
    return false;
}

} // namespace

int jump_distance(const MultiResGrid& grid, int l, Vec3i voxel) {
    if (!grid.active(l, voxel)) throw std::invalid_argument("jump_distance: inactive voxel");
    int best = kNoJump;
    for (const Vec3i& v : grid.level(l).blocks.active_voxels()) {
        if (!crosses_level(grid, l, v)) continue;
        const int d = std::max({std::abs(v.x - voxel.x), std::abs(v.y - voxel.y),
                                std::abs(v.z - voxel.z)});
        best = std::min(best, d);
    }
    return best;
}

FusionResult classify_fusion(const MultiResGrid& grid) {
    FusionResult r;
    r.block_class.resize(grid.num_levels());
    r.distance0.resize(grid.num_levels());
    for (int l = 0; l < grid.num_levels(); ++l) {
        const auto& blocks = grid.level(l).blocks;
        r.block_class[l].assign(blocks.num_blocks(), FusionClass::Uniform);
        for (int b = 0; b < blocks.num_blocks(); ++b) {
            const sparse::Block& blk = blocks.blocks()[b];
            const int edge = blocks.edge();
            for (int local = 0; local < blocks.block_volume(); ++local) {
                if (!((blk.mask >> local) & 1)) continue;
                const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                              blk.origin.z + local / (edge * edge)};
                if (crosses_level(grid, l, v)) {
                    r.block_class[l][b] = FusionClass::Jump;
                    r.distance0[l].push_back(v);
                }
            }
        }
    }
    return r;
}

std::int64_t FusionResult::uniform_blocks(int l) const {
    std::int64_t n = 0;
    for (FusionClass c : block_class[l])
        if (c == FusionClass::Uniform) ++n;
    return n;
}

std::int64_t FusionResult::jump_blocks(int l) const {
    return std::int64_t(block_class[l].size()) - uniform_blocks(l);
}

std::int64_t FusionResult::total_uniform_blocks() const {
    std::int64_t n = 0;
    for (std::size_t l = 0; l < block_class.size(); ++l) n += uniform_blocks(int(l));
    return n;
}

const char* to_string(Op op) {
    switch (op) {
        case Op::Collide: return "Collide";
        case Op::Stream: return "Stream";
        case Op::FusedCollideStream: return "FusedCollideStream";
        case Op::Explosion: return "Explosion";
        case Op::Coalescence: return "Coalescence";
    }
    return "?";
}

const char* to_string(NodeGroup g) {
    switch (g) {
        case NodeGroup::All: return "all";
        case NodeGroup::Uniform: return "uniform";
        case NodeGroup::Jump: return "jump";
        case NodeGroup::Transition: return "transition";
    }
    return "?";
}

std::vector<int> ExecutionGraph::topological_order() const {
    std::vector<int> indegree(nodes.size(), 0);
    for (const auto& [from, to] : edges) indegree[to]++;
    std::vector<int> order;
    std::vector<int> ready;
    for (int i = 0; i < int(nodes.size()); ++i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        const int n = ready.back();
        ready.pop_back();
        order.push_back(n);
        for (const auto& [from, to] : edges)
            if (from == n && --indegree[to] == 0) ready.push_back(to);
    }
    if (order.size() != nodes.size())
        throw std::runtime_error("execution graph has a cycle");
    return order;
}

std::string ExecutionGraph::to_dot() const {
    std::ostringstream os;
    os << "digraph execution {\n";
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const ExecNode& n = nodes[i];
        os << "  n" << i << " [label=\"L" << n.level << " " << to_string(n.op) << " ("
           << to_string(n.group) << ")";
        if (n.blocks > 0) os << " x" << n.blocks;
        os << "\"];\n";
    }
    for (const auto& [from, to] : edges) os << "  n" << from << " -> n" << to << ";\n";
    os << "}\n";
    return os.str();
}

ExecutionGraph build_execution_graph(const MultiResGrid& grid, const FusionResult& fusion,
                                     bool fused) {
    ExecutionGraph g;
    g.fused = fused;
    const int levels = grid.num_levels();
    std::vector<int> collide_node(levels, -1), stream_node(levels, -1);

    for (int l = 0; l < levels; ++l) {
        const std::int64_t total = grid.level(l).blocks.num_blocks();
        if (!fused) {
            collide_node[l] = int(g.nodes.size());
            g.nodes.push_back({l, NodeGroup::All, Op::Collide, total});
            stream_node[l] = int(g.nodes.size());
            g.nodes.push_back({l, NodeGroup::All, Op::Stream, total});
            g.edges.emplace_back(collide_node[l], stream_node[l]);
        } else {
            const std::int64_t uniform = fusion.uniform_blocks(l);
            const std::int64_t jump = fusion.jump_blocks(l);
            if (uniform > 0)
                g.nodes.push_back({l, NodeGroup::Uniform, Op::FusedCollideStream, uniform});
            if (jump > 0) {
                collide_node[l] = int(g.nodes.size());
                g.nodes.push_back({l, NodeGroup::Jump, Op::Collide, jump});
                stream_node[l] = int(g.nodes.size());
                g.nodes.push_back({l, NodeGroup::Jump, Op::Stream, jump});
                g.edges.emplace_back(collide_node[l], stream_node[l]);
            }
        }
    }
    // Transition operators between adjacent levels; explosion feeds the finer
    // stream, coalescence feeds the coarser stream.
    for (int l = 1; l < levels; ++l) {
        const int explosion = int(g.nodes.size());
        g.nodes.push_back({l - 1, NodeGroup::Transition, Op::Explosion, 0});
        const int coalescence = int(g.nodes.size());
        g.nodes.push_back({l, NodeGroup::Transition, Op::Coalescence, 0});
        if (collide_node[l] >= 0) g.edges.emplace_back(collide_node[l], explosion);
        if (stream_node[l - 1] >= 0) {
            g.edges.emplace_back(explosion, stream_node[l - 1]);
            g.edges.emplace_back(stream_node[l - 1], coalescence);
        }
        if (stream_node[l] >= 0) g.edges.emplace_back(coalescence, stream_node[l]);
    }
    return g;
}

MultiResLbm::MultiResLbm(const Lattice& lat, MultiResGrid grid, lbm::FlowRules virtual_rules,
                         bool fused)
    : lat_(lat), grid_(std::move(grid)), virtual_rules_(virtual_rules), fused_(fused),
      fusion_(classify_fusion(grid_)), graph_(build_execution_graph(grid_, fusion_, fused)) {
    for (int l = 0; l < grid_.num_levels(); ++l) {
        cur_.emplace_back(grid_.level(l).blocks, lat_.q);
        nxt_.emplace_back(grid_.level(l).blocks, lat_.q);
        post_.emplace_back(grid_.level(l).blocks, lat_.q);
        if (!(grid_.level(l).tau > 0.5))
            throw std::invalid_argument("multires: derived tau must stay > 0.5");
        inv_tau_.push_back(1.0 / grid_.level(l).tau);
        ghost_vals_.emplace_back(grid_.ghosts(l).size() * std::size_t(lat_.q), 0.0);
        coalesced_vals_.emplace_back(grid_.pulls(l).size() * std::size_t(lat_.q), 0.0);
    }
    const double u0[3] = {0.0, 0.0, 0.0};
    set_uniform_equilibrium(1.0, u0);
}

void MultiResLbm::set_uniform_equilibrium(double rho, const double u[3]) {
    double feq[27];
    equilibrium(lat_, rho, u, feq);
    for (int l = 0; l < grid_.num_levels(); ++l) {
        const auto& blocks = grid_.level(l).blocks;
        for (int b = 0; b < blocks.num_blocks(); ++b)
            for (int local = 0; local < blocks.block_volume(); ++local)
                for (int i = 0; i < lat_.q; ++i) cur_[l].at(b, local, i) = feq[i];
    }
}

void MultiResLbm::set_state(int l, const std::function<void(Vec3i, double*)>& fn) {
    const auto& blocks = grid_.level(l).blocks;
    const int edge = blocks.edge();
    double vals[27];
    for (int b = 0; b < blocks.num_blocks(); ++b) {
        const sparse::Block& blk = blocks.blocks()[b];
        for (int local = 0; local < blocks.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            fn(v, vals);
            for (int i = 0; i < lat_.q; ++i) cur_[l].at(b, local, i) = vals[i];
        }
    }
}

namespace {

std::pair<int, int> locate(const sparse::BlockSparseGrid& blocks, Vec3i v) {
    const int edge = blocks.edge();
    const Vec3i bc{v.x / edge - (v.x % edge < 0 ? 1 : 0), v.y / edge - (v.y % edge < 0 ? 1 : 0),
                   v.z / edge - (v.z % edge < 0 ? 1 : 0)};
    const int b = blocks.find_block(bc);
    if (b < 0) throw std::runtime_error("multires structure error: missing block");
    const int local = blocks.local_index(v);
    if (!((blocks.blocks()[b].mask >> local) & 1))
        throw std::runtime_error("multires structure error: inactive cell");
    return {b, local};
}

} // namespace

double MultiResLbm::read(int l, Vec3i v, int i) const {
    const auto [b, local] = locate(grid_.level(l).blocks, v);
    return cur_[l].at(b, local, i);
}

double MultiResLbm::post_collision(int l, int b, int local, int i) const {
    if (!fused_ || block_is_jump(l, b)) return post_[l].at(b, local, i);
    // Uniform blocks have no materialized post-collision state in fused mode;
    // recompute it from the pre-collision values, which is bitwise identical.
    double f[27];
    for (int k = 0; k < lat_.q; ++k) f[k] = cur_[l].at(b, local, k);
    bgk_relax(lat_, inv_tau_[l], f);
    return f[i];
}

void MultiResLbm::collide_level(int l) {
    const auto& blocks = grid_.level(l).blocks;
    double f[27];
    for (int b = 0; b < blocks.num_blocks(); ++b) {
        if (fused_ && !block_is_jump(l, b)) continue;
        const sparse::Block& blk = blocks.blocks()[b];
        for (int local = 0; local < blocks.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            for (int i = 0; i < lat_.q; ++i) f[i] = cur_[l].at(b, local, i);
            bgk_relax(lat_, inv_tau_[l], f);
            for (int i = 0; i < lat_.q; ++i) post_[l].at(b, local, i) = f[i];
        }
    }
}

void MultiResLbm::explode(int coarse_level) {
    const int fine = coarse_level - 1;
    const auto& blocks = grid_.level(coarse_level).blocks;
    const auto& ghosts = grid_.ghosts(fine);
    for (std::size_t gi = 0; gi < ghosts.size(); ++gi) {
        const auto [b, local] = locate(blocks, ghosts[gi].parent);
        for (int i = 0; i < lat_.q; ++i)
            ghost_vals_[fine][gi * lat_.q + i] = post_collision(coarse_level, b, local, i);
    }
}

void MultiResLbm::coalesce(int coarse_level) {
    const int fine = coarse_level - 1;
    const auto& fine_blocks = grid_.level(fine).blocks;
    const auto& pulls = grid_.pulls(coarse_level);
    const double scale = 1.0 / grid_.children_per_cell();
    for (std::size_t pi = 0; pi < pulls.size(); ++pi) {
        const int i = pulls[pi].direction;
        double sum = 0.0;
        for (const Vec3i& ch : grid_.children_of(pulls[pi].refined)) {
            const auto [b, local] = locate(fine_blocks, ch);
            sum += cur_[fine].at(b, local, i);
        }
        coalesced_vals_[coarse_level][pi * lat_.q + i] = sum * scale;
    }
}

void MultiResLbm::stream_voxel(int l, int b, int local, Vec3i v) {
    const auto& level = grid_.level(l);
    const lbm::FlowRules& r = virtual_rules_;
    double own_post[27];
    bool own_loaded = false;
    double g[27];
    for (int i = 0; i < lat_.q; ++i) {
        const Vec3i src = v - lat_.velocities[i];
        bool oob = false, lid = false;
        for (int a = 0; a < 3; ++a) {
            if (src[a] >= 0 && src[a] < level.domain[a]) continue;
            oob = true;
            if (r.has_lid && a == r.lid_axis && (r.lid_at_max ? src[a] >= level.domain[a] : src[a] < 0))
                lid = true;
        }
        if (oob) {
            if (!own_loaded) {
                for (int k = 0; k < lat_.q; ++k)
                    own_post[k] = post_collision(l, b, local, k);
                own_loaded = true;
            }
            double val = own_post[lat_.opposite[i]];
            if (lid) {
                const Vec3i e = lat_.velocities[i];
                const double eu = e.x * r.lid_u[0] + e.y * r.lid_u[1] + e.z * r.lid_u[2];
                val += 2.0 * lat_.weights[i] * lbm::kRho0 * 3.0 * eu;
            }
            g[i] = val;
            continue;
        }
        const std::uint64_t key = pack_coord(src);
        if (level.active.count(key)) {
            const auto [sb, slocal] = locate(level.blocks, src);
            g[i] = post_collision(l, sb, slocal, i);
        } else {
            const int gs = grid_.ghost_slot(l, src);
            if (gs >= 0) {
                g[i] = ghost_vals_[l][std::size_t(gs) * lat_.q + i];
            } else {
                const int ps = grid_.pull_slot(l, v, i);
                if (ps < 0) throw std::runtime_error("multires structure error: uncovered pull");
                g[i] = coalesced_vals_[l][std::size_t(ps) * lat_.q + i];
            }
        }
    }
    for (int i = 0; i < lat_.q; ++i) nxt_[l].at(b, local, i) = g[i];
}

void MultiResLbm::stream_level(int l) {
    const auto& blocks = grid_.level(l).blocks;
    const int edge = blocks.edge();
    for (int b = 0; b < blocks.num_blocks(); ++b) {
        if (fused_ && !block_is_jump(l, b)) continue;
        const sparse::Block& blk = blocks.blocks()[b];
        for (int local = 0; local < blocks.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            stream_voxel(l, b, local, v);
        }
    }
}

void MultiResLbm::fused_level(int l) {
    const auto& blocks = grid_.level(l).blocks;
    const int edge = blocks.edge();
    for (int b = 0; b < blocks.num_blocks(); ++b) {
        if (block_is_jump(l, b)) continue;
        const sparse::Block& blk = blocks.blocks()[b];
        for (int local = 0; local < blocks.block_volume(); ++local) {
            if (!((blk.mask >> local) & 1)) continue;
            const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                          blk.origin.z + local / (edge * edge)};
            stream_voxel(l, b, local, v);
        }
    }
}

void MultiResLbm::advance(int l) {
    collide_level(l);
    if (l > 0) {
        explode(l);
        advance(l - 1);
        advance(l - 1);
        coalesce(l);
    }
    if (fused_) fused_level(l);
    stream_level(l);
    std::swap(cur_[l], nxt_[l]);
}

void MultiResLbm::coarse_step() { advance(grid_.num_levels() - 1); }

std::vector<double> MultiResLbm::canonical_state() const {
    std::vector<double> out;
    for (int l = 0; l < grid_.num_levels(); ++l) {
        const auto& blocks = grid_.level(l).blocks;
        std::vector<std::pair<std::uint64_t, std::pair<int, int>>> order;
        const int edge = blocks.edge();
        for (int b = 0; b < blocks.num_blocks(); ++b) {
            const sparse::Block& blk = blocks.blocks()[b];
            for (int local = 0; local < blocks.block_volume(); ++local) {
                if (!((blk.mask >> local) & 1)) continue;
                const Vec3i v{blk.origin.x + local % edge, blk.origin.y + (local / edge) % edge,
                              blk.origin.z + local / (edge * edge)};
                order.emplace_back(pack_coord(v), std::make_pair(b, local));
            }
        }
        std::sort(order.begin(), order.end());
        for (const auto& [key, loc] : order)
            for (int i = 0; i < lat_.q; ++i) out.push_back(cur_[l].at(loc.first, loc.second, i));
    }
    return out;
}

double MultiResLbm::total_mass() const {
    double mass = 0.0;
    for (int l = 0; l < grid_.num_levels(); ++l) {
        const double volume = std::pow(double(grid_.children_per_cell()), l);
        const auto& blocks = grid_.level(l).blocks;
        double level_sum = 0.0;
        for (int b = 0; b < blocks.num_blocks(); ++b) {
            const sparse::Block& blk = blocks.blocks()[b];
            for (int local = 0; local < blocks.block_volume(); ++local) {
                if (!((blk.mask >> local) & 1)) continue;
                for (int i = 0; i < lat_.q; ++i) level_sum += cur_[l].at(b, local, i);
            }
        }
        mass += level_sum * volume;
    }
    return mass;
}

std::string MultiResLbm::distribution_report() const {
    std::ostringstream os;
    const double total = double(grid_.virtual_domain().volume());
    for (int l = 0; l < grid_.num_levels(); ++l) {
        if (l) os << ", ";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g",
                      100.0 * double(grid_.level(l).blocks.num_active()) / total);
        os << buf;
    }
    return os.str();
}

} // namespace mres
} // namespace voxl
