#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "voxl/common.hpp"
#include "voxl/lattice.hpp"
#include "voxl/lbm.hpp"
#include "voxl/sparse.hpp"

namespace voxl {
namespace mres {

/// Sentinel jump distance for levels with no resolution interface.
inline constexpr int kNoJump = std::numeric_limits<int>::max();

/// Stack of block-sparse levels, index 0 = finest, refinement factor 2
/// between adjacent levels. Active regions of the levels are disjoint and
/// jointly cover the virtual finest domain; resolution jumps are single-level.
class MultiResGrid {
public:
    struct Level {
        Extents domain;                        // extents in level coordinates
        sparse::BlockSparseGrid blocks;        // activity structure, edge-4 blocks
        std::unordered_set<std::uint64_t> active;
        std::unordered_set<std::uint64_t> refined;       // cells covered by the finer level
        std::unordered_set<std::uint64_t> under_coarse;  // cells whose parent is active
        double tau = 0.6;
    };

    /// Fine cell just outside the active region whose parent is active; it
    /// receives the parent's post-collision populations at explosion time.
    struct Ghost {
        Vec3i cell;   // level-l coordinates
        Vec3i parent; // level-(l+1) coordinates
    };

    /// A pull that an active voxel makes from a refined cell; it is served by
    /// coalescence (child average) instead of a same-level read.
    struct CoalescedPull {
        Vec3i voxel;       // active level-l voxel doing the pull
        int direction = 0; // population index
        Vec3i refined;     // the refined level-l cell pulled from
    };

    /// Builds the stack from a per-finest-cell level assignment (canonical
    /// order, values in [0, num_levels)). The lattice fixes the pull
    /// directions of the transition metadata. Validates alignment, coverage,
    /// and single-level jumps; throws std::invalid_argument on violations.
    static MultiResGrid build(Extents virtual_domain, int num_levels, const Lattice& lat,
                              const std::vector<int>& level_of_cell, double tau_coarsest);

    int num_levels() const { return int(levels_.size()); }
    int dim() const { return dim_; }
    Extents virtual_domain() const { return virtual_domain_; }
    const Level& level(int l) const { return levels_[l]; }

    bool active(int l, Vec3i v) const { return levels_[l].active.count(pack_coord(v)) > 0; }

    const std::vector<Ghost>& ghosts(int l) const { return ghosts_[l]; }
    int ghost_slot(int l, Vec3i cell) const;
    const std::vector<CoalescedPull>& pulls(int l) const { return pulls_[l]; }
    int pull_slot(int l, Vec3i voxel, int direction) const;

    Vec3i parent_of(Vec3i v) const {
        return {v.x >> 1, v.y >> 1, dim_ == 3 ? (v.z >> 1) : v.z};
    }
    std::vector<Vec3i> children_of(Vec3i v) const;
    int children_per_cell() const { return dim_ == 3 ? 8 : 4; }

private:
    Extents virtual_domain_;
    int dim_ = 3;
    std::vector<Level> levels_;
    std::vector<std::vector<Ghost>> ghosts_;
    std::vector<std::unordered_map<std::uint64_t, int>> ghost_index_;
    std::vector<std::vector<CoalescedPull>> pulls_;
    std::vector<std::unordered_map<std::uint64_t, int>> pull_index_; // key covers (voxel, dir)
};

enum class FusionClass : std::uint8_t { Uniform = 0, Jump = 1 };

struct FusionResult {
    // Per level: class per block (block-list order) and the distance-0 voxels.
    std::vector<std::vector<FusionClass>> block_class;
    std::vector<std::vector<Vec3i>> distance0;
    std::int64_t uniform_blocks(int l) const;
    std::int64_t jump_blocks(int l) const;
    std::int64_t total_uniform_blocks() const;
};

/// Chebyshev distance (in level-l voxels) to the nearest voxel with a
/// cross-level stencil neighbor; 0 means the voxel itself has one, kNoJump
/// means the level has no resolution interface. Throws on inactive voxels.
int jump_distance(const MultiResGrid& grid, int l, Vec3i voxel);

/// Splits every level's blocks into Uniform (all voxels at distance >= 1)
/// and Jump (at least one distance-0 voxel).
FusionResult classify_fusion(const MultiResGrid& grid);

enum class Op { Collide, Stream, FusedCollideStream, Explosion, Coalescence };
enum class NodeGroup { All, Uniform, Jump, Transition };

const char* to_string(Op op);
const char* to_string(NodeGroup g);

struct ExecNode {
    int level = 0;
    NodeGroup group = NodeGroup::All;
    Op op = Op::Collide;
    std::int64_t blocks = 0; // block sweeps only; 0 for transition operators
};

struct ExecutionGraph {
    bool fused = false;
    std::vector<ExecNode> nodes;
    std::vector<std::pair<int, int>> edges; // from -> to indices

    /// Topological order of the nodes; throws std::runtime_error on a cycle.
    std::vector<int> topological_order() const;
    std::string to_dot() const;
};

/// Staged shape: per level Collide on all blocks, transition operators, then
/// Stream on all blocks. Fused shape: FusedCollideStream on Uniform blocks,
/// staged Collide -> transition -> Stream restricted to Jump blocks.
ExecutionGraph build_execution_graph(const MultiResGrid& grid, const FusionResult& fusion,
                                     bool fused);

/// Multi-resolution collide-stream executor. One coarse_step() advances the
/// coarsest level once; each finer level runs two sub-steps per parent step
/// with tau_fine = 2 tau_coarse - 1/2. Fused and staged modes produce
/// bitwise-identical states.
class MultiResLbm {
public:
    MultiResLbm(const Lattice& lat, MultiResGrid grid, lbm::FlowRules virtual_rules, bool fused);

    void coarse_step();

    const MultiResGrid& grid() const { return grid_; }
    const FusionResult& fusion() const { return fusion_; }
    const ExecutionGraph& graph() const { return graph_; }

    /// Populations of every level (finest to coarsest), cells sorted by
    /// coordinate; mode-independent order for state comparison.
    std::vector<double> canonical_state() const;
    /// Mass weighted by per-level cell volume (finest cell = 1).
    double total_mass() const;
    /// Percent of virtual-finest cells active per level, finest to coarsest.
    std::string distribution_report() const;

    void set_uniform_equilibrium(double rho, const double u[3]);
    /// Per-voxel initialization at one level; fn fills q populations.
    void set_state(int l, const std::function<void(Vec3i, double*)>& fn);

    // Individual stages, exposed for unit tests; coarse_step() composes them.
    void collide_level(int l);
    void explode(int coarse_level);  // writes ghosts of coarse_level - 1
    void coalesce(int coarse_level); // fills coalesced pulls of coarse_level
    void stream_level(int l);
    void fused_level(int l);
    const std::vector<double>& ghost_values(int l) const { return ghost_vals_[l]; }
    const std::vector<double>& coalesced_values(int l) const { return coalesced_vals_[l]; }
    double read(int l, Vec3i v, int i) const;

private:
    Lattice lat_;
    MultiResGrid grid_;
    lbm::FlowRules virtual_rules_;
    bool fused_ = false;
    FusionResult fusion_;
    ExecutionGraph graph_;
    std::vector<sparse::BlockField> cur_;
    std::vector<sparse::BlockField> nxt_;
    std::vector<sparse::BlockField> post_; // post-collision scratch
    std::vector<double> inv_tau_;
    std::vector<std::vector<double>> ghost_vals_;     // per level, ghosts * q
    std::vector<std::vector<double>> coalesced_vals_; // per level, pulls * q

    void advance(int l);
    double post_collision(int l, int b, int local, int i) const;
    void stream_voxel(int l, int b, int local, Vec3i v);
    bool block_is_jump(int l, int b) const {
        return fusion_.block_class[l][b] == FusionClass::Jump;
    }
};

} // namespace mres
} // namespace voxl
