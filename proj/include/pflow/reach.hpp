/**
 * @file reach.hpp
 * @brief Grid-based set-valued analysis in the state space: uniform box
 *        grids, bitset cell sets, the one-step cell transition graph (sampled
 *        centers or rigorous box enclosures), reachable and controllable
 *        sets, the control set containing the origin, and chain-transitive
 *        components of the transition graph.
 */
#pragma once

#include "pflow/system.hpp"

#include <cstdint>
#include <optional>

namespace pflow {

/// Uniform grid over an axis-aligned box.  Cells are half-open boxes
/// [lo + m*h, lo + (m+1)*h) indexed row-major with the last axis fastest.
struct BoxGrid {
    Vec lo;                  ///< lower corner
    Vec hi;                  ///< upper corner
    std::vector<int> shape;  ///< cells per axis

    BoxGrid(Vec lo_, Vec hi_, std::vector<int> shape_);
    /// Cube [-half_width, half_width]^n with the same cell count per axis.
    static BoxGrid cube(double half_width, int n, int cells_per_axis);

    int dims() const { return static_cast<int>(shape.size()); }
    long cell_count() const;
    double width(int axis) const { return (hi[axis] - lo[axis]) / shape[axis]; }
    /// Euclidean diagonal of one cell.
    double diameter() const;

    Vec center(long idx) const;
    std::vector<int> multi_index(long idx) const;
    long flat_index(const std::vector<int>& mi) const;
    /// Cell containing x, or nothing if x is outside the box.
    std::optional<long> locate(const Vec& x) const;
};

/// Fixed-universe bitset over grid cells.
class CellSet {
public:
    CellSet() = default;
    explicit CellSet(long universe);

    long universe() const { return universe_; }
    long count() const;
    bool any() const;
    bool test(long i) const {
        return (words_[static_cast<std::size_t>(i >> 6)] >>
                (static_cast<unsigned>(i) & 63u)) & 1u;
    }
    void set(long i) {
        words_[static_cast<std::size_t>(i >> 6)] |= (1ull << (static_cast<unsigned>(i) & 63u));
    }
    void reset(long i) {
        words_[static_cast<std::size_t>(i >> 6)] &= ~(1ull << (static_cast<unsigned>(i) & 63u));
    }
    /// Set every index in [a, b] (inclusive).
    void set_range(long a, long b);
    /// True when some index in [a, b] (inclusive) is set.
    bool any_in_range(long a, long b) const;

    void clear();
    CellSet& operator|=(const CellSet& o);
    CellSet& operator&=(const CellSet& o);
    /// this := this \ o
    CellSet& subtract(const CellSet& o);
    bool operator==(const CellSet& o) const = default;

    std::vector<long> cells() const; ///< sorted indices of set bits
    /// First set index at or after `from`, or -1.
    long next(long from) const;

private:
    long universe_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Edge semantics of the cell transition graph.
enum class EdgeMode {
    kCenter,    ///< sampled controls, cell-center images inflated by an eps ball
    kEnclosure  ///< rigorous box image of the whole cell over all controls
};

struct GraphParams {
    double tau = 0.1;        ///< transition time per edge
    EdgeMode mode = EdgeMode::kCenter;
    double eps_factor = 1.5; ///< kCenter ball radius, in units of cell diameters (>= 1)
};

/**
 * @brief One-step transition relation between grid cells under the control
 *        system, with time step tau.
 *
 * kCenter follows the chain construction literally: for every control in the
 * sample (the extreme points of the range plus zero) the cell center is
 * propagated for time tau and every cell within eps = eps_factor * cell
 * diameter of the image point is a successor; eps_factor < 1 is rejected so
 * genuine trajectories are never lost between cells.
 *
 * kEnclosure maps the whole cell box through the exact linear step and adds
 * the per-axis hull of the forcing integral over all measurable controls
 * into the range, yielding an interval product of successor indices (a
 * "slab").  It is a rigorous outer approximation with no control sampling;
 * edges are never materialized.
 *
 * Successor queries clip at the grid box; cells whose image reaches outside
 * are reported as escaping.
 */
class CellGraph {
public:
    CellGraph(const LinearSystem& sys, const BoxGrid& grid, GraphParams params);

    const BoxGrid& grid() const { return grid_; }
    const GraphParams& params() const { return params_; }

    /// Successor cell indices (deduplicated, sorted).  Intended for kCenter
    /// graphs and small grids; kEnclosure slabs may be large.
    std::vector<long> successors(long cell) const;
    /// OR the successors of `cell` into `out`.
    void mark_successors(long cell, CellSet& out) const;
    /// True when some successor of `cell` lies in `set`.
    bool successors_intersect(long cell, const CellSet& set) const;
    /// True when the image of `cell` leaves the grid box.
    bool escapes(long cell) const;

private:
    struct Slab {
        std::vector<int> lo, hi; ///< inclusive index ranges per axis
        bool empty = false;
        bool clipped = false;
    };
    Slab enclosure_slab(long cell) const;
    std::vector<Vec> center_images(long cell) const;
    template <typename F>
    void for_each_successor_range(long cell, F&& fn) const;

    const LinearSystem* sys_;
    BoxGrid grid_;
    GraphParams params_;
    Mat E_;                     ///< e^{A tau}
    Mat JB_;                    ///< \int_0^tau e^{A s} ds B
    Vec img_halfwidth_;         ///< per-axis half-width of the cell image box
    Vec ctrl_lo_, ctrl_hi_;     ///< per-axis forcing hull over all controls
    std::vector<Vec> samples_;  ///< kCenter control sample
    double eps_ = 0.0;          ///< kCenter inflation radius
};

/// Reachability result (an outer cell approximation).
struct ReachResult {
    CellSet cells;    ///< reached cells, start included
    CellSet escaping; ///< reached cells whose image leaves the box
    int steps = 0;    ///< BFS rounds actually expanded
    bool saturated = false; ///< fixpoint reached within the step budget
};

/// Forward reachable cells from the given start set within max_steps graph
/// steps (horizon = max_steps * tau); max_steps <= 0 means "to the fixpoint".
ReachResult reachable_set(const CellGraph& graph, const CellSet& start,
                          int max_steps = 0);
ReachResult reachable_set(const CellGraph& graph, long start_cell,
                          int max_steps = 0);

/// The same system with time reversed (x' = -Ax - Bu); the reachable sets of
/// the reversed system are the controllable sets of the original.
LinearSystem time_reversed(const LinearSystem& sys);

/// Cells from which the target cell can be reached ("approach within cell
/// resolution" semantics): reachability under the time-reversed system on the
/// same grid with the same parameters.
ReachResult controllable_set(const LinearSystem& sys, const BoxGrid& grid,
                             GraphParams params, long target_cell,
                             int max_steps = 0);

/// The control set around the origin and its two constituents.
struct ControlSetResult {
    CellSet cells;        ///< reachable(0) intersected with controllable(0)
    ReachResult reach;    ///< forward component
    ReachResult control;  ///< backward component
};

/// Approximation of the control set containing 0: the intersection of the
/// forward reachable set of the origin cell with its controllable set.
/// Throws when 0 is not inside the grid box.
ControlSetResult control_set_D0(const LinearSystem& sys, const BoxGrid& grid,
                                GraphParams params, int max_steps = 0);

/// Strongly connected components of the transition graph that contain at
/// least one edge (singletons without a self-loop are dropped), sorted by
/// descending cell count.  These are the chain-transitive pieces of the
/// discretized dynamics: the chain control set approximations.
std::vector<CellSet> chain_components(const CellGraph& graph);

/// CSV header for cell-set rows: "index,c1,...,cn,kind,flags".
std::string cells_csv_header(const BoxGrid& grid);

/// Append one CSV row per cell of `cells`: index, center coordinates, kind,
/// flags ("unbounded-escape" when the cell is in `escaping`, empty otherwise).
void append_cells_csv(std::string& out, const BoxGrid& grid, const CellSet& cells,
                      const std::string& kind, const CellSet* escaping = nullptr);

} // namespace pflow
