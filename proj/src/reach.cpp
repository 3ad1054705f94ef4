/**
 * @file reach.cpp
 * @brief Implementation of grid cell sets, the cell transition graph, grid
 *        reachability, the origin control set, and chain components.
 */
#include "pflow/reach.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>

namespace pflow {

namespace {

constexpr long kMaxCells = 1l << 31;

/// Deterministic pivot source for the divide-and-conquer component search.
struct SplitMix {
    std::uint64_t state = 0x9E3779B97F4A7C15ull;
    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

} // namespace

// ---------------------------------------------------------------------------
// BoxGrid

BoxGrid::BoxGrid(Vec lo_, Vec hi_, std::vector<int> shape_)
    : lo(std::move(lo_)), hi(std::move(hi_)), shape(std::move(shape_)) {
    if (lo.size() == 0 || lo.size() != hi.size() ||
        static_cast<std::size_t>(lo.size()) != shape.size()) {
        throw PreconditionError("BoxGrid: lo, hi, shape must share one nonzero dimension");
    }
    long cells = 1;
    for (std::size_t k = 0; k < shape.size(); ++k) {
        if (!(lo[static_cast<Eigen::Index>(k)] < hi[static_cast<Eigen::Index>(k)])) {
            throw PreconditionError("BoxGrid: requires lo < hi per axis");
        }
        if (shape[k] < 1) throw PreconditionError("BoxGrid: requires >= 1 cell per axis");
        cells *= shape[k];
        if (cells > kMaxCells) throw PreconditionError("BoxGrid: too many cells");
    }
}

BoxGrid BoxGrid::cube(double half_width, int n, int cells_per_axis) {
    if (half_width <= 0.0) throw PreconditionError("BoxGrid::cube: half_width must be positive");
    Vec lo = Vec::Constant(n, -half_width);
    Vec hi = Vec::Constant(n, half_width);
    return BoxGrid(lo, hi, std::vector<int>(static_cast<std::size_t>(n), cells_per_axis));
}

long BoxGrid::cell_count() const {
    long cells = 1;
    for (int s : shape) cells *= s;
    return cells;
}

double BoxGrid::diameter() const {
    double d2 = 0.0;
    for (int k = 0; k < dims(); ++k) d2 += width(k) * width(k);
    return std::sqrt(d2);
}

std::vector<int> BoxGrid::multi_index(long idx) const {
    std::vector<int> mi(shape.size());
    for (int k = dims() - 1; k >= 0; --k) {
        mi[static_cast<std::size_t>(k)] = static_cast<int>(idx % shape[static_cast<std::size_t>(k)]);
        idx /= shape[static_cast<std::size_t>(k)];
    }
    return mi;
}

long BoxGrid::flat_index(const std::vector<int>& mi) const {
    long idx = 0;
    for (std::size_t k = 0; k < shape.size(); ++k) idx = idx * shape[k] + mi[k];
    return idx;
}

Vec BoxGrid::center(long idx) const {
    const std::vector<int> mi = multi_index(idx);
    Vec c(dims());
    for (int k = 0; k < dims(); ++k) {
        c[k] = lo[k] + (mi[static_cast<std::size_t>(k)] + 0.5) * width(k);
    }
    return c;
}

std::optional<long> BoxGrid::locate(const Vec& x) const {
    if (x.size() != lo.size()) throw PreconditionError("BoxGrid::locate: dimension mismatch");
    std::vector<int> mi(shape.size());
    for (int k = 0; k < dims(); ++k) {
        if (x[k] < lo[k] || x[k] > hi[k]) return std::nullopt;
        int m = static_cast<int>(std::floor((x[k] - lo[k]) / width(k)));
        mi[static_cast<std::size_t>(k)] = std::min(m, shape[static_cast<std::size_t>(k)] - 1);
    }
    return flat_index(mi);
}

// ---------------------------------------------------------------------------
// CellSet

CellSet::CellSet(long universe) : universe_(universe) {
    if (universe < 0) throw PreconditionError("CellSet: negative universe");
    words_.assign(static_cast<std::size_t>((universe + 63) >> 6), 0);
}

long CellSet::count() const {
    long c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
}

bool CellSet::any() const {
    for (std::uint64_t w : words_) {
        if (w) return true;
    }
    return false;
}

void CellSet::set_range(long a, long b) {
    if (a > b) return;
    const std::size_t wa = static_cast<std::size_t>(a >> 6);
    const std::size_t wb = static_cast<std::size_t>(b >> 6);
    const std::uint64_t first = ~0ull << (static_cast<unsigned>(a) & 63u);
    const std::uint64_t last = ~0ull >> (63u - (static_cast<unsigned>(b) & 63u));
    if (wa == wb) {
        words_[wa] |= first & last;
        return;
    }
    words_[wa] |= first;
    for (std::size_t w = wa + 1; w < wb; ++w) words_[w] = ~0ull;
    words_[wb] |= last;
}

bool CellSet::any_in_range(long a, long b) const {
    if (a > b) return false;
    const std::size_t wa = static_cast<std::size_t>(a >> 6);
    const std::size_t wb = static_cast<std::size_t>(b >> 6);
    const std::uint64_t first = ~0ull << (static_cast<unsigned>(a) & 63u);
    const std::uint64_t last = ~0ull >> (63u - (static_cast<unsigned>(b) & 63u));
    if (wa == wb) return (words_[wa] & first & last) != 0;
    if (words_[wa] & first) return true;
    for (std::size_t w = wa + 1; w < wb; ++w) {
        if (words_[w]) return true;
    }
    return (words_[wb] & last) != 0;
}

void CellSet::clear() { std::fill(words_.begin(), words_.end(), 0ull); }

CellSet& CellSet::operator|=(const CellSet& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= o.words_[w];
    return *this;
}

CellSet& CellSet::operator&=(const CellSet& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= o.words_[w];
    return *this;
}

CellSet& CellSet::subtract(const CellSet& o) {
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= ~o.words_[w];
    return *this;
}

std::vector<long> CellSet::cells() const {
    std::vector<long> out;
    for (long i = next(0); i >= 0; i = next(i + 1)) out.push_back(i);
    return out;
}

long CellSet::next(long from) const {
    if (from >= universe_) return -1;
    std::size_t w = static_cast<std::size_t>(from >> 6);
    std::uint64_t cur = words_[w] & (~0ull << (static_cast<unsigned>(from) & 63u));
    while (true) {
        if (cur) {
            const long idx = static_cast<long>((w << 6) + static_cast<std::size_t>(std::countr_zero(cur)));
            return idx < universe_ ? idx : -1;
        }
        if (++w >= words_.size()) return -1;
        cur = words_[w];
    }
}

// ---------------------------------------------------------------------------
// CellGraph

CellGraph::CellGraph(const LinearSystem& sys, const BoxGrid& grid, GraphParams params)
    : sys_(&sys), grid_(grid), params_(params) {
    if (grid.dims() != sys.n()) {
        throw PreconditionError("CellGraph: grid dimension must match the state dimension");
    }
    if (!(params.tau > 0.0)) throw PreconditionError("CellGraph: tau must be positive");
    const StepMatrices sm = exp_step(sys.A, params.tau);
    E_ = sm.E;
    JB_ = sm.J * sys.B;

    const int n = sys.n();
    img_halfwidth_ = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l) s += std::abs(E_(k, l)) * 0.5 * grid.width(l);
        img_halfwidth_[k] = s;
    }

    if (params.mode == EdgeMode::kEnclosure) {
        // Per-axis hull of \int_0^tau e^{A s} B u(tau - s) ds over all
        // measurable controls into the range: integrate the per-axis
        // max/min of e^{A s} B v over the extreme points v.  Composite
        // Simpson rule; a small outward pad keeps the hull an outer bound.
        const int panels = 512;
        const double hstep = params.tau / panels;
        const Mat D = exp_step(sys.A, hstep).E;
        Mat M = Mat::Identity(n, n);
        Vec acc_hi = Vec::Zero(n), acc_lo = Vec::Zero(n);
        const auto& verts = sys.range.vertices();
        for (int j = 0; j <= panels; ++j) {
            const double w = (j == 0 || j == panels) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            Vec hi_j = Vec::Constant(n, -1e300), lo_j = Vec::Constant(n, 1e300);
            for (const Vec& v : verts) {
                const Vec g = M * (sys.B * v);
                hi_j = hi_j.cwiseMax(g);
                lo_j = lo_j.cwiseMin(g);
            }
            acc_hi += w * hi_j;
            acc_lo += w * lo_j;
            if (j < panels) M = D * M;
        }
        ctrl_hi_ = (hstep / 3.0) * acc_hi;
        ctrl_lo_ = (hstep / 3.0) * acc_lo;
        const double pad = 1e-7 * (1.0 + ctrl_hi_.cwiseAbs().maxCoeff() +
                                   ctrl_lo_.cwiseAbs().maxCoeff());
        ctrl_hi_.array() += pad;
        ctrl_lo_.array() -= pad;
    } else {
        if (params.eps_factor < 1.0) {
            throw PreconditionError(
                "CellGraph: eps_factor must be >= 1 so the inflation covers a whole cell");
        }
        eps_ = params.eps_factor * grid.diameter();
        samples_ = sys.range.vertices();
        samples_.push_back(Vec::Zero(sys.m()));
    }
}

CellGraph::Slab CellGraph::enclosure_slab(long cell) const {
    const int d = grid_.dims();
    Slab slab;
    slab.lo.resize(static_cast<std::size_t>(d));
    slab.hi.resize(static_cast<std::size_t>(d));
    const Vec img = E_ * grid_.center(cell);
    for (int k = 0; k < d; ++k) {
        const double xlo = img[k] + ctrl_lo_[k] - img_halfwidth_[k];
        const double xhi = img[k] + ctrl_hi_[k] + img_halfwidth_[k];
        if (xhi < grid_.lo[k] || xlo > grid_.hi[k]) {
            slab.empty = true;
            slab.clipped = true;
            return slab;
        }
        const double w = grid_.width(k);
        int mlo = static_cast<int>(std::floor((xlo - grid_.lo[k]) / w));
        int mhi = static_cast<int>(std::floor((xhi - grid_.lo[k]) / w));
        if (mlo < 0 || mhi >= grid_.shape[static_cast<std::size_t>(k)]) slab.clipped = true;
        mlo = std::max(mlo, 0);
        mhi = std::min(mhi, grid_.shape[static_cast<std::size_t>(k)] - 1);
        slab.lo[static_cast<std::size_t>(k)] = mlo;
        slab.hi[static_cast<std::size_t>(k)] = mhi;
    }
    return slab;
}

template <typename F>
void CellGraph::for_each_successor_range(long cell, F&& fn) const {
    const Slab slab = enclosure_slab(cell);
    if (slab.empty) return;
    const int d = grid_.dims();
    std::vector<int> mi(slab.lo);
    while (true) {
        // flat index of (mi[0..d-2], slab.lo[d-1])
        long base = 0;
        for (int k = 0; k + 1 < d; ++k) base = base * grid_.shape[static_cast<std::size_t>(k)] + mi[static_cast<std::size_t>(k)];
        base = base * grid_.shape[static_cast<std::size_t>(d - 1)];
        if (fn(base + slab.lo[static_cast<std::size_t>(d - 1)], base + slab.hi[static_cast<std::size_t>(d - 1)])) return;
        int k = d - 2;
        for (; k >= 0; --k) {
            if (++mi[static_cast<std::size_t>(k)] <= slab.hi[static_cast<std::size_t>(k)]) break;
            mi[static_cast<std::size_t>(k)] = slab.lo[static_cast<std::size_t>(k)];
        }
        if (k < 0) return;
    }
}

std::vector<Vec> CellGraph::center_images(long cell) const {
    const Vec c = grid_.center(cell);
    const Vec base = E_ * c;
    std::vector<Vec> out;
    out.reserve(samples_.size());
    for (const Vec& u : samples_) out.push_back(base + JB_ * u);
    return out;
}

std::vector<long> CellGraph::successors(long cell) const {
    std::vector<long> out;
    if (params_.mode == EdgeMode::kEnclosure) {
        for_each_successor_range(cell, [&](long a, long b) {
            for (long i = a; i <= b; ++i) out.push_back(i);
            return false;
        });
        return out;
    }
    const int d = grid_.dims();
    std::vector<int> rad(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) rad[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(eps_ / grid_.width(k))) + 1;
    for (const Vec& y : center_images(cell)) {
        std::vector<int> clo(static_cast<std::size_t>(d)), chi(static_cast<std::size_t>(d));
        bool window_empty = false;
        for (int k = 0; k < d; ++k) {
            const int m = static_cast<int>(std::floor((y[k] - grid_.lo[k]) / grid_.width(k)));
            clo[static_cast<std::size_t>(k)] = std::max(m - rad[static_cast<std::size_t>(k)], 0);
            chi[static_cast<std::size_t>(k)] = std::min(m + rad[static_cast<std::size_t>(k)], grid_.shape[static_cast<std::size_t>(k)] - 1);
            if (clo[static_cast<std::size_t>(k)] > chi[static_cast<std::size_t>(k)]) window_empty = true;
        }
        if (window_empty) continue;
        std::vector<int> mi(clo);
        while (true) {
            Vec cc(d);
            for (int k = 0; k < d; ++k) cc[k] = grid_.lo[k] + (mi[static_cast<std::size_t>(k)] + 0.5) * grid_.width(k);
            if ((cc - y).norm() <= eps_) out.push_back(grid_.flat_index(mi));
            int k = d - 1;
            for (; k >= 0; --k) {
                if (++mi[static_cast<std::size_t>(k)] <= chi[static_cast<std::size_t>(k)]) break;
                mi[static_cast<std::size_t>(k)] = clo[static_cast<std::size_t>(k)];
            }
            if (k < 0) break;
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void CellGraph::mark_successors(long cell, CellSet& out) const {
    if (params_.mode == EdgeMode::kEnclosure) {
        for_each_successor_range(cell, [&](long a, long b) {
            out.set_range(a, b);
            return false;
        });
        return;
    }
    for (long j : successors(cell)) out.set(j);
}

bool CellGraph::successors_intersect(long cell, const CellSet& set) const {
    if (params_.mode == EdgeMode::kEnclosure) {
        bool hit = false;
        for_each_successor_range(cell, [&](long a, long b) {
            hit = set.any_in_range(a, b);
            return hit;
        });
        return hit;
    }
    for (long j : successors(cell)) {
        if (set.test(j)) return true;
    }
    return false;
}

bool CellGraph::escapes(long cell) const {
    if (params_.mode == EdgeMode::kEnclosure) return enclosure_slab(cell).clipped;
    for (const Vec& y : center_images(cell)) {
        for (int k = 0; k < grid_.dims(); ++k) {
            if (y[k] < grid_.lo[k] || y[k] > grid_.hi[k]) return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Reachability

ReachResult reachable_set(const CellGraph& graph, const CellSet& start, int max_steps) {
    const long N = graph.grid().cell_count();
    if (start.universe() != N) throw PreconditionError("reachable_set: start set universe mismatch");
    ReachResult res;
    res.cells = start;
    res.escaping = CellSet(N);
    CellSet frontier = start;
    CellSet acc(N);
    while (frontier.any() && (max_steps <= 0 || res.steps < max_steps)) {
        acc.clear();
        for (long i = frontier.next(0); i >= 0; i = frontier.next(i + 1)) {
            graph.mark_successors(i, acc);
        }
        acc.subtract(res.cells);
        ++res.steps;
        if (!acc.any()) {
            res.saturated = true;
            break;
        }
        res.cells |= acc;
        frontier = acc;
    }
    if (!frontier.any()) res.saturated = true;
    for (long i = res.cells.next(0); i >= 0; i = res.cells.next(i + 1)) {
        if (graph.escapes(i)) res.escaping.set(i);
    }
    return res;
}

ReachResult reachable_set(const CellGraph& graph, long start_cell, int max_steps) {
    CellSet start(graph.grid().cell_count());
    if (start_cell < 0 || start_cell >= start.universe()) {
        throw PreconditionError("reachable_set: start cell out of range");
    }
    start.set(start_cell);
    return reachable_set(graph, start, max_steps);
}

LinearSystem time_reversed(const LinearSystem& sys) {
    return LinearSystem(-sys.A, -sys.B, sys.range);
}

ReachResult controllable_set(const LinearSystem& sys, const BoxGrid& grid,
                             GraphParams params, long target_cell, int max_steps) {
    const LinearSystem rev = time_reversed(sys);
    const CellGraph graph(rev, grid, params);
    return reachable_set(graph, target_cell, max_steps);
}

ControlSetResult control_set_D0(const LinearSystem& sys, const BoxGrid& grid,
                                GraphParams params, int max_steps) {
    const auto origin = grid.locate(Vec::Zero(grid.dims()));
    if (!origin) throw PreconditionError("control_set_D0: the origin is outside the grid box");
    ControlSetResult res;
    const CellGraph fwd(sys, grid, params);
    res.reach = reachable_set(fwd, *origin, max_steps);
    res.control = controllable_set(sys, grid, params, *origin, max_steps);
    res.cells = res.reach.cells;
    res.cells &= res.control.cells;
    return res;
}

// ---------------------------------------------------------------------------
// Chain components

namespace {

/// Iterative Tarjan over materialized successor lists (sampled-center graphs).
std::vector<CellSet> tarjan_components(const CellGraph& graph) {
    const long N = graph.grid().cell_count();
    std::vector<long> index(static_cast<std::size_t>(N), -1);
    std::vector<long> low(static_cast<std::size_t>(N), 0);
    std::vector<bool> onstack(static_cast<std::size_t>(N), false);
    std::vector<long> stack;
    long counter = 0;
    std::vector<CellSet> out;

    struct Frame {
        long v;
        std::vector<long> succ;
        std::size_t next = 0;
    };
    std::vector<Frame> dfs;

    for (long root = 0; root < N; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        dfs.push_back({root, graph.successors(root), 0});
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        onstack[static_cast<std::size_t>(root)] = true;
        while (!dfs.empty()) {
            Frame& f = dfs.back();
            if (f.next < f.succ.size()) {
                const long w = f.succ[f.next++];
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
                    stack.push_back(w);
                    onstack[static_cast<std::size_t>(w)] = true;
                    dfs.push_back({w, graph.successors(w), 0});
                } else if (onstack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] =
                        std::min(low[static_cast<std::size_t>(f.v)], index[static_cast<std::size_t>(w)]);
                }
                continue;
            }
            const long v = f.v;
            const bool is_root = low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)];
            std::vector<long> members;
            if (is_root) {
                while (true) {
                    const long w = stack.back();
                    stack.pop_back();
                    onstack[static_cast<std::size_t>(w)] = false;
                    members.push_back(w);
                    if (w == v) break;
                }
            }
            dfs.pop_back();
            if (!dfs.empty()) {
                Frame& parent = dfs.back();
                low[static_cast<std::size_t>(parent.v)] =
                    std::min(low[static_cast<std::size_t>(parent.v)], low[static_cast<std::size_t>(v)]);
            }
            if (members.size() >= 2) {
                CellSet comp(N);
                for (long w : members) comp.set(w);
                out.push_back(std::move(comp));
            } else if (members.size() == 1) {
                CellSet self(N);
                self.set(members[0]);
                if (graph.successors_intersect(members[0], self)) out.push_back(std::move(self));
            }
        }
    }
    return out;
}

/// Forward reachable set of `seed` inside `domain` (seed assumed inside).
CellSet forward_within(const CellGraph& graph, long seed, const CellSet& domain) {
    const long N = graph.grid().cell_count();
    CellSet reached(N);
    reached.set(seed);
    CellSet frontier = reached;
    CellSet acc(N);
    while (frontier.any()) {
        acc.clear();
        for (long i = frontier.next(0); i >= 0; i = frontier.next(i + 1)) {
            graph.mark_successors(i, acc);
        }
        acc &= domain;
        acc.subtract(reached);
        if (!acc.any()) break;
        reached |= acc;
        frontier = acc;
    }
    return reached;
}

/// Cells of `domain` from which `target` can be reached inside `domain`.
CellSet backward_within(const CellGraph& graph, const CellSet& target, const CellSet& domain) {
    CellSet reached = target;
    while (true) {
        bool grew = false;
        for (long i = domain.next(0); i >= 0; i = domain.next(i + 1)) {
            if (reached.test(i)) continue;
            if (graph.successors_intersect(i, reached)) {
                reached.set(i);
                grew = true;
            }
        }
        if (!grew) return reached;
    }
}

/// Remove cells of `domain` with no successor inside `domain` until stable.
void trim_sinks(const CellGraph& graph, CellSet& domain) {
    bool removed = true;
    while (removed) {
        removed = false;
        for (long i = domain.next(0); i >= 0; i = domain.next(i + 1)) {
            if (!graph.successors_intersect(i, domain)) {
                domain.reset(i);
                removed = true;
            }
        }
    }
}

/// Divide-and-conquer component search driven by bitset sweeps; suited to
/// enclosure graphs whose successor slabs are too dense to enumerate.
std::vector<CellSet> split_components(const CellGraph& graph) {
    const long N = graph.grid().cell_count();
    CellSet all(N);
    if (N > 0) all.set_range(0, N - 1);
    std::vector<CellSet> work;
    work.push_back(std::move(all));
    std::vector<CellSet> out;
    SplitMix pivots;

    while (!work.empty()) {
        CellSet domain = std::move(work.back());
        work.pop_back();
        trim_sinks(graph, domain);
        const long m = domain.count();
        if (m == 0) continue;

        long pick = static_cast<long>(pivots.next() % static_cast<std::uint64_t>(m));
        long pivot = domain.next(0);
        while (pick-- > 0) pivot = domain.next(pivot + 1);

        const CellSet fwd = forward_within(graph, pivot, domain);
        CellSet seed(N);
        seed.set(pivot);
        const CellSet bwd = backward_within(graph, seed, domain);

        CellSet comp = fwd;
        comp &= bwd;
        bool has_edge = false;
        for (long i = comp.next(0); i >= 0 && !has_edge; i = comp.next(i + 1)) {
            has_edge = graph.successors_intersect(i, comp);
        }
        if (has_edge) out.push_back(comp);

        CellSet rest_f = fwd;
        rest_f.subtract(comp);
        CellSet rest_b = bwd;
        rest_b.subtract(comp);
        CellSet rest = domain;
        rest.subtract(fwd);
        rest.subtract(bwd);
        if (rest_f.any()) work.push_back(std::move(rest_f));
        if (rest_b.any()) work.push_back(std::move(rest_b));
        if (rest.any()) work.push_back(std::move(rest));
    }
    return out;
}

} // namespace

std::vector<CellSet> chain_components(const CellGraph& graph) {
    std::vector<CellSet> comps = graph.params().mode == EdgeMode::kEnclosure
                                     ? split_components(graph)
                                     : tarjan_components(graph);
    std::sort(comps.begin(), comps.end(), [](const CellSet& a, const CellSet& b) {
        const long ca = a.count(), cb = b.count();
        if (ca != cb) return ca > cb;
        return a.next(0) < b.next(0);
    });
    return comps;
}

// ---------------------------------------------------------------------------
// CSV serialization

std::string cells_csv_header(const BoxGrid& grid) {
    std::string out = "index";
    for (int k = 1; k <= grid.dims(); ++k) out += ",c" + std::to_string(k);
    out += ",kind,flags\n";
    return out;
}

void append_cells_csv(std::string& out, const BoxGrid& grid, const CellSet& cells,
                      const std::string& kind, const CellSet* escaping) {
    for (long i = cells.next(0); i >= 0; i = cells.next(i + 1)) {
        out += std::to_string(i);
        const Vec c = grid.center(i);
        for (int k = 0; k < grid.dims(); ++k) out += ',' + format_num(c[k]);
        out += ',' + kind + ',';
        if (escaping != nullptr && escaping->test(i)) out += "unbounded-escape";
        out += '\n';
    }
}

} // namespace pflow
