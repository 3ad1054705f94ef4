/**
 * @file mesh.cpp
 * @brief Implementation of sphere meshes, chain components over meshes, and
 *        limit-set classification.
 */
#include "pflow/mesh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <utility>

namespace pflow {

namespace {

/// Multiple of the mesh diameter within which a component counts as lying on
/// the equator (chain components hug their invariant set up to a small
/// creep radius of this order).
constexpr double kEquatorBand = 3.0;

/// Antipodal pairing tolerance, in mesh diameters.
constexpr double kPairBand = 2.0;

std::vector<std::vector<int>> tarjan(const std::vector<std::vector<int>>& adj) {
    const int n = static_cast<int>(adj.size());
    std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<bool> onstack(static_cast<std::size_t>(n), false);
    std::vector<int> stack;
    int counter = 0;
    std::vector<std::vector<int>> comps;

    struct Frame {
        int v;
        std::size_t next = 0;
    };
    std::vector<Frame> dfs;
    for (int root = 0; root < n; ++root) {
        if (index[static_cast<std::size_t>(root)] != -1) continue;
        dfs.push_back({root, 0});
        index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
        stack.push_back(root);
        onstack[static_cast<std::size_t>(root)] = true;
        while (!dfs.empty()) {
            Frame& f = dfs.back();
            const auto& succ = adj[static_cast<std::size_t>(f.v)];
            if (f.next < succ.size()) {
                const int w = succ[f.next++];
                if (index[static_cast<std::size_t>(w)] == -1) {
                    index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
                    stack.push_back(w);
                    onstack[static_cast<std::size_t>(w)] = true;
                    dfs.push_back({w, 0});
                } else if (onstack[static_cast<std::size_t>(w)]) {
                    low[static_cast<std::size_t>(f.v)] =
                        std::min(low[static_cast<std::size_t>(f.v)], index[static_cast<std::size_t>(w)]);
                }
                continue;
            }
            const int v = f.v;
            const bool is_root = low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)];
            dfs.pop_back();
            if (!dfs.empty()) {
                Frame& parent = dfs.back();
                low[static_cast<std::size_t>(parent.v)] =
                    std::min(low[static_cast<std::size_t>(parent.v)], low[static_cast<std::size_t>(v)]);
            }
            if (!is_root) continue;
            std::vector<int> members;
            while (true) {
                const int w = stack.back();
                stack.pop_back();
                onstack[static_cast<std::size_t>(w)] = false;
                members.push_back(w);
                if (w == v) break;
            }
            std::sort(members.begin(), members.end());
            comps.push_back(std::move(members));
        }
    }
    return comps;
}

} // namespace

// ---------------------------------------------------------------------------
// SphereMesh

SphereMesh SphereMesh::icosphere(int subdivisions, const Mat& gram) {
    if (subdivisions < 1 || subdivisions > 7) {
        throw PreconditionError("SphereMesh::icosphere: subdivisions must be in [1, 7]");
    }
    if (gram.rows() != 3 || gram.cols() != 3) {
        throw PreconditionError("SphereMesh::icosphere: gram must be 3 x 3");
    }
    const double p = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec> verts;
    const double raw[12][3] = {{-1, p, 0}, {1, p, 0},   {-1, -p, 0}, {1, -p, 0},
                               {0, -1, p}, {0, 1, p},   {0, -1, -p}, {0, 1, -p},
                               {p, 0, -1}, {p, 0, 1},   {-p, 0, -1}, {-p, 0, 1}};
    for (const auto& r : raw) {
        Vec v(3);
        v << r[0], r[1], r[2];
        verts.push_back(v / norm_g(v, gram));
    }
    std::vector<std::array<int, 3>> faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int step = 0; step < subdivisions; ++step) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec v = verts[static_cast<std::size_t>(a)] + verts[static_cast<std::size_t>(b)];
            v /= norm_g(v, gram);
            verts.push_back(v);
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(faces.size() * 4);
        for (const auto& f : faces) {
            const int ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        faces = std::move(next);
    }

    // Cells are the dual polygons around the triangulation vertices, so the
    // cell centers are the vertices themselves.  From one subdivision on,
    // the six coordinate-axis points are exact vertices (edge midpoints of
    // the base icosahedron), so axis-aligned eigendirections of the examples
    // land exactly on cell centers.  The dual cell around a vertex lies
    // within 1.2 edge lengths.
    SphereMesh mesh;
    mesh.gram_ = gram;
    mesh.centers_ = std::move(verts);
    double edge = 0.0;
    for (const auto& f : faces) {
        const Vec& a = mesh.centers_[static_cast<std::size_t>(f[0])];
        const Vec& b = mesh.centers_[static_cast<std::size_t>(f[1])];
        const Vec& c = mesh.centers_[static_cast<std::size_t>(f[2])];
        edge = std::max({edge, norm_g(a - b, gram), norm_g(b - c, gram), norm_g(c - a, gram)});
    }
    mesh.diameter_ = 1.2 * edge;
    return mesh;
}

SphereMesh SphereMesh::circle(const Mat& plane_basis, int segments, const Mat& gram) {
    if (plane_basis.cols() != 2 || plane_basis.rows() != gram.rows()) {
        throw PreconditionError("SphereMesh::circle: basis must be (ambient dim) x 2");
    }
    if (segments < 8) throw PreconditionError("SphereMesh::circle: needs >= 8 segments");
    const Vec b1 = plane_basis.col(0), b2 = plane_basis.col(1);
    if (std::abs(dot_g(b1, b1, gram) - 1.0) > 1e-9 ||
        std::abs(dot_g(b2, b2, gram) - 1.0) > 1e-9 || std::abs(dot_g(b1, b2, gram)) > 1e-9) {
        throw PreconditionError("SphereMesh::circle: basis columns must be gram-orthonormal");
    }
    SphereMesh mesh;
    mesh.gram_ = gram;
    const double step = 2.0 * M_PI / segments;
    mesh.centers_.reserve(static_cast<std::size_t>(segments));
    for (int i = 0; i < segments; ++i) {
        const double th = (i + 0.5) * step;
        mesh.centers_.push_back(std::cos(th) * b1 + std::sin(th) * b2);
    }
    mesh.diameter_ = 2.0 * std::sin(step / 2.0);
    return mesh;
}

int SphereMesh::locate(const Vec& s) const {
    if (s.size() != gram_.rows()) throw PreconditionError("SphereMesh::locate: dimension mismatch");
    int best = 0;
    double best_dot = -1e300;
    for (int i = 0; i < cell_count(); ++i) {
        const double d = dot_g(centers_[static_cast<std::size_t>(i)], s, gram_);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Chain components over a mesh

std::vector<SphereChainSet> sphere_chain_sets(const LinearSystem& sys,
                                              const SpectralData& sd,
                                              const SphereMesh& mesh,
                                              const SphereGraphParams& params) {
    if (mesh.gram().rows() != sys.n() + 1) {
        throw PreconditionError("sphere_chain_sets: mesh ambient dimension must be n + 1");
    }
    if (!(params.tau > 0.0)) throw PreconditionError("sphere_chain_sets: tau must be positive");
    if (params.eps_factor < 1.0) {
        throw PreconditionError("sphere_chain_sets: eps_factor must be >= 1");
    }
    const Mat& Gp = mesh.gram();
    const double eps = params.eps_factor * mesh.diameter();
    const int N = mesh.cell_count();

    std::vector<Vec> samples = sys.range.vertices();
    samples.push_back(Vec::Zero(sys.m()));

    std::vector<std::vector<int>> adj(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
        std::vector<int>& succ = adj[static_cast<std::size_t>(i)];
        const SpherePoint si = project_to_sphere(mesh.center(i), Gp);
        for (const Vec& uv : samples) {
            const SpherePoint img =
                sphere_flow(sys, sd, params.tau, si, ControlSignal::constant(uv));
            for (int j = 0; j < N; ++j) {
                if (norm_g(mesh.center(j) - img.y, Gp) <= eps) succ.push_back(j);
            }
        }
        std::sort(succ.begin(), succ.end());
        succ.erase(std::unique(succ.begin(), succ.end()), succ.end());
    }

    std::vector<std::vector<int>> comps;
    for (auto& members : tarjan(adj)) {
        if (members.size() == 1) {
            const int v = members[0];
            const auto& succ = adj[static_cast<std::size_t>(v)];
            if (!std::binary_search(succ.begin(), succ.end(), v)) continue;
        }
        comps.push_back(std::move(members));
    }
    std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a[0] < b[0];
    });

    std::vector<SphereChainSet> out;
    out.reserve(comps.size());
    for (auto& members : comps) {
        SphereChainSet set;
        bool equator = true;
        for (int c : members) {
            if (std::abs(mesh.center(c)[sys.n()]) > kEquatorBand * mesh.diameter()) {
                equator = false;
                break;
            }
        }
        set.equator = equator;
        set.representative = mesh.center(members[0]);
        set.cells = std::move(members);
        out.push_back(std::move(set));
    }

    // Antipodal pairing: directed chordal Hausdorff distance between one set
    // and the reflection of the other, both ways.
    auto directed = [&](const SphereChainSet& a, const SphereChainSet& b) {
        double worst = 0.0;
        for (int ca : a.cells) {
            double best = 1e300;
            for (int cb : b.cells) {
                best = std::min(best, norm_g(mesh.center(ca) + mesh.center(cb), Gp));
            }
            worst = std::max(worst, best);
        }
        return worst;
    };
    const double pair_tol = kPairBand * mesh.diameter();
    for (std::size_t a = 0; a < out.size(); ++a) {
        if (out[a].antipodal_partner != -1) continue;
        for (std::size_t b = a; b < out.size(); ++b) {
            if (out[b].antipodal_partner != -1) continue;
            if (directed(out[a], out[b]) <= pair_tol && directed(out[b], out[a]) <= pair_tol) {
                out[a].antipodal_partner = static_cast<int>(b);
                out[b].antipodal_partner = static_cast<int>(a);
                break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Limit candidates

double candidate_distance(const LimitCandidate& cand, const SpherePoint& s,
                          const Mat& lifted_gram) {
    switch (cand.kind) {
    case LimitCandidate::Kind::kEquatorPair:
        return std::min(norm_g(s.y - cand.point, lifted_gram),
                        norm_g(s.y + cand.point, lifted_gram));
    case LimitCandidate::Kind::kEquatorSubsphere: {
        const int n = static_cast<int>(lifted_gram.rows()) - 1;
        const Mat G = lifted_gram.topLeftCorner(n, n);
        const double m = norm_g(cand.projector * s.x(), G);
        return std::sqrt(std::max(0.0, 2.0 - 2.0 * m));
    }
    case LimitCandidate::Kind::kPointCloudPair: {
        double best = 0.0;
        for (Eigen::Index j = 0; j < cand.cloud.cols(); ++j) {
            best = std::max(best, std::abs(dot_g(s.y, cand.cloud.col(j), lifted_gram)));
        }
        return std::sqrt(std::max(0.0, 2.0 - 2.0 * best));
    }
    }
    throw PreconditionError("candidate_distance: unknown candidate kind");
}

std::vector<LimitCandidate> equator_candidates(const LinearSystem& sys,
                                               const SpectralData& sd) {
    std::vector<LimitCandidate> out;
    for (int i = 0; i < sd.space_count(); ++i) {
        LimitCandidate c;
        c.name = "equator L(" + format_num(sd.exponents[static_cast<std::size_t>(i)]) + ")";
        if (sd.dim(i) == 1) {
            c.kind = LimitCandidate::Kind::kEquatorPair;
            Vec w = sd.spaces[static_cast<std::size_t>(i)].col(0);
            w /= norm_g(w, sd.gram);
            c.point = Vec::Zero(sys.n() + 1);
            c.point.head(sys.n()) = w;
        } else {
            c.kind = LimitCandidate::Kind::kEquatorSubsphere;
            c.projector = sd.proj_space(i);
        }
        out.push_back(std::move(c));
    }
    return out;
}

LimitCandidate central_candidate(const LinearSystem& sys, const SpectralData& sd,
                                 const ControlSignal& u) {
    const Mat Gp = lift_gram(sd.gram);
    double span = 1.0;
    int count = 1;
    bool constant = u.values().size() <= 1 && !u.period();
    if (!constant) {
        span = u.period() ? *u.period()
                          : (u.breakpoints().back() - u.breakpoints().front() + 1.0);
        count = 64;
    }
    LimitCandidate c;
    c.kind = LimitCandidate::Kind::kPointCloudPair;
    c.name = "central";
    c.cloud = Mat(sys.n() + 1, count);
    double prev_free = 0.0;
    double res = 0.0;
    for (int j = 0; j < count; ++j) {
        const double t = span * j / count;
        const Vec e = bounded_solution(sys, sd, u, t).value;
        c.cloud.col(j) = chart_to_sphere(e, Gp).y;
        if (j > 0) res = std::max(res, norm_g(c.cloud.col(j) - c.cloud.col(j - 1), Gp));
        prev_free = t;
    }
    (void)prev_free;
    c.resolution = res;
    return c;
}

LimitCandidate central_candidate_from_cells(const BoxGrid& grid, const CellSet& cells,
                                            const Mat& lifted_gram) {
    const long k = cells.count();
    if (k == 0) throw PreconditionError("central_candidate_from_cells: empty cell set");
    LimitCandidate c;
    c.kind = LimitCandidate::Kind::kPointCloudPair;
    c.name = "central";
    c.cloud = Mat(grid.dims() + 1, k);
    long col = 0;
    for (long i = cells.next(0); i >= 0; i = cells.next(i + 1)) {
        c.cloud.col(col++) = chart_to_sphere(grid.center(i), lifted_gram).y;
    }
    // The chart is 1-Lipschitz from the state space to the sphere, so grid
    // resolution bounds cloud resolution.
    c.resolution = grid.diameter();
    return c;
}

// ---------------------------------------------------------------------------
// Limit-set classification

LimitClassification limit_set(const LinearSystem& sys, const SpectralData& sd,
                              const SpherePoint& s0, const ControlSignal& u,
                              double T_tail, double T_total,
                              const std::vector<LimitCandidate>& candidates,
                              double tol) {
    if (!(T_tail > 0.0) || !(T_total >= T_tail)) {
        throw PreconditionError("limit_set: need 0 < T_tail <= T_total");
    }
    if (candidates.empty()) throw PreconditionError("limit_set: no candidates");
    if (!(tol > 0.0)) throw PreconditionError("limit_set: tol must be positive");

    const Mat Gp = lift_gram(sd.gram);
    const double dt = std::min(0.5, T_tail / 16.0);
    const auto samples = sphere_trajectory(sys, sd, s0, u, T_total, dt);
    std::vector<SpherePoint> tail;
    for (const auto& smp : samples) {
        if (smp.t >= T_total - T_tail - 1e-9) tail.push_back(smp.s);
    }

    LimitClassification res;
    res.names.reserve(candidates.size());
    res.distances.reserve(candidates.size());
    for (const auto& cand : candidates) {
        double worst = 0.0;
        for (const auto& s : tail) {
            worst = std::max(worst, candidate_distance(cand, s, Gp));
        }
        res.names.push_back(cand.name);
        res.distances.push_back(worst);
        if (res.best < 0 || worst < res.best_distance) {
            res.best = static_cast<int>(res.distances.size()) - 1;
            res.best_distance = worst;
        }
    }
    for (std::size_t a = 0; a < tail.size(); ++a) {
        for (std::size_t b = a + 1; b < tail.size(); ++b) {
            res.tail_diameter =
                std::max(res.tail_diameter, norm_g(tail[a].y - tail[b].y, Gp));
        }
    }
    const bool pointlike =
        candidates[static_cast<std::size_t>(res.best)].kind == LimitCandidate::Kind::kEquatorPair;
    res.inconclusive =
        res.best_distance > tol || (pointlike && res.tail_diameter > tol);
    return res;
}

} // namespace pflow
