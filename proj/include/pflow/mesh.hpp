/**
 * @file mesh.hpp
 * @brief Cell decompositions of invariant spheres and circles, chain
 *        components of the sphere dynamics over such meshes (with
 *        equator/central classification and antipodal pairing), and
 *        classification of trajectory limit sets against closed-form and
 *        computed invariant-set candidates.
 */
#pragma once

#include "pflow/reach.hpp"
#include "pflow/sphere.hpp"

namespace pflow {

/**
 * @brief Finite cell decomposition of a sphere (geodesic icosahedral
 *        triangulation of a 2-sphere) or of an invariant great circle.
 *        Cells are represented by their centers, unit vectors under the
 *        supplied Gram matrix; `diameter` bounds the chordal size of every
 *        cell.
 */
class SphereMesh {
public:
    /// Geodesic mesh of the unit 2-sphere in R^3: the dual cells of an
    /// icosahedron subdivided `subdivisions` >= 1 times (10 * 4^k + 2 cells,
    /// centered on the triangulation vertices; the coordinate-axis points are
    /// exact cell centers).
    static SphereMesh icosphere(int subdivisions, const Mat& gram);
    /// `segments` equal arcs of the unit circle spanned by the two
    /// gram-orthonormal columns of `plane_basis` (ambient dimension = rows).
    static SphereMesh circle(const Mat& plane_basis, int segments, const Mat& gram);

    int cell_count() const { return static_cast<int>(centers_.size()); }
    const Vec& center(int i) const { return centers_[static_cast<std::size_t>(i)]; }
    double diameter() const { return diameter_; }
    const Mat& gram() const { return gram_; }

    /// Cell whose center is chordally nearest to s (s need not be unit).
    int locate(const Vec& s) const;

private:
    SphereMesh() = default;
    std::vector<Vec> centers_;
    double diameter_ = 0.0;
    Mat gram_;
};

struct SphereGraphParams {
    double tau = 2.0;        ///< transition time per edge
    double eps_factor = 1.5; ///< chain jump radius in units of mesh diameters (>= 1)
};

/// One chain component of the sphere dynamics over a mesh.
struct SphereChainSet {
    std::vector<int> cells;     ///< mesh cell indices, sorted
    bool equator = false;       ///< all cells lie on the invariant sphere at r = 0
    int antipodal_partner = -1; ///< index of the antipodal component (possibly itself)
    Vec representative;         ///< center of one member cell
};

/**
 * @brief Chain components of the induced sphere system over the mesh:
 *        strongly connected components (with at least one edge) of the graph
 *        whose edges follow the time-tau sphere flow of each cell center
 *        under each extreme control value and 0, inflated by
 *        eps = eps_factor * mesh diameter.  Components are classified as
 *        equator sets (every center within 3 mesh diameters of r = 0) and
 *        paired with their antipodal copies, sorted by descending size.
 */
std::vector<SphereChainSet> sphere_chain_sets(const LinearSystem& sys,
                                              const SpectralData& sd,
                                              const SphereMesh& mesh,
                                              const SphereGraphParams& params);

/// Candidate invariant set a trajectory limit can be matched against.
struct LimitCandidate {
    enum class Kind {
        kEquatorPair,      ///< antipodal equilibrium pair on the equator
        kEquatorSubsphere, ///< whole unit sphere of one Lyapunov space, at r = 0
        kPointCloudPair    ///< finite +/- symmetric point cloud (chart images)
    };
    std::string name;
    Kind kind = Kind::kEquatorPair;
    Vec point;           ///< kEquatorPair: one of the two points (unit, r = 0)
    Mat projector;       ///< kEquatorSubsphere: Lyapunov-space projector on R^n
    Mat cloud;           ///< kPointCloudPair: unit columns in R^{n+1}
    double resolution = 0.0; ///< sampling resolution of the representation
};

/// Exact chordal distance from a sphere point to the candidate set.
double candidate_distance(const LimitCandidate& cand, const SpherePoint& s,
                          const Mat& lifted_gram);

/// One candidate per Lyapunov space of A: its unit sphere inside the equator
/// (an antipodal pair when the space is one-dimensional).
std::vector<LimitCandidate> equator_candidates(const LinearSystem& sys,
                                               const SpectralData& sd);

/// Central candidate for the given control: the +/- chart images of the
/// unique bounded solution of the hyperbolic part, sampled over one period
/// (a single pair for constant controls).
LimitCandidate central_candidate(const LinearSystem& sys, const SpectralData& sd,
                                 const ControlSignal& u);

/// Central candidate from a computed control-set approximation: the +/- chart
/// images of all cell centers.
LimitCandidate central_candidate_from_cells(const BoxGrid& grid, const CellSet& cells,
                                            const Mat& lifted_gram);

/// Outcome of matching a trajectory tail against candidate limit sets.
struct LimitClassification {
    std::vector<std::string> names;  ///< candidate names, input order
    std::vector<double> distances;   ///< sup over the tail of the set distance
    int best = -1;                   ///< index of the nearest candidate
    double best_distance = 0.0;
    double tail_diameter = 0.0;      ///< chordal diameter of the sampled tail
    bool inconclusive = true;
};

/**
 * @brief Classify the limit set of the sphere trajectory from s0 under u:
 *        sample the tail [T_total - T_tail, T_total], report the distance
 *        from the tail to every candidate, and pick the nearest.  The match
 *        is inconclusive when the nearest distance exceeds `tol`, or when the
 *        tail has not settled (diameter > tol) while the matched candidate is
 *        a single antipodal pair.
 */
LimitClassification limit_set(const LinearSystem& sys, const SpectralData& sd,
                              const SpherePoint& s0, const ControlSignal& u,
                              double T_tail, double T_total,
                              const std::vector<LimitCandidate>& candidates,
                              double tol);

} // namespace pflow
