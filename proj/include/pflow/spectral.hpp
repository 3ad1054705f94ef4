/**
 * @file spectral.hpp
 * @brief Spectral machinery for a real matrix A: Lyapunov exponents (distinct
 *        real parts of eigenvalues), the associated real generalized
 *        eigenspaces ("Lyapunov spaces"), the adapted inner product that makes
 *        those spaces pairwise orthogonal, and the spectral projections used
 *        by the flow decomposition.
 */
#pragma once

#include "pflow/linalg.hpp"

namespace pflow {

/// Default clustering tolerance: eigenvalue real parts closer than this are
/// treated as one Lyapunov exponent, and |lambda| below it counts as zero.
inline constexpr double kGroupTol = 1e-8;

/**
 * @brief Result of spectral_decompose.
 *
 * Exponents are strictly decreasing. spaces[i] holds a basis of the Lyapunov
 * space L(exponents[i]) as columns; after construction the bases are
 * orthonormal with respect to gram(), and distinct spaces are gram-orthogonal.
 * Dimensions sum to n.
 */
class SpectralData {
public:
    Mat A;                             ///< the matrix that was decomposed
    std::vector<double> exponents;     ///< distinct real parts, decreasing
    std::vector<Mat> spaces;           ///< spaces[i]: n x d_i basis columns
    int center_index = -1;             ///< i with |exponents[i]| < group_tol, else -1
    Mat gram;                          ///< adapted Gram matrix G (SPD)
    std::vector<std::string> warnings; ///< e.g. near-ambiguous clustering
    double group_tol = kGroupTol;

    int n() const { return static_cast<int>(A.rows()); }
    int space_count() const { return static_cast<int>(exponents.size()); }
    int dim(int i) const { return static_cast<int>(spaces[i].cols()); }

    /// Projection onto spaces[i] along the other Lyapunov spaces.
    Mat proj_space(int i) const;
    /// Projection onto the center space (zero matrix if there is none).
    Mat proj_center() const;
    /// Projection onto the sum of all nonzero-exponent spaces.
    Mat proj_hyperbolic() const;
    /// Projection onto the sum of positive-exponent spaces.
    Mat proj_plus() const;
    /// Projection onto the sum of negative-exponent spaces.
    Mat proj_minus() const;

    /// Smallest |exponent| over nonzero exponents; throws if all are zero.
    double min_hyperbolic_rate() const;

    /// Representation of A restricted to spaces[i] in its stored basis
    /// (d_i x d_i).  A * spaces[i] == spaces[i] * restricted(i).
    Mat restricted(int i) const;

    /// Index of the exponent closest to value (ties -> larger exponent).
    int index_of_exponent(double value) const;
};

/**
 * @brief Decompose A into Lyapunov exponents and Lyapunov spaces.
 *
 * Eigenvalues come from an iterative real-Schur reduction; real parts are
 * clustered with tolerance group_tol.  Each Lyapunov space is the real
 * generalized eigenspace for its cluster, recovered as the kernel of the real
 * polynomial with the cluster's eigenvalues as roots (dimension fixed by the
 * algebraic multiplicity).  A-invariance of every space is verified to
 * 1e-8 * ||A * basis||; failure throws NumericalError.  Real-part gaps inside
 * (group_tol, 2*group_tol) are recorded as warnings.
 *
 * The adapted Gram matrix is built by orthonormalizing each space internally
 * (Euclidean QR) and setting G = (W W^T)^{-1} for the combined basis W, which
 * makes the stored bases G-orthonormal and distinct spaces G-orthogonal.  If
 * the spaces are already pairwise Euclidean-orthogonal, G is the identity.
 */
SpectralData spectral_decompose(const Mat& A, double group_tol = kGroupTol);

/**
 * @brief Gram matrix adapted to a full direct-sum family of subspaces.
 *
 * bases[i] are n x d_i blocks whose columns together span R^n.  Returns the
 * SPD matrix G under which the (per-space Euclidean-orthonormalized) bases are
 * orthonormal and distinct spaces orthogonal; bases are replaced by the
 * orthonormalized versions.  Identity when already Euclidean-orthogonal.
 */
Mat adapted_gram(std::vector<Mat>& bases);

} // namespace pflow
