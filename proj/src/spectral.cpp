#include "pflow/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

namespace pflow {

namespace {

struct Cluster {
    double real_part = 0.0;    // multiplicity-weighted mean real part
    int multiplicity = 0;      // algebraic multiplicity (complex pairs count 2)
    std::vector<std::complex<double>> roots; // one entry per eigenvalue
};

/// Group eigenvalues by real part with the given tolerance; decreasing order.
std::vector<Cluster> cluster_eigenvalues(const Eigen::VectorXcd& eig, double tol) {
    std::vector<std::complex<double>> vals(eig.data(), eig.data() + eig.size());
    std::sort(vals.begin(), vals.end(), [](const auto& a, const auto& b) {
        return a.real() > b.real();
    });
    std::vector<Cluster> clusters;
    for (const auto& v : vals) {
        if (!clusters.empty() &&
            std::abs(clusters.back().real_part - v.real()) <= tol) {
            Cluster& c = clusters.back();
            c.real_part = (c.real_part * c.multiplicity + v.real()) /
                          (c.multiplicity + 1);
            c.multiplicity += 1;
            c.roots.push_back(v);
        } else {
            clusters.push_back({v.real(), 1, {v}});
        }
    }
    return clusters;
}

/// Real polynomial q(A) whose roots are the cluster's eigenvalues (with
/// multiplicity).  Roots that agree to within the QR iteration's accuracy are
/// merged first: a defective eigenvalue comes back split by ~sqrt(machine
/// epsilon), and only the merged mean (accurate to machine epsilon) yields a
/// polynomial that annihilates the generalized eigenspace.  Complex means are
/// consumed together with their conjugate group as quadratic factors so the
/// product stays real.
Mat cluster_polynomial(const Mat& A, const Cluster& c) {
    const Eigen::Index n = A.rows();
    const double snap = 1e-5 * std::max(1.0, A.norm());
    struct Group {
        std::complex<double> sum;
        int count = 0;
    };
    std::vector<Group> groups;
    for (const auto& r : c.roots) {
        bool placed = false;
        for (auto& g : groups) {
            if (std::abs(r - g.sum / static_cast<double>(g.count)) <= snap) {
                g.sum += r;
                g.count += 1;
                placed = true;
                break;
            }
        }
        if (!placed) groups.push_back({r, 1});
    }
    Mat Q = Mat::Identity(n, n);
    std::vector<char> used(groups.size(), 0);
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        if (used[gi]) continue;
        used[gi] = 1;
        const std::complex<double> mean =
            groups[gi].sum / static_cast<double>(groups[gi].count);
        if (std::abs(mean.imag()) <= snap) {
            for (int k = 0; k < groups[gi].count; ++k) {
                Q = (A - mean.real() * Mat::Identity(n, n)) * Q;
            }
        } else {
            for (std::size_t gj = gi + 1; gj < groups.size(); ++gj) {
                if (used[gj]) continue;
                const std::complex<double> mj =
                    groups[gj].sum / static_cast<double>(groups[gj].count);
                if (std::abs(mj - std::conj(mean)) <= snap) {
                    used[gj] = 1;
                    break;
                }
            }
            const double re = mean.real(), im = mean.imag();
            for (int k = 0; k < groups[gi].count; ++k) {
                Q = (A * A - 2.0 * re * A +
                     (re * re + im * im) * Mat::Identity(n, n)) * Q;
            }
        }
    }
    return Q;
}

/// Basis of the d-dimensional kernel of Q: the d right-singular directions
/// with smallest singular values (dimension is known in advance).
Mat kernel_basis(const Mat& Q, int d) {
    Eigen::JacobiSVD<Mat> svd(Q, Eigen::ComputeFullV);
    return svd.matrixV().rightCols(d); // directions of the d smallest singular values
}

} // namespace

Mat adapted_gram(std::vector<Mat>& bases) {
    if (bases.empty()) throw PreconditionError("adapted_gram: no subspaces");
    const Eigen::Index n = bases.front().rows();
    Eigen::Index total = 0;
    for (auto& W : bases) {
        if (W.rows() != n || W.cols() == 0) {
            throw PreconditionError("adapted_gram: inconsistent basis block");
        }
        // Orthonormalize within the space (leaves already-orthonormal
        // bases essentially unchanged up to sign conventions).
        Eigen::HouseholderQR<Mat> qr(W);
        Mat Qfull = qr.householderQ() * Mat::Identity(n, W.cols());
        // Fix signs so the diagonal of R is positive (determinism).
        Mat R = qr.matrixQR().topRows(W.cols()).triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < W.cols(); ++j) {
            if (R(j, j) < 0) Qfull.col(j) = -Qfull.col(j);
        }
        W = Qfull;
        total += W.cols();
    }
    if (total != n) {
        throw PreconditionError("adapted_gram: subspaces must sum to full dimension");
    }
    Mat W(n, n);
    Eigen::Index col = 0;
    for (const auto& b : bases) {
        W.middleCols(col, b.cols()) = b;
        col += b.cols();
    }
    Eigen::FullPivLU<Mat> lu(W);
    if (!lu.isInvertible()) {
        throw NumericalError("adapted_gram: combined basis is singular");
    }
    Mat G = (W * W.transpose()).inverse();
    G = 0.5 * (G + G.transpose()); // exact symmetry
    // Snap to identity when the combined basis is orthogonal.
    if ((G - Mat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12) {
        G = Mat::Identity(n, n);
    }
    return G;
}

SpectralData spectral_decompose(const Mat& A, double group_tol) {
    if (A.rows() != A.cols() || A.rows() == 0) {
        throw PreconditionError("spectral_decompose: A must be square and nonempty");
    }
    SpectralData out;
    out.A = A;
    out.group_tol = group_tol;

    Eigen::EigenSolver<Mat> solver(A, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("spectral_decompose: eigenvalue iteration failed");
    }
    std::vector<Cluster> clusters = cluster_eigenvalues(solver.eigenvalues(), group_tol);

    for (std::size_t i = 0; i + 1 < clusters.size(); ++i) {
        const double gap = clusters[i].real_part - clusters[i + 1].real_part;
        if (gap > group_tol && gap < 2.0 * group_tol) {
            out.warnings.push_back(
                "ambiguous exponent clustering: gap " + format_num(gap) +
                " between " + format_num(clusters[i].real_part) + " and " +
                format_num(clusters[i + 1].real_part));
        }
    }

    std::vector<Mat> bases;
    for (const auto& c : clusters) {
        Mat Q = cluster_polynomial(A, c);
        bases.push_back(kernel_basis(Q, c.multiplicity));
    }
    out.gram = adapted_gram(bases);
    out.spaces = std::move(bases);
    for (std::size_t i = 0; i < clusters.size(); ++i) {
        double lam = clusters[i].real_part;
        if (std::abs(lam) < group_tol) {
            lam = 0.0;
            out.center_index = static_cast<int>(i);
        }
        out.exponents.push_back(lam);
    }

    // Verify A-invariance of every space.
    for (int i = 0; i < out.space_count(); ++i) {
        const Mat AW = A * out.spaces[i];
        const Mat resid = AW - out.proj_space(i) * AW;
        const double scale = std::max(1.0, AW.norm());
        if (resid.norm() > 1e-8 * scale) {
            throw NumericalError(
                "spectral_decompose: Lyapunov space " + std::to_string(i) +
                " failed the invariance check (residual " +
                format_num(resid.norm() / scale) + ")");
        }
    }
    return out;
}

Mat SpectralData::proj_space(int i) const {
    return spaces[i] * spaces[i].transpose() * gram;
}

Mat SpectralData::proj_center() const {
    if (center_index < 0) return Mat::Zero(n(), n());
    return proj_space(center_index);
}

Mat SpectralData::proj_hyperbolic() const {
    Mat P = Mat::Zero(n(), n());
    for (int i = 0; i < space_count(); ++i) {
        if (i != center_index) P += proj_space(i);
    }
    return P;
}

Mat SpectralData::proj_plus() const {
    Mat P = Mat::Zero(n(), n());
    for (int i = 0; i < space_count(); ++i) {
        if (exponents[i] > 0.0) P += proj_space(i);
    }
    return P;
}

Mat SpectralData::proj_minus() const {
    Mat P = Mat::Zero(n(), n());
    for (int i = 0; i < space_count(); ++i) {
        if (i != center_index && exponents[i] < 0.0) P += proj_space(i);
    }
    return P;
}

double SpectralData::min_hyperbolic_rate() const {
    double best = 0.0;
    bool found = false;
    for (int i = 0; i < space_count(); ++i) {
        if (i == center_index) continue;
        const double a = std::abs(exponents[i]);
        if (!found || a < best) {
            best = a;
            found = true;
        }
    }
    if (!found) {
        throw PreconditionError("min_hyperbolic_rate: no nonzero exponents");
    }
    return best;
}

Mat SpectralData::restricted(int i) const {
    // Bases are gram-orthonormal, so W^T G maps back to coordinates.
    return spaces[i].transpose() * gram * A * spaces[i];
}

int SpectralData::index_of_exponent(double value) const {
    int best = 0;
    double dist = std::abs(exponents[0] - value);
    for (int i = 1; i < space_count(); ++i) {
        const double d = std::abs(exponents[i] - value);
        if (d < dist - 1e-15) {
            dist = d;
            best = i;
        }
    }
    return best;
}

} // namespace pflow
