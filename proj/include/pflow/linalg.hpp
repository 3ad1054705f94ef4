/**
 * @file linalg.hpp
 * @brief Shared dense linear-algebra helpers: matrix exponential, the exact
 *        exponential integral, weighted (Gram) geometry, deterministic RNG,
 *        and numeric formatting used by every output writer.
 */
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pflow {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Thrown when an input violates a documented precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Thrown when a computation degenerates numerically (rank loss, non-convergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Matrix exponential e^{M} via scaling-and-squaring with Pade
 *        approximants (relative error <= 1e-12 for ||M|| <= 50).
 */
Mat expm(const Mat& M);

/// Pair (e^{A dt}, \int_0^dt e^{A s} ds) computed from a single block exponential.
struct StepMatrices {
    Mat E; ///< e^{A dt}
    Mat J; ///< \int_0^dt e^{A s} ds  (valid for dt of either sign)
};

/**
 * @brief Exact one-step matrices for the affine system x' = A x + c.
 *
 * Uses exp([[A, I], [0, 0]] dt) whose top-left block is e^{A dt} and whose
 * top-right block is the exact integral \int_0^dt e^{A s} ds.
 */
StepMatrices exp_step(const Mat& A, double dt);

/// <x, y> under the symmetric positive definite Gram matrix G.
inline double dot_g(const Vec& x, const Vec& y, const Mat& G) {
    return x.dot(G * y);
}

/// Norm induced by the Gram matrix G.
inline double norm_g(const Vec& x, const Mat& G) {
    return std::sqrt(std::max(0.0, dot_g(x, x, G)));
}

/// block-diag(G, 1): the Gram matrix lifted by one extra coordinate.
Mat lift_gram(const Mat& G);

/**
 * @brief Deterministic random source. Every sampling site in the library goes
 *        through this wrapper so a scenario seed reproduces runs exactly.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

    std::uint64_t seed() const { return seed_; }

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(gen_);
    }

    int uniform_int(int lo, int hi) { // inclusive bounds
        std::uniform_int_distribution<int> d(lo, hi);
        return d(gen_);
    }

    double normal() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(gen_);
    }

    /// Uniformly distributed direction on the Euclidean unit sphere of R^dim.
    Vec unit_vector(int dim) {
        Vec v(dim);
        double n2 = 0.0;
        do {
            for (int i = 0; i < dim; ++i) v[i] = normal();
            n2 = v.squaredNorm();
        } while (n2 < 1e-12);
        return v / std::sqrt(n2);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 gen_;
};

/// Shortest practical float formatting shared by CSV/SVG/JSON writers (%.12g).
std::string format_num(double x);

} // namespace pflow
