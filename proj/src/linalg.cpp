#include "pflow/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cstdio>

namespace pflow {

Mat expm(const Mat& M) {
    if (M.rows() != M.cols()) {
        throw PreconditionError("expm: matrix must be square");
    }
    return M.exp();
}

StepMatrices exp_step(const Mat& A, double dt) {
    const Eigen::Index n = A.rows();
    if (n != A.cols()) {
        throw PreconditionError("exp_step: matrix must be square");
    }
    Mat block = Mat::Zero(2 * n, 2 * n);
    block.topLeftCorner(n, n) = A * dt;
    block.topRightCorner(n, n) = Mat::Identity(n, n) * dt;
    const Mat E = block.exp();
    StepMatrices out;
    out.E = E.topLeftCorner(n, n);
    out.J = E.topRightCorner(n, n);
    return out;
}

Mat lift_gram(const Mat& G) {
    const Eigen::Index n = G.rows();
    Mat Gp = Mat::Zero(n + 1, n + 1);
    Gp.topLeftCorner(n, n) = G;
    Gp(n, n) = 1.0;
    return Gp;
}

std::string format_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return std::string(buf);
}

} // namespace pflow
