#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <functional>

#include "ratchetlab/errors.hpp"
#include "ratchetlab/tolerances.hpp"

namespace ratchetlab {

using Cplx = std::complex<double>;
using Mat  = Eigen::MatrixXcd;
using Vec  = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using Eigen::Index;

namespace detail {
inline double plog2p(double p) { return p > 0 ? -p * std::log2(p) : 0.0; }
}

inline double hermiticity_error(const Mat& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

struct HermEig {
    RVec values;  // ascending
    Mat vectors;  // columns; a = vectors * values.asDiagonal() * vectors'
};

inline HermEig hermitian_eig(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()));
    if (es.info() != Eigen::Success)
        throw NonConvergence("hermitian eigendecomposition failed", 0.0);
    return {es.eigenvalues(), es.eigenvectors()};
}

// f applied to the spectrum; eigenvalues within tol::eig_clamp of zero are
// clamped to zero before f sees them.
inline Mat hermitian_function(const Mat& a, const std::function<double(double)>& f) {
    HermEig e = hermitian_eig(a);
    RVec w(e.values.size());
    for (Index i = 0; i < w.size(); ++i) {
        double v = e.values(i);
        w(i) = f(std::abs(v) < tol::eig_clamp ? 0.0 : v);
    }
    return e.vectors * w.asDiagonal() * e.vectors.adjoint();
}

inline Mat matrix_sqrt_psd(const Mat& a) {
    return hermitian_function(a, [](double v) { return v > 0 ? std::sqrt(v) : 0.0; });
}

// Pseudo-inverse square root on the support.
inline Mat matrix_invsqrt_psd(const Mat& a) {
    return hermitian_function(a, [](double v) { return v > 0 ? 1.0 / std::sqrt(v) : 0.0; });
}

inline Mat support_projector(const Mat& a) {
    return hermitian_function(a, [](double v) { return v > 0 ? 1.0 : 0.0; });
}

inline double trace_norm(const Mat& a) {
    return Eigen::JacobiSVD<Mat>(a).singularValues().sum();
}

inline Mat kron(const Mat& a, const Mat& b) {
    Mat c(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            c.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return c;
}

// Partial trace of an operator on H_A (x) H_B; keep = 0 keeps A, 1 keeps B.
inline Mat partial_trace(const Mat& ab, Index dim_a, Index dim_b, int keep) {
    if (ab.rows() != dim_a * dim_b || ab.cols() != dim_a * dim_b)
        throw DimensionMismatch("partial_trace: operator is not dim_a*dim_b square");
    if (keep == 0) {
        Mat a = Mat::Zero(dim_a, dim_a);
        for (Index i = 0; i < dim_a; ++i)
            for (Index j = 0; j < dim_a; ++j)
                for (Index k = 0; k < dim_b; ++k)
                    a(i, j) += ab(i * dim_b + k, j * dim_b + k);
        return a;
    }
    Mat b = Mat::Zero(dim_b, dim_b);
    for (Index k = 0; k < dim_b; ++k)
        for (Index l = 0; l < dim_b; ++l)
            for (Index i = 0; i < dim_a; ++i)
                b(k, l) += ab(i * dim_b + k, i * dim_b + l);
    return b;
}

}  // namespace ratchetlab
