#include "dpc/reduce.hpp"

#include <Eigen/SVD>
#include <stdexcept>
#include <string>

namespace dpc {

Matrix pinv(const Matrix& A, double rtol) {
    if (!A.allFinite()) throw std::invalid_argument("pinv: non-finite entries");
    if (A.rows() == 0 || A.cols() == 0) return Matrix::Zero(A.cols(), A.rows());

    Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = rtol * (s.size() > 0 ? s(0) : 0.0);
    Vector sinv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) sinv(i) = 1.0 / s(i);
    }
    return svd.matrixV() * sinv.asDiagonal() * svd.matrixU().transpose();
}

ReducedData svd_reduce(const Matrix& Phi, const Matrix& Y_f, int keep, double rtol) {
    const int L = static_cast<int>(Phi.rows());
    const int np = static_cast<int>(Y_f.rows());
    const int T = static_cast<int>(Phi.cols());
    if (Y_f.cols() != T) throw std::invalid_argument("svd_reduce: column count mismatch");
    if (keep < 0) keep = L + np;
    if (T <= L + np) {
        throw std::invalid_argument("svd_reduce: requires T > Np + L, got T=" +
                                    std::to_string(T) + ", Np+L=" + std::to_string(L + np));
    }
    if (keep < 1 || keep > L + np) {
        throw std::invalid_argument("svd_reduce: keep must be in [1, L+Np]");
    }
    if (!Phi.allFinite() || !Y_f.allFinite()) {
        throw std::invalid_argument("svd_reduce: non-finite entries");
    }

    Matrix D(L + np, T);
    D << Phi, Y_f;

    Eigen::BDCSVD<Matrix> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw std::runtime_error("svd_reduce: SVD failed");

    ReducedData red;
    red.keep = keep;
    red.svals = svd.singularValues();
    red.V1 = svd.matrixV().leftCols(keep);
    red.sigma_tail = keep < red.svals.size() ? red.svals(keep) : 0.0;

    red.Phi_t = Phi * red.V1;
    red.Yf_t = Y_f * red.V1;

    // One SVD of Phi_t gives the pseudoinverse plus orthonormal bases of
    // range(Phi_t^T) and null(Phi_t).
    Eigen::BDCSVD<Matrix> sp(red.Phi_t, Eigen::ComputeThinU | Eigen::ComputeFullV);
    const Vector& s = sp.singularValues();
    const double cutoff = rtol * (s.size() > 0 ? s(0) : 0.0);
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) ++r;
    }
    red.rank = r;
    Vector sinv = Vector::Zero(s.size());
    for (int i = 0; i < r; ++i) sinv(i) = 1.0 / s(i);
    red.Phi_t_pinv =
        sp.matrixV().leftCols(s.size()) * sinv.asDiagonal() * sp.matrixU().transpose();
    red.range_basis = sp.matrixV().leftCols(r);
    red.null_basis = sp.matrixV().rightCols(keep - r);

    Matrix P = Matrix::Identity(keep, keep) - red.Phi_t_pinv * red.Phi_t;
    red.proj_null = 0.5 * (P + P.transpose());
    return red;
}

Matrix spc_matrix_full(const Matrix& Phi, const Matrix& Y_f, double rtol) {
    return Y_f * pinv(Phi, rtol);
}

PredictorMatrix spc_matrix(const Matrix& Phi, const Matrix& Y_f, const ReducedData& red,
                           double rtol) {
    PredictorMatrix pm;
    pm.M = red.Yf_t * red.Phi_t_pinv;
    pm.M_full = spc_matrix_full(Phi, Y_f, rtol);
    pm.full_vs_reduced_gap = (pm.M - pm.M_full).norm() / (1.0 + pm.M_full.norm());
    pm.rank_deficient = red.rank < red.Phi_t.rows();
    return pm;
}

Matrix lti_reduced_projector(const Matrix& U_p, const Matrix& Y_p, const Matrix& U_f,
                             const Matrix& V1, double rtol) {
    const int T = static_cast<int>(Y_p.cols());
    if (U_p.cols() != T || U_f.cols() != T || V1.rows() != T) {
        throw std::invalid_argument("lti_reduced_projector: column/row count mismatch");
    }
    Matrix Z(U_p.rows() + Y_p.rows() + U_f.rows(), T);
    Z << U_p, Y_p, U_f;

    // V1^T pinv(Z) Z V1 without forming the T x T projector.
    const Matrix Zp = pinv(Z, rtol);            // T x q
    const Matrix A = Zp.transpose() * V1;       // q x keep
    const Matrix B = Z * V1;                    // q x keep
    Matrix Pi = A.transpose() * B;
    return 0.5 * (Pi + Pi.transpose());
}

}  // namespace dpc
