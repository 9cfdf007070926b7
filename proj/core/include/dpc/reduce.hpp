#pragma once

#include "dpc/types.hpp"

namespace dpc {

/// SVD-reduced data matrices and the null-space projector behind the
/// Pi-type regularizer. With D = [Phi; Y_f] = U Sigma V^T and V1 the first
/// `keep` right singular vectors:
///   Phi_t = Phi V1, Yf_t = Y_f V1, proj_null = I - pinv(Phi_t) Phi_t.
struct ReducedData {
    Matrix V1;           // T x keep, orthonormal columns
    Matrix Phi_t;        // L x keep
    Matrix Yf_t;         // Np x keep
    Matrix Phi_t_pinv;   // keep x L
    Matrix proj_null;    // keep x keep, symmetric idempotent
    Vector svals;        // singular values of the stacked matrix
    Matrix range_basis;  // keep x r, orthonormal basis of range(Phi_t^T)
    Matrix null_basis;   // keep x (keep - r), orthonormal basis of null(Phi_t)
    int keep = 0;
    int rank = 0;            // numerical rank of Phi_t
    double sigma_tail = 0.0; // largest singular value beyond the kept block
};

/// Moore-Penrose pseudoinverse via SVD with cutoff rtol * sigma_max.
Matrix pinv(const Matrix& A, double rtol = 1e-12);

/// Reduce [Phi; Y_f] by its leading right singular vectors. `keep` defaults
/// to L + Np; passing a smaller value (e.g. the row count of the identity
/// basis for the LTI reduced problem) truncates further.
ReducedData svd_reduce(const Matrix& Phi, const Matrix& Y_f, int keep = -1,
                       double rtol = 1e-12);

/// Multi-step least-squares predictor matrix M = Y_f pinv(Phi).
struct PredictorMatrix {
    Matrix M;                        // the (reduced-form) matrix cached for online use
    Matrix M_full;                   // full-data computation, for cross-checking
    double full_vs_reduced_gap = 0;  // ||M - M_full||_F / (1 + ||M_full||_F)
    bool rank_deficient = false;     // Phi not full row rank: minimum-norm solution
};

PredictorMatrix spc_matrix(const Matrix& Phi, const Matrix& Y_f, const ReducedData& red,
                           double rtol = 1e-12);
Matrix spc_matrix_full(const Matrix& Phi, const Matrix& Y_f, double rtol = 1e-12);

/// Reduced projector V1^T pinv(Z) Z V1 with Z = [U_p; Y_p; U_f] for the
/// LTI reduced problem; its size is cols(V1)^2, independent of T.
Matrix lti_reduced_projector(const Matrix& U_p, const Matrix& Y_p, const Matrix& U_f,
                             const Matrix& V1, double rtol = 1e-12);

}  // namespace dpc
