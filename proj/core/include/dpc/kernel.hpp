#pragma once

#include <vector>

#include "dpc/hankel.hpp"
#include "dpc/types.hpp"

namespace dpc {

/// Per-coordinate widths eta_1..eta_d of a diagonal Gaussian kernel.
struct KernelWidths {
    Vector eta;

    int dim() const { return static_cast<int>(eta.size()); }
    void validate() const;
};

/// Pairwise kernel evaluations over the trajectory columns, K[i][j] = k(z_i, z_j).
struct GramMatrix {
    Matrix K;        // T x T, symmetric, unit diagonal
    Matrix centers;  // d x T trajectory columns z_1..z_T
    KernelWidths widths;
};

/// exp(-1/2 (z1-z2)^T diag(eta)^-1 (z1-z2)).
double gauss_k(const Vector& z1, const Vector& z2, const KernelWidths& w);

GramMatrix gram(const HankelSet& hs, const KernelWidths& w);

/// Kernel vector (k(z, c_1), ..., k(z, c_T)) against the columns of `centers`.
Vector kvec(const Vector& z, const Matrix& centers, const KernelWidths& w);

/// Jacobian of kvec with respect to z; row i = -k(z, c_i) * ((z - c_i) ./ eta)^T.
Matrix kvec_jacobian(const Vector& z, const Matrix& centers, const KernelWidths& w);

/// Per-coordinate variance width heuristic: eta_i = scale * d * var_i(z),
/// floored away from zero for constant coordinates.
KernelWidths variance_widths(const Matrix& trajectories, double scale);

/// Grid search: pick the width set whose least-squares multi-step predictor,
/// fit on the training columns, has the lowest Frobenius prediction error on
/// the validation columns. Ties broken by first occurrence.
KernelWidths tune_widths(const HankelSet& train, const HankelSet& val,
                         const std::vector<KernelWidths>& grid,
                         std::vector<double>* scores = nullptr);

}  // namespace dpc
