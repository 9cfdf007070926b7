#pragma once

#include <vector>

#include "dpc/basis.hpp"
#include "dpc/kernel.hpp"
#include "dpc/types.hpp"

namespace dpc {

struct LassoConfig {
    double alpha = 0.01;  // group-sparsity weight
    int T_max = 5000;     // max coordinate-descent sweeps
    double tol = 1e-8;    // max column-norm change to declare convergence
};

struct LassoResult {
    Matrix theta;                        // Np x T
    std::vector<int> active;             // sorted active column indices
    int L = 0;                           // |active|
    std::vector<double> objective_trace; // per-sweep objective values
    int sweeps = 0;
    bool converged = false;
};

/// Multi-task group LASSO on the Gram matrix,
///   min_Theta 1/(2T) ||Y_f - Theta K||_F^2 + alpha sum_j ||Theta[:,j]||_2,
/// solved by cyclic block coordinate descent with exact group soft-threshold
/// column updates.
LassoResult group_lasso(const GramMatrix& gm, const Matrix& Y_f, const LassoConfig& cfg);

/// The smallest alpha for which Theta* = 0, max_j ||(1/T) Y_f K[j,:]^T||_2.
double lasso_alpha_max(const Matrix& K, const Matrix& Y_f);

/// Objective of the group LASSO problem at Theta.
double lasso_objective(const Matrix& K, const Matrix& Y_f, const Matrix& theta, double alpha);

/// Keep the active rows of K as the reduced basis: Phi = K[A, :],
/// phi_bar(z) = (k(z, z_i))_{i in A}.
BasisModel extract_basis(const GramMatrix& gm, const LassoResult& result);

/// Remark-style width refinement: centers stay fixed, widths are re-selected
/// by validation grid search and Phi is re-evaluated on the training columns.
BasisModel refit_widths(const BasisModel& basis, const HankelSet& train, const HankelSet& val,
                        const std::vector<KernelWidths>& grid,
                        std::vector<double>* scores = nullptr);

}  // namespace dpc
