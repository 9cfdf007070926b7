#pragma once

#include "dpc/basis.hpp"
#include "dpc/reduce.hpp"
#include "dpc/types.hpp"

namespace dpc {

struct PredictionRequest {
    Vector x_ini;
    Vector u_future;  // N*m stacked inputs
    const BasisModel* basis = nullptr;
    const PredictorMatrix* M = nullptr;
};

/// Multi-step NARX prediction M * phi_bar(col(x_ini, u_future)).
Vector predict(const PredictionRequest& req);

/// Least-squares fit M = Y_f Phi^T (Phi Phi^T + ridge I)^-1. With ridge = 0
/// and singular Phi Phi^T this falls back to the minimum-norm pseudoinverse
/// solution (flagged in the result).
PredictorMatrix fit_theta(const Matrix& Phi, const Matrix& Y_f, double ridge = 0.0);

}  // namespace dpc
