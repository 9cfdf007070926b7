#include "dpc/predictor.hpp"

#include <stdexcept>

namespace dpc {

Vector predict(const PredictionRequest& req) {
    if (!req.basis || !req.M) throw std::invalid_argument("predict: basis and M required");
    Vector z(req.x_ini.size() + req.u_future.size());
    z << req.x_ini, req.u_future;
    if (z.size() != req.basis->d) throw std::invalid_argument("predict: dimension mismatch");
    return req.M->M * req.basis->evaluate(z);
}

PredictorMatrix fit_theta(const Matrix& Phi, const Matrix& Y_f, double ridge) {
    if (ridge < 0.0) throw std::invalid_argument("fit_theta: ridge must be >= 0");
    if (Phi.cols() != Y_f.cols()) throw std::invalid_argument("fit_theta: column count mismatch");

    const int L = static_cast<int>(Phi.rows());
    PredictorMatrix pm;
    Matrix PPt = Phi * Phi.transpose();
    if (ridge > 0.0) PPt += ridge * Matrix::Identity(L, L);

    Eigen::LDLT<Matrix> ldlt(PPt);
    bool usable = ldlt.info() == Eigen::Success;
    if (usable) {
        const Vector dvec = ldlt.vectorD();
        const double dmax = dvec.cwiseAbs().maxCoeff();
        usable = dmax > 0.0 && dvec.minCoeff() > 1e-14 * dmax;
    }
    if (usable) {
        pm.M = ldlt.solve(Phi * Y_f.transpose()).transpose();
    } else {
        // Minimum-norm solution for rank-deficient Phi.
        pm.M = Y_f * pinv(Phi);
        pm.rank_deficient = true;
    }
    pm.M_full = pm.M;
    return pm;
}

}  // namespace dpc
