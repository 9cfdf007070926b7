#include "dpc/group_lasso.hpp"

#include <cmath>
#include <stdexcept>

namespace dpc {

double lasso_alpha_max(const Matrix& K, const Matrix& Y_f) {
    const int T = static_cast<int>(K.cols());
    double amax = 0.0;
    for (int j = 0; j < T; ++j) {
        amax = std::max(amax, (Y_f * K.row(j).transpose()).norm() / T);
    }
    return amax;
}

double lasso_objective(const Matrix& K, const Matrix& Y_f, const Matrix& theta, double alpha) {
    const int T = static_cast<int>(K.cols());
    double obj = 0.5 * (Y_f - theta * K).squaredNorm() / T;
    for (int j = 0; j < theta.cols(); ++j) obj += alpha * theta.col(j).norm();
    return obj;
}

LassoResult group_lasso(const GramMatrix& gm, const Matrix& Y_f, const LassoConfig& cfg) {
    const Matrix& K = gm.K;
    const int T = static_cast<int>(K.cols());
    const int np = static_cast<int>(Y_f.rows());
    if (cfg.alpha <= 0.0) throw std::invalid_argument("group_lasso: alpha must be positive");
    if (cfg.T_max < 1) throw std::invalid_argument("group_lasso: T_max must be >= 1");
    if (K.rows() != T) throw std::invalid_argument("group_lasso: K must be square");
    if (Y_f.cols() != T) throw std::invalid_argument("group_lasso: Y_f column count mismatch");
    if (!K.allFinite() || !Y_f.allFinite()) {
        throw std::invalid_argument("group_lasso: non-finite entries in inputs");
    }

    // a_j = (1/T) ||K[j,:]||^2; zero rows never activate.
    Vector a(T);
    for (int j = 0; j < T; ++j) a(j) = K.row(j).squaredNorm() / T;

    LassoResult res;
    res.theta = Matrix::Zero(np, T);
    Matrix R = Y_f;  // residual Y_f - Theta K, maintained incrementally

    for (int sweep = 0; sweep < cfg.T_max; ++sweep) {
        double max_change = 0.0;
        for (int j = 0; j < T; ++j) {
            if (a(j) <= 0.0) continue;
            const Vector b_old = res.theta.col(j);
            // c_j = (1/T) (R + b_old K[j,:]) K[j,:]^T
            Vector c = R * K.row(j).transpose() / T + a(j) * b_old;
            const double cn = c.norm();
            Vector b_new;
            if (cn <= cfg.alpha) {
                b_new = Vector::Zero(np);
            } else {
                b_new = c * ((cn - cfg.alpha) / (a(j) * cn));
            }
            const Vector db = b_new - b_old;
            const double change = db.norm();
            if (change > 0.0) {
                R.noalias() -= db * K.row(j);
                res.theta.col(j) = b_new;
            }
            max_change = std::max(max_change, change);
        }
        // Refresh the residual periodically to stop drift from rank-1 updates.
        if ((sweep + 1) % 64 == 0) R = Y_f - res.theta * K;

        res.objective_trace.push_back(lasso_objective(K, Y_f, res.theta, cfg.alpha));
        res.sweeps = sweep + 1;
        if (max_change < cfg.tol) {
            res.converged = true;
            break;
        }
    }

    for (int j = 0; j < T; ++j) {
        if ((res.theta.col(j).array() != 0.0).any()) res.active.push_back(j);
    }
    res.L = static_cast<int>(res.active.size());
    return res;
}

BasisModel extract_basis(const GramMatrix& gm, const LassoResult& result) {
    if (result.active.empty()) {
        throw std::invalid_argument(
            "extract_basis: empty active set; decrease alpha to select basis functions");
    }
    BasisModel b;
    b.kind = BasisKind::KernelActiveSet;
    b.widths = gm.widths;
    b.active = result.active;
    b.L = result.L;
    b.d = static_cast<int>(gm.centers.rows());
    b.centers = Matrix(b.d, b.L);
    b.Phi = Matrix(b.L, gm.K.cols());
    for (int i = 0; i < b.L; ++i) {
        b.centers.col(i) = gm.centers.col(result.active[i]);
        b.Phi.row(i) = gm.K.row(result.active[i]);
    }
    return b;
}

BasisModel refit_widths(const BasisModel& basis, const HankelSet& train, const HankelSet& val,
                        const std::vector<KernelWidths>& grid,
                        std::vector<double>* scores) {
    if (basis.kind != BasisKind::KernelActiveSet) {
        throw std::invalid_argument("refit_widths: kernel-kind basis required");
    }
    if (grid.empty()) throw std::invalid_argument("refit_widths: empty width grid");

    const Matrix Z_tr = trajectory_matrix(train);
    const Matrix Z_val = trajectory_matrix(val);
    const int T = static_cast<int>(Z_tr.cols());
    const int Tv = static_cast<int>(Z_val.cols());

    int best = -1;
    double best_score = kInf;
    if (scores) scores->assign(grid.size(), kInf);

    for (std::size_t g = 0; g < grid.size(); ++g) {
        const KernelWidths& w = grid[g];
        w.validate();

        Matrix Phi(basis.L, T);
        for (int j = 0; j < T; ++j) Phi.col(j) = kvec(Z_tr.col(j), basis.centers, w);
        const Matrix PPt = Phi * Phi.transpose();
        Eigen::LDLT<Matrix> ldlt(PPt);
        const Vector dvec = ldlt.vectorD();
        const double dmax = dvec.cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || dmax <= 0.0 ||
            dvec.minCoeff() <= 1e-12 * dmax) {
            continue;
        }
        const Matrix Theta = ldlt.solve(Phi * train.Y_f.transpose()).transpose();

        Matrix Phi_val(basis.L, Tv);
        for (int j = 0; j < Tv; ++j) Phi_val.col(j) = kvec(Z_val.col(j), basis.centers, w);
        const double score = (val.Y_f - Theta * Phi_val).norm();
        if (scores) (*scores)[g] = score;
        if (score < best_score) {
            best_score = score;
            best = static_cast<int>(g);
        }
    }

    if (best < 0) {
        throw std::runtime_error(
            "refit_widths: all candidates produce a singular Phi*Phi^T; "
            "consider a ridge fallback or a different width grid");
    }

    BasisModel refined = basis;
    refined.widths = grid[best];
    refined.Phi = Matrix(basis.L, T);
    for (int j = 0; j < T; ++j) refined.Phi.col(j) = kvec(Z_tr.col(j), basis.centers, refined.widths);
    return refined;
}

}  // namespace dpc
