#include "dpc/kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpc {

void KernelWidths::validate() const {
    if (eta.size() == 0) throw std::invalid_argument("KernelWidths: empty widths");
    if ((eta.array() <= 0.0).any()) {
        throw std::invalid_argument("KernelWidths: all widths must be positive");
    }
}

namespace {

// Shared scalar kernel evaluation; every Gram/kvec/basis entry goes through
// this one loop so that re-evaluations are bit-identical.
double gauss_eval(const double* a, const double* b, const double* eta, int d) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) {
        const double diff = a[i] - b[i];
        q += diff * diff / eta[i];
    }
    return std::exp(-0.5 * q);
}

}  // namespace

double gauss_k(const Vector& z1, const Vector& z2, const KernelWidths& w) {
    w.validate();
    if (z1.size() != z2.size() || z1.size() != w.eta.size()) {
        throw std::invalid_argument("gauss_k: dimension mismatch");
    }
    return gauss_eval(z1.data(), z2.data(), w.eta.data(), static_cast<int>(z1.size()));
}

GramMatrix gram(const HankelSet& hs, const KernelWidths& w) {
    w.validate();
    GramMatrix g;
    g.centers = trajectory_matrix(hs);
    g.widths = w;
    const int d = static_cast<int>(g.centers.rows());
    const int T = static_cast<int>(g.centers.cols());
    if (w.eta.size() != d) throw std::invalid_argument("gram: widths dimension mismatch");

    g.K = Matrix::Zero(T, T);
    for (int j = 0; j < T; ++j) {
        g.K(j, j) = 1.0;
        for (int i = 0; i < j; ++i) {
            const double v = gauss_eval(g.centers.col(i).data(), g.centers.col(j).data(),
                                        w.eta.data(), d);
            g.K(i, j) = v;
            g.K(j, i) = v;
        }
    }
    return g;
}

Vector kvec(const Vector& z, const Matrix& centers, const KernelWidths& w) {
    w.validate();
    if (z.size() != centers.rows() || z.size() != w.eta.size()) {
        throw std::invalid_argument("kvec: dimension mismatch");
    }
    const int d = static_cast<int>(z.size());
    const int T = static_cast<int>(centers.cols());
    Vector out(T);
    for (int i = 0; i < T; ++i) {
        out(i) = gauss_eval(z.data(), centers.col(i).data(), w.eta.data(), d);
    }
    return out;
}

Matrix kvec_jacobian(const Vector& z, const Matrix& centers, const KernelWidths& w) {
    const Vector k = kvec(z, centers, w);
    const int d = static_cast<int>(z.size());
    const int T = static_cast<int>(centers.cols());
    Matrix J(T, d);
    for (int i = 0; i < T; ++i) {
        J.row(i) = -k(i) * ((z - centers.col(i)).array() / w.eta.array()).transpose();
    }
    return J;
}

KernelWidths variance_widths(const Matrix& trajectories, double scale) {
    if (scale <= 0.0) throw std::invalid_argument("variance_widths: scale must be positive");
    const int d = static_cast<int>(trajectories.rows());
    const int T = static_cast<int>(trajectories.cols());
    Vector eta(d);
    for (int i = 0; i < d; ++i) {
        const double mean = trajectories.row(i).mean();
        double var = (trajectories.row(i).array() - mean).square().sum() / std::max(1, T - 1);
        eta(i) = scale * d * std::max(var, 1e-12);
    }
    return KernelWidths{eta};
}

KernelWidths tune_widths(const HankelSet& train, const HankelSet& val,
                         const std::vector<KernelWidths>& grid,
                         std::vector<double>* scores) {
    if (grid.empty()) throw std::invalid_argument("tune_widths: empty width grid");

    const Matrix Z_tr = trajectory_matrix(train);
    const Matrix Z_val = trajectory_matrix(val);
    const int T = static_cast<int>(Z_tr.cols());

    int best = -1;
    double best_score = kInf;
    if (scores) scores->assign(grid.size(), kInf);

    for (std::size_t g = 0; g < grid.size(); ++g) {
        const KernelWidths& w = grid[g];
        w.validate();

        // Phi = K(train, train); fit Theta = Y_f Phi^T (Phi Phi^T)^-1.
        Matrix Phi(T, T);
        for (int j = 0; j < T; ++j) Phi.col(j) = kvec(Z_tr.col(j), Z_tr, w);
        const Matrix PPt = Phi * Phi.transpose();
        Eigen::LDLT<Matrix> ldlt(PPt);
        const Vector dvec = ldlt.vectorD();
        const double dmax = dvec.cwiseAbs().maxCoeff();
        if (ldlt.info() != Eigen::Success || dmax <= 0.0 ||
            dvec.minCoeff() <= 1e-12 * dmax) {
            continue;  // singular Phi Phi^T: candidate unusable
        }
        const Matrix Theta = ldlt.solve(Phi * train.Y_f.transpose()).transpose();

        Matrix Phi_val(T, static_cast<int>(Z_val.cols()));
        for (int j = 0; j < Z_val.cols(); ++j) Phi_val.col(j) = kvec(Z_val.col(j), Z_tr, w);
        const double score = (val.Y_f - Theta * Phi_val).norm();
        if (scores) (*scores)[g] = score;
        if (score < best_score) {
            best_score = score;
            best = static_cast<int>(g);
        }
    }

    if (best < 0) {
        throw std::runtime_error(
            "tune_widths: all candidates produce a singular Phi*Phi^T; "
            "consider a ridge fallback or a different width grid");
    }
    return grid[best];
}

}  // namespace dpc
