#include "dpc/hankel.hpp"

#include <stdexcept>
#include <string>

namespace dpc {

namespace {

// Stack samples seq[start..start+count-1] into one column.
void put_window(Matrix& M, int col, const std::vector<Vector>& seq, int start, int count, int dim) {
    for (int i = 0; i < count; ++i) {
        M.block(i * dim, col, dim, 1) = seq[start + i];
    }
}

}  // namespace

HankelSet build_hankel(const Dataset& data, const HankelConfig& cfg) {
    if (cfg.T_ini < 1 || cfg.N < 1 || cfg.T < 1) {
        throw std::invalid_argument("build_hankel: T_ini, N and T must all be >= 1");
    }
    const int need = cfg.required_samples();
    if (data.count < need) {
        throw std::invalid_argument("build_hankel: insufficient data, need " +
                                    std::to_string(need) + " samples but only " +
                                    std::to_string(data.count) + " available");
    }
    if (data.m() != cfg.m || data.p() != cfg.p) {
        throw std::invalid_argument("build_hankel: dataset dimensions do not match config");
    }

    HankelSet hs;
    hs.cfg = cfg;
    hs.U_p = Matrix::Zero((cfg.T_ini - 1) * cfg.m, cfg.T);
    hs.Y_p = Matrix::Zero(cfg.T_ini * cfg.p, cfg.T);
    hs.U_f = Matrix::Zero(cfg.N * cfg.m, cfg.T);
    hs.Y_f = Matrix::Zero(cfg.N * cfg.p, cfg.T);

    for (int j = 0; j < cfg.T; ++j) {
        put_window(hs.U_p, j, data.u, j, cfg.T_ini - 1, cfg.m);
        put_window(hs.Y_p, j, data.y, j, cfg.T_ini, cfg.p);
        put_window(hs.U_f, j, data.u, j + cfg.T_ini - 1, cfg.N, cfg.m);
        put_window(hs.Y_f, j, data.y, j + cfg.T_ini, cfg.N, cfg.p);
    }
    return hs;
}

Vector trajectory_column(const HankelSet& hs, int j) {
    if (j < 0 || j >= hs.cfg.T) {
        throw std::out_of_range("trajectory_column: column index " + std::to_string(j) +
                                " out of range [0, " + std::to_string(hs.cfg.T) + ")");
    }
    Vector z(hs.cfg.trajectory_dim());
    z << hs.U_p.col(j), hs.Y_p.col(j), hs.U_f.col(j);
    return z;
}

Matrix trajectory_matrix(const HankelSet& hs) {
    Matrix Z(hs.cfg.trajectory_dim(), hs.cfg.T);
    Z << hs.U_p, hs.Y_p, hs.U_f;
    return Z;
}

Matrix stacked(const HankelSet& hs) {
    Matrix S(hs.U_p.rows() + hs.Y_p.rows() + hs.U_f.rows() + hs.Y_f.rows(), hs.cfg.T);
    S << hs.U_p, hs.Y_p, hs.U_f, hs.Y_f;
    return S;
}

InitWindow init_window(const std::vector<Vector>& u_hist, const std::vector<Vector>& y_hist,
                       int T_ini, int k) {
    if (T_ini < 1) throw std::invalid_argument("init_window: T_ini must be >= 1");
    const int first = k - T_ini + 1;
    if (first < 0 || k >= static_cast<int>(y_hist.size()) ||
        (T_ini > 1 && k - 1 >= static_cast<int>(u_hist.size()))) {
        throw std::invalid_argument("init_window: insufficient history for T_ini=" +
                                    std::to_string(T_ini) + " at k=" + std::to_string(k));
    }
    const int m = u_hist.empty() ? 0 : static_cast<int>(u_hist.front().size());
    const int p = static_cast<int>(y_hist.front().size());

    InitWindow w;
    w.u_ini = Vector::Zero((T_ini - 1) * m);
    for (int i = 0; i < T_ini - 1; ++i) {
        w.u_ini.segment(i * m, m) = u_hist[first + i];  // u(k-T_ini+1) ... u(k-1)
    }
    w.y_ini = Vector::Zero(T_ini * p);
    for (int i = 0; i < T_ini; ++i) {
        w.y_ini.segment(i * p, p) = y_hist[first + i];  // y(k-T_ini+1) ... y(k)
    }
    w.x_ini = Vector(w.u_ini.size() + w.y_ini.size());
    w.x_ini << w.u_ini, w.y_ini;
    return w;
}

}  // namespace dpc
