#include "dpc/ocp.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace dpc {

void CostWeights::validate(int m, int p) const {
    if (Q.rows() != p || Q.cols() != p || P.rows() != p || P.cols() != p ||
        R.rows() != m || R.cols() != m) {
        throw std::invalid_argument("CostWeights: dimension mismatch");
    }
    auto check_pd = [](const Matrix& A, const char* name) {
        Eigen::LLT<Matrix> llt(0.5 * (A + A.transpose()));
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument(std::string("CostWeights: ") + name +
                                        " must be positive definite");
        }
    };
    check_pd(Q, "Q");
    check_pd(R, "R");
    check_pd(P, "P");
}

bool BoxConstraints::u_bounded() const {
    return (u_min.size() > 0 && (u_min.array() > -kInf).any()) ||
           (u_max.size() > 0 && (u_max.array() < kInf).any());
}

bool BoxConstraints::y_bounded() const {
    return (y_min.size() > 0 && (y_min.array() > -kInf).any()) ||
           (y_max.size() > 0 && (y_max.array() < kInf).any());
}

namespace {

// The quadratic tracking cost in stacked (y, u) coordinates:
//   J = (y - r)' Qbar (y - r) + (D u - e)' Rbar (D u - e)
// with Qbar = blkdiag(Q,...,Q,P) and D the first-difference map anchored
// at u_prev (e = E u_prev).
struct StageQuad {
    Matrix Qbar;  // Np x Np
    Matrix Hu;    // Nm x Nm = D' Rbar D
    Vector hu;    // = -2 D' Rbar e
    double cu = 0.0;
    Vector r;

    static StageQuad build(const CostWeights& w, const Vector& r, const Vector& u_prev,
                           int N, int m, int p) {
        StageQuad s;
        s.r = r;
        s.Qbar = Matrix::Zero(N * p, N * p);
        for (int i = 0; i < N - 1; ++i) s.Qbar.block(i * p, i * p, p, p) = w.Q;
        s.Qbar.block((N - 1) * p, (N - 1) * p, p, p) = w.P;

        Matrix D = Matrix::Zero(N * m, N * m);
        for (int i = 0; i < N; ++i) {
            D.block(i * m, i * m, m, m) = Matrix::Identity(m, m);
            if (i > 0) D.block(i * m, (i - 1) * m, m, m) = -Matrix::Identity(m, m);
        }
        Matrix Rbar = Matrix::Zero(N * m, N * m);
        for (int i = 0; i < N; ++i) Rbar.block(i * m, i * m, m, m) = w.R;
        Vector e = Vector::Zero(N * m);
        e.head(m) = u_prev;

        s.Hu = D.transpose() * Rbar * D;
        s.hu = -2.0 * D.transpose() * Rbar * e;
        s.cu = e.dot(Rbar * e);
        return s;
    }

    double value(const Vector& y, const Vector& u) const {
        const Vector dy = y - r;
        return dy.dot(Qbar * dy) + u.dot(Hu * u) + hu.dot(u) + cu;
    }
    Vector grad_y(const Vector& y) const { return 2.0 * (Qbar * (y - r)); }
    Vector grad_u(const Vector& u) const { return 2.0 * (Hu * u) + hu; }
};

Vector expand_bound(const Vector& b, int reps, int dim, double fill) {
    Vector out = Vector::Constant(reps * dim, fill);
    if (b.size() == dim) {
        for (int i = 0; i < reps; ++i) out.segment(i * dim, dim) = b;
    } else if (b.size() != 0) {
        throw std::invalid_argument("box bound has wrong dimension");
    }
    return out;
}

// ---------------------------------------------------------------------------
// SPC: variables u (plus y when output boxes are finite).
// ---------------------------------------------------------------------------
class SpcNlp : public NlpProblem {
public:
    SpcNlp(const OcpSpec& spec, const OcpModel& model, const Vector& x_ini, const StageQuad& sq)
        : spec_(spec), model_(&model), x_ini_(x_ini), sq_(sq) {
        nm_ = spec.N * spec.m;
        np_ = spec.N * spec.p;
        with_y_ = spec.boxes.y_bounded();
        d_ = model.basis.d;
        ux_ = static_cast<int>(x_ini.size());
        if (ux_ + nm_ != d_) throw std::invalid_argument("solve_spc: x_ini/u dimension mismatch");
    }

    int num_vars() const override { return with_y_ ? nm_ + np_ : nm_; }
    int num_eq() const override { return with_y_ ? np_ : 0; }

    Vector trajectory(const Vector& u) const {
        Vector z(d_);
        z << x_ini_, u;
        return z;
    }
    Vector predict_y(const Vector& u) const {
        return model_->M.M * model_->basis.evaluate(trajectory(u));
    }
    // L x Nm Jacobian of phi w.r.t. u.
    Matrix phi_jac_u(const Vector& u) const {
        return model_->basis.jacobian(trajectory(u)).rightCols(nm_);
    }

    double cost(const Vector& x) const override {
        const Vector u = x.head(nm_);
        const Vector y = with_y_ ? Vector(x.tail(np_)) : predict_y(u);
        return sq_.value(y, u);
    }

    Vector cost_gradient(const Vector& x) const override {
        const Vector u = x.head(nm_);
        Vector grad(num_vars());
        if (with_y_) {
            grad.head(nm_) = sq_.grad_u(u);
            grad.tail(np_) = sq_.grad_y(x.tail(np_));
        } else {
            const Vector y = predict_y(u);
            const Matrix Ju = model_->M.M * phi_jac_u(u);  // Np x Nm
            grad = sq_.grad_u(u) + Ju.transpose() * sq_.grad_y(y);
        }
        return grad;
    }

    bool cost_hessian(const Vector& x, Matrix& H) const override {
        H = Matrix::Zero(num_vars(), num_vars());
        if (with_y_) {
            H.topLeftCorner(nm_, nm_) = 2.0 * sq_.Hu;
            H.bottomRightCorner(np_, np_) = 2.0 * sq_.Qbar;
        } else {
            // Gauss-Newton: the curvature of phi is dropped.
            const Matrix Ju = model_->M.M * phi_jac_u(x.head(nm_));
            H = 2.0 * sq_.Hu + Ju.transpose() * (2.0 * sq_.Qbar) * Ju;
        }
        return true;
    }

    Vector eq_constraints(const Vector& x) const override {
        if (!with_y_) return Vector::Zero(0);
        return Vector(x.tail(np_) - predict_y(x.head(nm_)));
    }

    Matrix eq_jacobian(const Vector& x) const override {
        if (!with_y_) return Matrix::Zero(0, num_vars());
        Matrix J(np_, num_vars());
        J.leftCols(nm_) = -model_->M.M * phi_jac_u(x.head(nm_));
        J.rightCols(np_) = Matrix::Identity(np_, np_);
        return J;
    }

    Vector lower_bounds() const override {
        Vector lb = Vector::Constant(num_vars(), -kInf);
        lb.head(nm_) = expand_bound(spec_.boxes.u_min, spec_.N, spec_.m, -kInf);
        if (with_y_) lb.tail(np_) = expand_bound(spec_.boxes.y_min, spec_.N, spec_.p, -kInf);
        return lb;
    }
    Vector upper_bounds() const override {
        Vector ub = Vector::Constant(num_vars(), kInf);
        ub.head(nm_) = expand_bound(spec_.boxes.u_max, spec_.N, spec_.m, kInf);
        if (with_y_) ub.tail(np_) = expand_bound(spec_.boxes.y_max, spec_.N, spec_.p, kInf);
        return ub;
    }

    OcpSpec spec_;
    const OcpModel* model_;
    Vector x_ini_;
    StageQuad sq_;
    int nm_ = 0, np_ = 0, d_ = 0, ux_ = 0;
    bool with_y_ = false;
};

// ---------------------------------------------------------------------------
// DeePC: variables (u, a, b) with g = QR a + QN b split into range/null
// coordinates of Phi. The equality constraint only sees a; the Pi penalty
// only sees b, which keeps the large-lambda Hessian block diagonal.
// ---------------------------------------------------------------------------
struct DeepcData {
    Matrix Ca;      // L x ra, = Phi_eff * QR
    Matrix Ya, Yb;  // Np x ra / Np x nb
    Matrix QR, QN;  // K x ra / K x nb
    int K = 0, ra = 0, nb = 0;
};

class DeepcNlp : public NlpProblem {
public:
    DeepcNlp(const OcpSpec& spec, const OcpModel& model, const DeepcData& dd,
             const Vector& x_ini, const StageQuad& sq)
        : spec_(spec), model_(&model), dd_(dd), x_ini_(x_ini), sq_(sq) {
        nm_ = spec.N * spec.m;
        np_ = spec.N * spec.p;
        with_y_ = spec.boxes.y_bounded();
        d_ = model.basis.d;
        if (static_cast<int>(x_ini.size()) + nm_ != d_) {
            throw std::invalid_argument("solve_deepc: x_ini/u dimension mismatch");
        }
    }

    int num_vars() const override { return nm_ + dd_.ra + dd_.nb + (with_y_ ? np_ : 0); }
    int num_eq() const override { return static_cast<int>(dd_.Ca.rows()) + (with_y_ ? np_ : 0); }

    Vector trajectory(const Vector& u) const {
        Vector z(d_);
        z << x_ini_, u;
        return z;
    }

    Vector yfree(const Vector& x) const {  // y = Ya a + Yb b
        return dd_.Ya * x.segment(nm_, dd_.ra) + dd_.Yb * x.segment(nm_ + dd_.ra, dd_.nb);
    }

    double reg(const Vector& x) const {
        const auto a = x.segment(nm_, dd_.ra);
        const auto b = x.segment(nm_ + dd_.ra, dd_.nb);
        if (spec_.mode == ControlMode::Deepc2) {
            return spec_.lambda * (a.squaredNorm() + b.squaredNorm());
        }
        return spec_.lambda * std::sqrt(b.squaredNorm() + spec_.smooth_eps);
    }

    double cost(const Vector& x) const override {
        const Vector u = x.head(nm_);
        const Vector y = with_y_ ? Vector(x.tail(np_)) : yfree(x);
        return sq_.value(y, u) + reg(x);
    }

    Vector cost_gradient(const Vector& x) const override {
        const Vector u = x.head(nm_);
        const auto a = x.segment(nm_, dd_.ra);
        const auto b = x.segment(nm_ + dd_.ra, dd_.nb);
        Vector grad = Vector::Zero(num_vars());
        grad.head(nm_) = sq_.grad_u(u);

        Vector gy;
        if (with_y_) {
            gy = sq_.grad_y(x.tail(np_));
            grad.tail(np_) = gy;
        } else {
            gy = sq_.grad_y(yfree(x));
            grad.segment(nm_, dd_.ra) += dd_.Ya.transpose() * gy;
            grad.segment(nm_ + dd_.ra, dd_.nb) += dd_.Yb.transpose() * gy;
        }

        if (spec_.mode == ControlMode::Deepc2) {
            grad.segment(nm_, dd_.ra) += 2.0 * spec_.lambda * a;
            grad.segment(nm_ + dd_.ra, dd_.nb) += 2.0 * spec_.lambda * b;
        } else {
            const double s = std::sqrt(b.squaredNorm() + spec_.smooth_eps);
            if (s > 0.0) grad.segment(nm_ + dd_.ra, dd_.nb) += (spec_.lambda / s) * b;
        }
        return grad;
    }

    bool cost_hessian(const Vector& x, Matrix& H) const override {
        const int nv = num_vars();
        H = Matrix::Zero(nv, nv);
        H.topLeftCorner(nm_, nm_) = 2.0 * sq_.Hu;
        if (with_y_) {
            H.bottomRightCorner(np_, np_) = 2.0 * sq_.Qbar;
        } else {
            const Matrix QYa = 2.0 * sq_.Qbar * dd_.Ya;
            const Matrix QYb = 2.0 * sq_.Qbar * dd_.Yb;
            H.block(nm_, nm_, dd_.ra, dd_.ra) = dd_.Ya.transpose() * QYa;
            H.block(nm_, nm_ + dd_.ra, dd_.ra, dd_.nb) = dd_.Ya.transpose() * QYb;
            H.block(nm_ + dd_.ra, nm_, dd_.nb, dd_.ra) =
                H.block(nm_, nm_ + dd_.ra, dd_.ra, dd_.nb).transpose();
            H.block(nm_ + dd_.ra, nm_ + dd_.ra, dd_.nb, dd_.nb) = dd_.Yb.transpose() * QYb;
        }

        if (spec_.mode == ControlMode::Deepc2) {
            H.block(nm_, nm_, dd_.ra, dd_.ra) +=
                2.0 * spec_.lambda * Matrix::Identity(dd_.ra, dd_.ra);
            H.block(nm_ + dd_.ra, nm_ + dd_.ra, dd_.nb, dd_.nb) +=
                2.0 * spec_.lambda * Matrix::Identity(dd_.nb, dd_.nb);
        } else if (spec_.lambda > 0.0 && dd_.nb > 0) {
            const auto b = x.segment(nm_ + dd_.ra, dd_.nb);
            const double s2 = b.squaredNorm() + spec_.smooth_eps;
            const double s = std::sqrt(s2);
            if (s > 0.0) {
                H.block(nm_ + dd_.ra, nm_ + dd_.ra, dd_.nb, dd_.nb) +=
                    (spec_.lambda / s) *
                    (Matrix::Identity(dd_.nb, dd_.nb) - b * b.transpose() / s2);
            }
        }
        return true;
    }

    Vector eq_constraints(const Vector& x) const override {
        const int L = static_cast<int>(dd_.Ca.rows());
        Vector c(num_eq());
        c.head(L) = dd_.Ca * x.segment(nm_, dd_.ra) -
                    model_->basis.evaluate(trajectory(x.head(nm_)));
        if (with_y_) c.tail(np_) = x.tail(np_) - yfree(x);
        return c;
    }

    Matrix eq_jacobian(const Vector& x) const override {
        const int L = static_cast<int>(dd_.Ca.rows());
        Matrix J = Matrix::Zero(num_eq(), num_vars());
        J.block(0, 0, L, nm_) =
            -model_->basis.jacobian(trajectory(x.head(nm_))).rightCols(nm_);
        J.block(0, nm_, L, dd_.ra) = dd_.Ca;
        if (with_y_) {
            J.block(L, nm_, np_, dd_.ra) = -dd_.Ya;
            J.block(L, nm_ + dd_.ra, np_, dd_.nb) = -dd_.Yb;
            J.block(L, nm_ + dd_.ra + dd_.nb, np_, np_) = Matrix::Identity(np_, np_);
        }
        return J;
    }

    Vector lower_bounds() const override {
        Vector lb = Vector::Constant(num_vars(), -kInf);
        lb.head(nm_) = expand_bound(spec_.boxes.u_min, spec_.N, spec_.m, -kInf);
        if (with_y_) lb.tail(np_) = expand_bound(spec_.boxes.y_min, spec_.N, spec_.p, -kInf);
        return lb;
    }
    Vector upper_bounds() const override {
        Vector ub = Vector::Constant(num_vars(), kInf);
        ub.head(nm_) = expand_bound(spec_.boxes.u_max, spec_.N, spec_.m, kInf);
        if (with_y_) ub.tail(np_) = expand_bound(spec_.boxes.y_max, spec_.N, spec_.p, kInf);
        return ub;
    }

    OcpSpec spec_;
    const OcpModel* model_;
    DeepcData dd_;
    Vector x_ini_;
    StageQuad sq_;
    int nm_ = 0, np_ = 0, d_ = 0;
    bool with_y_ = false;
};

SolveStatus map_status(NlpStatus s) {
    switch (s) {
        case NlpStatus::Converged: return SolveStatus::Converged;
        case NlpStatus::Infeasible: return SolveStatus::Infeasible;
        default: return SolveStatus::MaxIter;
    }
}

DeepcData make_deepc_data(const OcpSpec& spec, const OcpModel& model, double rtol = 1e-12) {
    DeepcData dd;
    if (spec.reduced) {
        const ReducedData& red = model.reduced;
        if (red.keep == 0) throw std::invalid_argument("solve_deepc: ReducedData required");
        dd.K = red.keep;
        dd.QR = red.range_basis;
        dd.QN = red.null_basis;
        dd.Ca = red.Phi_t * dd.QR;
        dd.Ya = red.Yf_t * dd.QR;
        dd.Yb = red.Yf_t * dd.QN;
    } else {
        const Matrix& Phi = model.basis.Phi;
        if (model.Yf_raw.cols() != Phi.cols()) {
            throw std::invalid_argument("solve_deepc: Yf_raw required for non-reduced mode");
        }
        dd.K = static_cast<int>(Phi.cols());
        Eigen::BDCSVD<Matrix> svd(Phi, Eigen::ComputeThinU | Eigen::ComputeFullV);
        const Vector& s = svd.singularValues();
        const double cutoff = rtol * (s.size() > 0 ? s(0) : 0.0);
        int r = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > cutoff && s(i) > 0.0) ++r;
        }
        dd.QR = svd.matrixV().leftCols(r);
        dd.QN = svd.matrixV().rightCols(dd.K - r);
        dd.Ca = Phi * dd.QR;
        dd.Ya = model.Yf_raw * dd.QR;
        dd.Yb = model.Yf_raw * dd.QN;
    }
    dd.ra = static_cast<int>(dd.QR.cols());
    dd.nb = static_cast<int>(dd.QN.cols());
    return dd;
}

}  // namespace

std::unique_ptr<NlpProblem> make_spc_problem(const OcpSpec& spec, const OcpModel& model,
                                             const Vector& x_ini, const Vector& u_prev,
                                             const Vector& r) {
    spec.weights.validate(spec.m, spec.p);
    const StageQuad sq = StageQuad::build(spec.weights, r, u_prev, spec.N, spec.m, spec.p);
    return std::make_unique<SpcNlp>(spec, model, x_ini, sq);
}

std::unique_ptr<NlpProblem> make_deepc_problem(const OcpSpec& spec, const OcpModel& model,
                                               const Vector& x_ini, const Vector& u_prev,
                                               const Vector& r) {
    spec.weights.validate(spec.m, spec.p);
    const StageQuad sq = StageQuad::build(spec.weights, r, u_prev, spec.N, spec.m, spec.p);
    return std::make_unique<DeepcNlp>(spec, model, make_deepc_data(spec, model), x_ini, sq);
}

double stage_cost(const Vector& y_pred, const Vector& u, const Vector& u_prev,
                  const Vector& r, const CostWeights& w) {
    const int p = static_cast<int>(w.Q.rows());
    const int m = static_cast<int>(w.R.rows());
    if (y_pred.size() % p != 0 || u.size() % m != 0 || u_prev.size() != m ||
        r.size() != y_pred.size() || y_pred.size() / p != u.size() / m) {
        throw std::invalid_argument("stage_cost: dimension mismatch");
    }
    const int N = static_cast<int>(u.size()) / m;
    const StageQuad sq = StageQuad::build(w, r, u_prev, N, m, p);
    return sq.value(y_pred, u);
}

SolveResult solve_spc(const OcpSpec& spec, const OcpModel& model, const Vector& x_ini,
                      const Vector& u_prev, const Vector& r, const Vector& u_init) {
    spec.weights.validate(spec.m, spec.p);
    const int nm = spec.N * spec.m;
    const StageQuad sq = StageQuad::build(spec.weights, r, u_prev, spec.N, spec.m, spec.p);
    SpcNlp prob(spec, model, x_ini, sq);

    Vector u0 = u_init.size() == nm ? u_init : u_prev.replicate(spec.N, 1);
    Vector x0(prob.num_vars());
    x0.head(nm) = u0;
    if (prob.num_vars() > nm) x0.tail(spec.N * spec.p) = prob.predict_y(u0);

    const NlpResult nr = nlp_solve(prob, x0, spec.solver);

    SolveResult res;
    res.u_star = nr.x.head(nm);
    res.y_star = prob.predict_y(res.u_star);
    res.cost = sq.value(res.y_star, res.u_star);
    res.reg_value = 0.0;
    res.kkt_residual = nr.kkt_residual;
    res.iterations = nr.iterations;
    res.status = map_status(nr.status);
    return res;
}

SolveResult solve_deepc(const OcpSpec& spec, const OcpModel& model, const Vector& x_ini,
                        const Vector& u_prev, const Vector& r, const Vector& u_init,
                        const Vector& g_init) {
    spec.weights.validate(spec.m, spec.p);
    const int nm = spec.N * spec.m;
    const StageQuad sq = StageQuad::build(spec.weights, r, u_prev, spec.N, spec.m, spec.p);
    const DeepcData dd = make_deepc_data(spec, model);
    DeepcNlp prob(spec, model, dd, x_ini, sq);

    Vector u0 = u_init.size() == nm ? u_init : u_prev.replicate(spec.N, 1);
    Vector g0;
    if (g_init.size() == dd.K) {
        g0 = g_init;
    } else {
        // Least-norm g matching the initial input guess.
        Vector z(x_ini.size() + nm);
        z << x_ini, u0;
        if (spec.reduced) {
            g0 = model.reduced.Phi_t_pinv * model.basis.evaluate(z);
        } else {
            g0 = dd.QR * (dd.Ca.colPivHouseholderQr().solve(model.basis.evaluate(z)));
        }
    }

    Vector x0(prob.num_vars());
    x0.head(nm) = u0;
    x0.segment(nm, dd.ra) = dd.QR.transpose() * g0;
    x0.segment(nm + dd.ra, dd.nb) = dd.QN.transpose() * g0;
    if (prob.with_y_) x0.tail(spec.N * spec.p) = prob.yfree(x0);

    const NlpResult nr = nlp_solve(prob, x0, spec.solver);

    SolveResult res;
    res.u_star = nr.x.head(nm);
    const Vector a = nr.x.segment(nm, dd.ra);
    const Vector b = nr.x.segment(nm + dd.ra, dd.nb);
    res.g_star = dd.QR * a + dd.QN * b;
    res.y_star = dd.Ya * a + dd.Yb * b;
    res.cost = sq.value(res.y_star, res.u_star);
    if (spec.mode == ControlMode::Deepc2) {
        res.reg_value = spec.lambda * res.g_star.squaredNorm();
    } else {
        res.reg_value = spec.lambda * b.norm();
    }
    res.kkt_residual = nr.kkt_residual;
    res.iterations = nr.iterations;
    res.status = map_status(nr.status);
    return res;
}

}  // namespace dpc
