#include "dpc/nlp.hpp"

#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>
#include <vector>

namespace dpc {

Vector NlpProblem::eq_constraints(const Vector&) const { return Vector::Zero(0); }
Matrix NlpProblem::eq_jacobian(const Vector&) const { return Matrix::Zero(0, num_vars()); }
bool NlpProblem::cost_hessian(const Vector&, Matrix&) const { return false; }
Vector NlpProblem::lower_bounds() const { return Vector::Constant(num_vars(), -kInf); }
Vector NlpProblem::upper_bounds() const { return Vector::Constant(num_vars(), kInf); }

namespace {

struct QpResult {
    Vector d;
    Vector nu;  // equality multipliers
    bool ok = false;
};

// Solve the KKT system with the working-set variables fixed. Returns false
// if no solvable system was found even after regularizing B.
bool kkt_solve(const Matrix& B, const Vector& g, const Matrix& J, const Vector& c,
               const std::vector<int>& state, const Vector& lo, const Vector& hi,
               Vector& d, Vector& nu) {
    const int n = static_cast<int>(B.rows());
    const int mc = static_cast<int>(J.rows());

    std::vector<int> free_idx;
    free_idx.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (state[i] == 0) free_idx.push_back(i);
    }
    const int nf = static_cast<int>(free_idx.size());

    d = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        if (state[i] == 1) d(i) = lo(i);
        else if (state[i] == 2) d(i) = hi(i);
    }

    if (nf == 0) {
        nu = Vector::Zero(mc);
        return true;
    }

    Matrix Bff(nf, nf), Jf(mc, nf);
    Vector rhs_g(nf);
    // rhs = -g_F - B_FA d_A, where d currently holds only the fixed parts.
    for (int a = 0; a < nf; ++a) {
        for (int b = 0; b < nf; ++b) Bff(a, b) = B(free_idx[a], free_idx[b]);
        double dot = 0.0;
        for (int i = 0; i < n; ++i) {
            if (state[i] != 0) dot += B(free_idx[a], i) * d(i);
        }
        rhs_g(a) = -g(free_idx[a]) - dot;
        for (int r = 0; r < mc; ++r) Jf(r, a) = J(r, free_idx[a]);
    }
    Vector rhs_c = -c;
    for (int i = 0; i < n; ++i) {
        if (state[i] != 0) rhs_c -= J.col(i) * d(i);
    }

    const int dim = nf + mc;
    Matrix K = Matrix::Zero(dim, dim);
    K.topLeftCorner(nf, nf) = Bff;
    if (mc > 0) {
        K.topRightCorner(nf, mc) = Jf.transpose();
        K.bottomLeftCorner(mc, nf) = Jf;
    }
    Vector rhs(dim);
    rhs.head(nf) = rhs_g;
    if (mc > 0) rhs.tail(mc) = rhs_c;

    const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
    double reg = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Matrix Kr = K;
        if (reg > 0.0) Kr.topLeftCorner(nf, nf) += reg * Matrix::Identity(nf, nf);
        Eigen::PartialPivLU<Matrix> lu(Kr);
        Vector sol = lu.solve(rhs);
        double resid = (Kr * sol - rhs).cwiseAbs().maxCoeff();
        if (!sol.allFinite() || resid > 1e-8 * scale * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
            Eigen::FullPivLU<Matrix> flu(Kr);
            sol = flu.solve(rhs);
            resid = (Kr * sol - rhs).cwiseAbs().maxCoeff();
        }
        if (sol.allFinite() &&
            resid <= 1e-6 * scale * std::max(1.0, rhs.cwiseAbs().maxCoeff())) {
            for (int a = 0; a < nf; ++a) d(free_idx[a]) = sol(a);
            nu = mc > 0 ? Vector(sol.tail(mc)) : Vector::Zero(0);
            return true;
        }
        reg = reg == 0.0 ? 1e-10 * scale : reg * 100.0;
    }
    return false;
}

// Primal-dual active-set QP:
//   min 1/2 d'Bd + g'd  s.t.  J d + c = 0,  lo <= d <= hi.
QpResult solve_qp(const Matrix& B, const Vector& g, const Matrix& J, const Vector& c,
                  const Vector& lo, const Vector& hi, int max_iter) {
    const int n = static_cast<int>(B.rows());
    QpResult res;
    std::vector<int> state(n, 0);  // 0 free, 1 at lower, 2 at upper
    std::set<std::vector<int>> seen;

    Vector d, nu;
    for (int it = 0; it < max_iter; ++it) {
        if (!kkt_solve(B, g, J, c, state, lo, hi, d, nu)) return res;

        const Vector stat = B * d + g + (J.rows() > 0 ? Vector(J.transpose() * nu)
                                                      : Vector(Vector::Zero(n)));
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            if (state[i] == 0) {
                if (std::isfinite(lo(i)) && d(i) < lo(i) - 1e-12) {
                    state[i] = 1;
                    changed = true;
                } else if (std::isfinite(hi(i)) && d(i) > hi(i) + 1e-12) {
                    state[i] = 2;
                    changed = true;
                }
            } else if (state[i] == 1) {
                if (stat(i) < -1e-12) {  // multiplier mu_lo = stat_i must be >= 0
                    state[i] = 0;
                    changed = true;
                }
            } else {
                if (-stat(i) < -1e-12) {  // multiplier mu_hi = -stat_i must be >= 0
                    state[i] = 0;
                    changed = true;
                }
            }
        }
        if (!changed) {
            res.d = d.cwiseMax(lo).cwiseMin(hi);
            res.nu = nu;
            res.ok = true;
            return res;
        }
        if (!seen.insert(state).second) {
            // Working set cycled; accept the current iterate.
            res.d = d.cwiseMax(lo).cwiseMin(hi);
            res.nu = nu;
            res.ok = true;
            return res;
        }
    }
    res.d = d.cwiseMax(lo).cwiseMin(hi);
    res.nu = nu;
    res.ok = true;
    return res;
}

double kkt_residual(const Vector& x, const Vector& g, const Matrix& J, const Vector& c,
                    const Vector& nu, const Vector& lb, const Vector& ub) {
    const int n = static_cast<int>(x.size());
    Vector stat = g;
    if (J.rows() > 0) stat += J.transpose() * nu;
    double r = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
    for (int i = 0; i < n; ++i) {
        const double act_tol = 1e-9 * (1.0 + std::abs(x(i)));
        if (std::isfinite(lb(i)) && x(i) <= lb(i) + act_tol) {
            r = std::max(r, std::max(0.0, -stat(i)));
        } else if (std::isfinite(ub(i)) && x(i) >= ub(i) - act_tol) {
            r = std::max(r, std::max(0.0, stat(i)));
        } else {
            r = std::max(r, std::abs(stat(i)));
        }
    }
    return r;
}

double l1_norm(const Vector& v) { return v.size() > 0 ? v.cwiseAbs().sum() : 0.0; }

}  // namespace

NlpResult nlp_solve(const NlpProblem& prob, const Vector& x0, const NlpSettings& settings) {
    const int n = prob.num_vars();
    const int mc = prob.num_eq();
    if (x0.size() != n) throw std::invalid_argument("nlp_solve: x0 dimension mismatch");

    const Vector lb = prob.lower_bounds();
    const Vector ub = prob.upper_bounds();

    NlpResult res;
    res.x = x0.cwiseMax(lb).cwiseMin(ub);
    res.eq_mult = Vector::Zero(mc);

    Matrix B_bfgs = Matrix::Identity(n, n);
    Matrix B(n, n);
    double penalty = 1.0;
    int ls_failures = 0;

    for (int iter = 0; iter < settings.max_iter; ++iter) {
        const double f = prob.cost(res.x);
        const Vector g = prob.cost_gradient(res.x);
        const Vector c = prob.eq_constraints(res.x);
        const Matrix J = prob.eq_jacobian(res.x);

        if (!prob.cost_hessian(res.x, B)) B = B_bfgs;

        QpResult qp = solve_qp(B, g, J, c, lb - res.x, ub - res.x, settings.qp_max_iter);
        if (!qp.ok) {
            // Typically an inconsistent linearized constraint system. Try to
            // restore feasibility; if ||c|| cannot be reduced the problem is
            // declared infeasible.
            res.iterations = iter;
            res.cost = f;
            res.feasibility = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
            if (res.feasibility <= 10.0 * settings.tol) {
                res.status = NlpStatus::MaxIter;
                return res;
            }
            Vector dr = Vector::Zero(n);
            if (mc > 0) {
                Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
                dr = -cod.solve(c);
            }
            const double c0 = l1_norm(c);
            double beta = 1.0;
            bool restored = false;
            Vector xt;
            while (beta >= settings.alpha_min) {
                xt = (res.x + beta * dr).cwiseMax(lb).cwiseMin(ub);
                if (l1_norm(prob.eq_constraints(xt)) < 0.9 * c0) {
                    restored = true;
                    break;
                }
                beta *= 0.5;
            }
            if (!restored) {
                res.status = NlpStatus::Infeasible;
                return res;
            }
            res.x = xt;
            continue;
        }

        res.kkt_residual = kkt_residual(res.x, g, J, c, qp.nu, lb, ub);
        res.feasibility = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
        res.eq_mult = qp.nu;
        res.cost = f;
        res.iterations = iter;

        if (settings.log) {
            (*settings.log) << "nlp iter=" << iter << " cost=" << f
                            << " feas=" << res.feasibility << " kkt=" << res.kkt_residual
                            << " penalty=" << penalty << "\n";
        }

        if (res.kkt_residual < settings.tol) {
            res.status = NlpStatus::Converged;
            return res;
        }

        const double nu_inf = qp.nu.size() > 0 ? qp.nu.cwiseAbs().maxCoeff() : 0.0;
        penalty = std::max(penalty, 1.05 * nu_inf + 1e-3);

        const double merit0 = f + penalty * l1_norm(c);
        const double ddir = g.dot(qp.d) - penalty * l1_norm(c);

        double alpha = 1.0;
        bool accepted = false;
        Vector xt;
        while (alpha >= settings.alpha_min) {
            xt = (res.x + alpha * qp.d).cwiseMax(lb).cwiseMin(ub);
            const double merit_t = prob.cost(xt) + penalty * l1_norm(prob.eq_constraints(xt));
            if (merit_t <= merit0 + 0.1 * alpha * std::min(ddir, 0.0) + 1e-14 * std::abs(merit0)) {
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }

        if (!accepted) {
            ++ls_failures;
            if (res.feasibility > 10.0 * settings.tol) {
                // Feasibility restoration: Gauss-Newton step on 1/2 ||c||^2.
                Vector dr = Vector::Zero(n);
                if (mc > 0) {
                    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(J);
                    dr = -cod.solve(c);
                }
                double beta = 1.0;
                bool restored = false;
                const double c0 = l1_norm(c);
                while (beta >= settings.alpha_min) {
                    xt = (res.x + beta * dr).cwiseMax(lb).cwiseMin(ub);
                    if (l1_norm(prob.eq_constraints(xt)) < 0.9 * c0) {
                        restored = true;
                        break;
                    }
                    beta *= 0.5;
                }
                if (!restored) {
                    res.status = NlpStatus::Infeasible;
                    return res;
                }
                res.x = xt;
                continue;
            }
            if (ls_failures >= 3) {
                res.status = res.kkt_residual < settings.tol ? NlpStatus::Converged
                                                             : NlpStatus::MaxIter;
                return res;
            }
            continue;
        }
        ls_failures = 0;

        // Damped BFGS on the Lagrangian gradient (quasi-Newton path only).
        Matrix Hdummy;
        if (!prob.cost_hessian(res.x, Hdummy)) {
            const Vector s = xt - res.x;
            Vector gl_new = prob.cost_gradient(xt);
            Vector gl_old = g;
            if (mc > 0) {
                gl_new += prob.eq_jacobian(xt).transpose() * qp.nu;
                gl_old += J.transpose() * qp.nu;
            }
            Vector yv = gl_new - gl_old;
            const double sBs = s.dot(B_bfgs * s);
            double sy = s.dot(yv);
            if (sBs > 1e-16) {
                if (sy < 0.2 * sBs) {
                    const double theta = 0.8 * sBs / (sBs - sy);
                    yv = theta * yv + (1.0 - theta) * (B_bfgs * s);
                    sy = s.dot(yv);
                }
                if (sy > 1e-16) {
                    const Vector Bs = B_bfgs * s;
                    B_bfgs += yv * yv.transpose() / sy - Bs * Bs.transpose() / sBs;
                }
            }
        }
        res.x = xt;
    }

    res.cost = prob.cost(res.x);
    const Vector cfin = prob.eq_constraints(res.x);
    res.feasibility = cfin.size() > 0 ? cfin.cwiseAbs().maxCoeff() : 0.0;
    res.iterations = settings.max_iter;
    res.status = NlpStatus::MaxIter;
    return res;
}

}  // namespace dpc
