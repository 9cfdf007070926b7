#pragma once

#include <memory>

#include "dpc/basis.hpp"
#include "dpc/nlp.hpp"
#include "dpc/reduce.hpp"
#include "dpc/types.hpp"

namespace dpc {

struct CostWeights {
    Matrix Q;  // p x p, positive definite
    Matrix R;  // m x m, positive definite
    Matrix P;  // p x p, positive definite terminal weight

    void validate(int m, int p) const;
};

/// Elementwise box bounds; empty vectors mean unbounded.
struct BoxConstraints {
    Vector u_min, u_max;  // m
    Vector y_min, y_max;  // p

    bool u_bounded() const;
    bool y_bounded() const;
};

enum class ControlMode { Spc, DeepcPi, Deepc2 };

/// Everything a controller needs at solve time; shared read-only.
struct OcpModel {
    BasisModel basis;
    ReducedData reduced;
    PredictorMatrix M;
    Matrix Yf_raw;  // Np x T, needed for non-reduced DeePC
};

struct OcpSpec {
    ControlMode mode = ControlMode::Spc;
    bool reduced = true;
    double lambda = 0.0;
    int N = 10;
    int T_ini = 1;
    int m = 1;
    int p = 2;
    CostWeights weights;
    BoxConstraints boxes;
    double smooth_eps = 1e-12;  // norm smoothing for the Pi regularizer
    NlpSettings solver;
};

enum class SolveStatus { Converged, MaxIter, Infeasible };

struct SolveResult {
    Vector u_star;  // N*m
    Vector y_star;  // N*p
    Vector g_star;  // decision vector g (empty for SPC)
    double cost = 0.0;        // tracking stage cost at the solution
    double reg_value = 0.0;   // l_g at the solution (unsmoothed for Pi mode)
    double kkt_residual = kInf;
    int iterations = 0;
    SolveStatus status = SolveStatus::MaxIter;
};

/// Quadratic tracking cost: terminal P-term at step N, Q-weighted tracking
/// error over steps 1..N-1, R-weighted input increments over steps 0..N-1
/// (with the first increment anchored at u_prev).
double stage_cost(const Vector& y_pred, const Vector& u, const Vector& u_prev,
                  const Vector& r, const CostWeights& w);

/// Indirect controller: y is eliminated through y = M phi(x_ini, u); output
/// boxes, when finite, reintroduce y as a constrained variable.
SolveResult solve_spc(const OcpSpec& spec, const OcpModel& model, const Vector& x_ini,
                      const Vector& u_prev, const Vector& r, const Vector& u_init = Vector());

/// Direct controller with decision (u, g): Phi g = phi(x_ini, u), y = Y_f g,
/// plus the mode's regularizer on g.
SolveResult solve_deepc(const OcpSpec& spec, const OcpModel& model, const Vector& x_ini,
                        const Vector& u_prev, const Vector& r, const Vector& u_init = Vector(),
                        const Vector& g_init = Vector());

/// Assembled NLP problems behind the two solvers; the model must outlive the
/// returned problem.
std::unique_ptr<NlpProblem> make_spc_problem(const OcpSpec& spec, const OcpModel& model,
                                             const Vector& x_ini, const Vector& u_prev,
                                             const Vector& r);
std::unique_ptr<NlpProblem> make_deepc_problem(const OcpSpec& spec, const OcpModel& model,
                                               const Vector& x_ini, const Vector& u_prev,
                                               const Vector& r);

}  // namespace dpc
