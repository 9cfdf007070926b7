#pragma once

#include <iosfwd>

#include "dpc/types.hpp"

namespace dpc {

struct NlpSettings {
    double tol = 1e-7;       // KKT residual threshold (inf-norm)
    int max_iter = 200;
    int qp_max_iter = 100;
    double alpha_min = 1e-12;  // smallest line-search step
    std::ostream* log = nullptr;  // optional per-iteration diagnostics
};

enum class NlpStatus { Converged, MaxIter, Infeasible };

struct NlpResult {
    Vector x;
    Vector eq_mult;
    double cost = 0.0;
    double kkt_residual = kInf;
    double feasibility = kInf;  // ||c(x)||_inf
    int iterations = 0;
    NlpStatus status = NlpStatus::MaxIter;
};

/// Equality-constrained NLP with variable bounds:
///   min f(x)  s.t.  c(x) = 0,  lb <= x <= ub.
/// First derivatives are required; cost_hessian may supply a positive
/// semidefinite model Hessian (exact or Gauss-Newton), otherwise a damped
/// BFGS approximation is maintained.
class NlpProblem {
public:
    virtual ~NlpProblem() = default;

    virtual int num_vars() const = 0;
    virtual int num_eq() const = 0;
    virtual double cost(const Vector& x) const = 0;
    virtual Vector cost_gradient(const Vector& x) const = 0;
    virtual Vector eq_constraints(const Vector& x) const;
    virtual Matrix eq_jacobian(const Vector& x) const;
    virtual bool cost_hessian(const Vector& x, Matrix& H) const;
    virtual Vector lower_bounds() const;
    virtual Vector upper_bounds() const;
};

/// SQP with an l1-penalty line search. Equality constraints are linearized
/// each iteration; bounds are handled by a primal-dual active-set strategy
/// on the QP subproblem.
NlpResult nlp_solve(const NlpProblem& prob, const Vector& x0, const NlpSettings& settings = {});

}  // namespace dpc
