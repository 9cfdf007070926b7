#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpc/group_lasso.hpp"
#include "dpc/plant.hpp"

using namespace dpc;

namespace {

HankelSet random_hankel(int T, int N, unsigned seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Dataset d;
    const int n = T + N;  // T_ini = 1
    for (int k = 0; k < n; ++k) {
        d.u.push_back(Vector::Constant(1, dist(rng)));
        Vector y(2);
        y << dist(rng), dist(rng);
        d.y.push_back(y);
    }
    d.count = n;
    return build_hankel(d, HankelConfig{1, N, T, 1, 2});
}

GramMatrix make_gram(const HankelSet& hs, double width = 1.0) {
    return gram(hs, KernelWidths{Vector::Constant(hs.cfg.trajectory_dim(), width)});
}

// Independent proximal-gradient oracle for the group LASSO objective.
Matrix prox_gradient_oracle(const Matrix& K, const Matrix& Y, double alpha, int iters) {
    const int T = static_cast<int>(K.cols());
    Eigen::SelfAdjointEigenSolver<Matrix> es(K * K.transpose());
    const double lip = es.eigenvalues().maxCoeff() / T;
    const double step = 1.0 / lip;
    Matrix theta = Matrix::Zero(Y.rows(), T);
    double prev = kInf;
    for (int it = 0; it < iters; ++it) {
        const Matrix grad = (theta * K - Y) * K.transpose() / T;
        Matrix z = theta - step * grad;
        for (int j = 0; j < T; ++j) {
            const double nj = z.col(j).norm();
            if (nj <= step * alpha) {
                z.col(j).setZero();
            } else {
                z.col(j) *= (nj - step * alpha) / nj;
            }
        }
        theta = z;
        const double obj = lasso_objective(K, Y, theta, alpha);
        if (std::abs(prev - obj) < 1e-14 * std::max(1.0, std::abs(obj))) break;
        prev = obj;
    }
    return theta;
}

// Subgradient optimality check for Theta* of the group LASSO problem.
void check_kkt(const Matrix& K, const Matrix& Y, const Matrix& theta, double alpha) {
    const int T = static_cast<int>(K.cols());
    const Matrix R = Y - theta * K;
    for (int j = 0; j < T; ++j) {
        const Vector corr = R * K.row(j).transpose() / T;
        const double cn = theta.col(j).norm();
        if (cn > 0.0) {
            const Vector want = alpha * theta.col(j) / cn;
            CHECK((corr - want).norm() <= 1e-6 * std::max(1.0, want.norm()));
        } else {
            CHECK(corr.norm() <= alpha + 1e-8);
        }
    }
}

}  // namespace

TEST_CASE("alpha above alpha_max yields the zero solution") {
    const HankelSet hs = random_hankel(15, 3, 1);
    const GramMatrix gm = make_gram(hs);
    const double amax = lasso_alpha_max(gm.K, hs.Y_f);

    LassoConfig cfg;
    cfg.alpha = amax * 1.0001;
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    CHECK(res.theta.norm() == 0.0);
    CHECK(res.active.empty());
    check_kkt(gm.K, hs.Y_f, res.theta, cfg.alpha);

    cfg.alpha = amax * 0.9;
    const LassoResult res2 = group_lasso(gm, hs.Y_f, cfg);
    CHECK(res2.L > 0);
}

TEST_CASE("alpha -> 0 approaches the interpolating solution Y_f K^-1") {
    const HankelSet hs = random_hankel(10, 2, 2);
    const GramMatrix gm = make_gram(hs, 4.0);
    LassoConfig cfg;
    cfg.alpha = 1e-12;
    cfg.T_max = 20000;
    cfg.tol = 1e-13;
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    CHECK((hs.Y_f - res.theta * gm.K).norm() < 1e-6);
}

TEST_CASE("objective trace is monotonically non-increasing") {
    const HankelSet hs = random_hankel(20, 3, 3);
    const GramMatrix gm = make_gram(hs);
    LassoConfig cfg;
    cfg.alpha = 0.2 * lasso_alpha_max(gm.K, hs.Y_f);
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    REQUIRE(res.objective_trace.size() > 1);
    for (std::size_t i = 1; i < res.objective_trace.size(); ++i) {
        CHECK(res.objective_trace[i] <=
              res.objective_trace[i - 1] + 1e-12 * std::abs(res.objective_trace[i - 1]));
    }
    CHECK(res.converged);
}

TEST_CASE("KKT conditions hold at the coordinate-descent solution") {
    for (unsigned seed : {4u, 5u, 6u}) {
        const HankelSet hs = random_hankel(15, 2, seed);
        const GramMatrix gm = make_gram(hs);
        LassoConfig cfg;
        cfg.alpha = 0.3 * lasso_alpha_max(gm.K, hs.Y_f);
        cfg.tol = 1e-12;
        cfg.T_max = 50000;
        const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
        check_kkt(gm.K, hs.Y_f, res.theta, cfg.alpha);
    }
}

TEST_CASE("coordinate descent matches the proximal-gradient oracle objective") {
    for (unsigned seed : {7u, 8u, 9u}) {
        const HankelSet hs = random_hankel(15, 2, seed);
        const GramMatrix gm = make_gram(hs);
        LassoConfig cfg;
        cfg.alpha = 0.25 * lasso_alpha_max(gm.K, hs.Y_f);
        cfg.tol = 1e-12;
        cfg.T_max = 50000;
        const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
        const Matrix oracle = prox_gradient_oracle(gm.K, hs.Y_f, cfg.alpha, 200000);
        const double obj_cd = lasso_objective(gm.K, hs.Y_f, res.theta, cfg.alpha);
        const double obj_pg = lasso_objective(gm.K, hs.Y_f, oracle, cfg.alpha);
        CHECK(std::abs(obj_cd - obj_pg) <= 1e-8 * std::max(1.0, std::abs(obj_pg)));
    }
}

TEST_CASE("solution objective is bounded by the zero and ridge references") {
    const HankelSet hs = random_hankel(12, 2, 10);
    const GramMatrix gm = make_gram(hs);
    LassoConfig cfg;
    cfg.alpha = 0.3 * lasso_alpha_max(gm.K, hs.Y_f);
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    const double obj = lasso_objective(gm.K, hs.Y_f, res.theta, cfg.alpha);
    CHECK(obj <= lasso_objective(gm.K, hs.Y_f, Matrix::Zero(hs.Y_f.rows(), 12), cfg.alpha) + 1e-12);

    // Ridge reference with matching quadratic term.
    const int T = 12;
    const Matrix ridge =
        (gm.K * gm.K.transpose() / T + cfg.alpha * Matrix::Identity(T, T))
            .ldlt()
            .solve(gm.K * hs.Y_f.transpose() / T)
            .transpose();
    CHECK(obj <= lasso_objective(gm.K, hs.Y_f, ridge, cfg.alpha) + 1e-12);
}

TEST_CASE("group_lasso rejects non-finite inputs") {
    const HankelSet hs = random_hankel(6, 2, 11);
    GramMatrix gm = make_gram(hs);
    gm.K(0, 0) = std::nan("");
    CHECK_THROWS_AS(group_lasso(gm, hs.Y_f, LassoConfig{}), std::invalid_argument);
}

TEST_CASE("extract_basis keeps the active rows of K") {
    const HankelSet hs = random_hankel(15, 2, 12);
    const GramMatrix gm = make_gram(hs);
    LassoConfig cfg;
    cfg.alpha = 0.3 * lasso_alpha_max(gm.K, hs.Y_f);
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    REQUIRE(res.L > 0);
    const BasisModel basis = extract_basis(gm, res);
    CHECK(basis.L == res.L);
    CHECK(basis.Phi.rows() == res.L);
    CHECK(basis.Phi.cols() == 15);
    for (int i = 0; i < res.L; ++i) {
        CHECK(basis.Phi.row(i) == gm.K.row(res.active[i]));
    }
    // Evaluating the basis at training columns reproduces Phi columns.
    for (int j = 0; j < 15; ++j) {
        const Vector phi = basis.evaluate(trajectory_column(hs, j));
        CHECK((phi - basis.Phi.col(j)).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("full active set reproduces K itself") {
    const HankelSet hs = random_hankel(8, 2, 13);
    const GramMatrix gm = make_gram(hs);
    LassoResult res;
    res.theta = Matrix::Ones(hs.Y_f.rows(), 8);
    for (int j = 0; j < 8; ++j) res.active.push_back(j);
    res.L = 8;
    const BasisModel basis = extract_basis(gm, res);
    CHECK(basis.Phi == gm.K);
}

TEST_CASE("empty active set is an error advising smaller alpha") {
    const HankelSet hs = random_hankel(8, 2, 14);
    const GramMatrix gm = make_gram(hs);
    LassoResult res;
    res.theta = Matrix::Zero(hs.Y_f.rows(), 8);
    CHECK_THROWS_WITH_AS(extract_basis(gm, res), doctest::Contains("alpha"),
                         std::invalid_argument);
}

TEST_CASE("refit_widths with a singleton incumbent grid is a bitwise fixed point") {
    const HankelSet hs = random_hankel(15, 2, 15);
    const GramMatrix gm = make_gram(hs);
    LassoConfig cfg;
    cfg.alpha = 0.3 * lasso_alpha_max(gm.K, hs.Y_f);
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    const BasisModel basis = extract_basis(gm, res);
    const HankelSet val = random_hankel(15, 2, 16);

    const BasisModel refit = refit_widths(basis, hs, val, {basis.widths});
    CHECK(refit.widths.eta == basis.widths.eta);
    CHECK(refit.Phi == basis.Phi);
}

TEST_CASE("refit_widths never increases validation error when the incumbent is in the grid") {
    const HankelSet hs = random_hankel(15, 2, 17);
    const HankelSet val = random_hankel(15, 2, 18);
    const GramMatrix gm = make_gram(hs);
    LassoConfig cfg;
    cfg.alpha = 0.2 * lasso_alpha_max(gm.K, hs.Y_f);
    const LassoResult res = group_lasso(gm, hs.Y_f, cfg);
    const BasisModel basis = extract_basis(gm, res);

    const int d = basis.d;
    std::vector<KernelWidths> grid{basis.widths, KernelWidths{Vector::Constant(d, 0.5)},
                                   KernelWidths{Vector::Constant(d, 2.0)}};
    std::vector<double> scores;
    const BasisModel refit = refit_widths(basis, hs, val, grid, &scores);
    CHECK(*std::min_element(scores.begin(), scores.end()) <= scores[0] + 1e-15);

    // Refined Phi columns equal the basis evaluated under the new widths.
    const Matrix Z = trajectory_matrix(hs);
    for (int j = 0; j < 15; ++j) {
        CHECK(refit.Phi.col(j) == kvec(Z.col(j), refit.centers, refit.widths));
    }
}
