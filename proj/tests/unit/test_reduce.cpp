#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dpc/hankel.hpp"
#include "dpc/reduce.hpp"

using namespace dpc;

namespace {

Matrix random_matrix(int r, int c, unsigned seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix M(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) M(i, j) = dist(rng);
    }
    return M;
}

// Noise-free data from a random stable LTI system (m = p = 1).
Dataset lti_dataset(int n_samples, unsigned seed) {
    Rng rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix A(2, 2);
    A << 0.8, 0.2, -0.1, 0.7;
    Vector B(2), C(2);
    B << 1.0, 0.5;
    C << 1.0, -0.3;
    Dataset d;
    Vector x = Vector::Zero(2);
    for (int k = 0; k < n_samples; ++k) {
        const double u = dist(rng);
        d.u.push_back(Vector::Constant(1, u));
        d.y.push_back(Vector::Constant(1, C.dot(x)));
        x = A * x + B * u;
    }
    d.count = n_samples;
    return d;
}

}  // namespace

TEST_CASE("pinv special cases") {
    CHECK((pinv(Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() < 1e-14);
    const Matrix Z = Matrix::Zero(3, 5);
    const Matrix Zp = pinv(Z);
    CHECK(Zp.rows() == 5);
    CHECK(Zp.cols() == 3);
    CHECK(Zp.norm() == 0.0);
}

TEST_CASE("pinv satisfies the four Penrose conditions") {
    const Matrix A = random_matrix(4, 7, 1);
    const Matrix Ap = pinv(A);
    CHECK((A * Ap * A - A).norm() < 1e-10);
    CHECK((Ap * A * Ap - Ap).norm() < 1e-10);
    CHECK(((A * Ap).transpose() - A * Ap).norm() < 1e-10);
    CHECK(((Ap * A).transpose() - Ap * A).norm() < 1e-10);
}

TEST_CASE("pinv rejects non-finite input") {
    Matrix A = Matrix::Ones(2, 2);
    A(0, 0) = std::nan("");
    CHECK_THROWS_AS(pinv(A), std::invalid_argument);
}

TEST_CASE("svd_reduce reconstruction and orthonormality") {
    const Matrix Phi = random_matrix(5, 50, 2);
    const Matrix Yf = random_matrix(3, 50, 3);
    const ReducedData red = svd_reduce(Phi, Yf);

    CHECK((red.V1.transpose() * red.V1 - Matrix::Identity(8, 8)).norm() < 1e-12);

    // [Phi_t; Yf_t] must equal U * Sigma_1 of the stacked SVD.
    Matrix D(8, 50);
    D << Phi, Yf;
    Eigen::BDCSVD<Matrix> svd(D, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix stacked_t(8, 8);
    stacked_t << red.Phi_t, red.Yf_t;
    const Matrix us1 = svd.matrixU() * svd.singularValues().asDiagonal();
    CHECK((stacked_t - us1).norm() < 1e-10);
}

TEST_CASE("projector rank for orthonormal Phi rows and zero Y_f") {
    Matrix Phi = Matrix::Zero(3, 40);
    Phi(0, 0) = Phi(1, 1) = Phi(2, 2) = 1.0;  // orthonormal rows
    const Matrix Yf = Matrix::Zero(4, 40);
    const ReducedData red = svd_reduce(Phi, Yf);
    CHECK(red.proj_null.trace() == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(red.null_basis.cols() == 4);
}

TEST_CASE("svd_reduce enforces T > Np + L") {
    const Matrix Phi = random_matrix(5, 8, 4);
    const Matrix Yf = random_matrix(3, 8, 5);
    CHECK_THROWS_AS(svd_reduce(Phi, Yf), std::invalid_argument);
}

TEST_CASE("projector identities hold on random instances") {
    for (unsigned seed = 0; seed < 10; ++seed) {
        const int L = 3 + static_cast<int>(seed % 4);
        const int np = 2 + static_cast<int>(seed % 3);
        const int T = 30 + 7 * static_cast<int>(seed);
        const Matrix Phi = random_matrix(L, T, 100 + seed);
        const Matrix Yf = random_matrix(np, T, 200 + seed);
        const ReducedData red = svd_reduce(Phi, Yf);
        const Matrix& P = red.proj_null;

        CHECK((P * P - P).norm() < 1e-10);
        CHECK((P.transpose() - P).norm() < 1e-10);
        CHECK((red.Phi_t * P).norm() < 1e-10);
        CHECK((P * red.Phi_t_pinv).norm() < 1e-10);
        CHECK((P - red.null_basis * red.null_basis.transpose()).norm() < 1e-10);
    }
}

TEST_CASE("Lemma-2-style equivalence of reduced and full predictors") {
    Rng rng(7);
    std::uniform_int_distribution<int> t_dist(30, 200);
    std::uniform_int_distribution<int> l_dist(2, 8);
    std::uniform_int_distribution<int> np_dist(1, 4);
    for (int trial = 0; trial < 50; ++trial) {
        const int L = l_dist(rng);
        const int np = np_dist(rng);
        const int T = std::max(t_dist(rng), L + np + 1);
        const Matrix Phi = random_matrix(L, T, 300 + trial);
        const Matrix Yf = random_matrix(np, T, 400 + trial);
        const ReducedData red = svd_reduce(Phi, Yf);

        const Matrix full = Yf * pinv(Phi);
        const Matrix reduced = red.Yf_t * red.Phi_t_pinv;
        CHECK((reduced - full).norm() / (1.0 + full.norm()) < 1e-8);

        // Identities from the equivalence proof.
        const Matrix Phip = pinv(Phi);
        CHECK((Phip - red.V1 * red.V1.transpose() * Phip).norm() < 1e-9);
        CHECK((red.Phi_t_pinv - red.V1.transpose() * Phip).norm() < 1e-9);
    }
}

TEST_CASE("feasibility mapping between reduced and full decision vectors") {
    const Matrix Phi = random_matrix(5, 60, 8);
    const Matrix Yf = random_matrix(3, 60, 9);
    const ReducedData red = svd_reduce(Phi, Yf);
    Matrix D(8, 60);
    D << Phi, Yf;
    Matrix Dt(8, 8);
    Dt << red.Phi_t, red.Yf_t;

    Rng rng(10);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        Vector gt(8);
        for (int i = 0; i < 8; ++i) gt(i) = dist(rng);
        // g = V1 g~ reproduces the reduced image exactly.
        CHECK((D * (red.V1 * gt) - Dt * gt).norm() < 1e-10);

        Vector g(60);
        for (int i = 0; i < 60; ++i) g(i) = dist(rng);
        // g~ = V1^T g reproduces the full image.
        CHECK((Dt * (red.V1.transpose() * g) - D * g).norm() < 1e-10);
    }
}

TEST_CASE("spc_matrix agrees with the normal-equations oracle") {
    const Matrix Phi = random_matrix(4, 20, 11);
    const Matrix Yf = random_matrix(3, 20, 12);
    const ReducedData red = svd_reduce(Phi, Yf);
    const PredictorMatrix pm = spc_matrix(Phi, Yf, red);

    const Matrix oracle = Yf * Phi.transpose() * (Phi * Phi.transpose()).inverse();
    CHECK((pm.M - oracle).norm() < 1e-8 * std::max(1.0, oracle.norm()));
    CHECK(pm.full_vs_reduced_gap < 1e-8);
    CHECK_FALSE(pm.rank_deficient);
}

TEST_CASE("spc predictor reproduces self-consistent data") {
    const Matrix Phi = random_matrix(4, 30, 13);
    const Matrix Yf = Phi;  // Y_f = I * Phi
    const ReducedData red = svd_reduce(Phi, Yf);
    const PredictorMatrix pm = spc_matrix(Phi, Yf, red);
    CHECK((pm.M - Matrix::Identity(4, 4)).norm() < 1e-9);
}

TEST_CASE("reduced stacked matrix is square at the paper scale") {
    const int L = 60, np = 20, T = 2000;
    const Matrix Phi = random_matrix(L, T, 14);
    const Matrix Yf = random_matrix(np, T, 15);
    const ReducedData red = svd_reduce(Phi, Yf);
    CHECK(red.Phi_t.cols() == L + np);
    CHECK(red.Phi_t.rows() + red.Yf_t.rows() == L + np);
}

TEST_CASE("lti_reduced_projector properties on noise-free LTI data") {
    const int t_ini = 2, N = 4, T = 60;
    const Dataset d = lti_dataset(t_ini + T + N - 1 + 1, 20);
    const HankelConfig cfg{t_ini, N, T, 1, 1};
    const HankelSet hs = build_hankel(d, cfg);

    const int q = (t_ini + N - 1) * 1 + t_ini * 1;  // identity-basis row count
    const Matrix Phi_lin = trajectory_matrix(hs);
    REQUIRE(Phi_lin.rows() == q);

    const ReducedData red = svd_reduce(Phi_lin, hs.Y_f, q);
    const Matrix Pi = lti_reduced_projector(hs.U_p, hs.Y_p, hs.U_f, red.V1);

    CHECK(Pi.rows() == q);
    CHECK(Pi.cols() == q);
    CHECK((Pi - Pi.transpose()).norm() < 1e-10);
    CHECK((Pi * Pi - Pi).norm() < 1e-10);

    // (I - Pi) annihilates V1^T g for any g in the row space of [U_p;Y_p;U_f].
    Matrix Z(q, T);
    Z << hs.U_p, hs.Y_p, hs.U_f;
    const Matrix Zp = pinv(Z);
    Rng rng(21);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        Vector w(q);
        for (int i = 0; i < q; ++i) w(i) = dist(rng);
        const Vector g = Zp * w;
        const Vector gt = red.V1.transpose() * g;
        CHECK(((Matrix::Identity(q, q) - Pi) * gt).norm() < 1e-9 * std::max(1.0, gt.norm()));
    }

    // Doubling T leaves the projector size unchanged.
    const int T2 = 2 * T;
    const Dataset d2 = lti_dataset(t_ini + T2 + N - 1 + 1, 22);
    const HankelSet hs2 = build_hankel(d2, HankelConfig{t_ini, N, T2, 1, 1});
    const ReducedData red2 = svd_reduce(trajectory_matrix(hs2), hs2.Y_f, q);
    const Matrix Pi2 = lti_reduced_projector(hs2.U_p, hs2.Y_p, hs2.U_f, red2.V1);
    CHECK(Pi2.rows() == q);
    CHECK(Pi2.cols() == q);
}

TEST_CASE("sigma tail is reported when the kept block truncates real directions") {
    const Matrix Phi = random_matrix(5, 40, 23);
    const Matrix Yf = random_matrix(3, 40, 24);
    const ReducedData full = svd_reduce(Phi, Yf);
    CHECK(full.sigma_tail == 0.0);  // thin SVD keeps every direction
    const ReducedData trunc = svd_reduce(Phi, Yf, 4);
    CHECK(trunc.sigma_tail > 0.0);
}
