#include <doctest.h>

#include "ovfree/subordination.hpp"

using namespace ovfree;

namespace {

Mat iy(double y, int d = 1) { return cplx(0.0, y) * Mat::Identity(d, d); }

OperatorModel fock_d2() {
    Mat a(2, 2);
    a << cplx(0.40, 0.0), cplx(0.10, 0.05), cplx(0.0, 0.0), cplx(0.30, 0.0);
    return model_fock_semicircle(a, 4);
}

Mat mat_pow(const Mat& x, int k) {
    Mat p = Mat::Identity(x.rows(), x.cols());
    for (int i = 0; i < k; ++i) p = p * x;
    return p;
}

} // namespace

TEST_CASE("cauchy transform fixtures") {
    // Point mass: G(b) = (b - beta)^{-1}.
    Mat beta(2, 2);
    beta << 0.5, 0.2, 0.2, -0.1;
    OperatorModel pm = model_point_mass(beta, InclusionSpec::identity(2));
    Mat b = iy(3.0, 2);
    Mat g = cauchy_G(pm, ModelMap::E_B, b);
    CHECK((g - invert(b - beta)).cwiseAbs().maxCoeff() < 1e-13);

    // Rademacher: G(iy) = ((iy-1)^{-1} + (iy+1)^{-1}) / 2.
    OperatorModel rad = model_rademacher(1);
    Mat gr = cauchy_G(rad, ModelMap::E_B, iy(2.0));
    cplx z(0.0, 2.0);
    cplx expect = 0.5 * (1.0 / (z - 1.0) + 1.0 / (z + 1.0));
    CHECK(std::abs(gr(0, 0) - expect) < 1e-14);

    // Large-argument asymptotics: || G(iy) - (iy)^{-1} || <= C / y^2.
    for (double y : {8.0, 16.0, 32.0}) {
        Mat gg = cauchy_G(rad, ModelMap::E_B, iy(y));
        double dev = std::abs(gg(0, 0) - 1.0 / cplx(0.0, y));
        CHECK(dev <= 1.1 / (y * y));
    }

    CHECK_THROWS_AS(cauchy_G(rad, ModelMap::E_B, Mat::Identity(1, 1)), precondition_error);
}

TEST_CASE("half-plane mapping properties of G and F") {
    std::mt19937_64 rng(71);
    OperatorModel mod = model_random(rng, 2, 3);
    for (int trial = 0; trial < 25; ++trial) {
        Mat b = random_half_plane_point(rng, 2, 0.2, 1.5);
        Mat g = cauchy_G(mod, ModelMap::E_B, b);
        CHECK(max_eig_herm(im_part(g)) < 1e-10);
        Mat f = invert(g);
        CHECK(min_eig_herm(im_part(f) - im_part(b)) > -1e-10);
    }
    // Amplified level 2.
    Mat b2 = random_half_plane_point(rng, 4, 0.3, 1.0);
    Mat g2 = cauchy_G(mod, ModelMap::E_B, b2, 2);
    CHECK(max_eig_herm(im_part(g2)) < 1e-10);
}

TEST_CASE("omega fixed point: point mass is immediate, rademacher converges") {
    OperatorModel pm0 = model_point_mass(Mat::Zero(1, 1), InclusionSpec::identity(1));
    FixedPointConfig cfg;
    OmegaResult r0 = omega_fixed_point(pm0, 2, iy(2.0), cfg);
    CHECK((r0.omega - iy(2.0)).cwiseAbs().maxCoeff() < 1e-12);

    OperatorModel rad = model_rademacher(1);
    OmegaResult r = omega_fixed_point(rad, 2, iy(2.0), cfg);
    CHECK(r.residual < 1e-12);
    CHECK(r.iterations <= 100);
    // Dual path: G_rad(omega(b)) matches the arcsine G-series at b = 2i. The
    // omitted terms alternate in phase with decreasing magnitude there, so the
    // tail is bounded by the first omitted moment term m_8 / 2^9.
    OVDistribution rad_d = moments_from_model(rad, ModelMap::E_B, 6);
    OVDistribution arcsine = convolve(ConvKind::free, rad_d, rad_d);
    Mat g_model = cauchy_G(rad, ModelMap::E_B, r.omega);
    Mat g_series = G_series_at(arcsine, iy(2.0));
    CHECK(op_norm(g_model - g_series) <= 70.0 / 512.0);
    // Away from the support the worst-case geometric bound applies.
    OmegaResult r3 = omega_fixed_point(rad, 2, iy(3.0), cfg);
    Mat g_model3 = cauchy_G(rad, ModelMap::E_B, r3.omega);
    Mat g_series3 = G_series_at(arcsine, iy(3.0));
    CHECK(op_norm(g_model3 - g_series3) <= series_tail_bound(2.0, 1.0 / 3.0, 6));

    FixedPointConfig tight;
    tight.max_iters = 2;
    CHECK_THROWS_AS(omega_fixed_point(rad, 2, iy(2.0), tight), convergence_error);
}

TEST_CASE("omega for the d=2 semicircle model at n_fold = 3") {
    OperatorModel sc = fock_d2();
    Mat b = iy(3.0, 2);
    OmegaResult r = omega_fixed_point(sc, 3, b);
    CHECK(r.residual < 1e-12);
    CHECK(min_eig_herm(im_part(r.omega) - im_part(b)) > -1e-10);
}

TEST_CASE("omega respects direct sums at amplified level") {
    OperatorModel rad = model_rademacher(1);
    Mat b1 = iy(3.0), b2 = cplx(0.4, 4.0) * Mat::Identity(1, 1);
    OmegaResult r1 = omega_fixed_point(rad, 2, b1);
    OmegaResult r2 = omega_fixed_point(rad, 2, b2);
    Mat bb = Mat::Zero(2, 2);
    bb(0, 0) = b1(0, 0);
    bb(1, 1) = b2(0, 0);
    OmegaResult r12 = omega_fixed_point(rad, 2, bb, {}, 2);
    Mat expect = Mat::Zero(2, 2);
    expect(0, 0) = r1.omega(0, 0);
    expect(1, 1) = r2.omega(0, 0);
    CHECK((r12.omega - expect).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("identity suite on point-mass models") {
    // At beta = 0 every moment vanishes, the series routes are exact, and all
    // residuals sit at machine precision.
    OperatorModel pm0 = model_point_mass(Mat::Zero(1, 1), InclusionSpec::identity(1));
    std::vector<SuiteRow> rows0 = verify_subordination_suite(pm0, pm0, {4.0}, 2, 6);
    REQUIRE(rows0.size() == 1);
    CHECK(rows0[0].g_residual < 1e-13);
    CHECK(rows0[0].nfold_h_residual < 1e-12);
    CHECK(rows0[0].sum_h_residual < 1e-12);
    CHECK(rows0[0].omega_sum_residual < 1e-12);
    CHECK(rows0[0].asym_residual < 1e-14);
    CHECK(rows0[0].pass);

    // At beta != 0 the geometric moment series has a genuine truncation tail;
    // the residuals must sit inside the explicit bounds.
    OperatorModel pm = model_point_mass(Mat::Constant(1, 1, 0.5), InclusionSpec::identity(1));
    std::vector<SuiteRow> rows = verify_subordination_suite(pm, pm, {4.0}, 2, 6);
    CHECK(rows[0].pass);
    CHECK(rows[0].omega_sum_consistency < 1e-10);
}

TEST_CASE("identity suite: rademacher pair within explicit tail bounds") {
    OperatorModel rad = model_rademacher(1);
    std::vector<SuiteRow> rows = verify_subordination_suite(rad, rad, {4.0, 6.0, 8.0}, 2, 6);
    for (const SuiteRow& row : rows) {
        CHECK(row.pass);
        CHECK(row.fp_residual < 1e-10);
        CHECK(row.g_residual <= row.g_bound);
        CHECK(row.nfold_h_residual <= row.nfold_h_bound);
        CHECK(row.sum_h_residual <= row.sum_h_bound);
        CHECK(row.omega_sum_residual <= row.omega_sum_bound);
        CHECK(row.omega_sum_consistency < 1e-8);
        CHECK(row.asym_residual <= row.asym_bound);
        CHECK(row.min_eig_im_omega_gap > -1e-10);
    }
    // The spec-level bound at y = 4, N = 6, M = 2: (2/4)^7 / (1 - 1/2).
    CHECK(rows[0].g_bound == doctest::Approx(std::pow(0.5, 7) / 0.5));
}

TEST_CASE("identity suite with distinct models") {
    std::mt19937_64 rng(73);
    OperatorModel mx = model_random(rng, 1, 3);
    OperatorModel my = model_random(rng, 1, 3);
    std::vector<SuiteRow> rows = verify_subordination_suite(mx, my, {4.0, 8.0}, 2, 6);
    for (const SuiteRow& row : rows) CHECK(row.pass);
}

TEST_CASE("grid guard rejects points too close to the spectrum") {
    OperatorModel rad = model_rademacher(1);
    CHECK_THROWS_AS(verify_subordination_suite(rad, rad, {0.5}, 2, 6), domain_error);
}

TEST_CASE("richardson moment recovery matches the model moments") {
    OperatorModel rad = model_rademacher(1);
    std::vector<Mat> fit = asymptotic_moments_fit(rad, ModelMap::E_B, 6);
    for (int k = 1; k <= 6; ++k) {
        Mat direct = rad.EB.apply(mat_pow(rad.X, k));
        CHECK((fit[k - 1] - direct).cwiseAbs().maxCoeff() < 1e-6);
    }
    std::mt19937_64 rng(79);
    OperatorModel mod = model_random(rng, 2, 2);
    std::vector<Mat> fit2 = asymptotic_moments_fit(mod, ModelMap::E_B, 6);
    for (int k = 1; k <= 6; ++k)
        CHECK((fit2[k - 1] - mod.EB.apply(mat_pow(mod.X, k))).cwiseAbs().maxCoeff() < 1e-6);
}
