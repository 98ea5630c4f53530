#include <doctest.h>

#include "ovfree/transforms.hpp"

using namespace ovfree;

namespace {

double scalar_coeff(const NCSeries& s, int k) { return s.coeff[k].at(0)(0, 0).real(); }

DistPair model_pair(std::mt19937_64& rng, int dB, int order, int copies = 1) {
    OperatorModel mod = model_random(rng, dB, 3, copies);
    return {moments_from_model(mod, ModelMap::theta, order),
            moments_from_model(mod, ModelMap::E_B, order)};
}

} // namespace

TEST_CASE("moment series fixtures and the superdiagonal round trip") {
    InclusionSpec inc = InclusionSpec::identity(1);
    OVDistribution rad = make_rademacher(inc, 6);
    NCSeries m = M_series(rad);
    CHECK(scalar_coeff(m, 0) == doctest::Approx(1.0));
    CHECK(scalar_coeff(m, 2) == doctest::Approx(1.0));
    CHECK(scalar_coeff(m, 3) == doctest::Approx(0.0));
    CHECK(scalar_coeff(m, 4) == doctest::Approx(1.0));

    // Superdiagonal evaluation: the top-right block of M at the nilpotent
    // with b_i on the superdiagonal recovers mu(X b1 X b2 ... X bn).
    std::mt19937_64 rng(21);
    OperatorModel mod = model_random(rng, 2, 2);
    OVDistribution d = moments_from_model(mod, ModelMap::E_B, 5);
    NCSeries md = M_series(d);
    const int n = 3; // word X b1 X b2 X b3 X ... with 3 inner letters
    Mat a = Mat::Zero((n + 1) * 2, (n + 1) * 2);
    std::vector<Mat> bs;
    for (int i = 0; i < n; ++i) {
        Mat bi = random_matrix(rng, 2);
        bs.push_back(bi);
        a.block(i * 2, (i + 1) * 2, 2, 2) = bi;
    }
    Mat val = eval_nilpotent(md, a, n + 1);
    Mat top_right = val.block(0, n * 2, 2, 2);
    // mu(X b1 X b2 X b3) = m_3(b1, b2) * b3.
    std::vector<Mat> args = {bs[0], bs[1]};
    Mat expect = d.m(3).eval(args) * bs[2];
    CHECK((top_right - expect).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("B-transform fixtures") {
    InclusionSpec inc = InclusionSpec::identity(1);
    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 0.6), inc, 6);
    NCSeries b = B_series(pm);
    CHECK(scalar_coeff(b, 1) == doctest::Approx(0.6));
    for (int k = 2; k <= 6; ++k) CHECK(std::abs(scalar_coeff(b, k)) < 1e-12);

    OVDistribution rad = make_rademacher(inc, 6);
    NCSeries brad = B_series(rad);
    CHECK(scalar_coeff(brad, 2) == doctest::Approx(1.0));
    for (int k : {1, 3, 4, 5, 6})
        if (k != 2) CHECK(std::abs(scalar_coeff(brad, k)) < 1e-12);

    OVDistribution zero = make_point_mass(Mat::Zero(1, 1), inc, 6);
    CHECK(B_series(zero).max_abs() < 1e-14);
}

TEST_CASE("R-transform fixtures") {
    InclusionSpec inc = InclusionSpec::identity(1);
    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 0.6), inc, 6);
    NCSeries r = R_series(pm);
    CHECK(scalar_coeff(r, 1) == doctest::Approx(0.6));
    for (int k = 2; k <= 6; ++k) CHECK(std::abs(scalar_coeff(r, k)) < 1e-11);

    // Rademacher free cumulants: kappa_2 = 1, kappa_4 = -1, kappa_6 = 2;
    // cross-check m4 = kappa_4 + 2 kappa_2^2.
    OVDistribution rad = make_rademacher(inc, 6);
    NCSeries rrad = R_series(rad);
    double k2 = scalar_coeff(rrad, 2), k4 = scalar_coeff(rrad, 4), k6 = scalar_coeff(rrad, 6);
    CHECK(k2 == doctest::Approx(1.0));
    CHECK(k4 == doctest::Approx(-1.0));
    CHECK(k6 == doctest::Approx(2.0));
    CHECK(k4 + 2 * k2 * k2 == doctest::Approx(rad.m(4).at(0)(0, 0).real()));

    // Operator-valued semicircle: R(b) = eta(b) b and nothing else.
    Mat a(2, 2);
    a << 0.8, cplx(0.1, 0.3), 0.0, 1.2;
    std::vector<Mat> eta_units;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) eta_units.push_back(a.adjoint() * unit_mat(p, q, 2) * a);
    OVDistribution sc = make_ov_semicircle(eta_units, 2, 6);
    NCSeries rsc = R_series(sc);
    for (int v1 = 0; v1 < 4; ++v1)
        for (int v2 = 0; v2 < 4; ++v2) {
            Mat expect = eta_units[v1] * unit_mat(v2 / 2, v2 % 2, 2);
            CHECK((Mat(rsc.coeff[2].at(v1 * 4 + v2)) - expect).cwiseAbs().maxCoeff() < 1e-10);
        }
    for (int k : {1, 3, 4, 5, 6})
        if (k != 2) CHECK(rsc.coeff[k].max_abs() < 1e-10);

    std::mt19937_64 rng2(5);
    OperatorModel m = model_random(rng2, 1, 2, 2);
    OVDistribution bd = moments_from_model(m, ModelMap::theta, 4);
    CHECK_THROWS_AS(R_series(bd), type_error);
}

TEST_CASE("cR-transform degenerations and forward residual") {
    std::mt19937_64 rng(33);
    OperatorModel mod = model_random(rng, 1, 3);
    OVDistribution mu = moments_from_model(mod, ModelMap::theta, 5);
    OVDistribution nu = moments_from_model(mod, ModelMap::E_B, 5);
    OVDistribution zero = make_point_mass(Mat::Zero(1, 1), InclusionSpec::identity(1), 5);

    // nu = delta_0: cR collapses to the B-transform.
    DistPair with_zero{mu, zero};
    CHECK(max_coeff_diff(cR_series(with_zero), B_series(mu)) < 1e-12);

    // mu = nu: cR collapses to the R-transform.
    DistPair diag{nu, nu};
    CHECK(max_coeff_diff(cR_series(diag), R_series(nu)) < 1e-10);

    // Forward re-substitution: (M_mu - 1) M_nu = M_mu cR(b M_nu) to order N.
    DistPair p{mu, nu};
    NCSeries cr = cR_series(p);
    NCSeries m_mu = M_series(mu), m_nu = M_series(nu);
    NCSeries w = series_mul(NCSeries::identity_b(1, 5), m_nu);
    NCSeries lhs = series_mul(series_sub(m_mu, NCSeries::constant(p.mu.inc, 5, Mat::Identity(1, 1))), m_nu);
    NCSeries rhs = series_mul(m_mu, series_compose(cr, w));
    CHECK(max_coeff_diff(lhs, rhs) < 1e-10);
}

TEST_CASE("moments_from_transform inverts the extractions") {
    InclusionSpec inc = InclusionSpec::identity(1);
    // kind = R with t = z^2 gives the semicircle.
    NCSeries t = NCSeries::zero(inc, 6);
    t.coeff[2].at(0)(0, 0) = 1.0;
    OVDistribution sc = moments_from_transform(TransformKind::R, t);
    OVDistribution sc_direct = make_ov_semicircle({Mat::Identity(1, 1)}, 1, 6);
    for (double v : moment_distance(sc, sc_direct)) CHECK(v < 1e-12);

    // kind = B with t = z^2 gives the rademacher moments back.
    OVDistribution rad = moments_from_transform(TransformKind::B, t);
    OVDistribution rad_direct = make_rademacher(inc, 6);
    for (double v : moment_distance(rad, rad_direct)) CHECK(v < 1e-12);

    // B-additivity is Boolean convolution by construction.
    std::mt19937_64 rng(41);
    OperatorModel m1 = model_random(rng, 2, 2), m2 = model_random(rng, 2, 2);
    OVDistribution x = moments_from_model(m1, ModelMap::E_B, 5);
    OVDistribution y = moments_from_model(m2, ModelMap::E_B, 5);
    NCSeries bsum = series_add(B_series(x), B_series(y));
    OVDistribution via_b = moments_from_transform(TransformKind::B, bsum);
    OVDistribution via_oracle = oracle_convolve_boolean(x, y);
    for (double v : moment_distance(via_b, via_oracle)) CHECK(v < 1e-10);

    NCSeries nonzero = NCSeries::constant(inc, 6, Mat::Identity(1, 1));
    CHECK_THROWS_AS(moments_from_transform(TransformKind::B, nonzero), precondition_error);
}

TEST_CASE("linearization against the oracles") {
    std::mt19937_64 rng(43);
    for (int dB : {1, 2}) {
        OperatorModel m1 = model_random(rng, dB, 2), m2 = model_random(rng, dB, 2);
        OVDistribution x = moments_from_model(m1, ModelMap::E_B, 5);
        OVDistribution y = moments_from_model(m2, ModelMap::E_B, 5);
        OVDistribution fsum = oracle_convolve_free(x, y);
        CHECK(max_coeff_diff(R_series(fsum), series_add(R_series(x), R_series(y))) < 1e-9);
        OVDistribution bsum = oracle_convolve_boolean(x, y);
        CHECK(max_coeff_diff(B_series(bsum), series_add(B_series(x), B_series(y))) < 1e-9);
        DistPair px = model_pair(rng, dB, 5), py = model_pair(rng, dB, 5);
        DistPair csum = oracle_convolve_cfree(px, py);
        CHECK(max_coeff_diff(cR_series(csum), series_add(cR_series(px), cR_series(py))) <
              1e-9);
    }
}

TEST_CASE("generating pair extraction and reconstruction") {
    InclusionSpec inc = InclusionSpec::identity(1);
    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 0.8), inc, 6);
    GeneratingPair p = extract_generating_pair(B_series(pm));
    CHECK(std::abs(p.gamma(0, 0) - cplx(0.8, 0)) < 1e-12);
    for (const MultiMap& s : p.sigma) CHECK(s.max_abs() < 1e-12);

    OVDistribution rad = make_rademacher(inc, 6);
    GeneratingPair pr = extract_generating_pair(B_series(rad));
    CHECK(std::abs(pr.gamma(0, 0)) < 1e-12);
    CHECK(std::abs(pr.sigma[0].at(0)(0, 0) - cplx(1, 0)) < 1e-12);
    for (std::size_t j = 1; j < pr.sigma.size(); ++j) CHECK(pr.sigma[j].max_abs() < 1e-12);

    // Round trip on a random genuine transform, d = 2.
    std::mt19937_64 rng(47);
    OperatorModel mod = model_random(rng, 2, 3);
    OVDistribution d = moments_from_model(mod, ModelMap::E_B, 5);
    NCSeries b = B_series(d);
    NCSeries rebuilt = series_from_generating_pair(extract_generating_pair(b), 5);
    CHECK(max_coeff_diff(b, rebuilt) < 1e-10);

    // A corrupted top coefficient cannot factor through a trailing slot.
    NCSeries bad = b;
    bad.coeff[2].at(1) = Mat::Identity(2, 2) * 5.0;
    CHECK_THROWS_AS(extract_generating_pair(bad), structure_error);
}

TEST_CASE("sigma positivity separates FID from non-FID data") {
    // Semicircle R-pair: sigma_1 = id, rest zero -> PSD.
    OVDistribution sc = make_ov_semicircle({Mat::Identity(1, 1)}, 1, 6);
    GeneratingPair psc = extract_generating_pair(R_series(sc));
    PositivityReport ok = generating_pair_cp_report(psc, 2);
    CHECK(ok.pass);

    // Rademacher is not freely infinitely divisible: kappa_4 = -1 shows up as
    // a -1 eigenvalue in the sigma Gram matrix.
    OVDistribution rad = make_rademacher(InclusionSpec::identity(1), 6);
    GeneratingPair prad = extract_generating_pair(R_series(rad));
    PositivityReport bad = generating_pair_cp_report(prad, 2);
    CHECK_FALSE(bad.pass);
    CHECK(bad.min_eig < -0.5);
}
