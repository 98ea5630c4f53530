#include <doctest.h>

#include "ovfree/convolve.hpp"
#include "ovfree/scalar.hpp"
#include "ovfree/transforms.hpp"

using namespace ovfree;

namespace {

ScalarDist random_dist(std::mt19937_64& rng, int order, double mean_floor = 0.6) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarDist d;
    d.order = order;
    double mean = (u(rng) > 0 ? 1.0 : -1.0) * (mean_floor + 0.4 * std::abs(u(rng)));
    d.m.push_back(mean);
    for (int k = 2; k <= order; ++k) d.m.push_back(u(rng));
    return d;
}

} // namespace

TEST_CASE("scalar series primitives") {
    // Reciprocal of 1 - z is geometric.
    ScalarSeries f = ScalarSeries::constant(6, 1.0);
    f.c[1] = -1.0;
    ScalarSeries r = s_reciprocal(f);
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(r.c[k] - 1.0) < 1e-13);

    // Compositional inverse of z/(1-z) is z/(1+z).
    ScalarSeries moebius = ScalarSeries::zero(6);
    for (int k = 1; k <= 6; ++k) moebius.c[k] = 1.0;
    ScalarSeries inv = s_comp_inverse(moebius);
    for (int k = 1; k <= 6; ++k)
        CHECK(std::abs(inv.c[k] - (k % 2 == 1 ? 1.0 : -1.0)) < 1e-12);
    ScalarSeries round = s_compose(moebius, inv);
    CHECK(std::abs(round.c[1] - 1.0) < 1e-12);
    for (int k : {0, 2, 3, 4, 5, 6}) CHECK(std::abs(round.c[k]) < 1e-12);

    CHECK_THROWS_AS(s_reciprocal(ScalarSeries::zero(4)), singularity_error);
    CHECK_THROWS_AS(s_comp_inverse(ScalarSeries::constant(4, 1.0)), domain_error);
}

TEST_CASE("composition with z/(1-z) is an algebra homomorphism") {
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ScalarSeries moebius = ScalarSeries::zero(8);
    for (int k = 1; k <= 8; ++k) moebius.c[k] = 1.0;
    ScalarSeries a = ScalarSeries::zero(8), b = ScalarSeries::zero(8);
    for (int k = 0; k <= 8; ++k) {
        a.c[k] = u(rng);
        b.c[k] = u(rng);
    }
    ScalarSeries lhs = s_compose(s_mul(a, b), moebius);
    ScalarSeries rhs = s_mul(s_compose(a, moebius), s_compose(b, moebius));
    CHECK(s_max_diff(lhs, rhs) < 1e-12);
}

TEST_CASE("T-transform fixtures") {
    // Point mass delta_c: R(z) = cz, T = c (the convention fixture).
    ScalarDist d2 = scalar_point_mass(2.0, 8);
    ScalarSeries t = scalar_T(d2);
    CHECK(std::abs(t.c[0] - 2.0) < 1e-12);
    for (int k = 1; k <= t.order; ++k) CHECK(std::abs(t.c[k]) < 1e-12);

    ScalarDist d1 = scalar_point_mass(1.0, 8);
    ScalarSeries t1 = scalar_T(d1);
    CHECK(std::abs(t1.c[0] - 1.0) < 1e-12);

    // Free Poisson lambda = 1: moments 1, 2, 5, 14, ...; T(z) = 1 + z.
    ScalarDist fp = scalar_free_poisson(1.0, 8);
    CHECK(std::abs(fp.m[1] - 2.0) < 1e-12);
    CHECK(std::abs(fp.m[3] - 14.0) < 1e-12);
    ScalarSeries tfp = scalar_T(fp);
    CHECK(std::abs(tfp.c[0] - 1.0) < 1e-11);
    CHECK(std::abs(tfp.c[1] - 1.0) < 1e-11);
    for (int k = 2; k <= tfp.order; ++k) CHECK(std::abs(tfp.c[k]) < 1e-10);

    // Round trip through R^{-1}: z / T(z) composed back gives R.
    std::mt19937_64 rng(93);
    ScalarDist d = random_dist(rng, 8);
    ScalarSeries td = scalar_T(d);
    ScalarSeries rinv = s_shift_up(s_reciprocal(td));
    ScalarSeries r = s_comp_inverse(rinv);
    CHECK(s_max_diff(r, scalar_R(d)) < 1e-10);

    ScalarDist centered = scalar_rademacher(8);
    CHECK_THROWS_AS(scalar_T(centered), domain_error);
}

TEST_CASE("cT fixtures and the M-inverse identity") {
    // mu = nu = delta_c: cT = T = c.
    ScalarDist dc = scalar_point_mass(1.5, 8);
    ScalarPair diag{dc, dc};
    ScalarSeries ct = scalar_cT(diag);
    CHECK(std::abs(ct.c[0] - 1.5) < 1e-12);
    for (int k = 1; k <= ct.order; ++k) CHECK(std::abs(ct.c[k]) < 1e-11);

    // nu = delta_1: R_nu^{-1}(z) = z, so cT(z) = cR(z)/z.
    std::mt19937_64 rng(95);
    ScalarDist mu = random_dist(rng, 8);
    ScalarPair p1{mu, scalar_point_mass(1.0, 8)};
    ScalarSeries lhs = scalar_cT(p1);
    ScalarSeries rhs = s_shift_down(scalar_cR(p1)).truncated(lhs.order);
    CHECK(s_max_diff(lhs, rhs) < 1e-11);

    // Dual-path identity: cT(z) = (1/calM_nu^{-1}(z)) B_mu(calM_nu^{-1}(z)).
    ScalarPair p{random_dist(rng, 8), random_dist(rng, 8)};
    ScalarSeries ct2 = scalar_cT(p);
    ScalarSeries minv = s_comp_inverse(scalar_calM(p.nu));
    ScalarSeries bmu = scalar_B(p.mu);
    ScalarSeries expect =
        s_mul(s_reciprocal(s_shift_down(minv)),
              s_shift_down(s_compose(bmu, minv)).truncated(minv.order - 1));
    CHECK(s_max_diff(ct2, expect) < 1e-10);

    // mu = nu degenerates to the free transform.
    ScalarPair same{p.nu, p.nu};
    CHECK(s_max_diff(scalar_cT(same), scalar_T(p.nu)) < 1e-10);
}

TEST_CASE("multiplicative convolution") {
    // delta_a x delta_b = delta_ab.
    ScalarDist da = scalar_point_mass(2.0, 8), db = scalar_point_mass(-1.5, 8);
    ScalarDist dab = mult_convolve_free(da, db);
    ScalarDist expect = scalar_point_mass(-3.0, 8);
    for (int k = 0; k < 8; ++k) CHECK(std::abs(dab.m[k] - expect.m[k]) < 1e-9);

    // delta_2 x mu dilates the moments by 2^k.
    std::mt19937_64 rng(97);
    ScalarDist mu = random_dist(rng, 8);
    ScalarDist dil = mult_convolve_free(scalar_point_mass(2.0, 8), mu);
    for (int k = 1; k <= 8; ++k)
        CHECK(std::abs(dil.m[k - 1] - std::pow(2.0, k) * mu.m[k - 1]) < 1e-8);

    // Pairs with mu = nu reduce to the free case on both coordinates.
    ScalarDist nu = random_dist(rng, 8);
    ScalarPair x{mu, mu}, y{nu, nu};
    ScalarPair prod = mult_convolve_cfree(x, y);
    ScalarDist fprod = mult_convolve_free(mu, nu);
    for (int k = 0; k < 8; ++k) {
        CHECK(std::abs(prod.nu.m[k] - fprod.m[k]) < 1e-9);
        CHECK(std::abs(prod.mu.m[k] - fprod.m[k]) < 1e-9);
    }

    CHECK_THROWS_AS(mult_convolve_free(scalar_rademacher(8), mu), domain_error);
}

TEST_CASE("multiplicativity closes against re-extraction") {
    std::mt19937_64 rng(99);
    ScalarDist x = random_dist(rng, 8), y = random_dist(rng, 8);
    ScalarDist prod = mult_convolve_free(x, y);
    ScalarSeries t_prod = scalar_T(prod);
    ScalarSeries t_direct = s_mul(scalar_T(x), scalar_T(y));
    CHECK(s_max_diff(t_prod, t_direct) < 1e-9);

    ScalarPair px{random_dist(rng, 8), x}, py{random_dist(rng, 8), y};
    ScalarPair cprod = mult_convolve_cfree(px, py);
    ScalarSeries ct_prod = scalar_cT(cprod);
    ScalarSeries ct_direct = s_mul(scalar_cT(px), scalar_cT(py));
    CHECK(s_max_diff(ct_prod, ct_direct) < 1e-9);
}

TEST_CASE("shift lemma and BP homomorphism") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        ScalarPair x{random_dist(rng, 8), random_dist(rng, 8)};
        ScalarPair y{random_dist(rng, 8), random_dist(rng, 8)};
        ScalarBPReport rep = verify_bp_homomorphism(x, y);
        CHECK(rep.shift_lemma_residual < 1e-9);
        CHECK(rep.hom_residual < 1e-9);
        CHECK(rep.t_shift_residual < 1e-9);
    }

    // T-level single-coordinate check for a shifted semicircle.
    ScalarDist ssc = scalar_shift(scalar_semicircle(8), 1.0);
    ScalarSeries lhs = scalar_T(scalar_bp(ssc));
    ScalarSeries moebius = ScalarSeries::zero(lhs.order);
    for (int k = 1; k <= lhs.order; ++k) moebius.c[k] = 1.0;
    ScalarSeries rhs = s_compose(scalar_T(ssc).truncated(lhs.order), moebius);
    CHECK(s_max_diff(lhs, rhs) < 1e-10);

    // Point-mass pairs run at machine precision.
    ScalarPair a{scalar_point_mass(2.0, 8), scalar_point_mass(2.0, 8)};
    ScalarPair b{scalar_point_mass(-0.5, 8), scalar_point_mass(3.0, 8)};
    ScalarBPReport exact = verify_bp_homomorphism(a, b);
    CHECK(exact.shift_lemma_residual < 1e-12);
    CHECK(exact.hom_residual < 1e-12);

    ScalarPair zero_mean{scalar_rademacher(8), scalar_rademacher(8)};
    CHECK_THROWS_AS(verify_bp_homomorphism(zero_mean, a), domain_error);
}

TEST_CASE("scalar shift matches binomial re-expansion") {
    ScalarDist rad = scalar_rademacher(6);
    ScalarDist shifted = scalar_shift(rad, 1.0);
    // (1 + X)^k moments with X rademacher: sum over even j of C(k, j) = 2^{k-1}.
    CHECK(std::abs(shifted.m[0] - 1.0) < 1e-13);
    CHECK(std::abs(shifted.m[1] - 2.0) < 1e-13);
    CHECK(std::abs(shifted.m[2] - 4.0) < 1e-13);
    CHECK(std::abs(shifted.m[3] - 8.0) < 1e-13);
}

TEST_CASE("scalar layer agrees with the operator layer at d = 1") {
    std::mt19937_64 rng(103);
    OperatorModel mod = model_random(rng, 1, 3);
    OVDistribution ov_mu = moments_from_model(mod, ModelMap::theta, 6);
    OVDistribution ov_nu = moments_from_model(mod, ModelMap::E_B, 6);
    ScalarDist s_mu = scalar_from_ov(ov_mu), s_nu = scalar_from_ov(ov_nu);

    // B, R, cR agree coefficientwise.
    NCSeries b_op = B_series(ov_mu);
    ScalarSeries b_sc = scalar_B(s_mu);
    for (int k = 0; k <= 6; ++k)
        CHECK(std::abs(b_op.coeff[k].at(0)(0, 0) - b_sc.c[k]) < 1e-10);
    NCSeries r_op = R_series(ov_nu);
    ScalarSeries r_sc = scalar_R(s_nu);
    for (int k = 0; k <= 6; ++k)
        CHECK(std::abs(r_op.coeff[k].at(0)(0, 0) - r_sc.c[k]) < 1e-10);
    DistPair p{ov_mu, ov_nu};
    NCSeries cr_op = cR_series(p);
    ScalarSeries cr_sc = scalar_cR({s_mu, s_nu});
    for (int k = 0; k <= 6; ++k)
        CHECK(std::abs(cr_op.coeff[k].at(0)(0, 0) - cr_sc.c[k]) < 1e-10);

    // BP agrees through the moment data.
    OVDistribution bp_op = bp_map(ov_nu);
    ScalarDist bp_sc = scalar_bp(s_nu);
    ScalarDist bp_op_sc = scalar_from_ov(bp_op);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(bp_sc.m[k] - bp_op_sc.m[k]) < 1e-10);
}
