#include <doctest.h>

#include "ovfree/convolve.hpp"

using namespace ovfree;

namespace {

std::vector<double> catalan(int n) {
    std::vector<double> c(n + 1, 0.0);
    c[0] = 1.0;
    for (int m = 1; m <= n; ++m)
        for (int i = 0; i < m; ++i) c[m] += c[i] * c[m - 1 - i];
    return c;
}

DistPair model_pair(std::mt19937_64& rng, int dB, int order) {
    OperatorModel mod = model_random(rng, dB, 3);
    return {moments_from_model(mod, ModelMap::theta, order),
            moments_from_model(mod, ModelMap::E_B, order)};
}

double pair_distance(const DistPair& a, const DistPair& b) {
    double worst = 0.0;
    for (double v : moment_distance(a.mu, b.mu)) worst = std::max(worst, v);
    for (double v : moment_distance(a.nu, b.nu)) worst = std::max(worst, v);
    return worst;
}

} // namespace

TEST_CASE("transform convolution equals the word-expansion oracles") {
    std::mt19937_64 rng(51);
    for (int dB : {1, 2}) {
        OperatorModel m1 = model_random(rng, dB, 2), m2 = model_random(rng, dB, 2);
        OVDistribution x = moments_from_model(m1, ModelMap::E_B, 6);
        OVDistribution y = moments_from_model(m2, ModelMap::E_B, 6);
        OVDistribution f1 = convolve(ConvKind::free, x, y);
        OVDistribution f2 = oracle_convolve_free(x, y);
        for (double v : moment_distance(f1, f2)) CHECK(v < 1e-9);
        OVDistribution b1 = convolve(ConvKind::boolean, x, y);
        OVDistribution b2 = oracle_convolve_boolean(x, y);
        for (double v : moment_distance(b1, b2)) CHECK(v < 1e-9);
        DistPair px = model_pair(rng, dB, 5), py = model_pair(rng, dB, 5);
        CHECK(pair_distance(convolve_cfree(px, py), oracle_convolve_cfree(px, py)) < 1e-9);
    }
}

TEST_CASE("guardrail boundary: d = 3 convolutions stay consistent") {
    std::mt19937_64 rng(53);
    OperatorModel m1 = model_random(rng, 3, 2), m2 = model_random(rng, 3, 2);
    OVDistribution x = moments_from_model(m1, ModelMap::E_B, 4);
    OVDistribution y = moments_from_model(m2, ModelMap::E_B, 4);
    OVDistribution f1 = convolve(ConvKind::free, x, y);
    OVDistribution f2 = oracle_convolve_free(x, y);
    for (double v : moment_distance(f1, f2)) CHECK(v < 1e-10);
    CHECK(verify_bbp_identity(x).max_residual < 1e-10);
}

TEST_CASE("rademacher fixtures through the transform route") {
    OVDistribution rad = make_rademacher(InclusionSpec::identity(1), 6);
    OVDistribution fsum = convolve(ConvKind::free, rad, rad);
    CHECK(fsum.m(2).at(0)(0, 0).real() == doctest::Approx(2.0));
    CHECK(fsum.m(4).at(0)(0, 0).real() == doctest::Approx(6.0));
    OVDistribution bsum = convolve(ConvKind::boolean, rad, rad);
    CHECK(bsum.m(2).at(0)(0, 0).real() == doctest::Approx(2.0));
    CHECK(bsum.m(4).at(0)(0, 0).real() == doctest::Approx(4.0));

    OVDistribution zero = make_point_mass(Mat::Zero(1, 1), InclusionSpec::identity(1), 6);
    for (auto kind : {ConvKind::free, ConvKind::boolean}) {
        OVDistribution s = convolve(kind, rad, zero);
        for (double v : moment_distance(s, rad)) CHECK(v < 1e-12);
    }
}

TEST_CASE("convolution powers") {
    OVDistribution rad = make_rademacher(InclusionSpec::identity(1), 6);
    OVDistribution twice = power(ConvKind::boolean, rad, 2.0);
    OVDistribution direct = convolve(ConvKind::boolean, rad, rad);
    for (double v : moment_distance(twice, direct)) CHECK(v < 1e-12);
    CHECK_FALSE(twice.formal);

    OVDistribution zerop = power(ConvKind::boolean, rad, 0.0);
    OVDistribution zero = make_point_mass(Mat::Zero(1, 1), InclusionSpec::identity(1), 6);
    for (double v : moment_distance(zerop, zero)) CHECK(v < 1e-14);

    OVDistribution half = power(ConvKind::free, rad, 0.5);
    CHECK(half.formal);
    OVDistribution back = power(ConvKind::free, half, 2.0);
    for (double v : moment_distance(back, rad)) CHECK(v < 1e-11);

    CHECK_THROWS_AS(power(ConvKind::free, rad, -1.0), domain_error);

    // Integer free powers equal iterated convolution.
    OVDistribution three = power(ConvKind::free, rad, 3.0);
    OVDistribution iter = convolve(ConvKind::free, convolve(ConvKind::free, rad, rad), rad);
    for (double v : moment_distance(three, iter)) CHECK(v < 1e-10);
}

TEST_CASE("bp_map fixtures: rademacher to semicircle, point masses fixed") {
    OVDistribution rad = make_rademacher(InclusionSpec::identity(1), 6);
    OVDistribution mapped = bp_map(rad);
    std::vector<double> cat = catalan(3);
    CHECK(mapped.m(2).at(0)(0, 0).real() == doctest::Approx(cat[1]));
    CHECK(mapped.m(4).at(0)(0, 0).real() == doctest::Approx(cat[2]));
    CHECK(mapped.m(6).at(0)(0, 0).real() == doctest::Approx(cat[3]));

    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 1.3), InclusionSpec::identity(1), 6);
    for (double v : moment_distance(bp_map(pm), pm)) CHECK(v < 1e-11);
}

TEST_CASE("bp_map is a boolean-to-free morphism") {
    std::mt19937_64 rng(57);
    for (int dB : {1, 2}) {
        OperatorModel m1 = model_random(rng, dB, 2), m2 = model_random(rng, dB, 2);
        OVDistribution x = moments_from_model(m1, ModelMap::E_B, 5);
        OVDistribution y = moments_from_model(m2, ModelMap::E_B, 5);
        OVDistribution lhs = bp_map(convolve(ConvKind::boolean, x, y));
        OVDistribution rhs = convolve(ConvKind::free, bp_map(x), bp_map(y));
        for (double v : moment_distance(lhs, rhs)) CHECK(v < 1e-10);
    }
}

TEST_CASE("pair bp_map restricted to mu = nu matches the single map") {
    std::mt19937_64 rng(59);
    OperatorModel mod = model_random(rng, 2, 2);
    OVDistribution nu = moments_from_model(mod, ModelMap::E_B, 5);
    DistPair diag{nu, nu};
    DistPair mapped = bp_map(diag);
    OVDistribution single = bp_map(nu);
    for (double v : moment_distance(mapped.nu, single)) CHECK(v < 1e-10);
    for (double v : moment_distance(mapped.mu, single)) CHECK(v < 1e-10);

    // Pair (mu, delta_0): the Boolean structure embeds and BP fixes mu.
    OVDistribution zero = make_point_mass(Mat::Zero(2, 2), InclusionSpec::identity(2), 5);
    DistPair boolean_pair{nu, zero};
    DistPair bmapped = bp_map(boolean_pair);
    for (double v : moment_distance(bmapped.mu, nu)) CHECK(v < 1e-10);
}

TEST_CASE("bbp identities on fixtures and random inputs") {
    OVDistribution rad = make_rademacher(InclusionSpec::identity(1), 6);
    CHECK(verify_bbp_identity(rad).max_residual < 1e-10);

    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 0.4), InclusionSpec::identity(1), 6);
    CHECK(verify_bbp_identity(pm).max_residual < 1e-12);

    Mat a(2, 2);
    a << 1.0, 0.0, 0.0, 2.0;
    std::vector<Mat> eta;
    for (int p = 0; p < 2; ++p)
        for (int q = 0; q < 2; ++q) eta.push_back(a.adjoint() * unit_mat(p, q, 2) * a);
    OVDistribution sc2 = make_ov_semicircle(eta, 2, 6);
    CHECK(verify_bbp_identity(sc2).max_residual < 1e-9);

    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 4; ++trial) {
        DistPair p = model_pair(rng, (trial % 2) + 1, 6);
        CHECK(verify_cfree_bbp_identity(p).max_residual < 1e-9);
        // mu = nu reduces to the single-distribution identity.
        DistPair diag2{p.nu, p.nu};
        CHECK(verify_cfree_bbp_identity(diag2).max_residual < 1e-9);
    }

    // Pairs over a genuine unital inclusion B in D.
    OperatorModel amp = model_random(rng, 1, 3, 2); // B = C, D = M_2
    DistPair wide{moments_from_model(amp, ModelMap::theta, 6),
                  moments_from_model(amp, ModelMap::E_B, 6)};
    CHECK(verify_cfree_bbp_identity(wide).max_residual < 1e-9);
    OperatorModel amp2 = model_random(rng, 2, 2, 2); // B = M_2, D = M_4
    DistPair wide2{moments_from_model(amp2, ModelMap::theta, 5),
                   moments_from_model(amp2, ModelMap::E_B, 5)};
    CHECK(verify_cfree_bbp_identity(wide2).max_residual < 1e-9);
    DistPair cs = convolve_cfree(wide2, wide2);
    DistPair co = oracle_convolve_cfree(wide2, wide2);
    CHECK(pair_distance(cs, co) < 1e-9);
}

TEST_CASE("limit harness: CLT decay, bp relation, condition (4) scoreboard") {
    ArraySpec spec = array_clt_rademacher(6, 256);
    HarnessReport rep = limit_harness(spec);
    REQUIRE(rep.rows.size() == 9);
    // Boolean side is exactly stationary at the rademacher limit.
    for (const HarnessRow& row : rep.rows)
        for (double v : row.boolean_distance) CHECK(v < 1e-12);
    CHECK(rep.boolean_converged);
    // Free side decays like 1/n at order 4.
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        double ratio = rep.rows[i].free_distance[3] / rep.rows[i - 1].free_distance[3];
        CHECK(ratio == doctest::Approx(0.5).epsilon(0.1));
    }
    CHECK(rep.rows.back().free_distance[3] < 1e-2);
    CHECK(rep.bp_residual < 1e-10);
    CHECK(rep.cp_pass);
    // Scaled-moment limits: gamma is exact, sigma residual decays like 1/k_n.
    CHECK(rep.cond4_gamma_residual < 1e-12);
    CHECK(rep.cond4_sigma_residual < 2.0 / 256);

    HarnessReport pm = limit_harness(array_point_mass(0.7, 6, 64));
    CHECK(pm.bp_residual < 1e-12);
    CHECK(pm.boolean_converged);
    CHECK(pm.free_converged);
    for (const HarnessRow& row : pm.rows) {
        for (double v : row.boolean_distance) CHECK(v < 1e-12);
        for (double v : row.free_distance) CHECK(v < 1e-12);
    }
}

TEST_CASE("pair limit harness: c-free sums reach the BP image") {
    // Point-mass pair arrays are exactly stationary: the c-free k-fold sums
    // equal the BP image of the Boolean candidate pair at every n.
    PairArraySpec spec = pair_array_point_mass(0.6, -0.4, 6, 64);
    PairHarnessReport rep = pair_limit_harness(spec);
    CHECK(rep.cfree_converged);
    CHECK(rep.bp_pair_residual < 1e-11);
    for (const PairHarnessRow& row : rep.rows) {
        for (double v : row.mu_distance) CHECK(v < 1e-11);
        for (double v : row.nu_distance) CHECK(v < 1e-11);
    }

    // A decaying (non-stationary) pair array: distances to the BP image of
    // the Boolean candidates shrink monotonically.
    std::mt19937_64 rng(67);
    OperatorModel mod = model_random(rng, 1, 3);
    DistPair base{moments_from_model(mod, ModelMap::theta, 6),
                  moments_from_model(mod, ModelMap::E_B, 6)};
    PairArraySpec decay;
    decay.name = "pair_clt";
    for (int n = 1; n <= 256; n *= 2) decay.k_values.push_back(n);
    decay.term = [base](int k) {
        DistPair p;
        p.mu = dilate(base.mu, 1.0 / k);
        p.nu = dilate(base.nu, 1.0 / k);
        return p;
    };
    // Boolean candidates: the largest-row Boolean sums stand in for the
    // limits; the scoreboard then tracks monotone decay of the c-free sums
    // toward their BP image.
    DistPair largest = decay.term(1 << 10);
    decay.boolean_candidate.mu =
        power(ConvKind::boolean, largest.mu, double(1 << 10));
    decay.boolean_candidate.nu =
        power(ConvKind::boolean, largest.nu, double(1 << 10));
    decay.uniform_bound = 4.0;
    PairHarnessReport drep = pair_limit_harness(decay);
    for (std::size_t i = 1; i < drep.rows.size(); ++i) {
        double prev = 0.0, cur = 0.0;
        for (double v : drep.rows[i - 1].mu_distance) prev = std::max(prev, v);
        for (double v : drep.rows[i].mu_distance) cur = std::max(cur, v);
        CHECK(cur <= prev + 1e-12);
    }
}

TEST_CASE("limit harness guardrails") {
    ArraySpec spec = array_clt_rademacher(6, 256);
    spec.k_values = {1, 1};
    CHECK_THROWS_AS(limit_harness(spec), usage_error);
    ArraySpec big = array_clt_rademacher(6, 256);
    big.k_values.push_back(5000);
    CHECK_THROWS_AS(limit_harness(big), resource_error);
    ArraySpec unbounded = array_clt_rademacher(6, 16);
    unbounded.uniform_bound = 0.1;
    CHECK_THROWS_AS(limit_harness(unbounded), precondition_error);
}

TEST_CASE("free power divisibility corollary") {
    OVDistribution arcsine = make_scalar_arcsine(6);
    PowerDivisibilityReport rep = free_power_divisibility_check(arcsine, 2, 2);
    CHECK(rep.cp.pass);
    CHECK(rep.power_roundtrip < 1e-10);

    OVDistribution sc = make_ov_semicircle({Mat::Identity(1, 1)}, 1, 6);
    CHECK(free_power_divisibility_check(sc, 2, 2).cp.pass);

    OVDistribution pm = make_point_mass(Mat::Constant(1, 1, 0.9), InclusionSpec::identity(1), 6);
    CHECK(free_power_divisibility_check(pm, 3, 2).cp.pass);
}
