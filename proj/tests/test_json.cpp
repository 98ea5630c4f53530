#include <doctest.h>

#include "ovfree/json_io.hpp"

using namespace ovfree;

TEST_CASE("matrix and inclusion round trips") {
    std::mt19937_64 rng(7);
    Mat a = random_matrix(rng, 3);
    Mat back = mat_from_json(mat_to_json(a));
    CHECK((a - back).cwiseAbs().maxCoeff() < 1e-11);

    InclusionSpec amp = InclusionSpec::amplified(2, 2);
    InclusionSpec amp_back = inclusion_from_json(inclusion_to_json(amp));
    CHECK(amp_back.dD == 4);
    for (int v = 0; v < 4; ++v)
        CHECK((amp.units[v] - amp_back.units[v]).cwiseAbs().maxCoeff() == 0.0);

    json shorthand = {{"kind", "identity"}, {"d_B", 2}};
    CHECK(inclusion_from_json(shorthand).is_identity());

    CHECK_THROWS_AS(mat_from_json(json::array()), ovfree::parse_error);
}

TEST_CASE("distribution, pair and series round trips") {
    std::mt19937_64 rng(11);
    OperatorModel mod = model_random(rng, 2, 2, 2);
    OVDistribution mu = moments_from_model(mod, ModelMap::theta, 5);
    OVDistribution mu_back = distribution_from_json(distribution_to_json(mu));
    CHECK(moment_distance(mu, mu_back)[0] < 1e-11);
    for (int k = 2; k <= 5; ++k) CHECK(mu.m(k).max_abs_diff(mu_back.m(k)) < 1e-11);

    DistPair p{mu, moments_from_model(mod, ModelMap::E_B, 5)};
    DistPair p_back = pair_from_json(pair_to_json(p));
    CHECK(p_back.nu.inc.is_identity());

    NCSeries s = ncseries_from_moments(mu);
    NCSeries s_back = series_from_json(series_to_json(s, "M"));
    CHECK(max_coeff_diff(s, s_back) < 1e-11);
}

TEST_CASE("model round trip preserves transforms") {
    std::mt19937_64 rng(13);
    OperatorModel mod = model_random(rng, 1, 3);
    OperatorModel back = model_from_json(model_to_json(mod));
    back.validate(rng);
    OVDistribution d1 = moments_from_model(mod, ModelMap::E_B, 5);
    OVDistribution d2 = moments_from_model(back, ModelMap::E_B, 5);
    for (double v : moment_distance(d1, d2)) CHECK(v < 1e-10);
}

TEST_CASE("scalar round trips") {
    ScalarDist fp = scalar_free_poisson(0.5, 8);
    ScalarDist back = scalar_dist_from_json(scalar_dist_to_json(fp));
    for (int k = 0; k < 8; ++k) CHECK(std::abs(fp.m[k] - back.m[k]) < 1e-11);
    ScalarPair pr{fp, scalar_point_mass(1.0, 8)};
    ScalarPair pr_back = scalar_pair_from_json(scalar_pair_to_json(pr));
    CHECK(std::abs(pr_back.nu.m[0] - cplx(1.0, 0.0)) < 1e-12);
}

TEST_CASE("writer rounds to twelve significant digits") {
    CHECK(round_sig(1.0 / 3.0) == doctest::Approx(0.333333333333).epsilon(1e-12));
    CHECK(format_number(2.0) == "2");
    CHECK(std::signbit(round_sig(-0.0)) == false);
}
