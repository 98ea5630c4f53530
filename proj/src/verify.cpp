#include "ovfree/verify.hpp"

#include <chrono>
#include <sstream>

#include "ovfree/json_io.hpp"

namespace ovfree {

namespace {

using clock_type = std::chrono::steady_clock;

double elapsed(clock_type::time_point t0) {
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

double moment_data_diff(const OVDistribution& a, const OVDistribution& b) {
    double worst = (a.mean - b.mean).cwiseAbs().maxCoeff();
    for (int k = 2; k <= a.order; ++k)
        worst = std::max(worst, a.m(k).max_abs_diff(b.m(k)));
    return worst;
}

OVDistribution random_nu(std::mt19937_64& rng, int dB, int order) {
    OperatorModel mod = model_random(rng, dB, 3);
    return moments_from_model(mod, ModelMap::E_B, order);
}

DistPair random_pair(std::mt19937_64& rng, int dB, int order, int copies) {
    OperatorModel mod = model_random(rng, dB, 3, copies);
    DistPair p;
    p.mu = moments_from_model(mod, ModelMap::theta, order);
    p.nu = moments_from_model(mod, ModelMap::E_B, order);
    return p;
}

CriterionResult oracle_equivalence_free(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{1, "oracle equivalence (free)", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 1);
    const int order = 6;
    for (int trial = 0; trial < 25; ++trial) {
        int dB = (trial % 2) + 1;
        OVDistribution x = random_nu(rng, dB, order);
        OVDistribution y = random_nu(rng, dB, order);
        OVDistribution via_transforms = convolve(ConvKind::free, x, y);
        OVDistribution via_oracle = oracle_convolve_free(x, y);
        r.value = std::max(r.value, moment_data_diff(via_transforms, via_oracle));
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold && r.seconds < 60.0;
    r.detail = "50 seeded distributions, d in {1,2}, N=6";
    return r;
}

CriterionResult oracle_equivalence_boolean(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{2, "oracle equivalence (Boolean)", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 2);
    const int order = 8;
    for (int trial = 0; trial < 25; ++trial) {
        int dB = (trial % 2) + 1;
        OVDistribution x = random_nu(rng, dB, order);
        OVDistribution y = random_nu(rng, dB, order);
        OVDistribution via_transforms = convolve(ConvKind::boolean, x, y);
        OVDistribution via_oracle = oracle_convolve_boolean(x, y);
        r.value = std::max(r.value, moment_data_diff(via_transforms, via_oracle));
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "50 seeded distributions, d in {1,2}, N=8";
    return r;
}

CriterionResult oracle_equivalence_cfree(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{3, "oracle equivalence (c-free)", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 3);
    const int order = 5;
    for (int trial = 0; trial < 30; ++trial) {
        int dB = (trial % 2) + 1;
        int copies = (trial % 3 == 0 && dB == 1) ? 2 : 1;
        DistPair x = random_pair(rng, dB, order, copies);
        DistPair y = random_pair(rng, dB, order, copies);
        DistPair via_transforms = convolve_cfree(x, y);
        DistPair via_oracle = oracle_convolve_cfree(x, y);
        r.value = std::max(r.value, moment_data_diff(via_transforms.mu, via_oracle.mu));
        r.value = std::max(r.value, moment_data_diff(via_transforms.nu, via_oracle.nu));
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "30 random pairs, d <= 2, N=5, both coordinates";
    return r;
}

CriterionResult linearization_closure(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{4, "linearization closure", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 4);
    for (int trial = 0; trial < 10; ++trial) {
        int dB = (trial % 2) + 1;
        OVDistribution x = random_nu(rng, dB, 6);
        OVDistribution y = random_nu(rng, dB, 6);
        OVDistribution fsum = oracle_convolve_free(x, y);
        r.value = std::max(
            r.value, max_coeff_diff(R_series(fsum), series_add(R_series(x), R_series(y))));
        OVDistribution bsum = oracle_convolve_boolean(x, y);
        r.value = std::max(
            r.value, max_coeff_diff(B_series(bsum), series_add(B_series(x), B_series(y))));
        DistPair px = random_pair(rng, dB, 5, 1);
        DistPair py = random_pair(rng, dB, 5, 1);
        DistPair csum = oracle_convolve_cfree(px, py);
        r.value = std::max(
            r.value, max_coeff_diff(cR_series(csum), series_add(cR_series(px), cR_series(py))));
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "R/B/cR of oracle outputs vs transform sums";
    return r;
}

CriterionResult free_clt(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{5, "free CLT decay", false, 0.0, 1e-2, 0.0, ""};
    HarnessReport rep = limit_harness(array_clt_rademacher(6, 256));
    bool ratios_ok = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
        double prev = rep.rows[i - 1].free_distance[3];
        double cur = rep.rows[i].free_distance[3];
        if (prev <= 0.0) continue;
        double ratio = cur / prev;
        if (ratio < 0.4 || ratio > 0.6) ratios_ok = false;
    }
    r.value = rep.rows.back().free_distance[3]; // order-4 distance at n = 256
    r.seconds = elapsed(t0);
    r.pass = ratios_ok && r.value < r.threshold;
    std::ostringstream det;
    det << "order-4 distance at n=256; per-doubling ratio in [0.4,0.6]: "
        << (ratios_ok ? "yes" : "no");
    r.detail = det.str();
    return r;
}

CriterionResult boolean_free_bp(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{6, "Boolean<->free Bercovici-Pata", false, 0.0, 1e-8, 0.0, ""};
    HarnessReport clt = limit_harness(array_clt_rademacher(6, 256));
    HarnessReport pm = limit_harness(array_point_mass(0.7, 6, 256));
    r.value = std::max(clt.bp_residual, pm.bp_residual);
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "bp_map(boolean limit) vs free limit, CLT and point-mass arrays";
    return r;
}

CriterionResult bp_identities(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{7, "BP series identities", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 7);
    for (int trial = 0; trial < 20; ++trial) {
        int dB = (trial % 2) + 1;
        OVDistribution nu = random_nu(rng, dB, 6);
        r.value = std::max(r.value, verify_bbp_identity(nu).max_residual);
        DistPair p = random_pair(rng, dB, 6, 1);
        r.value = std::max(r.value, verify_cfree_bbp_identity(p).max_residual);
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "20 random pairs, N=6";
    return r;
}

const std::vector<SuiteRow>& criterion_suite_rows() {
    static const std::vector<SuiteRow> rows = [] {
        FixedPointConfig cfg;
        cfg.tol = 1e-12;
        cfg.max_iters = 200;
        std::vector<double> grid = {4.0, 6.0, 8.0};
        OperatorModel rad = model_rademacher(1);
        std::vector<SuiteRow> all = verify_subordination_suite(rad, rad, grid, 2, 6, cfg);
        Mat a(2, 2);
        a << cplx(0.40, 0.0), cplx(0.10, 0.05), cplx(0.0, 0.0), cplx(0.30, 0.0);
        OperatorModel sc = model_fock_semicircle(a, 4);
        OperatorModel sc_pair = model_fock_semicircle_pair(a, 4);
        std::vector<SuiteRow> more = verify_subordination_suite(sc_pair, sc, grid, 2, 6, cfg);
        all.insert(all.end(), more.begin(), more.end());
        return all;
    }();
    return rows;
}

CriterionResult subordination_numerics(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{8, "subordination fixed points", false, 0.0, 1e-10, 0.0, ""};
    bool ok = true;
    double worst_fp = 0.0, worst_gap = 0.0;
    for (const SuiteRow& row : criterion_suite_rows()) {
        worst_fp = std::max(worst_fp, row.fp_residual);
        worst_gap = std::min(worst_gap, row.min_eig_im_omega_gap);
        if (row.fp_residual >= 1e-10 || row.iterations > 200) ok = false;
        if (row.g_residual > row.g_bound) ok = false;
        if (row.min_eig_im_omega_gap <= -1e-10) ok = false;
    }
    r.value = worst_fp;
    r.seconds = elapsed(t0);
    r.pass = ok;
    std::ostringstream det;
    det << "rademacher + d=2 semicircle, y in {4,6,8}; min eig(Im w - Im b) >= "
        << format_number(worst_gap);
    r.detail = det.str();
    return r;
}

CriterionResult identity_suite(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{9, "subordination identity suite", false, 0.0, 1.0, 0.0, ""};
    bool ok = true;
    double worst_margin = 0.0; // max residual/bound ratio
    for (const SuiteRow& row : criterion_suite_rows()) {
        auto ratio = [](double res, double bound) { return bound > 0 ? res / bound : 1e30; };
        for (double q : {ratio(row.nfold_h_residual, row.nfold_h_bound),
                         ratio(row.sum_h_residual, row.sum_h_bound),
                         ratio(row.omega_sum_residual, row.omega_sum_bound),
                         ratio(row.asym_residual, row.asym_bound),
                         ratio(row.g_residual, row.g_bound)}) {
            worst_margin = std::max(worst_margin, q);
            if (q > 1.0) ok = false;
        }
    }
    r.value = worst_margin;
    r.seconds = elapsed(t0);
    r.pass = ok;
    r.detail = "h-additivity, n-fold, omega-sum, asymptotic-series: residual/bound <= 1";
    return r;
}

CriterionResult half_plane_invariants(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{10, "half-plane invariants", false, 0.0, 1e-10, 0.0, ""};
    std::mt19937_64 rng(seed + 10);
    double worst = -1.0; // max over points of violation size
    for (int mtrial = 0; mtrial < 10; ++mtrial) {
        int dB = (mtrial % 2) + 1;
        OperatorModel mod = model_random(rng, dB, 3);
        for (int p = 0; p < 20; ++p) {
            Mat b = random_half_plane_point(rng, dB, 0.2, 1.5);
            Mat g = cauchy_G(mod, ModelMap::E_B, b);
            Mat f = invert(g);
            worst = std::max(worst, max_eig_herm(im_part(g)));
            worst = std::max(worst, -min_eig_herm(im_part(f) - im_part(b)));
        }
    }
    r.value = worst;
    r.seconds = elapsed(t0);
    r.pass = worst < 1e-10;
    r.detail = "200 random points: Im G < 0 and Im F >= Im b";
    return r;
}

CriterionResult nc_function_axioms(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{11, "nc-function axioms", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 11);
    for (int trial = 0; trial < 10; ++trial) {
        int dB = (trial % 2) + 1;
        OVDistribution d = random_nu(rng, dB, 6);
        NCSeries m = M_series(d);
        for (int level : {2, 3}) {
            // Strictly upper triangular block nilpotent.
            Mat a = Mat::Zero(level * dB, level * dB);
            for (int i = 0; i < level; ++i)
                for (int j = i + 1; j < level; ++j)
                    a.block(i * dB, j * dB, dB, dB) = random_matrix(rng, dB);
            Mat b = Mat::Zero(level * dB, level * dB);
            for (int i = 0; i < level; ++i)
                for (int j = i + 1; j < level; ++j)
                    b.block(i * dB, j * dB, dB, dB) = random_matrix(rng, dB);
            // Direct sums.
            Mat ab = Mat::Zero(2 * level * dB, 2 * level * dB);
            ab.topLeftCorner(level * dB, level * dB) = a;
            ab.bottomRightCorner(level * dB, level * dB) = b;
            Mat va = eval_nilpotent(m, a, level);
            Mat vb = eval_nilpotent(m, b, level);
            Mat vab = eval_nilpotent(m, ab, 2 * level);
            const int dD = d.inc.dD;
            Mat expect = Mat::Zero(2 * level * dD, 2 * level * dD);
            expect.topLeftCorner(level * dD, level * dD) = va;
            expect.bottomRightCorner(level * dD, level * dD) = vb;
            r.value = std::max(r.value, (vab - expect).cwiseAbs().maxCoeff());
            // Similarities by invertible scalar matrices.
            Mat s_small = random_matrix(rng, level) + 3.0 * Mat::Identity(level, level);
            Mat s_in = Mat::Zero(level * dB, level * dB);
            Mat s_out = Mat::Zero(level * dD, level * dD);
            for (int i = 0; i < level; ++i)
                for (int j = 0; j < level; ++j) {
                    s_in.block(i * dB, j * dB, dB, dB) =
                        s_small(i, j) * Mat::Identity(dB, dB);
                    s_out.block(i * dD, j * dD, dD, dD) =
                        s_small(i, j) * Mat::Identity(dD, dD);
                }
            Mat conj = s_in * a * invert(s_in);
            Mat lhs = eval_nilpotent(m, conj, level);
            Mat rhs = s_out * va * invert(s_out);
            r.value = std::max(r.value, (lhs - rhs).cwiseAbs().maxCoeff());
        }
    }
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold;
    r.detail = "direct-sum and similarity invariance of M-series evaluation";
    return r;
}

CriterionResult positivity_pipeline(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{12, "positivity pipeline", false, 0.0, 1e-8, 0.0, ""};
    const int order = 6, cutoff = 3;
    double worst = 0.0;
    bool ok = true;
    std::vector<OVDistribution> family;
    family.push_back(make_point_mass(Mat::Constant(1, 1, 0.8), InclusionSpec::identity(1), order));
    Mat beta(2, 2);
    beta << 1.0, 0.5, 0.5, -0.3;
    family.push_back(make_point_mass(beta, InclusionSpec::identity(2), order));
    family.push_back(make_rademacher(InclusionSpec::identity(1), order));
    family.push_back(make_rademacher(InclusionSpec::identity(2), order));
    family.push_back(make_ov_semicircle({Mat::Identity(1, 1)}, 1, order));
    {
        Mat a(2, 2);
        a << 1.0, 0.0, 0.0, 2.0;
        std::vector<Mat> eta;
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) eta.push_back(a.adjoint() * unit_mat(p, q, 2) * a);
        family.push_back(make_ov_semicircle(eta, 2, order));
    }
    family.push_back(make_scalar_arcsine(order));
    family.push_back(make_scalar_free_poisson(1.0, order));
    for (const OVDistribution& d : family) {
        PositivityReport rep = check_moment_positivity(d, cutoff);
        worst = std::min(worst, rep.min_eig);
        if (!rep.pass) ok = false;
    }
    // Hand-built invalid fixture: m_2 = -1.
    OVDistribution bad = OVDistribution::zero(InclusionSpec::identity(1), order);
    bad.m(2).at(0)(0, 0) = -1.0;
    PositivityReport brep = check_moment_positivity(bad, cutoff);
    if (brep.pass || std::abs(brep.min_eig + 1.0) > 1e-6) ok = false;
    r.value = worst; // least eigenvalue over the valid families
    r.seconds = elapsed(t0);
    r.pass = ok && worst >= -1e-8;
    std::ostringstream det;
    det << "built-in families pass at cutoff 3; invalid fixture min eig = "
        << format_number(brep.min_eig);
    r.detail = det.str();
    return r;
}

CriterionResult scalar_section5(std::uint64_t seed) {
    auto t0 = clock_type::now();
    CriterionResult r{13, "scalar multiplicative BP homomorphism", false, 0.0, 1e-9, 0.0, ""};
    std::mt19937_64 rng(seed + 13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const int order = 8;
    auto random_scalar_dist = [&]() {
        ScalarDist d;
        d.order = order;
        double mean = (u(rng) > 0 ? 1.0 : -1.0) * (0.6 + 0.4 * std::abs(u(rng)));
        d.m.push_back(mean);
        for (int k = 2; k <= order; ++k) d.m.push_back(u(rng));
        return d;
    };
    for (int trial = 0; trial < 20; ++trial) {
        ScalarPair x{random_scalar_dist(), random_scalar_dist()};
        ScalarPair y{random_scalar_dist(), random_scalar_dist()};
        ScalarBPReport rep = verify_bp_homomorphism(x, y);
        r.value = std::max({r.value, rep.shift_lemma_residual, rep.hom_residual,
                            rep.t_shift_residual});
    }
    // Point-mass fixtures must come out exact to machine precision.
    double fixture = 0.0;
    ScalarPair a{scalar_point_mass(2.0, order), scalar_point_mass(2.0, order)};
    ScalarPair b{scalar_point_mass(-0.5, order), scalar_point_mass(3.0, order)};
    ScalarBPReport rep = verify_bp_homomorphism(a, b);
    fixture = std::max({rep.shift_lemma_residual, rep.hom_residual, rep.t_shift_residual});
    r.seconds = elapsed(t0);
    r.pass = r.value < r.threshold && fixture < 1e-12;
    std::ostringstream det;
    det << "20 seeded pairs at N=8; delta fixtures residual = " << format_number(fixture);
    r.detail = det.str();
    return r;
}

CriterionResult corollary_power(std::uint64_t) {
    auto t0 = clock_type::now();
    CriterionResult r{14, "free-power divisibility corollary", false, 0.0, 1e-8, 0.0, ""};
    OVDistribution arcsine = make_scalar_arcsine(6);
    PowerDivisibilityReport rep = free_power_divisibility_check(arcsine, 2, 2);
    r.value = rep.cp.min_eig;
    r.seconds = elapsed(t0);
    r.pass = rep.cp.pass && rep.power_roundtrip < 1e-9;
    std::ostringstream det;
    det << "arcsine^{boolean 1/2} R-pair CP at cutoff 2; power roundtrip = "
        << format_number(rep.power_roundtrip);
    r.detail = det.str();
    return r;
}

} // namespace

std::vector<CriterionResult> run_acceptance(std::uint64_t seed) {
    std::vector<CriterionResult> out;
    out.push_back(oracle_equivalence_free(seed));
    out.push_back(oracle_equivalence_boolean(seed));
    out.push_back(oracle_equivalence_cfree(seed));
    out.push_back(linearization_closure(seed));
    out.push_back(free_clt(seed));
    out.push_back(boolean_free_bp(seed));
    out.push_back(bp_identities(seed));
    out.push_back(subordination_numerics(seed));
    out.push_back(identity_suite(seed));
    out.push_back(half_plane_invariants(seed));
    out.push_back(nc_function_axioms(seed));
    out.push_back(positivity_pipeline(seed));
    out.push_back(scalar_section5(seed));
    out.push_back(corollary_power(seed));
    return out;
}

std::vector<CriterionResult> run_random_sweep(std::uint64_t seed, int order, int dim,
                                              double tol) {
    std::vector<CriterionResult> out;
    std::mt19937_64 rng(seed);
    auto push = [&](const std::string& name, double value) {
        CriterionResult r;
        r.id = 100 + static_cast<int>(out.size());
        r.name = name;
        r.value = value;
        r.threshold = tol;
        r.pass = value < tol;
        out.push_back(r);
    };
    double lin_free = 0.0, lin_bool = 0.0, lin_cfree = 0.0, bbp = 0.0, cbbp = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        OVDistribution x = random_nu(rng, dim, order);
        OVDistribution y = random_nu(rng, dim, order);
        lin_free = std::max(lin_free,
                            moment_data_diff(convolve(ConvKind::free, x, y),
                                             oracle_convolve_free(x, y)));
        lin_bool = std::max(lin_bool,
                            moment_data_diff(convolve(ConvKind::boolean, x, y),
                                             oracle_convolve_boolean(x, y)));
        DistPair px = random_pair(rng, dim, order, 1);
        DistPair py = random_pair(rng, dim, order, 1);
        DistPair cs = convolve_cfree(px, py);
        DistPair co = oracle_convolve_cfree(px, py);
        lin_cfree = std::max(lin_cfree, std::max(moment_data_diff(cs.mu, co.mu),
                                                 moment_data_diff(cs.nu, co.nu)));
        bbp = std::max(bbp, verify_bbp_identity(x).max_residual);
        cbbp = std::max(cbbp, verify_cfree_bbp_identity(px).max_residual);
    }
    push("sweep: free convolution vs oracle", lin_free);
    push("sweep: boolean convolution vs oracle", lin_bool);
    push("sweep: c-free convolution vs oracle", lin_cfree);
    push("sweep: BP fixed-point identity", bbp);
    push("sweep: c-free BP identity", cbbp);
    return out;
}

std::string results_to_csv(const std::vector<CriterionResult>& rows) {
    // No timing column: the CSV artifact must be byte-identical across runs.
    std::ostringstream os;
    os << "id,name,pass,value,threshold,detail\n";
    for (const CriterionResult& r : rows) {
        std::string detail = r.detail;
        for (char& c : detail)
            if (c == ',') c = ';';
        os << r.id << "," << r.name << "," << (r.pass ? "PASS" : "FAIL") << ","
           << format_number(r.value) << "," << format_number(r.threshold) << "," << detail
           << "\n";
    }
    return os.str();
}

} // namespace ovfree
