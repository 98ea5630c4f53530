#include "ovfree/convolve.hpp"

#include <cmath>

namespace ovfree {

OVDistribution convolve(ConvKind kind, const OVDistribution& x, const OVDistribution& y) {
    switch (kind) {
        case ConvKind::free: {
            NCSeries r = series_add(R_series(x), R_series(y));
            return moments_from_transform(TransformKind::R, r);
        }
        case ConvKind::boolean: {
            NCSeries b = series_add(B_series(x), B_series(y));
            return moments_from_transform(TransformKind::B, b);
        }
        case ConvKind::cfree:
            throw usage_error("convolve: c-free convolution acts on pairs");
    }
    throw usage_error("convolve: unknown kind");
}

DistPair convolve_cfree(const DistPair& x, const DistPair& y) {
    DistPair out;
    out.nu = convolve(ConvKind::free, x.nu, y.nu);
    NCSeries cr = series_add(cR_series(x), cR_series(y));
    NCSeries m_nu = M_series(out.nu);
    out.mu = moments_from_transform(TransformKind::cR, cr, &m_nu);
    return out;
}

OVDistribution power(ConvKind kind, const OVDistribution& x, double t) {
    if (t < 0.0) throw domain_error("power: exponent must be nonnegative");
    switch (kind) {
        case ConvKind::boolean: {
            NCSeries b = series_scale(B_series(x), t);
            return moments_from_transform(TransformKind::B, b);
        }
        case ConvKind::free: {
            NCSeries r = series_scale(R_series(x), t);
            OVDistribution out = moments_from_transform(TransformKind::R, r);
            double tint;
            out.formal = (std::modf(t, &tint) != 0.0);
            return out;
        }
        case ConvKind::cfree:
            throw usage_error("power: use pair_power_cfree for pairs");
    }
    throw usage_error("power: unknown kind");
}

DistPair pair_power_cfree(const DistPair& x, double t) {
    if (t < 0.0) throw domain_error("pair_power_cfree: exponent must be nonnegative");
    DistPair out;
    out.nu = power(ConvKind::free, x.nu, t);
    NCSeries cr = series_scale(cR_series(x), t);
    NCSeries m_nu = M_series(out.nu);
    out.mu = moments_from_transform(TransformKind::cR, cr, &m_nu);
    out.mu.formal = out.nu.formal;
    return out;
}

OVDistribution bp_map(const OVDistribution& x) {
    if (!x.inc.is_identity())
        throw type_error("bp_map: the Boolean-to-free bijection requires D = B");
    return moments_from_transform(TransformKind::R, B_series(x));
}

DistPair bp_map(const DistPair& x) {
    DistPair out;
    out.nu = bp_map(x.nu);
    NCSeries m_nu = M_series(out.nu);
    out.mu = moments_from_transform(TransformKind::cR, B_series(x.mu), &m_nu);
    return out;
}

namespace {

// u(b) = b (1 - B(b))^{-1}, the series inverse of F_{BP}(b^{-1}).
NCSeries subordination_argument(const NCSeries& b_series) {
    NCSeries one = NCSeries::constant(b_series.inc, b_series.order,
                                      Mat::Identity(b_series.inc.dD, b_series.inc.dD));
    NCSeries denom = series_sub(one, b_series);
    return series_mul(NCSeries::identity_b(b_series.inc.dB, b_series.order),
                      series_reciprocal(denom));
}

} // namespace

ResidualReport verify_bbp_identity(const OVDistribution& nu) {
    ResidualReport rep;
    OVDistribution nup = bp_map(nu);
    NCSeries b_nu = B_series(nu);
    NCSeries b_nup = B_series(nup);
    rep.add("R(BP(nu)) = B(nu)", max_coeff_diff(R_series(nup), b_nu));

    // Fixed-point form of the bijection after the b -> b^{-1} reduction:
    // 1 - B_{nu'} = (1/2) [ 1 + (1 - B_nu(u)) (1 - B_{nu'}) ],  u = b(1-B_{nu'})^{-1}.
    NCSeries one = NCSeries::constant(nu.inc, nu.order, Mat::Identity(nu.inc.dD, nu.inc.dD));
    NCSeries lhs = series_sub(one, b_nup);
    NCSeries u = subordination_argument(b_nup);
    NCSeries inner = series_sub(one, series_compose(b_nu, u));
    NCSeries rhs = series_scale(series_add(one, series_mul(inner, lhs)), 0.5);
    rep.add("subordination fixed point", max_coeff_diff(lhs, rhs));
    return rep;
}

ResidualReport verify_cfree_bbp_identity(const DistPair& p) {
    ResidualReport rep;
    DistPair bp = bp_map(p);
    NCSeries b_mu = B_series(p.mu);
    NCSeries b_mup = B_series(bp.mu);
    NCSeries b_nup = B_series(bp.nu);
    // h_{mu'}(b) = h_mu(F_{BP(nu)}(b)) reduces to
    // B_{mu'}(b) = B_mu(u(b)) (1 - B_{nu'}(b)) with u = b(1-B_{nu'})^{-1}.
    NCSeries u = subordination_argument(b_nup);
    NCSeries one =
        NCSeries::constant(p.mu.inc, p.mu.order, Mat::Identity(p.mu.inc.dD, p.mu.inc.dD));
    NCSeries one_b =
        NCSeries::constant(bp.nu.inc, bp.nu.order, Mat::Identity(bp.nu.inc.dD, bp.nu.inc.dD));
    NCSeries factor = embed_series(series_sub(one_b, b_nup), p.mu.inc);
    NCSeries rhs = series_mul(series_compose(b_mu, u), factor);
    rep.add("h(BP pair) composition", max_coeff_diff(b_mup, rhs));
    return rep;
}

PowerDivisibilityReport free_power_divisibility_check(const OVDistribution& mu, int n,
                                                      int cutoff) {
    if (n < 2) throw usage_error("free_power_divisibility_check: n must be >= 2");
    PowerDivisibilityReport rep;
    OVDistribution frac = power(ConvKind::boolean, mu, 1.0 - 1.0 / n);
    GeneratingPair pair = extract_generating_pair(R_series(frac));
    rep.cp = generating_pair_cp_report(pair, cutoff);

    OVDistribution root = power(ConvKind::free, mu, 1.0 / n);
    OVDistribution back = power(ConvKind::free, root, static_cast<double>(n));
    std::vector<double> dist = moment_distance(mu, back);
    for (double v : dist) rep.power_roundtrip = std::max(rep.power_roundtrip, v);
    return rep;
}

HarnessReport limit_harness(const ArraySpec& spec) {
    if (spec.k_values.empty()) throw usage_error("limit_harness: empty array spec");
    for (std::size_t i = 1; i < spec.k_values.size(); ++i)
        if (spec.k_values[i] <= spec.k_values[i - 1])
            throw usage_error("limit_harness: k_n must be strictly increasing");
    if (spec.k_values.back() > (1 << 10))
        throw resource_error("limit_harness: k_n growth beyond the 2^10 guardrail");

    HarnessReport rep;
    const int order = spec.boolean_candidate.order;
    OVDistribution mu_last = spec.term(spec.k_values.back());
    for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
        int k = spec.k_values[i];
        OVDistribution mu_n = spec.term(k);
        // Truncated infinitesimality surrogate: the row sums stay uniformly
        // bounded by M^j at every order j.
        OVDistribution bsum = power(ConvKind::boolean, mu_n, static_cast<double>(k));
        OVDistribution fsum = power(ConvKind::free, mu_n, static_cast<double>(k));
        double bound = op_norm(fsum.mean);
        for (int j = 2; j <= order; ++j)
            bound = std::max(bound, std::pow(fsum.m(j).max_abs(), 1.0 / j));
        if (bound > spec.uniform_bound * (1.0 + 1e-9))
            throw precondition_error("limit_harness: uniform boundedness check failed");
        HarnessRow row;
        row.n = static_cast<int>(i) + 1;
        row.k = k;
        row.boolean_distance = moment_distance(bsum, spec.boolean_candidate);
        row.free_distance = moment_distance(fsum, spec.free_candidate);
        rep.rows.push_back(std::move(row));
    }

    // Boolean<->free correspondence between the candidate limits, checked
    // through the transform pipeline, independently of the runs above.
    OVDistribution mapped = bp_map(spec.boolean_candidate);
    std::vector<double> bp_dist = moment_distance(mapped, spec.free_candidate);
    for (double v : bp_dist) rep.bp_residual = std::max(rep.bp_residual, v);

    // FID consistency of the free limit at truncation.
    GeneratingPair fid_pair = extract_generating_pair(R_series(spec.free_candidate));
    int cutoff = std::max(1, (order - 2) / 2);
    PositivityReport cp = generating_pair_cp_report(fid_pair, cutoff);
    rep.cp_min_eig = cp.min_eig;
    rep.cp_pass = cp.pass;

    // Scaled-moment limits: k_n-scaled moments of the terms against the
    // generating pair of the Boolean limit's B-transform.
    {
        GeneratingPair gp = extract_generating_pair(B_series(spec.boolean_candidate));
        const int k = spec.k_values.back();
        rep.cond4_gamma_residual = op_norm(static_cast<double>(k) * mu_last.mean - gp.gamma);
        double worst = 0.0;
        for (int j = 2; j <= order; ++j) {
            MultiMap scaled = mu_last.m(j); // arity j-1
            scaled *= static_cast<double>(k);
            worst = std::max(worst, scaled.max_abs_diff(gp.sigma[j - 2]));
        }
        rep.cond4_sigma_residual = worst;
    }

    auto converged = [&](auto pick) {
        const HarnessRow& last = rep.rows.back();
        for (double v : pick(last))
            if (v > 1e-6) return false;
        // Monotone-decay sanity check over the last rows.
        std::size_t look = std::min<std::size_t>(5, rep.rows.size());
        for (std::size_t i = rep.rows.size() - look + 1; i < rep.rows.size(); ++i) {
            double prev = 0.0, cur = 0.0;
            for (double v : pick(rep.rows[i - 1])) prev = std::max(prev, v);
            for (double v : pick(rep.rows[i])) cur = std::max(cur, v);
            if (cur > prev * (1.0 + 1e-9) + 1e-12) return false;
        }
        return true;
    };
    rep.boolean_converged = converged([](const HarnessRow& r) { return r.boolean_distance; });
    rep.free_converged = converged([](const HarnessRow& r) { return r.free_distance; });
    return rep;
}

PairHarnessReport pair_limit_harness(const PairArraySpec& spec) {
    if (spec.k_values.empty()) throw usage_error("pair_limit_harness: empty array spec");
    if (spec.k_values.back() > (1 << 10))
        throw resource_error("pair_limit_harness: k_n growth beyond the 2^10 guardrail");
    PairHarnessReport rep;
    DistPair target = bp_map(spec.boolean_candidate);
    for (std::size_t i = 0; i < spec.k_values.size(); ++i) {
        int k = spec.k_values[i];
        DistPair pair_n = spec.term(k);
        DistPair csum = pair_power_cfree(pair_n, static_cast<double>(k));
        double bound = op_norm(csum.mu.mean);
        for (int j = 2; j <= csum.mu.order; ++j)
            bound = std::max(bound, std::pow(csum.mu.m(j).max_abs(), 1.0 / j));
        if (bound > spec.uniform_bound * (1.0 + 1e-9))
            throw precondition_error("pair_limit_harness: uniform boundedness check failed");
        PairHarnessRow row;
        row.n = static_cast<int>(i) + 1;
        row.k = k;
        row.mu_distance = moment_distance(csum.mu, target.mu);
        row.nu_distance = moment_distance(csum.nu, target.nu);
        rep.rows.push_back(std::move(row));
    }
    // The nu coordinate of the BP image must agree with the single-variable
    // bijection applied to the Boolean nu-limit.
    OVDistribution nu_single = bp_map(spec.boolean_candidate.nu);
    for (double v : moment_distance(target.nu, nu_single))
        rep.bp_pair_residual = std::max(rep.bp_pair_residual, v);
    const PairHarnessRow& last = rep.rows.back();
    rep.cfree_converged = true;
    for (double v : last.mu_distance)
        if (v > 1e-6) rep.cfree_converged = false;
    for (double v : last.nu_distance)
        if (v > 1e-6) rep.cfree_converged = false;
    return rep;
}

ArraySpec array_clt_rademacher(int order, int n_max) {
    ArraySpec spec;
    spec.name = "clt_rademacher";
    for (int n = 1; n <= n_max; n *= 2) spec.k_values.push_back(n);
    InclusionSpec inc = InclusionSpec::identity(1);
    OVDistribution rad = make_rademacher(inc, order);
    spec.term = [rad](int k) { return dilate(rad, 1.0 / std::sqrt(double(k))); };
    spec.boolean_candidate = rad;
    std::vector<Mat> eta = {Mat::Identity(1, 1)};
    spec.free_candidate = make_ov_semicircle(eta, 1, order);
    spec.uniform_bound = 2.0;
    return spec;
}

ArraySpec array_point_mass(double beta, int order, int n_max) {
    ArraySpec spec;
    spec.name = "point_mass";
    for (int n = 1; n <= n_max; n *= 2) spec.k_values.push_back(n);
    InclusionSpec inc = InclusionSpec::identity(1);
    spec.term = [beta, inc, order](int k) {
        return make_point_mass(Mat::Constant(1, 1, beta / k), inc, order);
    };
    spec.boolean_candidate = make_point_mass(Mat::Constant(1, 1, beta), inc, order);
    spec.free_candidate = spec.boolean_candidate;
    spec.uniform_bound = std::max(2.0, 2.0 * std::abs(beta));
    return spec;
}

PairArraySpec pair_array_point_mass(double beta_mu, double beta_nu, int order, int n_max) {
    PairArraySpec spec;
    spec.name = "pair_point_mass";
    for (int n = 1; n <= n_max; n *= 2) spec.k_values.push_back(n);
    InclusionSpec inc = InclusionSpec::identity(1);
    spec.term = [beta_mu, beta_nu, inc, order](int k) {
        DistPair p;
        p.mu = make_point_mass(Mat::Constant(1, 1, beta_mu / k), inc, order);
        p.nu = make_point_mass(Mat::Constant(1, 1, beta_nu / k), inc, order);
        return p;
    };
    spec.boolean_candidate.mu = make_point_mass(Mat::Constant(1, 1, beta_mu), inc, order);
    spec.boolean_candidate.nu = make_point_mass(Mat::Constant(1, 1, beta_nu), inc, order);
    spec.uniform_bound = std::max(2.0, 2.0 * std::max(std::abs(beta_mu), std::abs(beta_nu)));
    return spec;
}

} // namespace ovfree
