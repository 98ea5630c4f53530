#include "ovfree/transforms.hpp"

namespace ovfree {

NCSeries M_series(const OVDistribution& d) { return ncseries_from_moments(d); }

NCSeries B_series(const OVDistribution& d) {
    return solve_triangular(SeriesEquation::boolean_transform_from_moments,
                            {M_series(d)}, d.order);
}

NCSeries R_series(const OVDistribution& d) {
    if (!d.inc.is_identity())
        throw type_error("R_series: the R-transform requires D = B");
    return solve_triangular(SeriesEquation::free_transform_from_moments, {M_series(d)},
                            d.order);
}

NCSeries cR_series(const DistPair& p) {
    p.validate();
    return solve_triangular(SeriesEquation::cfree_transform_from_moments,
                            {M_series(p.mu), M_series(p.nu)}, p.mu.order);
}

OVDistribution moments_from_transform(TransformKind kind, const NCSeries& t,
                                      const NCSeries* m_nu) {
    switch (kind) {
        case TransformKind::B:
            return moments_from_ncseries(solve_triangular(
                SeriesEquation::boolean_moments_from_transform, {t}, t.order));
        case TransformKind::R:
            return moments_from_ncseries(solve_triangular(
                SeriesEquation::free_moments_from_transform, {t}, t.order));
        case TransformKind::cR: {
            if (m_nu == nullptr)
                throw usage_error("moments_from_transform: cR needs the nu moment series");
            return moments_from_ncseries(solve_triangular(
                SeriesEquation::cfree_moments_from_transform, {t, *m_nu}, t.order));
        }
    }
    throw usage_error("moments_from_transform: unknown kind");
}

namespace {

// Least-squares factorization value S of { S * iota(u) = C_u : u unit }.
Mat factor_trailing_slot(const InclusionSpec& inc, const std::vector<Mat>& cu) {
    const int nb = inc.dB * inc.dB;
    Mat lhs = Mat::Zero(inc.dD, inc.dD);
    Mat rhs = Mat::Zero(inc.dD, inc.dD);
    for (int v = 0; v < nb; ++v) {
        lhs += inc.units[v] * inc.units[v].adjoint();
        rhs += cu[v] * inc.units[v].adjoint();
    }
    return rhs * invert(lhs);
}

} // namespace

GeneratingPair extract_generating_pair(const NCSeries& b) {
    if (b.coeff[0].max_abs() > 1e-10 * (1.0 + b.max_abs()))
        throw precondition_error("extract_generating_pair: nonzero constant term");
    GeneratingPair p;
    p.inc = b.inc;
    p.order = b.order;
    const int nb = b.inc.dB * b.inc.dB;
    double resid = 0.0;
    // gamma from c_1(b1) = gamma * iota(b1).
    {
        std::vector<Mat> cu(nb);
        for (int v = 0; v < nb; ++v) cu[v] = b.coeff[1].at(v);
        p.gamma = factor_trailing_slot(b.inc, cu);
        for (int v = 0; v < nb; ++v)
            resid = std::max(resid,
                             (cu[v] - p.gamma * b.inc.units[v]).cwiseAbs().maxCoeff());
    }
    // sigma_j from c_{j+1}(b_1..b_j, b_{j+1}) = sigma_j(b_1..b_j) * iota(b_{j+1}).
    for (int j = 1; j <= b.order - 1; ++j) {
        MultiMap sj(j, b.inc.dB, b.inc.dD);
        const MultiMap& c = b.coeff[j + 1];
        std::vector<Mat> cu(nb);
        for (std::size_t t = 0; t < sj.tuples(); ++t) {
            for (int v = 0; v < nb; ++v) cu[v] = c.at(t * nb + v);
            Mat s = factor_trailing_slot(b.inc, cu);
            sj.at(t) = s;
            for (int v = 0; v < nb; ++v)
                resid = std::max(resid, (cu[v] - s * b.inc.units[v]).cwiseAbs().maxCoeff());
        }
        p.sigma.push_back(std::move(sj));
    }
    p.factor_residual = resid;
    if (resid > 1e-8 * (1.0 + b.max_abs()))
        throw structure_error(
            "extract_generating_pair: coefficients do not factor with a trailing slot");
    return p;
}

NCSeries series_from_generating_pair(const GeneratingPair& p, int order) {
    NCSeries out = NCSeries::zero(p.inc, order);
    const int dB = p.inc.dB, nb = dB * dB;
    for (int v = 0; v < nb; ++v) out.coeff[1].at(v) = p.gamma * p.inc.units[v];
    for (int j = 1; j <= order - 1; ++j) {
        if (j > static_cast<int>(p.sigma.size())) break;
        const MultiMap& sj = p.sigma[j - 1];
        MultiMap& c = out.coeff[j + 1];
        for (std::size_t t = 0; t < sj.tuples(); ++t) {
            Eigen::Map<const Mat> s = sj.at(t);
            for (int v = 0; v < nb; ++v) c.at(t * nb + v) = s * p.inc.units[v];
        }
    }
    return out;
}

PositivityReport generating_pair_cp_report(const GeneratingPair& p, int cutoff,
                                           double slack) {
    // sigma-word family g = u_0 X u_1 ... X u_t with t <= cutoff X's; the Gram
    // entry sigma(g_j* g_i) merges the middle slot u_{0,j}* u_{0,i}.
    const int dB = p.inc.dB, nb = dB * dB, dD = p.inc.dD;
    if (2 * cutoff + 1 > static_cast<int>(p.sigma.size()))
        throw precondition_error("generating_pair_cp_report: cutoff too large for order");
    struct Member {
        int deg;
        std::vector<int> units; // u_0 .. u_deg
    };
    std::vector<Member> family;
    for (int t = 0; t <= cutoff; ++t) {
        std::size_t count = MultiMap::pow_sz(nb, t + 1);
        for (std::size_t w = 0; w < count; ++w) {
            Member mem;
            mem.deg = t;
            mem.units.resize(t + 1);
            tuple_digits(w, t + 1, nb, mem.units.data());
            family.push_back(mem);
        }
    }
    const int nf = static_cast<int>(family.size());
    Mat gram(nf * dD, nf * dD);
    auto unit_of = [&](int v) { return unit_mat(v / dB, v % dB, dB); };
    for (int j = 0; j < nf; ++j)
        for (int i = 0; i < nf; ++i) {
            const Member& gj = family[j];
            const Member& gi = family[i];
            std::vector<Mat> args;
            for (auto it = gj.units.rbegin(); it != gj.units.rend(); ++it)
                args.push_back(unit_of(*it).adjoint());
            args.back() = args.back() * unit_of(gi.units[0]);
            for (std::size_t u = 1; u < gi.units.size(); ++u)
                args.push_back(unit_of(gi.units[u]));
            const MultiMap& sig = p.sigma[args.size() - 1];
            gram.block(j * dD, i * dD, dD, dD) = sig.eval(args);
        }
    PositivityReport rep;
    rep.gram_dim = nf * dD;
    rep.min_eig = min_eig_herm(gram);
    rep.pass = rep.min_eig >= -slack;
    return rep;
}

} // namespace ovfree
