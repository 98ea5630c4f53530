#include "ovfree/scalar.hpp"

#include <cmath>

namespace ovfree {

namespace {

void require_order(const ScalarSeries& a, const ScalarSeries& b, const char* who) {
    if (a.order != b.order) throw dimension_error(std::string(who) + ": order mismatch");
}

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

ScalarSeries ScalarSeries::truncated(int new_order) const {
    ScalarSeries out = zero(new_order);
    for (int k = 0; k <= std::min(order, new_order); ++k) out.c[k] = c[k];
    return out;
}

ScalarSeries s_add(const ScalarSeries& a, const ScalarSeries& b) {
    require_order(a, b, "s_add");
    ScalarSeries out = a;
    for (int k = 0; k <= a.order; ++k) out.c[k] += b.c[k];
    return out;
}

ScalarSeries s_sub(const ScalarSeries& a, const ScalarSeries& b) {
    require_order(a, b, "s_sub");
    ScalarSeries out = a;
    for (int k = 0; k <= a.order; ++k) out.c[k] -= b.c[k];
    return out;
}

ScalarSeries s_scale(const ScalarSeries& a, cplx v) {
    ScalarSeries out = a;
    for (cplx& x : out.c) x *= v;
    return out;
}

ScalarSeries s_mul(const ScalarSeries& a, const ScalarSeries& b) {
    require_order(a, b, "s_mul");
    ScalarSeries out = ScalarSeries::zero(a.order);
    for (int k = 0; k <= a.order; ++k)
        for (int i = 0; i <= k; ++i) out.c[k] += a.c[i] * b.c[k - i];
    return out;
}

ScalarSeries s_reciprocal(const ScalarSeries& a) {
    if (a.c[0] == cplx(0.0, 0.0))
        throw singularity_error("s_reciprocal: zero constant term");
    ScalarSeries out = ScalarSeries::zero(a.order);
    out.c[0] = 1.0 / a.c[0];
    for (int k = 1; k <= a.order; ++k) {
        cplx s(0.0, 0.0);
        for (int i = 1; i <= k; ++i) s += a.c[i] * out.c[k - i];
        out.c[k] = -s / a.c[0];
    }
    return out;
}

ScalarSeries s_compose(const ScalarSeries& f, const ScalarSeries& w) {
    require_order(f, w, "s_compose");
    if (w.c[0] != cplx(0.0, 0.0))
        throw precondition_error("s_compose: inner series has nonzero constant term");
    ScalarSeries out = ScalarSeries::constant(f.order, f.c[0]);
    ScalarSeries pw = ScalarSeries::constant(f.order, 1.0);
    for (int j = 1; j <= f.order; ++j) {
        pw = s_mul(pw, w);
        for (int k = 0; k <= f.order; ++k) out.c[k] += f.c[j] * pw.c[k];
    }
    return out;
}

ScalarSeries s_comp_inverse(const ScalarSeries& f) {
    if (f.c[0] != cplx(0.0, 0.0) || f.order < 1 || f.c[1] == cplx(0.0, 0.0))
        throw domain_error("s_comp_inverse: need f(0) = 0 and f'(0) != 0");
    ScalarSeries g = ScalarSeries::zero(f.order);
    g.c[1] = 1.0 / f.c[1];
    for (int k = 2; k <= f.order; ++k) {
        // Raise g one order at a time: [f(g)]_k must vanish.
        ScalarSeries comp = s_compose(f, g);
        g.c[k] = -comp.c[k] / f.c[1];
    }
    return g;
}

ScalarSeries s_shift_down(const ScalarSeries& f) {
    if (f.c[0] != cplx(0.0, 0.0))
        throw precondition_error("s_shift_down: nonzero constant term");
    ScalarSeries out = ScalarSeries::zero(f.order - 1);
    for (int k = 0; k <= f.order - 1; ++k) out.c[k] = f.c[k + 1];
    return out;
}

ScalarSeries s_shift_up(const ScalarSeries& f) {
    ScalarSeries out = ScalarSeries::zero(f.order + 1);
    for (int k = 0; k <= f.order; ++k) out.c[k + 1] = f.c[k];
    return out;
}

double s_max_diff(const ScalarSeries& a, const ScalarSeries& b) {
    int n = std::min(a.order, b.order);
    double m = 0.0;
    for (int k = 0; k <= n; ++k) m = std::max(m, std::abs(a.c[k] - b.c[k]));
    return m;
}

ScalarDist scalar_point_mass(double c, int order) {
    ScalarDist d;
    d.order = order;
    for (int k = 1; k <= order; ++k) d.m.push_back(std::pow(c, k));
    return d;
}

ScalarDist scalar_rademacher(int order) {
    ScalarDist d;
    d.order = order;
    for (int k = 1; k <= order; ++k) d.m.push_back(k % 2 == 0 ? 1.0 : 0.0);
    return d;
}

ScalarDist scalar_semicircle(int order) {
    ScalarDist d;
    d.order = order;
    for (int k = 1; k <= order; ++k)
        d.m.push_back(k % 2 == 0 ? binom(k, k / 2) / (k / 2 + 1) : 0.0);
    return d;
}

ScalarDist scalar_free_poisson(double lambda, int order) {
    ScalarDist d;
    d.order = order;
    for (int k = 1; k <= order; ++k) {
        double mk = 0.0;
        for (int j = 1; j <= k; ++j) mk += binom(k, j) * binom(k, j - 1) / k * std::pow(lambda, j);
        d.m.push_back(mk);
    }
    return d;
}

ScalarDist scalar_shift(const ScalarDist& d, double c) {
    ScalarDist out;
    out.order = d.order;
    for (int k = 1; k <= d.order; ++k) {
        cplx v = std::pow(c, k);
        for (int j = 1; j <= k; ++j) v += binom(k, j) * std::pow(c, k - j) * d.m[j - 1];
        out.m.push_back(v);
    }
    return out;
}

ScalarSeries scalar_M(const ScalarDist& d) {
    ScalarSeries s = ScalarSeries::constant(d.order, 1.0);
    for (int k = 1; k <= d.order; ++k) s.c[k] = d.m[k - 1];
    return s;
}

ScalarSeries scalar_calM(const ScalarDist& d) {
    ScalarSeries s = scalar_M(d);
    s.c[0] = 0.0;
    return s;
}

ScalarDist dist_from_calM(const ScalarSeries& calm) {
    ScalarDist d;
    d.order = calm.order;
    for (int k = 1; k <= calm.order; ++k) d.m.push_back(calm.c[k]);
    return d;
}

ScalarSeries scalar_B(const ScalarDist& d) {
    return s_mul(scalar_calM(d), s_reciprocal(scalar_M(d)));
}

ScalarSeries scalar_R(const ScalarDist& d) {
    ScalarSeries m = scalar_M(d);
    ScalarSeries w = s_shift_up(scalar_M(d)).truncated(d.order); // z M(z)
    ScalarSeries r = ScalarSeries::zero(d.order);
    for (int k = 1; k <= d.order; ++k) {
        ScalarSeries comp = s_compose(r, w);
        r.c[k] = m.c[k] - comp.c[k];
    }
    return r;
}

ScalarSeries scalar_cR(const ScalarPair& p) {
    if (p.mu.order != p.nu.order) throw dimension_error("scalar_cR: order mismatch");
    const int n = p.mu.order;
    ScalarSeries m_mu = scalar_M(p.mu);
    ScalarSeries m_nu = scalar_M(p.nu);
    ScalarSeries lhs = s_mul(scalar_calM(p.mu), m_nu);
    ScalarSeries w = s_shift_up(m_nu).truncated(n); // z M_nu(z)
    ScalarSeries h = ScalarSeries::zero(n);
    for (int k = 1; k <= n; ++k) {
        ScalarSeries rhs = s_mul(m_mu, s_compose(h, w));
        h.c[k] = lhs.c[k] - rhs.c[k];
    }
    return h;
}

ScalarDist scalar_dist_from_B(const ScalarSeries& b) {
    // M = 1 + B M.
    ScalarSeries m = ScalarSeries::constant(b.order, 1.0);
    for (int k = 1; k <= b.order; ++k) {
        cplx s(0.0, 0.0);
        for (int i = 1; i <= k; ++i) s += b.c[i] * m.c[k - i];
        m.c[k] = s;
    }
    m.c[0] = 0.0;
    return dist_from_calM(m);
}

ScalarDist scalar_dist_from_R(const ScalarSeries& r) {
    ScalarSeries m = ScalarSeries::constant(r.order, 1.0);
    ScalarSeries w = ScalarSeries::zero(r.order);
    for (int k = 1; k <= r.order; ++k) {
        w.c[k] = m.c[k - 1]; // w = z M(z)
        ScalarSeries comp = s_compose(r, w);
        m.c[k] = comp.c[k];
    }
    m.c[0] = 0.0;
    return dist_from_calM(m);
}

ScalarDist scalar_dist_from_cR(const ScalarSeries& cr, const ScalarDist& nu) {
    if (cr.order != nu.order) throw dimension_error("scalar_dist_from_cR: order mismatch");
    const int n = cr.order;
    ScalarSeries m_nu = scalar_M(nu);
    ScalarSeries w = s_shift_up(m_nu).truncated(n);
    ScalarSeries comp = s_compose(cr, w); // K = cR(z M_nu)
    ScalarSeries m_mu = ScalarSeries::constant(n, 1.0);
    for (int k = 1; k <= n; ++k) {
        cplx acc(0.0, 0.0);
        for (int i = 0; i <= k - 1; ++i) acc += m_mu.c[i] * comp.c[k - i];
        for (int i = 1; i <= k - 1; ++i) acc -= m_mu.c[i] * m_nu.c[k - i];
        m_mu.c[k] = acc;
    }
    m_mu.c[0] = 0.0;
    return dist_from_calM(m_mu);
}

ScalarSeries scalar_T(const ScalarDist& nu) {
    if (nu.mean() == cplx(0.0, 0.0))
        throw domain_error("scalar_T: zero mean; inversion near zero is impossible");
    ScalarSeries r = scalar_R(nu);
    ScalarSeries rinv = s_comp_inverse(r);
    // T = z / R^{-1}(z) = 1 / (R^{-1}(z)/z); lives at order-1.
    return s_reciprocal(s_shift_down(rinv));
}

ScalarSeries scalar_cT(const ScalarPair& p) {
    if (p.nu.mean() == cplx(0.0, 0.0))
        throw domain_error("scalar_cT: nu must have nonzero mean");
    ScalarSeries cr = scalar_cR(p);
    ScalarSeries rinv = s_comp_inverse(scalar_R(p.nu));
    ScalarSeries quot = s_shift_down(cr).truncated(p.mu.order - 1); // cR(w)/w
    return s_compose(quot, rinv.truncated(p.mu.order - 1));
}

ScalarDist mult_convolve_free(const ScalarDist& x, const ScalarDist& y) {
    if (x.order != y.order) throw dimension_error("mult_convolve_free: order mismatch");
    if (x.mean() == cplx(0.0, 0.0) || y.mean() == cplx(0.0, 0.0))
        throw domain_error("mult_convolve_free: zero-mean input");
    ScalarSeries t = s_mul(scalar_T(x), scalar_T(y));
    // R^{-1}(z) = z / T(z), then back through the compositional inverse.
    ScalarSeries rinv = s_shift_up(s_reciprocal(t)); // order restored
    ScalarSeries r = s_comp_inverse(rinv);
    return scalar_dist_from_R(r);
}

ScalarPair mult_convolve_cfree(const ScalarPair& x, const ScalarPair& y) {
    ScalarPair out;
    out.nu = mult_convolve_free(x.nu, y.nu);
    ScalarSeries ct = s_mul(scalar_cT(x), scalar_cT(y));
    // cR(w) = w * cT(R_nu(w)).
    ScalarSeries r_nu = scalar_R(out.nu);
    ScalarSeries cr =
        s_shift_up(s_compose(ct, r_nu.truncated(ct.order))).truncated(x.mu.order);
    out.mu = scalar_dist_from_cR(cr, out.nu);
    return out;
}

ScalarDist scalar_bp(const ScalarDist& d) { return scalar_dist_from_R(scalar_B(d)); }

ScalarPair scalar_bp(const ScalarPair& p) {
    ScalarPair out;
    out.nu = scalar_bp(p.nu);
    out.mu = scalar_dist_from_cR(scalar_B(p.mu), out.nu);
    return out;
}

ScalarBPReport verify_bp_homomorphism(const ScalarPair& x, const ScalarPair& y) {
    if (x.nu.mean() == cplx(0.0, 0.0) || y.nu.mean() == cplx(0.0, 0.0))
        throw domain_error("verify_bp_homomorphism: zero-mean input");
    ScalarBPReport rep;
    const int n = x.mu.order;
    // z / (1 - z) = z + z^2 + ...
    ScalarSeries moebius = ScalarSeries::zero(n - 1);
    for (int k = 1; k <= n - 1; ++k) moebius.c[k] = 1.0;

    for (const ScalarPair* p : {&x, &y}) {
        ScalarSeries lhs = scalar_cT(scalar_bp(*p));
        ScalarSeries rhs = s_compose(scalar_cT(*p), moebius);
        rep.shift_lemma_residual = std::max(rep.shift_lemma_residual, s_max_diff(lhs, rhs));
        ScalarSeries tl = scalar_T(scalar_bp(p->nu));
        ScalarSeries tr = s_compose(scalar_T(p->nu), moebius);
        rep.t_shift_residual = std::max(rep.t_shift_residual, s_max_diff(tl, tr));
    }

    ScalarPair lhs = scalar_bp(mult_convolve_cfree(x, y));
    ScalarPair rhs = mult_convolve_cfree(scalar_bp(x), scalar_bp(y));
    for (int k = 0; k < n; ++k) {
        rep.hom_residual = std::max(rep.hom_residual, std::abs(lhs.mu.m[k] - rhs.mu.m[k]));
        rep.hom_residual = std::max(rep.hom_residual, std::abs(lhs.nu.m[k] - rhs.nu.m[k]));
    }
    return rep;
}

ScalarDist scalar_from_ov(const OVDistribution& d) {
    if (d.inc.dB != 1 || d.inc.dD != 1)
        throw type_error("scalar_from_ov: needs a (C,C) distribution");
    ScalarDist out;
    out.order = d.order;
    out.m.push_back(d.mean(0, 0));
    for (int k = 2; k <= d.order; ++k) out.m.push_back(d.m(k).at(0)(0, 0));
    return out;
}

OVDistribution ov_from_scalar(const ScalarDist& d) {
    OVDistribution out = OVDistribution::zero(InclusionSpec::identity(1), d.order);
    out.mean = Mat::Constant(1, 1, d.m[0]);
    for (int k = 2; k <= d.order; ++k) out.m(k).at(0)(0, 0) = d.m[k - 1];
    return out;
}

} // namespace ovfree
