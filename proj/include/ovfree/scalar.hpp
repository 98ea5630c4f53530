#ifndef OVFREE_SCALAR_HPP
#define OVFREE_SCALAR_HPP

#include <vector>

#include "ovfree/distribution.hpp"

namespace ovfree {

/// Plain truncated power series sum c[k] z^k, k = 0..order.
struct ScalarSeries {
    int order = 0;
    std::vector<cplx> c;

    static ScalarSeries zero(int order) {
        ScalarSeries s;
        s.order = order;
        s.c.assign(order + 1, cplx(0, 0));
        return s;
    }
    static ScalarSeries constant(int order, cplx v) {
        ScalarSeries s = zero(order);
        s.c[0] = v;
        return s;
    }
    static ScalarSeries identity(int order) {
        ScalarSeries s = zero(order);
        if (order >= 1) s.c[1] = 1.0;
        return s;
    }
    ScalarSeries truncated(int new_order) const;
};

ScalarSeries s_add(const ScalarSeries& a, const ScalarSeries& b);
ScalarSeries s_sub(const ScalarSeries& a, const ScalarSeries& b);
ScalarSeries s_scale(const ScalarSeries& a, cplx v);
ScalarSeries s_mul(const ScalarSeries& a, const ScalarSeries& b);
ScalarSeries s_reciprocal(const ScalarSeries& a);       // a.c[0] != 0
ScalarSeries s_compose(const ScalarSeries& f, const ScalarSeries& w); // w(0) = 0
ScalarSeries s_comp_inverse(const ScalarSeries& f);     // f(0) = 0, f'(0) != 0
/// Divide by z (drops the constant term, which must vanish).
ScalarSeries s_shift_down(const ScalarSeries& f);
/// Multiply by z (truncates the top coefficient away).
ScalarSeries s_shift_up(const ScalarSeries& f);
double s_max_diff(const ScalarSeries& a, const ScalarSeries& b);

/// Truncated scalar distribution: complex moments m_1..m_order.
struct ScalarDist {
    int order = 0;
    std::vector<cplx> m; // m[k-1] = m_k

    cplx mean() const { return m.empty() ? cplx(0, 0) : m[0]; }
};

struct ScalarPair {
    ScalarDist mu, nu;
};

ScalarDist scalar_point_mass(double c, int order);
ScalarDist scalar_rademacher(int order);
ScalarDist scalar_semicircle(int order);
ScalarDist scalar_free_poisson(double lambda, int order);
/// Moments of X + c (the shifted families every multiplicative operation needs).
ScalarDist scalar_shift(const ScalarDist& d, double c);

ScalarSeries scalar_M(const ScalarDist& d);    // 1 + sum m_k z^k
ScalarSeries scalar_calM(const ScalarDist& d); // M - 1
ScalarDist dist_from_calM(const ScalarSeries& calm);

ScalarSeries scalar_B(const ScalarDist& d);
ScalarSeries scalar_R(const ScalarDist& d);
ScalarSeries scalar_cR(const ScalarPair& p);
ScalarDist scalar_dist_from_B(const ScalarSeries& b);
ScalarDist scalar_dist_from_R(const ScalarSeries& r);
ScalarDist scalar_dist_from_cR(const ScalarSeries& cr, const ScalarDist& nu);

/// T_nu(z) = z / R^{-1}(z); constant term is the mean. Series order drops by
/// one (the T layer lives at order-1).
ScalarSeries scalar_T(const ScalarDist& nu);
/// cT(z) = (1/R_nu^{-1}(z)) cR(R_nu^{-1}(z)).
ScalarSeries scalar_cT(const ScalarPair& p);

ScalarDist mult_convolve_free(const ScalarDist& x, const ScalarDist& y);
ScalarPair mult_convolve_cfree(const ScalarPair& x, const ScalarPair& y);

ScalarDist scalar_bp(const ScalarDist& d);
ScalarPair scalar_bp(const ScalarPair& p);

struct ScalarBPReport {
    double shift_lemma_residual = 0.0; // cT_{BP(pair)}(z) vs cT_pair(z/(1-z))
    double hom_residual = 0.0;         // BP(x (x)c y) vs BP(x) (x)c BP(y), moments
    double t_shift_residual = 0.0;     // T_{BP(nu)}(z) vs T_nu(z/(1-z))
};

ScalarBPReport verify_bp_homomorphism(const ScalarPair& x, const ScalarPair& y);

// Bridges to the operator-valued layer at d = 1.
ScalarDist scalar_from_ov(const OVDistribution& d);
OVDistribution ov_from_scalar(const ScalarDist& d);

} // namespace ovfree

#endif
