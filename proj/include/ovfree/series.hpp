#ifndef OVFREE_SERIES_HPP
#define OVFREE_SERIES_HPP

#include <vector>

#include "ovfree/multimap.hpp"

namespace ovfree {

/// Truncated noncommutative power series c_0 + sum_{1<=k<=N} c_k(b,...,b)
/// with k-linear coefficients B^k -> D.
struct NCSeries {
    InclusionSpec inc;
    int order = 0;
    std::vector<MultiMap> coeff; // arities 0..order

    static NCSeries zero(const InclusionSpec& inc, int order);
    static NCSeries constant(const InclusionSpec& inc, int order, const Mat& c0);
    /// The series W(b) = b over (B,B).
    static NCSeries identity_b(int d, int order);

    bool same_shape(const NCSeries& o) const {
        return inc.same_shape(o.inc) && order == o.order;
    }
    /// True when coefficients take values in M_{dB} itself (required of the
    /// inner series of a composition).
    bool into_B() const { return inc.dB == inc.dD && inc.is_identity(); }

    double max_abs() const;
};

NCSeries series_add(const NCSeries& f, const NCSeries& g);
NCSeries series_sub(const NCSeries& f, const NCSeries& g);
NCSeries series_scale(const NCSeries& f, cplx s);

/// Cauchy product truncated at the common order.
NCSeries series_mul(const NCSeries& f, const NCSeries& g);

/// Two-sided inverse: series_mul(f, result) = 1 up to the truncation order.
NCSeries series_reciprocal(const NCSeries& f);

/// Push a (B,B)-valued series through the inclusion iota.
NCSeries embed_series(const NCSeries& f, const InclusionSpec& inc);

/// f o w for w with zero constant term and values in B.
NCSeries series_compose(const NCSeries& f, const NCSeries& w);

/// Single order-k coefficient of f o w; f may be only partially filled (its
/// higher-arity coefficients are simply not reached when zero).
MultiMap compose_order(const NCSeries& f, const NCSeries& w, int k);

/// Evaluation of the canonical fully matricial extension on a nilpotent
/// argument a in M_level(M_{dB}); the series terminates, so this is exact.
Mat eval_nilpotent(const NCSeries& f, const Mat& a, int level);

/// Truncated evaluation at an arbitrary argument (asymptotic use; no
/// nilpotency requirement).
Mat eval_series_at(const NCSeries& f, const Mat& a, int level);

/// The registered triangular equation shapes relating a moment series M and
/// a transform H. Knowns per shape:
///   boolean_transform_from_moments:  {M}        solve  M - 1 = H * M  for H
///   boolean_moments_from_transform:  {H}        solve  M - 1 = H * M  for M
///   free_transform_from_moments:     {M}        solve  M - 1 = H(b*M) for H
///   free_moments_from_transform:     {H}        solve  M - 1 = H(b*M) for M
///   cfree_transform_from_moments:    {M_mu, M_nu}  solve (M_mu-1)*M_nu = M_mu*H(b*M_nu) for H
///   cfree_moments_from_transform:    {H, M_nu}     same equation, solve for M_mu
enum class SeriesEquation {
    boolean_transform_from_moments,
    boolean_moments_from_transform,
    free_transform_from_moments,
    free_moments_from_transform,
    cfree_transform_from_moments,
    cfree_moments_from_transform,
};

NCSeries solve_triangular(SeriesEquation eq, const std::vector<NCSeries>& knowns, int order);

double max_coeff_diff(const NCSeries& f, const NCSeries& g);
bool approx_equal(const NCSeries& f, const NCSeries& g, double tol = kAlgTol);

} // namespace ovfree

#endif
