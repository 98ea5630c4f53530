#ifndef OVFREE_TRANSFORMS_HPP
#define OVFREE_TRANSFORMS_HPP

#include "ovfree/distribution.hpp"

namespace ovfree {

/// Moment-generating series M_mu = 1 + sum mu([X b]^k).
NCSeries M_series(const OVDistribution& d);

/// B-transform: the solution of M - 1 = B * M.
NCSeries B_series(const OVDistribution& d);

/// R-transform (shifted convention R(b) = curly-R(b) b): M - 1 = R(b M).
/// Requires a (B,B) distribution.
NCSeries R_series(const OVDistribution& d);

/// cR-transform of a pair: (M_mu - 1) M_nu = M_mu cR(b M_nu).
NCSeries cR_series(const DistPair& p);

enum class TransformKind { B, R, cR };

/// Forward direction of the functional equations: recover the truncated
/// moment data from a transform with zero constant term. For cR the second
/// known is the nu-coordinate moment series.
OVDistribution moments_from_transform(TransformKind kind, const NCSeries& t,
                                      const NCSeries* m_nu = nullptr);

/// The Levy-Hincin-type data (gamma, sigma) of a transform written as
/// [gamma + sigma~(b(1-Xb)^{-1})] b. sigma_j stores the word values
/// sigma(b_1 X b_2 ... X b_j) as a j-linear map.
struct GeneratingPair {
    InclusionSpec inc;
    int order = 0;          // order of the originating transform
    Mat gamma;              // dD x dD
    std::vector<MultiMap> sigma; // arities 1..order-1, sigma[j-1] has arity j
    double factor_residual = 0.0;
};

/// Reads (gamma, sigma) off a transform series by factoring the trailing
/// linear slot (least squares); throws structure_error when the factorization
/// residual exceeds 1e-8.
GeneratingPair extract_generating_pair(const NCSeries& b);

NCSeries series_from_generating_pair(const GeneratingPair& p, int order);

/// Gram positivity test of sigma over the b-spaced word family of degree
/// <= cutoff; certifies FID-consistency at truncation when applied to the
/// pair of an R-transform.
PositivityReport generating_pair_cp_report(const GeneratingPair& p, int cutoff,
                                           double slack = 1e-8);

} // namespace ovfree

#endif
