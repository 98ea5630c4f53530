#ifndef OVFREE_DISTRIBUTION_HPP
#define OVFREE_DISTRIBUTION_HPP

#include <optional>
#include <random>
#include <vector>

#include "ovfree/series.hpp"

namespace ovfree {

/// Truncated B-valued distribution: first moment plus the multilinear moment
/// maps m_k(b_1,...,b_{k-1}) = mu(X b_1 X ... b_{k-1} X) for 2 <= k <= order.
struct OVDistribution {
    InclusionSpec inc;
    int order = 1;
    Mat mean;                  // mu(X) in M_{dD}
    std::vector<MultiMap> mom; // mom[k-2] has arity k-1
    bool formal = false;       // set by fractional free powers

    const MultiMap& m(int k) const { return mom[k - 2]; }
    MultiMap& m(int k) { return mom[k - 2]; }

    static OVDistribution zero(const InclusionSpec& inc, int order);
    double hermitian_residual() const;
    void validate() const; // shape + Hermitian symmetry
};

struct DistPair {
    OVDistribution mu; // over (B,D)
    OVDistribution nu; // over (B,B)
    void validate() const;
};

/// Linear map M_{din} -> M_{dout} stored by its action on matrix units.
struct LinMap {
    int din = 1, dout = 1;
    std::vector<Mat> on_units; // size din^2
    Mat apply(const Mat& a) const;
    static LinMap identity(int d);
};

/// Concrete finite-dimensional realization (A = M_m, X = X*, E_B, theta).
struct OperatorModel {
    int m = 1;
    Mat X;
    std::vector<Mat> iota_units; // iota_A on units of M_{dB}, each m x m
    LinMap EB;                   // M_m -> M_{dB}
    LinMap theta;                // M_m -> M_{dD}
    InclusionSpec inc;           // the (B,D) inclusion tied to theta

    int dB() const { return EB.dout; }
    Mat embed_A(const Mat& b) const;
    void validate(std::mt19937_64& rng, double tol = 1e-9) const;
};

enum class ModelMap { E_B, theta };

OVDistribution moments_from_model(const OperatorModel& model, ModelMap which, int order);

// Standard families.
OVDistribution make_point_mass(const Mat& beta, const InclusionSpec& inc, int order);
OVDistribution make_rademacher(const InclusionSpec& inc, int order);
/// Operator-valued semicircle with covariance eta (given on matrix units);
/// moments are generated by R(b) = eta(b) b through the triangular solver.
OVDistribution make_ov_semicircle(const std::vector<Mat>& eta_units, int d, int order);
OVDistribution make_scalar_arcsine(int order);
OVDistribution make_scalar_free_poisson(double lambda, int order);

/// Distribution of c*X from the distribution of X.
OVDistribution dilate(const OVDistribution& d, double c);

// Built-in models.
OperatorModel model_point_mass(const Mat& beta, const InclusionSpec& inc);
OperatorModel model_rademacher(int dB);
/// Truncated Fock realization of the semicircle with eta(b) = a* b a; moments
/// agree with make_ov_semicircle up to order 2*levels.
OperatorModel model_fock_semicircle(const Mat& a, int levels);
OperatorModel model_fock_semicircle_pair(const Mat& a, int levels); // theta = corner at a tilted vector
OperatorModel model_random(std::mt19937_64& rng, int dB, int env_dim, int theta_copies = 1);

// Independence-definition oracles: moments of X+Y computed by word expansion,
// without transforms.
OVDistribution oracle_convolve_free(const OVDistribution& x, const OVDistribution& y);
OVDistribution oracle_convolve_boolean(const OVDistribution& x, const OVDistribution& y);
DistPair oracle_convolve_cfree(const DistPair& x, const DistPair& y);

struct PositivityReport {
    double min_eig = 0.0;
    int gram_dim = 0;
    bool pass = false;
};

/// Least eigenvalue of the block Gram matrix [mu(f_j* f_i)] over the
/// b-spaced monomial family of degree <= cutoff.
PositivityReport check_moment_positivity(const OVDistribution& d, int cutoff,
                                         double slack = 1e-8);

/// Per-order distances: entry [k-1] is max over matrix-unit tuples of
/// ||m_k^x - m_k^y|| for k = 1..order.
std::vector<double> moment_distance(const OVDistribution& x, const OVDistribution& y);

// Conversion between the moment data and its generating series
// (c_k(b_1..b_k) = m_k(b_1..b_{k-1}) iota(b_k), c_0 = 1).
NCSeries ncseries_from_moments(const OVDistribution& d);
OVDistribution moments_from_ncseries(const NCSeries& s);

} // namespace ovfree

#endif
