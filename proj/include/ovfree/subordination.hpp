#ifndef OVFREE_SUBORDINATION_HPP
#define OVFREE_SUBORDINATION_HPP

#include "ovfree/convolve.hpp"

namespace ovfree {

struct FixedPointConfig {
    double damping = 0.5; // in (0,1]
    int max_iters = 200;
    double tol = 1e-12;
    bool start_at_b = true;  // otherwise start at i*start_scale*1
    double start_scale = 1.0;
};

/// Operator-valued Cauchy transform of a model at level n:
/// G^{(n)}(b) = map_n[(b - X (x) 1_n)^{-1}], b in H^+(M_n(M_dB)).
Mat cauchy_G(const OperatorModel& model, ModelMap which, const Mat& b, int level = 1);

/// F = G^{-1}; maps the upper half-plane into itself on the E_B side.
Mat cauchy_F(const OperatorModel& model, ModelMap which, const Mat& b, int level = 1);

/// h(b) = F(b) - b.
Mat h_transform(const OperatorModel& model, ModelMap which, const Mat& b, int level = 1);

struct OmegaResult {
    Mat omega;
    int iterations = 0;
    double residual = 0.0;
};

/// Damped Picard solve of omega = (1/n) b + (1 - 1/n) F_mu(omega), the
/// subordination function for the n-fold free self-convolution of the
/// model's E_B-distribution.
OmegaResult omega_fixed_point(const OperatorModel& model, int n_fold, const Mat& b,
                              const FixedPointConfig& cfg = {}, int level = 1);

struct PairOmegaResult {
    Mat omega1, omega2;
    int iterations = 0;
    double residual = 0.0;
};

/// Subordination pair for X + Y with distinct distributions, solving
/// omega1 = b + h_Y(omega2), omega2 = b + h_X(omega1) on the E_B side.
PairOmegaResult subordination_pair(const OperatorModel& mx, const OperatorModel& my,
                                   const Mat& b, const FixedPointConfig& cfg = {},
                                   int level = 1);

/// Truncated asymptotic Cauchy transform b^{-1} M(b^{-1}) of stored moments.
Mat G_series_at(const OVDistribution& d, const Mat& b, int level = 1);
Mat F_series_at(const OVDistribution& d, const Mat& b, int level = 1);

/// Tail bound (M r)^{N+1} / (1 - M r) for the series truncation at order N;
/// throws domain_error when M r >= 1 (grid point too close to the spectrum).
double series_tail_bound(double moment_bound, double binv_norm, int order);

/// Propagates a G-level bound delta to the F = G^{-1} level.
double f_conversion_bound(const Mat& g_series, double delta);

struct SuiteRow {
    double y = 0.0;
    int n_fold = 2;
    int iterations = 0;
    double fp_residual = 0.0;
    double min_eig_im_omega_gap = 0.0; // min eig of Im omega - Im b
    double g_residual = 0.0, g_bound = 0.0;          // G_{mu (+) mu}(b) vs G(omega)
    double nfold_h_residual = 0.0, nfold_h_bound = 0.0; // h of the n-fold c-free sum
    double sum_h_residual = 0.0, sum_h_bound = 0.0;     // h additivity along omega1, omega2
    double omega_sum_residual = 0.0, omega_sum_bound = 0.0; // F_{nu_{X+Y}} = omega1+omega2-b
    double omega_sum_consistency = 0.0;                 // F_X(omega1) vs F_Y(omega2), analytic
    double asym_residual = 0.0, asym_bound = 0.0;       // b^{-1} M(b^{-1}) vs G(b)
    bool pass = true;
};

/// Runs the identity suite on grid points b = i y 1 for the given pair
/// models (theta and E_B sides of each), at series truncation `order`.
std::vector<SuiteRow> verify_subordination_suite(const OperatorModel& mx,
                                                 const OperatorModel& my,
                                                 const std::vector<double>& grid,
                                                 int n_fold, int order,
                                                 const FixedPointConfig& cfg = {});

/// Asymptotic moment matrices mu(X^k) with unit spacers recovered from
/// samples of G(iy 1) by Richardson-style fitting in 1/(iy).
std::vector<Mat> asymptotic_moments_fit(const OperatorModel& model, ModelMap which,
                                        int order);

} // namespace ovfree

#endif
