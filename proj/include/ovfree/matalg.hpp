#ifndef OVFREE_MATALG_HPP
#define OVFREE_MATALG_HPP

#include <complex>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ovfree/errors.hpp"

namespace ovfree {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

// Tolerance used for algebraic identities, scaled by operand norms.
inline constexpr double kAlgTol = 1e-10;

/// Hermitian-adjoint decomposition a = Re a + i Im a.
Mat re_part(const Mat& a);
Mat im_part(const Mat& a);

bool is_selfadjoint(const Mat& a, double tol = kAlgTol);

/// Operator (spectral) norm via SVD; intended for the small matrices used here.
double op_norm(const Mat& a);

/// Least eigenvalue of the Hermitian part (a + a*)/2. For exact Hermitian
/// input this is the least eigenvalue of a itself.
double min_eig_herm(const Mat& a);
double max_eig_herm(const Mat& a);

/// True iff the least eigenvalue of Im a is >= eps.
bool in_upper_half_plane(const Mat& a, double eps);

/// Inverse with a condition-number guard; throws singularity_error.
Mat invert(const Mat& a, double cond_limit = 1e13);

/// Inverse of a point of the matrix upper half-plane. The result has
/// strictly negative imaginary part whenever the precondition holds.
Mat invert_half_plane(const Mat& a);

/// Principal square root of a positive definite Hermitian matrix.
Mat sqrt_psd(const Mat& v);

/// Index of the matrix unit E_{pq} in the basis ordering used throughout.
inline int unit_index(int p, int q, int d) { return p * d + q; }

Mat unit_mat(int p, int q, int d);

/// Unital *-embedding iota: M_{dB} -> M_{dD}, stored by its action on the
/// matrix units of M_{dB}. Identity and block-diagonal amplification are the
/// two built-in instances; anything else must pass validate().
struct InclusionSpec {
    int dB = 1;
    int dD = 1;
    std::vector<Mat> units; // units[unit_index(p,q,dB)] = iota(E_pq), each dD x dD

    static InclusionSpec identity(int d);
    static InclusionSpec amplified(int d, int copies);

    bool is_identity() const;
    Mat embed(const Mat& b) const;
    Mat unembed(const Mat& v, double tol = 1e-8) const;

    /// Checks iota(1) = 1, multiplicativity and *-compatibility on the
    /// matrix-unit basis. Throws model_error on violation.
    void validate(double tol = 1e-12) const;

    bool same_shape(const InclusionSpec& o) const { return dB == o.dB && dD == o.dD; }
};

// Seeded random generators used by tests and the verify suite.
Mat random_matrix(std::mt19937_64& rng, int d, double scale = 1.0);
Mat random_selfadjoint(std::mt19937_64& rng, int d, double scale = 1.0);
/// Random point with Im b >= im_floor, norm roughly bounded by `scale`.
Mat random_half_plane_point(std::mt19937_64& rng, int d, double im_floor, double scale);

} // namespace ovfree

#endif
