#include "ovfree/matalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace ovfree {

Mat re_part(const Mat& a) { return (a + a.adjoint()) / 2.0; }

Mat im_part(const Mat& a) { return (a - a.adjoint()) / cplx(0.0, 2.0); }

bool is_selfadjoint(const Mat& a, double tol) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * (1.0 + a.norm());
}

double op_norm(const Mat& a) {
    if (a.rows() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(a);
    return svd.singularValues()(0);
}

double min_eig_herm(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(re_part(a));
    return es.eigenvalues().minCoeff();
}

double max_eig_herm(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(re_part(a));
    return es.eigenvalues().maxCoeff();
}

bool in_upper_half_plane(const Mat& a, double eps) {
    if (a.rows() != a.cols())
        throw dimension_error("in_upper_half_plane: matrix must be square");
    return min_eig_herm(im_part(a)) >= eps;
}

Mat invert(const Mat& a, double cond_limit) {
    if (a.rows() != a.cols()) throw dimension_error("invert: matrix must be square");
    Eigen::FullPivLU<Mat> lu(a);
    if (!lu.isInvertible())
        throw singularity_error("invert: matrix is numerically singular");
    Mat inv = lu.inverse();
    if (op_norm(a) * op_norm(inv) > cond_limit)
        throw singularity_error("invert: condition number beyond threshold");
    return inv;
}

Mat invert_half_plane(const Mat& a) {
    Mat inv = invert(a);
    return inv;
}

Mat sqrt_psd(const Mat& v) {
    Eigen::SelfAdjointEigenSolver<Mat> es(re_part(v));
    if (es.eigenvalues().minCoeff() < -1e-12 * (1.0 + v.norm()))
        throw positivity_error("sqrt_psd: matrix is not positive semidefinite");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

Mat unit_mat(int p, int q, int d) {
    Mat e = Mat::Zero(d, d);
    e(p, q) = 1.0;
    return e;
}

InclusionSpec InclusionSpec::identity(int d) {
    InclusionSpec s;
    s.dB = d;
    s.dD = d;
    s.units.reserve(static_cast<size_t>(d) * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) s.units.push_back(unit_mat(p, q, d));
    return s;
}

InclusionSpec InclusionSpec::amplified(int d, int copies) {
    if (copies < 1) throw usage_error("amplified inclusion needs copies >= 1");
    InclusionSpec s;
    s.dB = d;
    s.dD = d * copies;
    s.units.reserve(static_cast<size_t>(d) * d);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
            Mat e = Mat::Zero(s.dD, s.dD);
            for (int c = 0; c < copies; ++c) e(c * d + p, c * d + q) = 1.0;
            s.units.push_back(e);
        }
    return s;
}

bool InclusionSpec::is_identity() const {
    if (dB != dD) return false;
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q)
            if ((units[unit_index(p, q, dB)] - unit_mat(p, q, dB)).cwiseAbs().maxCoeff() > 1e-14)
                return false;
    return true;
}

Mat InclusionSpec::embed(const Mat& b) const {
    if (b.rows() != dB || b.cols() != dB)
        throw dimension_error("embed: argument is not a dB x dB matrix");
    Mat out = Mat::Zero(dD, dD);
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q) out += b(p, q) * units[unit_index(p, q, dB)];
    return out;
}

Mat InclusionSpec::unembed(const Mat& v, double tol) const {
    if (v.rows() != dD || v.cols() != dD)
        throw dimension_error("unembed: argument is not a dD x dD matrix");
    // Least squares over the unit basis; residual beyond tol means the value
    // is not in iota(B).
    const int nb = dB * dB;
    Eigen::MatrixXcd u(dD * dD, nb);
    for (int j = 0; j < nb; ++j)
        u.col(j) = Eigen::Map<const Eigen::VectorXcd>(units[j].data(), dD * dD);
    Eigen::VectorXcd rhs = Eigen::Map<const Eigen::VectorXcd>(v.data(), dD * dD);
    Eigen::VectorXcd coords = u.colPivHouseholderQr().solve(rhs);
    if ((u * coords - rhs).norm() > tol * (1.0 + rhs.norm()))
        throw type_error("unembed: value is not in the image of the inclusion");
    Mat b(dB, dB);
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q) b(p, q) = coords(unit_index(p, q, dB));
    return b;
}

void InclusionSpec::validate(double tol) const {
    if (dB < 1 || dD < 1 || units.size() != static_cast<size_t>(dB) * dB)
        throw model_error("inclusion: wrong number of unit images");
    for (const Mat& u : units)
        if (u.rows() != dD || u.cols() != dD)
            throw model_error("inclusion: unit image has wrong dimension");
    Mat one = Mat::Zero(dD, dD);
    for (int p = 0; p < dB; ++p) one += units[unit_index(p, p, dB)];
    if ((one - Mat::Identity(dD, dD)).cwiseAbs().maxCoeff() > tol)
        throw model_error("inclusion: iota(1) != 1");
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q) {
            const Mat& epq = units[unit_index(p, q, dB)];
            if ((epq - units[unit_index(q, p, dB)].adjoint()).cwiseAbs().maxCoeff() > tol)
                throw model_error("inclusion: iota(x*) != iota(x)*");
            for (int r = 0; r < dB; ++r)
                for (int s = 0; s < dB; ++s) {
                    // E_pq E_rs = delta_{qr} E_ps
                    Mat prod = epq * units[unit_index(r, s, dB)];
                    Mat expect = (q == r) ? units[unit_index(p, s, dB)] : Mat::Zero(dD, dD);
                    if ((prod - expect).cwiseAbs().maxCoeff() > tol)
                        throw model_error("inclusion: iota is not multiplicative");
                }
        }
}

Mat random_matrix(std::mt19937_64& rng, int d, double scale) {
    std::normal_distribution<double> g(0.0, 1.0);
    Mat a(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a(i, j) = scale * cplx(g(rng), g(rng));
    return a;
}

Mat random_selfadjoint(std::mt19937_64& rng, int d, double scale) {
    Mat a = random_matrix(rng, d, scale);
    return re_part(a);
}

Mat random_half_plane_point(std::mt19937_64& rng, int d, double im_floor, double scale) {
    Mat re = random_selfadjoint(rng, d, scale);
    Mat w = random_matrix(rng, d, scale);
    Mat im = w * w.adjoint() / std::max(1.0, op_norm(w * w.adjoint()) / scale)
             + im_floor * Mat::Identity(d, d);
    return re + cplx(0.0, 1.0) * im;
}

} // namespace ovfree
