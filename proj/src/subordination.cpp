#include "ovfree/subordination.hpp"

#include <Eigen/LU>

namespace ovfree {

namespace {

constexpr double kHalfPlaneEps = 1e-12;

void require_half_plane(const Mat& b, const char* who) {
    if (!in_upper_half_plane(b, kHalfPlaneEps))
        throw precondition_error(std::string(who) + ": argument is not in the upper half-plane");
}

} // namespace

Mat cauchy_G(const OperatorModel& model, ModelMap which, const Mat& b, int level) {
    const int dB = model.dB();
    if (b.rows() != level * dB || b.cols() != level * dB)
        throw dimension_error("cauchy_G: argument is not level*dB square");
    require_half_plane(b, "cauchy_G");
    const int m = model.m;
    Mat big = Mat::Zero(level * m, level * m);
    for (int i = 0; i < level; ++i) {
        for (int j = 0; j < level; ++j)
            big.block(i * m, j * m, m, m) = model.embed_A(b.block(i * dB, j * dB, dB, dB));
        big.block(i * m, i * m, m, m) -= model.X;
    }
    Mat res = invert(big);
    const LinMap& map = (which == ModelMap::E_B) ? model.EB : model.theta;
    const int dout = map.dout;
    Mat g = Mat::Zero(level * dout, level * dout);
    for (int i = 0; i < level; ++i)
        for (int j = 0; j < level; ++j)
            g.block(i * dout, j * dout, dout, dout) = map.apply(res.block(i * m, j * m, m, m));
    return g;
}

Mat cauchy_F(const OperatorModel& model, ModelMap which, const Mat& b, int level) {
    return invert(cauchy_G(model, which, b, level));
}

Mat h_transform(const OperatorModel& model, ModelMap which, const Mat& b, int level) {
    return cauchy_F(model, which, b, level) - b;
}

OmegaResult omega_fixed_point(const OperatorModel& model, int n_fold, const Mat& b,
                              const FixedPointConfig& cfg, int level) {
    if (n_fold < 2) throw usage_error("omega_fixed_point: n_fold must be >= 2");
    require_half_plane(b, "omega_fixed_point");
    const double lam = cfg.damping;
    if (lam <= 0.0 || lam > 1.0) throw usage_error("omega_fixed_point: damping in (0,1]");
    Mat omega = cfg.start_at_b
                    ? b
                    : Mat(cplx(0.0, cfg.start_scale) * Mat::Identity(b.rows(), b.cols()));
    const double w1 = 1.0 / n_fold, w2 = 1.0 - w1;
    OmegaResult out;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        Mat step = w1 * b + w2 * cauchy_F(model, ModelMap::E_B, omega, level);
        out.residual = op_norm(omega - step);
        out.iterations = it;
        omega = (1.0 - lam) * omega + lam * step;
        if (out.residual < cfg.tol) {
            out.omega = omega;
            return out;
        }
    }
    throw convergence_error("omega_fixed_point: max_iters exceeded", out.residual);
}

PairOmegaResult subordination_pair(const OperatorModel& mx, const OperatorModel& my,
                                   const Mat& b, const FixedPointConfig& cfg, int level) {
    require_half_plane(b, "subordination_pair");
    const double lam = cfg.damping;
    Mat o1 = b, o2 = b;
    PairOmegaResult out;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        Mat n1 = b + h_transform(my, ModelMap::E_B, o2, level);
        Mat n2 = b + h_transform(mx, ModelMap::E_B, o1, level);
        out.residual = std::max(op_norm(o1 - n1), op_norm(o2 - n2));
        out.iterations = it;
        o1 = (1.0 - lam) * o1 + lam * n1;
        o2 = (1.0 - lam) * o2 + lam * n2;
        if (out.residual < cfg.tol) {
            out.omega1 = o1;
            out.omega2 = o2;
            return out;
        }
    }
    throw convergence_error("subordination_pair: max_iters exceeded", out.residual);
}

Mat G_series_at(const OVDistribution& d, const Mat& b, int level) {
    require_half_plane(b, "G_series_at");
    Mat binv = invert(b);
    NCSeries m = ncseries_from_moments(d);
    return binv * eval_series_at(m, binv, level);
}

Mat F_series_at(const OVDistribution& d, const Mat& b, int level) {
    return invert(G_series_at(d, b, level));
}

double series_tail_bound(double moment_bound, double binv_norm, int order) {
    double q = moment_bound * binv_norm;
    if (q >= 1.0)
        throw domain_error(
            "series tail bound diverges: increase Im b so that M*||b^-1|| < 1");
    return std::pow(q, order + 1) / (1.0 - q);
}

double f_conversion_bound(const Mat& g_series, double delta) {
    Eigen::JacobiSVD<Mat> svd(g_series);
    double smin = svd.singularValues().minCoeff();
    if (delta >= smin / 2.0)
        throw domain_error(
            "F-level bound unavailable: G tail bound too large; increase Im b");
    double f_norm = 1.0 / smin;
    return f_norm * delta / (smin - delta);
}

std::vector<SuiteRow> verify_subordination_suite(const OperatorModel& mx,
                                                 const OperatorModel& my,
                                                 const std::vector<double>& grid,
                                                 int n_fold, int order,
                                                 const FixedPointConfig& cfg) {
    const int dB = mx.dB();
    const double norm_x = op_norm(mx.X), norm_y = op_norm(my.X);

    OVDistribution nu_x = moments_from_model(mx, ModelMap::E_B, order);
    OVDistribution mu_x = moments_from_model(mx, ModelMap::theta, order);
    OVDistribution nu_y = moments_from_model(my, ModelMap::E_B, order);
    OVDistribution mu_y = moments_from_model(my, ModelMap::theta, order);
    DistPair px{mu_x, nu_x}, py{mu_y, nu_y};

    OVDistribution nu_nfold = power(ConvKind::free, nu_x, static_cast<double>(n_fold));
    DistPair pair_nfold = pair_power_cfree(px, static_cast<double>(n_fold));
    OVDistribution nu_xy = convolve(ConvKind::free, nu_x, nu_y);
    DistPair pair_xy = convolve_cfree(px, py);

    std::vector<SuiteRow> rows;
    for (double y : grid) {
        SuiteRow row;
        row.y = y;
        row.n_fold = n_fold;
        Mat b = cplx(0.0, y) * Mat::Identity(dB, dB);
        Mat binv = invert(b);
        const double r = op_norm(binv);

        // Subordination for the n-fold self-convolution of nu_x.
        OmegaResult om = omega_fixed_point(mx, n_fold, b, cfg);
        row.iterations = om.iterations;
        row.fp_residual = om.residual;
        row.min_eig_im_omega_gap = min_eig_herm(im_part(om.omega) - im_part(b));

        // (i) G_{nu-nfold}(b) from the transform route vs G_{nu_x}(omega).
        {
            Mat g_series = G_series_at(nu_nfold, b);
            Mat g_model = cauchy_G(mx, ModelMap::E_B, om.omega);
            row.g_residual = op_norm(g_series - g_model);
            row.g_bound = series_tail_bound(n_fold * norm_x, r, order);
        }

        // (ii) h_{mu^{c-free n}}(b) = n h_{mu_x}(omega_n(b)), theta side.
        {
            Mat g_series = G_series_at(pair_nfold.mu, b);
            Mat h_series = invert(g_series) - b;
            Mat h_model = h_transform(mx, ModelMap::theta, om.omega);
            row.nfold_h_residual = op_norm(h_series - double(n_fold) * h_model);
            double delta = series_tail_bound(n_fold * norm_x, r, order);
            row.nfold_h_bound = f_conversion_bound(g_series, delta) + 1e-8;
        }

        // Two-model identities need the subordination pair of (nu_x, nu_y).
        PairOmegaResult pom = subordination_pair(mx, my, b, cfg);

        // (iii) F_{nu_{X+Y}}(b) = omega1 + omega2 - b.
        {
            Mat g_series = G_series_at(nu_xy, b);
            Mat f_series = invert(g_series);
            row.omega_sum_residual = op_norm(f_series - (pom.omega1 + pom.omega2 - b));
            double delta = series_tail_bound(norm_x + norm_y, r, order);
            row.omega_sum_bound = f_conversion_bound(g_series, delta) + 1e-8;
            // Both subordination routes must give the same analytic value.
            Mat fx = cauchy_F(mx, ModelMap::E_B, pom.omega1);
            Mat fy = cauchy_F(my, ModelMap::E_B, pom.omega2);
            row.omega_sum_consistency = std::max(op_norm(fx - fy),
                                          op_norm(fx - (pom.omega1 + pom.omega2 - b)));
        }

        // (ii') h additivity: h_{mu_{X+Y}}(b) = h_{mu_X}(omega1) + h_{mu_Y}(omega2).
        {
            Mat g_series = G_series_at(pair_xy.mu, b);
            Mat h_series = invert(g_series) - b;
            Mat rhs = h_transform(mx, ModelMap::theta, pom.omega1) +
                      h_transform(my, ModelMap::theta, pom.omega2);
            row.sum_h_residual = op_norm(h_series - rhs);
            double delta = series_tail_bound(norm_x + norm_y, r, order);
            row.sum_h_bound = f_conversion_bound(g_series, delta) + 1e-8;
        }

        // (iv) Asymptotic-series identity b^{-1} M_mu(b^{-1}) = G_mu(b), theta side.
        {
            Mat frak = G_series_at(mu_x, b); // b^{-1} M(b^{-1})
            Mat g_model = cauchy_G(mx, ModelMap::theta, b);
            row.asym_residual = op_norm(frak - g_model);
            row.asym_bound = series_tail_bound(norm_x, r, order);
        }

        row.pass = row.g_residual <= row.g_bound && row.nfold_h_residual <= row.nfold_h_bound &&
                   row.sum_h_residual <= row.sum_h_bound && row.omega_sum_residual <= row.omega_sum_bound &&
                   row.omega_sum_consistency <= 1e-8 && row.asym_residual <= row.asym_bound &&
                   row.min_eig_im_omega_gap > -1e-10;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Richardson-style moment recovery from resolvent samples.
// ---------------------------------------------------------------------------

namespace {

using LMat = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
using lcplx = std::complex<long double>;

LMat to_long(const Mat& a) {
    LMat out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out(i, j) = lcplx(a(i, j).real(), a(i, j).imag());
    return out;
}

Mat to_double(const LMat& a) {
    Mat out(a.rows(), a.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            out(i, j) = cplx(static_cast<double>(a(i, j).real()),
                             static_cast<double>(a(i, j).imag()));
    return out;
}

} // namespace

std::vector<Mat> asymptotic_moments_fit(const OperatorModel& model, ModelMap which,
                                        int order) {
    // For selfadjoint X the Hermitian moment matrices m_k = map(X^k) split by
    // parity across G(iy): with u = 1/y^2,
    //   -y   * antiherm(G(iy)) = sum_t (-1)^t m_{2t}   u^t
    //   -y^2 * herm(G(iy))     = sum_t (-1)^t m_{2t+1} u^t,
    // so each parity is fitted separately in u, which keeps the node span
    // small enough for an accurate extraction in long-double arithmetic.
    const LinMap& map = (which == ModelMap::E_B) ? model.EB : model.theta;
    const int dout = map.dout;
    const int nodes = 8; // deliberately more nodes than extracted coefficients
    const long double y0 = 16.0L * std::max(1.0, op_norm(model.X));
    const long double ratio = 1.25L;

    LMat x_big = to_long(model.X);
    std::vector<LMat> v_even(nodes), v_odd(nodes);
    std::vector<long double> us(nodes);
    for (int t = 0; t < nodes; ++t) {
        // Largest y first so that u runs increasing (stable Newton ordering).
        long double y = y0;
        for (int i = 0; i < nodes - 1 - t; ++i) y *= ratio;
        us[t] = 1.0L / (y * y);
        lcplx z(0.0L, y);
        LMat res = (z * LMat::Identity(model.m, model.m) - x_big).fullPivLu().inverse();
        LMat gm(dout, dout);
        gm.setZero();
        for (int i = 0; i < model.m; ++i)
            for (int j = 0; j < model.m; ++j) {
                lcplx c = res(i, j);
                if (c == lcplx(0.0L, 0.0L)) continue;
                gm += c * to_long(map.on_units[unit_index(i, j, model.m)]);
            }
        LMat herm = (gm + gm.adjoint()) / 2.0L;
        LMat anti = (gm - gm.adjoint()) / lcplx(0.0L, 2.0L);
        v_even[t] = -y * anti;
        v_odd[t] = -(y * y) * herm;
    }

    const int tmax_even = order / 2;       // need m_{2t} for 2t <= order
    const int tmax_odd = (order - 1) / 2;  // need m_{2t+1} for 2t+1 <= order
    std::vector<Mat> moments(order);

    for (int parity = 0; parity < 2; ++parity) {
        const std::vector<LMat>& vals = (parity == 0) ? v_even : v_odd;
        int tmax = (parity == 0) ? tmax_even : tmax_odd;
        // Newton divided differences entrywise, then triangular conversion to
        // monomial coefficients; one simultaneous fit avoids compounding the
        // error of sequentially subtracted coefficients.
        std::vector<LMat> dd(vals);
        for (int level = 1; level < nodes; ++level)
            for (int j = nodes - 1; j >= level; --j)
                dd[j] = (dd[j] - dd[j - 1]) / (us[j] - us[j - level]);
        std::vector<LMat> mono(nodes, LMat::Zero(dout, dout));
        for (int j = nodes - 1; j >= 0; --j) {
            // mono <- mono * (u - us[j]) + dd[j]
            for (int s = nodes - 1; s >= 1; --s)
                mono[s] = mono[s - 1] - us[j] * mono[s];
            mono[0] = dd[j] - us[j] * mono[0];
        }
        for (int t = (parity == 0) ? 1 : 0; t <= tmax; ++t) {
            // c_t = (-1)^t m_{2t+parity}.
            int k = 2 * t + parity;
            long double sign = (t % 2 == 0) ? 1.0L : -1.0L;
            if (k >= 1 && k <= order) moments[k - 1] = to_double(LMat(sign * mono[t]));
        }
    }
    return moments;
}

} // namespace ovfree
