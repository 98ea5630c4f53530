#include "ovfree/series.hpp"

#include <algorithm>

namespace ovfree {

namespace {

// Entry (p,q) of the value stored at `raw` (column-major dB x dB block).
inline cplx coord_of(const cplx* raw, int v, int d) {
    return raw[(v / d) + (v % d) * d];
}

void require_shape(const NCSeries& f, const NCSeries& g, const char* who) {
    if (!f.same_shape(g))
        throw dimension_error(std::string(who) + ": mismatched inclusion or order");
}

} // namespace

NCSeries NCSeries::zero(const InclusionSpec& inc, int order) {
    NCSeries s;
    s.inc = inc;
    s.order = order;
    s.coeff.reserve(order + 1);
    for (int k = 0; k <= order; ++k) s.coeff.emplace_back(k, inc.dB, inc.dD);
    return s;
}

NCSeries NCSeries::constant(const InclusionSpec& inc, int order, const Mat& c0) {
    NCSeries s = zero(inc, order);
    if (c0.rows() != inc.dD || c0.cols() != inc.dD)
        throw dimension_error("NCSeries::constant: c0 has wrong dimension");
    s.coeff[0].at(0) = c0;
    return s;
}

NCSeries NCSeries::identity_b(int d, int order) {
    NCSeries s = zero(InclusionSpec::identity(d), order);
    if (order >= 1)
        for (int v = 0; v < d * d; ++v) s.coeff[1].at(v) = unit_mat(v / d, v % d, d);
    return s;
}

double NCSeries::max_abs() const {
    double m = 0.0;
    for (const MultiMap& c : coeff) m = std::max(m, c.max_abs());
    return m;
}

NCSeries series_add(const NCSeries& f, const NCSeries& g) {
    require_shape(f, g, "series_add");
    NCSeries out = f;
    for (int k = 0; k <= f.order; ++k) out.coeff[k] += g.coeff[k];
    return out;
}

NCSeries series_sub(const NCSeries& f, const NCSeries& g) {
    require_shape(f, g, "series_sub");
    NCSeries out = f;
    for (int k = 0; k <= f.order; ++k) out.coeff[k] -= g.coeff[k];
    return out;
}

NCSeries series_scale(const NCSeries& f, cplx s) {
    NCSeries out = f;
    for (MultiMap& c : out.coeff) c *= s;
    return out;
}

NCSeries series_mul(const NCSeries& f, const NCSeries& g) {
    require_shape(f, g, "series_mul");
    NCSeries out = NCSeries::zero(f.inc, f.order);
    for (int k = 0; k <= f.order; ++k) {
        MultiMap& ok = out.coeff[k];
        for (int i = 0; i <= k; ++i) {
            const MultiMap& fi = f.coeff[i];
            const MultiMap& gj = g.coeff[k - i];
            if (fi.max_abs() == 0.0 || gj.max_abs() == 0.0) continue;
            const std::size_t nlo = gj.tuples();
            for (std::size_t a = 0; a < fi.tuples(); ++a) {
                Eigen::Map<const Mat> fa = fi.at(a);
                for (std::size_t b = 0; b < nlo; ++b) {
                    Eigen::Map<Mat> dst = ok.at(a * nlo + b);
                    dst.noalias() += fa * gj.at(b);
                }
            }
        }
    }
    return out;
}

NCSeries series_reciprocal(const NCSeries& f) {
    const Mat c0 = f.coeff[0].at(0);
    Mat c0inv;
    try {
        c0inv = invert(c0);
    } catch (const singularity_error&) {
        throw singularity_error("series_reciprocal: constant term is singular");
    }
    NCSeries r = NCSeries::zero(f.inc, f.order);
    r.coeff[0].at(0) = c0inv;
    for (int k = 1; k <= f.order; ++k) {
        MultiMap s(k, f.inc.dB, f.inc.dD);
        for (int i = 1; i <= k; ++i) {
            const MultiMap& fi = f.coeff[i];
            if (fi.max_abs() == 0.0) continue;
            const MultiMap& rj = r.coeff[k - i];
            const std::size_t nlo = rj.tuples();
            for (std::size_t a = 0; a < fi.tuples(); ++a) {
                Eigen::Map<const Mat> fa = fi.at(a);
                for (std::size_t b = 0; b < nlo; ++b) {
                    Eigen::Map<Mat> dst = s.at(a * nlo + b);
                    dst.noalias() += fa * rj.at(b);
                }
            }
        }
        MultiMap& rk = r.coeff[k];
        for (std::size_t t = 0; t < rk.tuples(); ++t)
            rk.at(t) = -(c0inv * s.at(t)).eval();
    }
    return r;
}

NCSeries embed_series(const NCSeries& f, const InclusionSpec& inc) {
    if (!f.into_B() || f.inc.dB != inc.dB)
        throw type_error("embed_series: input must be a (B,B) series over the same B");
    NCSeries out = NCSeries::zero(inc, f.order);
    for (int k = 0; k <= f.order; ++k)
        for (std::size_t t = 0; t < f.coeff[k].tuples(); ++t)
            out.coeff[k].at(t) = inc.embed(f.coeff[k].at(t));
    return out;
}

namespace {

// True when w_1 is the identity map b -> b (the common case w = b*M(b)).
bool linear_part_is_identity(const NCSeries& w) {
    if (w.order < 1) return false;
    const int d = w.inc.dB;
    for (int v = 0; v < d * d; ++v) {
        Mat diff = Mat(w.coeff[1].at(v)) - unit_mat(v / d, v % d, d);
        if (diff.cwiseAbs().maxCoeff() > 1e-14) return false;
    }
    return true;
}

} // namespace

MultiMap compose_order(const NCSeries& f, const NCSeries& w, int k) {
    const int dB = f.inc.dB;
    const int nb = dB * dB;
    const int dD = f.inc.dD;
    if (k == 0) return f.coeff[0];
    MultiMap out(k, dB, dD);
    if (f.order < 1) return out;

    const bool w1_id = linear_part_is_identity(w);
    std::vector<double> fmax(f.order + 1);
    for (int j = 0; j <= f.order; ++j) fmax[j] = f.coeff[j].max_abs();

    // Enumerate compositions of k via the k-1 gap bits.
    const std::uint64_t masks = std::uint64_t(1) << (k - 1);
    std::vector<int> parts, offs;
    for (std::uint64_t m = 0; m < masks; ++m) {
        parts.clear();
        offs.clear();
        int run = 1;
        for (int g = 0; g < k - 1; ++g) {
            if (m & (std::uint64_t(1) << g)) {
                parts.push_back(run);
                run = 1;
            } else {
                ++run;
            }
        }
        parts.push_back(run);
        const int j = static_cast<int>(parts.size());
        if (j > f.order || fmax[j] == 0.0) continue;
        offs.resize(j);
        {
            int acc = 0;
            for (int i = 0; i < j; ++i) {
                offs[i] = acc; // starting digit position of part i
                acc += parts[i];
            }
        }
        // Modes with part size 1 and identity w_1 pass their digit through.
        std::vector<int> dyn; // positions needing a unit sum
        for (int i = 0; i < j; ++i)
            if (!(parts[i] == 1 && w1_id)) dyn.push_back(i);

        const MultiMap& fj = f.coeff[j];
        std::vector<int> dig(k);
        std::vector<std::size_t> subidx(j);
        std::vector<std::size_t> stride(dyn.size());
        for (std::size_t di = 0; di < dyn.size(); ++di)
            stride[di] = MultiMap::pow_sz(nb, j - 1 - dyn[di]);
        std::vector<const cplx*> wraw(dyn.size());
        for (std::size_t t = 0; t < out.tuples(); ++t) {
            tuple_digits(t, k, nb, dig.data());
            for (int i = 0; i < j; ++i) {
                std::size_t s = 0;
                for (int a = 0; a < parts[i]; ++a) s = s * nb + dig[offs[i] + a];
                subidx[i] = s;
            }
            // Base f-index from the pass-through modes.
            std::size_t fbase = 0;
            for (int i = 0; i < j; ++i)
                fbase = fbase * nb + ((parts[i] == 1 && w1_id) ? subidx[i] : 0);
            if (dyn.empty()) {
                Eigen::Map<Mat>(out.raw(t), dD, dD) += Eigen::Map<const Mat>(fj.raw(fbase), dD, dD);
                continue;
            }
            for (std::size_t di = 0; di < dyn.size(); ++di)
                wraw[di] = w.coeff[parts[dyn[di]]].raw(subidx[dyn[di]]);
            const std::size_t combos = MultiMap::pow_sz(nb, static_cast<int>(dyn.size()));
            Eigen::Map<Mat> dst(out.raw(t), dD, dD);
            for (std::size_t c = 0; c < combos; ++c) {
                std::size_t rest = c;
                cplx coef(1.0, 0.0);
                std::size_t fidx = fbase;
                for (int di = static_cast<int>(dyn.size()) - 1; di >= 0; --di) {
                    int v = static_cast<int>(rest % nb);
                    rest /= nb;
                    coef *= coord_of(wraw[di], v, dB);
                    if (coef == cplx(0.0, 0.0)) break;
                    fidx += stride[di] * static_cast<std::size_t>(v);
                }
                if (coef == cplx(0.0, 0.0)) continue;
                dst += coef * Eigen::Map<const Mat>(fj.raw(fidx), dD, dD);
            }
        }
    }
    return out;
}

NCSeries series_compose(const NCSeries& f, const NCSeries& w) {
    if (w.inc.dB != f.inc.dB) throw dimension_error("series_compose: base algebra mismatch");
    if (!w.into_B())
        throw type_error("series_compose: inner series must take values in B");
    if (w.order != f.order) throw dimension_error("series_compose: order mismatch");
    if (w.coeff[0].max_abs() > kAlgTol * (1.0 + w.max_abs()))
        throw precondition_error("series_compose: inner series has nonzero constant term");
    NCSeries out = NCSeries::zero(f.inc, f.order);
    for (int k = 0; k <= f.order; ++k) out.coeff[k] = compose_order(f, w, k);
    return out;
}

Mat eval_nilpotent(const NCSeries& f, const Mat& a, int level) {
    if (a.rows() != level * f.inc.dB || a.cols() != level * f.inc.dB)
        throw dimension_error("eval_nilpotent: argument is not level*dB square");
    Mat p = a;
    const double bound = std::pow(std::max(1.0, op_norm(a)), f.order + 1);
    for (int i = 1; i <= f.order; ++i) p = p * a;
    if (op_norm(p) > 1e-10 * bound)
        throw precondition_error("eval_nilpotent: argument is not nilpotent at this order");
    return eval_series_at(f, a, level);
}

Mat eval_series_at(const NCSeries& f, const Mat& a, int level) {
    Mat out = Mat::Zero(level * f.inc.dD, level * f.inc.dD);
    for (int k = 0; k <= f.order; ++k) out += f.coeff[k].eval_amplified(a, level);
    return out;
}

namespace {

// Split-product accumulator: acc_k += sum_{i=lo_i..k} F_i (x) G_{k-i}.
void accumulate_product_order(MultiMap& acc, const NCSeries& f, const NCSeries& g, int k,
                              int i_min, int i_max) {
    for (int i = i_min; i <= i_max; ++i) {
        const MultiMap& fi = f.coeff[i];
        const MultiMap& gj = g.coeff[k - i];
        if (fi.max_abs() == 0.0 || gj.max_abs() == 0.0) continue;
        const std::size_t nlo = gj.tuples();
        for (std::size_t a = 0; a < fi.tuples(); ++a) {
            Eigen::Map<const Mat> fa = fi.at(a);
            for (std::size_t b = 0; b < nlo; ++b) {
                Eigen::Map<Mat> dst = acc.at(a * nlo + b);
                dst.noalias() += fa * gj.at(b);
            }
        }
    }
}

// Checks the constant term is 1 to tolerance, then pins it exactly so the
// shifted series b*M has an exact-identity linear part (the triangular
// solvers read the top coefficient through that slot).
NCSeries normalized_unit_constant(const NCSeries& m, const char* who) {
    Mat diff = Mat(m.coeff[0].at(0)) - Mat::Identity(m.inc.dD, m.inc.dD);
    if (diff.cwiseAbs().maxCoeff() > 1e-8)
        throw precondition_error(std::string(who) + ": moment series must have constant term 1");
    NCSeries out = m;
    out.coeff[0].at(0) = Mat::Identity(m.inc.dD, m.inc.dD);
    return out;
}

void require_zero_constant(const NCSeries& h, const char* who) {
    if (h.coeff[0].max_abs() > 1e-12 * (1.0 + h.max_abs()))
        throw precondition_error(std::string(who) + ": transform must have zero constant term");
}

// Refresh w = b*M(b) at arity k (uses M at arity k-1).
void refresh_shift(NCSeries& w, const NCSeries& m, int k) {
    const int d = m.inc.dB;
    const int nb = d * d;
    MultiMap& wk = w.coeff[k];
    const MultiMap& mk1 = m.coeff[k - 1];
    const std::size_t nlo = mk1.tuples();
    for (int v = 0; v < nb; ++v) {
        Mat u = unit_mat(v / d, v % d, d);
        for (std::size_t b = 0; b < nlo; ++b) wk.at(static_cast<std::size_t>(v) * nlo + b) = u * mk1.at(b);
    }
}

NCSeries solve_boolean_transform(const NCSeries& m_in) {
    NCSeries m = normalized_unit_constant(m_in, "solve_triangular[boolean]");
    NCSeries h = NCSeries::zero(m.inc, m.order);
    for (int k = 1; k <= m.order; ++k) {
        MultiMap acc(k, m.inc.dB, m.inc.dD);
        accumulate_product_order(acc, h, m, k, 1, k - 1);
        h.coeff[k] = m.coeff[k];
        h.coeff[k] -= acc;
    }
    return h;
}

NCSeries solve_boolean_moments(const NCSeries& h) {
    require_zero_constant(h, "solve_triangular[boolean]");
    NCSeries m = NCSeries::constant(h.inc, h.order, Mat::Identity(h.inc.dD, h.inc.dD));
    for (int k = 1; k <= h.order; ++k) {
        MultiMap acc(k, h.inc.dB, h.inc.dD);
        accumulate_product_order(acc, h, m, k, 1, k);
        m.coeff[k] = acc;
    }
    return m;
}

NCSeries solve_free_transform(const NCSeries& m_in) {
    if (!m_in.into_B()) throw type_error("solve_triangular[free]: series must be over (B,B)");
    NCSeries m = normalized_unit_constant(m_in, "solve_triangular[free]");
    NCSeries w = NCSeries::zero(m.inc, m.order);
    for (int k = 1; k <= m.order; ++k) refresh_shift(w, m, k);
    NCSeries h = NCSeries::zero(m.inc, m.order);
    for (int k = 1; k <= m.order; ++k) {
        MultiMap c = compose_order(h, w, k);
        h.coeff[k] = m.coeff[k];
        h.coeff[k] -= c;
    }
    return h;
}

NCSeries solve_free_moments(const NCSeries& h) {
    if (!h.into_B()) throw type_error("solve_triangular[free]: series must be over (B,B)");
    require_zero_constant(h, "solve_triangular[free]");
    NCSeries m = NCSeries::constant(h.inc, h.order, Mat::Identity(h.inc.dD, h.inc.dD));
    NCSeries w = NCSeries::zero(h.inc, h.order);
    for (int k = 1; k <= h.order; ++k) {
        refresh_shift(w, m, k);
        m.coeff[k] = compose_order(h, w, k);
    }
    return m;
}

NCSeries solve_cfree_transform(const NCSeries& mu_in, const NCSeries& nu_in) {
    if (!nu_in.into_B())
        throw type_error("solve_triangular[cfree]: nu series must be over (B,B)");
    if (mu_in.inc.dB != nu_in.inc.dB || mu_in.order != nu_in.order)
        throw dimension_error("solve_triangular[cfree]: shape mismatch");
    NCSeries m_mu = normalized_unit_constant(mu_in, "solve_triangular[cfree]");
    NCSeries m_nu = normalized_unit_constant(nu_in, "solve_triangular[cfree]");
    NCSeries nu_d = embed_series(m_nu, m_mu.inc);
    // lhs = (M_mu - 1) * M_nu
    NCSeries mu_minus = m_mu;
    mu_minus.coeff[0].at(0) = Mat::Zero(m_mu.inc.dD, m_mu.inc.dD);
    NCSeries lhs = series_mul(mu_minus, nu_d);

    NCSeries w = NCSeries::zero(m_nu.inc, m_nu.order);
    for (int k = 1; k <= m_nu.order; ++k) refresh_shift(w, m_nu, k);

    NCSeries h = NCSeries::zero(m_mu.inc, m_mu.order);
    NCSeries comp = NCSeries::zero(m_mu.inc, m_mu.order); // H(b*M_nu), filled as we go
    for (int k = 1; k <= m_mu.order; ++k) {
        MultiMap ck = compose_order(h, w, k); // misses the top term H_k
        MultiMap rhs_partial = ck;
        {
            MultiMap acc(k, m_mu.inc.dB, m_mu.inc.dD);
            for (int i = 1; i <= k - 1; ++i) {
                const MultiMap& fi = m_mu.coeff[i];
                const MultiMap& gj = comp.coeff[k - i];
                if (fi.max_abs() == 0.0 || gj.max_abs() == 0.0) continue;
                const std::size_t nlo = gj.tuples();
                for (std::size_t a = 0; a < fi.tuples(); ++a) {
                    Eigen::Map<const Mat> fa = fi.at(a);
                    for (std::size_t b = 0; b < nlo; ++b) {
                        Eigen::Map<Mat> dst = acc.at(a * nlo + b);
                        dst.noalias() += fa * gj.at(b);
                    }
                }
            }
            rhs_partial += acc;
        }
        h.coeff[k] = lhs.coeff[k];
        h.coeff[k] -= rhs_partial;
        comp.coeff[k] = ck;
        comp.coeff[k] += h.coeff[k]; // w_1 = id, so H_k contributes itself at order k
    }
    return h;
}

NCSeries solve_cfree_moments(const NCSeries& h, const NCSeries& nu_in) {
    if (!nu_in.into_B())
        throw type_error("solve_triangular[cfree]: nu series must be over (B,B)");
    if (h.inc.dB != nu_in.inc.dB || h.order != nu_in.order)
        throw dimension_error("solve_triangular[cfree]: shape mismatch");
    require_zero_constant(h, "solve_triangular[cfree]");
    NCSeries m_nu = normalized_unit_constant(nu_in, "solve_triangular[cfree]");
    NCSeries nu_d = embed_series(m_nu, h.inc);
    NCSeries w = NCSeries::zero(m_nu.inc, m_nu.order);
    for (int k = 1; k <= m_nu.order; ++k) refresh_shift(w, m_nu, k);
    NCSeries comp = series_compose(h, w); // K = H(b*M_nu), fully known

    NCSeries m_mu = NCSeries::constant(h.inc, h.order, Mat::Identity(h.inc.dD, h.inc.dD));
    for (int k = 1; k <= h.order; ++k) {
        // (M_mu)_k = sum_{i=0}^{k-1} (M_mu)_i K_{k-i} - sum_{i=1}^{k-1} (M_mu)_i (M_nu)_{k-i}
        MultiMap acc(k, h.inc.dB, h.inc.dD);
        accumulate_product_order(acc, m_mu, comp, k, 0, k - 1);
        MultiMap sub(k, h.inc.dB, h.inc.dD);
        accumulate_product_order(sub, m_mu, nu_d, k, 1, k - 1);
        acc -= sub;
        m_mu.coeff[k] = acc;
    }
    return m_mu;
}

} // namespace

NCSeries solve_triangular(SeriesEquation eq, const std::vector<NCSeries>& knowns, int order) {
    auto need = [&](std::size_t n) {
        if (knowns.size() != n)
            throw usage_error("solve_triangular: wrong number of known series for this shape");
        for (const NCSeries& s : knowns)
            if (s.order != order)
                throw usage_error("solve_triangular: known series order differs from requested order");
    };
    switch (eq) {
        case SeriesEquation::boolean_transform_from_moments:
            need(1);
            return solve_boolean_transform(knowns[0]);
        case SeriesEquation::boolean_moments_from_transform:
            need(1);
            return solve_boolean_moments(knowns[0]);
        case SeriesEquation::free_transform_from_moments:
            need(1);
            return solve_free_transform(knowns[0]);
        case SeriesEquation::free_moments_from_transform:
            need(1);
            return solve_free_moments(knowns[0]);
        case SeriesEquation::cfree_transform_from_moments:
            need(2);
            return solve_cfree_transform(knowns[0], knowns[1]);
        case SeriesEquation::cfree_moments_from_transform:
            need(2);
            return solve_cfree_moments(knowns[0], knowns[1]);
    }
    throw usage_error("solve_triangular: unregistered equation shape");
}

double max_coeff_diff(const NCSeries& f, const NCSeries& g) {
    require_shape(f, g, "max_coeff_diff");
    double m = 0.0;
    for (int k = 0; k <= f.order; ++k) m = std::max(m, f.coeff[k].max_abs_diff(g.coeff[k]));
    return m;
}

bool approx_equal(const NCSeries& f, const NCSeries& g, double tol) {
    return max_coeff_diff(f, g) <= tol * (1.0 + std::max(f.max_abs(), g.max_abs()));
}

} // namespace ovfree
