#include "ovfree/distribution.hpp"

#include <Eigen/Eigenvalues>
#include <bit>
#include <unordered_map>

namespace ovfree {

OVDistribution OVDistribution::zero(const InclusionSpec& inc, int order) {
    if (order < 1) throw usage_error("distribution order must be >= 1");
    OVDistribution d;
    d.inc = inc;
    d.order = order;
    d.mean = Mat::Zero(inc.dD, inc.dD);
    for (int k = 2; k <= order; ++k) d.mom.emplace_back(k - 1, inc.dB, inc.dD);
    return d;
}

double OVDistribution::hermitian_residual() const {
    double r = (mean - mean.adjoint()).cwiseAbs().maxCoeff();
    for (const MultiMap& mk : mom) r = std::max(r, mk.hermitian_residual());
    return r;
}

void OVDistribution::validate() const {
    if (mean.rows() != inc.dD || mean.cols() != inc.dD)
        throw dimension_error("distribution: mean has wrong dimension");
    if (static_cast<int>(mom.size()) != order - 1)
        throw dimension_error("distribution: wrong number of moment maps");
    double scale = 1.0 + mean.norm();
    for (const MultiMap& mk : mom) scale = std::max(scale, 1.0 + mk.max_abs());
    if (hermitian_residual() > 1e-8 * scale)
        throw model_error("distribution: Hermitian symmetry violated");
}

void DistPair::validate() const {
    mu.validate();
    nu.validate();
    if (!nu.inc.is_identity())
        throw type_error("pair: nu must be a (B,B) distribution");
    if (nu.inc.dB != mu.inc.dB || nu.order != mu.order)
        throw dimension_error("pair: coordinates must share d_B and order");
}

Mat LinMap::apply(const Mat& a) const {
    if (a.rows() != din || a.cols() != din)
        throw dimension_error("LinMap::apply: wrong input dimension");
    Mat out = Mat::Zero(dout, dout);
    for (int i = 0; i < din; ++i)
        for (int j = 0; j < din; ++j) {
            cplx c = a(i, j);
            if (c != cplx(0.0, 0.0)) out += c * on_units[unit_index(i, j, din)];
        }
    return out;
}

LinMap LinMap::identity(int d) {
    LinMap l;
    l.din = l.dout = d;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) l.on_units.push_back(unit_mat(i, j, d));
    return l;
}

Mat OperatorModel::embed_A(const Mat& b) const {
    const int d = dB();
    Mat out = Mat::Zero(m, m);
    for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) out += b(p, q) * iota_units[unit_index(p, q, d)];
    return out;
}

void OperatorModel::validate(std::mt19937_64& rng, double tol) const {
    if (X.rows() != m || X.cols() != m) throw model_error("model: X has wrong dimension");
    if (!is_selfadjoint(X, tol)) throw model_error("model: X is not selfadjoint");
    InclusionSpec amb;
    amb.dB = dB();
    amb.dD = m;
    amb.units = iota_units;
    try {
        amb.validate(1e-10);
    } catch (const model_error&) {
        throw model_error("model: iota_A is not a unital *-homomorphism");
    }
    const int d = dB();
    if ((EB.apply(Mat::Identity(m, m)) - Mat::Identity(d, d)).cwiseAbs().maxCoeff() > tol)
        throw model_error("model: E_B is not unital");
    if ((theta.apply(Mat::Identity(m, m)) - Mat::Identity(theta.dout, theta.dout))
            .cwiseAbs()
            .maxCoeff() > tol)
        throw model_error("model: theta is not unital");
    // Bimodule property and positivity, spot-checked on random samples.
    for (int trial = 0; trial < 4; ++trial) {
        Mat b1 = random_matrix(rng, d), b2 = random_matrix(rng, d);
        Mat a = random_matrix(rng, m);
        Mat lhs = EB.apply(embed_A(b1) * a * embed_A(b2));
        Mat rhs = b1 * EB.apply(a) * b2;
        double scale = 1.0 + lhs.norm() + rhs.norm();
        if ((lhs - rhs).cwiseAbs().maxCoeff() > tol * scale)
            throw model_error("model: E_B is not a B-bimodule map");
        Mat tl = theta.apply(embed_A(b1) * a * embed_A(b2));
        Mat tr = inc.embed(b1) * theta.apply(a) * inc.embed(b2);
        if ((tl - tr).cwiseAbs().maxCoeff() > tol * (1.0 + tl.norm() + tr.norm()))
            throw model_error("model: theta is not a B-bimodule map");
        Mat g = random_matrix(rng, m);
        if (min_eig_herm(EB.apply(g.adjoint() * g)) < -tol * (1.0 + g.norm() * g.norm()))
            throw model_error("model: E_B fails positivity");
    }
    // Complete positivity of theta via its Choi-style block matrix.
    Mat choi(m * theta.dout, m * theta.dout);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            choi.block(i * theta.dout, j * theta.dout, theta.dout, theta.dout) =
                theta.on_units[unit_index(i, j, m)];
    if (min_eig_herm(choi) < -1e-8 * (1.0 + choi.norm()))
        throw model_error("model: theta fails the complete-positivity block test");
}

namespace {

Mat map_word_moment(const OperatorModel& model, const LinMap& map, std::size_t tuple,
                    int arity) {
    // map(X iota(u_1) X ... iota(u_{arity}) X) for the unit tuple.
    const int d = model.dB();
    const int nb = d * d;
    std::vector<int> dig(arity);
    tuple_digits(tuple, arity, nb, dig.data());
    Mat prod = model.X;
    for (int i = 0; i < arity; ++i) prod = prod * model.iota_units[dig[i]] * model.X;
    return map.apply(prod);
}

} // namespace

OVDistribution moments_from_model(const OperatorModel& model, ModelMap which, int order) {
    const LinMap& map = (which == ModelMap::E_B) ? model.EB : model.theta;
    InclusionSpec inc =
        (which == ModelMap::E_B) ? InclusionSpec::identity(model.dB()) : model.inc;
    OVDistribution d = OVDistribution::zero(inc, order);
    d.mean = map.apply(model.X);
    for (int k = 2; k <= order; ++k) {
        MultiMap& mk = d.m(k);
        for (std::size_t t = 0; t < mk.tuples(); ++t)
            mk.at(t) = map_word_moment(model, map, t, k - 1);
    }
    return d;
}

NCSeries ncseries_from_moments(const OVDistribution& d) {
    NCSeries s = NCSeries::constant(d.inc, d.order, Mat::Identity(d.inc.dD, d.inc.dD));
    const int nb = d.inc.dB * d.inc.dB;
    if (d.order >= 1)
        for (int v = 0; v < nb; ++v) s.coeff[1].at(v) = d.mean * d.inc.units[v];
    for (int k = 2; k <= d.order; ++k) {
        const MultiMap& mk = d.m(k);
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            Eigen::Map<const Mat> val = mk.at(t);
            for (int v = 0; v < nb; ++v)
                s.coeff[k].at(t * nb + v) = val * d.inc.units[v];
        }
    }
    return s;
}

OVDistribution moments_from_ncseries(const NCSeries& s) {
    OVDistribution d = OVDistribution::zero(s.inc, s.order);
    const int dB = s.inc.dB;
    const int nb = dB * dB;
    // Evaluate the trailing slot at 1 = sum of diagonal units.
    if (s.order >= 1) {
        d.mean = Mat::Zero(s.inc.dD, s.inc.dD);
        for (int p = 0; p < dB; ++p) d.mean += s.coeff[1].at(unit_index(p, p, dB));
    }
    for (int k = 2; k <= s.order; ++k) {
        MultiMap& mk = d.m(k);
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            Mat v = Mat::Zero(s.inc.dD, s.inc.dD);
            for (int p = 0; p < dB; ++p)
                v += s.coeff[k].at(t * nb + unit_index(p, p, dB));
            mk.at(t) = v;
        }
    }
    return d;
}

OVDistribution make_point_mass(const Mat& beta, const InclusionSpec& inc, int order) {
    if (!is_selfadjoint(beta, 1e-10))
        throw domain_error("point_mass: beta must be selfadjoint");
    OVDistribution d = OVDistribution::zero(inc, order);
    d.mean = inc.embed(beta);
    const int dB = inc.dB, nb = dB * dB;
    for (int k = 2; k <= order; ++k) {
        MultiMap& mk = d.m(k);
        std::vector<int> dig(k - 1);
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            tuple_digits(t, k - 1, nb, dig.data());
            Mat w = beta;
            for (int i = 0; i < k - 1; ++i)
                w = w * unit_mat(dig[i] / dB, dig[i] % dB, dB) * beta;
            mk.at(t) = inc.embed(w);
        }
    }
    return d;
}

OVDistribution make_rademacher(const InclusionSpec& inc, int order) {
    OVDistribution d = OVDistribution::zero(inc, order);
    const int dB = inc.dB, nb = dB * dB;
    for (int k = 2; k <= order; ++k) {
        if (k % 2 != 0) continue;
        MultiMap& mk = d.m(k);
        std::vector<int> dig(k - 1);
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            tuple_digits(t, k - 1, nb, dig.data());
            Mat w = Mat::Identity(dB, dB);
            for (int i = 0; i < k - 1; ++i)
                w = w * unit_mat(dig[i] / dB, dig[i] % dB, dB);
            mk.at(t) = inc.embed(w);
        }
    }
    return d;
}

OVDistribution make_ov_semicircle(const std::vector<Mat>& eta_units, int d, int order) {
    if (static_cast<int>(eta_units.size()) != d * d)
        throw dimension_error("ov_semicircle: eta must be given on all matrix units");
    // Complete positivity of eta via its Choi block matrix.
    Mat choi(d * d, d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            choi.block(i * d, j * d, d, d) = eta_units[unit_index(i, j, d)];
    if ((choi - choi.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + choi.norm()) ||
        min_eig_herm(choi) < -1e-10 * (1.0 + choi.norm()))
        throw positivity_error("ov_semicircle: eta is not completely positive");
    InclusionSpec inc = InclusionSpec::identity(d);
    NCSeries r = NCSeries::zero(inc, order);
    if (order >= 2) {
        const int nb = d * d;
        for (int v1 = 0; v1 < nb; ++v1)
            for (int v2 = 0; v2 < nb; ++v2)
                r.coeff[2].at(static_cast<std::size_t>(v1) * nb + v2) =
                    eta_units[v1] * unit_mat(v2 / d, v2 % d, d);
    }
    NCSeries m = solve_triangular(SeriesEquation::free_moments_from_transform, {r}, order);
    return moments_from_ncseries(m);
}

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

} // namespace

OVDistribution make_scalar_arcsine(int order) {
    OVDistribution d = OVDistribution::zero(InclusionSpec::identity(1), order);
    for (int k = 2; k <= order; ++k)
        if (k % 2 == 0) d.m(k).at(0)(0, 0) = binom(k, k / 2);
    return d;
}

OVDistribution make_scalar_free_poisson(double lambda, int order) {
    OVDistribution d = OVDistribution::zero(InclusionSpec::identity(1), order);
    d.mean = Mat::Constant(1, 1, lambda);
    for (int k = 2; k <= order; ++k) {
        double mk = 0.0;
        for (int j = 1; j <= k; ++j) {
            double narayana = binom(k, j) * binom(k, j - 1) / k;
            mk += narayana * std::pow(lambda, j);
        }
        d.m(k).at(0)(0, 0) = mk;
    }
    return d;
}

OVDistribution dilate(const OVDistribution& d, double c) {
    OVDistribution out = d;
    out.mean *= c;
    for (int k = 2; k <= d.order; ++k) out.m(k) *= std::pow(c, k);
    return out;
}

OperatorModel model_point_mass(const Mat& beta, const InclusionSpec& inc) {
    if (!is_selfadjoint(beta, 1e-10))
        throw domain_error("model_point_mass: beta must be selfadjoint");
    OperatorModel mod;
    mod.m = inc.dB;
    mod.X = beta;
    InclusionSpec id = InclusionSpec::identity(inc.dB);
    mod.iota_units = id.units;
    mod.EB = LinMap::identity(inc.dB);
    mod.theta.din = inc.dB;
    mod.theta.dout = inc.dD;
    mod.theta.on_units = inc.units;
    mod.inc = inc;
    return mod;
}

OperatorModel model_rademacher(int dB) {
    OperatorModel mod;
    mod.m = 2 * dB;
    mod.X = Mat::Zero(mod.m, mod.m);
    mod.X.block(0, dB, dB, dB) = Mat::Identity(dB, dB);
    mod.X.block(dB, 0, dB, dB) = Mat::Identity(dB, dB);
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q) {
            Mat e = Mat::Zero(mod.m, mod.m);
            e(p, q) = 1.0;
            e(dB + p, dB + q) = 1.0;
            mod.iota_units.push_back(e);
        }
    mod.EB.din = mod.m;
    mod.EB.dout = dB;
    for (int i = 0; i < mod.m; ++i)
        for (int j = 0; j < mod.m; ++j) {
            Mat v = Mat::Zero(dB, dB);
            if (i / dB == j / dB) v(i % dB, j % dB) = 0.5; // average of the two blocks
            mod.EB.on_units.push_back(v);
        }
    mod.theta = mod.EB;
    mod.inc = InclusionSpec::identity(dB);
    return mod;
}

namespace {

OperatorModel fock_model(const Mat& a, int levels, const Eigen::VectorXcd& theta_vec) {
    const int d = static_cast<int>(a.rows());
    OperatorModel mod;
    const int p = levels;
    mod.m = (p + 1) * d;
    mod.X = Mat::Zero(mod.m, mod.m);
    for (int j = 0; j < p; ++j) {
        mod.X.block(j * d, (j + 1) * d, d, d) = a.adjoint();
        mod.X.block((j + 1) * d, j * d, d, d) = a;
    }
    for (int r = 0; r < d; ++r)
        for (int s = 0; s < d; ++s) {
            Mat e = Mat::Zero(mod.m, mod.m);
            for (int j = 0; j <= p; ++j) e(j * d + r, j * d + s) = 1.0;
            mod.iota_units.push_back(e);
        }
    mod.EB.din = mod.m;
    mod.EB.dout = d;
    for (int i = 0; i < mod.m; ++i)
        for (int j = 0; j < mod.m; ++j) {
            Mat v = Mat::Zero(d, d);
            if (i / d == 0 && j / d == 0) v(i % d, j % d) = 1.0; // vacuum corner
            mod.EB.on_units.push_back(v);
        }
    mod.theta.din = mod.m;
    mod.theta.dout = d;
    for (int i = 0; i < mod.m; ++i)
        for (int j = 0; j < mod.m; ++j) {
            Mat v = Mat::Zero(d, d);
            v(i % d, j % d) = std::conj(theta_vec(i / d)) * theta_vec(j / d);
            mod.theta.on_units.push_back(v);
        }
    mod.inc = InclusionSpec::identity(d);
    return mod;
}

} // namespace

OperatorModel model_fock_semicircle(const Mat& a, int levels) {
    Eigen::VectorXcd vac = Eigen::VectorXcd::Zero(levels + 1);
    vac(0) = 1.0;
    return fock_model(a, levels, vac);
}

OperatorModel model_fock_semicircle_pair(const Mat& a, int levels) {
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(levels + 1);
    w(0) = std::sqrt(0.8);
    w(1) = cplx(0.0, std::sqrt(0.2));
    return fock_model(a, levels, w);
}

OperatorModel model_random(std::mt19937_64& rng, int dB, int env_dim, int theta_copies) {
    const int r = env_dim;
    OperatorModel mod;
    mod.m = dB * r; // index (alpha, i) = alpha*dB + i
    Mat x = random_selfadjoint(rng, mod.m);
    mod.X = x / std::max(1.0, op_norm(x));
    for (int p = 0; p < dB; ++p)
        for (int q = 0; q < dB; ++q) {
            Mat e = Mat::Zero(mod.m, mod.m);
            for (int al = 0; al < r; ++al) e(al * dB + p, al * dB + q) = 1.0;
            mod.iota_units.push_back(e);
        }
    // E_B = id tensor (state from a random density matrix).
    Mat v = random_matrix(rng, r);
    Mat rho = v.adjoint() * v;
    rho /= rho.trace();
    mod.EB.din = mod.m;
    mod.EB.dout = dB;
    for (int i = 0; i < mod.m; ++i)
        for (int j = 0; j < mod.m; ++j) {
            int al = i / dB, be = j / dB;
            Mat val = Mat::Zero(dB, dB);
            val(i % dB, j % dB) = rho(be, al); // tr(rho E_{al,be}) = rho(be,al)
            mod.EB.on_units.push_back(val);
        }
    // theta = Phi tensor id with Phi : M_r -> M_s a unital CP map.
    const int s = theta_copies;
    std::vector<Mat> kraus;
    Mat t = Mat::Zero(s, s);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int i = 0; i < 2; ++i) {
        Mat kk(r, s);
        for (int rr = 0; rr < r; ++rr)
            for (int cc = 0; cc < s; ++cc) kk(rr, cc) = cplx(g(rng), g(rng));
        kraus.push_back(kk);
        t += kk.adjoint() * kk;
    }
    Mat tinvsqrt = invert(sqrt_psd(t));
    for (Mat& k : kraus) k = k * tinvsqrt;
    mod.theta.din = mod.m;
    mod.theta.dout = dB * s;
    for (int i = 0; i < mod.m; ++i)
        for (int j = 0; j < mod.m; ++j) {
            int al = i / dB, be = j / dB;
            Mat phi = Mat::Zero(s, s);
            for (const Mat& k : kraus) phi += k.row(al).adjoint() * k.row(be);
            Mat val = Mat::Zero(dB * s, dB * s);
            for (int aa = 0; aa < s; ++aa)
                for (int bb = 0; bb < s; ++bb)
                    val(aa * dB + (i % dB), bb * dB + (j % dB)) = phi(aa, bb);
            mod.theta.on_units.push_back(val);
        }
    mod.inc = (s == 1) ? InclusionSpec::identity(dB) : InclusionSpec::amplified(dB, s);
    return mod;
}

// ---------------------------------------------------------------------------
// Independence-definition oracles.
// ---------------------------------------------------------------------------

namespace {

// B-sized scratch matrices live on the stack (dB <= 3).
using SmallMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

// Word-expansion engine over canonical basis words: letters in {X = 0, Y = 1}
// with matrix-unit interior spacers and identity boundaries. Merged spacers
// produced by the centering recursion are flattened back onto the unit basis,
// and values are memoized on (letter pattern, spacer basis indices).
class WordOracle {
public:
    // For the free oracle pass the same distribution as mu and nu with
    // cfree = false; the all-centered base term then vanishes by definition.
    WordOracle(const OVDistribution& mu_x, const OVDistribution& nu_x,
               const OVDistribution& mu_y, const OVDistribution& nu_y, bool cfree)
        : mu_{&mu_x, &mu_y}, nu_{&nu_x, &nu_y}, cfree_(cfree), inc_(mu_x.inc) {
        dB_ = inc_.dB;
        nb_ = dB_ * dB_;
        dD_ = inc_.dD;
        memo_.reserve(1 << 12);
    }

    Mat value(int n, std::uint32_t letters, const int* digits) {
        return basis_value(n, letters, digits);
    }

private:
    const OVDistribution* mu_[2];
    const OVDistribution* nu_[2];
    bool cfree_;
    InclusionSpec inc_;
    int dB_, nb_, dD_;
    std::unordered_map<std::uint64_t, Mat> memo_;

    struct Slot {
        bool dense = false;
        int unit = 0;        // valid when !dense
        SmallMat mat;        // valid when dense
    };

    static std::uint64_t pack_key(int n, std::uint32_t letters, const int* digits) {
        std::uint64_t key = static_cast<std::uint64_t>(n) << 40;
        key |= static_cast<std::uint64_t>(letters & 0xffu) << 32;
        std::uint64_t dig = 0;
        for (int i = 0; i + 1 < n; ++i) dig = (dig << 4) | static_cast<std::uint64_t>(digits[i]);
        return key | dig;
    }

    SmallMat unit_small(int v) const {
        SmallMat u = SmallMat::Zero(dB_, dB_);
        u(v / dB_, v % dB_) = 1.0;
        return u;
    }

    std::size_t tensor_index(int r, const int* digits) const {
        std::size_t idx = 0;
        for (int i = 0; i + 1 < r; ++i) idx = idx * nb_ + static_cast<std::size_t>(digits[i]);
        return idx;
    }

    // mu-side value of a single-letter monomial X u_1 X ... X (r letters).
    Mat mu_group(int letter, int r, const int* digits) const {
        if (r == 1) return mu_[letter]->mean;
        return mu_[letter]->m(r).at(tensor_index(r, digits));
    }

    SmallMat nu_group(int letter, int r, const int* digits) const {
        if (r == 1) return SmallMat(nu_[letter]->mean);
        return SmallMat(nu_[letter]->m(r).at(tensor_index(r, digits)));
    }

    Mat embed_small(const SmallMat& sm) const {
        Mat out = Mat::Zero(dD_, dD_);
        for (int p = 0; p < dB_; ++p)
            for (int q = 0; q < dB_; ++q) {
                cplx c = sm(p, q);
                if (c != cplx(0.0, 0.0)) out += c * inc_.units[unit_index(p, q, dB_)];
            }
        return out;
    }

    Mat basis_value(int n, std::uint32_t letters, const int* digits) {
        if (n == 1) return mu_[letters & 1u]->mean;
        std::uint64_t key = pack_key(n, letters, digits);
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;

        // Group boundaries for runs of equal letters.
        int starts[9];
        int m = 0;
        for (int i = 0; i < n; ++i)
            if (i == 0 || ((letters >> i) & 1u) != ((letters >> (i - 1)) & 1u))
                starts[m++] = i;
        Mat result;
        if (m == 1) {
            result = mu_group(letters & 1u, n, digits);
        } else {
            int ends[9];
            for (int j = 0; j < m; ++j) ends[j] = (j + 1 < m) ? starts[j + 1] : n;
            int letter_of[9];
            for (int j = 0; j < m; ++j) letter_of[j] = (letters >> starts[j]) & 1u;

            // Per-group data; the prefix unit p_j precedes group j (j >= 1).
            std::vector<SmallMat> nuv(m);
            std::vector<Mat> muv(m);
            for (int j = 0; j < m; ++j) {
                int r = ends[j] - starts[j];
                nuv[j] = nu_group(letter_of[j], r, digits + starts[j]);
                muv[j] = mu_group(letter_of[j], r, digits + starts[j]);
            }

            result = Mat::Zero(dD_, dD_);
            if (cfree_) {
                Mat base = Mat::Identity(dD_, dD_);
                for (int j = 0; j < m; ++j) {
                    Mat diff = muv[j];
                    for (int p = 0; p < dB_; ++p)
                        for (int q = 0; q < dB_; ++q) {
                            cplx c = nuv[j](p, q);
                            if (c != cplx(0.0, 0.0))
                                diff -= c * inc_.units[unit_index(p, q, dB_)];
                        }
                    if (j > 0) diff = inc_.units[digits[starts[j] - 1]] * diff;
                    base = base * diff;
                }
                result = base;
            }

            // Subset substitution of the E_B-values; every nonempty subset
            // shortens the word, so the recursion terminates.
            std::vector<Slot> slots;
            const std::uint32_t full = std::uint32_t(1) << m;
            for (std::uint32_t sel = 1; sel < full; ++sel) {
                double sign = (std::popcount(sel) % 2 == 1) ? 1.0 : -1.0;
                slots.clear();
                std::uint32_t letters2 = 0;
                int n2 = 0;
                SmallMat cur = SmallMat::Identity(dB_, dB_);
                bool cur_trivial = true;
                for (int j = 0; j < m; ++j) {
                    bool subst = (sel >> j) & 1u;
                    if (subst) {
                        if (j > 0) cur = (cur * unit_small(digits[starts[j] - 1])).eval();
                        cur = (cur * nuv[j]).eval();
                        cur_trivial = false;
                        continue;
                    }
                    // Emit the slot preceding this group.
                    Slot pre;
                    if (cur_trivial && j > 0) {
                        pre.dense = false;
                        pre.unit = digits[starts[j] - 1];
                    } else if (cur_trivial) {
                        pre.dense = false;
                        pre.unit = -1; // identity boundary marker
                    } else {
                        pre.dense = true;
                        pre.mat = (j > 0) ? SmallMat(cur * unit_small(digits[starts[j] - 1]))
                                          : cur;
                    }
                    slots.push_back(pre);
                    for (int i = starts[j]; i < ends[j]; ++i) {
                        letters2 |= ((letters >> i) & 1u) << n2;
                        ++n2;
                        if (i + 1 < ends[j]) {
                            Slot s;
                            s.dense = false;
                            s.unit = digits[i];
                            slots.push_back(s);
                        }
                    }
                    cur = SmallMat::Identity(dB_, dB_);
                    cur_trivial = true;
                }
                Slot last;
                if (cur_trivial) {
                    last.dense = false;
                    last.unit = -1;
                } else {
                    last.dense = true;
                    last.mat = cur;
                }
                slots.push_back(last);
                result += sign * eval_mixed_entry(n2, letters2, slots);
            }
        }
        memo_.emplace(key, result);
        return result;
    }

    // Evaluates a word whose slots are units, dense B-elements, or identity
    // boundary markers (unit = -1). Dense interior slots are expanded over the
    // unit basis; boundary factors are pulled out by the bimodule property.
    Mat eval_mixed_entry(int n, std::uint32_t letters, std::vector<Slot>& slots) {
        if (n == 0) {
            const Slot& s = slots[0];
            if (s.dense) return embed_small(s.mat);
            if (s.unit < 0) return Mat::Identity(dD_, dD_);
            return inc_.units[s.unit];
        }
        std::vector<int> dense_pos;
        std::vector<int> digits(std::max(n - 1, 1));
        for (int i = 1; i < n; ++i) {
            if (slots[i].dense)
                dense_pos.push_back(i);
            else
                digits[i - 1] = slots[i].unit;
        }
        Mat inner = Mat::Zero(dD_, dD_);
        const std::size_t combos = MultiMap::pow_sz(nb_, static_cast<int>(dense_pos.size()));
        for (std::size_t c = 0; c < combos; ++c) {
            std::size_t rest = c;
            cplx coef(1.0, 0.0);
            for (int pi = static_cast<int>(dense_pos.size()) - 1; pi >= 0; --pi) {
                int v = static_cast<int>(rest % nb_);
                rest /= nb_;
                const SmallMat& sm = slots[dense_pos[pi]].mat;
                coef *= sm(v / dB_, v % dB_);
                if (coef == cplx(0.0, 0.0)) break;
                digits[dense_pos[pi] - 1] = v;
            }
            if (coef == cplx(0.0, 0.0)) continue;
            inner += coef * basis_value(n, letters, digits.data());
        }
        const Slot& lf = slots[0];
        if (lf.dense)
            inner = embed_small(lf.mat) * inner;
        else if (lf.unit >= 0)
            inner = inc_.units[lf.unit] * inner;
        const Slot& rf = slots[n];
        if (rf.dense)
            inner = inner * embed_small(rf.mat);
        else if (rf.unit >= 0)
            inner = inner * inc_.units[rf.unit];
        return inner;
    }
};

void require_same_shape(const OVDistribution& x, const OVDistribution& y, const char* who) {
    if (!x.inc.same_shape(y.inc) || x.order != y.order)
        throw dimension_error(std::string(who) + ": mismatched inclusion or order");
}

OVDistribution oracle_sum(const OVDistribution& mu_x, const OVDistribution& nu_x,
                          const OVDistribution& mu_y, const OVDistribution& nu_y,
                          bool cfree) {
    const int order = mu_x.order;
    if (order > max_order_limit())
        throw resource_error("oracle convolution beyond the word-expansion guardrail");
    WordOracle oracle(mu_x, nu_x, mu_y, nu_y, cfree);
    OVDistribution out = OVDistribution::zero(mu_x.inc, order);
    out.mean = mu_x.mean + mu_y.mean;
    const int nb = mu_x.inc.dB * mu_x.inc.dB;
    for (int k = 2; k <= order; ++k) {
        MultiMap& mk = out.m(k);
        std::vector<int> dig(k - 1);
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            tuple_digits(t, k - 1, nb, dig.data());
            Mat acc = Mat::Zero(mu_x.inc.dD, mu_x.inc.dD);
            for (std::uint32_t eps = 0; eps < (std::uint32_t(1) << k); ++eps)
                acc += oracle.value(k, eps, dig.data());
            mk.at(t) = acc;
        }
    }
    return out;
}

} // namespace

OVDistribution oracle_convolve_free(const OVDistribution& x, const OVDistribution& y) {
    require_same_shape(x, y, "oracle_convolve_free");
    if (!x.inc.is_identity())
        throw type_error("oracle_convolve_free: free convolution requires D = B");
    return oracle_sum(x, x, y, y, false);
}

DistPair oracle_convolve_cfree(const DistPair& x, const DistPair& y) {
    x.validate();
    y.validate();
    require_same_shape(x.mu, y.mu, "oracle_convolve_cfree");
    DistPair out;
    out.nu = oracle_sum(x.nu, x.nu, y.nu, y.nu, false);
    out.mu = oracle_sum(x.mu, x.nu, y.mu, y.nu, true);
    return out;
}

OVDistribution oracle_convolve_boolean(const OVDistribution& x, const OVDistribution& y) {
    require_same_shape(x, y, "oracle_convolve_boolean");
    const int order = x.order;
    if (order > max_order_limit())
        throw resource_error("oracle convolution beyond the word-expansion guardrail");
    const InclusionSpec& inc = x.inc;
    const int dB = inc.dB, nb = dB * dB, dD = inc.dD;
    OVDistribution out = OVDistribution::zero(inc, order);
    out.mean = x.mean + y.mean;
    const OVDistribution* dist[2] = {&x, &y};
    for (int k = 2; k <= order; ++k) {
        MultiMap& mk = out.m(k);
        std::vector<int> dig(k - 1);
        // Suffix transfer recursion over groupings: V[p][c] sums all
        // factorized words over letters p..k-1 whose first group letter != c.
        std::vector<Mat> V(static_cast<std::size_t>(k + 1) * 3);
        auto vat = [&](int p, int c) -> Mat& { return V[static_cast<std::size_t>(p) * 3 + c]; };
        for (std::size_t t = 0; t < mk.tuples(); ++t) {
            tuple_digits(t, k - 1, nb, dig.data());
            for (int c = 0; c < 3; ++c) vat(k, c) = Mat::Identity(dD, dD);
            for (int p = k - 1; p >= 0; --p) {
                for (int c = 0; c < 3; ++c) vat(p, c) = Mat::Zero(dD, dD);
                for (int l = 0; l < 2; ++l) {
                    for (int r = 1; p + r <= k; ++r) {
                        Mat g;
                        if (r == 1) {
                            g = dist[l]->mean;
                        } else {
                            std::size_t idx = 0;
                            for (int i = 0; i < r - 1; ++i)
                                idx = idx * nb + static_cast<std::size_t>(dig[p + i]);
                            g = dist[l]->m(r).at(idx);
                        }
                        Mat tail;
                        if (p + r == k) {
                            tail = g;
                        } else {
                            tail = g * inc.units[dig[p + r - 1]] * vat(p + r, l);
                        }
                        for (int c = 0; c < 3; ++c)
                            if (c != l) vat(p, c) += tail;
                    }
                }
            }
            mk.at(t) = vat(0, 2);
        }
    }
    return out;
}

PositivityReport check_moment_positivity(const OVDistribution& d, int cutoff, double slack) {
    if (cutoff < 1 || 2 * cutoff > d.order)
        throw precondition_error("check_moment_positivity: need 2*cutoff <= order");
    const int dB = d.inc.dB, nb = dB * dB, dD = d.inc.dD;
    // Family: f = 1 and the b-spaced words X u_1 X ... u_{t-1} X, t <= cutoff.
    struct Member {
        int deg;
        std::vector<int> units;
    };
    std::vector<Member> family;
    family.push_back({0, {}});
    for (int t = 1; t <= cutoff; ++t) {
        std::size_t count = MultiMap::pow_sz(nb, t - 1);
        for (std::size_t w = 0; w < count; ++w) {
            Member mem;
            mem.deg = t;
            mem.units.resize(t - 1);
            tuple_digits(w, t - 1, nb, mem.units.data());
            family.push_back(mem);
        }
    }
    const int nf = static_cast<int>(family.size());
    Mat gram(nf * dD, nf * dD);
    auto unit_of = [&](int v) { return unit_mat(v / dB, v % dB, dB); };
    auto moment_of = [&](const std::vector<Mat>& args) -> Mat {
        int deg = static_cast<int>(args.size()) + 1;
        if (deg == 1) return d.mean;
        return d.m(deg).eval(args);
    };
    for (int j = 0; j < nf; ++j)
        for (int i = 0; i < nf; ++i) {
            const Member& fj = family[j];
            const Member& fi = family[i];
            Mat val;
            if (fj.deg == 0 && fi.deg == 0) {
                val = Mat::Identity(dD, dD);
            } else if (fj.deg == 0 || fi.deg == 0) {
                const Member& g = (fj.deg == 0) ? fi : fj;
                std::vector<Mat> args;
                for (int u : g.units) args.push_back(unit_of(u));
                val = moment_of(args);
                if (fi.deg == 0) val = val.adjoint().eval();
            } else {
                std::vector<Mat> args;
                for (auto it = fj.units.rbegin(); it != fj.units.rend(); ++it)
                    args.push_back(unit_of(*it).adjoint());
                args.push_back(Mat::Identity(dB, dB));
                for (int u : fi.units) args.push_back(unit_of(u));
                val = moment_of(args);
            }
            gram.block(j * dD, i * dD, dD, dD) = val;
        }
    PositivityReport rep;
    rep.gram_dim = nf * dD;
    rep.min_eig = min_eig_herm(gram);
    rep.pass = rep.min_eig >= -slack;
    return rep;
}

std::vector<double> moment_distance(const OVDistribution& x, const OVDistribution& y) {
    require_same_shape(x, y, "moment_distance");
    std::vector<double> out(x.order);
    out[0] = op_norm(x.mean - y.mean);
    for (int k = 2; k <= x.order; ++k) {
        double worst = 0.0;
        const MultiMap& a = x.m(k);
        const MultiMap& b = y.m(k);
        for (std::size_t t = 0; t < a.tuples(); ++t)
            worst = std::max(worst, op_norm(Mat(a.at(t)) - Mat(b.at(t))));
        out[k - 1] = worst;
    }
    return out;
}

} // namespace ovfree
