#include "ovfree/multimap.hpp"

#include <cstdlib>

namespace ovfree {

int max_order_limit() {
    static int limit = [] {
        if (const char* env = std::getenv("OVFREE_MAX_ORDER")) {
            int v = std::atoi(env);
            if (v >= 1) return v;
        }
        return kMaxOrder;
    }();
    return limit;
}

void check_resource(int dB, int arity) {
    if (dB > kMaxDim)
        throw resource_error("coefficient algebra dimension beyond guardrail dB <= 3");
    if (arity > max_order_limit())
        throw resource_error("tensor arity beyond order guardrail (see OVFREE_MAX_ORDER)");
}

std::size_t MultiMap::pow_sz(int base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
    return r;
}

MultiMap::MultiMap(int arity, int dB, int dD) : arity_(arity), dB_(dB), dD_(dD) {
    check_resource(dB, arity);
    tuples_ = pow_sz(dB * dB, arity);
    data_.assign(tuples_ * dD * dD, cplx(0.0, 0.0));
}

Eigen::Map<Mat> MultiMap::at(std::size_t tuple) {
    return Eigen::Map<Mat>(raw(tuple), dD_, dD_);
}

Eigen::Map<const Mat> MultiMap::at(std::size_t tuple) const {
    return Eigen::Map<const Mat>(raw(tuple), dD_, dD_);
}

void tuple_digits(std::size_t index, int arity, int nb, int* out) {
    for (int i = arity - 1; i >= 0; --i) {
        out[i] = static_cast<int>(index % nb);
        index /= nb;
    }
}

Mat MultiMap::eval(std::span<const Mat> args) const {
    if (static_cast<int>(args.size()) != arity_)
        throw dimension_error("MultiMap::eval: wrong number of arguments");
    for (const Mat& a : args)
        if (a.rows() != dB_ || a.cols() != dB_)
            throw dimension_error("MultiMap::eval: argument has wrong dimension");
    Mat out = Mat::Zero(dD_, dD_);
    if (arity_ == 0) {
        out = at(0);
        return out;
    }
    const int nb2 = nb();
    std::vector<int> dig(arity_);
    for (std::size_t t = 0; t < tuples_; ++t) {
        tuple_digits(t, arity_, nb2, dig.data());
        cplx coef(1.0, 0.0);
        for (int i = 0; i < arity_ && coef != cplx(0.0, 0.0); ++i) {
            int p = dig[i] / dB_, q = dig[i] % dB_;
            coef *= args[i](p, q);
        }
        if (coef == cplx(0.0, 0.0)) continue;
        out += coef * at(t);
    }
    return out;
}

Mat MultiMap::eval_amplified(const Mat& a, int level) const {
    if (a.rows() != level * dB_ || a.cols() != level * dB_)
        throw dimension_error("eval_amplified: argument is not level*dB square");
    Mat out = Mat::Zero(level * dD_, level * dD_);
    if (arity_ == 0) {
        for (int i = 0; i < level; ++i)
            out.block(i * dD_, i * dD_, dD_, dD_) = at(0);
        return out;
    }
    const int nb2 = nb();
    // Per unit v the n x n coordinate matrix A_v with A_v(i,j) = a_block(i,j)(p,q).
    std::vector<Mat> coord(nb2);
    for (int v = 0; v < nb2; ++v) {
        int p = v / dB_, q = v % dB_;
        Mat c(level, level);
        for (int i = 0; i < level; ++i)
            for (int j = 0; j < level; ++j) c(i, j) = a(i * dB_ + p, j * dB_ + q);
        coord[v] = c;
    }
    std::vector<int> dig(arity_);
    for (std::size_t t = 0; t < tuples_; ++t) {
        Eigen::Map<const Mat> val = at(t);
        if (val.cwiseAbs().maxCoeff() == 0.0) continue;
        tuple_digits(t, arity_, nb2, dig.data());
        Mat path = coord[dig[0]];
        for (int i = 1; i < arity_; ++i) path = path * coord[dig[i]];
        for (int i = 0; i < level; ++i)
            for (int j = 0; j < level; ++j) {
                if (path(i, j) == cplx(0.0, 0.0)) continue;
                out.block(i * dD_, j * dD_, dD_, dD_) += path(i, j) * val;
            }
    }
    return out;
}

MultiMap& MultiMap::operator+=(const MultiMap& o) {
    if (arity_ != o.arity_ || dB_ != o.dB_ || dD_ != o.dD_)
        throw dimension_error("MultiMap: shape mismatch in +=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

MultiMap& MultiMap::operator-=(const MultiMap& o) {
    if (arity_ != o.arity_ || dB_ != o.dB_ || dD_ != o.dD_)
        throw dimension_error("MultiMap: shape mismatch in -=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

MultiMap& MultiMap::operator*=(cplx s) {
    for (cplx& x : data_) x *= s;
    return *this;
}

double MultiMap::hermitian_residual() const {
    const int nb2 = nb();
    std::vector<int> dig(arity_);
    double worst = 0.0;
    for (std::size_t t = 0; t < tuples_; ++t) {
        tuple_digits(t, arity_, nb2, dig.data());
        std::size_t adj = 0;
        for (int i = arity_ - 1; i >= 0; --i) {
            int p = dig[i] / dB_, q = dig[i] % dB_;
            adj = adj * nb2 + static_cast<std::size_t>(unit_index(q, p, dB_));
        }
        Mat diff = at(t).adjoint() - Mat(at(adj));
        worst = std::max(worst, diff.cwiseAbs().maxCoeff());
    }
    return worst;
}

double MultiMap::max_abs() const {
    double m = 0.0;
    for (const cplx& x : data_) m = std::max(m, std::abs(x));
    return m;
}

double MultiMap::max_abs_diff(const MultiMap& o) const {
    if (arity_ != o.arity_ || dB_ != o.dB_ || dD_ != o.dD_)
        throw dimension_error("MultiMap: shape mismatch in diff");
    double m = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i)
        m = std::max(m, std::abs(data_[i] - o.data_[i]));
    return m;
}

} // namespace ovfree
