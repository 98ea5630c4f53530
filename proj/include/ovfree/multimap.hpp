#ifndef OVFREE_MULTIMAP_HPP
#define OVFREE_MULTIMAP_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "ovfree/matalg.hpp"

namespace ovfree {

// Dense-storage guardrails. Tensors are (dB^2)^arity matrices of size dD x dD;
// past these limits the memory cost is no longer desk-scale.
inline constexpr int kMaxDim = 3;
inline constexpr int kMaxOrder = 8;

int max_order_limit(); // kMaxOrder unless overridden via OVFREE_MAX_ORDER

void check_resource(int dB, int arity);

/// A k-linear map B^k -> D stored on the matrix-unit basis of B = M_{dB}.
/// Tuple (v_1,...,v_k) of unit indices is flattened big-endian:
/// index = ((v_1 * dB^2 + v_2) * dB^2 + ...) + v_k.
class MultiMap {
public:
    MultiMap() = default;
    MultiMap(int arity, int dB, int dD);

    int arity() const { return arity_; }
    int dB() const { return dB_; }
    int dD() const { return dD_; }
    int nb() const { return dB_ * dB_; }
    std::size_t tuples() const { return tuples_; }

    Eigen::Map<Mat> at(std::size_t tuple);
    Eigen::Map<const Mat> at(std::size_t tuple) const;

    cplx* raw(std::size_t tuple) { return data_.data() + tuple * dD_ * dD_; }
    const cplx* raw(std::size_t tuple) const { return data_.data() + tuple * dD_ * dD_; }

    /// Multilinear evaluation on arbitrary B-arguments (basis expansion).
    Mat eval(std::span<const Mat> args) const;

    /// Amplified evaluation c^{(n)}(a,...,a) for a in M_n(M_{dB}), the block
    /// matrix-product extension of the multilinear map; returns an element of
    /// M_n(M_{dD}).
    Mat eval_amplified(const Mat& a, int level) const;

    MultiMap& operator+=(const MultiMap& o);
    MultiMap& operator-=(const MultiMap& o);
    MultiMap& operator*=(cplx s);

    /// Hermitian-symmetry defect: max over tuples of
    /// || c(v_1..v_k)^* - c(v_k^*..v_1^*) ||_max.
    double hermitian_residual() const;

    /// Largest entrywise absolute value across the tensor.
    double max_abs() const;

    double max_abs_diff(const MultiMap& o) const;

    static std::size_t pow_sz(int base, int e);

private:
    int arity_ = 0, dB_ = 1, dD_ = 1;
    std::size_t tuples_ = 1;
    std::vector<cplx> data_;
};

/// Decompose flat tuple index into digits (most significant first).
void tuple_digits(std::size_t index, int arity, int nb, int* out);

} // namespace ovfree

#endif
