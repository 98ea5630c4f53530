#ifndef OVFREE_CONVOLVE_HPP
#define OVFREE_CONVOLVE_HPP

#include <functional>
#include <string>

#include "ovfree/transforms.hpp"

namespace ovfree {

enum class ConvKind { free, boolean, cfree };

/// Transform-route additive convolution (add the linearizing transforms and
/// invert). The word-expansion oracles certify these.
OVDistribution convolve(ConvKind kind, const OVDistribution& x, const OVDistribution& y);
DistPair convolve_cfree(const DistPair& x, const DistPair& y);

/// Formal convolution power: transform scaled by t. Non-integer free powers
/// are flagged formal.
OVDistribution power(ConvKind kind, const OVDistribution& x, double t);
DistPair pair_power_cfree(const DistPair& x, double t);

/// Bercovici-Pata: re-read B-transforms as R- (and cR-) transforms.
OVDistribution bp_map(const OVDistribution& x);
DistPair bp_map(const DistPair& x);

struct ResidualReport {
    double max_residual = 0.0;
    std::vector<std::pair<std::string, double>> parts;
    void add(const std::string& name, double r) {
        parts.emplace_back(name, r);
        max_residual = std::max(max_residual, r);
    }
};

/// Series-level check of the fixed-point relation tying F_{BP(nu)} to the
/// subordination function of nu with itself, together with R_{BP(nu)} = B_nu.
ResidualReport verify_bbp_identity(const OVDistribution& nu);

/// Series-level check of h_{mu'} = h_mu o F_{BP(nu)} for the first BP
/// coordinate of a pair.
ResidualReport verify_cfree_bbp_identity(const DistPair& p);

struct PowerDivisibilityReport {
    PositivityReport cp;           // CP test of the R-pair of mu^{boolean 1-1/n}
    double power_roundtrip = 0.0;  // || mu - ((1/n) R)-dist ^{boxplus n} ||
};

PowerDivisibilityReport free_power_divisibility_check(const OVDistribution& mu, int n,
                                                      int cutoff);

/// Triangular-array harness input: terms mu_n for row sizes k_n, with the
/// candidate limits supplied independently of the convolution pipeline.
struct ArraySpec {
    std::string name;
    std::vector<int> k_values; // strictly increasing
    std::function<OVDistribution(int k)> term;
    OVDistribution boolean_candidate;
    OVDistribution free_candidate;
    double uniform_bound = 2.0; // M in the truncated boundedness check
};

struct HarnessRow {
    int n = 0;
    int k = 0;
    std::vector<double> boolean_distance; // per order 1..N
    std::vector<double> free_distance;
};

struct HarnessReport {
    std::vector<HarnessRow> rows;
    double bp_residual = 0.0;      // bp_map(boolean candidate) vs free candidate
    double cp_min_eig = 0.0;       // CP test of the free candidate's R-pair
    bool cp_pass = false;
    double cond4_gamma_residual = 0.0; // k_n mu_n(X) vs gamma at the last row
    double cond4_sigma_residual = 0.0; // k_n m_j(mu_n) vs sigma at the last row
    bool boolean_converged = false;
    bool free_converged = false;
};

HarnessReport limit_harness(const ArraySpec& spec);

/// Pair-array variant: rows of c-free independent pairs. The c-free k_n-fold
/// sums are tabulated against the BP image of the Boolean candidate pair.
struct PairArraySpec {
    std::string name;
    std::vector<int> k_values;
    std::function<DistPair(int k)> term;
    DistPair boolean_candidate; // coordinatewise Boolean limits
    double uniform_bound = 2.0;
};

struct PairHarnessRow {
    int n = 0;
    int k = 0;
    std::vector<double> mu_distance; // c-free sum vs BP(candidate), first coord
    std::vector<double> nu_distance;
};

struct PairHarnessReport {
    std::vector<PairHarnessRow> rows;
    double bp_pair_residual = 0.0; // BP(candidate) consistency across coordinates
    bool cfree_converged = false;
};

PairHarnessReport pair_limit_harness(const PairArraySpec& spec);

// Built-in arrays.
ArraySpec array_clt_rademacher(int order, int n_max);
ArraySpec array_point_mass(double beta, int order, int n_max);
PairArraySpec pair_array_point_mass(double beta_mu, double beta_nu, int order, int n_max);

} // namespace ovfree

#endif
