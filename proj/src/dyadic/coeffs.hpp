#pragma once

#include <map>
#include <optional>
#include <string>

#include "dyadic/quad.hpp"

namespace dyt1 {

enum class Regime { Separated, Nearby, Equal, Inside };

struct ParamRegime {
    Regime regime = Regime::Separated;
    bool boundary = false;  // Inside only: near the parent-cell skeleton
};

struct RegimeTag {
    ParamRegime p1, p2;
    std::string to_string() const;
};

// canonical pair key: per parameter the smaller cube goes to the I slot,
// swaps recorded so adjoint symmetry can restore the original orientation
struct PairKey {
    HaarIndex I1, I2, J1, J2;
    bool swapped1 = false, swapped2 = false;

    static PairKey canonical(const HaarIndex& i1, const HaarIndex& i2, const HaarIndex& j1,
                             const HaarIndex& j2);
    const HaarIndex& small(int param) const { return param == 0 ? I1 : I2; }
    const HaarIndex& big(int param) const { return param == 0 ? J1 : J2; }
    bool swapped(int param) const { return param == 0 ? swapped1 : swapped2; }

    friend auto operator<=>(const PairKey& a, const PairKey& b) = default;
};

RegimeTag regime_classify(const PairKey& key, const Grid& g);
ParamRegime classify_param(const DyadicCube& Ismall, const DyadicCube& Jbig, const Grid& g);

// phi split of the coarse Haar function relative to a strictly nested cube
struct PhiSplit {
    StepFn phi;      // (h_J - <h_J>_I) 1_{J_I^c}
    double mean;     // <h_J>_I, exactly +-|J|^{-1/2}
    double sup_abs;  // <= 2 |J|^{-1/2}
};
PhiSplit phi_split(const DyadicCube& I, const DyadicCube& J, const Grid& g);

// one-parameter pieces of a matrix element
struct FactorValue {
    IntegralResult full;             // <k h_small, h_big> in the requested orientation
    IntegralResult phi_part;         // Inside regime only
    IntegralResult para_part;        // <k h_I, 1> * <h_J>_I, Inside only
    ParamRegime regime;
    double bound = 0;                // regime bound for this parameter
    double measured() const {        // the quantity the regime bound controls
        return regime.regime == Regime::Inside ? std::abs(phi_part.value)
                                               : std::abs(full.value);
    }
};
FactorValue matrix_factor(const KernelModel& K, int param, const HaarIndex& f_small,
                          const HaarIndex& g_big, bool swapped, const Grid& grid,
                          const QuadSpec& spec);

// <T(h_I1 x h_I2), h_J1 x h_J2> for separable models; Inside parameters are
// assembled from the phi part plus the paraproduct part
struct ElementResult {
    IntegralResult value;
    FactorValue f1, f2;
    RegimeTag regime;
    double bound = 0;     // product of the per-parameter regime bounds
    double ratio = 0;     // regime-relevant measured / bound
};
ElementResult matrix_element(const PairKey& key, const KernelModel& K, const Grid& g,
                             const QuadSpec& spec);
// direct quadrature of the same pairing without the phi/paraproduct split
IntegralResult matrix_element_direct(const PairKey& key, const KernelModel& K, const Grid& g,
                                     const QuadSpec& spec);

double bound_for_pair(const PairKey& key, const KernelModel& K, const Grid& g);

// paraproduct symbol coefficients <b, h_I2> with
// b = <T^*(h_J1 x 1), h_I1> (variant HaarPair), b = <T^*(phi_I1J1 x 1), h_I1>
// (variant PhiPair), or b = <T^*(h_I1 x 1), h_I1> (variant SelfPair)
enum class SymbolVariant { HaarPair, PhiPair, SelfPair };
struct SymbolCoeffs {
    std::map<HaarIndex, IntegralResult> coeffs;
    IntegralResult factor1;
    double window_radius = 0;
};
SymbolCoeffs paraproduct_symbol(const KernelModel& K, const HaarIndex& I1, const HaarIndex& J1,
                                SymbolVariant variant, const Grid& g, int family_N,
                                const QuadSpec& spec, double window_radius = 0.0);

// weak-compactness and diagonal pairings over I1 x I2
struct WcpValues {
    IntegralResult t11;   // <T(1x1), 1x1>
    IntegralResult d1a;   // <T(1x1), 1xa2>
    IntegralResult da1;   // <T(1x1), a1x1>
    IntegralResult a11;   // <T(a1x1), 1x1>
    IntegralResult a12;   // <T(1xa2), 1x1>
    double bound = 0;     // F1(I1)|I1| F2(I2)|I2|
};
WcpValues wcp_and_diag_values(const DyadicCube& I1, const DyadicCube& I2, const KernelModel& K,
                              const Grid& g, const QuadSpec& spec);

// single partial-kernel constant C(f2, g2) = |<k_param f, g>|
enum class TestTag { Indicator, Bump };
IntegralResult partial_constant(const KernelModel& K, int param, const DyadicCube& I,
                                TestTag f_tag, TestTag g_tag, const Grid& g,
                                const QuadSpec& spec);

// sparse coefficient table with provenance --------------------------------

struct CoeffEntry {
    double value = 0, err_est = 0, bound = 0, ratio = 0;
    std::string regime;
};

struct CoeffTable {
    std::map<PairKey, CoeffEntry> entries;
    // thresholding ledger
    double threshold = 0;
    long long dropped_count = 0;
    double dropped_mass = 0;

    void insert(const PairKey& k, const CoeffEntry& e);
    void apply_threshold(double tau_rel = 1e-14);
    void save_csv(const std::string& path, const std::string& header_comment) const;
    static CoeffTable load_csv(const std::string& path);
};

std::string haar_to_string(const HaarIndex& h);
HaarIndex haar_from_string(const std::string& cube_str, int eta);

}  // namespace dyt1
