#pragma once

#include <functional>
#include <vector>

#include "dyadic/grid.hpp"

namespace dyt1 {

// Nonnegative scalar function on [0, inf) held as samples on a log2-uniform
// grid.  Interpolation modes:
//   LinearLog  - piecewise linear in log2(t) (generic profiles)
//   StepUpper  - conservative step for monotone envelopes: a nondecreasing
//                function is read at the next grid point above t, a
//                nonincreasing one at the next grid point below, so the
//                interpolated value never falls under the true running sup.
enum class Interp { LinearLog, StepUpper };
enum class Mono { None, Increasing, Decreasing };

struct SampledFunc {
    double lg_lo = -12.0;
    double lg_hi = 12.0;
    int per_octave = 8;
    std::vector<double> v;
    Interp interp = Interp::LinearLog;
    Mono mono = Mono::None;

    int size() const { return static_cast<int>(v.size()); }
    double node(int i) const { return std::ldexp(1.0, 0) * std::exp2(lg_lo + i / double(per_octave)); }
    double operator()(double t) const;

    static SampledFunc sample(const std::function<double(double)>& f, double lg_lo = -12,
                              double lg_hi = 12, int per_octave = 8, Mono mono = Mono::None);
    double max_value() const;
};

// Triple (F1, F2, F3) with the admissibility limits F1(0+) = F2(inf) =
// F3(inf) = 0 checked at sample-grid extremes against tol_limit.
struct FuncTriple {
    SampledFunc F1, F2, F3;

    struct LimitReport {
        double head1, tail2, tail3;  // extreme-sample / max-sample ratios
        bool pass;
    };
    LimitReport check_vanishing(double tol_limit = 0.05) const;

    static FuncTriple constant(double c = 1.0);
    static FuncTriple compact_default();  // min(1,t), min(1,1/t), exp(-max(0,t-1)^2/4)
};

// Monotone envelope: from (F1,F2,F3) build (F1',F2',F3') with F1'
// nondecreasing, F2',F3' nonincreasing, such that at every sample pair
// (u, v) of (|x-y|, |x+y|) values
//   F1(u) F2(u) F3(v) <= F1'(u) F2'(u) F3'(1 + v/(1+u)).
FuncTriple envelope(const FuncTriple& F);

// Envelope of F(x,y) (|y-y'|/|x-y|)^(delta-delta') over |y-y'| <= |x-y|/2;
// the result dominates with F1' read at the displacement |y-y'|.
FuncTriple holder_envelope(const FuncTriple& F, double delta, double delta_prime);

// Cube bound in factored form F(I) = G1(l(I)) G2(l(I)) G3(rd(I, unit)).
struct PartialBound {
    SampledFunc G1, G2, G3;

    double eval(const DyadicCube& I, const Grid& g) const;
    double eval_box(const BoxD& I) const;
    static PartialBound compact_default();
    static PartialBound constant(double c = 1.0);
};

// Bound forms assembled from a triple: head quantities used by every
// per-pair estimate.  theta is the auxiliary exponent in the smoothed F2.
struct BoundForms {
    FuncTriple trip;
    PartialBound part;
    double delta = 1.0;
    double theta = 0.1;

    double F2_smooth(double t) const;              // sum_k 2^{-k theta} F2(2^{-k} t)
    double F3_smooth(const BoxD& box) const;       // sum_k 2^{-k delta} F3(rd(2^k box, unit))
    double F_pair(const DyadicCube& I, const DyadicCube& J, const Grid& g) const;
    double F_tilde_pair(const DyadicCube& I, const DyadicCube& J, const Grid& g) const;
    double F_tilde(const DyadicCube& I, const Grid& g) const;
    double F_hat(const DyadicCube& I, const Grid& g) const;
};

}  // namespace dyt1
