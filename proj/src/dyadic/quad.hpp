#pragma once

#include <functional>
#include <vector>

#include "dyadic/kernel.hpp"

namespace dyt1 {

struct QuadSpec {
    int order = 8;        // tensor Gauss-Legendre points per axis
    int max_depth = 12;   // adaptive bisection depth inside a panel
    double tol = 1e-9;    // absolute target per integral
    double sigma = 0.5;   // grading ratio toward singular faces
};

struct IntegralResult {
    double value = 0.0;
    double err_est = 0.0;
    long long n_evals = 0;
    bool converged = true;
    double trunc_radius = 0.0;

    void accumulate(const IntegralResult& r) {
        value += r.value;
        err_est += r.err_est;
        n_evals += r.n_evals;
        converged = converged && r.converged;
        trunc_radius = std::max(trunc_radius, r.trunc_radius);
    }
};

// nodes/weights on [0,1]
struct GLRule {
    std::vector<double> x, w;
};
const GLRule& gl_rule(int p);

using IntegrandN = std::function<double(const double*)>;

// adaptive tensor quadrature over an axis box, dim <= 4
IntegralResult adapt_box(const IntegrandN& f, int dim, const double* lo, const double* hi,
                         double tol, const QuadSpec& spec, int depth = -1);

// integral over X x Y (each an axis box of dimension n) of an integrand
// f(x, y) that may blow up like |x-y|^{-gamma} toward touching faces;
// geometric grading with ratio spec.sigma is applied along every touching
// coordinate, interior cells go through adapt_box
struct PairDomain {
    int n = 1;
    double xlo[2], xhi[2], ylo[2], yhi[2];
};
IntegralResult integrate_pair(const IntegrandN& f, const PairDomain& dom, double gamma,
                              double tol, const QuadSpec& spec);

// piecewise-constant function with dyadic cuts and constant tails
struct StepFn {
    std::vector<Dyadic> cuts;   // strictly increasing
    std::vector<double> vals;   // size cuts.size() + 1; vals[0]/back() are tails

    static StepFn haar(const HaarIndex& h, const Grid& g);           // cancellative or not
    static StepFn indicator(const DyadicCube& c, const Grid& g, double val = 1.0);
    static StepFn bump(const DyadicCube& c, const Grid& g);          // mean-zero, |a| <= 1
    static StepFn phi(const DyadicCube& I, const DyadicCube& J, const Grid& g);  // (h_J - <h_J>_I) 1_{J_I^c}
    static StepFn one();

    bool compact_support() const { return vals.front() == 0.0 && vals.back() == 0.0; }
    double sup_abs() const;
};

// <k f_x-side, f_y-side> = int int k(x,y) g(x) f(y) dy dx.  Supports with
// overlap are handled only for odd factors (identical dyadic cells cancel
// exactly); unbounded x-support is truncated adaptively with the tail
// recorded in err_est and trunc_radius.
IntegralResult pairing_1d(const Kernel1D& k, const StepFn& gx, const StepFn& fy,
                          const QuadSpec& spec);

// closed form for the Cauchy factor 1/(x-y) against compactly supported
// step functions (principal values included; Psi(u) = u ln|u| - u)
double hilbert_pairing_exact(const StepFn& gx, const StepFn& fy);

// bi-parameter pairing of a separable kernel against tensor test pairs
IntegralResult pair_integral(const KernelModel& K, const std::array<StepFn, 2>& f_left,
                             const std::array<StepFn, 2>& f_right, const QuadSpec& spec);

// integral quantities ------------------------------------------------------

enum class Quantity { P, Q, QIJ, R, RIJ };

// which F-form feeds the integrand: Near uses F1(|x-y|), Sep uses F1(|y-c_I|)
IntegralResult quantity(Quantity which, const DyadicCube& I, const DyadicCube& J, const Grid& g,
                        const BoundForms& forms, const QuadSpec& spec);
// cited right-hand side for the same quantity
double quantity_bound(Quantity which, const DyadicCube& I, const DyadicCube& J, const Grid& g,
                      const BoundForms& forms);

// adjacent-cube integrals: I1 = (avg avg F2(|x-y|)^r)^{1/r},
// I2 = (avg avg |x-y|^{-s n})^{1/s}; requires equal touching disjoint cubes
struct DiagCheck {
    IntegralResult I1, I2;
    double bound1 = 0;  // F2~(l(I)) with exponent 1/r
    double bound2 = 0;  // |I|^{-1}
};
DiagCheck diag_lemma_check(const DyadicCube& I, const DyadicCube& J, const Grid& g,
                           const SampledFunc& F2, double r, double s, const QuadSpec& spec);
double f2_smooth_with_exponent(const SampledFunc& F2, double t, double expo);

}  // namespace dyt1
