#pragma once

#include <array>
#include <optional>
#include <string>

#include "dyadic/funcs.hpp"

namespace dyt1 {

// One-dimensional kernel factor k(s, t).  Every built-in model is separable
// across the two parameters with factors drawn from this set.
enum class FactorKind { Hilbert, CompactOdd, Zero };

struct Kernel1D {
    FactorKind kind = FactorKind::CompactOdd;
    // CompactOdd: k(s,t) = a u / (1 + b u^4) * exp(-c (s+t)^2), u = s - t
    double psi_a = 1.0;
    double psi_b = 1.0;
    double gauss_c = 0.25;

    bool odd() const { return true; }  // all supported factors are odd
    double eval(double s, double t) const;
    // sup of |k| over box ranges (screening; admits slack, never undershoots)
    double sup_abs(double s_lo, double s_hi, double t_lo, double t_hi) const;
};

enum class KernelKind { TensorHilbert, CompactModel, CustomSeparable, Zero };

struct KernelModel {
    KernelKind kind = KernelKind::CompactModel;
    std::string name = "compact_model";
    int n1 = 1, n2 = 1;
    Kernel1D f1, f2;
    double delta1 = 1.0, delta2 = 1.0;
    double theta = 0.1;
    FuncTriple trip1, trip2;
    PartialBound pb1, pb2;
    double eps_diag_factor = 0x1p-40;

    const Kernel1D& factor(int param) const { return param == 0 ? f1 : f2; }
    const FuncTriple& triple(int param) const { return param == 0 ? trip1 : trip2; }
    const PartialBound& partial(int param) const { return param == 0 ? pb1 : pb2; }
    double delta(int param) const { return param == 0 ? delta1 : delta2; }
    BoundForms forms(int param) const {
        return BoundForms{triple(param), partial(param), delta(param), theta};
    }

    // full kernel value at scalar coordinates (n1 = n2 = 1); throws inside
    // the diagonal guard band
    double eval(double x1, double x2, double y1, double y2, double guard = 0.0) const;

    static KernelModel builtin(const std::string& name);
    static KernelModel from_json_file(const std::string& path);
    static KernelModel from_json_text(const std::string& text);
};

// Per-parameter displacement mode for the size / Hoelder / mixed conditions.
enum class DispMode { Size, DispX, DispY };
struct CondVariant {
    DispMode p1 = DispMode::Size, p2 = DispMode::Size;
};

// Right-hand sides of the kernel conditions in the alternative form
//   F(x,y) = F1(.) F2(|x-y|) F3(1 + |x+y| / (1 + |x-y|)),
// with F1 read at the displacement for Hoelder-active parameters.
double bound_factor(const KernelModel& K, int param, double x, double y, DispMode mode,
                    double disp);
double bound_size(const KernelModel& K, const std::array<double, 2>& x,
                  const std::array<double, 2>& y);
double bound_holder(const KernelModel& K, const std::array<double, 2>& x,
                    const std::array<double, 2>& y, const std::array<double, 2>& xp,
                    const std::array<double, 2>& yp, CondVariant variant);

// Sweep harness: measured difference quotients of the model against the
// claimed bounds, worst ratio per condition.
struct ConditionSample {
    std::vector<double> seps;       // |x_i - y_i| values
    std::vector<double> centers;    // midpoint positions
    std::vector<double> disp_fracs; // displacement / separation, <= 1/2
};
ConditionSample default_condition_sample();

struct ConditionReport {
    struct Entry {
        std::string name;
        double max_ratio = 0;
        std::string worst;
    };
    std::vector<Entry> entries;
    bool fit1_exists = false, fit2_exists = false;
    double cmax = 10.0;
    bool pass = false;
};
ConditionReport verify_kernel_conditions(const KernelModel& K, const ConditionSample& sample,
                                         double cmax);

// Does a vanishing triple fit the measured profile |k_i| |s-t|^{n_i}?
// True when the extreme bins fall below `edge_frac` of the interior max in
// all three limits (separation -> 0, separation -> inf, |s+t| -> inf).
bool functriple_fit_exists(const KernelModel& K, int param, double edge_frac = 0.5);

}  // namespace dyt1
