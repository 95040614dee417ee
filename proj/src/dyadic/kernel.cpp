#include "dyadic/kernel.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace dyt1 {

double Kernel1D::eval(double s, double t) const {
    switch (kind) {
        case FactorKind::Zero:
            return 0.0;
        case FactorKind::Hilbert:
            return 1.0 / (s - t);
        case FactorKind::CompactOdd: {
            double u = s - t;
            double w = s + t;
            return psi_a * u / (1.0 + psi_b * u * u * u * u) * std::exp(-gauss_c * w * w);
        }
    }
    return 0.0;
}

double Kernel1D::sup_abs(double s_lo, double s_hi, double t_lo, double t_hi) const {
    auto interval_min_abs = [](double lo, double hi) {
        if (lo <= 0 && hi >= 0) return 0.0;
        return std::min(std::abs(lo), std::abs(hi));
    };
    auto interval_max_abs = [](double lo, double hi) { return std::max(std::abs(lo), std::abs(hi)); };
    double u_lo = s_lo - t_hi, u_hi = s_hi - t_lo;
    double r_min = interval_min_abs(u_lo, u_hi);
    double r_max = interval_max_abs(u_lo, u_hi);
    switch (kind) {
        case FactorKind::Zero:
            return 0.0;
        case FactorKind::Hilbert:
            return r_min > 0 ? 1.0 / r_min : std::numeric_limits<double>::infinity();
        case FactorKind::CompactOdd: {
            // |psi(u)/u| = |u|/(1 + b u^4) maximized at u* = (3b)^{-1/4}
            double ustar = std::pow(3.0 * psi_b, -0.25);
            double upeak = (r_min <= ustar && ustar <= r_max) ? ustar
                            : (std::abs(r_min - ustar) < std::abs(r_max - ustar) ? r_min : r_max);
            double amp = psi_a * upeak / (1.0 + psi_b * std::pow(upeak, 4.0));
            double w_lo = s_lo + t_lo, w_hi = s_hi + t_hi;
            double wmin = interval_min_abs(w_lo, w_hi);
            return amp * std::exp(-gauss_c * wmin * wmin);
        }
    }
    return 0.0;
}

double KernelModel::eval(double x1, double x2, double y1, double y2, double guard) const {
    if (n1 != 1 || n2 != 1)
        throw std::invalid_argument("kernel evaluation implemented for one dimension per parameter");
    if (std::abs(x1 - y1) <= guard || std::abs(x2 - y2) <= guard)
        throw std::domain_error("kernel evaluated inside the diagonal guard band");
    return f1.eval(x1, y1) * f2.eval(x2, y2);
}

KernelModel KernelModel::builtin(const std::string& name) {
    KernelModel K;
    K.name = name;
    if (name == "tensor_hilbert") {
        K.kind = KernelKind::TensorHilbert;
        K.f1.kind = FactorKind::Hilbert;
        K.f2.kind = FactorKind::Hilbert;
        K.trip1 = FuncTriple::constant(1.0);
        K.trip2 = FuncTriple::constant(1.0);
        K.pb1 = PartialBound::constant(4.0);
        K.pb2 = PartialBound::constant(4.0);
    } else if (name == "compact_model") {
        K.kind = KernelKind::CompactModel;
        K.f1.kind = FactorKind::CompactOdd;
        K.f2.kind = FactorKind::CompactOdd;
        K.trip1 = FuncTriple::compact_default();
        K.trip2 = FuncTriple::compact_default();
        K.pb1 = PartialBound::compact_default();
        K.pb2 = PartialBound::compact_default();
    } else if (name == "zero") {
        K.kind = KernelKind::Zero;
        K.name = "zero";
        K.f1.kind = FactorKind::Zero;
        K.f2.kind = FactorKind::Zero;
        K.trip1 = FuncTriple::constant(0.0);
        K.trip2 = FuncTriple::constant(0.0);
        K.pb1 = PartialBound::constant(0.0);
        K.pb2 = PartialBound::constant(0.0);
    } else {
        throw std::invalid_argument("unknown builtin kernel '" + name + "'");
    }
    return K;
}

namespace {
Kernel1D factor_from_json(const nlohmann::json& j) {
    Kernel1D f;
    std::string type = j.value("type", "compact");
    if (type == "hilbert")
        f.kind = FactorKind::Hilbert;
    else if (type == "compact")
        f.kind = FactorKind::CompactOdd;
    else if (type == "zero")
        f.kind = FactorKind::Zero;
    else
        throw std::invalid_argument("unknown kernel factor type '" + type + "'");
    if (j.contains("psi_params")) {
        f.psi_a = j["psi_params"].value("a", 1.0);
        f.psi_b = j["psi_params"].value("b", 1.0);
    }
    if (j.contains("gaussian_sigma")) {
        double sigma = j["gaussian_sigma"].get<double>();
        f.gauss_c = 1.0 / (2.0 * sigma * sigma);
    }
    return f;
}

FuncTriple triple_from_json(const nlohmann::json& j) {
    std::string kind = j.value("kind", "compact_default");
    if (kind == "compact_default") return FuncTriple::compact_default();
    if (kind == "constant") return FuncTriple::constant(j.value("value", 1.0));
    if (kind == "samples") {
        FuncTriple t = FuncTriple::compact_default();
        auto load = [&](const char* key, SampledFunc& dst) {
            if (!j.contains(key)) return;
            std::vector<double> vals = j[key].get<std::vector<double>>();
            if (vals.size() != dst.v.size())
                throw std::invalid_argument("functriple sample count mismatch");
            dst.v = vals;
        };
        load("F1", t.F1);
        load("F2", t.F2);
        load("F3", t.F3);
        return t;
    }
    throw std::invalid_argument("unknown functriple kind '" + kind + "'");
}
}  // namespace

KernelModel KernelModel::from_json_text(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::string kind = j.value("kind", "compact_model");
    if (kind != "custom_separable") {
        KernelModel K = builtin(kind);
        if (j.contains("delta1")) K.delta1 = j["delta1"].get<double>();
        if (j.contains("delta2")) K.delta2 = j["delta2"].get<double>();
        if (j.contains("theta")) K.theta = j["theta"].get<double>();
        if (j.contains("psi_params") || j.contains("gaussian_sigma")) {
            nlohmann::json jf = j;
            jf["type"] = (K.kind == KernelKind::TensorHilbert) ? "hilbert" : "compact";
            K.f1 = factor_from_json(jf);
            K.f2 = K.f1;
        }
        if (j.contains("functriple")) {
            K.trip1 = triple_from_json(j["functriple"]);
            K.trip2 = K.trip1;
        }
        return K;
    }
    KernelModel K;
    K.kind = KernelKind::CustomSeparable;
    K.name = j.value("name", "custom_separable");
    K.delta1 = j.value("delta1", 1.0);
    K.delta2 = j.value("delta2", 1.0);
    K.theta = j.value("theta", 0.1);
    if (!j.contains("factor1") || !j.contains("factor2"))
        throw std::invalid_argument("custom_separable kernel needs factor1 and factor2");
    K.f1 = factor_from_json(j["factor1"]);
    K.f2 = factor_from_json(j["factor2"]);
    auto pick_defaults = [](const Kernel1D& f, FuncTriple& t, PartialBound& p) {
        if (f.kind == FactorKind::Hilbert) {
            t = FuncTriple::constant(1.0);
            p = PartialBound::constant(4.0);
        } else if (f.kind == FactorKind::Zero) {
            t = FuncTriple::constant(0.0);
            p = PartialBound::constant(0.0);
        } else {
            t = FuncTriple::compact_default();
            p = PartialBound::compact_default();
        }
    };
    pick_defaults(K.f1, K.trip1, K.pb1);
    pick_defaults(K.f2, K.trip2, K.pb2);
    if (j.contains("functriple")) {
        K.trip1 = triple_from_json(j["functriple"]);
        K.trip2 = K.trip1;
    }
    return K;
}

KernelModel KernelModel::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open kernel config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

double bound_factor(const KernelModel& K, int param, double x, double y, DispMode mode,
                    double disp) {
    const FuncTriple& T = K.triple(param);
    double r = std::abs(x - y);
    double pos = 1.0 + std::abs(x + y) / (1.0 + r);
    double F;
    if (mode == DispMode::Size) {
        F = T.F1(r) * T.F2(r) * T.F3(pos);
        return F / r;  // n_i = 1
    }
    if (!(disp <= r / 2))
        throw std::domain_error("bound_factor: displacement exceeds half the separation");
    F = T.F1(disp) * T.F2(r) * T.F3(pos);
    return std::pow(disp / r, K.delta(param)) * F / r;
}

double bound_size(const KernelModel& K, const std::array<double, 2>& x,
                  const std::array<double, 2>& y) {
    return bound_factor(K, 0, x[0], y[0], DispMode::Size, 0) *
           bound_factor(K, 1, x[1], y[1], DispMode::Size, 0);
}

double bound_holder(const KernelModel& K, const std::array<double, 2>& x,
                    const std::array<double, 2>& y, const std::array<double, 2>& xp,
                    const std::array<double, 2>& yp, CondVariant variant) {
    double b = 1.0;
    DispMode modes[2] = {variant.p1, variant.p2};
    for (int i = 0; i < 2; ++i) {
        double disp = 0;
        if (modes[i] == DispMode::DispX) disp = std::abs(x[i] - xp[i]);
        if (modes[i] == DispMode::DispY) disp = std::abs(y[i] - yp[i]);
        b *= bound_factor(K, i, x[i], y[i], modes[i], disp);
    }
    return b;
}

ConditionSample default_condition_sample() {
    ConditionSample s;
    for (int e = -6; e <= 6; e += 2) s.seps.push_back(std::ldexp(1.0, e));
    s.centers = {0.0, 1.0, -3.0, 9.0};
    s.disp_fracs = {0.25, 0.5};
    return s;
}

namespace {
// difference of the full kernel in the pattern selected by the variant
double measured_difference(const KernelModel& K, const std::array<double, 2>& x,
                           const std::array<double, 2>& y, const std::array<double, 2>& xp,
                           const std::array<double, 2>& yp, CondVariant v) {
    auto pick = [&](int i, int alt) -> std::pair<double, double> {
        // returns (x_i, y_i) with the displaced coordinate substituted when alt
        DispMode m = i == 0 ? v.p1 : v.p2;
        if (!alt || m == DispMode::Size) return {x[i], y[i]};
        if (m == DispMode::DispX) return {xp[i], y[i]};
        return {x[i], yp[i]};
    };
    double sum = 0;
    int active1 = v.p1 != DispMode::Size, active2 = v.p2 != DispMode::Size;
    for (int a = 0; a <= active1; ++a)
        for (int b = 0; b <= active2; ++b) {
            auto [x1, y1] = pick(0, a);
            auto [x2, y2] = pick(1, b);
            double sgn = ((a + b) % 2) ? -1.0 : 1.0;
            sum += sgn * K.eval(x1, x2, y1, y2);
        }
    return std::abs(sum);
}

const char* mode_name(DispMode m) {
    switch (m) {
        case DispMode::Size: return "size";
        case DispMode::DispX: return "dx";
        case DispMode::DispY: return "dy";
    }
    return "?";
}
}  // namespace

ConditionReport verify_kernel_conditions(const KernelModel& K, const ConditionSample& sample,
                                         double cmax) {
    ConditionReport rep;
    rep.cmax = cmax;
    std::vector<CondVariant> variants;
    for (DispMode a : {DispMode::Size, DispMode::DispX, DispMode::DispY})
        for (DispMode b : {DispMode::Size, DispMode::DispX, DispMode::DispY})
            variants.push_back({a, b});

    for (const auto& v : variants) {
        ConditionReport::Entry ent;
        ent.name = std::string(mode_name(v.p1)) + "/" + mode_name(v.p2);
        for (double r1 : sample.seps)
            for (double c1 : sample.centers)
                for (double r2 : sample.seps)
                    for (double c2 : sample.centers) {
                        std::array<double, 2> x{c1 + r1 / 2, c2 + r2 / 2};
                        std::array<double, 2> y{c1 - r1 / 2, c2 - r2 / 2};
                        for (double df1 : sample.disp_fracs)
                            for (double df2 : sample.disp_fracs) {
                                std::array<double, 2> xp{x[0] - df1 * r1, x[1] - df2 * r2};
                                std::array<double, 2> yp{y[0] + df1 * r1, y[1] + df2 * r2};
                                double meas = measured_difference(K, x, y, xp, yp, v);
                                double bnd = bound_holder(K, x, y, xp, yp, v);
                                if (bnd <= 0) {
                                    if (meas > 1e-300) {
                                        ent.max_ratio = std::numeric_limits<double>::infinity();
                                        ent.worst = "zero bound with nonzero difference";
                                    }
                                    continue;
                                }
                                double ratio = meas / bnd;
                                if (ratio > ent.max_ratio) {
                                    ent.max_ratio = ratio;
                                    char buf[160];
                                    std::snprintf(buf, sizeof buf,
                                                  "r=(%g,%g) c=(%g,%g) df=(%g,%g)", r1, r2, c1,
                                                  c2, df1, df2);
                                    ent.worst = buf;
                                }
                            }
                    }
        rep.entries.push_back(ent);
    }
    rep.fit1_exists = functriple_fit_exists(K, 0);
    rep.fit2_exists = functriple_fit_exists(K, 1);
    rep.pass = true;
    for (const auto& e : rep.entries)
        if (!(e.max_ratio <= cmax)) rep.pass = false;
    return rep;
}

bool functriple_fit_exists(const KernelModel& K, int param, double edge_frac) {
    const Kernel1D& f = K.factor(param);
    if (f.kind == FactorKind::Zero) return true;
    // bins over separation r and position w = |s+t|, log-spaced
    const int NB = 25;
    std::vector<double> byR(NB, 0.0), byW(NB, 0.0);
    for (int ir = 0; ir < NB; ++ir) {
        double r = std::ldexp(1.0, ir - NB / 2);
        for (int iw = 0; iw < NB; ++iw) {
            double w = iw == 0 ? 0.0 : std::ldexp(1.0, iw - NB / 2);
            for (double sgn : {1.0, -1.0}) {
                double s = (sgn * w + r) / 2, t = (sgn * w - r) / 2;
                double val = std::abs(f.eval(s, t)) * r;
                byR[ir] = std::max(byR[ir], val);
                byW[iw] = std::max(byW[iw], val);
            }
        }
    }
    double mR = 0, mW = 0;
    for (double v : byR) mR = std::max(mR, v);
    for (double v : byW) mW = std::max(mW, v);
    if (mR <= 0) return true;
    bool small_r = byR.front() < edge_frac * mR;
    bool large_r = byR.back() < edge_frac * mR;
    bool large_w = byW.back() < edge_frac * mW;
    return small_r && large_r && large_w;
}

}  // namespace dyt1
