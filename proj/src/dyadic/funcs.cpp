#include "dyadic/funcs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dyt1 {

namespace {
// monotonicity-preserving slope (harmonic mean of the one-sided secants)
double pchip_slope(double s_left, double s_right) {
    if (s_left * s_right <= 0.0) return 0.0;
    return 2.0 * s_left * s_right / (s_left + s_right);
}
}  // namespace

double SampledFunc::operator()(double t) const {
    if (v.empty()) throw std::invalid_argument("SampledFunc: empty sample grid");
    if (t <= 0) return v.front();
    double pos = (std::log2(t) - lg_lo) * per_octave;
    int last = size() - 1;
    if (pos <= 0) return v.front();
    if (pos >= last) return v.back();
    int i = static_cast<int>(pos);
    if (interp == Interp::StepUpper) {
        if (mono == Mono::Increasing) return v[std::min(i + 1, last)];
        if (mono == Mono::Decreasing) return v[i];
        return std::max(v[i], v[i + 1]);
    }
    // C^1 monotone cubic in log t: a plain broken line would put kinks at
    // every node and stall the adaptive quadrature that integrates these
    // profiles
    double w = pos - i;
    double sl = v[i + 1] - v[i];
    double s_prev = i > 0 ? v[i] - v[i - 1] : sl;
    double s_next = i + 2 <= last ? v[i + 2] - v[i + 1] : sl;
    double d0 = pchip_slope(s_prev, sl);
    double d1 = pchip_slope(sl, s_next);
    double w2 = w * w, w3 = w2 * w;
    return v[i] * (2 * w3 - 3 * w2 + 1) + d0 * (w3 - 2 * w2 + w) + v[i + 1] * (-2 * w3 + 3 * w2) +
           d1 * (w3 - w2);
}

SampledFunc SampledFunc::sample(const std::function<double(double)>& f, double lg_lo,
                                double lg_hi, int per_octave, Mono mono) {
    SampledFunc s;
    s.lg_lo = lg_lo;
    s.lg_hi = lg_hi;
    s.per_octave = per_octave;
    s.mono = mono;
    int count = static_cast<int>(std::lround((lg_hi - lg_lo) * per_octave)) + 1;
    s.v.resize(count);
    for (int i = 0; i < count; ++i) s.v[i] = f(std::exp2(lg_lo + i / double(per_octave)));
    return s;
}

double SampledFunc::max_value() const {
    double m = 0;
    for (double x : v) m = std::max(m, x);
    return m;
}

FuncTriple::LimitReport FuncTriple::check_vanishing(double tol_limit) const {
    LimitReport r{};
    double m1 = F1.max_value(), m2 = F2.max_value(), m3 = F3.max_value();
    r.head1 = m1 > 0 ? F1.v.front() / m1 : 0.0;
    r.tail2 = m2 > 0 ? F2.v.back() / m2 : 0.0;
    r.tail3 = m3 > 0 ? F3.v.back() / m3 : 0.0;
    r.pass = r.head1 <= tol_limit && r.tail2 <= tol_limit && r.tail3 <= tol_limit;
    return r;
}

FuncTriple FuncTriple::constant(double c) {
    FuncTriple t;
    auto f = [c](double) { return c; };
    t.F1 = SampledFunc::sample(f, -12, 12, 8, Mono::Increasing);
    t.F2 = SampledFunc::sample(f, -12, 12, 8, Mono::Decreasing);
    t.F3 = SampledFunc::sample(f, -12, 12, 8, Mono::Decreasing);
    return t;
}

FuncTriple FuncTriple::compact_default() {
    FuncTriple t;
    t.F1 = SampledFunc::sample([](double x) { return std::min(1.0, x); }, -12, 12, 8,
                               Mono::Increasing);
    // t^{-2} tail: the factor's difference quotients are controlled by the
    // kernel derivative, which decays like r^{-4} against the r^{-n-delta}
    // prefactor
    t.F2 = SampledFunc::sample([](double x) { return std::min(1.0, 6.0 / (x * x)); }, -12, 12, 8,
                               Mono::Decreasing);
    t.F3 = SampledFunc::sample(
        [](double x) {
            double u = std::max(0.0, x - 1.0);
            return std::exp(-0.25 * u * u);
        },
        -12, 12, 8, Mono::Decreasing);
    return t;
}

namespace {
std::vector<double> grid_nodes(const SampledFunc& s) {
    std::vector<double> t(s.size());
    for (int i = 0; i < s.size(); ++i) t[i] = std::exp2(s.lg_lo + i / double(s.per_octave));
    return t;
}
}  // namespace

FuncTriple envelope(const FuncTriple& F) {
    if (F.F1.v.empty() || F.F2.v.empty() || F.F3.v.empty())
        throw std::invalid_argument("envelope: empty sample grid");
    const auto tu = grid_nodes(F.F1);
    const auto tv = grid_nodes(F.F3);
    int nu = static_cast<int>(tu.size()), nv = static_cast<int>(tv.size());

    std::vector<double> h(nu);  // sup over v of F1 F2 F3 at given u
    double m3 = F.F3.max_value();
    for (int i = 0; i < nu; ++i) h[i] = F.F1(tu[i]) * F.F2(tu[i]) * m3;

    FuncTriple out;
    out.F1 = F.F1;
    out.F1.interp = Interp::StepUpper;
    out.F1.mono = Mono::Increasing;
    double run = 0;
    for (int i = 0; i < nu; ++i) {
        run = std::max(run, h[i]);
        out.F1.v[i] = std::cbrt(run);
    }
    out.F2 = F.F2;
    out.F2.interp = Interp::StepUpper;
    out.F2.mono = Mono::Decreasing;
    run = 0;
    for (int i = nu - 1; i >= 0; --i) {
        run = std::max(run, h[i]);
        out.F2.v[i] = std::cbrt(run);
    }
    // F3'(s) = sup over pairs with 1 + v/(1+u) >= s; evaluated on the F3 grid
    out.F3 = F.F3;
    out.F3.interp = Interp::StepUpper;
    out.F3.mono = Mono::Decreasing;
    std::vector<double> best(nv, 0.0);
    for (int i = 0; i < nu; ++i) {
        double f12 = F.F1(tu[i]) * F.F2(tu[i]);
        for (int j = 0; j < nv; ++j) {
            double s = 1.0 + tv[j] / (1.0 + tu[i]);
            double g = f12 * F.F3(tv[j]);
            // this pair is admissible for every threshold <= s
            int hi = static_cast<int>(std::floor((std::log2(s) - F.F3.lg_lo) * F.F3.per_octave));
            hi = std::min(hi, nv - 1);
            if (hi >= 0 && g > best[hi]) best[hi] = g;
        }
    }
    // suffix max: threshold t_k is admissible for all pairs recorded at >= k
    double suf = 0;
    for (int j = nv - 1; j >= 0; --j) {
        suf = std::max(suf, best[j]);
        best[j] = suf;
    }
    for (int j = 0; j < nv; ++j) out.F3.v[j] = std::cbrt(best[j]);
    return out;
}

FuncTriple holder_envelope(const FuncTriple& F, double delta, double delta_prime) {
    if (!(0 < delta_prime && delta_prime < delta))
        throw std::invalid_argument("holder_envelope: need 0 < delta' < delta");
    double eps = delta - delta_prime;
    const auto tu = grid_nodes(F.F2);  // |x-y| grid
    const auto tv = grid_nodes(F.F3);  // |x+y| grid
    int nu = static_cast<int>(tu.size()), nv = static_cast<int>(tv.size());
    double m3 = F.F3.max_value();

    FuncTriple out;
    // F1'(t) = sup_{w <= t} sup_{u >= 2w, v} [F1F2(u) F3(v) (w/u)^eps]^(1/3)
    out.F1 = F.F1;
    out.F1.interp = Interp::StepUpper;
    out.F1.mono = Mono::Increasing;
    {
        double run = 0;
        for (int iw = 0; iw < nu; ++iw) {
            double w = tu[iw];
            double cand = 0;
            for (int iu = 0; iu < nu; ++iu) {
                double u = tu[iu];
                if (u < 2.0 * w) continue;
                cand = std::max(cand, F.F1(u) * F.F2(u) * m3 * std::pow(w / u, eps));
            }
            run = std::max(run, cand);
            out.F1.v[iw] = std::cbrt(run);
        }
    }
    // F2'(t) = sup_{u >= t} [F1F2(u) F3max (1/2)^eps]^(1/3)  (w maximal at u/2)
    out.F2 = F.F2;
    out.F2.interp = Interp::StepUpper;
    out.F2.mono = Mono::Decreasing;
    {
        double run = 0;
        for (int iu = nu - 1; iu >= 0; --iu) {
            run = std::max(run, F.F1(tu[iu]) * F.F2(tu[iu]) * m3 * std::pow(0.5, eps));
            out.F2.v[iu] = std::cbrt(run);
        }
    }
    // F3'(s) = sup over (u,v) with 1 + v/(1+u) >= s of [F1F2(u) F3(v) (1/2)^eps]^(1/3)
    out.F3 = F.F3;
    out.F3.interp = Interp::StepUpper;
    out.F3.mono = Mono::Decreasing;
    {
        std::vector<double> best(nv, 0.0);
        for (int iu = 0; iu < nu; ++iu) {
            double f12 = F.F1(tu[iu]) * F.F2(tu[iu]) * std::pow(0.5, eps);
            for (int j = 0; j < nv; ++j) {
                double s = 1.0 + tv[j] / (1.0 + tu[iu]);
                double g = f12 * F.F3(tv[j]);
                int hi = static_cast<int>(std::floor((std::log2(s) - F.F3.lg_lo) * F.F3.per_octave));
                hi = std::min(hi, nv - 1);
                if (hi >= 0 && g > best[hi]) best[hi] = g;
            }
        }
        double suf = 0;
        for (int j = nv - 1; j >= 0; --j) {
            suf = std::max(suf, best[j]);
            out.F3.v[j] = std::cbrt(suf);
        }
    }
    return out;
}

double PartialBound::eval_box(const BoxD& I) const {
    double l = I.edge.to_double();
    BoxD unit = BoxD::unit_centered(I.n);
    Dyadic d = box_dist(I, unit);
    double rd = d.to_double() / std::max(l, 1.0);
    return G1(l) * G2(l) * G3(rd);
}

double PartialBound::eval(const DyadicCube& I, const Grid& g) const {
    return eval_box(to_box(I, g));
}

PartialBound PartialBound::compact_default() {
    PartialBound p;
    p.G1 = SampledFunc::sample([](double t) { return std::min(1.0, t); }, -12, 12, 8,
                               Mono::Increasing);
    p.G2 = SampledFunc::sample([](double t) { return std::min(1.0, 1.0 / t); }, -12, 12, 8,
                               Mono::Decreasing);
    p.G3 = SampledFunc::sample(
        [](double t) {
            double u = std::max(0.0, t - 1.0);
            return std::exp(-0.125 * u * u);
        },
        -12, 12, 8, Mono::Decreasing);
    return p;
}

PartialBound PartialBound::constant(double c) {
    PartialBound p;
    auto f = [c](double) { return c; };
    p.G1 = SampledFunc::sample(f, -12, 12, 8, Mono::Increasing);
    p.G2 = SampledFunc::sample(f, -12, 12, 8, Mono::Decreasing);
    p.G3 = SampledFunc::sample(f, -12, 12, 8, Mono::Decreasing);
    return p;
}

double BoundForms::F2_smooth(double t) const {
    double sum = 0, cap = trip.F2.max_value();
    double w = 1.0, scale = 1.0;
    double decay = std::exp2(-theta);
    for (int k = 0; k < 1200; ++k) {
        sum += w * trip.F2(t * scale);
        scale *= 0.5;
        w *= decay;
        if (w * cap < 1e-15 * (sum + 1e-300)) break;
    }
    return sum;
}

double BoundForms::F3_smooth(const BoxD& box) const {
    double sum = 0;
    double w = 1.0;
    double decay = std::exp2(-delta);
    BoxD unit = BoxD::unit_centered(box.n);
    BoxD cur = box;
    for (int k = 0; k < 200; ++k) {
        double rd = rel_dist(cur, unit).to_double();
        sum += w * trip.F3(rd);
        if (w < 1e-15) break;
        w *= decay;
        cur = cur.dilate_pow2(1);
    }
    return sum;
}

double BoundForms::F_pair(const DyadicCube& I, const DyadicCube& J, const Grid& g) const {
    GeometrySummary s = cube_geometry(I, J, g);
    double lI = std::ldexp(1.0, std::min(I.level, J.level));
    BoxD unit = BoxD::unit_centered(I.n);
    return trip.F1(lI) * trip.F2(s.join.edge.to_double()) *
           trip.F3(rel_dist(s.join, unit).to_double());
}

double BoundForms::F_tilde_pair(const DyadicCube& I, const DyadicCube& J, const Grid& g) const {
    GeometrySummary s = cube_geometry(I, J, g);
    double lI = std::ldexp(1.0, std::min(I.level, J.level));
    return trip.F1(lI) * F2_smooth(lI) * F3_smooth(s.join);
}

double BoundForms::F_tilde(const DyadicCube& I, const Grid& g) const {
    double lI = std::ldexp(1.0, I.level);
    return trip.F1(lI) * F2_smooth(lI) * F3_smooth(to_box(I, g));
}

double BoundForms::F_hat(const DyadicCube& I, const Grid& g) const {
    double s = F_tilde(I, g) + part.eval(I, g);
    for (const auto& c : children(I, g)) s += part.eval(c, g);
    return s;
}

}  // namespace dyt1
