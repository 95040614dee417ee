#include "dyadic/coeffs.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dyt1 {

std::string RegimeTag::to_string() const {
    auto one = [](const ParamRegime& p) -> std::string {
        switch (p.regime) {
            case Regime::Separated: return "sep";
            case Regime::Nearby: return "near";
            case Regime::Equal: return "equal";
            case Regime::Inside: return p.boundary ? "inside_b" : "inside_g";
        }
        return "?";
    };
    return one(p1) + "/" + one(p2);
}

PairKey PairKey::canonical(const HaarIndex& i1, const HaarIndex& i2, const HaarIndex& j1,
                           const HaarIndex& j2) {
    PairKey k;
    k.I1 = i1, k.I2 = i2, k.J1 = j1, k.J2 = j2;
    if (k.I1.cube.level > k.J1.cube.level) {
        std::swap(k.I1, k.J1);
        k.swapped1 = true;
    }
    if (k.I2.cube.level > k.J2.cube.level) {
        std::swap(k.I2, k.J2);
        k.swapped2 = true;
    }
    return k;
}

ParamRegime classify_param(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    ParamRegime out;
    if (I == J) {
        out.regime = Regime::Equal;
        return out;
    }
    if (contains(J, I, g)) {
        out.regime = Regime::Inside;
        out.boundary = is_boundary_descendant(I, J, g);
        return out;
    }
    GeometrySummary s = cube_geometry(I, J, g);
    out.regime = s.rd >= Dyadic::from_int(1) ? Regime::Separated : Regime::Nearby;
    return out;
}

RegimeTag regime_classify(const PairKey& key, const Grid& g) {
    RegimeTag t;
    t.p1 = classify_param(key.I1.cube, key.J1.cube, g);
    t.p2 = classify_param(key.I2.cube, key.J2.cube, g);
    return t;
}

PhiSplit phi_split(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    if (!contains(J, I, g) || I == J)
        throw std::invalid_argument("phi_split: need I strictly inside J");
    PhiSplit out;
    out.phi = StepFn::phi(I, J, g);
    double v = std::pow(2.0, -0.5 * J.level);
    DyadicCube JI = ancestor(I, g, J.level - 1 - I.level);
    out.mean = child_position(JI, g, 0) == 0 ? v : -v;
    out.sup_abs = out.phi.sup_abs();
    return out;
}

namespace {
double bound_param(const KernelModel& K, int param, const DyadicCube& I, const DyadicCube& J,
                   const ParamRegime& pr, const Grid& g) {
    BoundForms forms = K.forms(param);
    GeometrySummary geo = cube_geometry(I, J, g);
    double rs = geo.rs.to_double();
    double delta = forms.delta;
    const double n = I.n;
    switch (pr.regime) {
        case Regime::Separated:
            return forms.F_pair(I, J, g) * std::pow(rs, 0.5 * n + delta) /
                   std::pow(geo.rd.to_double(), n + delta);
        case Regime::Nearby:
            return forms.F_tilde_pair(I, J, g) * std::pow(rs, 0.5 * n) /
                   std::pow(geo.ird.to_double(), delta);
        case Regime::Equal:
            return forms.F_hat(I, g);
        case Regime::Inside:
            if (pr.boundary) return forms.F_tilde(I, g) * std::pow(rs, 0.5 * n);
            return forms.F_tilde_pair(I, J, g) * std::pow(rs, 0.5 * n + 0.5 * delta);
    }
    return 0;
}
}  // namespace

FactorValue matrix_factor(const KernelModel& K, int param, const HaarIndex& fs,
                          const HaarIndex& gb, bool swapped, const Grid& grid,
                          const QuadSpec& spec) {
    FactorValue out;
    out.regime = classify_param(fs.cube, gb.cube, grid);
    out.bound = bound_param(K, param, fs.cube, gb.cube, out.regime, grid);
    const Kernel1D& k = K.factor(param);
    double sgn = swapped ? -1.0 : 1.0;  // odd factors: swapping roles flips the sign
    if (swapped && !k.odd())
        throw std::domain_error("matrix_factor: adjoint handling needs an odd factor");

    StepFn f = StepFn::haar(fs, grid);
    if (out.regime.regime == Regime::Inside) {
        PhiSplit ps = phi_split(fs.cube, gb.cube, grid);
        if (gb.eta != 1) throw std::invalid_argument("matrix_factor: 1-d Haar signature expected");
        out.phi_part = pairing_1d(k, ps.phi, f, spec);
        IntegralResult one = pairing_1d(k, StepFn::one(), f, spec);
        out.para_part = one;
        out.para_part.value *= ps.mean;
        out.para_part.err_est *= std::abs(ps.mean);
        out.full = out.phi_part;
        out.full.value += out.para_part.value;
        out.full.err_est += out.para_part.err_est;
        out.full.n_evals += out.para_part.n_evals;
        out.full.converged = out.full.converged && out.para_part.converged;
    } else {
        StepFn gf = StepFn::haar(gb, grid);
        out.full = pairing_1d(k, gf, f, spec);
    }
    out.full.value *= sgn;
    out.phi_part.value *= sgn;
    out.para_part.value *= sgn;
    return out;
}

ElementResult matrix_element(const PairKey& key, const KernelModel& K, const Grid& g,
                             const QuadSpec& spec) {
    ElementResult out;
    out.regime = regime_classify(key, g);
    out.f1 = matrix_factor(K, 0, key.I1, key.J1, key.swapped1, g, spec);
    out.f2 = matrix_factor(K, 1, key.I2, key.J2, key.swapped2, g, spec);
    out.value.value = out.f1.full.value * out.f2.full.value;
    out.value.err_est = std::abs(out.f1.full.value) * out.f2.full.err_est +
                        std::abs(out.f2.full.value) * out.f1.full.err_est +
                        out.f1.full.err_est * out.f2.full.err_est;
    out.value.n_evals = out.f1.full.n_evals + out.f2.full.n_evals;
    out.value.converged = out.f1.full.converged && out.f2.full.converged;
    out.value.trunc_radius = std::max(out.f1.full.trunc_radius, out.f2.full.trunc_radius);
    out.bound = out.f1.bound * out.f2.bound;
    double meas = out.f1.measured() * out.f2.measured();
    out.ratio = out.bound > 0 ? meas / out.bound : (meas > 0 ? INFINITY : 0.0);
    return out;
}

IntegralResult matrix_element_direct(const PairKey& key, const KernelModel& K, const Grid& g,
                                     const QuadSpec& spec) {
    auto factor = [&](int param, const HaarIndex& fs, const HaarIndex& gb,
                      bool swapped) -> IntegralResult {
        StepFn f = StepFn::haar(fs, g);
        StepFn gf = StepFn::haar(gb, g);
        IntegralResult r = pairing_1d(K.factor(param), gf, f, spec);
        if (swapped) r.value = -r.value;
        return r;
    };
    IntegralResult r1 = factor(0, key.I1, key.J1, key.swapped1);
    IntegralResult r2 = factor(1, key.I2, key.J2, key.swapped2);
    IntegralResult out;
    out.value = r1.value * r2.value;
    out.err_est = std::abs(r1.value) * r2.err_est + std::abs(r2.value) * r1.err_est +
                  r1.err_est * r2.err_est;
    out.n_evals = r1.n_evals + r2.n_evals;
    out.converged = r1.converged && r2.converged;
    return out;
}

double bound_for_pair(const PairKey& key, const KernelModel& K, const Grid& g) {
    RegimeTag t = regime_classify(key, g);
    return bound_param(K, 0, key.I1.cube, key.J1.cube, t.p1, g) *
           bound_param(K, 1, key.I2.cube, key.J2.cube, t.p2, g);
}

namespace {
StepFn one_with_marks(double radius) {
    StepFn s;
    long long r = static_cast<long long>(std::ceil(radius));
    s.cuts = {Dyadic::from_int(-r), Dyadic::from_int(r)};
    s.vals = {1.0, 1.0, 1.0};
    return s;
}
}  // namespace

SymbolCoeffs paraproduct_symbol(const KernelModel& K, const HaarIndex& I1, const HaarIndex& J1,
                                SymbolVariant variant, const Grid& g, int family_N,
                                const QuadSpec& spec, double window_radius) {
    SymbolCoeffs out;
    StepFn f1 = StepFn::haar(I1, g);
    switch (variant) {
        case SymbolVariant::HaarPair:
            out.factor1 = pairing_1d(K.f1, StepFn::haar(J1, g), f1, spec);
            break;
        case SymbolVariant::SelfPair:
            out.factor1 = pairing_1d(K.f1, StepFn::haar(I1, g), f1, spec);
            break;
        case SymbolVariant::PhiPair: {
            PhiSplit ps = phi_split(I1.cube, J1.cube, g);
            out.factor1 = pairing_1d(K.f1, ps.phi, f1, spec);
            break;
        }
    }
    double floor_radius = std::ldexp(1.0, family_N + 1);
    double R0 = std::max(window_radius, floor_radius);
    StepFn one = one_with_marks(R0);
    for (const auto& I2c : truncation_family(g, family_N)) {
        HaarIndex I2{I2c, 1};
        IntegralResult second = pairing_1d(K.f2, one, StepFn::haar(I2, g), spec);
        if (window_radius > 0 && second.trunc_radius > window_radius + 1)
            throw std::domain_error("paraproduct_symbol: window insufficient for the decay tail");
        out.window_radius = std::max(out.window_radius, std::max(R0, second.trunc_radius));
        IntegralResult v;
        v.value = out.factor1.value * second.value;
        v.err_est = std::abs(out.factor1.value) * second.err_est +
                    std::abs(second.value) * out.factor1.err_est +
                    out.factor1.err_est * second.err_est;
        v.n_evals = out.factor1.n_evals + second.n_evals;
        v.converged = out.factor1.converged && second.converged;
        out.coeffs.emplace(I2, v);
    }
    return out;
}

namespace {
StepFn tag_step(TestTag tag, const DyadicCube& I, const Grid& g) {
    return tag == TestTag::Indicator ? StepFn::indicator(I, g) : StepFn::bump(I, g);
}
}  // namespace

IntegralResult partial_constant(const KernelModel& K, int param, const DyadicCube& I,
                                TestTag f_tag, TestTag g_tag, const Grid& g,
                                const QuadSpec& spec) {
    return pairing_1d(K.factor(param), tag_step(g_tag, I, g), tag_step(f_tag, I, g), spec);
}

WcpValues wcp_and_diag_values(const DyadicCube& I1, const DyadicCube& I2, const KernelModel& K,
                              const Grid& g, const QuadSpec& spec) {
    WcpValues out;
    auto pair1 = [&](TestTag f, TestTag gt) { return partial_constant(K, 0, I1, f, gt, g, spec); };
    auto pair2 = [&](TestTag f, TestTag gt) { return partial_constant(K, 1, I2, f, gt, g, spec); };
    IntegralResult A = pair1(TestTag::Indicator, TestTag::Indicator);
    IntegralResult B = pair2(TestTag::Indicator, TestTag::Indicator);
    auto prod = [](const IntegralResult& a, const IntegralResult& b) {
        IntegralResult r;
        r.value = a.value * b.value;
        r.err_est = std::abs(a.value) * b.err_est + std::abs(b.value) * a.err_est +
                    a.err_est * b.err_est;
        r.n_evals = a.n_evals + b.n_evals;
        r.converged = a.converged && b.converged;
        return r;
    };
    out.t11 = prod(A, B);
    out.d1a = prod(A, pair2(TestTag::Indicator, TestTag::Bump));
    out.da1 = prod(pair1(TestTag::Indicator, TestTag::Bump), B);
    out.a11 = prod(pair1(TestTag::Bump, TestTag::Indicator), B);
    out.a12 = prod(A, pair2(TestTag::Bump, TestTag::Indicator));
    out.bound = K.pb1.eval(I1, g) * cube_measure(I1) * K.pb2.eval(I2, g) * cube_measure(I2);
    return out;
}

// table ---------------------------------------------------------------------

void CoeffTable::insert(const PairKey& k, const CoeffEntry& e) { entries[k] = e; }

void CoeffTable::apply_threshold(double tau_rel) {
    double mx = 0;
    for (const auto& [k, e] : entries) mx = std::max(mx, std::abs(e.value));
    threshold = tau_rel * mx;
    for (auto it = entries.begin(); it != entries.end();) {
        if (std::abs(it->second.value) < threshold) {
            ++dropped_count;
            dropped_mass += std::abs(it->second.value);
            it = entries.erase(it);
        } else {
            ++it;
        }
    }
}

std::string haar_to_string(const HaarIndex& h) { return cube_to_string(h.cube); }

HaarIndex haar_from_string(const std::string& cube_str, int eta) {
    return HaarIndex{cube_from_string(cube_str), static_cast<uint8_t>(eta)};
}

void CoeffTable::save_csv(const std::string& path, const std::string& header_comment) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        out << header_comment;
        char buf[512];
        std::snprintf(buf, sizeof buf, "# threshold=%.17g dropped=%lld dropped_mass=%.17g\n",
                      threshold, dropped_count, dropped_mass);
        out << buf;
        out << "i1,i2,j1,j2,eta_i1,eta_i2,eta_j1,eta_j2,regime,value,err_est,bound,ratio\n";
        for (const auto& [k, e] : entries) {
            std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%d,%d,%d,%d,%s,%.17g,%.17g,%.17g,%.17g\n",
                          haar_to_string(k.I1).c_str(), haar_to_string(k.I2).c_str(),
                          haar_to_string(k.J1).c_str(), haar_to_string(k.J2).c_str(), k.I1.eta,
                          k.I2.eta, k.J1.eta, k.J2.eta, e.regime.c_str(), e.value, e.err_est,
                          e.bound, e.ratio);
            out << buf;
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename temporary output to '" + path + "'");
}

CoeffTable CoeffTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    CoeffTable t;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("i1,", 0) == 0) continue;
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> f;
        while (std::getline(ss, field, ',')) f.push_back(field);
        if (f.size() != 13) continue;
        PairKey k;
        k.I1 = haar_from_string(f[0], std::stoi(f[4]));
        k.I2 = haar_from_string(f[1], std::stoi(f[5]));
        k.J1 = haar_from_string(f[2], std::stoi(f[6]));
        k.J2 = haar_from_string(f[3], std::stoi(f[7]));
        CoeffEntry e;
        e.regime = f[8];
        e.value = std::stod(f[9]);
        e.err_est = std::stod(f[10]);
        e.bound = std::stod(f[11]);
        e.ratio = std::stod(f[12]);
        t.entries[k] = e;
    }
    return t;
}

}  // namespace dyt1
