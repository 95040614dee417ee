#include "doctest.h"

#include <cmath>

#include "dyadic/funcs.hpp"

using namespace dyt1;

namespace {
std::vector<double> nodes_of(const SampledFunc& s) {
    std::vector<double> t(s.v.size());
    for (size_t i = 0; i < t.size(); ++i)
        t[i] = std::exp2(s.lg_lo + double(i) / s.per_octave);
    return t;
}

// brute-force envelope oracle straight from the definitions
struct EnvOracle {
    std::vector<double> tu, tv;
    const FuncTriple& F;
    double G(double u, double v) const { return F.F1(u) * F.F2(u) * F.F3(v); }
    double F1p(double t) const {
        double s = 0;
        for (double u : tu)
            if (u <= t * (1 + 1e-12))
                for (double v : tv) s = std::max(s, G(u, v));
        return std::cbrt(s);
    }
    double F2p(double t) const {
        double s = 0;
        for (double u : tu)
            if (u >= t * (1 - 1e-12))
                for (double v : tv) s = std::max(s, G(u, v));
        return std::cbrt(s);
    }
    double F3p(double t) const {
        double s = 0;
        for (double u : tu)
            for (double v : tv)
                if (1 + v / (1 + u) >= t * (1 - 1e-12)) s = std::max(s, G(u, v));
        return std::cbrt(s);
    }
};
}  // namespace

TEST_CASE("envelope of a constant triple") {
    FuncTriple F = FuncTriple::constant(0.5);
    FuncTriple E = envelope(F);
    double c = std::cbrt(0.125);
    for (double v : E.F1.v) CHECK(v == doctest::Approx(c).epsilon(1e-12));
    for (double v : E.F2.v) CHECK(v == doctest::Approx(c).epsilon(1e-12));
    for (double v : E.F3.v) CHECK(v == doctest::Approx(c).epsilon(1e-12));
    CHECK(E.F1(0.3) * E.F2(0.3) * E.F3(1.7) == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("envelope values match the brute-force sup oracle") {
    // F(t) = t e^{-t} profile on a coarse grid
    FuncTriple F;
    auto prof = [](double t) { return t * std::exp(-t); };
    F.F1 = SampledFunc::sample(prof, -8, 8, 2);
    F.F2 = SampledFunc::sample(prof, -8, 8, 2);
    F.F3 = SampledFunc::sample(prof, -8, 8, 2);
    FuncTriple E = envelope(F);
    EnvOracle oracle{nodes_of(F.F1), nodes_of(F.F3), F};
    auto tu = nodes_of(F.F1);
    auto tv = nodes_of(F.F3);
    for (size_t i = 0; i < tu.size(); i += 3) {
        CHECK(E.F1.v[i] == doctest::Approx(oracle.F1p(tu[i])).epsilon(1e-10));
        CHECK(E.F2.v[i] == doctest::Approx(oracle.F2p(tu[i])).epsilon(1e-10));
        CHECK(E.F3.v[i] == doctest::Approx(oracle.F3p(tv[i])).epsilon(1e-10));
    }
}

TEST_CASE("envelope domination and monotonicity at sample resolution") {
    FuncTriple F;
    F.F1 = SampledFunc::sample([](double t) { return std::min(1.0, t * t); }, -6, 6, 4);
    F.F2 = SampledFunc::sample([](double t) { return 1.0 / (1.0 + t); }, -6, 6, 4);
    F.F3 = SampledFunc::sample([](double t) { return std::exp(-0.3 * t); }, -6, 6, 4);
    FuncTriple E = envelope(F);
    for (size_t i = 1; i < E.F1.v.size(); ++i) {
        CHECK(E.F1.v[i] >= E.F1.v[i - 1]);
        CHECK(E.F2.v[i] <= E.F2.v[i - 1]);
        CHECK(E.F3.v[i] <= E.F3.v[i - 1]);
    }
    auto tu = nodes_of(F.F1);
    auto tv = nodes_of(F.F3);
    for (double u : tu)
        for (double v : tv) {
            double lhs = F.F1(u) * F.F2(u) * F.F3(v);
            double rhs = E.F1(u) * E.F2(u) * E.F3(1 + v / (1 + u));
            CHECK(lhs <= rhs * (1 + 1e-12));
        }
}

TEST_CASE("holder envelope") {
    CHECK_THROWS(holder_envelope(FuncTriple::constant(1.0), 1.0, 1.0));
    FuncTriple Z = FuncTriple::constant(0.0);
    FuncTriple EZ = holder_envelope(Z, 1.0, 0.5);
    CHECK(EZ.F1.max_value() == 0.0);
    CHECK(EZ.F2.max_value() == 0.0);

    // Gaussian-type profile, delta = 1, delta' = 1/2: domination on a lattice
    FuncTriple F;
    F.F1 = SampledFunc::sample([](double t) { return std::exp(-0.1 * (std::log2(t) - 1) *
                                                              (std::log2(t) - 1)); },
                               -6, 6, 4);
    F.F2 = F.F1;
    F.F3 = SampledFunc::sample([](double t) { return std::exp(-0.2 * t); }, -6, 6, 4);
    FuncTriple E = holder_envelope(F, 1.0, 0.5);
    double eps = 0.5;
    auto tu = nodes_of(F.F1);
    for (double u : tu)
        for (double w : tu) {
            if (w > u / 2) continue;
            for (double v : nodes_of(F.F3)) {
                double lhs = F.F1(u) * F.F2(u) * F.F3(v) * std::pow(w / u, eps);
                double rhs = E.F1(w) * E.F2(u) * E.F3(1 + v / (1 + u));
                CHECK(lhs <= rhs * (1 + 1e-12));
            }
        }
    // fixed ratio w = u/2 reduces to a scalar envelope with factor 2^{-eps}
    for (size_t i = 0; i < E.F2.v.size(); ++i) CHECK(E.F2.v[i] <= std::cbrt(1.0) + 1e-12);
}

TEST_CASE("vanishing limit checks") {
    CHECK(FuncTriple::compact_default().check_vanishing().pass);
    CHECK_FALSE(FuncTriple::constant(1.0).check_vanishing().pass);
    FuncTriple z = FuncTriple::constant(0.0);
    CHECK(z.check_vanishing().pass);
}

TEST_CASE("bound forms") {
    Grid g = Grid::standard(1);
    BoundForms forms{FuncTriple::constant(1.0), PartialBound::constant(1.0), 1.0, 0.1};
    // constant F2: smoothed sum is the geometric series
    CHECK(forms.F2_smooth(1.0) == doctest::Approx(1.0 / (1.0 - std::exp2(-0.1))).epsilon(1e-9));
    // F_pair with constant F is 1
    CHECK(forms.F_pair(interval(0, 0), interval(0, 4), g) == doctest::Approx(1.0));
    // F_hat adds the partial bound over the cube and its children
    BoundForms cf{FuncTriple::constant(0.0), PartialBound::constant(1.0), 1.0, 0.1};
    CHECK(cf.F_hat(interval(0, 0), g) == doctest::Approx(3.0));

    // compact profile decays in every direction
    BoundForms cm{FuncTriple::compact_default(), PartialBound::compact_default(), 1.0, 0.1};
    double mid = cm.F_tilde(interval(0, 0), g);
    CHECK(cm.F_tilde(interval(-9, 0), g) < 0.05 * mid);
    CHECK(cm.F_tilde(interval(0, 4000), g) < 0.05 * mid);
}

TEST_CASE("partial bound eval") {
    Grid g = Grid::standard(1);
    PartialBound p = PartialBound::compact_default();
    double at0 = p.eval(interval(0, 0), g);
    CHECK(at0 > 0);
    CHECK(p.eval(interval(-8, 0), g) < at0);
    CHECK(p.eval(interval(0, 50), g) < at0);
    CHECK(p.eval(interval(7, 0), g) < at0);
}
