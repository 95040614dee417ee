#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "dyadic/coeffs.hpp"

using namespace dyt1;

static Grid g1 = Grid::standard(1);
static QuadSpec spec;

TEST_CASE("regime classification") {
    // d([0,1),[4,8)) = 3, max edge 4: rd = 3/4 < 1, disjoint -> nearby
    PairKey k = PairKey::canonical({interval(0, 0), 1}, {interval(0, 0), 1},
                                   {interval(2, 1), 1}, {interval(2, 1), 1});
    RegimeTag t = regime_classify(k, g1);
    CHECK(t.p1.regime == Regime::Nearby);

    k = PairKey::canonical({interval(0, 0), 1}, {interval(0, 0), 1}, {interval(0, 0), 1},
                           {interval(0, 0), 1});
    CHECK(regime_classify(k, g1).p1.regime == Regime::Equal);

    // I=[0,1/4) inside J=[0,1): d(I, J_I^c) = 1/4 <= sqrt(1/4) -> boundary
    k = PairKey::canonical({interval(-2, 0), 1}, {interval(0, 0), 1}, {interval(0, 0), 1},
                           {interval(0, 0), 1});
    CHECK(regime_classify(k, g1).p1.regime == Regime::Inside);
    CHECK(regime_classify(k, g1).p1.boundary);

    // a deep interior descendant is not boundary
    auto gi = interior_descendants(interval(0, 0), g1, 3);
    REQUIRE(!gi.empty());
    k = PairKey::canonical({gi.front(), 1}, {interval(0, 0), 1}, {interval(0, 0), 1},
                           {interval(0, 0), 1});
    CHECK_FALSE(regime_classify(k, g1).p1.boundary);

    // separated when rd >= 1
    k = PairKey::canonical({interval(0, 8), 1}, {interval(0, 0), 1}, {interval(0, 0), 1},
                           {interval(0, 0), 1});
    CHECK(regime_classify(k, g1).p1.regime == Regime::Separated);
}

TEST_CASE("canonicalization records swaps and adjoint signs work out") {
    HaarIndex small{interval(-1, 0), 1}, big{interval(1, 2), 1};
    PairKey fwd = PairKey::canonical(small, small, big, big);
    CHECK_FALSE(fwd.swapped1);
    PairKey rev = PairKey::canonical(big, big, small, small);
    CHECK(rev.swapped1);
    CHECK(rev.I1 == small);

    KernelModel K = KernelModel::builtin("compact_model");
    IntegralResult vf = matrix_element_direct(fwd, K, g1, spec);
    IntegralResult vr = matrix_element_direct(rev, K, g1, spec);
    // two sign flips across the two parameters cancel
    CHECK(vr.value == doctest::Approx(vf.value).epsilon(1e-7));
}

TEST_CASE("phi split") {
    DyadicCube I = interval(-3, 1), J = interval(0, 0);
    PhiSplit ps = phi_split(I, J, g1);
    CHECK(ps.mean == 1.0);  // I sits in the left half of [0,1)
    CHECK(ps.sup_abs <= 2.0 * 1.0 + 1e-12);
    DyadicCube Ir = interval(-3, 5);  // right half
    CHECK(phi_split(Ir, J, g1).mean == -1.0);
    CHECK_THROWS(phi_split(J, J, g1));
    CHECK_THROWS(phi_split(interval(0, 3), J, g1));
}

TEST_CASE("matrix element: separated regime against the exact factor") {
    KernelModel K = KernelModel::builtin("tensor_hilbert");
    HaarIndex i1{interval(0, 0), 1}, j1{interval(0, 4), 1};
    HaarIndex i2{interval(0, 0), 1}, j2{interval(0, 5), 1};
    PairKey key = PairKey::canonical(i1, i2, j1, j2);
    ElementResult el = matrix_element(key, K, g1, spec);
    double f1 = hilbert_pairing_exact(StepFn::haar(j1, g1), StepFn::haar(i1, g1));
    double f2 = hilbert_pairing_exact(StepFn::haar(j2, g1), StepFn::haar(i2, g1));
    CHECK(el.value.value == doctest::Approx(f1 * f2).epsilon(1e-7));
    CHECK(el.regime.p1.regime == Regime::Separated);
    CHECK(el.bound > 0);
}

TEST_CASE("fully symmetric even configuration vanishes for odd kernels") {
    KernelModel K = KernelModel::builtin("compact_model");
    // identical Haar pairs in both parameters
    HaarIndex h{interval(0, 0), 1};
    PairKey key = PairKey::canonical(h, h, h, h);
    ElementResult el = matrix_element(key, K, g1, spec);
    CHECK(std::abs(el.value.value) <= 1e-8);
}

TEST_CASE("inside regime: split assembly agrees with direct quadrature") {
    KernelModel K = KernelModel::builtin("compact_model");
    DyadicCube J = interval(0, 0);
    for (const auto& I : {interval(-2, 1), interval(-3, 2), interval(-1, 1)}) {
        HaarIndex hi{I, 1}, hj{J, 1}, other{interval(0, 3), 1};
        PairKey key = PairKey::canonical(hi, other, hj, other);
        ElementResult el = matrix_element(key, K, g1, spec);
        IntegralResult direct = matrix_element_direct(key, K, g1, spec);
        CHECK(std::abs(el.value.value - direct.value) <=
              10 * (el.value.err_est + direct.err_est) + 1e-10);
        // phi + paraproduct parts add up to the full factor
        CHECK(el.f1.full.value ==
              doctest::Approx(el.f1.phi_part.value + el.f1.para_part.value).epsilon(1e-12));
    }
}

TEST_CASE("regime bound formulas") {
    KernelModel K = KernelModel::builtin("tensor_hilbert");  // constant F's
    // both parameters separated: bound = prod rs^{3/2} / rd^2
    HaarIndex i1{interval(-1, 0), 1}, j1{interval(0, 4), 1};
    PairKey key = PairKey::canonical(i1, i1, j1, j1);
    GeometrySummary s = cube_geometry(i1.cube, j1.cube, g1);
    double per = std::pow(s.rs.to_double(), 1.5) / std::pow(s.rd.to_double(), 2.0);
    CHECK(bound_for_pair(key, K, g1) == doctest::Approx(per * per).epsilon(1e-12));

    // rs = 1, rd = 1 gives bound 1 per parameter
    HaarIndex a{interval(0, 0), 1}, b{interval(0, 2), 1};
    PairKey k2 = PairKey::canonical(a, a, b, b);
    CHECK(bound_for_pair(k2, K, g1) == doctest::Approx(1.0).epsilon(1e-12));

    // nearby with ird = 2: factor rs^{1/2} / 2^delta
    HaarIndex c{interval(-1, 3), 1}, d{interval(0, 0), 1};  // I=[1.5,2), J=[0,1): d=1/2
    GeometrySummary sn = cube_geometry(c.cube, d.cube, g1);
    REQUIRE(sn.ird.to_double() == 2.0);
    REQUIRE(sn.rd.to_double() == 0.5);
    PairKey k3 = PairKey::canonical(c, a, d, b);
    RegimeTag t3 = regime_classify(k3, g1);
    REQUIRE(t3.p1.regime == Regime::Nearby);
    BoundForms f = K.forms(0);
    double expect1 = f.F_tilde_pair(c.cube, d.cube, g1) * std::pow(0.5, 0.5) / 2.0;
    double expect2 = 1.0;  // rs=1, rd=1 separated factor with constant F
    CHECK(bound_for_pair(k3, K, g1) == doctest::Approx(expect1 * expect2).epsilon(1e-12));
}

TEST_CASE("paraproduct symbol for a separable model") {
    KernelModel K = KernelModel::builtin("compact_model");
    HaarIndex I1{interval(-1, 0), 1}, J1{interval(0, 2), 1};
    SymbolCoeffs sc = paraproduct_symbol(K, I1, J1, SymbolVariant::HaarPair, g1, 1, spec);
    CHECK(!sc.coeffs.empty());
    CHECK(sc.window_radius >= 4.0);  // floor 2^{N+2} box
    // cross-check one coefficient against independently computed factors
    HaarIndex I2{interval(0, 0), 1};
    QuadSpec fine = spec;
    fine.tol = 1e-11;
    double factor1 = pairing_1d(K.f1, StepFn::haar(J1, g1), StepFn::haar(I1, g1), fine).value;
    double factor2 = pairing_1d(K.f2, StepFn::one(), StepFn::haar(I2, g1), fine).value;
    auto it = sc.coeffs.find(I2);
    REQUIRE(it != sc.coeffs.end());
    CHECK(it->second.value == doctest::Approx(factor1 * factor2).epsilon(1e-6));

    // zero kernel symbol vanishes
    KernelModel Z = KernelModel::builtin("zero");
    SymbolCoeffs sz = paraproduct_symbol(Z, I1, J1, SymbolVariant::HaarPair, g1, 1, spec);
    for (const auto& [h, v] : sz.coeffs) CHECK(v.value == 0.0);

    // explicit window below the decay tail errors out
    CHECK_THROWS(paraproduct_symbol(KernelModel::builtin("tensor_hilbert"), I1, J1,
                                    SymbolVariant::HaarPair, g1, 1, spec, 4.0));
}

TEST_CASE("weak compactness and diagonal pairings") {
    KernelModel K = KernelModel::builtin("compact_model");
    DyadicCube I1 = interval(0, 0), I2 = interval(0, 0);
    WcpValues w = wcp_and_diag_values(I1, I2, K, g1, spec);
    // odd factors: <k 1_I, 1_I> vanishes, so every product contains a zero
    CHECK(std::abs(w.t11.value) <= 1e-8);
    CHECK(std::abs(w.d1a.value) <= 1e-8);
    CHECK(w.bound > 0);

    // partial constants: bump pairings are nonzero and bounded by the cube bound
    IntegralResult c1a = partial_constant(K, 1, I2, TestTag::Indicator, TestTag::Bump, g1, spec);
    IntegralResult ca1 = partial_constant(K, 1, I2, TestTag::Bump, TestTag::Indicator, g1, spec);
    CHECK(std::abs(c1a.value) > 1e-6);
    // oddness relates the two orderings
    CHECK(c1a.value == doctest::Approx(-ca1.value).epsilon(1e-6));
    double pb = K.pb2.eval(I2, g1) * cube_measure(I2);
    CHECK(std::abs(c1a.value) + std::abs(ca1.value) <= 50.0 * pb);
}

TEST_CASE("independent mesh oracle for one compact partial constant") {
    KernelModel K = KernelModel::builtin("compact_model");
    DyadicCube I = interval(0, 0);
    IntegralResult r = partial_constant(K, 0, I, TestTag::Bump, TestTag::Indicator, g1, spec);
    // the compact factor is smooth, so plain midpoint rules converge: the bump
    // is +1 on [0,1/2), -1 on [1/2,1), paired in y against 1_I in x
    int n = 600;
    double h = 1.0 / n, total = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x = (i + 0.5) * h, y = (j + 0.5) * h;
            double a = y < 0.5 ? 1.0 : -1.0;
            total += K.f1.eval(x, y) * a * h * h;
        }
    CHECK(r.value == doctest::Approx(total).epsilon(1e-5));
}

TEST_CASE("coefficient table: threshold ledger and csv round trip") {
    CoeffTable t;
    HaarIndex a{interval(0, 0), 1}, b{interval(0, 1), 1}, c{interval(1, 2), 1};
    PairKey k1 = PairKey::canonical(a, a, b, c);
    PairKey k2 = PairKey::canonical(a, b, c, c);
    t.insert(k1, {1.0, 1e-12, 2.0, 0.5, "sep/sep"});
    t.insert(k2, {1e-20, 1e-22, 1.0, 1e-20, "near/sep"});
    t.apply_threshold(1e-14);
    CHECK(t.entries.size() == 1);
    CHECK(t.dropped_count == 1);
    CHECK(t.dropped_mass == 1e-20);

    std::string path = "coeff_test_roundtrip.csv";
    t.save_csv(path, "# test\n");
    CoeffTable t2 = CoeffTable::load_csv(path);
    REQUIRE(t2.entries.size() == 1);
    CHECK(t2.entries.begin()->first == k1);
    CHECK(t2.entries.begin()->second.value == 1.0);
    // determinism: a second save is byte-identical
    t.save_csv(path + "2", "# test\n");
    std::ifstream f1(path), f2(path + "2");
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
    std::remove(path.c_str());
    std::remove((path + "2").c_str());
}
