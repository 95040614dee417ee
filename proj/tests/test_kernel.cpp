#include "doctest.h"

#include <cmath>

#include "dyadic/kernel.hpp"

using namespace dyt1;

TEST_CASE("tensor hilbert kernel values") {
    KernelModel K = KernelModel::builtin("tensor_hilbert");
    for (double x1 : {0.1, 2.0})
        for (double y1 : {-1.0, 0.7})
            for (double x2 : {0.3, -0.9})
                for (double y2 : {1.4, 5.0}) {
                    double v = K.eval(x1, x2, y1, y2);
                    CHECK(std::abs(v) * std::abs(x1 - y1) * std::abs(x2 - y2) ==
                          doctest::Approx(1.0).epsilon(1e-12));
                }
    CHECK_THROWS(K.eval(1.0, 0.0, 1.0, 2.0, 1e-9));
}

TEST_CASE("compact model: odd, smooth, explicit value") {
    KernelModel K = KernelModel::builtin("compact_model");
    CHECK(K.f1.eval(0.3, 1.2) == doctest::Approx(-K.f1.eval(1.2, 0.3)).epsilon(1e-14));
    // value at x=(0,0), y=(1,1): factor = (0-1)/(1+1) * exp(-1/4), squared
    double f = -0.5 * std::exp(-0.25);
    CHECK(K.eval(0.0, 0.0, 1.0, 1.0) == doctest::Approx(f * f).epsilon(1e-14));
    // sup_abs never undershoots on sampled boxes
    for (double lo : {-2.0, 0.25})
        for (double w : {0.5, 2.0}) {
            double sup = K.f1.sup_abs(lo, lo + w, lo + w + 0.25, lo + 2 * w + 0.25);
            double seen = 0;
            for (int i = 0; i <= 10; ++i)
                for (int j = 0; j <= 10; ++j)
                    seen = std::max(seen, std::abs(K.f1.eval(lo + w * i / 10.0,
                                                             lo + w + 0.25 + w * j / 10.0)));
            CHECK(sup >= seen * (1 - 1e-12));
        }
}

TEST_CASE("size and holder bounds") {
    KernelModel K = KernelModel::builtin("tensor_hilbert");  // constant F triple
    std::array<double, 2> x{1.0, 2.0}, y{0.0, 0.0};
    CHECK(bound_size(K, x, y) == doctest::Approx(1.0 / (1.0 * 2.0)).epsilon(1e-12));
    // zero displacement makes the Hoelder factor vanish
    CondVariant v{DispMode::DispX, DispMode::Size};
    CHECK(bound_holder(K, x, y, x, y, v) == 0.0);
    // displacement beyond half the separation errors out
    std::array<double, 2> xp{x[0] - 0.9, x[1]};
    CHECK_THROWS(bound_holder(K, x, y, xp, y, v));
}

TEST_CASE("condition sweep: both built-ins pass at the pinned cap") {
    for (const char* name : {"tensor_hilbert", "compact_model"}) {
        KernelModel K = KernelModel::builtin(name);
        ConditionReport rep = verify_kernel_conditions(K, default_condition_sample(), 10.0);
        for (const auto& e : rep.entries) {
            INFO(name, " ", e.name, " ratio ", e.max_ratio, " at ", e.worst);
            CHECK(e.max_ratio <= 10.0);
        }
        CHECK(rep.pass);
    }
    KernelModel Z = KernelModel::builtin("zero");
    ConditionReport rz = verify_kernel_conditions(Z, default_condition_sample(), 10.0);
    for (const auto& e : rz.entries) CHECK(e.max_ratio == 0.0);
}

TEST_CASE("vanishing-triple fit exists only for the compact model") {
    CHECK(functriple_fit_exists(KernelModel::builtin("compact_model"), 0));
    CHECK(functriple_fit_exists(KernelModel::builtin("compact_model"), 1));
    CHECK_FALSE(functriple_fit_exists(KernelModel::builtin("tensor_hilbert"), 0));
    CHECK_FALSE(functriple_fit_exists(KernelModel::builtin("tensor_hilbert"), 1));
}

TEST_CASE("kernel config parsing") {
    KernelModel K = KernelModel::from_json_text(
        R"({"kind":"custom_separable","factor1":{"type":"hilbert"},)"
        R"("factor2":{"type":"compact","gaussian_sigma":1.0},"delta1":0.5})");
    CHECK(K.f1.kind == FactorKind::Hilbert);
    CHECK(K.f2.kind == FactorKind::CompactOdd);
    CHECK(K.f2.gauss_c == doctest::Approx(0.5));
    CHECK(K.delta1 == 0.5);
    CHECK_THROWS(KernelModel::from_json_text(R"({"kind":"custom_separable"})"));
    CHECK_THROWS(KernelModel::builtin("nope"));
    CHECK_THROWS(KernelModel::from_json_file("/nonexistent/path.json"));
    KernelModel C = KernelModel::from_json_text(R"({"kind":"compact_model","theta":0.2})");
    CHECK(C.theta == 0.2);
}
