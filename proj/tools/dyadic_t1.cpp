// Command-line front end: coefficient sweeps, compactness curves, condition
// verification, and BMO/CMO reports, all driven by a single config.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dyadic/config.hpp"

using namespace dyt1;
namespace fs = std::filesystem;

namespace {

constexpr int EXIT_PASS = 0;
constexpr int EXIT_PROPERTY = 1;
constexpr int EXIT_USAGE = 2;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// per-parameter configurations of the default sweep relative to a base cube
std::vector<HaarIndex> sweep_partners(const DyadicCube& J, const Grid& g,
                                      const RunConfig::Sweep& sw) {
    std::vector<HaarIndex> out;
    out.push_back({J, 1});  // equal
    for (int k = 0; k <= sw.kmax; ++k) {
        for (int j = 1; j <= sw.jmax; ++j) {
            auto fam = family_scale_sep(J, g, k, j);
            if (!fam.empty()) out.push_back({fam.front(), 1});
            if (fam.size() > 1) out.push_back({fam.back(), 1});
        }
        for (int m = 1; m <= std::min(sw.mmax, 1 << k); ++m) {
            auto fam = family_scale_near(J, g, k, m);
            if (!fam.empty()) out.push_back({fam.front(), 1});
        }
        if (k >= 1) {
            auto bd = boundary_descendants(J, g, k);
            auto gd = interior_descendants(J, g, k);
            if (!bd.empty()) out.push_back({bd.front(), 1});
            if (bd.size() > 1) out.push_back({bd[bd.size() / 2], 1});
            if (!gd.empty()) out.push_back({gd.front(), 1});
            if (gd.size() > 1) out.push_back({gd[gd.size() / 2], 1});
        }
    }
    return out;
}

int cmd_coeff(const RunConfig& cfg) {
    Grid g = Grid::standard(1, cfg.Lmax);
    KernelModel K = cfg.load_kernel();
    QuadSpec spec = cfg.quad;
    CoeffTable table;

    std::vector<DyadicCube> bases;
    for (int l : {cfg.sweep.lmin, 0, cfg.sweep.lmax}) bases.push_back(interval(l, 0));
    double max_ratio = 0;
    for (const auto& J1 : bases) {
        auto partners1 = sweep_partners(J1, g, cfg.sweep);
        auto partners2 = partners1;
        HaarIndex j1{J1, 1}, j2{J1, 1};
        for (const auto& i1 : partners1)
            for (const auto& i2 : partners2) {
                PairKey key = PairKey::canonical(i1, i2, j1, j2);
                ElementResult el = matrix_element(key, K, g, spec);
                CoeffEntry e;
                e.value = el.value.value;
                e.err_est = el.value.err_est;
                e.bound = el.bound;
                e.ratio = el.ratio;
                e.regime = el.regime.to_string();
                table.insert(key, e);
                max_ratio = std::max(max_ratio, el.ratio);
            }
    }
    table.apply_threshold();
    fs::create_directories(cfg.out);
    table.save_csv(cfg.out + "/coeff.csv", cfg.header("coeff"));
    std::printf("coeff: %zu entries, max regime ratio %.6g (cmax %.6g)\n", table.entries.size(),
                max_ratio, cfg.cmax);
    return max_ratio <= cfg.cmax ? EXIT_PASS : EXIT_PROPERTY;
}

int cmd_compactness(const RunConfig& cfg) {
    Grid g = Grid::standard(1, cfg.Lmax);
    QuadSpec spec = cfg.quad;
    std::vector<int> schedule;
    for (int n = 1; n <= cfg.N; ++n) schedule.push_back(n);
    fs::create_directories(cfg.out);
    bool pass = true;
    nlohmann::json summary;
    for (const std::string name : {std::string("compact_model"), std::string("tensor_hilbert")}) {
        KernelModel K = cfg.load_kernel_named(name);
        CompactnessCurve curve =
            compactness_curve(K, g, schedule, cfg.M, spec, cfg.effective_threads());
        std::string csv = cfg.header("compactness");
        csv += "N,sigma,sigma_ratio\n";
        nlohmann::json jc;
        jc["sigma0"] = curve.sigma0;
        double prev = 1e300;
        for (auto [N, s] : curve.points) {
            double ratio = curve.sigma0 > 0 ? s / curve.sigma0 : 0.0;
            csv += std::to_string(N) + "," + fmt(s) + "," + fmt(ratio) + "\n";
            jc["points"].push_back({{"N", N}, {"sigma", s}, {"ratio", ratio}});
            if (ratio > prev + 1e-9) pass = false;
            prev = ratio;
        }
        write_text_atomic(cfg.out + "/compactness_" + name + ".csv", csv);
        summary[name] = jc;
        std::printf("%s: sigma0=%.6g", name.c_str(), curve.sigma0);
        for (auto [N, s] : curve.points)
            std::printf("  N=%d ratio=%.4g", N, curve.sigma0 > 0 ? s / curve.sigma0 : 0.0);
        std::printf("\n");
    }
    write_text_atomic(cfg.out + "/compactness.json", summary.dump(2) + "\n");
    return pass ? EXIT_PASS : EXIT_PROPERTY;
}

nlohmann::json verify_counting(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    double Cij = 0, Cijk = 0, Cb = 0, Cidn = 0;
    bool exact = true;
    for (int n : {1, 2}) {
        Grid g = Grid::standard(n, cfg.Lmax);
        for (int lj : {0, 2}) {
            DyadicCube J = n == 1 ? interval(lj, 0) : square(lj, 0, 0);
            for (int k = 0; k <= 6; ++k) {
                auto d = descendants(J, g, k);
                auto b = boundary_descendants(J, g, k);
                auto gi = interior_descendants(J, g, k);
                if (static_cast<long long>(d.size()) != (1LL << (k * n))) exact = false;
                if (d.size() != b.size() + gi.size()) exact = false;
                Cb = std::max(Cb, b.size() / std::pow(2.0, k * (n - 0.5)));
                if (k <= 5 && n == 1) {
                    for (int jj = 1; jj <= 8; ++jj) {
                        auto f = family_scale_sep(J, g, k, jj);
                        Cij = std::max(Cij, double(f.size()) /
                                                (std::pow(2.0, k * n) * std::pow(jj, n - 1)));
                    }
                    size_t uni = 0;
                    for (int m = 1; m <= (1 << k); ++m)
                        uni += family_scale_near_up(J, g, k, m).size();
                    Cijk = std::max(Cijk, double(uni));
                } else if (k <= 4 && n == 2) {
                    for (int jj = 1; jj <= 6; ++jj) {
                        auto f = family_scale_sep(J, g, k, jj);
                        Cij = std::max(Cij, double(f.size()) /
                                                (std::pow(2.0, k * n) * std::pow(jj, n - 1)));
                    }
                }
            }
        }
        for (int N = 1; N <= 4; ++N) {
            auto fam = truncation_family(g, N);
            std::map<int, long long> per_level;
            for (const auto& c : fam) per_level[c.level]++;
            for (auto [l, cnt] : per_level)
                Cidn = std::max(Cidn, double(cnt) / (std::pow(double(N), n) *
                                                     std::pow(2.0, (N - l) * n)));
        }
    }
    j["descendant_count_exact"] = exact;
    j["C_scale_sep"] = Cij;
    j["C_scale_near_union"] = Cijk;
    j["C_boundary"] = Cb;
    j["C_family_scale"] = Cidn;
    bool ok = exact && Cij <= cfg.cmax && Cijk <= cfg.cmax && Cb <= cfg.cmax && Cidn <= cfg.cmax;
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

nlohmann::json verify_conditions(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    double cap = std::min(cfg.cond_cmax, cfg.cmax);
    KernelModel K = cfg.load_kernel();
    ConditionReport rep = verify_kernel_conditions(K, default_condition_sample(), cap);
    for (const auto& e : rep.entries)
        j["ratios"][e.name] = {{"max_ratio", e.max_ratio}, {"worst", e.worst}};
    j["fit1_exists"] = rep.fit1_exists;
    j["fit2_exists"] = rep.fit2_exists;
    j["pass"] = rep.pass;
    pass = pass && rep.pass;
    return j;
}

nlohmann::json verify_quantities(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    Grid g = Grid::standard(1, cfg.Lmax);
    KernelModel K = cfg.load_kernel();
    QuadSpec spec = cfg.quad;
    double worst = 0;
    std::string worst_id;
    auto track = [&](const char* which, const DyadicCube& I, const DyadicCube& J, Quantity q) {
        BoundForms forms = K.forms(0);
        IntegralResult r = quantity(q, I, J, g, forms, spec);
        double b = quantity_bound(q, I, J, g, forms);
        double ratio = b > 0 ? r.value / b : (std::abs(r.value) > 1e-14 ? INFINITY : 0.0);
        if (ratio > worst) {
            worst = ratio;
            worst_id = std::string(which) + " I=" + cube_to_string(I) + " J=" + cube_to_string(J);
        }
    };
    for (int lj = -2; lj <= 2; lj += 2) {
        DyadicCube J = interval(lj, 0);
        for (int k = 0; k <= std::min(5, cfg.sweep.kmax); ++k) {
            for (int jj = 1; jj <= std::min(6, cfg.sweep.jmax); ++jj) {
                auto fam = family_scale_sep(J, g, k, jj);
                if (!fam.empty()) track("P", fam.front(), J, Quantity::P);
            }
            for (int m = 1; m <= std::min(6, 1 << k); ++m) {
                auto fam = family_scale_near(J, g, k, m);
                if (!fam.empty()) {
                    track("Q", fam.front(), J, Quantity::Q);
                    track("QIJ", fam.front(), J, Quantity::QIJ);
                }
            }
            if (k >= 1)
                for (const auto& I : interior_descendants(J, g, k)) {
                    track("R", I, J, Quantity::R);
                    track("RIJ", I, J, Quantity::RIJ);
                    break;
                }
        }
    }
    j["max_ratio"] = worst;
    j["worst"] = worst_id;
    bool ok = worst <= cfg.cmax;
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

nlohmann::json verify_diag(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    Grid g = Grid::standard(1, cfg.Lmax);
    KernelModel K = cfg.load_kernel();
    double c1 = 0, c2 = 0;
    for (int l = -3; l <= 3; ++l) {
        DyadicCube I = interval(l, 0), J = interval(l, 1);
        DiagCheck d = diag_lemma_check(I, J, g, K.trip1.F2, 2.0, 1.5, cfg.quad);
        if (d.bound1 > 0) c1 = std::max(c1, d.I1.value / d.bound1);
        c2 = std::max(c2, d.I2.value / d.bound2);
    }
    j["C1"] = c1;
    j["C2"] = c2;
    bool ok = c1 <= cfg.cmax && c2 <= cfg.cmax;
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

nlohmann::json verify_predicates(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    KernelModel K = cfg.load_kernel();
    Grid g = Grid::standard(1, cfg.Lmax);
    PredicateReport rep = limiting_predicates(K, g, 0.05);
    bool ok = true;
    for (const auto& p : rep.parts) {
        j[p.name] = {{"N0", p.N0}, {"pass", p.pass}, {"worst_margin", p.worst}};
        ok = ok && p.pass;
    }
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

nlohmann::json verify_mdt(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    double worst = 0;
    for (double delta : {0.25, 0.5, 1.0}) {
        double theta = 0.4 / (1.0 + 2.0 * delta);
        for (int k = 0; k <= 20; ++k) {
            MdtResult r = mdt_check(k, delta, theta);
            worst = std::max(worst, r.lhs / r.rhs);
        }
    }
    j["C"] = worst;
    bool ok = worst <= cfg.cmax;
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

nlohmann::json verify_wcp(const RunConfig& cfg, bool& pass) {
    nlohmann::json j;
    Grid g = Grid::standard(1, cfg.Lmax);
    KernelModel K = cfg.load_kernel();
    double worst_wcp = 0, worst_partial = 0;
    for (int l = -2; l <= 2; l += 2)
        for (long long m : {0LL, 3LL}) {
            DyadicCube I1 = interval(l, m), I2 = interval(l, -m - 1);
            WcpValues w = wcp_and_diag_values(I1, I2, K, g, cfg.quad);
            double tot = std::abs(w.t11.value) + std::abs(w.d1a.value) + std::abs(w.da1.value) +
                         std::abs(w.a11.value) + std::abs(w.a12.value);
            if (w.bound > 0) worst_wcp = std::max(worst_wcp, tot / w.bound);
            else if (tot > 1e-10) worst_wcp = INFINITY;
            double csum = std::abs(partial_constant(K, 1, I2, TestTag::Indicator,
                                                    TestTag::Indicator, g, cfg.quad)
                                       .value) +
                          std::abs(partial_constant(K, 1, I2, TestTag::Indicator, TestTag::Bump,
                                                    g, cfg.quad)
                                       .value) +
                          std::abs(partial_constant(K, 1, I2, TestTag::Bump, TestTag::Indicator,
                                                    g, cfg.quad)
                                       .value);
            double pb = K.pb2.eval(I2, g) * cube_measure(I2);
            if (pb > 0) worst_partial = std::max(worst_partial, csum / pb);
            else if (csum > 1e-10) worst_partial = INFINITY;
        }
    j["C_wcp"] = worst_wcp;
    j["C_partial"] = worst_partial;
    bool ok = worst_wcp <= cfg.cmax && worst_partial <= cfg.cmax;
    j["pass"] = ok;
    pass = pass && ok;
    return j;
}

int cmd_verify(const RunConfig& cfg) {
    nlohmann::json rep;
    rep["config"] = nlohmann::json::parse(cfg.canonical_json());
    bool pass = true;
    auto want = [&](const char* s) { return cfg.only.empty() || cfg.only == s; };
    if (want("counting")) rep["counting"] = verify_counting(cfg, pass);
    if (want("conditions")) rep["conditions"] = verify_conditions(cfg, pass);
    if (want("quantities")) rep["quantities"] = verify_quantities(cfg, pass);
    if (want("diag")) rep["diag"] = verify_diag(cfg, pass);
    if (want("predicates")) rep["predicates"] = verify_predicates(cfg, pass);
    if (want("mdt")) rep["mdt"] = verify_mdt(cfg, pass);
    if (want("wcp")) rep["wcp"] = verify_wcp(cfg, pass);
    rep["pass"] = pass;
    fs::create_directories(cfg.out);
    write_text_atomic(cfg.out + "/verify.json", rep.dump(2) + "\n");
    std::printf("%s\n", rep.dump(2).c_str());
    return pass ? EXIT_PASS : EXIT_PROPERTY;
}

int cmd_bmo(const RunConfig& cfg, const std::string& symbol_src) {
    Grid g = Grid::standard(1, cfg.Lmax);
    KernelModel K = cfg.load_kernel();
    HaarCoeffVector b;
    if (symbol_src == "single") {
        b.c[{HaarIndex{interval(0, 0), 1}, HaarIndex{interval(0, 0), 1}}] = 1.0;
    } else if (symbol_src == "empty") {
        // leave empty
    } else if (symbol_src.rfind("pair:", 0) == 0) {
        long long off = std::atoll(symbol_src.c_str() + 5);
        HaarIndex I1{interval(-1, 0), 1}, J1{interval(0, off), 1};
        SymbolCoeffs sc =
            paraproduct_symbol(K, I1, J1, SymbolVariant::HaarPair, g, cfg.N, cfg.quad);
        for (const auto& [h2, v] : sc.coeffs)
            if (v.value != 0) b.c[{I1, h2}] = v.value;
    } else {
        std::fprintf(stderr, "unknown symbol source '%s'\n", symbol_src.c_str());
        return EXIT_USAGE;
    }
    std::vector<int> schedule;
    for (int n = 1; n <= cfg.N; ++n) schedule.push_back(n);
    BmoReport rep = cmo_tail(b, g, cfg.N, schedule);
    fs::create_directories(cfg.out);
    std::string csv = cfg.header("bmo");
    csv += "what,value\n";
    csv += "norm," + fmt(rep.norm) + "\n";
    for (auto [n, t] : rep.tails) csv += "tail_N" + std::to_string(n) + "," + fmt(t) + "\n";
    write_text_atomic(cfg.out + "/bmo.csv", csv);
    nlohmann::json j;
    j["norm"] = rep.norm;
    j["attained_at"] = rep.attained_at;
    for (auto [n, t] : rep.tails) j["tails"].push_back({{"N", n}, {"value", t}});
    write_text_atomic(cfg.out + "/bmo.json", j.dump(2) + "\n");
    std::printf("bmo norm=%.6g attained at %s\n", rep.norm, rep.attained_at.c_str());
    return EXIT_PASS;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"dyadic bi-parameter singular-integral laboratory"};
    app.require_subcommand(1);
    app.add_option("--kernel", cfg.kernel, "builtin kernel name or config file");
    app.add_option("--n1", cfg.n1, "dimension of the first parameter");
    app.add_option("--n2", cfg.n2, "dimension of the second parameter");
    app.add_option("-N", cfg.N, "truncation index");
    app.add_option("-M", cfg.M, "operator truncation index");
    app.add_option("--quad-tol", cfg.quad.tol, "quadrature tolerance");
    app.add_option("--quad-order", cfg.quad.order, "Gauss-Legendre order");
    app.add_option("--quad-depth", cfg.quad.max_depth, "max refinement depth");
    app.add_option("--sweep", cfg.sweep.kmax, "sweep depth (k range)");
    app.add_option("--out", cfg.out, "output directory");
    app.add_option("--seed", cfg.seed, "random fixture seed");
    app.add_option("--cmax", cfg.cmax, "empirical constant cap");
    app.add_option("--only", cfg.only, "restrict verify to one section");
    app.add_option("--theta", cfg.theta, "auxiliary exponent in smoothed bounds");
    app.add_option("--threads", cfg.threads, "worker threads (0 = env/hardware)");

    auto* coeff = app.add_subcommand("coeff", "matrix elements, bounds and ratios");
    auto* compact = app.add_subcommand("compactness", "projection-tail curves for both kernels");
    auto* verify = app.add_subcommand("verify", "condition/counting/lemma report");
    auto* bmo = app.add_subcommand("bmo", "BMO/CMO norms of a symbol");
    std::string symbol_src = "single";
    bmo->add_option("--symbol", symbol_src, "single | empty | pair:<offset>");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? EXIT_PASS : EXIT_USAGE;
    }

    try {
        cfg.validate();
        set_blas_threads(cfg.effective_threads());
        if (coeff->parsed()) return cmd_coeff(cfg);
        if (compact->parsed()) return cmd_compactness(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
        if (bmo->parsed()) return cmd_bmo(cfg, symbol_src);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return EXIT_USAGE;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_USAGE;
    }
    return EXIT_USAGE;
}
