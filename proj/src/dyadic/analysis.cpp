#include "dyadic/analysis.hpp"

#include <cblas.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

namespace dyt1 {

double HaarCoeffVector::norm2() const {
    double s = 0;
    for (const auto& [k, v] : c) s += v * v;
    return std::sqrt(s);
}

HaarCoeffVector& HaarCoeffVector::operator+=(const HaarCoeffVector& o) {
    for (const auto& [k, v] : o.c) c[k] += v;
    return *this;
}

ProductStep ProductStep::indicator(const DyadicCube& r1, const DyadicCube& r2, double v) {
    ProductStep f;
    f.terms.push_back({r1, r2, v});
    return f;
}

ProductStep ProductStep::haar_tensor(const HaarIndex& h1, const HaarIndex& h2, const Grid& g) {
    ProductStep f;
    auto halves = [&](const HaarIndex& h) {
        std::vector<std::pair<DyadicCube, double>> out;
        double v = std::pow(2.0, -0.5 * h.cube.level);
        if (h.eta & 1) {
            out.push_back({child(h.cube, g, 0), v});
            out.push_back({child(h.cube, g, 1), -v});
        } else {
            out.push_back({h.cube, v});
        }
        return out;
    };
    for (const auto& [c1, v1] : halves(h1))
        for (const auto& [c2, v2] : halves(h2)) f.terms.push_back({c1, c2, v1 * v2});
    return f;
}

namespace {
// exact <1_R, h_I> = |R| * (value of h_I on R), nonzero only for R strictly
// inside I
double indicator_coeff(const DyadicCube& R, const HaarIndex& I, const Grid& g) {
    if (!contains(I.cube, R, g) || R == I.cube) return 0.0;
    return cube_measure(R) * haar_average_on(I, R, g);
}
}  // namespace

HaarCoeffVector expand(const ProductStep& f, const Grid& g, int N) {
    HaarCoeffVector out;
    for (const auto& t : f.terms) {
        // only strict ancestors of the term rectangles contribute
        for (DyadicCube a1 = ancestor(t.r1, g, 1);; a1 = ancestor(a1, g, 1)) {
            if (a1.level > N) break;
            if (truncation_membership(a1, g, N)) {
                double c1 = indicator_coeff(t.r1, HaarIndex{a1, 1}, g);
                if (c1 != 0) {
                    for (DyadicCube a2 = ancestor(t.r2, g, 1);; a2 = ancestor(a2, g, 1)) {
                        if (a2.level > N) break;
                        if (truncation_membership(a2, g, N)) {
                            double c2 = indicator_coeff(t.r2, HaarIndex{a2, 1}, g);
                            if (c2 != 0)
                                out.c[{HaarIndex{a1, 1}, HaarIndex{a2, 1}}] += t.val * c1 * c2;
                        }
                        if (a2.level >= N) break;
                    }
                }
            }
            if (a1.level >= N) break;
        }
    }
    for (auto it = out.c.begin(); it != out.c.end();)
        it = it->second == 0.0 ? out.c.erase(it) : std::next(it);
    return out;
}

HaarCoeffVector project(const HaarCoeffVector& v, const Grid& g, int N, Side side) {
    HaarCoeffVector out;
    out.background = v.background;
    out.win_lo1 = v.win_lo1, out.win_hi1 = v.win_hi1;
    out.win_lo2 = v.win_lo2, out.win_hi2 = v.win_hi2;
    for (const auto& [k, val] : v.c) {
        bool in = truncation_membership(k.h1.cube, g, N) && truncation_membership(k.h2.cube, g, N);
        if ((side == Side::P) == in) out.c[k] = val;
    }
    return out;
}

namespace {
double haar_avg_or_zero(const HaarIndex& h, const DyadicCube& r, const Grid& g) {
    if (h.cube == r) return 0.0;
    if (contains(h.cube, r, g)) return haar_average_on(h, r, g);
    return 0.0;
}
}  // namespace

double average_on(const HaarCoeffVector& f, const DyadicCube& r1, const DyadicCube& r2,
                  const Grid& g) {
    double avg = 0;
    if (f.background != 0.0) {
        double lo1 = cube_lo(r1, g, 0).to_double(), hi1 = cube_hi(r1, g, 0).to_double();
        double lo2 = cube_lo(r2, g, 0).to_double(), hi2 = cube_hi(r2, g, 0).to_double();
        bool inside = lo1 >= f.win_lo1 && hi1 <= f.win_hi1 && lo2 >= f.win_lo2 && hi2 <= f.win_hi2;
        if (!inside)
            throw std::domain_error("average_on: rectangle leaves the represented span");
        avg += f.background;
    }
    for (const auto& [k, v] : f.c) {
        double a1 = haar_avg_or_zero(k.h1, r1, g);
        if (a1 == 0) continue;
        double a2 = haar_avg_or_zero(k.h2, r2, g);
        if (a2 == 0) continue;
        avg += v * a1 * a2;
    }
    return avg;
}

HaarCoeffVector paraproduct_apply(const HaarCoeffVector& b, const HaarCoeffVector& f,
                                  ParaVariant variant, const Grid& g, int out_N) {
    HaarCoeffVector out;
    if (variant == ParaVariant::Pi) {
        for (const auto& [R, bR] : b.c) {
            double avg = average_on(f, R.h1.cube, R.h2.cube, g);
            if (avg != 0) out.c[R] += bR * avg;
        }
        return out;
    }
    // PiStar: coefficients on strict-ancestor pairs within D(out_N)
    for (const auto& [R, bR] : b.c) {
        auto itf = f.c.find(R);
        if (itf == f.c.end() || itf->second == 0) continue;
        double w = bR * itf->second;
        for (DyadicCube a1 = ancestor(R.h1.cube, g, 1);; a1 = ancestor(a1, g, 1)) {
            if (a1.level > out_N) break;
            double m1 = truncation_membership(a1, g, out_N)
                            ? haar_average_on(HaarIndex{a1, 1}, R.h1.cube, g)
                            : 0.0;
            if (m1 != 0) {
                for (DyadicCube a2 = ancestor(R.h2.cube, g, 1);; a2 = ancestor(a2, g, 1)) {
                    if (a2.level > out_N) break;
                    if (truncation_membership(a2, g, out_N)) {
                        double m2 = haar_average_on(HaarIndex{a2, 1}, R.h2.cube, g);
                        if (m2 != 0) out.c[{HaarIndex{a1, 1}, HaarIndex{a2, 1}}] += w * m1 * m2;
                    }
                    if (a2.level >= out_N) break;
                }
            }
            if (a1.level >= out_N) break;
        }
    }
    return out;
}

OneParamVector paraproduct_apply_1p(const OneParamVector& b, const OneParamVector& f,
                                    ParaVariant variant, const Grid& g, int out_N) {
    OneParamVector out;
    if (variant == ParaVariant::Pi) {
        for (const auto& [I, bI] : b) {
            double avg = 0;
            for (const auto& [S, fS] : f) avg += fS * haar_avg_or_zero(S, I.cube, g);
            if (avg != 0) out[I] += bI * avg;
        }
        return out;
    }
    for (const auto& [I, bI] : b) {
        auto itf = f.find(I);
        if (itf == f.end()) continue;
        double w = bI * itf->second;
        for (DyadicCube a = ancestor(I.cube, g, 1);; a = ancestor(a, g, 1)) {
            if (a.level > out_N) break;
            if (truncation_membership(a, g, out_N)) {
                double m = haar_average_on(HaarIndex{a, 1}, I.cube, g);
                if (m != 0) out[HaarIndex{a, 1}] += w * m;
            }
            if (a.level >= out_N) break;
        }
    }
    return out;
}

// BMO proxy -------------------------------------------------------------------

namespace {
bool cube_le(const DyadicCube& inner, const DyadicCube& outer, const Grid& g) {
    return inner == outer || contains(outer, inner, g);
}
}  // namespace

BmoReport bmo_norm(const HaarCoeffVector& b, const Grid& g, int N,
                   const std::vector<RectUnion>& extra_families) {
    BmoReport rep;
    if (b.c.empty()) {
        rep.attained_at = "(empty)";
        return rep;
    }
    std::set<DyadicCube> side1, side2;
    for (const auto& [k, v] : b.c) {
        for (DyadicCube a = k.h1.cube;; a = ancestor(a, g, 1)) {
            if (a.level > N) break;
            if (truncation_membership(a, g, N)) side1.insert(a);
            if (a.level >= N) break;
        }
        for (DyadicCube a = k.h2.cube;; a = ancestor(a, g, 1)) {
            if (a.level > N) break;
            if (truncation_membership(a, g, N)) side2.insert(a);
            if (a.level >= N) break;
        }
    }
    double best = 0;
    std::string best_id = "(none)";
    for (const auto& A : side1)
        for (const auto& B : side2) {
            double s = 0;
            for (const auto& [k, v] : b.c)
                if (cube_le(k.h1.cube, A, g) && cube_le(k.h2.cube, B, g)) s += v * v;
            if (s == 0) continue;
            double ratio = s / (cube_measure(A) * cube_measure(B));
            if (ratio > best) {
                best = ratio;
                best_id = cube_to_string(A) + " x " + cube_to_string(B);
            }
        }
    // finite unions of rectangles from the caller's pool
    int fam_id = 0;
    for (const auto& fam : extra_families) {
        ++fam_id;
        if (fam.empty() || fam.size() > 4) continue;
        // measure of the union via inclusion-exclusion on product rectangles
        int n = static_cast<int>(fam.size());
        double measure = 0;
        for (int mask = 1; mask < (1 << n); ++mask) {
            double lo1 = -1e300, hi1 = 1e300, lo2 = -1e300, hi2 = 1e300;
            int bits = 0;
            for (int i = 0; i < n; ++i)
                if (mask & (1 << i)) {
                    ++bits;
                    lo1 = std::max(lo1, cube_lo(fam[i].first, g, 0).to_double());
                    hi1 = std::min(hi1, cube_hi(fam[i].first, g, 0).to_double());
                    lo2 = std::max(lo2, cube_lo(fam[i].second, g, 0).to_double());
                    hi2 = std::min(hi2, cube_hi(fam[i].second, g, 0).to_double());
                }
            double m = std::max(0.0, hi1 - lo1) * std::max(0.0, hi2 - lo2);
            measure += (bits % 2 ? 1.0 : -1.0) * m;
        }
        if (measure <= 0) continue;
        double s = 0;
        for (const auto& [k, v] : b.c) {
            // covered iff the rectangle's measure inside the union equals its own
            double r_lo1 = cube_lo(k.h1.cube, g, 0).to_double(),
                   r_hi1 = cube_hi(k.h1.cube, g, 0).to_double();
            double r_lo2 = cube_lo(k.h2.cube, g, 0).to_double(),
                   r_hi2 = cube_hi(k.h2.cube, g, 0).to_double();
            double inter = 0;
            for (int mask = 1; mask < (1 << n); ++mask) {
                double lo1 = r_lo1, hi1 = r_hi1, lo2 = r_lo2, hi2 = r_hi2;
                int bits = 0;
                for (int i = 0; i < n; ++i)
                    if (mask & (1 << i)) {
                        ++bits;
                        lo1 = std::max(lo1, cube_lo(fam[i].first, g, 0).to_double());
                        hi1 = std::min(hi1, cube_hi(fam[i].first, g, 0).to_double());
                        lo2 = std::max(lo2, cube_lo(fam[i].second, g, 0).to_double());
                        hi2 = std::min(hi2, cube_hi(fam[i].second, g, 0).to_double());
                    }
                inter += (bits % 2 ? 1.0 : -1.0) * std::max(0.0, hi1 - lo1) * std::max(0.0, hi2 - lo2);
            }
            double own = (r_hi1 - r_lo1) * (r_hi2 - r_lo2);
            if (inter >= own * (1 - 1e-12)) s += v * v;
        }
        double ratio = s / measure;
        if (ratio > best) {
            best = ratio;
            best_id = "union#" + std::to_string(fam_id);
        }
    }
    rep.norm = std::sqrt(best);
    rep.attained_at = best_id;
    return rep;
}

BmoReport cmo_tail(const HaarCoeffVector& b, const Grid& g, int N,
                   const std::vector<int>& schedule) {
    BmoReport rep = bmo_norm(b, g, N);
    for (int n : schedule) {
        HaarCoeffVector tail = project(b, g, n, Side::Pperp);
        rep.tails.push_back({n, bmo_norm(tail, g, N).norm});
    }
    return rep;
}

// truncated operator -----------------------------------------------------------

void TruncatedOperator::apply(const double* x, double* y) const {
    size_t R = nrows();
    std::fill(y, y + R, 0.0);
    if (!factor_mode) {
        for (const auto& [r, c, v] : triplets) {
            double s = row_scale.empty() ? 1.0 : row_scale[r];
            if (s != 0.0) y[r] += s * v * x[c];
        }
        return;
    }
    // y = vec(A1 X A2^T), X = x as (cols1 x cols2) row-major
    int c1 = A1.cols, c2 = A2.cols, r1 = A1.rows, r2 = A2.rows;
    Mat T1(r1, c2);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, r1, c2, c1, 1.0, A1.a.data(), c1, x,
                c2, 0.0, T1.a.data(), c2);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, r1, r2, c2, 1.0, T1.a.data(), c2,
                A2.a.data(), c2, 0.0, y, r2);
    if (!row_scale.empty())
        for (size_t i = 0; i < R; ++i) y[i] *= row_scale[i];
}

void TruncatedOperator::apply_t(const double* y, double* x) const {
    size_t C = ncols();
    std::fill(x, x + C, 0.0);
    if (!factor_mode) {
        for (const auto& [r, c, v] : triplets) {
            double s = row_scale.empty() ? 1.0 : row_scale[r];
            if (s != 0.0) x[c] += s * v * y[r];
        }
        return;
    }
    int c1 = A1.cols, c2 = A2.cols, r1 = A1.rows, r2 = A2.rows;
    std::vector<double> ys(y, y + nrows());
    if (!row_scale.empty())
        for (size_t i = 0; i < ys.size(); ++i) ys[i] *= row_scale[i];
    Mat T1(c1, r2);
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, c1, r2, r1, 1.0, A1.a.data(), c1,
                ys.data(), r2, 0.0, T1.a.data(), r2);
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, c1, c2, r2, 1.0, T1.a.data(), r2,
                A2.a.data(), c2, 0.0, x, c2);
}

TruncatedOperator TruncatedOperator::masked_rows(const std::vector<char>& keep) const {
    TruncatedOperator out = *this;
    out.row_scale.assign(nrows(), 1.0);
    for (size_t i = 0; i < nrows(); ++i) out.row_scale[i] = keep[i] ? 1.0 : 0.0;
    return out;
}

void TruncatedOperator::save_triplets(const std::string& path) const {
    if (factor_mode)
        throw std::runtime_error("save_triplets: factor-mode operators are not persisted");
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write '" + tmp + "'");
        char buf[256];
        for (const auto& [r, c, v] : triplets) {
            std::snprintf(buf, sizeof buf, "%s|%s %s|%s %.17g\n",
                          cube_to_string(rows[r].h1.cube).c_str(),
                          cube_to_string(rows[r].h2.cube).c_str(),
                          cube_to_string(cols[c].h1.cube).c_str(),
                          cube_to_string(cols[c].h2.cube).c_str(), v);
            out << buf;
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename temporary output to '" + path + "'");
}

Mat factor_matrix(const KernelModel& K, int param, const std::vector<DyadicCube>& cubes,
                  const Grid& g, const QuadSpec& spec, int threads, double screen_tol) {
    const Kernel1D& k = K.factor(param);
    int m = static_cast<int>(cubes.size());
    Mat A(m, m);
    if (k.kind == FactorKind::Zero) return A;

    std::vector<StepFn> steps(m);
    for (int i = 0; i < m; ++i) steps[i] = StepFn::haar(HaarIndex{cubes[i], 1}, g);

    auto work = [&](int t, int nt) {
        for (int r = t; r < m; r += nt) {
            for (int c = 0; c <= r; ++c) {
                if (c == r) {
                    A(r, c) = 0.0;  // odd factor: diagonal pairings vanish
                    continue;
                }
                double v;
                if (k.kind == FactorKind::Hilbert) {
                    v = hilbert_pairing_exact(steps[r], steps[c]);
                } else {
                    double lo_r = steps[r].cuts.front().to_double(),
                           hi_r = steps[r].cuts.back().to_double();
                    double lo_c = steps[c].cuts.front().to_double(),
                           hi_c = steps[c].cuts.back().to_double();
                    double sup = k.sup_abs(lo_r, hi_r, lo_c, hi_c);
                    double mass = sup * std::pow(2.0, 0.5 * (cubes[r].level + cubes[c].level));
                    if (mass < screen_tol) {
                        v = 0.0;
                    } else {
                        v = pairing_1d(k, steps[r], steps[c], spec).value;
                    }
                }
                A(r, c) = v;
                A(c, r) = -v;  // odd factor under argument swap
            }
        }
    };
    int nt = std::max(1, threads);
    if (nt == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nt; ++t) pool.emplace_back(work, t, nt);
        for (auto& th : pool) th.join();
    }
    return A;
}

namespace {
std::vector<ProductKey> product_keys(const std::vector<DyadicCube>& cubes) {
    std::vector<ProductKey> keys;
    keys.reserve(cubes.size() * cubes.size());
    for (const auto& a : cubes)
        for (const auto& b : cubes) keys.push_back({HaarIndex{a, 1}, HaarIndex{b, 1}});
    return keys;
}
}  // namespace

TruncatedOperator assemble_operator(const KernelModel& K, const Grid& g, int N,
                                    const QuadSpec& spec, const CoeffTable* table,
                                    size_t explicit_cap, int threads) {
    if (g.n != 1)
        throw std::invalid_argument("assemble_operator: one-dimensional parameters expected");
    TruncatedOperator op;
    std::vector<DyadicCube> cubes = truncation_family(g, N);
    op.A1 = factor_matrix(K, 0, cubes, g, spec, threads);
    bool same = K.f1.kind == K.f2.kind && K.f1.psi_a == K.f2.psi_a && K.f1.psi_b == K.f2.psi_b &&
                K.f1.gauss_c == K.f2.gauss_c;
    op.A2 = same ? op.A1 : factor_matrix(K, 1, cubes, g, spec, threads);
    op.rows = product_keys(cubes);
    op.cols = op.rows;
    op.m1 = op.m2 = static_cast<int>(cubes.size());
    size_t total = op.rows.size() * op.cols.size();
    if (total > explicit_cap) {
        op.factor_mode = true;
        return op;
    }
    op.factor_mode = false;
    int m = static_cast<int>(cubes.size());
    std::map<DyadicCube, int> pos;
    for (int i = 0; i < m; ++i) pos[cubes[i]] = i;
    for (int r1 = 0; r1 < m; ++r1)
        for (int r2 = 0; r2 < m; ++r2)
            for (int c1 = 0; c1 < m; ++c1)
                for (int c2 = 0; c2 < m; ++c2) {
                    double v = op.A1(r1, c1) * op.A2(r2, c2);
                    if (table) {
                        PairKey key = PairKey::canonical(HaarIndex{cubes[c1], 1},
                                                         HaarIndex{cubes[c2], 1},
                                                         HaarIndex{cubes[r1], 1},
                                                         HaarIndex{cubes[r2], 1});
                        auto it = table->entries.find(key);
                        if (it != table->entries.end()) v = it->second.value;
                    }
                    if (v != 0.0)
                        op.triplets.push_back({r1 * m + r2, c1 * m + c2, v});
                }
    // keep the factor matrices for diagnostics; triplets drive apply()
    return op;
}

TruncatedOperator paraproduct_operator(const HaarCoeffVector& b, const Grid& g, int M) {
    TruncatedOperator op;
    std::vector<DyadicCube> cubes = truncation_family(g, M);
    op.rows = product_keys(cubes);
    op.cols = op.rows;
    int m = static_cast<int>(cubes.size());
    op.m1 = op.m2 = m;
    std::map<DyadicCube, int> pos;
    for (int i = 0; i < m; ++i) pos[cubes[i]] = i;
    for (const auto& [R, bR] : b.c) {
        auto it1 = pos.find(R.h1.cube), it2 = pos.find(R.h2.cube);
        if (it1 == pos.end() || it2 == pos.end()) continue;
        int row = it1->second * m + it2->second;
        for (DyadicCube a1 = ancestor(R.h1.cube, g, 1);; a1 = ancestor(a1, g, 1)) {
            auto ia1 = pos.find(a1);
            if (ia1 != pos.end()) {
                double m1v = haar_average_on(HaarIndex{a1, 1}, R.h1.cube, g);
                for (DyadicCube a2 = ancestor(R.h2.cube, g, 1);; a2 = ancestor(a2, g, 1)) {
                    auto ia2 = pos.find(a2);
                    if (ia2 != pos.end()) {
                        double m2v = haar_average_on(HaarIndex{a2, 1}, R.h2.cube, g);
                        op.triplets.push_back(
                            {row, ia1->second * m + ia2->second, bR * m1v * m2v});
                    }
                    if (a2.level >= M + 1) break;
                }
            }
            if (a1.level >= M + 1) break;
        }
    }
    std::sort(op.triplets.begin(), op.triplets.end());
    return op;
}

double spectral_norm(const TruncatedOperator& A, double tol, int max_iter) {
    auto ap = [&A](const double* x, double* y) { A.apply(x, y); };
    auto apt = [&A](const double* y, double* x) { A.apply_t(y, x); };
    return power_sigma(ap, apt, A.nrows(), A.ncols(), tol, max_iter).sigma;
}

CompactnessCurve compactness_curve(const KernelModel& K, const Grid& g,
                                   const std::vector<int>& schedule, int M, const QuadSpec& spec,
                                   int threads) {
    for (int N : schedule)
        if (N > M) throw std::invalid_argument("compactness_curve: schedule exceeds M");
    CompactnessCurve out;
    std::vector<DyadicCube> cubes = truncation_family(g, M);
    int m = static_cast<int>(cubes.size());
    Mat A1 = factor_matrix(K, 0, cubes, g, spec, threads);
    bool same = K.f1.kind == K.f2.kind && K.f1.psi_a == K.f2.psi_a && K.f1.psi_b == K.f2.psi_b &&
                K.f1.gauss_c == K.f2.gauss_c;
    Mat A2 = same ? A1 : factor_matrix(K, 1, cubes, g, spec, threads);

    Mat V1 = gemm(A1, A1, true, false);
    std::vector<double> lam1;
    sym_eig(V1, lam1, true);
    Mat V2 = V1;
    std::vector<double> lam2 = lam1;
    if (!same) {
        V2 = gemm(A2, A2, true, false);
        sym_eig(V2, lam2, true);
    }
    double top1 = std::max(0.0, lam1.back()), top2 = std::max(0.0, lam2.back());
    out.sigma0 = std::sqrt(top1) * std::sqrt(top2);
    if (out.sigma0 == 0) {
        for (int N : schedule) out.points.push_back({N, 0.0});
        return out;
    }

    // start vector: all-ones transformed into the eigencoordinates
    std::vector<double> ones(m, 1.0), u1(m, 0.0), u2(m, 0.0);
    cblas_dgemv(CblasRowMajor, CblasTrans, m, m, 1.0, V1.a.data(), m, ones.data(), 1, 0.0,
                u1.data(), 1);
    cblas_dgemv(CblasRowMajor, CblasTrans, m, m, 1.0, V2.a.data(), m, ones.data(), 1, 0.0,
                u2.data(), 1);
    std::vector<double> start(static_cast<size_t>(m) * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) start[static_cast<size_t>(i) * m + j] = u1[i] * u2[j];

    for (int N : schedule) {
        std::vector<int> mask;
        for (int i = 0; i < m; ++i)
            if (truncation_membership(cubes[i], g, N)) mask.push_back(i);
        int q = static_cast<int>(mask.size());
        // E_i = (masked rows of A_i) * V_i
        Mat C1(q, m), C2(q, m);
        for (int r = 0; r < q; ++r)
            for (int c = 0; c < m; ++c) {
                C1(r, c) = A1(mask[r], c);
                C2(r, c) = A2(mask[r], c);
            }
        Mat E1 = gemm(C1, V1), E2 = gemm(C2, V2);
        Mat T1(q, m), T2(q, q), T3(m, q);
        auto apply = [&](const double* x, double* y) {
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, q, m, m, 1.0, E1.a.data(), m,
                        x, m, 0.0, T1.a.data(), m);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, q, q, m, 1.0, T1.a.data(), m,
                        E2.a.data(), m, 0.0, T2.a.data(), q);
            cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, m, q, q, 1.0, E1.a.data(), m,
                        T2.a.data(), q, 0.0, T3.a.data(), q);
            cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, m, q, -1.0, T3.a.data(), q,
                        E2.a.data(), m, 0.0, y, m);
            for (int i = 0; i < m; ++i) {
                double li = lam1[i];
                const double* xi = x + static_cast<size_t>(i) * m;
                double* yi = y + static_cast<size_t>(i) * m;
                for (int j = 0; j < m; ++j) yi[j] += li * xi[j] * lam2[j];
            }
        };
        double lmax = lanczos_max_eig(apply, static_cast<size_t>(m) * m, 60, 1e-10, start);
        out.points.push_back({N, std::sqrt(std::max(0.0, lmax))});
    }
    return out;
}

// limiting predicates ------------------------------------------------------------

namespace {
struct DoubleForms {
    const FuncTriple& T;
    double delta, theta;

    double F2s(double t) const {
        double sum = 0, w = 1.0, scale = 1.0, cap = T.F2.max_value();
        double decay = std::exp2(-theta);
        for (int k = 0; k < 4000; ++k) {
            sum += w * T.F2(t * scale);
            scale *= 0.5;
            w *= decay;
            if (w * cap < 1e-15 * (sum + 1e-300)) break;
        }
        return sum;
    }
    // join box given as (edge, distance of the box to the unit cube)
    double F3s(double edge, double dist) const {
        double sum = 0, w = 1.0;
        double decay = std::exp2(-delta);
        double e = edge, d = dist;
        for (int k = 0; k < 4000; ++k) {
            sum += w * T.F3(d / std::max(e, 1.0));
            if (w < 1e-16) break;
            w *= decay;
            d = std::max(0.0, d - e / 2);  // dilation halves the margin per side
            e *= 2;
        }
        return sum;
    }
};

struct SamplePair {
    DyadicCube I, J;
};

// J outside D(2N) in three regimes: tiny scale, huge scale, mid-scale far away
std::vector<SamplePair> predicate_samples(const Grid& g, int N, bool near_only) {
    std::vector<SamplePair> out;
    std::vector<int> ilevels = {-3, 0, 3};
    std::vector<long long> ipos = {0, 2, -5};
    auto add = [&](const DyadicCube& I, const DyadicCube& J) { out.push_back({I, J}); };
    // tiny J
    int lt = -2 * N - 1;
    for (long long mj : {0LL, 7LL}) {
        DyadicCube J = interval(lt, mj);
        add(interval(lt, mj + 1), J);       // touching, same scale
        add(interval(lt - 2, 4 * mj - 3), J);
        if (!near_only) add(interval(lt - 1, 2 * mj + 64), J);  // separated
    }
    // huge J
    int lh = 2 * N + 1;
    for (long long mj : {0LL, -1LL}) {
        DyadicCube J = interval(lh, mj);
        add(interval(lh - 1, 2 * mj - 1), J);       // adjacent, rs = 1/2
        add(interval(std::min(lh - 1, N + 1), mj >= 0 ? -1 : 1), J);
        if (!near_only) add(interval(lh, mj + 2), J);
    }
    // mid-scale far J: rd(J, 2^{2N} unit) > 2N
    for (int lj : {-N, 0, N}) {
        // lo > 2N*2^{2N} + 2^{2N-1}
        double need = 2.0 * N * std::ldexp(1.0, 2 * N) + std::ldexp(1.0, 2 * N - 1);
        long long mj = static_cast<long long>(std::ceil(need / std::ldexp(1.0, lj))) + 1;
        DyadicCube J = interval(lj, mj);
        add(interval(lj, mj + 1), J);
        add(interval(lj - 2, 4 * mj - 1), J);   // touching from the left
        if (!near_only)
            for (int li : ilevels)
                for (long long mi : ipos) add(interval(std::min(li, lj), mi), J);
    }
    // keep only pairs with l(I) <= l(J)
    std::vector<SamplePair> filtered;
    for (const auto& s : out)
        if (s.I.level <= s.J.level) filtered.push_back(s);
    return filtered;
}
}  // namespace

PredicateReport limiting_predicates(const KernelModel& K, const Grid& g, double eps, int N_cap) {
    PredicateReport rep;
    rep.eps = eps;
    DoubleForms forms{K.trip1, K.delta1, K.theta};

    auto search = [&](const std::string& name, auto&& pass_at) {
        PredicateReport::Part part;
        part.name = name;
        for (int N = 1; N <= N_cap; N = N < 8 ? N + 1 : N * 2) {
            double worst = pass_at(N);
            if (worst >= 0) {
                part.N0 = N;
                part.worst = worst;
                part.pass = true;
                break;
            }
        }
        rep.parts.push_back(part);
    };

    // (a) F(I,J) < eps or rd(I,J) >= 2 N^{1/8}
    search("separated", [&](int N) -> double {
        double margin = 1e300;
        for (const auto& s : predicate_samples(g, N, false)) {
            GeometryD geo = cube_geometry_double(s.I, s.J, g);
            double lI = std::ldexp(1.0, s.I.level);
            double F = K.trip1.F1(lI) * K.trip1.F2(geo.join_edge) * K.trip1.F3(geo.join_rd_unit);
            bool ok = F < eps || geo.rd >= 2.0 * std::pow(double(N), 0.125);
            if (!ok) return -1;
            margin = std::min(margin, std::max(eps - F, geo.rd - 2.0 * std::pow(double(N), 0.125)));
        }
        return margin;
    });

    // (b) Ftilde(I,J) < eps or rs <= 2^{-N}, for rd < 1 samples
    search("nearby", [&](int N) -> double {
        double margin = 1e300;
        for (const auto& s : predicate_samples(g, N, true)) {
            GeometryD geo = cube_geometry_double(s.I, s.J, g);
            if (!(geo.rd < 1.0)) continue;
            double lI = std::ldexp(1.0, s.I.level);
            double join_d = 0;
            {
                // distance of the join box to the unit cube, in doubles
                double lo = std::min(s.I.m[0] * lI, s.J.m[0] * std::ldexp(1.0, s.J.level));
                double hi = std::max((s.I.m[0] + 1) * lI,
                                     (s.J.m[0] + 1) * std::ldexp(1.0, s.J.level));
                join_d = std::max(0.0, std::max(lo - 0.5, -0.5 - hi));
            }
            double Ft = K.trip1.F1(lI) * forms.F2s(lI) * forms.F3s(geo.join_edge, join_d);
            bool ok = Ft < eps || geo.rs <= std::ldexp(1.0, -N);
            if (!ok) return -1;
            margin = std::min(margin, std::max(eps - Ft, std::ldexp(1.0, -N) - geo.rs));
        }
        return margin;
    });

    // (c) I in D(N), J outside D(2N), l(J) = 2^k l(I)  =>  |k| >= N or rd >= 2N
    search("scale-gap", [&](int N) -> double {
        for (int li = -N; li <= N; li += std::max(1, N)) {
            DyadicCube I = interval(li, 0);
            if (!truncation_membership(I, g, std::min(N, g.Lmax)) && std::abs(li) <= 12) continue;
            for (const auto& s : predicate_samples(g, N, false)) {
                if (s.J.level < li) continue;
                GeometryD geo = cube_geometry_double(I, s.J, g);
                int k = s.J.level - li;
                if (!(std::abs(k) >= N || geo.rd >= 2.0 * N)) return -1;
            }
        }
        return 0.0;
    });

    // (d) sup over I outside D(N) of Ftilde(I) and Fhat(I) tends to 0
    search("single-cube", [&](int N) -> double {
        double sup = 0;
        auto probe = [&](const DyadicCube& I) {
            double lI = std::ldexp(1.0, I.level);
            double lo = I.m[0] * lI, hi = lo + lI;
            double dist = std::max(0.0, std::max(lo - 0.5, -0.5 - hi));
            double ft = K.trip1.F1(lI) * forms.F2s(lI) * forms.F3s(lI, dist);
            // partial-bound part of Fhat, split over the cube and its children
            double rdu = dist / std::max(lI, 1.0);
            double fpart = K.pb1.G1(lI) * K.pb1.G2(lI) * K.pb1.G3(rdu);
            double fh = ft + 3.0 * fpart;  // children bounded by the same profile scale
            sup = std::max(sup, std::max(ft, fh));
        };
        for (long long mi : {0LL, 5LL, -9LL}) {
            probe(interval(-N - 1, mi));
            probe(interval(N + 1, mi));
        }
        {
            // mid-scale cubes pushed just outside the spatial window
            for (int li : {-N, 0, N}) {
                double need = double(N) * std::ldexp(1.0, N) + std::ldexp(1.0, N - 1);
                long long mi =
                    static_cast<long long>(std::ceil(need / std::ldexp(1.0, li))) + 1;
                probe(interval(li, mi));
            }
        }
        return sup < eps ? (eps - sup) : -1;
    });
    return rep;
}

MdtResult mdt_check(int k, double delta, double theta) {
    if (!(theta > 0 && theta < 1.0 / (1.0 + 2.0 * delta)))
        throw std::domain_error("mdt_check: theta out of range");
    MdtResult r{};
    long long top = 1LL << k;
    double s = 0;
    for (long long m = 1; m <= top; ++m) s += std::pow(double(m), -2.0 * delta);
    r.lhs = std::ldexp(s, -k);
    r.rhs = std::pow(2.0, -2.0 * k * theta * delta);
    return r;
}

}  // namespace dyt1
