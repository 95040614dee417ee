#include "dyadic/quad.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <mutex>
#include <stdexcept>

namespace dyt1 {

// Gauss-Legendre ------------------------------------------------------------

namespace {
GLRule make_gl(int p) {
    GLRule r;
    r.x.resize(p);
    r.w.resize(p);
    for (int i = 0; i < p; ++i) {
        // Newton iteration on P_p, starting from the Chebyshev guess
        double x = std::cos(M_PI * (i + 0.75) / (p + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= p; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = p * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= p; ++k) {
            double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = p * (x * p1 - p0) / (x * x - 1.0);
        r.x[p - 1 - i] = 0.5 * (x + 1.0);
        r.w[p - 1 - i] = 0.5 / ((1.0 - x * x) * dp * dp) * 2.0;
    }
    return r;
}
}  // namespace

const GLRule& gl_rule(int p) {
    static std::map<int, GLRule> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, make_gl(p)).first;
    return it->second;
}

// adaptive box quadrature ----------------------------------------------------

namespace {
double panel(const IntegrandN& f, int dim, const double* lo, const double* hi, const GLRule& r,
             long long& evals) {
    int p = static_cast<int>(r.x.size());
    double len[4], sum = 0;
    for (int d = 0; d < dim; ++d) len[d] = hi[d] - lo[d];
    int idx[4] = {0, 0, 0, 0};
    int total = 1;
    for (int d = 0; d < dim; ++d) total *= p;
    double pt[4];
    for (int t = 0; t < total; ++t) {
        int rem = t;
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            idx[d] = rem % p;
            rem /= p;
            pt[d] = lo[d] + len[d] * r.x[idx[d]];
            w *= r.w[idx[d]] * len[d];
        }
        sum += w * f(pt);
    }
    evals += total;
    return sum;
}

struct HeapCell {
    double lo[4], hi[4];
    double value;  // child-panel sum
    double err;
    int depth;
    long long id;  // insertion order, deterministic tie break
    bool operator<(const HeapCell& o) const {
        if (err != o.err) return err < o.err;
        return id > o.id;
    }
};

// globally adaptive tensor quadrature over a list of seed cells: refine the
// worst cell until the summed error estimate clears the tolerance
IntegralResult adapt_cells(const IntegrandN& f, int dim, std::vector<HeapCell> seeds, double tol,
                           const QuadSpec& spec) {
    const GLRule& r = gl_rule(spec.order);
    IntegralResult out;
    std::priority_queue<HeapCell> heap;
    long long next_id = 0;
    double total_value = 0, total_err = 0, stuck_err = 0;

    auto eval_cell = [&](HeapCell& c) {
        double q1 = panel(f, dim, c.lo, c.hi, r, out.n_evals);
        double clo[4], chi[4], q2 = 0;
        int parts = 1 << dim;
        for (int s = 0; s < parts; ++s) {
            for (int d = 0; d < dim; ++d) {
                double mid = 0.5 * (c.lo[d] + c.hi[d]);
                if ((s >> d) & 1) {
                    clo[d] = mid;
                    chi[d] = c.hi[d];
                } else {
                    clo[d] = c.lo[d];
                    chi[d] = mid;
                }
            }
            q2 += panel(f, dim, clo, chi, r, out.n_evals);
        }
        c.value = q2;
        c.err = std::abs(q2 - q1);
        c.id = next_id++;
    };

    for (auto& s : seeds) {
        bool degenerate = false;
        for (int d = 0; d < dim; ++d)
            if (!(s.hi[d] > s.lo[d])) degenerate = true;
        if (degenerate) continue;
        s.depth = 0;
        eval_cell(s);
        total_value += s.value;
        total_err += s.err;
        heap.push(s);
    }

    long long max_splits = dim <= 2 ? 150000 : 20000;
    while (total_err - stuck_err > std::max(tol, 1e-15 * std::abs(total_value)) &&
           max_splits-- > 0 && !heap.empty()) {
        HeapCell top = heap.top();
        heap.pop();
        if (top.depth >= spec.max_depth || top.err <= 1e-16 * std::abs(total_value)) {
            stuck_err += top.err;  // cannot or need not refine further
            continue;
        }
        total_value -= top.value;
        total_err -= top.err;
        int parts = 1 << dim;
        for (int s = 0; s < parts; ++s) {
            HeapCell child;
            for (int d = 0; d < dim; ++d) {
                double mid = 0.5 * (top.lo[d] + top.hi[d]);
                child.lo[d] = ((s >> d) & 1) ? mid : top.lo[d];
                child.hi[d] = ((s >> d) & 1) ? top.hi[d] : mid;
            }
            child.depth = top.depth + 1;
            eval_cell(child);
            total_value += child.value;
            total_err += child.err;
            heap.push(child);
        }
    }
    out.value = total_value;
    out.err_est = total_err;
    out.converged = total_err <= std::max(tol, 1e-12 * std::abs(total_value));
    return out;
}
}  // namespace

IntegralResult adapt_box(const IntegrandN& f, int dim, const double* lo, const double* hi,
                         double tol, const QuadSpec& spec, int depth) {
    if (dim < 1 || dim > 4) throw std::invalid_argument("adapt_box: dim must be in [1,4]");
    (void)depth;
    HeapCell seed{};
    for (int d = 0; d < dim; ++d) {
        seed.lo[d] = lo[d];
        seed.hi[d] = hi[d];
    }
    return adapt_cells(f, dim, {seed}, tol, spec);
}

// pair integration with face grading -----------------------------------------

namespace {
struct Strip {
    double lo, hi;
};

// geometric strips of [a,b] graded toward the endpoint `toward`; stops when
// the strip width underflows the coordinate resolution
std::vector<Strip> graded_strips(double a, double b, bool toward_hi, double sigma, int J) {
    std::vector<Strip> out;
    double L = b - a;
    double prev = L;
    double res = 4e-15 * std::max({std::abs(a), std::abs(b), 1e-300});
    for (int j = 1; j <= J; ++j) {
        double cur = L * std::pow(sigma, j);
        if (prev - cur <= res) break;
        if (toward_hi)
            out.push_back({b - prev, b - cur});
        else
            out.push_back({a + cur, a + prev});
        prev = cur;
    }
    return out;  // remainder of thickness L*sigma^{#strips} next to the face is excluded
}

IntegralResult integrate_regular_pair(const IntegrandN& f, const PairDomain& dom, double tol,
                                      const QuadSpec& spec) {
    int n = dom.n;
    double lo[4], hi[4];
    for (int c = 0; c < n; ++c) {
        lo[c] = dom.xlo[c];
        hi[c] = dom.xhi[c];
        lo[n + c] = dom.ylo[c];
        hi[n + c] = dom.yhi[c];
    }
    return adapt_box(f, 2 * n, lo, hi, tol, spec);
}

HeapCell pair_cell(const PairDomain& dom) {
    HeapCell c{};
    for (int i = 0; i < dom.n; ++i) {
        c.lo[i] = dom.xlo[i];
        c.hi[i] = dom.xhi[i];
        c.lo[dom.n + i] = dom.ylo[i];
        c.hi[dom.n + i] = dom.yhi[i];
    }
    return c;
}
}  // namespace

IntegralResult integrate_pair(const IntegrandN& f, const PairDomain& dom, double gamma,
                              double tol, const QuadSpec& spec) {
    int n = dom.n;
    // closed-box gap per coordinate
    int touch_coord = -1;
    bool x_below = true;
    for (int c = 0; c < n; ++c) {
        double gap = std::max(dom.ylo[c] - dom.xhi[c], dom.xlo[c] - dom.yhi[c]);
        if (gap > 0) return integrate_regular_pair(f, dom, tol, spec);  // separated
        if (gap == 0 && touch_coord < 0) {
            touch_coord = c;
            x_below = dom.xhi[c] == dom.ylo[c];
        }
    }
    if (touch_coord < 0)
        throw std::invalid_argument("integrate_pair: overlapping domains are not supported");

    int c = touch_coord;
    double Lx = dom.xhi[c] - dom.xlo[c], Ly = dom.yhi[c] - dom.ylo[c];
    double L = std::max(Lx, Ly);
    // probe the singular strength A ~ sup |f| |x-y|^gamma near the face
    double v = x_below ? dom.xhi[c] : dom.xlo[c];
    double A = 0;
    {
        double pt[4];
        for (int pr = 1; pr <= 8; ++pr) {
            double d = L * std::pow(spec.sigma, pr);
            for (int cc = 0; cc < n; ++cc) {
                pt[cc] = 0.5 * (dom.xlo[cc] + dom.xhi[cc]);
                pt[n + cc] = 0.5 * (dom.ylo[cc] + dom.yhi[cc]);
            }
            pt[c] = x_below ? v - d : v + d;
            pt[n + c] = x_below ? v + d : v - d;
            A = std::max(A, std::abs(f(pt)) * std::pow(2 * d, gamma));
        }
    }
    // choose the shell count so the corner remainder is below tol/4
    int J = 4;
    auto rem_bound = [&](int JJ) {
        double h = L * std::pow(spec.sigma, JJ);
        double vol_exp = 2.0 * n - gamma;
        double logfac = 2.0 + std::max(0.0, std::log(L / h));
        return A * std::pow(h, vol_exp) * logfac * std::pow(4.0, n);
    };
    while (J < 64 && rem_bound(J) > tol / 4) ++J;
    bool rem_ok = rem_bound(J) <= tol / 4;

    auto xs = graded_strips(dom.xlo[c], dom.xhi[c], x_below, spec.sigma, J);
    auto ys = graded_strips(dom.ylo[c], dom.yhi[c], !x_below, spec.sigma, J);
    std::vector<HeapCell> seeds;
    seeds.reserve(xs.size() * ys.size());
    for (const auto& sx : xs)
        for (const auto& sy : ys) {
            PairDomain cell = dom;
            cell.xlo[c] = sx.lo;
            cell.xhi[c] = sx.hi;
            cell.ylo[c] = sy.lo;
            cell.yhi[c] = sy.hi;
            seeds.push_back(pair_cell(cell));
        }
    IntegralResult out = adapt_cells(f, 2 * n, std::move(seeds), tol / 2, spec);
    // remainder slabs adjacent to the face (x-remainder against all of Y and
    // the graded X against the y-remainder) are estimated, not integrated;
    // the strip count may have been clipped by the coordinate resolution
    int J_used = static_cast<int>(std::min(xs.size(), ys.size()));
    double rem = rem_bound(J_used);
    out.err_est += rem;
    out.converged = out.converged && rem <= tol / 2;
    (void)rem_ok;
    return out;
}

// step functions --------------------------------------------------------------

StepFn StepFn::haar(const HaarIndex& h, const Grid& g) {
    if (h.cube.n != 1) throw std::invalid_argument("StepFn::haar: one-dimensional cubes only");
    StepFn s;
    double v = std::pow(2.0, -0.5 * h.cube.level);
    Dyadic lo = cube_lo(h.cube, g, 0);
    if (h.eta & 1) {
        s.cuts = {lo, lo + Dyadic::pow2(h.cube.level - 1), lo + Dyadic::pow2(h.cube.level)};
        s.vals = {0.0, v, -v, 0.0};
    } else {
        s.cuts = {lo, lo + Dyadic::pow2(h.cube.level)};
        s.vals = {0.0, v, 0.0};
    }
    return s;
}

StepFn StepFn::indicator(const DyadicCube& c, const Grid& g, double val) {
    if (c.n != 1) throw std::invalid_argument("StepFn::indicator: one-dimensional cubes only");
    StepFn s;
    Dyadic lo = cube_lo(c, g, 0);
    s.cuts = {lo, lo + Dyadic::pow2(c.level)};
    s.vals = {0.0, val, 0.0};
    return s;
}

StepFn StepFn::bump(const DyadicCube& c, const Grid& g) {
    if (c.n != 1) throw std::invalid_argument("StepFn::bump: one-dimensional cubes only");
    StepFn s;
    Dyadic lo = cube_lo(c, g, 0);
    s.cuts = {lo, lo + Dyadic::pow2(c.level - 1), lo + Dyadic::pow2(c.level)};
    s.vals = {0.0, 1.0, -1.0, 0.0};
    return s;
}

StepFn StepFn::phi(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    if (I.n != 1) throw std::invalid_argument("StepFn::phi: one-dimensional cubes only");
    if (!contains(J, I, g) || I == J)
        throw std::invalid_argument("StepFn::phi: need I strictly inside J");
    double v = std::pow(2.0, -0.5 * J.level);
    DyadicCube JI = ancestor(I, g, J.level - 1 - I.level);  // child of J containing I
    double c = child_position(JI, g, 0) == 0 ? v : -v;
    Dyadic lo = cube_lo(J, g, 0), mid = lo + Dyadic::pow2(J.level - 1),
           hi = lo + Dyadic::pow2(J.level);
    StepFn s;
    s.cuts = {lo, mid, hi};
    if (child_position(JI, g, 0) == 0)
        s.vals = {-c, 0.0, -v - c, -c};
    else
        s.vals = {-c, v - c, 0.0, -c};
    return s;
}

StepFn StepFn::one() {
    StepFn s;
    s.vals = {1.0};
    return s;
}

double StepFn::sup_abs() const {
    double m = 0;
    for (double v : vals) m = std::max(m, std::abs(v));
    return m;
}

namespace {
double step_value(const StepFn& s, const Dyadic& a, const Dyadic& b) {
    // value on the elementary interval (a, b): locate by the left endpoint
    size_t i = 0;
    while (i < s.cuts.size() && s.cuts[i] <= a) ++i;
    (void)b;
    return s.vals[i];
}
}  // namespace

double hilbert_pairing_exact(const StepFn& gx, const StepFn& fy) {
    if (!gx.compact_support() || !fy.compact_support())
        throw std::invalid_argument("hilbert_pairing_exact: compact supports required");
    auto psi = [](double u) { return u == 0.0 ? 0.0 : u * std::log(std::abs(u)) - u; };
    double total = 0;
    for (size_t i = 0; i + 1 < gx.cuts.size(); ++i) {
        double gv = gx.vals[i + 1];
        if (gv == 0) continue;
        double ax = gx.cuts[i].to_double(), bx = gx.cuts[i + 1].to_double();
        for (size_t j = 0; j + 1 < fy.cuts.size(); ++j) {
            double fv = fy.vals[j + 1];
            if (fv == 0) continue;
            double ay = fy.cuts[j].to_double(), by = fy.cuts[j + 1].to_double();
            double block = psi(bx - ay) - psi(bx - by) - psi(ax - ay) + psi(ax - by);
            total += gv * fv * block;
        }
    }
    return total;
}

IntegralResult pairing_1d(const Kernel1D& k, const StepFn& gx, const StepFn& fy,
                          const QuadSpec& spec) {
    IntegralResult out;
    if (k.kind == FactorKind::Zero) return out;
    if (!fy.compact_support())
        throw std::invalid_argument("pairing_1d: the y-side test must have compact support");
    if (fy.cuts.empty()) return out;

    // merged elementary partition
    std::vector<Dyadic> cuts = gx.cuts;
    cuts.insert(cuts.end(), fy.cuts.begin(), fy.cuts.end());
    std::sort(cuts.begin(), cuts.end(), [](const Dyadic& a, const Dyadic& b) { return a < b; });
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    struct Cell {
        double lo, hi, val;
        Dyadic dlo, dhi;
    };
    std::vector<Cell> xc, yc;
    for (size_t i = 0; i + 1 < cuts.size(); ++i) {
        double lo = cuts[i].to_double(), hi = cuts[i + 1].to_double();
        double gv = step_value(gx, cuts[i], cuts[i + 1]);
        double fv = step_value(fy, cuts[i], cuts[i + 1]);
        if (gv != 0) xc.push_back({lo, hi, gv, cuts[i], cuts[i + 1]});
        if (fv != 0) yc.push_back({lo, hi, fv, cuts[i], cuts[i + 1]});
    }

    double fy_sup = fy.sup_abs();
    size_t n_cells = std::max<size_t>(1, xc.size() * yc.size());
    double cell_tol = spec.tol / (2.0 * n_cells);

    for (const auto& cx : xc)
        for (const auto& cy : yc) {
            if (cx.dlo == cy.dlo && cx.dhi == cy.dhi) {
                if (!k.odd())
                    throw std::domain_error("pairing_1d: overlap requires an odd factor");
                continue;  // identical cell: exact principal-value cancellation
            }
            PairDomain dom;
            dom.n = 1;
            dom.xlo[0] = cx.lo;
            dom.xhi[0] = cx.hi;
            dom.ylo[0] = cy.lo;
            dom.yhi[0] = cy.hi;
            double cgf = cx.val * cy.val;
            IntegrandN f = [&k](const double* p) { return k.eval(p[0], p[1]); };
            IntegralResult r = integrate_pair(f, dom, 1.0, cell_tol / std::abs(cgf), spec);
            r.value *= cgf;
            r.err_est *= std::abs(cgf);
            out.accumulate(r);
        }

    // unbounded x-tails against the compact y-support
    double ysup_lo = fy.cuts.front().to_double(), ysup_hi = fy.cuts.back().to_double();
    double base_w = std::max(1.0, ysup_hi - ysup_lo);
    auto tail = [&](bool right) {
        double tv = right ? gx.vals.back() : gx.vals.front();
        if (tv == 0) return;
        double edge = right ? cuts.back().to_double() : cuts.front().to_double();
        double prev_mag = 0;
        double w = base_w;
        double pos = edge;
        IntegralResult acc;
        for (int sh = 0; sh < 64; ++sh) {
            double a = right ? pos : pos - w;
            double b = right ? pos + w : pos;
            PairDomain dom;
            dom.n = 1;
            dom.xlo[0] = a;
            dom.xhi[0] = b;
            dom.ylo[0] = ysup_lo;
            dom.yhi[0] = ysup_hi;
            IntegrandN f = [&k](const double* p) { return k.eval(p[0], p[1]); };
            IntegralResult r = integrate_pair(f, dom, 1.0, spec.tol / 16.0, spec);
            r.value *= tv;
            r.err_est *= std::abs(tv);
            acc.accumulate(r);
            double mag = std::abs(r.value);
            pos = right ? b : a;
            // analytic screen: kernel sup on the next shell
            double knext = k.sup_abs(right ? pos : pos - 2 * w, right ? pos + 2 * w : pos,
                                     ysup_lo, ysup_hi);
            double next_bound = std::abs(tv) * knext * (2 * w) * (ysup_hi - ysup_lo) * fy_sup;
            if (sh >= 2 && (mag + next_bound) < spec.tol / 8) {
                double rho = prev_mag > 0 ? std::min(0.9, mag / prev_mag) : 0.5;
                acc.err_est += std::max(next_bound, mag * rho / (1 - rho));
                acc.trunc_radius = std::abs(pos);
                out.accumulate(acc);
                return;
            }
            prev_mag = mag;
            w *= 2;
        }
        acc.converged = false;
        acc.trunc_radius = std::abs(pos);
        out.accumulate(acc);
    };
    tail(false);
    tail(true);
    return out;
}

IntegralResult pair_integral(const KernelModel& K, const std::array<StepFn, 2>& f_left,
                             const std::array<StepFn, 2>& f_right, const QuadSpec& spec) {
    IntegralResult r1 = pairing_1d(K.f1, f_right[0], f_left[0], spec);
    IntegralResult r2 = pairing_1d(K.f2, f_right[1], f_left[1], spec);
    IntegralResult out;
    out.value = r1.value * r2.value;
    out.err_est = std::abs(r1.value) * r2.err_est + std::abs(r2.value) * r1.err_est +
                  r1.err_est * r2.err_est;
    out.n_evals = r1.n_evals + r2.n_evals;
    out.converged = r1.converged && r2.converged;
    out.trunc_radius = std::max(r1.trunc_radius, r2.trunc_radius);
    return out;
}

// quantities -------------------------------------------------------------------

namespace {
// distance from I to the complement of the child cell JI containing it
Dyadic child_complement_gap(const DyadicCube& I, const DyadicCube& JI, const Grid& g) {
    Dyadic best;
    bool first = true;
    for (int c = 0; c < I.n; ++c) {
        Dyadic a = cube_lo(I, g, c) - cube_lo(JI, g, c);
        Dyadic b = cube_hi(JI, g, c) - cube_hi(I, g, c);
        Dyadic d = dmin(a, b);
        if (first || d < best) {
            best = d;
            first = false;
        }
    }
    return best;
}

double linf(const double* a, const double* b, int n) {
    double m = 0;
    for (int c = 0; c < n; ++c) m = std::max(m, std::abs(a[c] - b[c]));
    return m;
}
double linf_sum(const double* a, const double* b, int n) {
    double m = 0;
    for (int c = 0; c < n; ++c) m = std::max(m, std::abs(a[c] + b[c]));
    return m;
}

struct BoxDvals {
    int n;
    double lo[2], hi[2];
};
BoxDvals box_vals(const BoxD& b) {
    BoxDvals r;
    r.n = b.n;
    for (int c = 0; c < b.n; ++c) {
        r.lo[c] = b.lo[c].to_double();
        r.hi[c] = b.hi(c).to_double();
    }
    return r;
}

// rectangle difference A \ B as a list of boxes
std::vector<BoxDvals> box_minus(const BoxDvals& A, const BoxDvals& B) {
    std::vector<BoxDvals> out;
    BoxDvals rest = A;
    for (int c = 0; c < A.n; ++c) {
        if (B.lo[c] > rest.lo[c]) {
            BoxDvals piece = rest;
            piece.hi[c] = std::min(B.lo[c], rest.hi[c]);
            if (piece.hi[c] > piece.lo[c]) out.push_back(piece);
            rest.lo[c] = std::min(B.lo[c], rest.hi[c]);
        }
        if (B.hi[c] < rest.hi[c]) {
            BoxDvals piece = rest;
            piece.lo[c] = std::max(B.hi[c], rest.lo[c]);
            if (piece.hi[c] > piece.lo[c]) out.push_back(piece);
            rest.hi[c] = std::max(B.hi[c], rest.lo[c]);
        }
        rest.lo[c] = std::max(rest.lo[c], B.lo[c]);
        rest.hi[c] = std::min(rest.hi[c], B.hi[c]);
        if (rest.hi[c] <= rest.lo[c]) break;
    }
    return out;
}

IntegralResult integrate_over_boxes(const IntegrandN& f, const std::vector<BoxDvals>& xs,
                                    const BoxDvals& Y, double gamma, double tol,
                                    const QuadSpec& spec) {
    IntegralResult out;
    if (xs.empty()) return out;
    double share = tol / xs.size();
    for (const auto& X : xs) {
        PairDomain dom;
        dom.n = X.n;
        for (int c = 0; c < X.n; ++c) {
            dom.xlo[c] = X.lo[c];
            dom.xhi[c] = X.hi[c];
            dom.ylo[c] = Y.lo[c];
            dom.yhi[c] = Y.hi[c];
        }
        out.accumulate(integrate_pair(f, dom, gamma, share, spec));
    }
    return out;
}
}  // namespace

IntegralResult quantity(Quantity which, const DyadicCube& I, const DyadicCube& J, const Grid& g,
                        const BoundForms& forms, const QuadSpec& spec) {
    const int n = I.n;
    const double delta = forms.delta;
    GeometrySummary geo = cube_geometry(I, J, g);
    BoxDvals bi = box_vals(to_box(I, g));
    BoxDvals bj = box_vals(to_box(J, g));
    double cI[2];
    for (int c = 0; c < n; ++c) cI[c] = cube_center(I, g, c).to_double();
    double lI = std::ldexp(1.0, I.level);

    const FuncTriple& T = forms.trip;
    auto F_sep = [&](const double* x, const double* y) {
        double r = linf(x, y, n);
        return T.F1(linf(y, cI, n)) * T.F2(r) * T.F3(1.0 + linf_sum(x, y, n) / (1.0 + r));
    };
    auto F_near = [&](const double* x, const double* y) {
        double r = linf(x, y, n);
        return T.F1(r) * T.F2(r) * T.F3(1.0 + linf_sum(x, y, n) / (1.0 + r));
    };

    switch (which) {
        case Quantity::P: {
            if (geo.rd < Dyadic::from_int(1))
                throw std::domain_error("quantity P: needs rd(I,J) >= 1");
            IntegrandN f = [&](const double* p) {
                const double* x = p;
                const double* y = p + n;
                double r = linf(x, y, n);
                return F_sep(x, y) * std::pow(lI, delta) / std::pow(r, n + delta);
            };
            return integrate_over_boxes(f, {bj}, bi, 0.0, spec.tol, spec);
        }
        case Quantity::Q: {
            IntegrandN f = [&](const double* p) {
                const double* x = p;
                const double* y = p + n;
                double r = linf(x, y, n);
                return F_near(x, y) / std::pow(r, n);
            };
            BoxDvals b3 = bi;  // 3I
            for (int c = 0; c < n; ++c) {
                b3.lo[c] -= lI;
                b3.hi[c] += lI;
            }
            return integrate_over_boxes(f, box_minus(b3, bi), bi, double(n), spec.tol, spec);
        }
        case Quantity::QIJ: {
            if (!(geo.rd < Dyadic::from_int(1)))
                throw std::domain_error("quantity QIJ: needs rd(I,J) < 1");
            if (I == J || contains(I, J, g) || contains(J, I, g))
                throw std::domain_error("quantity QIJ: needs disjoint cubes");
            IntegrandN f = [&](const double* p) {
                const double* x = p;
                const double* y = p + n;
                double rc = linf(x, cI, n);
                return F_sep(x, y) * std::pow(lI, delta) / std::pow(rc, n + delta);
            };
            BoxDvals b3 = bi;
            for (int c = 0; c < n; ++c) {
                b3.lo[c] -= lI;
                b3.hi[c] += lI;
            }
            return integrate_over_boxes(f, box_minus(bj, b3), bi, 0.0, spec.tol, spec);
        }
        case Quantity::R:
        case Quantity::RIJ: {
            BoxDvals base;
            if (which == Quantity::R) {
                base = bi;
                for (int c = 0; c < n; ++c) {
                    base.lo[c] -= lI;
                    base.hi[c] += lI;
                }  // 3I
            } else {
                if (!contains(J, I, g) || I == J)
                    throw std::domain_error("quantity RIJ: needs I strictly inside J");
                DyadicCube JI = ancestor(I, g, J.level - 1 - I.level);
                Dyadic dist_c = child_complement_gap(I, JI, g);
                if (cmp_square_pow2(dist_c, I.level + J.level) <= 0)
                    throw std::domain_error(
                        "quantity RIJ: needs d(I, J_I^c) > sqrt(l(I) l(J))");
                base = box_vals(to_box(JI, g));
            }
            IntegrandN f = [&](const double* p) {
                const double* x = p;
                const double* y = p + n;
                double r = linf(x, y, n);
                return F_sep(x, y) * std::pow(lI, delta) / std::pow(r, n + delta);
            };
            IntegralResult out;
            BoxDvals prev = base;
            double prev_mag = -1;
            for (int sh = 0; sh < 64; ++sh) {
                BoxDvals cur = prev;
                double w = (prev.hi[0] - prev.lo[0]) / 2;
                for (int c = 0; c < n; ++c) {
                    cur.lo[c] -= w;
                    cur.hi[c] += w;
                }
                IntegralResult ring =
                    integrate_over_boxes(f, box_minus(cur, prev), bi, 0.0, spec.tol / 8, spec);
                out.accumulate(ring);
                out.trunc_radius = cur.hi[0] - cur.lo[0];
                double mag = std::abs(ring.value);
                if (sh >= 2 && mag < spec.tol / 8) {
                    double rho = prev_mag > 0 ? std::min(0.9, mag / prev_mag) : 0.5;
                    out.err_est += mag * rho / (1 - rho);
                    return out;
                }
                prev_mag = mag;
                prev = cur;
            }
            out.converged = false;
            return out;
        }
    }
    throw std::invalid_argument("quantity: bad selector");
}

double quantity_bound(Quantity which, const DyadicCube& I, const DyadicCube& J, const Grid& g,
                      const BoundForms& forms) {
    GeometrySummary geo = cube_geometry(I, J, g);
    const int n = I.n;
    double delta = forms.delta;
    double mI = cube_measure(I), mJ = cube_measure(J);
    switch (which) {
        case Quantity::P:
            return forms.F_pair(I, J, g) *
                   std::pow(geo.rs.to_double(), 0.5 * n + delta) /
                   std::pow(geo.rd.to_double(), n + delta) * std::sqrt(mI) * std::sqrt(mJ);
        case Quantity::Q:
            return forms.F_tilde(I, g) * mI;
        case Quantity::QIJ:
            return forms.F_tilde_pair(I, J, g) * mI / std::pow(geo.ird.to_double(), delta);
        case Quantity::R:
            return forms.F_tilde(I, g) * mI;
        case Quantity::RIJ:
            return forms.F_tilde_pair(I, J, g) * mI * std::pow(geo.rs.to_double(), 0.5 * delta);
    }
    throw std::invalid_argument("quantity_bound: bad selector");
}

double f2_smooth_with_exponent(const SampledFunc& F2, double t, double expo) {
    double sum = 0, w = 1.0, scale = 1.0;
    double decay = std::exp2(-expo);
    double cap = F2.max_value();
    for (int k = 0; k < 2000; ++k) {
        sum += w * F2(t * scale);
        scale *= 0.5;
        w *= decay;
        if (w * cap < 1e-15 * (sum + 1e-300)) break;
    }
    return sum;
}

DiagCheck diag_lemma_check(const DyadicCube& I, const DyadicCube& J, const Grid& g,
                           const SampledFunc& F2, double r, double s, const QuadSpec& spec) {
    if (I.level != J.level) throw std::domain_error("diag_lemma_check: needs l(I) = l(J)");
    GeometrySummary geo = cube_geometry(I, J, g);
    if (!geo.d.is_zero()) throw std::domain_error("diag_lemma_check: needs touching cubes");
    if (I == J) throw std::domain_error("diag_lemma_check: needs disjoint cubes");
    if (!(r > 1)) throw std::domain_error("diag_lemma_check: needs r > 1");
    if (!(s > 1 && s < 1 + 1.0 / I.n)) throw std::domain_error("diag_lemma_check: s out of range");
    const int n = I.n;
    BoxDvals bi = box_vals(to_box(I, g)), bj = box_vals(to_box(J, g));
    double meas = cube_measure(I) * cube_measure(J);

    DiagCheck out;
    {
        IntegrandN f = [&](const double* p) {
            return std::pow(F2(linf(p, p + n, n)), r);
        };
        out.I1 = integrate_over_boxes(f, {bj}, bi, 0.0, spec.tol, spec);
        out.I1.value = std::pow(std::max(0.0, out.I1.value) / meas, 1.0 / r);
    }
    {
        IntegrandN f = [&](const double* p) {
            return std::pow(linf(p, p + n, n), -s * n);
        };
        out.I2 = integrate_over_boxes(f, {bj}, bi, s * n, spec.tol, spec);
        out.I2.value = std::pow(std::max(0.0, out.I2.value) / meas, 1.0 / s);
    }
    out.bound1 = f2_smooth_with_exponent(F2, std::ldexp(1.0, I.level), 1.0 / r);
    out.bound2 = 1.0 / cube_measure(I);
    return out;
}

}  // namespace dyt1
