#include "dyadic/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace dyt1 {

Grid Grid::standard(int n, int Lmax, int id) {
    Grid g;
    g.id = id;
    g.n = n;
    g.Lmax = Lmax;
    g.shifts.assign(2 * Lmax + 1, {0, 0});
    return g;
}

Grid Grid::from_shift(const std::vector<std::array<int, 2>>& omega, int n, int Lmax, int id) {
    if (static_cast<int>(omega.size()) != 2 * Lmax + 1)
        throw std::invalid_argument("grid shift sequence must cover |j| <= Lmax");
    for (const auto& w : omega)
        for (int c = 0; c < n; ++c)
            if (w[c] != 0 && w[c] != 1) throw std::invalid_argument("shift components must be 0 or 1");
    Grid g;
    g.id = id;
    g.n = n;
    g.Lmax = Lmax;
    g.shifts = omega;
    return g;
}

bool Grid::is_standard() const {
    for (const auto& w : shifts)
        if (w[0] != 0 || w[1] != 0) return false;
    return true;
}

int Grid::omega(int j, int c) const {
    if (j < -Lmax || j > Lmax) return 0;
    return shifts[j + Lmax][c];
}

void Grid::check_level(int level) const {
    if (is_standard()) return;  // zero shift is exact at every level
    if (level < -Lmax || level > Lmax)
        throw std::out_of_range("cube level outside the grid's shift range");
}

Dyadic Grid::shift(int level, int c) const {
    check_level(level);
    Dyadic s;
    for (int j = -level + 1; j <= Lmax; ++j)
        if (omega(j, c)) s = s + Dyadic::pow2(-j);
    return s;
}

BoxD BoxD::unit_centered(int n) {
    BoxD b;
    b.n = n;
    b.lo[0] = Dyadic(-1, -1);
    b.lo[1] = Dyadic(-1, -1);
    b.edge = Dyadic::from_int(1);
    return b;
}

BoxD BoxD::scaled_unit(int n, int N) {
    BoxD b;
    b.n = n;
    b.lo[0] = Dyadic(-1, N - 1);
    b.lo[1] = Dyadic(-1, N - 1);
    b.edge = Dyadic::pow2(N);
    return b;
}

BoxD BoxD::dilate_pow2(int k) const {
    BoxD b = *this;
    // center fixed, edge scaled by 2^k: lo' = lo + (1 - 2^k)/2 * edge
    Dyadic half_delta = (Dyadic::from_int(1) - Dyadic::pow2(k)) * edge * Dyadic(1, -1);
    for (int c = 0; c < n; ++c) b.lo[c] = lo[c] + half_delta;
    b.edge = edge * Dyadic::pow2(k);
    return b;
}

Dyadic cube_edge(const DyadicCube& c) { return Dyadic::pow2(c.level); }

Dyadic cube_lo(const DyadicCube& c, const Grid& g, int coord) {
    return Dyadic(c.m[coord], c.level) + g.shift(c.level, coord);
}

Dyadic cube_hi(const DyadicCube& c, const Grid& g, int coord) {
    return Dyadic(c.m[coord] + 1, c.level) + g.shift(c.level, coord);
}

Dyadic cube_center(const DyadicCube& c, const Grid& g, int coord) {
    return cube_lo(c, g, coord) + Dyadic::pow2(c.level - 1);
}

double cube_measure(const DyadicCube& c) { return std::ldexp(1.0, c.level * c.n); }

BoxD to_box(const DyadicCube& c, const Grid& g) {
    BoxD b;
    b.n = c.n;
    for (int i = 0; i < c.n; ++i) b.lo[i] = cube_lo(c, g, i);
    b.edge = cube_edge(c);
    return b;
}

Dyadic box_dist(const BoxD& a, const BoxD& b) {
    Dyadic d;  // zero
    for (int c = 0; c < a.n; ++c) {
        Dyadic gap1 = b.lo[c] - a.hi(c);
        Dyadic gap2 = a.lo[c] - b.hi(c);
        Dyadic gap = dmax(gap1, gap2);
        if (gap > d) d = gap;
    }
    return dmax(d, Dyadic::zero());
}

bool boxes_intersect(const BoxD& a, const BoxD& b) { return box_dist(a, b).is_zero(); }

bool box_contains(const BoxD& outer, const BoxD& inner) {
    for (int c = 0; c < outer.n; ++c)
        if (inner.lo[c] < outer.lo[c] || inner.hi(c) > outer.hi(c)) return false;
    return true;
}

DyadicCube child(const DyadicCube& c, const Grid& g, int idx) {
    g.check_level(c.level - 1);
    DyadicCube r = c;
    r.level = c.level - 1;
    for (int i = 0; i < c.n; ++i) {
        int bit = (idx >> i) & 1;
        r.m[i] = 2 * c.m[i] + bit + g.omega(1 - c.level, i);
    }
    return r;
}

std::vector<DyadicCube> children(const DyadicCube& c, const Grid& g) {
    std::vector<DyadicCube> out;
    for (int idx = 0; idx < (1 << c.n); ++idx) out.push_back(child(c, g, idx));
    return out;
}

DyadicCube ancestor(const DyadicCube& c, const Grid& g, int k) {
    DyadicCube r = c;
    for (int step = 0; step < k; ++step) {
        g.check_level(r.level + 1);
        for (int i = 0; i < r.n; ++i) {
            long long t = r.m[i] - g.omega(-r.level, i);
            r.m[i] = t >= 0 ? t / 2 : -((-t + 1) / 2);
        }
        ++r.level;
    }
    return r;
}

int child_position(const DyadicCube& c, const Grid& g, int coord) {
    long long t = c.m[coord] - g.omega(-c.level, coord);
    return static_cast<int>(((t % 2) + 2) % 2);
}

bool contains(const DyadicCube& outer, const DyadicCube& inner, const Grid& g) {
    if (inner.level > outer.level) return false;
    if (inner.level == outer.level) return inner == outer;
    return ancestor(inner, g, outer.level - inner.level) == outer;
}

BoxD box_join(const BoxD& a, const BoxD& b) {
    BoxD j;
    j.n = a.n;
    Dyadic edge;
    std::array<Dyadic, 2> lo;
    for (int c = 0; c < a.n; ++c) {
        lo[c] = dmin(a.lo[c], b.lo[c]);
        Dyadic span = dmax(a.hi(c), b.hi(c)) - lo[c];
        if (span > edge) edge = span;
    }
    j.lo = lo;  // anchored at the smallest coordinates
    j.edge = edge;
    return j;
}

Dyadic rel_dist(const BoxD& a, const BoxD& b) {
    Dyadic d = box_dist(a, b);
    if (d.is_zero()) return Dyadic::zero();
    Dyadic me = dmax(a.edge, b.edge);
    // d / me with me = 2^k exact: divide by shifting the exponent
    if (me.m != 1) throw std::logic_error("rel_dist: edge not a power of two");
    return Dyadic(d.m, d.e - me.e);
}

GeometrySummary cube_geometry(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    if (I.n != J.n) throw std::invalid_argument("cube_geometry: dimension mismatch");
    if (I.grid_id != J.grid_id) throw std::invalid_argument("cube_geometry: grid mismatch");
    GeometrySummary s;
    BoxD bi = to_box(I, g), bj = to_box(J, g);
    s.d = box_dist(bi, bj);
    int lmin = std::min(I.level, J.level), lmax = std::max(I.level, J.level);
    s.rs = Dyadic::pow2(lmin - lmax);
    s.rd = s.d.is_zero() ? Dyadic::zero() : Dyadic(s.d.m, s.d.e - lmax);
    s.ird = Dyadic::from_int(1) + (s.d.is_zero() ? Dyadic::zero() : Dyadic(s.d.m, s.d.e - lmin));
    s.join = box_join(bi, bj);
    return s;
}

GeometryD cube_geometry_double(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    GeometryD s{};
    double li = std::ldexp(1.0, I.level), lj = std::ldexp(1.0, J.level);
    double d = 0, jlo[2], jhi[2];
    for (int c = 0; c < I.n; ++c) {
        double shiftI = g.is_standard() ? 0.0 : g.shift(I.level, c).to_double();
        double shiftJ = g.is_standard() ? 0.0 : g.shift(J.level, c).to_double();
        double ai = I.m[c] * li + shiftI, bi = ai + li;
        double aj = J.m[c] * lj + shiftJ, bj = aj + lj;
        d = std::max(d, std::max(0.0, std::max(aj - bi, ai - bj)));
        jlo[c] = std::min(ai, aj);
        jhi[c] = std::max(bi, bj);
    }
    double span = 0;
    for (int c = 0; c < I.n; ++c) span = std::max(span, jhi[c] - jlo[c]);
    s.d = d;
    s.rs = std::min(li, lj) / std::max(li, lj);
    s.rd = d / std::max(li, lj);
    s.ird = 1.0 + d / std::min(li, lj);
    s.join_edge = span;
    double dj = 0;
    for (int c = 0; c < I.n; ++c) {
        double gap = std::max(jlo[c] - 0.5, -0.5 - (jlo[c] + span));
        dj = std::max(dj, std::max(0.0, gap));
    }
    s.join_rd_unit = dj / std::max(span, 1.0);
    return s;
}

// Haar ---------------------------------------------------------------------

double haar_eval(const HaarIndex& h, const Grid& g, const std::array<double, 2>& x) {
    const DyadicCube& c = h.cube;
    double norm = std::ldexp(1.0, -c.level * c.n);  // |I|^{-1}
    norm = std::sqrt(norm);
    double sgn = 1.0;
    for (int i = 0; i < c.n; ++i) {
        double lo = cube_lo(c, g, i).to_double();
        double hi = lo + std::ldexp(1.0, c.level);
        if (x[i] < lo || x[i] >= hi) return 0.0;
        if ((h.eta >> i) & 1) {
            double mid = lo + std::ldexp(1.0, c.level - 1);
            sgn *= (x[i] < mid) ? 1.0 : -1.0;
        }
    }
    return sgn * norm;
}

namespace {
// signed measure sum of the product of two 1-d Haar factors, exact
Dyadic haar_factor_product_measure(const Dyadic& loA, int levA, int etaA, const Dyadic& loB,
                                   int levB, int etaB) {
    Dyadic hiA = loA + Dyadic::pow2(levA), hiB = loB + Dyadic::pow2(levB);
    Dyadic cuts[6] = {loA, loA + Dyadic::pow2(levA - 1), hiA,
                      loB, loB + Dyadic::pow2(levB - 1), hiB};
    std::sort(cuts, cuts + 6, [](const Dyadic& a, const Dyadic& b) { return a < b; });
    Dyadic total;
    for (int i = 0; i < 5; ++i) {
        if (!(cuts[i] < cuts[i + 1])) continue;
        Dyadic a = cuts[i], b = cuts[i + 1];
        if (a < loA || b > hiA || a < loB || b > hiB) continue;
        int sgn = 1;
        if (etaA) sgn *= (a < loA + Dyadic::pow2(levA - 1)) ? 1 : -1;
        if (etaB) sgn *= (a < loB + Dyadic::pow2(levB - 1)) ? 1 : -1;
        Dyadic len = b - a;
        total = total + (sgn > 0 ? len : -len);
    }
    return total;
}
}  // namespace

double haar_inner_exact(const HaarIndex& a, const HaarIndex& b, const Grid& g) {
    const DyadicCube& ca = a.cube;
    const DyadicCube& cb = b.cube;
    double value = 1.0;
    for (int c = 0; c < ca.n; ++c) {
        Dyadic s = haar_factor_product_measure(cube_lo(ca, g, c), ca.level, (a.eta >> c) & 1,
                                               cube_lo(cb, g, c), cb.level, (b.eta >> c) & 1);
        if (s.is_zero()) return 0.0;
        value *= s.to_double();
    }
    return value * std::pow(2.0, -0.5 * (ca.level + cb.level) * ca.n);
}

double haar_average_on(const HaarIndex& h, const DyadicCube& q, const Grid& g) {
    if (!contains(h.cube, q, g) || q == h.cube) return 0.0;
    double val = std::sqrt(std::ldexp(1.0, -h.cube.level * h.cube.n));
    DyadicCube probe = ancestor(q, g, h.cube.level - 1 - q.level);  // child of h.cube containing q
    for (int c = 0; c < h.cube.n; ++c)
        if ((h.eta >> c) & 1)
            val *= child_position(probe, g, c) == 0 ? 1.0 : -1.0;
    return val;
}

// families -----------------------------------------------------------------

namespace {
// enumerate cubes of a given level whose closure meets [winLo, winHi] per
// coordinate, applying an exact filter
template <typename Pred>
std::vector<DyadicCube> scan_level(const Grid& g, int level, const std::array<Dyadic, 2>& winLo,
                                   const std::array<Dyadic, 2>& winHi, int grid_id, Pred keep) {
    std::array<long long, 2> mLo{0, 0}, mHi{-1, -1};
    for (int c = 0; c < g.n; ++c) {
        // m*2^l + shift in [winLo - 2^l, winHi]
        double sh = g.shift(level, c).to_double();
        double scale = std::ldexp(1.0, -level);
        mLo[c] = static_cast<long long>(std::floor((winLo[c].to_double() - sh) * scale)) - 2;
        mHi[c] = static_cast<long long>(std::ceil((winHi[c].to_double() - sh) * scale)) + 2;
    }
    std::vector<DyadicCube> out;
    DyadicCube cand;
    cand.n = g.n;
    cand.level = level;
    cand.grid_id = grid_id;
    for (long long m0 = mLo[0]; m0 <= mHi[0]; ++m0) {
        cand.m[0] = m0;
        if (g.n == 1) {
            if (keep(cand)) out.push_back(cand);
        } else {
            for (long long m1 = mLo[1]; m1 <= mHi[1]; ++m1) {
                cand.m[1] = m1;
                if (keep(cand)) out.push_back(cand);
            }
        }
    }
    return out;
}
}  // namespace

std::vector<DyadicCube> family_scale_sep(const DyadicCube& J, const Grid& g, int k, int j) {
    if (k < 0 || j < 1) throw std::invalid_argument("family_scale_sep: need k >= 0, j >= 1");
    int level = J.level - k;
    Dyadic margin = Dyadic::from_int(j + 1) * cube_edge(J);
    std::array<Dyadic, 2> lo, hi;
    for (int c = 0; c < J.n; ++c) {
        lo[c] = cube_lo(J, g, c) - margin;
        hi[c] = cube_hi(J, g, c) + margin;
    }
    Dyadic jd = Dyadic::from_int(j), jd1 = Dyadic::from_int(j + 1);
    return scan_level(g, level, lo, hi, J.grid_id, [&](const DyadicCube& I) {
        Dyadic rd = cube_geometry(I, J, g).rd;
        return rd >= jd && rd < jd1;
    });
}

namespace {
// open-interior intersection test for same-grid cubes (touching is allowed)
bool cubes_overlap(const DyadicCube& A, const DyadicCube& B, const Grid& g) {
    for (int c = 0; c < A.n; ++c) {
        if (!(cube_lo(A, g, c) < cube_hi(B, g, c) && cube_lo(B, g, c) < cube_hi(A, g, c)))
            return false;
    }
    return true;
}
}  // namespace

std::vector<DyadicCube> family_scale_near(const DyadicCube& J, const Grid& g, int k, int m) {
    if (k < 0 || m < 1) throw std::invalid_argument("family_scale_near: need k >= 0, m >= 1");
    int level = J.level - k;
    Dyadic margin = Dyadic::from_int(2) * cube_edge(J);
    std::array<Dyadic, 2> lo, hi;
    for (int c = 0; c < J.n; ++c) {
        lo[c] = cube_lo(J, g, c) - margin;
        hi[c] = cube_hi(J, g, c) + margin;
    }
    Dyadic md = Dyadic::from_int(m), md1 = Dyadic::from_int(m + 1);
    return scan_level(g, level, lo, hi, J.grid_id, [&](const DyadicCube& I) {
        if (cubes_overlap(I, J, g)) return false;
        GeometrySummary s = cube_geometry(I, J, g);
        return s.rd < Dyadic::from_int(1) && s.ird >= md && s.ird < md1;
    });
}

std::vector<DyadicCube> family_scale_sep_up(const DyadicCube& I, const Grid& g, int k, int j) {
    if (k < 0 || j < 1) throw std::invalid_argument("family_scale_sep_up: need k >= 0, j >= 1");
    int level = I.level + k;
    Dyadic margin = Dyadic::from_int(j + 1) * Dyadic::pow2(level);
    std::array<Dyadic, 2> lo, hi;
    for (int c = 0; c < I.n; ++c) {
        lo[c] = cube_lo(I, g, c) - margin;
        hi[c] = cube_hi(I, g, c) + margin;
    }
    Dyadic jd = Dyadic::from_int(j), jd1 = Dyadic::from_int(j + 1);
    return scan_level(g, level, lo, hi, I.grid_id, [&](const DyadicCube& J) {
        Dyadic rd = cube_geometry(I, J, g).rd;
        return rd >= jd && rd < jd1;
    });
}

std::vector<DyadicCube> family_scale_near_up(const DyadicCube& I, const Grid& g, int k, int m) {
    if (k < 0 || m < 1) throw std::invalid_argument("family_scale_near_up: need k >= 0, m >= 1");
    int level = I.level + k;
    Dyadic margin = Dyadic::from_int(2) * Dyadic::pow2(level);
    std::array<Dyadic, 2> lo, hi;
    for (int c = 0; c < I.n; ++c) {
        lo[c] = cube_lo(I, g, c) - margin;
        hi[c] = cube_hi(I, g, c) + margin;
    }
    Dyadic md = Dyadic::from_int(m), md1 = Dyadic::from_int(m + 1);
    return scan_level(g, level, lo, hi, I.grid_id, [&](const DyadicCube& J) {
        if (cubes_overlap(I, J, g)) return false;
        GeometrySummary s = cube_geometry(I, J, g);
        return s.rd < Dyadic::from_int(1) && s.ird >= md && s.ird < md1;
    });
}

std::vector<DyadicCube> descendants(const DyadicCube& J, const Grid& g, int k) {
    std::vector<DyadicCube> cur{J};
    for (int step = 0; step < k; ++step) {
        std::vector<DyadicCube> next;
        next.reserve(cur.size() << J.n);
        for (const auto& c : cur)
            for (const auto& ch : children(c, g)) next.push_back(ch);
        cur = std::move(next);
    }
    return cur;
}

Dyadic skeleton_dist(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    // sk(J) = union of child boundaries = boundary of J plus the mid-planes;
    // for I inside J this is min over coordinates of the distance from the
    // coordinate interval of I to {lo, mid, hi} of J
    Dyadic best;
    bool first = true;
    for (int c = 0; c < I.n; ++c) {
        Dyadic a = cube_lo(I, g, c), b = cube_hi(I, g, c);
        Dyadic pts[3] = {cube_lo(J, g, c), cube_lo(J, g, c) + Dyadic::pow2(J.level - 1),
                         cube_hi(J, g, c)};
        for (const auto& p : pts) {
            Dyadic d = dmax(dmax(a - p, p - b), Dyadic::zero());
            if (first || d < best) { best = d; first = false; }
        }
    }
    return best;
}

bool is_boundary_descendant(const DyadicCube& I, const DyadicCube& J, const Grid& g) {
    Dyadic d = skeleton_dist(I, J, g);
    return cmp_square_pow2(d, I.level + J.level) <= 0;  // d <= sqrt(l(I) l(J))
}

std::vector<DyadicCube> boundary_descendants(const DyadicCube& J, const Grid& g, int k) {
    std::vector<DyadicCube> out;
    for (const auto& I : descendants(J, g, k))
        if (is_boundary_descendant(I, J, g)) out.push_back(I);
    return out;
}

std::vector<DyadicCube> interior_descendants(const DyadicCube& J, const Grid& g, int k) {
    std::vector<DyadicCube> out;
    for (const auto& I : descendants(J, g, k))
        if (!is_boundary_descendant(I, J, g)) out.push_back(I);
    return out;
}

std::vector<DyadicCube> enumerate_family(const DyadicCube& J, const Grid& g, FamilyMode mode,
                                         int k, int jm) {
    switch (mode) {
        case FamilyMode::ScaleSep: return family_scale_sep(J, g, k, jm);
        case FamilyMode::ScaleNear: return family_scale_near(J, g, k, jm);
        case FamilyMode::Descendants: return descendants(J, g, k);
        case FamilyMode::Boundary: return boundary_descendants(J, g, k);
        case FamilyMode::Interior: return interior_descendants(J, g, k);
        case FamilyMode::Children: return children(J, g);
        case FamilyMode::Ancestor: return {ancestor(J, g, k)};
    }
    throw std::invalid_argument("enumerate_family: bad mode");
}

// truncation family ----------------------------------------------------------

bool truncation_membership(const DyadicCube& I, const Grid& g, int N) {
    if (N < 1) throw std::invalid_argument("truncation_membership: N >= 1");
    if (I.level < -N || I.level > N) return false;
    BoxD win = BoxD::scaled_unit(I.n, N);
    Dyadic rd = rel_dist(to_box(I, g), win);
    return rd <= Dyadic::from_int(N);
}

std::vector<DyadicCube> truncation_family(const Grid& g, int N) {
    std::vector<DyadicCube> out;
    BoxD win = BoxD::scaled_unit(g.n, N);
    Dyadic margin = Dyadic::from_int(N) * Dyadic::pow2(N) + Dyadic::pow2(N);
    std::array<Dyadic, 2> lo, hi;
    for (int c = 0; c < g.n; ++c) {
        lo[c] = win.lo[c] - margin;
        hi[c] = win.hi(c) + margin;
    }
    for (int level = -N; level <= N; ++level) {
        auto cubes = scan_level(g, level, lo, hi, g.id, [&](const DyadicCube& I) {
            return truncation_membership(I, g, N);
        });
        out.insert(out.end(), cubes.begin(), cubes.end());
    }
    return out;
}

std::vector<HaarIndex> truncation_haar(const Grid& g, int N) {
    std::vector<HaarIndex> out;
    for (const auto& c : truncation_family(g, N))
        for (int eta = 1; eta < (1 << g.n); ++eta) out.push_back({c, static_cast<uint8_t>(eta)});
    return out;
}

// text format ----------------------------------------------------------------

std::string cube_to_string(const DyadicCube& c) {
    char buf[96];
    if (c.n == 1)
        std::snprintf(buf, sizeof buf, "g:%d/L%d/(%lld)", c.grid_id, c.level, c.m[0]);
    else
        std::snprintf(buf, sizeof buf, "g:%d/L%d/(%lld,%lld)", c.grid_id, c.level, c.m[0], c.m[1]);
    return buf;
}

DyadicCube cube_from_string(const std::string& s) {
    DyadicCube c;
    long long m0 = 0, m1 = 0;
    int gid = 0, level = 0;
    if (std::sscanf(s.c_str(), "g:%d/L%d/(%lld,%lld)", &gid, &level, &m0, &m1) == 4) {
        c.n = 2;
        c.m = {m0, m1};
    } else if (std::sscanf(s.c_str(), "g:%d/L%d/(%lld)", &gid, &level, &m0) == 3) {
        c.n = 1;
        c.m = {m0, 0};
    } else {
        throw std::invalid_argument("cube_from_string: cannot parse '" + s + "'");
    }
    c.grid_id = gid;
    c.level = level;
    return c;
}

DyadicCube interval(int level, long long m, int grid_id) {
    DyadicCube c;
    c.n = 1;
    c.level = level;
    c.m = {m, 0};
    c.grid_id = grid_id;
    return c;
}

DyadicCube square(int level, long long m0, long long m1, int grid_id) {
    DyadicCube c;
    c.n = 2;
    c.level = level;
    c.m = {m0, m1};
    c.grid_id = grid_id;
    return c;
}

}  // namespace dyt1
