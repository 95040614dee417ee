#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dyadic/dyad.hpp"

namespace dyt1 {

// Shifted dyadic grid on R^n (n = 1 or 2).  A cube of level l has edge 2^l
// and its lower corner is m * 2^l plus the accumulated shift
//   shift(l) = sum_{j > -l, |j| <= Lmax} 2^{-j} w_j,
// so all coordinates stay exact dyadic rationals.  The all-zero shift
// reproduces the standard grid.
struct Grid {
    int id = 0;
    int n = 1;
    int Lmax = 12;
    // shifts[j + Lmax][c] in {0,1}, j in [-Lmax, Lmax]
    std::vector<std::array<int, 2>> shifts;

    static Grid standard(int n = 1, int Lmax = 12, int id = 0);
    static Grid from_shift(const std::vector<std::array<int, 2>>& omega, int n, int Lmax, int id);

    bool is_standard() const;
    // accumulated shift for cubes at `level` in coordinate c
    Dyadic shift(int level, int c) const;
    int omega(int j, int c) const;  // w_j component, 0 outside range
    void check_level(int level) const;
};

struct DyadicCube {
    int n = 1;
    int level = 0;
    std::array<long long, 2> m{0, 0};
    int grid_id = 0;

    friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
        return a.n == b.n && a.level == b.level && a.grid_id == b.grid_id &&
               a.m[0] == b.m[0] && (a.n < 2 || a.m[1] == b.m[1]);
    }
    friend auto operator<=>(const DyadicCube& a, const DyadicCube& b) = default;
};

// Axis-aligned box with equal edges; endpoints are exact dyadic rationals.
// Joins I (union) J live here since they need not be grid cubes.
struct BoxD {
    int n = 1;
    std::array<Dyadic, 2> lo;
    Dyadic edge;

    Dyadic hi(int c) const { return lo[c] + edge; }
    static BoxD unit_centered(int n);              // [-1/2, 1/2]^n
    static BoxD scaled_unit(int n, int N);         // 2^N * unit_centered
    BoxD dilate_pow2(int k) const;                 // same center, edge * 2^k
};

BoxD to_box(const DyadicCube& c, const Grid& g);
Dyadic cube_edge(const DyadicCube& c);
Dyadic cube_lo(const DyadicCube& c, const Grid& g, int coord);
Dyadic cube_hi(const DyadicCube& c, const Grid& g, int coord);
Dyadic cube_center(const DyadicCube& c, const Grid& g, int coord);
double cube_measure(const DyadicCube& c);  // 2^{level*n}

// l-infinity distance between boxes (exact)
Dyadic box_dist(const BoxD& a, const BoxD& b);
bool boxes_intersect(const BoxD& a, const BoxD& b);
bool box_contains(const BoxD& outer, const BoxD& inner);

DyadicCube child(const DyadicCube& c, const Grid& g, int idx);              // idx in [0, 2^n)
std::vector<DyadicCube> children(const DyadicCube& c, const Grid& g);
DyadicCube ancestor(const DyadicCube& c, const Grid& g, int k);             // k-fold parent
int child_position(const DyadicCube& c, const Grid& g, int coord);          // 0 = lower half
bool contains(const DyadicCube& outer, const DyadicCube& inner, const Grid& g);

// rs, rd, ird and the minimal enclosing box (ties: lowest coordinates)
struct GeometrySummary {
    Dyadic rs, rd, ird, d;
    BoxD join;
};
GeometrySummary cube_geometry(const DyadicCube& I, const DyadicCube& J, const Grid& g);
BoxD box_join(const BoxD& a, const BoxD& b);
Dyadic rel_dist(const BoxD& a, const BoxD& b);  // d(a,b) / max(edge_a, edge_b)

// double-precision variant for scales beyond the exact-mantissa range
// (used by the limiting-predicate harness at very large truncation levels)
struct GeometryD {
    double rs, rd, ird, d, join_edge, join_rd_unit;
};
GeometryD cube_geometry_double(const DyadicCube& I, const DyadicCube& J, const Grid& g);

// Haar index: cube + signature; eta != 0 is cancellative.
struct HaarIndex {
    DyadicCube cube;
    uint8_t eta = 1;

    friend bool operator==(const HaarIndex& a, const HaarIndex& b) = default;
    friend auto operator<=>(const HaarIndex& a, const HaarIndex& b) = default;
};

double haar_eval(const HaarIndex& h, const Grid& g, const std::array<double, 2>& x);
// exact integral of the product of two Haar functions over R^n
double haar_inner_exact(const HaarIndex& a, const HaarIndex& b, const Grid& g);
// average of h over a subcube q strictly inside h.cube (exact by constancy
// on the child containing q); returns 0 for q not strictly inside
double haar_average_on(const HaarIndex& h, const DyadicCube& q, const Grid& g);

// cube family enumeration ------------------------------------------------

enum class FamilyMode { ScaleSep, ScaleNear, Descendants, Boundary, Interior, Children, Ancestor };

// J(k,j): cubes I with l(I) = 2^{-k} l(J), j <= rd(I,J) < j+1
std::vector<DyadicCube> family_scale_sep(const DyadicCube& J, const Grid& g, int k, int j);
// J(k,0,m): additionally rd < 1, I cap J empty, m <= ird < m+1
std::vector<DyadicCube> family_scale_near(const DyadicCube& J, const Grid& g, int k, int m);
// I(k,j), I(k,0,m): same constraints with the larger cube enumerated
std::vector<DyadicCube> family_scale_sep_up(const DyadicCube& I, const Grid& g, int k, int j);
std::vector<DyadicCube> family_scale_near_up(const DyadicCube& I, const Grid& g, int k, int m);
// D^k(J) = {I : I^{(k)} = J}, split into boundary/interior parts by
// d(I, sk(J)) <=/> sqrt(l(I) l(J)) where sk(J) is the skeleton of ch(J)
std::vector<DyadicCube> descendants(const DyadicCube& J, const Grid& g, int k);
Dyadic skeleton_dist(const DyadicCube& I, const DyadicCube& J, const Grid& g);
bool is_boundary_descendant(const DyadicCube& I, const DyadicCube& J, const Grid& g);
std::vector<DyadicCube> boundary_descendants(const DyadicCube& J, const Grid& g, int k);
std::vector<DyadicCube> interior_descendants(const DyadicCube& J, const Grid& g, int k);

std::vector<DyadicCube> enumerate_family(const DyadicCube& J, const Grid& g, FamilyMode mode,
                                         int k, int jm = 0);

// truncation family ------------------------------------------------------

// I in D(N): 2^{-N} <= l(I) <= 2^N and rd(I, 2^N * unit) <= N
bool truncation_membership(const DyadicCube& I, const Grid& g, int N);
std::vector<DyadicCube> truncation_family(const Grid& g, int N);
// all cancellative Haar indices over the truncation family
std::vector<HaarIndex> truncation_haar(const Grid& g, int N);

// text format ------------------------------------------------------------

std::string cube_to_string(const DyadicCube& c);
DyadicCube cube_from_string(const std::string& s);

// convenience builders (standard-grid intervals/squares)
DyadicCube interval(int level, long long m, int grid_id = 0);
DyadicCube square(int level, long long m0, long long m1, int grid_id = 0);

}  // namespace dyt1
