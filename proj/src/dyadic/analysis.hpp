#pragma once

#include <map>
#include <optional>

#include "dyadic/coeffs.hpp"
#include "dyadic/linalg.hpp"

namespace dyt1 {

struct ProductKey {
    HaarIndex h1, h2;
    friend auto operator<=>(const ProductKey& a, const ProductKey& b) = default;
};

// sparse Haar coefficient vector over product indices; an optional constant
// background on a window extends the represented span beyond the
// cancellative Haar modes (needed for averages of functions like 1)
struct HaarCoeffVector {
    std::map<ProductKey, double> c;
    double background = 0.0;
    double win_lo1 = 0, win_hi1 = 0, win_lo2 = 0, win_hi2 = 0;  // background support

    double norm2() const;
    HaarCoeffVector& operator+=(const HaarCoeffVector& o);
};

// exact product-step input: finite sum of value * 1_{R1 x R2} with dyadic
// rectangles
struct ProductStep {
    struct Term {
        DyadicCube r1, r2;
        double val;
    };
    std::vector<Term> terms;

    static ProductStep indicator(const DyadicCube& r1, const DyadicCube& r2, double v = 1.0);
    static ProductStep haar_tensor(const HaarIndex& h1, const HaarIndex& h2, const Grid& g);
};

// Haar coefficients of f over the truncation products D1(N) x D2(N), exact
HaarCoeffVector expand(const ProductStep& f, const Grid& g, int N);

enum class Side { P, Pperp };
HaarCoeffVector project(const HaarCoeffVector& v, const Grid& g, int N, Side side);

// bi-parameter paraproducts on coefficient vectors
enum class ParaVariant { Pi, PiStar };
// average of the span element over a dyadic rectangle (throws when the
// background is cut by the rectangle)
double average_on(const HaarCoeffVector& f, const DyadicCube& r1, const DyadicCube& r2,
                  const Grid& g);
HaarCoeffVector paraproduct_apply(const HaarCoeffVector& b, const HaarCoeffVector& f,
                                  ParaVariant variant, const Grid& g, int out_N);
// one-parameter versions
using OneParamVector = std::map<HaarIndex, double>;
OneParamVector paraproduct_apply_1p(const OneParamVector& b, const OneParamVector& f,
                                    ParaVariant variant, const Grid& g, int out_N);

// rectangular BMO proxy ----------------------------------------------------

struct BmoReport {
    double norm = 0;
    std::string attained_at;
    std::vector<std::pair<int, double>> tails;  // (N, |P_N^perp b|_BMO-proxy)
};
// family: all dyadic rectangles with sides in D(N) (candidates generated from
// the support closure) plus optional unions of up to 4 rectangles
using RectUnion = std::vector<std::pair<DyadicCube, DyadicCube>>;
BmoReport bmo_norm(const HaarCoeffVector& b, const Grid& g, int N,
                   const std::vector<RectUnion>& extra_families = {});
BmoReport cmo_tail(const HaarCoeffVector& b, const Grid& g, int N,
                   const std::vector<int>& schedule);

// truncated operator ---------------------------------------------------------

struct TruncatedOperator {
    std::vector<ProductKey> rows, cols;
    bool factor_mode = false;
    // explicit storage
    std::vector<std::tuple<int, int, double>> triplets;  // sorted (row, col)
    // factor storage (separable): entry = A1[r1,c1] * A2[r2,c2]
    Mat A1, A2;
    std::vector<int> row1_of, row2_of, col1_of, col2_of;  // product index -> factor index
    int m1 = 0, m2 = 0;
    std::vector<double> row_scale;  // empty = all ones; 0/1 masks rows

    size_t nrows() const { return rows.size(); }
    size_t ncols() const { return cols.size(); }
    void apply(const double* x, double* y) const;
    void apply_t(const double* y, double* x) const;
    TruncatedOperator masked_rows(const std::vector<char>& keep) const;
    void save_triplets(const std::string& path) const;
};

// operator on the D(N) x D(N) product span; table entries are used when
// present, everything else comes from the separable factor matrices
TruncatedOperator assemble_operator(const KernelModel& K, const Grid& g, int N,
                                    const QuadSpec& spec, const CoeffTable* table = nullptr,
                                    size_t explicit_cap = size_t(1) << 22, int threads = 1);

// paraproduct as an operator on the D(M) product span
TruncatedOperator paraproduct_operator(const HaarCoeffVector& b, const Grid& g, int M);

double spectral_norm(const TruncatedOperator& A, double tol = 1e-10, int max_iter = 20000);

// one-parameter factor matrix over a cube list
Mat factor_matrix(const KernelModel& K, int param, const std::vector<DyadicCube>& cubes,
                  const Grid& g, const QuadSpec& spec, int threads, double screen_tol = 1e-16);

// compactness curve ----------------------------------------------------------

struct CompactnessCurve {
    double sigma0 = 0;                           // sigma_max of the truncated operator
    std::vector<std::pair<int, double>> points;  // (N, sigma_max(P_N^perp T_M))
};
CompactnessCurve compactness_curve(const KernelModel& K, const Grid& g,
                                   const std::vector<int>& schedule, int M, const QuadSpec& spec,
                                   int threads = 1);

// limiting predicates and the geometric-sum inequality ------------------------

struct PredicateReport {
    struct Part {
        std::string name;
        int N0 = -1;            // smallest N in the search range passing all samples
        double worst = 0;       // worst margin at N0
        bool pass = false;
    };
    std::vector<Part> parts;
    double eps = 0.05;
};
PredicateReport limiting_predicates(const KernelModel& K, const Grid& g, double eps,
                                    int N_cap = 256);

struct MdtResult {
    double lhs, rhs;
};
MdtResult mdt_check(int k, double delta, double theta);

}  // namespace dyt1
