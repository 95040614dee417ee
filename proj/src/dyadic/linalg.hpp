#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dyt1 {

// dense row-major matrix backed by BLAS
struct Mat {
    int rows = 0, cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }
};

// C = op(A) * op(B)
Mat gemm(const Mat& A, const Mat& B, bool transA = false, bool transB = false);
// symmetric eigendecomposition (ascending); A is replaced by eigenvectors in
// columns when vectors requested
void sym_eig(Mat& A, std::vector<double>& eigs, bool vectors);
// largest eigenvalue of a symmetric PSD operator given by its matvec, simple
// Lanczos with a fixed deterministic start (no reorthogonalization; adequate
// for extreme-eigenvalue estimates)
double lanczos_max_eig(const std::function<void(const double*, double*)>& apply, size_t dim,
                       int max_iter, double rel_tol, const std::vector<double>& start);
// power iteration on A^T A via callbacks, all-ones start
struct PowerResult {
    double sigma = 0;
    int iters = 0;
    bool converged = false;
};
PowerResult power_sigma(const std::function<void(const double*, double*)>& apply,
                        const std::function<void(const double*, double*)>& apply_t, size_t nrows,
                        size_t ncols, double rel_tol, int max_iter);

void set_blas_threads(int n);

}  // namespace dyt1
