#include "dyadic/linalg.hpp"

#include <cblas.h>
#include <lapacke.h>

#include <cmath>
#include <cstring>
#include <stdexcept>

extern "C" void openblas_set_num_threads(int);

namespace dyt1 {

void set_blas_threads(int n) { openblas_set_num_threads(n); }

Mat gemm(const Mat& A, const Mat& B, bool transA, bool transB) {
    int m = transA ? A.cols : A.rows;
    int k = transA ? A.rows : A.cols;
    int kb = transB ? B.cols : B.rows;
    int n = transB ? B.rows : B.cols;
    if (k != kb) throw std::invalid_argument("gemm: inner dimensions differ");
    Mat C(m, n);
    cblas_dgemm(CblasRowMajor, transA ? CblasTrans : CblasNoTrans,
                transB ? CblasTrans : CblasNoTrans, m, n, k, 1.0, A.a.data(), A.cols, B.a.data(),
                B.cols, 0.0, C.a.data(), n);
    return C;
}

void sym_eig(Mat& A, std::vector<double>& eigs, bool vectors) {
    if (A.rows != A.cols) throw std::invalid_argument("sym_eig: square matrix required");
    eigs.assign(A.rows, 0.0);
    int info = LAPACKE_dsyevd(LAPACK_ROW_MAJOR, vectors ? 'V' : 'N', 'U', A.rows, A.a.data(),
                              A.cols, eigs.data());
    if (info != 0) throw std::runtime_error("sym_eig: dsyevd failed");
}

double lanczos_max_eig(const std::function<void(const double*, double*)>& apply, size_t dim,
                       int max_iter, double rel_tol, const std::vector<double>& start) {
    std::vector<double> v(start), v_prev(dim, 0.0), w(dim, 0.0);
    double nrm = cblas_dnrm2(static_cast<int>(dim), v.data(), 1);
    if (nrm == 0) return 0.0;
    cblas_dscal(static_cast<int>(dim), 1.0 / nrm, v.data(), 1);
    std::vector<double> alpha, beta;
    double prev_theta = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        apply(v.data(), w.data());
        double a = cblas_ddot(static_cast<int>(dim), v.data(), 1, w.data(), 1);
        alpha.push_back(a);
        // w -= a v + b v_prev
        cblas_daxpy(static_cast<int>(dim), -a, v.data(), 1, w.data(), 1);
        if (!beta.empty())
            cblas_daxpy(static_cast<int>(dim), -beta.back(), v_prev.data(), 1, w.data(), 1);
        double b = cblas_dnrm2(static_cast<int>(dim), w.data(), 1);
        // top eigenvalue of the tridiagonal
        int k = static_cast<int>(alpha.size());
        std::vector<double> d(alpha), e(beta);
        e.resize(std::max(0, k - 1));
        int info = LAPACKE_dsterf(k, d.data(), e.data());
        double theta = info == 0 ? d[k - 1] : alpha[0];
        if (it >= 2 && std::abs(theta - prev_theta) <= rel_tol * std::abs(theta)) return theta;
        prev_theta = theta;
        if (b < 1e-14 * std::abs(a)) return theta;  // invariant subspace hit
        beta.push_back(b);
        v_prev = v;
        for (size_t i = 0; i < dim; ++i) v[i] = w[i] / b;
    }
    return prev_theta;
}

PowerResult power_sigma(const std::function<void(const double*, double*)>& apply,
                        const std::function<void(const double*, double*)>& apply_t, size_t nrows,
                        size_t ncols, double rel_tol, int max_iter) {
    PowerResult res;
    std::vector<double> x(ncols, 1.0), y(nrows, 0.0), z(ncols, 0.0);
    double nrm = cblas_dnrm2(static_cast<int>(ncols), x.data(), 1);
    cblas_dscal(static_cast<int>(ncols), 1.0 / nrm, x.data(), 1);
    double prev = 0.0;
    for (int it = 1; it <= max_iter; ++it) {
        apply(x.data(), y.data());
        apply_t(y.data(), z.data());
        double lam = cblas_dnrm2(static_cast<int>(ncols), z.data(), 1);
        res.iters = it;
        if (lam == 0) {
            res.sigma = 0;
            res.converged = true;
            return res;
        }
        double sigma = std::sqrt(cblas_ddot(static_cast<int>(ncols), x.data(), 1, z.data(), 1));
        for (size_t i = 0; i < ncols; ++i) x[i] = z[i] / lam;
        if (it > 2 && std::abs(sigma - prev) <= rel_tol * std::abs(sigma)) {
            res.sigma = sigma;
            res.converged = true;
            return res;
        }
        prev = sigma;
    }
    res.sigma = prev;
    res.converged = false;
    return res;
}

}  // namespace dyt1
