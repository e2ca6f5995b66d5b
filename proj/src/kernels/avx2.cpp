#include <immintrin.h>

#include "smilansky/kernels.hpp"

namespace smilansky {

namespace {

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

// (x0, x1) -> (x0, x0, x1, x1)
inline __m256d dup_pairs(const double* x) {
    return _mm256_permute4x64_pd(_mm256_castpd128_pd256(_mm_loadu_pd(x)), 0x50);
}

// c * z for two packed complex numbers, c given as (re, re, ...) and (im, im, ...)
inline __m256d cmul(__m256d cr, __m256d ci, __m256d z) {
    const __m256d zs = _mm256_permute_pd(z, 0x5);
    return _mm256_addsub_pd(_mm256_mul_pd(cr, z), _mm256_mul_pd(ci, zs));
}

double norm2_weighted(const cplx* psi, const double* w, std::size_t n) {
    const double* p = reinterpret_cast<const double*>(psi);
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d a = _mm256_loadu_pd(p + 2 * j);
        const __m256d b = _mm256_loadu_pd(p + 2 * j + 4);
        acc0 = _mm256_fmadd_pd(_mm256_mul_pd(a, a), dup_pairs(w + j), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_mul_pd(b, b), dup_pairs(w + j + 2), acc1);
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; j < n; ++j) s += w[j] * std::norm(psi[j]);
    return s;
}

void axpy_rc(cplx* y, cplx a, const double* x, std::size_t n) {
    double* q = reinterpret_cast<double*>(y);
    const __m256d av = _mm256_setr_pd(a.real(), a.imag(), a.real(), a.imag());
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
        const __m256d yv = _mm256_loadu_pd(q + 2 * j);
        _mm256_storeu_pd(q + 2 * j, _mm256_fmadd_pd(av, dup_pairs(x + j), yv));
    }
    for (; j < n; ++j) y[j] += a * x[j];
}

void axpy_cr(cplx* y, double s, const cplx* x, std::size_t n) {
    double* q = reinterpret_cast<double*>(y);
    const double* p = reinterpret_cast<const double*>(x);
    const __m256d sv = _mm256_set1_pd(s);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2)
        _mm256_storeu_pd(q + 2 * j, _mm256_fmadd_pd(sv, _mm256_loadu_pd(p + 2 * j), _mm256_loadu_pd(q + 2 * j)));
    for (; j < n; ++j) y[j] += s * x[j];
}

cplx dot_rc(const double* x, const cplx* y, std::size_t n) {
    const double* p = reinterpret_cast<const double*>(y);
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        acc0 = _mm256_fmadd_pd(dup_pairs(x + j), _mm256_loadu_pd(p + 2 * j), acc0);
        acc1 = _mm256_fmadd_pd(dup_pairs(x + j + 2), _mm256_loadu_pd(p + 2 * j + 4), acc1);
    }
    const __m256d acc = _mm256_add_pd(acc0, acc1);
    __m128d v = _mm_add_pd(_mm256_castpd256_pd128(acc), _mm256_extractf128_pd(acc, 1));
    double re = _mm_cvtsd_f64(v), im = _mm_cvtsd_f64(_mm_unpackhi_pd(v, v));
    for (; j < n; ++j) {
        re += x[j] * y[j].real();
        im += x[j] * y[j].imag();
    }
    return {re, im};
}

void stencil3(cplx* out, const cplx* in, cplx d, cplx o, std::size_t n) {
    if (n < 3) return;
    const double* p = reinterpret_cast<const double*>(in);
    double* q = reinterpret_cast<double*>(out);
    const __m256d dr = _mm256_set1_pd(d.real()), di = _mm256_set1_pd(d.imag());
    const __m256d orr = _mm256_set1_pd(o.real()), oi = _mm256_set1_pd(o.imag());
    std::size_t j = 1;
    for (; j + 2 < n; j += 2) {
        const __m256d c = _mm256_loadu_pd(p + 2 * j);
        const __m256d nb = _mm256_add_pd(_mm256_loadu_pd(p + 2 * j - 2), _mm256_loadu_pd(p + 2 * j + 2));
        _mm256_storeu_pd(q + 2 * j, _mm256_add_pd(cmul(dr, di, c), cmul(orr, oi, nb)));
    }
    for (; j + 1 < n; ++j) out[j] = d * in[j] + o * (in[j - 1] + in[j + 1]);
}

const KernelTable table{"avx2", norm2_weighted, axpy_rc, axpy_cr, dot_rc, stencil3};

}  // namespace

const KernelTable& avx2_table() { return table; }

}  // namespace smilansky
