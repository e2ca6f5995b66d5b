#pragma once

#include <complex>
#include <cstddef>

namespace smilansky {

using cplx = std::complex<double>;

// Inner loops used by synthesis, the propagator and the observables.
struct KernelTable {
    const char* name;
    // sum_j w[j] |psi[j]|^2
    double (*norm2_weighted)(const cplx* psi, const double* w, std::size_t n);
    // y[j] += a * x[j], x real
    void (*axpy_rc)(cplx* y, cplx a, const double* x, std::size_t n);
    // y[j] += s * x[j], s real
    void (*axpy_cr)(cplx* y, double s, const cplx* x, std::size_t n);
    // sum_j x[j] * y[j], x real
    cplx (*dot_rc)(const double* x, const cplx* y, std::size_t n);
    // out[j] = d * in[j] + o * (in[j-1] + in[j+1]) for 1 <= j <= n-2
    void (*stencil3)(cplx* out, const cplx* in, cplx d, cplx o, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();
// AVX2 when available unless SMILANSKY_SIMD=scalar.
const KernelTable& kernels();

}  // namespace smilansky
