#include "smilansky/kernels.hpp"

namespace smilansky {

namespace {

double norm2_weighted(const cplx* psi, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += w[j] * std::norm(psi[j]);
    return s;
}

void axpy_rc(cplx* y, cplx a, const double* x, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

void axpy_cr(cplx* y, double s, const cplx* x, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += s * x[j];
}

cplx dot_rc(const double* x, const cplx* y, std::size_t n) {
    double re = 0.0, im = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        re += x[j] * y[j].real();
        im += x[j] * y[j].imag();
    }
    return {re, im};
}

void stencil3(cplx* out, const cplx* in, cplx d, cplx o, std::size_t n) {
    for (std::size_t j = 1; j + 1 < n; ++j) out[j] = d * in[j] + o * (in[j - 1] + in[j + 1]);
}

const KernelTable table{"scalar", norm2_weighted, axpy_rc, axpy_cr, dot_rc, stencil3};

}  // namespace

const KernelTable& scalar_kernels() { return table; }

}  // namespace smilansky
