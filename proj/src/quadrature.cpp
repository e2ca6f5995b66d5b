#include "smilansky/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "smilansky/errors.hpp"

namespace smilansky {

namespace {

struct Ref {
    std::vector<double> t, w;  // on [-1, 1], ascending
};

template <unsigned N>
Ref reference() {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    Ref r;
    // boost stores the nonnegative half; N even so no node at zero
    for (size_t i = a.size(); i-- > 0;) {
        r.t.push_back(-a[i]);
        r.w.push_back(wt[i]);
    }
    for (size_t i = 0; i < a.size(); ++i) {
        r.t.push_back(a[i]);
        r.w.push_back(wt[i]);
    }
    return r;
}

const Ref& ref(int nodes) {
    static const Ref r16 = reference<16>(), r32 = reference<32>(), r64 = reference<64>();
    switch (nodes) {
        case 16: return r16;
        case 32: return r32;
        case 64: return r64;
        default: fail(ErrorKind::PreconditionViolation, "Gauss-Legendre order must be 16, 32 or 64");
    }
}

void add_panel(QuadRule& q, double a, double b, const Ref& r) {
    const double h = 0.5 * (b - a), c = 0.5 * (a + b);
    for (size_t i = 0; i < r.t.size(); ++i) {
        q.x.push_back(c + h * r.t[i]);
        q.w.push_back(h * r.w[i]);
    }
}

void finish(QuadRule& q, double first_width, int nodes) {
    q.dx_max = 0.0;
    for (size_t i = 1; i < q.x.size(); ++i) q.dx_max = std::max(q.dx_max, q.x[i] - q.x[i - 1]);
    q.dx_first = first_width / nodes;
}

}  // namespace

QuadRule gauss_legendre(double a, double b, int panels, int nodes) {
    if (panels < 1 || !(b > a)) fail(ErrorKind::PreconditionViolation, "bad quadrature interval");
    QuadRule q;
    const auto& r = ref(nodes);
    const double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) add_panel(q, a + p * h, p + 1 == panels ? b : a + (p + 1) * h, r);
    finish(q, h, nodes);
    return q;
}

QuadRule graded_gauss_legendre(double a, double b, int levels, int outer_panels, int nodes) {
    if (levels < 0 || outer_panels < 1 || !(b > a)) fail(ErrorKind::PreconditionViolation, "bad quadrature interval");
    QuadRule q;
    const auto& r = ref(nodes);
    const double L = b - a;
    double lo = a;
    double hi = a + L * std::ldexp(1.0, -levels - 1);
    const double first = hi - lo;
    add_panel(q, lo, hi, r);
    for (int k = levels; k >= 1; --k) {
        lo = hi;
        hi = a + L * std::ldexp(1.0, -k);
        add_panel(q, lo, hi, r);
    }
    const double h = (b - hi) / outer_panels;
    const double start = hi;
    for (int p = 0; p < outer_panels; ++p) add_panel(q, start + p * h, p + 1 == outer_panels ? b : start + (p + 1) * h, r);
    finish(q, first, nodes);
    return q;
}

}  // namespace smilansky
