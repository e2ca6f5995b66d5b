#include "smilansky/band.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "smilansky/channel.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/parallel.hpp"

namespace smilansky {

namespace {
constexpr double pi = std::numbers::pi;
constexpr double kRootTol = 1e-12;

template <class F>
double bracket_root(F f, double lo, double hi) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) fail(ErrorKind::RootNotConverged, "lost root bracket");
    std::uintmax_t iters = 200;
    auto tol = boost::math::tools::eps_tolerance<double>(52);
    auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
    return 0.5 * (r.first + r.second);
}

// chi tanh(pi chi) = s, s > 0
double solve_chi(double s) {
    auto f = [s](double c) { return c * std::tanh(pi * c) - s; };
    return bracket_root(f, 0.0, s + 1.0);
}

void fill_imaginary(BandPoint& bp, double chi) {
    bp.imaginary = true;
    bp.xi = chi;
    bp.W = -0.5 * chi * chi;
    bp.t = std::exp(-2.0 * chi * pi);
    // integral of cosh^2 over the circle, scaled by exp(-2 chi pi)
    bp.den = std::sqrt(pi * bp.t + detail::one_minus_exp_neg(4.0 * chi * pi) / (4.0 * chi));
    bp.A = std::exp(-chi * pi) / bp.den;
}
}  // namespace

double BandPoint::phi(double x) const {
    const double ax = std::min(std::abs(x), pi);
    if (imaginary) return (std::exp(-xi * ax) + std::exp(-xi * (2.0 * pi - ax))) / (2.0 * den);
    return A * std::cos(xi * (ax - pi));
}

BandPoint solve_xi(double q, int n, const ModelParams& p) {
    validate(p);
    if (n < 0) fail(ErrorKind::PreconditionViolation, "band index must be nonnegative");
    BandPoint bp;
    bp.q = q;
    bp.n = n;
    const double a = p.alpha * q;
    if (a < 0.0 && n == 0) {
        const double chi = solve_chi(-a);
        fill_imaginary(bp, chi);
        bp.residual = std::abs(std::tanh(pi * chi) + a / chi);
        if (!(bp.residual <= kRootTol))
            fail(ErrorKind::RootNotConverged, "imaginary branch residual " + std::to_string(bp.residual));
        return bp;
    }
    // solve for the offset d = xi - n: d - atan(a / (n + d)) / pi = 0,
    // d in (0, 1/2) for a > 0 and (-1/2, 0) for a < 0
    double d = 0.0;
    if (a != 0.0) {
        auto h = [a, n](double x) { return x - std::atan(a / (n + x)) / pi; };
        d = a > 0.0 ? bracket_root(h, n == 0 ? 1e-300 : 0.0, 0.5) : bracket_root(h, -0.5, 0.0);
    }
    const double xi = n + d;
    bp.xi = xi;
    bp.W = 0.5 * xi * xi;
    bp.A = xi == 0.0 ? 1.0 / std::sqrt(2.0 * pi) : 1.0 / std::sqrt(pi + std::sin(2.0 * pi * d) / (2.0 * xi));
    bp.residual = xi == 0.0 ? 0.0 : std::abs(std::sin(pi * d - std::atan(a / xi)));
    if (!(bp.residual <= kRootTol))
        fail(ErrorKind::RootNotConverged, "band root residual " + std::to_string(bp.residual) + " q=" + std::to_string(q) + " n=" + std::to_string(n));
    return bp;
}

double band_eigenfunction(const BandPoint& bp, double x) { return bp.phi(x); }

double dW_dq(double q, int n, const ModelParams& p) {
    const double f0 = solve_xi(q, n, p).phi0();
    return p.alpha * f0 * f0;
}

BandPotential band_potential(double q, const ModelParams& p, int l_max, bool include_gamma) {
    if (l_max < 10) fail(ErrorKind::PreconditionViolation, "l_max must be at least 10");
    BandPotential r;
    const auto g = solve_xi(q, 0, p);
    r.harmonic = 0.5 * p.omega * p.omega * q * q;
    r.W0 = g.W;
    if (include_gamma) {
        const double f0 = g.phi0();
        double sum = 0.0, term = 0.0;
        for (int n = 1; n <= l_max; ++n) {
            const auto b = solve_xi(q, n, p);
            const double gam = p.alpha * b.phi0() * f0 / (g.W - b.W);
            term = 0.5 * gam * gam;
            sum += term;
        }
        r.gamma_term = sum;
        r.last_term = term;
        // phi_n(0)^2 <= 1/(pi - 1) and W_n - W_0 > ((n - 1/2)^2 - 1/4) / 2 for n > l_max
        double tail = 0.0;
        for (int n = l_max + 1; n <= l_max + 100000; ++n) {
            const double gap = 0.5 * ((n - 0.5) * (n - 0.5) - 0.25);
            tail += 1.0 / (gap * gap);
        }
        const double L = l_max + 100000.0;
        tail += 4.0 / (3.0 * L * L * L);
        r.tail_bound = 0.5 * p.alpha * p.alpha * f0 * f0 / (pi - 1.0) * tail;
    }
    r.V = r.harmonic + r.W0 + r.gamma_term;
    if (include_gamma && r.last_term > 1e-8 * std::abs(r.V))
        fail(ErrorKind::SeriesNotConverged, "gamma series last term " + std::to_string(r.last_term));
    return r;
}

const char* to_string(CurveShape s) {
    switch (s) {
        case CurveShape::bounded_below: return "bounded_below";
        case CurveShape::marginal: return "marginal";
        case CurveShape::inverted: return "inverted";
    }
    return "?";
}

CurveClass classify_band_curve(const ModelParams& p, double lo, double hi) {
    const int m = 101;
    Eigen::MatrixXd X(m, 3);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
        const double q = lo + (hi - lo) * i / (m - 1);
        X(i, 0) = q * q;
        X(i, 1) = q;
        X(i, 2) = 1.0;
        y(i) = band_potential(q, p, 10, false).V;
    }
    const Eigen::Vector3d c = X.colPivHouseholderQr().solve(y);
    CurveClass out{CurveShape::marginal, c(0)};
    if (c(0) > 0.01) out.shape = CurveShape::bounded_below;
    else if (c(0) < -0.01) out.shape = CurveShape::inverted;
    return out;
}

double band_ground_energy(const ModelParams& p, double L, int points) {
    const double h = 2.0 * L / (points + 1);
    Eigen::VectorXd diag(points), off(points - 1);
    for (int i = 0; i < points; ++i) {
        const double q = -L + h * (i + 1);
        diag(i) = 1.0 / (h * h) + band_potential(q, p, 10, false).V;
    }
    off.setConstant(-0.5 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

// ---------------------------------------------------------------------------

namespace {

// (chi^2 + a1 a2) tanh(pi chi) + chi (a1 + a2), scaled
double G2(double c, double a1, double a2) {
    return ((c * c + a1 * a2) * std::tanh(pi * c) + c * (a1 + a2)) / (c * c + std::abs(a1 * a2) + c * std::abs(a1 + a2) + 1e-300);
}

// (xi - a1 a2 / xi) sin(pi xi) - (a1 + a2) cos(pi xi), scaled
double F2(double x, double a1, double a2) {
    const double u = x - a1 * a2 / x, v = a1 + a2;
    return (u * std::sin(pi * x) - v * std::cos(pi * x)) / (std::abs(u) + std::abs(v) + 1e-300);
}

std::vector<double> imaginary_roots(double a1, double a2) {
    const double g0 = pi * a1 * a2 + a1 + a2;
    std::vector<double> roots;
    auto f = [a1, a2](double c) { return G2(c, a1, a2); };
    double X = std::max(std::abs(a1), std::abs(a2)) + 1.0;
    while (f(X) <= 0.0) X *= 2.0;
    if (g0 < 0.0) {
        roots.push_back(bracket_root(f, 1e-300, X));
    } else if (a1 < 0.0 && a2 < 0.0 && g0 > 0.0) {
        const double cm = std::sqrt(a1 * a2);
        if (f(cm) >= 0.0) {
            roots = {cm, cm};  // splitting below double resolution
        } else {
            roots.push_back(bracket_root(f, cm, X));
            roots.push_back(bracket_root(f, 1e-300, cm));
        }
    }
    std::sort(roots.begin(), roots.end(), std::greater<>());
    return roots;
}

// first `count` nonnegative real roots of the two-oscillator equation
std::vector<double> real_roots(double a1, double a2, int count) {
    std::vector<double> roots;
    const double g0 = pi * a1 * a2 + a1 + a2;
    if (std::abs(g0) <= 1e-14 * (1.0 + std::abs(a1) + std::abs(a2) + std::abs(pi * a1 * a2))) roots.push_back(0.0);
    auto f = [a1, a2](double x) { return F2(x, a1, a2); };
    const double step = 1.0 / 64.0;
    double x0 = step / 2.0;
    double f0 = f(x0);
    while (int(roots.size()) < count) {
        const double x1 = x0 + step;
        const double f1 = f(x1);
        if (f0 == 0.0) {
            roots.push_back(x0);
        } else if ((f0 > 0) != (f1 > 0) && f1 != 0.0) {
            const double r = bracket_root(f, x0, x1);
            // clearing xi can only add the root at 0; still screen against the original form
            const double res = std::abs(f(r));
            if (res <= kRootTol) roots.push_back(r);
        }
        x0 = x1;
        f0 = f1;
        if (x0 > count + 4.0 + std::abs(a1) + std::abs(a2))
            fail(ErrorKind::RootNotConverged, "two-oscillator real root scan exhausted");
    }
    return roots;
}

}  // namespace

int imaginary_root_count(double q1, double q2, const ModelParams& p) {
    const double a1 = p.alpha * q1, a2 = p.alpha * q2;
    const double g0 = pi * a1 * a2 + a1 + a2;
    if (g0 < 0.0) return 1;
    if (a1 < 0.0 && a2 < 0.0 && g0 > 0.0) return 2;
    return 0;
}

BandPoint2 solve_xi2(double q1, double q2, int n, const ModelParams& p) {
    validate(p);
    if (n < 0) fail(ErrorKind::PreconditionViolation, "band index must be nonnegative");
    // symmetric evaluation order
    const double qa = std::min(q1, q2), qb = std::max(q1, q2);
    const double a1 = p.alpha * qa, a2 = p.alpha * qb;
    BandPoint2 r;
    r.q1 = q1;
    r.q2 = q2;
    r.n = n;
    const auto im = imaginary_roots(a1, a2);
    if (n < int(im.size())) {
        const double c = im[n];
        r.imaginary = true;
        r.xi = c;
        r.W = -0.5 * c * c;
        r.residual = std::abs(G2(c, a1, a2));
    } else {
        const auto re = real_roots(a1, a2, n - int(im.size()) + 1);
        const double x = re.back();
        r.xi = x;
        r.W = 0.5 * x * x;
        r.residual = x == 0.0 ? 0.0 : std::abs(F2(x, a1, a2));
    }
    if (!(r.residual <= kRootTol))
        fail(ErrorKind::RootNotConverged, "two-oscillator residual " + std::to_string(r.residual));
    r.E = 0.5 * p.omega * p.omega * (q1 * q1 + q2 * q2) + r.W;
    return r;
}

bool region_R(double q1, double q2, const ModelParams& p) {
    const double qp = std::max(q1, q2), qm = std::min(q1, q2);
    if (qp < 0.0) return true;
    return qm < -qp / (1.0 + pi * p.alpha * qp);
}

bool region_R_unscaled(double q1, double q2) {
    const double qp = std::max(q1, q2), qm = std::min(q1, q2);
    return qm < -qp / (1.0 + pi * qp);
}

const char* to_string(SurfaceShape s) {
    switch (s) {
        case SurfaceShape::bounded_below: return "bounded_below";
        case SurfaceShape::valleys_and_crest: return "valleys_and_crest";
        case SurfaceShape::other: return "other";
    }
    return "?";
}

double radial_coefficient(double phi, int n, const ModelParams& p, double t) {
    return solve_xi2(t * std::cos(phi), t * std::sin(phi), n, p).E / (t * t);
}

SurfaceShape classify_surface(int n, const ModelParams& p, double t) {
    const int m = 720;
    std::vector<double> c(m);
    parallel_for(m, [&](std::size_t i) { c[i] = radial_coefficient(2.0 * pi * i / m, n, p, t); });
    const double cmin = *std::min_element(c.begin(), c.end());
    if (cmin > 0.0) return SurfaceShape::bounded_below;
    // angles 180 and 270 degrees are the negative axes, 225 the negative diagonal
    const double ax1 = c[m / 2], ax2 = c[3 * m / 4], diag = c[5 * m / 8];
    if (ax1 < 0.0 && ax2 < 0.0 && diag > 0.0) return SurfaceShape::valleys_and_crest;
    return SurfaceShape::other;
}

double crest_half_width(const ModelParams& p, double t) {
    const double diag = 1.25 * pi;
    auto f = [&](double d) { return radial_coefficient(diag + d, 0, p, t); };
    if (!(f(0.0) > 0.0)) fail(ErrorKind::NotBracketed, "no crest on the negative diagonal");
    if (!(f(0.25 * pi) < 0.0)) fail(ErrorKind::NotBracketed, "no valley on the negative axis");
    double lo = 0.0, hi = 0.25 * pi;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

namespace {
// min over directions of E_n / t^2 (negative means unbounded below)
double min_radial(int n, int oscillators, double omega, double alpha, double t) {
    const ModelParams p = make_params(alpha, omega);
    if (oscillators == 1) {
        double m = std::numeric_limits<double>::infinity();
        for (double q : {-t, t}) {
            const auto b = solve_xi(q, n, p);
            m = std::min(m, (0.5 * omega * omega * q * q + b.W) / (t * t));
        }
        return m;
    }
    const int k = 360;
    std::vector<double> c(k);
    parallel_for(k, [&](std::size_t i) { c[i] = radial_coefficient(2.0 * pi * i / k, n, p, t); });
    const auto it = std::min_element(c.begin(), c.end());
    // golden-section refinement around the coarse minimum
    double a = 2.0 * pi * (double(it - c.begin()) - 1.0) / k, b = a + 4.0 * pi / k;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = radial_coefficient(x1, n, p, t), f2 = radial_coefficient(x2, n, p, t);
    for (int i = 0; i < 60; ++i) {
        if (f1 < f2) {
            b = x2; x2 = x1; f2 = f1; x1 = b - g * (b - a); f1 = radial_coefficient(x1, n, p, t);
        } else {
            a = x1; x1 = x2; f1 = f2; x2 = a + g * (b - a); f2 = radial_coefficient(x2, n, p, t);
        }
    }
    return std::min({*it, f1, f2});
}
}  // namespace

double detect_band_transition(int n, int oscillators, double omega, double alpha_lo, double alpha_hi, double t) {
    if (oscillators != 1 && oscillators != 2) fail(ErrorKind::PreconditionViolation, "one or two oscillators");
    if (!(alpha_lo > 0.0 && alpha_hi > alpha_lo)) fail(ErrorKind::PreconditionViolation, "bad alpha range");
    auto unbounded = [&](double a) { return min_radial(n, oscillators, omega, a, t) < 0.0; };
    if (unbounded(alpha_lo) || !unbounded(alpha_hi))
        fail(ErrorKind::NotBracketed, "band " + std::to_string(n) + " has no transition in the scan range");
    double lo = alpha_lo, hi = alpha_hi;
    while (hi - lo > 1e-7 * hi) {
        const double mid = 0.5 * (lo + hi);
        (unbounded(mid) ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

BandSurface2 band_surface(const std::vector<double>& g1, const std::vector<double>& g2, int n, const ModelParams& p) {
    BandSurface2 s;
    s.q1_grid = g1;
    s.q2_grid = g2;
    s.n = n;
    s.E.assign(g1.size(), std::vector<double>(g2.size()));
    s.imaginary.assign(g1.size(), std::vector<bool>(g2.size()));
    s.region.assign(g1.size(), std::vector<bool>(g2.size()));
    std::vector<char> im(g1.size() * g2.size());
    parallel_for(g1.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < g2.size(); ++j) {
            s.E[i][j] = solve_xi2(g1[i], g2[j], n, p).E;
            im[i * g2.size() + j] = imaginary_root_count(g1[i], g2[j], p) > 0;
        }
    });
    for (std::size_t i = 0; i < g1.size(); ++i)
        for (std::size_t j = 0; j < g2.size(); ++j) {
            s.imaginary[i][j] = im[i * g2.size() + j];
            s.region[i][j] = region_R(g1[i], g2[j], p);
        }
    s.shape = classify_surface(n, p);
    return s;
}

}  // namespace smilansky
