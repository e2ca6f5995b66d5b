#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "smilansky/band.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/quadrature.hpp"

using namespace smilansky;
using std::numbers::pi;

namespace {

// Even sector of -1/2 d^2/dx^2 + c1 delta(x) + c2 delta(x - pi) on the circle,
// nodes j h on [0, pi] with mirror ghosts, symmetrized by the half end weights.
std::vector<double> fd_even_levels(double c1, double c2, int M, int count) {
    const double h = pi / M;
    Eigen::VectorXd d(M + 1), e(M);
    for (int j = 0; j <= M; ++j) d[j] = 1.0 / (h * h);
    d[0] += c1 / h;
    d[M] += c2 / h;
    for (int j = 0; j < M; ++j) e[j] = -0.5 / (h * h);
    e[0] = e[M - 1] = -1.0 / (std::sqrt(2.0) * h * h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + count);
    return out;
}

double bisect(auto f, double a, double b) {
    double fa = f(a);
    for (int i = 0; i < 200 && b - a > 1e-15; ++i) {
        const double m = 0.5 * (a + b), fm = f(m);
        if ((fm < 0) == (fa < 0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

TEST_CASE("single oscillator roots") {
    const auto p = make_params(1.3, 1.0);
    for (int n = 0; n < 50; ++n) {
        const auto b = solve_xi(0.0, n, p);
        CHECK(b.xi == n);
        CHECK(!b.imaginary);
    }
    CHECK(solve_xi(0.0, 0, p).W == 0.0);

    const auto p1 = make_params(1.0, 1.0);
    const double chi = bisect([](double c) { return std::tanh(pi * c) - 1.0 / c; }, 0.5, 2.0);
    const auto b = solve_xi(-1.0, 0, p1);
    CHECK(b.imaginary);
    CHECK(b.xi == doctest::Approx(chi).epsilon(1e-12));
    CHECK(b.residual < 1e-12);

    const auto big = solve_xi(1e3, 0, p);
    CHECK(std::abs(big.W - 0.125) < 1e-3);
    CHECK(big.xi < 0.5);

    // large n keeps full accuracy in the offset
    const auto hi = solve_xi(3.7, 700, p);
    CHECK(hi.residual < 1e-12);
    CHECK(hi.xi > 700.0);
    CHECK(hi.xi < 700.5);
}

TEST_CASE("single oscillator levels match finite differences") {
    const auto p = make_params(1.3, 1.0);
    for (double q : {-2.0, -0.5, 0.7, 3.0}) {
        const auto fd = fd_even_levels(p.alpha * q, 0.0, 4000, 4);
        for (int n = 0; n < 4; ++n) CHECK(solve_xi(q, n, p).W == doctest::Approx(fd[n]).epsilon(2e-5).scale(1.0));
    }
}

TEST_CASE("band eigenfunctions") {
    const auto p = make_params(1.3, 1.0);
    const auto f = solve_xi(0.0, 1, p);
    CHECK(f.A == doctest::Approx(1.0 / std::sqrt(pi)).epsilon(1e-14));
    for (double x : {0.2, 1.0, 2.5}) CHECK(std::abs(f.phi(x)) == doctest::Approx(std::abs(std::cos(x)) / std::sqrt(pi)));
    CHECK(f.phi(pi) > 0.0);

    const auto rule = gauss_legendre(0.0, pi, 16, 64);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uq(-8.0, 8.0);
    for (int k = 0; k < 12; ++k) {
        const auto b = solve_xi(uq(rng), k % 4, p);
        double s = 0.0;
        for (size_t i = 0; i < rule.x.size(); ++i) s += 2.0 * rule.w[i] * b.phi(rule.x[i]) * b.phi(rule.x[i]);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
    }

    const auto peak = solve_xi(-10.0, 0, p);
    CHECK(peak.imaginary);
    CHECK(peak.phi0() / peak.phi(pi) == doctest::Approx(std::cosh(peak.xi * pi)).epsilon(1e-12));
    CHECK(peak.phi0() / peak.phi(pi) > 1e10);
}

TEST_CASE("Feynman-Hellmann derivative") {
    const auto p = make_params(1.3, 1.0);
    CHECK(dW_dq(0.0, 1, p) == doctest::Approx(1.3 / pi).epsilon(1e-14));
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uq(-6.0, 6.0);
    for (int k = 0; k < 30; ++k) CHECK(dW_dq(uq(rng), k % 5, p) >= 0.0);
    const double h = 1e-4;
    const double fd = (solve_xi(-2.0 + h, 0, p).W - solve_xi(-2.0 - h, 0, p).W) / (2 * h);
    CHECK(std::abs(dW_dq(-2.0, 0, p) - fd) < 1e-6 * std::abs(fd));
}

TEST_CASE("band potential") {
    const auto p = make_params(1.3, 1.0);
    // gamma term decays like q^-2
    std::vector<double> lx, ly;
    for (double q : {-80.0, -60.0, -40.0, -30.0, -20.0}) {
        const auto v = band_potential(q, p, static_cast<int>(20 * p.alpha * std::abs(q)) + 50);
        lx.push_back(std::log(std::abs(q)));
        ly.push_back(std::log(v.gamma_term));
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(sxy / sxx == doctest::Approx(-2.0).epsilon(0.05));

    const auto far = band_potential(-1e3, p, 200, false);
    CHECK(far.V / 1e6 == doctest::Approx(-0.345).epsilon(0.01));
    CHECK(far.W0 / 1e6 == doctest::Approx(-0.845).epsilon(0.01));

    const auto sub = make_params(0.8, 1.0);
    double vmin = INFINITY;
    for (int k = 0; k <= 2000; ++k) vmin = std::min(vmin, band_potential(-100.0 + 0.1 * k, sub, 200, false).V);
    CHECK(vmin > -1.0);
    CHECK(band_potential(-100.0, sub, 200, false).V > 100.0);

    bool threw = false;
    try {
        band_potential(-1.0, p, 5);
    } catch (const Error& e) {
        threw = e.kind() == ErrorKind::PreconditionViolation;
    }
    CHECK(threw);
}

TEST_CASE("curve classification and subcritical ground energy") {
    CHECK(classify_band_curve(make_params(0.8, 1.0)).shape == CurveShape::bounded_below);
    CHECK(classify_band_curve(make_params(1.0, 1.0)).shape == CurveShape::marginal);
    const auto inv = classify_band_curve(make_params(1.3, 1.0));
    CHECK(inv.shape == CurveShape::inverted);
    CHECK(inv.quadratic_coefficient == doctest::Approx(-0.345).epsilon(0.01));
    const double e0 = band_ground_energy(make_params(0.8, 1.0));
    CHECK(e0 >= 0.5 * std::sqrt(1.0 - 0.64));
}

TEST_CASE("two oscillators: roots") {
    const auto p = make_params(1.3, 1.0);
    for (int n = 0; n < 6; ++n) CHECK(solve_xi2(0.0, 0.0, n, p).xi == doctest::Approx(double(n)).epsilon(1e-14));
    CHECK(region_R(-1.0, 0.0, p));
    CHECK(solve_xi2(-1.0, 0.0, 0, p).imaginary);

    for (double phi : {200.0, 215.0, 260.0}) {
        const double a = phi * pi / 180.0, t = 1e3;
        const double q1 = t * std::cos(a), q2 = t * std::sin(a);
        const auto b = solve_xi2(q1, q2, 0, p);
        REQUIRE(b.imaginary);
        CHECK(b.xi / (p.alpha * std::abs(std::min(q1, q2))) == doctest::Approx(1.0).epsilon(0.02));
    }

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uq(-3.0, 3.0);
    for (int k = 0; k < 40; ++k) {
        const double q1 = uq(rng), q2 = uq(rng);
        const auto fd = fd_even_levels(p.alpha * q1, p.alpha * q2, 4000, 3);
        int negative = 0;
        for (double v : fd) negative += v < -1e-3;
        if (std::all_of(fd.begin(), fd.end(), [](double v) { return std::abs(v) > 1e-3; }))
            CHECK(imaginary_root_count(q1, q2, p) == negative);
        for (int n = 0; n < 3; ++n) {
            const auto a = solve_xi2(q1, q2, n, p), b = solve_xi2(q2, q1, n, p);
            CHECK(a.W == b.W);
            CHECK(a.W == doctest::Approx(fd[n]).epsilon(1e-4).scale(1.0));
        }
    }
}

TEST_CASE("region R against finite differences") {
    for (double alpha : {0.7, 1.3, 2.0}) {
        const auto p = make_params(alpha, 1.0);
        int checked = 0, mismatched = 0;
        for (int i = 0; i <= 24; ++i)
            for (int j = 0; j <= 24; ++j) {
                const double q1 = -3.0 + 0.25 * i, q2 = -3.0 + 0.25 * j;
                const double w0 = fd_even_levels(alpha * q1, alpha * q2, 2000, 1)[0];
                if (std::abs(w0) < 1e-3) continue;
                ++checked;
                mismatched += region_R(q1, q2, p) != (w0 < 0);
                mismatched += solve_xi2(q1, q2, 0, p).imaginary != (w0 < 0);
            }
        CHECK(checked > 500);
        CHECK(mismatched == 0);
    }
    // the alpha-free inequality disagrees away from alpha = 1
    CHECK(region_R_unscaled(1.0, -0.2) != region_R(1.0, -0.2, make_params(2.0, 1.0)));
}

TEST_CASE("surfaces and transitions") {
    CHECK(classify_surface(0, make_params(0.7, 1.0)) == SurfaceShape::bounded_below);
    const auto p = make_params(1.3, 1.0);
    CHECK(classify_surface(0, p) == SurfaceShape::valleys_and_crest);
    CHECK(crest_half_width(p) * 180 / pi == doctest::Approx((std::asin(1.0 / 1.3) - pi / 4) * 180 / pi).epsilon(0.01));

    std::vector<double> g;
    for (int k = 0; k <= 20; ++k) g.push_back(-10.0 + k);
    const auto s = band_surface(g, g, 0, make_params(0.7, 1.0));
    double lo = INFINITY;
    for (auto& row : s.E) lo = std::min(lo, *std::min_element(row.begin(), row.end()));
    CHECK(lo > -1.0);
    for (size_t i = 0; i < g.size(); ++i)
        for (size_t j = 0; j < g.size(); ++j) CHECK(s.region[i][j] == region_R(g[i], g[j], make_params(0.7, 1.0)));

    CHECK(detect_band_transition(0, 1, 1.0, 0.5, 2.0) == doctest::Approx(1.0).epsilon(0.01));
}
