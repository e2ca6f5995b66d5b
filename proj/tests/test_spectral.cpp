#include <cmath>
#include <random>

#include "doctest.h"
#include "smilansky/channel.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/recursion.hpp"
#include "smilansky/spectral.hpp"

using namespace smilansky;

namespace {

const ModelParams P = make_params(1.3, 1.0);

const EigenfunctionTable& small_table() {
    static const auto t = build_table({-1.3, 2.0, 2.1, 2.3}, 1100, P);
    return t;
}

}  // namespace

TEST_CASE("overlap P_n") {
    const auto& t = small_table();
    // diagonal with an evanescent channel: v normalized, so P_n = C^2
    const size_t e = t.index_of(2.0);
    CHECK(overlap_pn(5, 2.0, 2.0, t) == doctest::Approx(t.C[e][5] * t.C[e][5]).epsilon(1e-12));
    for (int n : {0, 1, 4, 30}) CHECK(overlap_pn(n, 2.0, 2.1, t) == doctest::Approx(overlap_pn(n, 2.1, 2.0, t)).epsilon(1e-14));

    // two quadrature resolutions agree
    const double a = overlap_pn(0, 2.0, 2.1, t, gauss_legendre(0.0, std::numbers::pi, 4, 32));
    const double b = overlap_pn(0, 2.0, 2.1, t, gauss_legendre(0.0, std::numbers::pi, 16, 64));
    CHECK(std::abs(a - b) < 1e-8 * std::abs(b));
    CHECK(overlap_pn(0, 2.0, 2.1, t) == doctest::Approx(b).epsilon(1e-10));
}

TEST_CASE("wronskian and telescoping") {
    const auto& t = small_table();
    CHECK(wronskian_w(0, 2.0, 2.1, t) == 0.0);
    for (int n : {1, 7, 300}) CHECK(wronskian_w(n, 2.1, 2.0, t) == -wronskian_w(n, 2.0, 2.1, t));
    for (int N : {1, 10, 100, 1000}) {
        const auto r = telescoping_check(2.0, 2.3, N, t);
        CHECK(r.gap <= 1e-8 * std::abs(r.lhs));
        const auto s = telescoping_check(-1.3, 2.1, N, t);
        CHECK(s.gap <= 1e-8 * std::abs(s.lhs));
    }
}

TEST_CASE("delta kernel envelope and diagonal growth") {
    const auto& t = small_table();
    const std::vector<long> N{1000, 1050};
    const auto k = delta_kernel_profile(2.0, {2.0, 2.3, -1.3}, N, t);
    // isometric tables scale P_n by 2 lambda, and the unit_pi envelope is half the printed one
    const double lam = lambda_closed(P);
    for (size_t j = 0; j < N.size(); ++j) {
        CHECK(std::abs(k.K[j][1]) <= lam * k.envelope[1] * 1.1);
        CHECK(std::abs(k.K[j][2]) <= lam * k.envelope[2] * 1.1);
    }
    CHECK(k.K[1][0] > k.K[0][0]);
}

TEST_CASE("profiles and synthesis") {
    const auto prof = reference_profile();
    CHECK(prof.norm2() == doctest::Approx(1.0).epsilon(1e-12));
    check_support(prof, 1.0);

    bool threw = false;
    try {
        check_support(bump_profile({0.4, 0.7}), 1.0);
    } catch (const Error& e) {
        threw = e.kind() == ErrorKind::SupportViolation;
    }
    CHECK(threw);

    const auto tab = build_table(prof.rule.x, 400, P);
    const HalfGrid g(300);
    const auto s0 = synthesize(prof, tab, g, 1.0);
    const auto p0 = spectral_propagate(prof, 0.0, tab, g, 1.0);
    CHECK(distance(s0, p0) == 0.0);

    {
        // the grid norm is exact only up to O(dx^2), so the check uses a fine grid
        const auto p105 = make_params(1.05, 1.0);
        const auto tab105 = build_table(prof.rule.x, 1000, p105);
        const HalfGrid fine(4800);
        const double n0 = synthesize(prof, tab105, fine, 1.0).norm2();
        CHECK(spectral_propagate(prof, 1.0, tab105, fine, 1.0).norm2() == doctest::Approx(n0).epsilon(1e-6));
    }

    // linearity and the zero profile
    SpectralProfile zero = prof;
    for (auto& v : zero.values) v = 0.0;
    CHECK(synthesize(zero, tab, g, 1.0).norm2() == 0.0);
    SpectralProfile a = prof, b = prof, ab = prof;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    for (size_t i = 0; i < prof.values.size(); ++i) {
        a.values[i] = cplx(nd(rng), nd(rng));
        b.values[i] = cplx(nd(rng), nd(rng));
        ab.values[i] = a.values[i] + b.values[i];
    }
    auto sa = synthesize(a, tab, g, 1.0);
    const auto sb = synthesize(b, tab, g, 1.0);
    const auto sab = synthesize(ab, tab, g, 1.0);
    for (size_t i = 0; i < sa.psi.size(); ++i) sa.psi[i] += sb.psi[i];
    CHECK(distance(sa, sab) < 1e-12 * std::sqrt(sab.norm2()));
}

TEST_CASE("isometry improves with the channel cutoff") {
    const auto prof = reference_profile();
    double prev = 0.0;
    for (int n_max : {100, 400, 1600}) {
        const auto tab = build_table(prof.rule.x, n_max, P);
        const double r = synthesized_norm2(prof, tab);
        MESSAGE("n_max=" << n_max << " norm ratio " << r);
        CHECK(r > prev);
        CHECK(r <= 1.0 + 1e-3);
        prev = r;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(2e-3));
}

TEST_CASE("log-frequency fit recovers a synthetic signal") {
    std::vector<long> N;
    std::vector<double> K;
    for (int k = 0; k <= 100; ++k) {
        N.push_back(std::lround(std::pow(10.0, 3 + 2.0 * k / 100)));
        K.push_back(0.3 * std::sin(1.7 * std::log(double(N.back())) + 0.4));
    }
    const auto f = fit_log_frequency(N, K);
    CHECK(f.frequency == doctest::Approx(1.7).epsilon(1e-8));
    CHECK(f.amplitude == doctest::Approx(0.3).epsilon(1e-8));
    CHECK(std::remainder(f.phase - 0.4, 2 * std::numbers::pi) == doctest::Approx(0.0).epsilon(1e-6));
}
