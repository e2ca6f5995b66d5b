#pragma once

#include <cmath>

#include <boost/math/constants/constants.hpp>

#include "smilansky/model.hpp"

namespace smilansky {

enum class ModeKind { oscillatory, evanescent };

// Normalized even channel solution v_n(x, E) = rho cos(k (|x| - pi)), or its
// hyperbolic form with chi = sqrt((2n+1) omega - 2E) below threshold.
struct ChannelMode {
    int n = 0;
    double E = 0.0;
    ModeKind kind = ModeKind::oscillatory;
    double k_or_chi = 0.0;
    double rho = 0.0;      // underflows to 0 for very deep evanescent modes
    double log_rho = 0.0;
    // evanescent helpers: t = exp(-2 chi pi) and rho = exp(-chi pi) / den
    double t = 0.0;
    double den = 1.0;
};

ChannelMode mode(int n, double E, const ModelParams& p);

struct BoundaryValues {
    double v0;
    double dv0;  // v'(0+)
};

BoundaryValues v_boundary(const ChannelMode& m);
double v_at(const ChannelMode& m, double x);

struct CoeffTriple {
    int n;
    double h0;  // NaN for n = -1
    double h1;
    double h2;
    bool exceptional;
};

CoeffTriple coeff_triple(int n, double E, const ModelParams& p, double guard = kExceptionalGuard);

// Distance from E to the nearest zero of v_m(0, .) in channel m (infinity when none is near).
double channel_zero_distance(int m, double E, double omega);

namespace detail {

inline double one_minus_exp_neg(double x) { return -std::expm1(-x); }
template <class Real>
Real one_minus_exp_neg(const Real& x) {
    using std::exp;
    return Real(1) - exp(-x);
}

// Boundary values of v_m at x = 0+ in arithmetic type Real. Shared between
// the double and extended precision recursions.
template <class Real>
void boundary_values(int m, const Real& E, const Real& omega, Real& v0, Real& dv0) {
    using std::cos;
    using std::exp;
    using std::sin;
    using std::sqrt;
    const Real pi = boost::math::constants::pi<Real>();
    const Real s = Real(2) * E - Real(2 * m + 1) * omega;
    if (s > 0) {
        const Real k = sqrt(s);
        const Real rho = Real(1) / sqrt(pi + sin(Real(2) * k * pi) / (Real(2) * k));
        v0 = rho * cos(k * pi);
        dv0 = rho * k * sin(k * pi);
    } else {
        const Real chi = sqrt(-s);
        const Real t = exp(Real(-2) * chi * pi);
        const Real den = sqrt(pi * t + one_minus_exp_neg(Real(4) * chi * pi) / (Real(4) * chi));
        v0 = (Real(1) + t) / (Real(2) * den);
        dv0 = -chi * one_minus_exp_neg(Real(2) * chi * pi) / (Real(2) * den);
    }
}

}  // namespace detail

}  // namespace smilansky
