#include "smilansky/channel.hpp"

#include <limits>
#include <numbers>
#include <string>

#include "smilansky/errors.hpp"

namespace smilansky {

namespace {
constexpr double pi = std::numbers::pi;
}

ChannelMode mode(int n, double E, const ModelParams& p) {
    validate(p);
    if (n < 0) fail(ErrorKind::PreconditionViolation, "channel index must be nonnegative");
    const double s = 2.0 * E - (2.0 * n + 1.0) * p.omega;
    if (std::abs(s) < kThresholdGuard)
        fail(ErrorKind::ThresholdEnergy, "E=" + std::to_string(E) + " is the threshold of channel " + std::to_string(n));
    ChannelMode m;
    m.n = n;
    m.E = E;
    if (s > 0.0) {
        m.kind = ModeKind::oscillatory;
        m.k_or_chi = std::sqrt(s);
        const double k = m.k_or_chi;
        m.rho = 1.0 / std::sqrt(pi + std::sin(2.0 * k * pi) / (2.0 * k));
        m.log_rho = std::log(m.rho);
    } else {
        m.kind = ModeKind::evanescent;
        const double chi = std::sqrt(-s);
        m.k_or_chi = chi;
        // rho = exp(-chi pi) / den with den = sqrt(pi t + (1 - t^2) / (4 chi)), t = exp(-2 chi pi)
        m.t = std::exp(-2.0 * chi * pi);
        m.den = std::sqrt(pi * m.t + detail::one_minus_exp_neg(4.0 * chi * pi) / (4.0 * chi));
        m.log_rho = -chi * pi - std::log(m.den);
        m.rho = std::exp(m.log_rho);
    }
    return m;
}

BoundaryValues v_boundary(const ChannelMode& m) {
    const double kc = m.k_or_chi;
    if (m.kind == ModeKind::oscillatory) return {m.rho * std::cos(kc * pi), m.rho * kc * std::sin(kc * pi)};
    return {(1.0 + m.t) / (2.0 * m.den), -kc * detail::one_minus_exp_neg(2.0 * kc * pi) / (2.0 * m.den)};
}

double v_at(const ChannelMode& m, double x) {
    const double ax = std::min(std::abs(x), pi);
    const double kc = m.k_or_chi;
    if (m.kind == ModeKind::oscillatory) return m.rho * std::cos(kc * (ax - pi));
    return (std::exp(-kc * ax) + std::exp(-kc * (2.0 * pi - ax))) / (2.0 * m.den);
}

double channel_zero_distance(int m, double E, double omega) {
    const double s = 2.0 * E - (2.0 * m + 1.0) * omega;
    if (s <= 0.0) return std::numeric_limits<double>::infinity();
    const double k = std::sqrt(s);
    const double r = std::max(0.0, std::round(k - 0.5));
    const double e_star = 0.5 * ((2.0 * m + 1.0) * omega + (r + 0.5) * (r + 0.5));
    return std::abs(E - e_star);
}

CoeffTriple coeff_triple(int n, double E, const ModelParams& p, double guard) {
    if (n < -1) fail(ErrorKind::PreconditionViolation, "coefficient index must be >= -1");
    CoeffTriple c{n, std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0, false};
    const auto m2 = mode(n + 2, E, p);
    const auto m1 = mode(n + 1, E, p);
    c.h2 = p.alpha * std::sqrt(n + 2.0) * v_boundary(m2).v0;
    c.h1 = std::sqrt(2.0 * p.omega) * v_boundary(m1).dv0;
    if (channel_zero_distance(n + 2, E, p.omega) < guard) c.exceptional = true;
    if (n >= 0) {
        const auto m0 = mode(n, E, p);
        c.h0 = p.alpha * std::sqrt(n + 1.0) * v_boundary(m0).v0;
        if (channel_zero_distance(n, E, p.omega) < guard) c.exceptional = true;
    }
    return c;
}

}  // namespace smilansky
