#include "smilansky/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smilansky/errors.hpp"

namespace smilansky {

const char* to_string(Regime r) {
    switch (r) {
        case Regime::subcritical: return "subcritical";
        case Regime::critical: return "critical";
        case Regime::overcritical: return "overcritical";
    }
    return "unknown";
}

Regime ModelParams::regime() const { return classify_regime(*this); }

void validate(const ModelParams& p) {
    if (!(p.alpha > 0.0) || !std::isfinite(p.alpha))
        fail(ErrorKind::PreconditionViolation, "alpha must be positive, got " + std::to_string(p.alpha));
    if (!(p.omega > 0.0) || !std::isfinite(p.omega))
        fail(ErrorKind::PreconditionViolation, "omega must be positive, got " + std::to_string(p.omega));
}

ModelParams make_params(double alpha, double omega) {
    ModelParams p{alpha, omega};
    validate(p);
    return p;
}

Regime classify_regime(const ModelParams& p) {
    if (p.alpha < p.omega) return Regime::subcritical;
    if (p.alpha == p.omega) return Regime::critical;
    return Regime::overcritical;
}

Rescaled rescale(const ModelParams& p, double lambda) {
    if (!(lambda > 0.0)) fail(ErrorKind::PreconditionViolation, "scaling parameter must be positive");
    const double l2 = lambda * lambda;
    return {ModelParams{p.alpha / l2, p.omega / l2}, l2, lambda};
}

ExceptionalSet exceptional_energies(double omega, Interval interval, double length_scale) {
    if (!(omega > 0.0)) fail(ErrorKind::PreconditionViolation, "omega must be positive");
    if (!(interval.hi >= interval.lo) || !std::isfinite(interval.lo) || !std::isfinite(interval.hi))
        fail(ErrorKind::PreconditionViolation, "interval must be bounded and ordered");
    ExceptionalSet out{omega, interval, {}};
    const double s2 = length_scale * length_scale;
    for (long n = 0;; ++n) {
        const double thr = (n + 0.5) * omega;
        if (thr > interval.hi) break;
        if (interval.contains(thr)) out.points.push_back(thr);
        for (long r = 0;; ++r) {
            const double e = 0.5 * ((2 * n + 1) * omega + (r + 0.5) * (r + 0.5) / s2);
            if (e > interval.hi) break;
            if (interval.contains(e)) out.points.push_back(e);
        }
    }
    std::sort(out.points.begin(), out.points.end());
    out.points.erase(std::unique(out.points.begin(), out.points.end(),
                                 [](double a, double b) { return std::abs(a - b) <= 1e-14 * std::max(1.0, std::abs(a)); }),
                     out.points.end());
    return out;
}

double distance_to_exceptional(double E, double omega) {
    double best = std::abs(E - 0.5 * omega);
    for (long n = 0;; ++n) {
        const double thr = (n + 0.5) * omega;
        if (thr > E + best) break;
        best = std::min(best, std::abs(E - thr));
        const double k2 = 2.0 * E - (2 * n + 1) * omega;
        // nearest zero of cos(k pi) in this channel
        long r0 = 0;
        if (k2 > 0.0) r0 = std::max(0L, static_cast<long>(std::floor(std::sqrt(k2) - 0.5)));
        for (long r = std::max(0L, r0 - 1); r <= r0 + 2; ++r) {
            const double e = 0.5 * ((2 * n + 1) * omega + (r + 0.5) * (r + 0.5));
            best = std::min(best, std::abs(E - e));
        }
    }
    return best;
}

bool near_exceptional(double E, double omega, double guard) { return distance_to_exceptional(E, omega) < guard; }

double OscillatorTable::element(int n, int m) const {
    if (n < 0 || m < 0 || n > n_max || m > n_max) return 0.0;
    if (m == n + 1) return upper[n];
    if (n == m + 1) return upper[m];
    return 0.0;
}

OscillatorTable oscillator_matrix_elements(int n_max, double omega) {
    if (n_max < 1) fail(ErrorKind::PreconditionViolation, "n_max must be at least 1");
    if (!(omega > 0.0)) fail(ErrorKind::PreconditionViolation, "omega must be positive");
    OscillatorTable t{omega, n_max, std::vector<double>(n_max)};
    for (int n = 0; n < n_max; ++n) t.upper[n] = std::sqrt((n + 1) / (2.0 * omega));
    return t;
}

}  // namespace smilansky
