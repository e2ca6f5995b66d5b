#include "smilansky/recursion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <boost/multiprecision/mpfr.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include "smilansky/channel.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/parallel.hpp"

namespace smilansky {

namespace {

constexpr double pi = std::numbers::pi;

using mp113 = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<34>, boost::multiprecision::et_off>;
using mp256 = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<77>, boost::multiprecision::et_off>;
using mp512 = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<155>, boost::multiprecision::et_off>;

int resolve_bits(int requested, int n_max) {
    if (requested <= 0) return n_max > 10000 ? 256 : 53;
    if (requested <= 53) return 53;
    if (requested <= 113) return 113;
    if (requested <= 256) return 256;
    if (requested <= 512) return 512;
    fail(ErrorKind::PreconditionViolation, "precision above 512 bits is not supported");
}

void check_energy(double E, const ModelParams& p) {
    validate(p);
    if (p.regime() != Regime::overcritical)
        fail(ErrorKind::PreconditionViolation, "recursion requires alpha > omega");
    // thresholds first so that the error kind is specific
    const double s = E / p.omega - 0.5;
    if (s >= -0.5 && std::abs(2.0 * E - (2.0 * std::round(s) + 1.0) * p.omega) < kThresholdGuard)
        fail(ErrorKind::ThresholdEnergy, "E=" + std::to_string(E) + " is a channel threshold");
    if (near_exceptional(E, p.omega))
        fail(ErrorKind::ExceptionalEnergy, "E=" + std::to_string(E) + " is within the exceptional guard");
}

template <class Real>
struct Channel {
    Real v0, dv0;
};

template <class Real>
Channel<Real> channel(int m, const Real& E, const Real& omega) {
    Channel<Real> c;
    detail::boundary_values(m, E, omega, c.v0, c.dv0);
    return c;
}

template <class Real>
void run_forward(double Ed, const ModelParams& p, int bits, std::vector<double>& C, double& min_bits) {
    using std::abs;
    using std::sqrt;
    const int n_max = static_cast<int>(C.size()) - 1;
    const Real E(Ed), om(p.omega), al(p.alpha);
    const Real s2w = sqrt(Real(2) * om);
    Channel<Real> ch0 = channel(0, E, om), ch1 = channel(1, E, om);
    Real c_prev(1);
    Real c_cur = -(s2w * ch0.dv0) / (al * ch1.v0);
    C[0] = 1.0;
    C[1] = static_cast<double>(c_cur);
    min_bits = bits;
    for (int n = 0; n + 2 <= n_max; ++n) {
        const Channel<Real> ch2 = channel(n + 2, E, om);
        const Real h2 = al * sqrt(Real(n + 2)) * ch2.v0;
        const Real t1 = s2w * ch1.dv0 * c_cur;
        const Real t0 = al * sqrt(Real(n + 1)) * ch0.v0 * c_prev;
        const Real c_next = -(t1 + t0) / h2;
        const double mag = static_cast<double>(abs(t1) + abs(t0));
        const double out = static_cast<double>(abs(h2 * c_next));
        const double left = out > 0.0 ? bits - std::log2(mag / out) : -1.0;
        min_bits = std::min(min_bits, left);
        if (left < 10.0)
            fail(ErrorKind::PrecisionLoss, "fewer than 10 significant bits at n=" + std::to_string(n + 2));
        C[n + 2] = static_cast<double>(c_next);
        c_prev = c_cur;
        c_cur = c_next;
        ch0 = ch1;
        ch1 = ch2;
    }
}

template <class Real>
void run_backward(double Ed, const ModelParams& p, int n0, double c_n0, double c_n1, std::vector<double>& out) {
    using std::sqrt;
    const Real E(Ed), om(p.omega), al(p.alpha);
    const Real s2w = sqrt(Real(2) * om);
    out.assign(n0 + 2, 0.0);
    Real c2(c_n1), c1(c_n0);
    out[n0 + 1] = c_n1;
    out[n0] = c_n0;
    for (int n = n0 - 1; n >= 0; --n) {
        const auto ch0 = channel(n, E, om), ch1 = channel(n + 1, E, om), ch2 = channel(n + 2, E, om);
        const Real h2 = al * sqrt(Real(n + 2)) * ch2.v0;
        const Real h1 = s2w * ch1.dv0;
        const Real h0 = al * sqrt(Real(n + 1)) * ch0.v0;
        const Real c0 = -(h2 * c2 + h1 * c1) / h0;
        out[n] = static_cast<double>(c0);
        c2 = c1;
        c1 = c0;
    }
}

}  // namespace

double theta_closed(const ModelParams& p) { return std::acos(p.omega / p.alpha); }

double lambda_closed(const ModelParams& p) { return 0.5 / std::sqrt(p.alpha * p.alpha - p.omega * p.omega); }

double RecursionSolution::residual(int n) const {
    const auto c = coeff_triple(n, E, params);
    return c.h2 * C[n + 2] + c.h1 * C[n + 1] + c.h0 * C[n];
}

RecursionSolution solve_recursion(double E, int n_max, const ModelParams& p, int precision_bits) {
    check_energy(E, p);
    if (n_max < 10) fail(ErrorKind::PreconditionViolation, "n_max must be at least 10");
    RecursionSolution sol;
    sol.E = E;
    sol.params = p;
    sol.precision_bits = resolve_bits(precision_bits, n_max);
    sol.C.assign(n_max + 1, 0.0);
    switch (sol.precision_bits) {
        case 53: run_forward<double>(E, p, 53, sol.C, sol.min_bits_remaining); break;
        case 113: run_forward<mp113>(E, p, 113, sol.C, sol.min_bits_remaining); break;
        case 256: run_forward<mp256>(E, p, 256, sol.C, sol.min_bits_remaining); break;
        default: run_forward<mp512>(E, p, 512, sol.C, sol.min_bits_remaining); break;
    }
    return sol;
}

std::vector<double> backward_solve(const RecursionSolution& sol, int n0, int precision_bits) {
    if (n0 < 1 || n0 + 1 > sol.n_max()) fail(ErrorKind::PreconditionViolation, "backward start out of range");
    std::vector<double> out;
    const int bits = resolve_bits(precision_bits ? precision_bits : sol.precision_bits, n0);
    const double a = sol.C[n0], b = sol.C[n0 + 1];
    switch (bits) {
        case 53: run_backward<double>(sol.E, sol.params, n0, a, b, out); break;
        case 113: run_backward<mp113>(sol.E, sol.params, n0, a, b, out); break;
        case 256: run_backward<mp256>(sol.E, sol.params, n0, a, b, out); break;
        default: run_backward<mp512>(sol.E, sol.params, n0, a, b, out); break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// asymptotic fit

namespace {

struct FitData {
    std::vector<double> n, y;  // y = C(n) sqrt(n)
    double nc = 0.0;
    bool correction = false;
};

// x = [phi, Lambda, c1, c2, (d1, d2)], phase g = phi (n - nc) - Lambda (ln n - ln nc)
struct FitFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const FitData* d;
    size_t lo, hi;
    int inputs() const { return d->correction ? 6 : 4; }
    int values() const { return static_cast<int>(hi - lo); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        const double lnc = std::log(d->nc);
        for (size_t i = lo; i < hi; ++i) {
            const double n = d->n[i];
            const double g = x[0] * (n - d->nc) - x[1] * (std::log(n) - lnc);
            double m = x[2] * std::cos(g) + x[3] * std::sin(g);
            if (d->correction) {
                const double h = x[0] * (n - d->nc);
                m += (x[4] * std::cos(h) + x[5] * std::sin(h)) * d->nc / n;
            }
            f[i - lo] = m - d->y[i];
        }
        return 0;
    }
    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& J) const {
        const double lnc = std::log(d->nc);
        for (size_t i = lo; i < hi; ++i) {
            const double n = d->n[i];
            const double g = x[0] * (n - d->nc) - x[1] * (std::log(n) - lnc);
            const double cg = std::cos(g), sg = std::sin(g);
            const double dm_dg = -x[2] * sg + x[3] * cg;
            const auto r = static_cast<Eigen::Index>(i - lo);
            J(r, 0) = dm_dg * (n - d->nc);
            J(r, 1) = -dm_dg * (std::log(n) - lnc);
            J(r, 2) = cg;
            J(r, 3) = sg;
            if (d->correction) {
                const double h = x[0] * (n - d->nc);
                const double ch = std::cos(h), sh = std::sin(h);
                J(r, 0) += (-x[4] * sh + x[5] * ch) * d->nc / n * (n - d->nc);
                J(r, 4) = ch * d->nc / n;
                J(r, 5) = sh * d->nc / n;
            }
        }
        return 0;
    }
};

double periodogram_peak(const std::vector<double>& y, size_t len) {
    const size_t nf = 4 * len;
    double best = -1.0, best_phi = 0.0;
    for (size_t j = 1; j < nf; ++j) {
        const double phi = pi * static_cast<double>(j) / static_cast<double>(nf);
        const std::complex<double> step(std::cos(phi), -std::sin(phi));
        std::complex<double> rot(1.0, 0.0), acc(0.0, 0.0);
        for (size_t i = 0; i < len; ++i) {
            acc += y[i] * rot;
            rot *= step;
            if ((i & 255) == 255) rot /= std::abs(rot);
        }
        const double pw = std::norm(acc);
        if (pw > best) {
            best = pw;
            best_phi = phi;
        }
    }
    return best_phi;
}

// Linear least squares for the amplitudes at fixed phi, Lambda.
Eigen::VectorXd linear_amplitudes(const FitData& d, double phi, double Lam, size_t lo, size_t hi) {
    const int m = d.correction ? 4 : 2;
    Eigen::MatrixXd A(hi - lo, m);
    Eigen::VectorXd b(hi - lo);
    const double lnc = std::log(d.nc);
    for (size_t i = lo; i < hi; ++i) {
        const double n = d.n[i];
        const double g = phi * (n - d.nc) - Lam * (std::log(n) - lnc);
        const auto r = static_cast<Eigen::Index>(i - lo);
        A(r, 0) = std::cos(g);
        A(r, 1) = std::sin(g);
        if (d.correction) {
            const double h = phi * (n - d.nc);
            A(r, 2) = std::cos(h) * d.nc / n;
            A(r, 3) = std::sin(h) * d.nc / n;
        }
        b[r] = d.y[i];
    }
    return A.colPivHouseholderQr().solve(b);
}

}  // namespace

AsymptoticFit fit_asymptotics(const RecursionSolution& sol, int window_lo, int window_hi, const FitOptions& opt) {
    const int n_max = sol.n_max();
    if (window_lo < n_max / 10 || window_hi > n_max || window_hi - window_lo < 1000)
        fail(ErrorKind::PreconditionViolation, "fit window must lie in [n_max/10, n_max] with length >= 1000");
    FitData d;
    d.correction = opt.correction_term;
    for (int n = window_lo; n <= window_hi; ++n) {
        d.n.push_back(n);
        d.y.push_back(sol.C[n] * std::sqrt(static_cast<double>(n)));
    }
    const size_t total = d.n.size();
    d.nc = 0.5 * (window_lo + window_hi);

    Eigen::VectorXd x(d.correction ? 6 : 4);
    x.setZero();
    if (opt.pin_frequencies) {
        x[0] = opt.theta;
        x[1] = opt.lambda * sol.E;
        x.tail(x.size() - 2) = linear_amplitudes(d, x[0], x[1], 0, total);
    } else {
        // coarse frequency from a short leading block, then refine on growing windows
        size_t len = std::min<size_t>(2048, total);
        FitData lead = d;
        lead.nc = d.n[len / 2];
        double phi = periodogram_peak(d.y, len);
        double Lam = 0.0;
        Eigen::VectorXd xs(x.size());
        xs.setZero();
        xs[0] = phi;
        xs.tail(xs.size() - 2) = linear_amplitudes(lead, phi, 0.0, 0, len);
        while (true) {
            lead.nc = d.n[len / 2];
            FitFunctor f{&lead, 0, len};
            Eigen::LevenbergMarquardt<FitFunctor> lm(f);
            lm.parameters.xtol = 1e-14;
            lm.parameters.ftol = 1e-14;
            lm.parameters.maxfev = 400;
            lm.minimize(xs);
            phi = xs[0];
            Lam = xs[1];
            if (len == total) break;
            len = std::min(total, len * 4);
            // re-centre the phase reference for the longer block
            lead.nc = d.n[len / 2];
            xs.tail(xs.size() - 2) = linear_amplitudes(lead, phi, Lam, 0, len);
        }
        x = xs;
        d.nc = lead.nc;
    }

    // residual
    FitFunctor f{&d, 0, total};
    Eigen::VectorXd r(total);
    f(x, r);
    AsymptoticFit out;
    out.window_lo = window_lo;
    out.window_hi = window_hi;
    out.amplitude_fit = std::hypot(x[2], x[3]);
    out.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(total));
    double phi = x[0], Lam = x[1];
    double zeta = std::atan2(-x[3], x[2]) - phi * d.nc + Lam * std::log(d.nc);
    phi = std::fmod(phi, 2.0 * pi);
    if (phi < 0) phi += 2.0 * pi;
    if (phi > pi) {
        phi = 2.0 * pi - phi;
        Lam = -Lam;
        zeta = -zeta;
    }
    zeta = std::fmod(zeta, 2.0 * pi);
    if (zeta < 0) zeta += 2.0 * pi;
    out.theta_fit = phi;
    out.lambda_fit = Lam / sol.E;
    out.zeta_fit = zeta;
    out.c0_normalized = sol.c0 / (std::sqrt(pi) * out.amplitude_fit);
    if (!(out.residual_rms <= 0.1 * out.amplitude_fit))
        fail(ErrorKind::FitDiverged, "residual rms " + std::to_string(out.residual_rms) + " exceeds 10% of amplitude");
    return out;
}

RecursionSolution normalized(const RecursionSolution& sol, const AsymptoticFit& fit) {
    RecursionSolution out = sol;
    const double s = fit.c0_normalized / sol.c0;
    for (auto& c : out.C) c *= s;
    out.c0 = fit.c0_normalized;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

// least squares y(n) = sum_k c_k n^{-k}, k = 0..3; returns c_0, c_1
std::pair<double, double> extrapolate(const std::vector<double>& n, const std::vector<double>& y) {
    Eigen::MatrixXd A(n.size(), 4);
    Eigen::VectorXd b(n.size());
    for (size_t i = 0; i < n.size(); ++i) {
        const double u = 1000.0 / n[i];
        for (int k = 0; k < 4; ++k) A(i, k) = std::pow(u, k);
        b[i] = y[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    return {c[0], c[1] * 1000.0};
}

}  // namespace

CharacteristicData characteristic_data(double E, const ModelParams& p) {
    validate(p);
    if (p.regime() != Regime::overcritical) fail(ErrorKind::PreconditionViolation, "requires alpha > omega");
    CharacteristicData cd;
    const double a = p.alpha, w = p.omega;
    cd.closed = {2.0 * w / a, -(w / a) * (1.0 + E / w), 1.0, -1.0};

    std::vector<double> ns, ps, qs;
    for (int i = 0; i <= 40; ++i) {
        const int n = static_cast<int>(std::lround(1000.0 * std::pow(100.0, i / 40.0)));
        const auto c = coeff_triple(n, E, p);
        ns.push_back(n);
        ps.push_back(-c.h1 / c.h2);
        qs.push_back(-c.h0 / c.h2);
    }
    const auto [a0, a1] = extrapolate(ns, ps);
    const auto [b0, b1] = extrapolate(ns, qs);
    cd.numeric = {a0, a1, b0, b1};

    const auto& k = cd.closed;
    const std::complex<double> disc = std::sqrt(std::complex<double>(k.a0 * k.a0 - 4.0 * k.b0, 0.0));
    cd.sigma_plus = 0.5 * (-k.a0 + disc);
    cd.sigma_minus = 0.5 * (-k.a0 - disc);
    auto expo = [&](std::complex<double> s) { return (k.a1 * s + k.b1) / (k.a0 * s + 2.0 * k.b0); };
    cd.exponent_plus = expo(cd.sigma_plus);
    cd.exponent_minus = expo(cd.sigma_minus);
    return cd;
}

GrowthTable partial_sum_growth(const RecursionSolution& sol, std::vector<long> N) {
    if (N.empty())
        for (long v : {1000L, 2000L, 5000L, 10000L, 20000L, 50000L, 100000L})
            if (v <= sol.n_max()) N.push_back(v);
    GrowthTable g;
    double s = 0.0;
    long n = 0;
    std::sort(N.begin(), N.end());
    for (long target : N) {
        if (target > sol.n_max()) fail(ErrorKind::PreconditionViolation, "N beyond n_max");
        for (; n <= target; ++n) s += sol.C[n] * sol.C[n];
        g.N.push_back(target);
        g.partial_sum.push_back(s);
    }
    if (g.N.size() >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double m = static_cast<double>(g.N.size());
        for (size_t i = 0; i < g.N.size(); ++i) {
            const double x = std::log(static_cast<double>(g.N[i]));
            sx += x;
            sy += g.partial_sum[i];
            sxx += x * x;
            sxy += x * g.partial_sum[i];
        }
        g.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    }
    return g;
}

ZetaScan zeta_smoothness_scan(const std::vector<double>& E_grid, const ModelParams& p, int n_max, int precision_bits) {
    if (E_grid.size() < 3) fail(ErrorKind::PreconditionViolation, "energy grid needs at least three points");
    for (size_t i = 1; i < E_grid.size(); ++i)
        if (!(E_grid[i] > E_grid[i - 1]) || E_grid[i] - E_grid[i - 1] > 1e-3 + 1e-12)
            fail(ErrorKind::PreconditionViolation, "energy grid must be increasing with spacing <= 1e-3");
    for (double E : E_grid)
        if (near_exceptional(E, p.omega))
            fail(ErrorKind::ExceptionalEnergy, "grid point E=" + std::to_string(E) + " is exceptional");

    const int lo = n_max / 10, hi = n_max;
    // orientation of the log term in this gauge, from a free fit at the first node
    const auto first = solve_recursion(E_grid.front(), n_max, p, precision_bits);
    const auto free_fit = fit_asymptotics(first, lo, hi);
    const double lam = lambda_closed(p) * (free_fit.lambda_fit < 0 ? -1.0 : 1.0);
    FitOptions opt;
    opt.pin_frequencies = true;
    opt.theta = theta_closed(p);
    opt.lambda = lam;

    ZetaScan scan;
    scan.E = E_grid;
    std::vector<double> raw(E_grid.size());
    parallel_for(E_grid.size(), [&](size_t i) {
        const auto sol = solve_recursion(E_grid[i], n_max, p, precision_bits);
        raw[i] = fit_asymptotics(sol, lo, hi, opt).zeta_fit;
    });
    scan.zeta.resize(raw.size());
    scan.zeta[0] = raw[0];
    for (size_t i = 1; i < raw.size(); ++i) {
        double d = raw[i] - raw[i - 1];
        d -= 2.0 * pi * std::round(d / (2.0 * pi));
        scan.zeta[i] = scan.zeta[i - 1] + d;
    }
    std::vector<double> inc;
    for (size_t i = 1; i < raw.size(); ++i) {
        scan.dzeta.push_back((scan.zeta[i] - scan.zeta[i - 1]) / (E_grid[i] - E_grid[i - 1]));
        inc.push_back(std::abs(scan.zeta[i] - scan.zeta[i - 1]));
    }
    // compare each increment with the median of its neighbourhood
    const size_t half = 10;
    for (size_t i = 0; i < inc.size(); ++i) {
        const size_t a = i > half ? i - half : 0, b = std::min(inc.size(), i + half + 1);
        std::vector<double> local(inc.begin() + a, inc.begin() + b);
        std::nth_element(local.begin(), local.begin() + local.size() / 2, local.end());
        const double median = std::max(local[local.size() / 2], 1e-12);
        scan.max_jump_ratio = std::max(scan.max_jump_ratio, inc[i] / median);
    }
    scan.smooth = scan.max_jump_ratio <= 10.0;
    return scan;
}

}  // namespace smilansky
