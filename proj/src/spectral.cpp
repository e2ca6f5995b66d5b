#include "smilansky/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>

#include "smilansky/channel.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/parallel.hpp"
#include "smilansky/recursion.hpp"

namespace smilansky {

namespace {
constexpr double pi = std::numbers::pi;
}

size_t EigenfunctionTable::index_of(double E) const {
    for (size_t i = 0; i < E_grid.size(); ++i)
        if (E_grid[i] == E) return i;
    fail(ErrorKind::PreconditionViolation, "energy " + std::to_string(E) + " is not in the table");
}

double EigenfunctionTable::u0(size_t e, int n) const {
    return coeff(e, n) * v_boundary(mode(n, E_grid[e], params)).v0;
}

double EigenfunctionTable::u(size_t e, int n, double x) const {
    return coeff(e, n) * v_at(mode(n, E_grid[e], params), x);
}

EigenfunctionTable build_table(const std::vector<double>& E_grid, int n_max, const ModelParams& p,
                               const TableOptions& opt) {
    if (E_grid.empty()) fail(ErrorKind::PreconditionViolation, "empty energy grid");
    if (n_max < 1) fail(ErrorKind::PreconditionViolation, "n_max must be positive");
    EigenfunctionTable t;
    t.params = p;
    t.E_grid = E_grid;
    t.n_max = n_max;
    t.C.resize(E_grid.size());
    t.c0.resize(E_grid.size());
    const int n_run = std::max(n_max, opt.n_norm);
    const int lo = n_run / 10;

    // orientation of the log-phase in this gauge, fixed once
    const auto probe = solve_recursion(E_grid.front(), n_run, p, opt.precision_bits);
    const double sign = fit_asymptotics(probe, lo, n_run).lambda_fit < 0 ? -1.0 : 1.0;
    FitOptions fo;
    fo.pin_frequencies = true;
    fo.theta = theta_closed(p);
    fo.lambda = sign * lambda_closed(p);
    // amplitude pi^{-1/2} gives sum_n P_n -> sqrt(alpha^2 - omega^2) delta(E1 - E2)
    const double iso = opt.normalization == Normalization::isometric ? std::sqrt(2.0 * lambda_closed(p)) : 1.0;

    parallel_for(E_grid.size(), [&](size_t e) {
        const auto sol = solve_recursion(E_grid[e], n_run, p, opt.precision_bits);
        const auto fit = fit_asymptotics(sol, lo, n_run, fo);
        const auto nsol = normalized(sol, fit);
        t.C[e].assign(nsol.C.begin(), nsol.C.begin() + n_max + 1);
        t.c0[e] = nsol.c0 * iso;
        for (auto& c : t.C[e]) c *= iso;
    });
    return t;
}

QuadRule circle_rule() { return graded_gauss_legendre(0.0, pi, 16, 8, 64); }

double overlap_pn(int n, double E1, double E2, const EigenfunctionTable& table) {
    static const QuadRule rule = circle_rule();
    return overlap_pn(n, E1, E2, table, rule);
}

double overlap_pn(int n, double E1, double E2, const EigenfunctionTable& table, const QuadRule& rule) {
    const size_t e1 = table.index_of(E1), e2 = table.index_of(E2);
    if (n < 0 || n > table.n_max) fail(ErrorKind::PreconditionViolation, "channel outside table");
    const auto m1 = mode(n, E1, table.params), m2 = mode(n, E2, table.params);
    for (const auto* m : {&m1, &m2}) {
        const double res = m->kind == ModeKind::oscillatory ? m->k_or_chi * rule.dx_max : m->k_or_chi * rule.dx_first;
        if (res > 0.5) fail(ErrorKind::QuadratureUnderResolved, "channel " + std::to_string(n) + " under-resolved");
    }
    double s = 0.0;
    for (size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * v_at(m1, rule.x[i]) * v_at(m2, rule.x[i]);
    return 2.0 * s * table.coeff(e1, n) * table.coeff(e2, n);
}

double wronskian_w(int n, double E1, double E2, const EigenfunctionTable& table) {
    if (n == 0) return 0.0;
    const size_t e1 = table.index_of(E1), e2 = table.index_of(E2);
    return std::sqrt(static_cast<double>(n)) *
           (table.u0(e1, n) * table.u0(e2, n - 1) - table.u0(e1, n - 1) * table.u0(e2, n));
}

TelescopingResult telescoping_check(double E1, double E2, int N, const EigenfunctionTable& table) {
    if (E1 == E2) fail(ErrorKind::PreconditionViolation, "telescoping check needs E1 != E2");
    if (N + 1 > table.n_max) fail(ErrorKind::PreconditionViolation, "table too short for N");
    TelescopingResult r{0.0, 0.0, 0.0};
    for (int n = 0; n <= N; ++n) r.lhs += overlap_pn(n, E1, E2, table);
    const auto& p = table.params;
    r.rhs = p.alpha / std::sqrt(2.0 * p.omega) * wronskian_w(N + 1, E1, E2, table) / (E1 - E2);
    r.gap = std::abs(r.lhs - r.rhs);
    return r;
}

DeltaKernel delta_kernel_profile(double E1, const std::vector<double>& E2_grid, const std::vector<long>& N_list,
                                 const EigenfunctionTable& table) {
    DeltaKernel k;
    k.E1 = E1;
    k.E2 = E2_grid;
    k.N = N_list;
    const auto& p = table.params;
    const double g = p.alpha / std::sqrt(2.0 * p.omega);
    const double amp = 2.0 * p.alpha * std::sin(theta_closed(p)) / pi;
    const size_t e1 = table.index_of(E1);
    for (double E2 : E2_grid) k.envelope.push_back(E2 == E1 ? INFINITY : amp / std::abs(E1 - E2));
    for (long N : N_list)
        if (N + 1 > table.n_max) fail(ErrorKind::PreconditionViolation, "table too short for N=" + std::to_string(N));
    k.K.assign(N_list.size(), std::vector<double>(E2_grid.size()));
    parallel_for(E2_grid.size(), [&](size_t i) {
        const double E2 = E2_grid[i];
        if (E2 == E1) {
            // diagonal: v_n normalized, so P_n(E, E) = C(n)^2
            double s = 0.0;
            long n = 0;
            for (size_t j = 0; j < N_list.size(); ++j) {
                for (; n <= N_list[j]; ++n) s += table.C[e1][n] * table.C[e1][n];
                k.K[j][i] = s;
            }
            return;
        }
        for (size_t j = 0; j < N_list.size(); ++j)
            k.K[j][i] = g * wronskian_w(static_cast<int>(N_list[j] + 1), E1, E2, table) / (E1 - E2);
    });
    return k;
}

namespace {

struct SinFit {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    const std::vector<double>* x;
    const std::vector<double>* y;
    int inputs() const { return 3; }
    int values() const { return static_cast<int>(x->size()); }
    int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
        for (size_t i = 0; i < x->size(); ++i)
            f[i] = p[1] * std::sin(p[0] * (*x)[i]) + p[2] * std::cos(p[0] * (*x)[i]) - (*y)[i];
        return 0;
    }
    int df(const Eigen::VectorXd& p, Eigen::MatrixXd& J) const {
        for (size_t i = 0; i < x->size(); ++i) {
            const double s = std::sin(p[0] * (*x)[i]), c = std::cos(p[0] * (*x)[i]);
            J(i, 0) = (p[1] * c - p[2] * s) * (*x)[i];
            J(i, 1) = s;
            J(i, 2) = c;
        }
        return 0;
    }
};

}  // namespace

LogFrequencyFit fit_log_frequency(const std::vector<long>& N, const std::vector<double>& K) {
    if (N.size() != K.size() || N.size() < 8) fail(ErrorKind::PreconditionViolation, "need at least 8 samples");
    std::vector<double> x(N.size());
    double xc = 0.0;
    for (size_t i = 0; i < N.size(); ++i) xc += std::log(static_cast<double>(N[i]));
    xc /= static_cast<double>(N.size());
    for (size_t i = 0; i < N.size(); ++i) x[i] = std::log(static_cast<double>(N[i])) - xc;
    // coarse scan of the frequency with linear amplitudes
    auto linfit = [&](double w, double& a, double& b) {
        Eigen::MatrixXd A(x.size(), 2);
        Eigen::VectorXd y(x.size());
        for (size_t i = 0; i < x.size(); ++i) {
            A(i, 0) = std::sin(w * x[i]);
            A(i, 1) = std::cos(w * x[i]);
            y[i] = K[i];
        }
        Eigen::Vector2d c = A.colPivHouseholderQr().solve(y);
        a = c[0];
        b = c[1];
        return (A * c - y).squaredNorm();
    };
    double best = INFINITY, w0 = 0.0;
    for (double w = 0.02; w <= 30.0; w += 0.002) {
        double a, b;
        const double r = linfit(w, a, b);
        if (r < best) {
            best = r;
            w0 = w;
        }
    }
    Eigen::VectorXd p(3);
    p[0] = w0;
    linfit(w0, p[1], p[2]);
    SinFit f{&x, &K};
    Eigen::LevenbergMarquardt<SinFit> lm(f);
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    lm.minimize(p);
    Eigen::VectorXd r(x.size());
    f(p, r);
    LogFrequencyFit out;
    out.frequency = std::abs(p[0]);
    out.amplitude = std::hypot(p[1], p[2]);
    const double sgn = p[0] < 0 ? -1.0 : 1.0;
    // a sin(wx) + b cos(wx) = A sin(wx + phi), shifted back to ln N
    out.phase = std::atan2(p[2], sgn * p[1]) - out.frequency * xc;
    out.phase = std::remainder(out.phase, 2.0 * pi);
    out.residual_rms = std::sqrt(r.squaredNorm() / static_cast<double>(x.size()));
    return out;
}

double SpectralProfile::norm2() const {
    double s = 0.0;
    for (size_t i = 0; i < values.size(); ++i) s += rule.w[i] * std::norm(values[i]);
    return s;
}

SpectralProfile bump_profile(Interval support, int panels, int nodes) {
    SpectralProfile prof;
    prof.support = support;
    prof.rule = gauss_legendre(support.lo, support.hi, panels, nodes);
    const double c = 0.5 * (support.lo + support.hi), h = 0.5 * (support.hi - support.lo);
    for (double E : prof.rule.x) {
        const double s = (E - c) / h;
        prof.values.emplace_back(std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0, 0.0);
    }
    const double nrm = std::sqrt(prof.norm2());
    for (auto& v : prof.values) v /= nrm;
    return prof;
}

SpectralProfile windowed_gaussian_profile(Interval support, double center, double sigma, int panels, int nodes) {
    if (!(sigma > 0.0)) fail(ErrorKind::PreconditionViolation, "sigma must be positive");
    SpectralProfile prof = bump_profile(support, panels, nodes);
    for (size_t i = 0; i < prof.values.size(); ++i) {
        const double d = (prof.rule.x[i] - center) / sigma;
        prof.values[i] *= std::exp(-0.5 * d * d);
    }
    const double nrm = std::sqrt(prof.norm2());
    for (auto& v : prof.values) v /= nrm;
    return prof;
}

SpectralProfile with_time_phase(const SpectralProfile& profile, double t) {
    SpectralProfile out = profile;
    for (size_t i = 0; i < out.values.size(); ++i) out.values[i] *= std::polar(1.0, -profile.rule.x[i] * t);
    return out;
}

void check_support(const SpectralProfile& profile, double omega) {
    const auto ex = exceptional_energies(omega, profile.support);
    if (!ex.points.empty())
        fail(ErrorKind::SupportViolation, "support contains exceptional energy " + std::to_string(ex.points.front()));
    for (double e : {profile.support.lo, profile.support.hi})
        if (near_exceptional(e, omega)) fail(ErrorKind::SupportViolation, "support endpoint is exceptional");
}

namespace {

void check_table(const SpectralProfile& profile, const EigenfunctionTable& table) {
    if (profile.rule.x.size() != table.E_grid.size())
        fail(ErrorKind::PreconditionViolation, "table energies do not match the profile quadrature");
    for (size_t i = 0; i < table.E_grid.size(); ++i)
        if (profile.rule.x[i] != table.E_grid[i])
            fail(ErrorKind::PreconditionViolation, "table energies do not match the profile quadrature");
}

// Values of v_n(x_j, E) for increasing nodes of a uniform grid, by
// multiplicative recurrences.
void channel_row_uniform(const ChannelMode& m, int M, double dx, double* row) {
    const double kc = m.k_or_chi;
    if (m.kind == ModeKind::oscillatory) {
        const cplx step = std::polar(1.0, kc * dx);
        cplx z = std::polar(1.0, -kc * pi);
        for (int j = 0; j <= M; ++j) {
            if ((j & 63) == 0) z = std::polar(1.0, kc * (j * dx - pi));
            row[j] = m.rho * z.real();
            z *= step;
        }
        return;
    }
    const double a = std::exp(-kc * dx);
    const double scale = 1.0 / (2.0 * m.den);
    double f = 1.0;
    for (int j = 0; j <= M; ++j) {
        row[j] = f;
        f = f > 1e-290 ? f * a : 0.0;
    }
    double b = std::exp(-kc * pi);
    for (int j = M; j >= 0; --j) {
        row[j] = (row[j] + b) * scale;
        b = b > 1e-290 ? b * a : 0.0;
    }
}

}  // namespace

ChannelState synthesize(const SpectralProfile& profile, const EigenfunctionTable& table, const HalfGrid& grid,
                        double tail_tol) {
    check_table(profile, table);
    check_support(profile, table.params.omega);
    ChannelState st(table.n_max + 1, grid);
    const auto& kt = kernels();
    parallel_for(st.n_channels, [&](size_t nn) {
        const int n = static_cast<int>(nn);
        std::vector<double> row(grid.size());
        cplx* out = st.channel(n);
        for (size_t e = 0; e < table.E_grid.size(); ++e) {
            const cplx a = profile.rule.w[e] * profile.values[e] * table.coeff(e, n);
            if (a == cplx(0.0)) continue;
            channel_row_uniform(mode(n, table.E_grid[e], table.params), grid.M, grid.dx, row.data());
            kt.axpy_rc(out, a, row.data(), grid.size());
        }
    });
    const double total = st.norm2();
    double tail = 0.0;
    for (int n = std::max(0, st.n_channels - 2); n < st.n_channels; ++n) tail += st.channel_norm2(n);
    if (total > 0.0 && tail > tail_tol * total)
        fail(ErrorKind::TailNotConverged, "top-channel mass " + std::to_string(tail / total) + " exceeds tolerance");
    return st;
}

ChannelState spectral_propagate(const SpectralProfile& profile, double t, const EigenfunctionTable& table,
                                const HalfGrid& grid, double tail_tol) {
    const auto& x = profile.rule.x;
    for (size_t i = 1; i < x.size(); ++i)
        if (std::abs(t) * (x[i] - x[i - 1]) >= 0.5)
            fail(ErrorKind::PhaseUnderResolved, "energy quadrature too coarse for t=" + std::to_string(t));
    auto st = synthesize(with_time_phase(profile, t), table, grid, tail_tol);
    st.time = t;
    return st;
}

double synthesized_norm2(const SpectralProfile& profile, const EigenfunctionTable& table) {
    check_table(profile, table);
    static const QuadRule rule = circle_rule();
    std::vector<double> per(table.n_max + 1);
    parallel_for(per.size(), [&](size_t nn) {
        const int n = static_cast<int>(nn);
        std::vector<cplx> acc(rule.x.size());
        std::vector<double> row(rule.x.size());
        for (size_t e = 0; e < table.E_grid.size(); ++e) {
            const cplx a = profile.rule.w[e] * profile.values[e] * table.coeff(e, n);
            if (a == cplx(0.0)) continue;
            const auto m = mode(n, table.E_grid[e], table.params);
            for (size_t i = 0; i < rule.x.size(); ++i) row[i] = v_at(m, rule.x[i]);
            kernels().axpy_rc(acc.data(), a, row.data(), row.size());
        }
        double s = 0.0;
        for (size_t i = 0; i < rule.x.size(); ++i) s += 2.0 * rule.w[i] * std::norm(acc[i]);
        per[n] = s;
    });
    double s = 0.0;
    for (double v : per) s += v;
    return s;
}

SpectralProfile reference_profile() { return windowed_gaussian_profile({-3.0, 0.45}, -1.2, 0.6, 8, 32); }

}  // namespace smilansky
