#include "smilansky/dynamics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#include <xmmintrin.h>
#include <pmmintrin.h>

#include "smilansky/band.hpp"
#include "smilansky/errors.hpp"
#include "smilansky/parallel.hpp"

namespace smilansky {

namespace {
constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};

// LU of a complex tridiagonal matrix, reused across steps
struct TriLU {
    std::vector<cplx> dl, d, du, du2;
    std::vector<lapack_int> ipiv;

    void factor(std::vector<cplx> sub, std::vector<cplx> diag, std::vector<cplx> sup) {
        dl = std::move(sub);
        d = std::move(diag);
        du = std::move(sup);
        const lapack_int n = static_cast<lapack_int>(d.size());
        du2.assign(std::max<lapack_int>(n - 2, 1), 0.0);
        ipiv.assign(n, 0);
        const lapack_int info = LAPACKE_zgttrf(n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data());
        if (info != 0) fail(ErrorKind::SolveFailed, "tridiagonal factorization failed, info=" + std::to_string(info));
    }
    void solve(cplx* b) const {
        const lapack_int n = static_cast<lapack_int>(d.size());
        const lapack_int info = LAPACKE_zgttrs(LAPACK_COL_MAJOR, 'N', n, 1, dl.data(), d.data(), du.data(),
                                               du2.data(), ipiv.data(), b, n);
        if (info != 0) fail(ErrorKind::SolveFailed, "tridiagonal solve failed, info=" + std::to_string(info));
    }
};

void check_grid(const HalfGrid& grid) {
    if (grid.M < 2 || grid.x.empty() || grid.x[0] != 0.0 || std::abs(grid.M * grid.dx - pi) > 1e-12)
        fail(ErrorKind::GridMisaligned, "grid needs a node at x = 0 and uniform spacing pi / M");
}
}  // namespace

HamiltonianAction build_hamiltonian_action(const ModelParams& p, const HalfGrid& grid, int n_channels) {
    validate(p);
    check_grid(grid);
    if (n_channels < 2) fail(ErrorKind::PreconditionViolation, "need at least two channels");
    return {p, grid, n_channels, p.alpha / std::sqrt(2.0 * p.omega)};
}

ChannelState HamiltonianAction::apply(const ChannelState& psi) const {
    if (psi.n_channels != n_channels || psi.grid.M != grid.M)
        fail(ErrorKind::PreconditionViolation, "state does not match the operator");
    ChannelState out(n_channels, grid);
    out.time = psi.time;
    const int M = grid.M;
    const double k = 1.0 / (grid.dx * grid.dx);
    for (int n = 0; n < n_channels; ++n) {
        const cplx* a = psi.channel(n);
        cplx* b = out.channel(n);
        const double d = k + (n + 0.5) * params.omega;
        kernels().stencil3(b, a, d, -0.5 * k, M + 1);
        b[0] = d * a[0] - k * a[1];
        b[M] = d * a[M] - k * a[M - 1];
        cplx c = 0.0;
        if (n + 1 < n_channels) c += std::sqrt(n + 1.0) * psi.at(n + 1, 0);
        if (n > 0) c += std::sqrt(double(n)) * psi.at(n - 1, 0);
        b[0] += g / grid.dx * c;
    }
    return out;
}

double HamiltonianAction::expectation(const ChannelState& psi) const { return inner(psi, apply(psi)).real(); }

Propagator::Propagator(const ModelParams& p, const HalfGrid& grid, int n_channels, const PropagatorConfig& cfg)
    : H_(build_hamiltonian_action(p, grid, n_channels)), cfg_(cfg) {
    if (!(cfg.dt > 0.0)) fail(ErrorKind::PreconditionViolation, "dt must be positive");
    tau_ = 0.5 * cfg.dt;
    const int M = grid.M, G = M + 1;
    const double k = 1.0 / (grid.dx * grid.dx);
    O_ = -I * tau_ * 0.5 * k;
    D_.resize(n_channels);
    delta0_.resize(n_channels);
    tail_start_.resize(n_channels + 1);
    iv_inf_.resize(n_channels);
    // 1/den_j from x = pi inwards; it settles to a fixed point away from the
    // reflecting row, so only the boundary layer is stored.
    std::vector<cplx> layer;
    for (int n = 0; n < n_channels; ++n) {
        const cplx D = 1.0 + I * tau_ * (k + (n + 0.5) * p.omega);
        D_[n] = D;
        tail_start_[n] = static_cast<long>(iv_.size());
        layer.assign(1, 1.0 / D);  // j = M
        cplx gm = 2.0 * O_ * layer[0];
        int j = M - 1;
        for (; j >= 1; --j) {
            const cplx iv = 1.0 / (D - O_ * gm);
            const cplx prev = layer.back();
            layer.push_back(iv);
            gm = O_ * iv;
            if (j < M - 2 && std::abs(iv - prev) <= 1e-17 * std::abs(iv)) break;
        }
        if (j < 1) j = 1;
        // layer holds j = M, M-1, ..., j; below j the value is layer.back()
        iv_inf_[n] = layer.back();
        layer_lo_.push_back(j);
        iv_.insert(iv_.end(), layer.begin(), layer.end());
        delta0_[n] = D - 2.0 * O_ * (O_ * inv_den(n, 1));
    }
    tail_start_[n_channels] = static_cast<long>(iv_.size());
}

namespace {
// Evanescent channels decay to subnormal magnitudes away from x = 0, where
// x86 arithmetic slows down by orders of magnitude; flush them to zero.
struct FlushDenormals {
    unsigned saved;
    FlushDenormals() : saved(_mm_getcsr()) { _mm_setcsr(saved | 0x8040); }
    ~FlushDenormals() { _mm_setcsr(saved); }
};
}  // namespace

void Propagator::step_unchecked(ChannelState& psi) const {
    FlushDenormals ftz;
    const int N = H_.n_channels, M = H_.grid.M, G = M + 1;
    if (psi.n_channels != N || psi.grid.M != M) fail(ErrorKind::PreconditionViolation, "state does not match propagator");
    const auto& K = kernels();
    const cplx c = I * tau_ * H_.g / H_.grid.dx;
    std::vector<cplx> col0(N), rho(N);
    for (int n = 0; n < N; ++n) col0[n] = psi.at(n, 0);
    constexpr int B = 4;  // independent recurrence chains per pass
    thread_local std::vector<cplx> rows;
    rows.resize(static_cast<size_t>(B) * G);
    const cplx Oc = std::conj(O_);
    for (int n0 = 0; n0 < N; n0 += B) {
        const int nb = std::min(B, N - n0);
        cplx* r[B];
        const cplx* lay[B];
        int lo[B];
        cplx ivf[B];
        int lo_min = M;
        for (int k = 0; k < B; ++k) {
            const int n = n0 + std::min(k, nb - 1);  // pad the last block by repeating a channel
            r[k] = rows.data() + static_cast<size_t>(k) * G;
            lay[k] = iv_.data() + tail_start_[n];
            lo[k] = layer_lo_[n];
            ivf[k] = iv_inf_[n];
            lo_min = std::min(lo_min, lo[k]);
            const cplx* a = psi.channel(n);
            const cplx Dc = std::conj(D_[n]);
            K.stencil3(r[k], a, Dc, Oc, G);
            cplx cp = 0.0;
            if (n + 1 < N) cp += std::sqrt(n + 1.0) * col0[n + 1];
            if (n > 0) cp += std::sqrt(double(n)) * col0[n - 1];
            r[k][0] = Dc * a[0] + 2.0 * Oc * a[1] - c * cp;
            r[k][M] = Dc * a[M] + 2.0 * Oc * a[M - 1] ;
            r[k][M] *= lay[k][0];
        }
        // eliminate towards x = 0; r[k][j] becomes beta_j
        int j = M - 1;
        for (; j >= lo_min; --j)
            for (int k = 0; k < B; ++k) {
                const cplx iv = j >= lo[k] ? lay[k][M - j] : ivf[k];
                r[k][j] = (r[k][j] - O_ * r[k][j + 1]) * iv;
            }
        cplx Ok[B];
        for (int k = 0; k < B; ++k) Ok[k] = O_ * ivf[k];
        for (; j >= 1; --j)
            for (int k = 0; k < B; ++k) r[k][j] = ivf[k] * r[k][j] - Ok[k] * r[k][j + 1];
        for (int k = 0; k < nb; ++k) {
            rho[n0 + k] = r[k][0] - 2.0 * O_ * r[k][1];
            std::copy(r[k] + 1, r[k] + G, psi.channel(n0 + k) + 1);
        }
    }
    // coupling node: delta0_n psi_n + c (sqrt(n+1) psi_{n+1} + sqrt(n) psi_{n-1}) = rho_n
    std::vector<cplx> dl(N - 1), du(N - 1), d(delta0_);
    for (int n = 0; n + 1 < N; ++n) dl[n] = du[n] = c * std::sqrt(n + 1.0);
    const lapack_int info = LAPACKE_zgtsv(LAPACK_COL_MAJOR, N, 1, dl.data(), d.data(), du.data(), rho.data(), N);
    if (info != 0) fail(ErrorKind::SolveFailed, "coupling-node solve failed, info=" + std::to_string(info));
    // outward substitution psi_j = beta_j - gamma_j psi_{j-1}, gamma_j = O / den_j (2 O / den_M at x = pi)
    for (int n0 = 0; n0 < N; n0 += B) {
        const int nb = std::min(B, N - n0);
        if (nb < B) {
            for (int n = n0; n < N; ++n) {
                cplx* o = psi.channel(n);
                o[0] = rho[n];
                for (int j = 1; j < M; ++j) o[j] -= O_ * inv_den(n, j) * o[j - 1];
                o[M] -= 2.0 * O_ * inv_den(n, M) * o[M - 1];
            }
            continue;
        }
        cplx* o[B];
        const cplx* lay[B];
        int lo[B];
        cplx gf[B];
        int lo_min = M;
        for (int k = 0; k < B; ++k) {
            const int n = n0 + k;
            o[k] = psi.channel(n);
            o[k][0] = rho[n];
            lay[k] = iv_.data() + tail_start_[n];
            lo[k] = layer_lo_[n];
            gf[k] = O_ * iv_inf_[n];
            lo_min = std::min(lo_min, lo[k]);
        }
        int j = 1;
        for (; j < lo_min; ++j)
            for (int k = 0; k < B; ++k) o[k][j] -= gf[k] * o[k][j - 1];
        for (; j < M; ++j)
            for (int k = 0; k < B; ++k) {
                const cplx g = j >= lo[k] ? O_ * lay[k][M - j] : gf[k];
                o[k][j] -= g * o[k][j - 1];
            }
        for (int k = 0; k < B; ++k) o[k][M] -= 2.0 * O_ * lay[k][0] * o[k][M - 1];
    }
    psi.time += cfg_.dt;
}

void Propagator::step(ChannelState& psi) const {
    step_unchecked(psi);
    const double top = psi.channel_norm2(psi.n_channels - 1);
    const double total = psi.norm2();
    if (top > cfg_.truncation_threshold * total)
        fail(ErrorKind::TruncationLeak, "top channel mass " + std::to_string(top / total) + " at t=" +
                                            std::to_string(psi.time));
}

// ---------------------------------------------------------------------------

std::vector<double> hermite_functions(int n_max, double q, double omega) {
    std::vector<double> h(n_max + 1);
    const double xi = std::sqrt(omega) * q;
    double log_scale = 0.25 * std::log(omega / pi) - 0.5 * xi * xi;
    double prev = 0.0, cur = 1.0;
    h[0] = std::exp(log_scale);
    for (int m = 0; m < n_max; ++m) {
        const double next = std::sqrt(2.0 / (m + 1.0)) * xi * cur - std::sqrt(m / (m + 1.0)) * prev;
        prev = cur;
        cur = next;
        if (std::abs(cur) > 1e150) {
            cur *= 1e-150;
            prev *= 1e-150;
            log_scale += 150.0 * std::log(10.0);
        }
        if (!std::isfinite(cur)) fail(ErrorKind::RecurrenceOverflow, "Hermite recurrence overflow");
        h[m + 1] = cur * std::exp(log_scale);
    }
    return h;
}

double oscillator_energy(const ChannelState& psi, double omega) {
    double s = 0.0;
    for (int n = 0; n < psi.n_channels; ++n) s += (n + 0.5) * omega * psi.channel_norm2(n);
    return s;
}

double tail_probability(const ChannelState& psi, double eta) {
    const auto& w = psi.grid.weights;
    const auto& x = psi.grid.x;
    double tail = 0.0;
    for (int n = 0; n < psi.n_channels; ++n) {
        const cplx* a = psi.channel(n);
        for (int j = 0; j < psi.grid.size(); ++j)
            if (x[j] > eta) tail += w[j] * std::norm(a[j]);
    }
    return tail / psi.norm2();
}

double q_expectation(const ChannelState& psi, double omega) {
    const int G = psi.grid.size();
    const auto& w = psi.grid.weights;
    double s = 0.0;
    for (int n = 0; n + 1 < psi.n_channels; ++n) {
        const cplx* a = psi.channel(n);
        const cplx* b = psi.channel(n + 1);
        cplx d = 0.0;
        for (int j = 0; j < G; ++j) d += w[j] * std::conj(a[j]) * b[j];
        s += 2.0 * d.real() * std::sqrt((n + 1.0) / (2.0 * omega));
    }
    return s;
}

double dictionary_function(int a, double x) {
    if (a == 0) return 1.0 / std::sqrt(2.0 * pi);
    return std::cos(a * x) / std::sqrt(pi);
}

Coherence reduced_coherence(const ChannelState& psi, double eta) {
    constexpr int kDict = 10;
    const auto& K = kernels();
    const int G = psi.grid.size(), N = psi.n_channels, M = psi.grid.M;
    const double dx = psi.grid.dx;
    Coherence out;

    std::vector<std::vector<double>> wphi(kDict, std::vector<double>(G));
    for (int a = 0; a < kDict; ++a)
        for (int j = 0; j < G; ++j) wphi[a][j] = psi.grid.weights[j] * dictionary_function(a, psi.grid.x[j]);
    Eigen::MatrixXcd C(N, kDict);
    for (int n = 0; n < N; ++n)
        for (int a = 0; a < kDict; ++a) C(n, a) = K.dot_rc(wphi[a].data(), psi.channel(n), G);
    // (phi_a, S phi_b) = sum_n c_na conj(c_nb)
    const Eigen::MatrixXcd S_ab = C.transpose() * C.conjugate();
    out.dictionary_max = S_ab.cwiseAbs().maxCoeff();

    out.trace = psi.norm2();

    // off-diagonal mass on a subsampled grid; each half-grid node stands for +-x_j
    const int stride = std::max(1, (G + 199) / 200);
    std::vector<int> js;
    for (int j = 0; j <= M; j += stride) js.push_back(j);
    const int Ks = static_cast<int>(js.size());
    Eigen::MatrixXcd A(N, Ks);
    for (int n = 0; n < N; ++n)
        for (int k = 0; k < Ks; ++k) A(n, k) = psi.at(n, js[k]);
    const Eigen::MatrixXcd S = A.transpose() * A.conjugate();
    auto points = [&](int j) {
        std::vector<double> v{psi.grid.x[j]};
        if (j != 0 && j != M) v.push_back(-psi.grid.x[j]);
        return v;
    };
    auto circ = [](double d) {
        d = std::fmod(std::abs(d), 2.0 * pi);
        return std::min(d, 2.0 * pi - d);
    };
    const double cell = stride * dx;
    double mass = 0.0;
    for (int a = 0; a < Ks; ++a) {
        const auto pa = points(js[a]);
        for (int b = 0; b < Ks; ++b) {
            const auto pb = points(js[b]);
            int cnt = 0;
            for (double xa : pa)
                for (double xb : pb)
                    if (circ(xa - xb) > eta) ++cnt;
            if (cnt) mass += cnt * std::norm(S(a, b));
        }
    }
    out.offdiag_mass = mass * cell * cell;
    return out;
}

int significant_channels(const ChannelState& psi, double rel_tol) {
    const double total = psi.norm2();
    int top = 0;
    for (int n = 0; n < psi.n_channels; ++n)
        if (psi.channel_norm2(n) > rel_tol * total) top = n;
    return top;
}

std::vector<double> adequate_q_grid(int n_used, double omega, int min_points) {
    const double s = std::sqrt(2.0 * n_used + 1.0);
    const double R = 1.2 * s / std::sqrt(omega) + 4.0 / std::sqrt(omega);
    const double h = 0.9 * pi / (2.0 * s * std::sqrt(omega));
    int half = static_cast<int>(std::ceil(R / h));
    half = std::max(half, (min_points + 1) / 2);
    std::vector<double> q(2 * half + 1);
    for (int i = 0; i < 2 * half + 1; ++i) q[i] = R * (i - half) / half;
    return q;
}

namespace {
void check_q_grid(const std::vector<double>& q, int n_used, double omega) {
    if (q.size() < 3) fail(ErrorKind::QGridTooCoarse, "q-grid needs at least three points");
    const double h = q[1] - q[0];
    for (size_t i = 1; i < q.size(); ++i)
        if (std::abs(q[i] - q[i - 1] - h) > 1e-9 * std::abs(h)) fail(ErrorKind::QGridTooCoarse, "q-grid must be uniform");
    const double s = std::sqrt(2.0 * n_used + 1.0);
    const double need = s / std::sqrt(omega) + 3.0 / std::sqrt(omega);
    if (q.front() > -need || q.back() < need)
        fail(ErrorKind::QGridTooCoarse, "q-grid does not cover the classically allowed range of channel " +
                                            std::to_string(n_used));
    if (h > pi / (2.0 * s * std::sqrt(omega)))
        fail(ErrorKind::QGridTooCoarse, "q spacing too coarse for channel " + std::to_string(n_used));
}
}  // namespace

std::vector<cplx> reconstruct(const ChannelState& psi, const std::vector<double>& q_grid, double omega) {
    const auto& K = kernels();
    const int G = psi.grid.size();
    std::vector<cplx> out(q_grid.size() * G, 0.0);
    parallel_for(q_grid.size(), [&](std::size_t i) {
        const auto h = hermite_functions(psi.n_channels - 1, q_grid[i], omega);
        cplx* row = out.data() + i * G;
        for (int n = 0; n < psi.n_channels; ++n)
            if (h[n] != 0.0) K.axpy_cr(row, h[n], psi.channel(n), G);
    });
    return out;
}

std::vector<std::vector<cplx>> band_amplitudes(const ChannelState& psi, const ModelParams& p, int n_bands,
                                               const std::vector<double>& q_grid) {
    const int n_used = significant_channels(psi);
    check_q_grid(q_grid, n_used, p.omega);
    const auto& K = kernels();
    const int G = psi.grid.size();
    std::vector<std::vector<cplx>> Q(n_bands, std::vector<cplx>(q_grid.size()));
    parallel_for(q_grid.size(), [&](std::size_t i) {
        const double q = q_grid[i];
        const auto h = hermite_functions(n_used, q, p.omega);
        std::vector<cplx> row(G, 0.0);
        for (int n = 0; n <= n_used; ++n)
            if (h[n] != 0.0) K.axpy_cr(row.data(), h[n], psi.channel(n), G);
        std::vector<double> wphi(G);
        for (int b = 0; b < n_bands; ++b) {
            const auto bp = solve_xi(q, b, p);
            for (int j = 0; j < G; ++j) wphi[j] = psi.grid.weights[j] * bp.phi(psi.grid.x[j]);
            Q[b][i] = K.dot_rc(wphi.data(), row.data(), G);
        }
    });
    return Q;
}

std::vector<double> band_populations(const ChannelState& psi, const ModelParams& p, int n_bands,
                                     const std::vector<double>& q_grid) {
    const auto Q = band_amplitudes(psi, p, n_bands, q_grid);
    const double dq = q_grid[1] - q_grid[0];
    std::vector<double> pops(n_bands, 0.0);
    for (int b = 0; b < n_bands; ++b)
        for (const auto& v : Q[b]) pops[b] += dq * std::norm(v);
    return pops;
}

ObservableTrace evolve_and_trace(ChannelState& psi, const Propagator& prop, double T, const TraceOptions& opt) {
    const double dt = prop.config().dt;
    const int per_sample = std::max(1, static_cast<int>(std::lround(opt.sample_every / dt)));
    const long total_steps = std::lround(T / dt);
    const double omega = prop.hamiltonian().params.omega;
    auto wants = [&](Observable o) {
        return std::find(opt.observables.begin(), opt.observables.end(), o) != opt.observables.end();
    };
    ObservableTrace tr;
    auto sample = [&]() {
        tr.times.push_back(psi.time);
        tr.norm2.push_back(psi.norm2());
        const double e = oscillator_energy(psi, omega);
        tr.E_osc.push_back(e);
        const size_t k = tr.times.size();
        if (k == 1) {
            tr.E_osc_time_avg.push_back(e);
        } else {
            // running integral recovered from the previous average
            const double t0 = tr.times.front();
            const double prev_int = tr.E_osc_time_avg.back() * (tr.times[k - 2] - t0);
            const double integral = prev_int + 0.5 * (tr.E_osc[k - 2] + e) * (tr.times[k - 1] - tr.times[k - 2]);
            tr.E_osc_time_avg.push_back(integral / (tr.times[k - 1] - t0));
        }
        if (wants(Observable::tail_prob)) tr.tail_prob.push_back(tail_probability(psi, opt.eta));
        if (wants(Observable::q_mean)) tr.q_mean.push_back(q_expectation(psi, omega));
        if (wants(Observable::energy)) tr.energy.push_back(prop.hamiltonian().expectation(psi));
        if (wants(Observable::coherence)) {
            const auto c = reduced_coherence(psi, opt.eta);
            tr.coherence.push_back(c.dictionary_max);
            tr.offdiag_mass.push_back(c.offdiag_mass);
        }
        const bool pops_due = tr.band_pops_times.empty() ||
                              psi.time >= tr.band_pops_times.back() + opt.band_pops_every - 1e-9 || tr.truncation_leak;
        if (wants(Observable::band_pops) && pops_due) {
            tr.band_pops_times.push_back(psi.time);
            const int n_used = significant_channels(psi);
            const auto q = adequate_q_grid(n_used, omega, opt.q_points);
            tr.band_pops.push_back(band_populations(psi, prop.hamiltonian().params, opt.n_bands, q));
        }
    };
    sample();
    for (long s = 1; s <= total_steps; ++s) {
        try {
            prop.step(psi);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::TruncationLeak) throw;
            tr.truncation_leak = true;
            tr.leak_time = psi.time;
            sample();
            return tr;
        }
        if (s % per_sample == 0 || s == total_steps) sample();
    }
    return tr;
}

ChannelState gaussian_product_state(const HalfGrid& grid, int n_channels, double width) {
    ChannelState s(n_channels, grid);
    for (int j = 0; j < grid.size(); ++j) s.at(0, j) = std::exp(-0.5 * grid.x[j] * grid.x[j] / (width * width));
    const double nn = std::sqrt(s.norm2());
    for (int j = 0; j < grid.size(); ++j) s.at(0, j) /= nn;
    return s;
}

// ---------------------------------------------------------------------------

double BandState::norm2() const {
    double s = 0.0;
    for (const auto& v : Q0) s += std::norm(v);
    return s * dq();
}

BandState make_band_state(const std::vector<double>& q_grid, const std::vector<double>& potential, double q0,
                          double width, double p0) {
    if (q_grid.size() < 3 || potential.size() != q_grid.size())
        fail(ErrorKind::PreconditionViolation, "q-grid and potential must match");
    BandState s;
    s.q_grid = q_grid;
    s.potential = potential;
    s.Q0.resize(q_grid.size());
    for (size_t i = 0; i < q_grid.size(); ++i) {
        const double d = q_grid[i] - q0;
        s.Q0[i] = std::exp(-0.5 * d * d / (width * width)) * std::exp(I * p0 * q_grid[i]);
    }
    const double nn = std::sqrt(s.norm2());
    for (auto& v : s.Q0) v /= nn;
    return s;
}

std::vector<double> band_potential_samples(const std::vector<double>& q_grid, const ModelParams& p,
                                           bool include_gamma, int l_max) {
    std::vector<double> V(q_grid.size());
    parallel_for(q_grid.size(), [&](std::size_t i) { V[i] = band_potential(q_grid[i], p, l_max, include_gamma).V; });
    return V;
}

BandTrace band_reduced_evolve(BandState& s, double dt, double T, double sample_every, double boundary_tol) {
    if (!(dt > 0.0) || !(T >= 0.0)) fail(ErrorKind::PreconditionViolation, "dt > 0 and T >= 0 required");
    const int n = static_cast<int>(s.q_grid.size());
    const double h = s.dq();
    const double k = 1.0 / (h * h);
    const double tau = 0.5 * dt;
    // Dirichlet ends; H = -1/2 D2 + V
    std::vector<cplx> diag(n), off(n - 1, I * tau * (-0.5 * k));
    for (int i = 0; i < n; ++i) diag[i] = 1.0 + I * tau * (k + s.potential[i]);
    TriLU lu;
    lu.factor(off, diag, off);

    const int edge = std::max(1, n / 20);
    BandTrace tr;
    auto sample = [&]() {
        double m = 0.0, q1 = 0.0, q2 = 0.0, b = 0.0, e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double a = std::norm(s.Q0[i]);
            m += a;
            q1 += a * s.q_grid[i];
            q2 += a * s.q_grid[i] * s.q_grid[i];
            if (i < edge || i >= n - edge) b += a;
            const cplx l = i > 0 ? s.Q0[i - 1] : 0.0;
            const cplx r = i + 1 < n ? s.Q0[i + 1] : 0.0;
            const cplx hq = (k + s.potential[i]) * s.Q0[i] - 0.5 * k * (l + r);
            e += (std::conj(s.Q0[i]) * hq).real();
        }
        tr.times.push_back(s.time);
        tr.norm2.push_back(m * h);
        tr.q_mean.push_back(q1 / m);
        tr.q2_mean.push_back(q2 / m);
        tr.energy.push_back(e / m);
        tr.max_boundary_mass = std::max(tr.max_boundary_mass, b / m);
        if (b / m > boundary_tol)
            fail(ErrorKind::BoundaryLeak, "boundary mass " + std::to_string(b / m) + " at t=" + std::to_string(s.time));
    };
    const int per_sample = std::max(1, static_cast<int>(std::lround(sample_every / dt)));
    const long steps = std::lround(T / dt);
    std::vector<cplx> rhs(n);
    sample();
    for (long st = 1; st <= steps; ++st) {
        for (int i = 0; i < n; ++i) {
            const cplx l = i > 0 ? s.Q0[i - 1] : 0.0;
            const cplx r = i + 1 < n ? s.Q0[i + 1] : 0.0;
            rhs[i] = std::conj(diag[i]) * s.Q0[i] + std::conj(off[0]) * (l + r);
        }
        lu.solve(rhs.data());
        s.Q0.swap(rhs);
        s.time += dt;
        if (st % per_sample == 0 || st == steps) sample();
    }
    return tr;
}

double log_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t i = 0; i < t.size() && i < y.size(); ++i) {
        if (t[i] < t_lo || t[i] > t_hi || !(y[i] > 0.0)) continue;
        const double ly = std::log(y[i]);
        sx += t[i];
        sy += ly;
        sxx += t[i] * t[i];
        sxy += t[i] * ly;
        ++m;
    }
    if (m < 3) fail(ErrorKind::PreconditionViolation, "need at least three samples in the fit window");
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace smilansky
