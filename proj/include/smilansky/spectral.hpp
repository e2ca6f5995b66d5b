#pragma once

#include <vector>

#include "smilansky/model.hpp"
#include "smilansky/quadrature.hpp"
#include "smilansky/state.hpp"

namespace smilansky {

// Formal eigenfunctions u_n(x, E) = (-1)^n C(n, E) v_n(x, E), where C solves
// the difference equation with the literal signs and is normalized to
// asymptotic amplitude pi^{-1/2}. The alternating factor makes u satisfy the
// jump condition psi_n'(0+) - psi_n'(0-) = 2 g (sqrt(n+1) psi_{n+1}(0) + sqrt(n) psi_{n-1}(0)).
struct EigenfunctionTable {
    ModelParams params;
    std::vector<double> E_grid;
    int n_max = 0;
    std::vector<std::vector<double>> C;  // C[e][n], n = 0..n_max
    std::vector<double> c0;

    size_t index_of(double E) const;
    static double gauge(int n) { return (n & 1) ? -1.0 : 1.0; }
    double coeff(size_t e, int n) const { return gauge(n) * C[e][n]; }
    double u0(size_t e, int n) const;
    double u(size_t e, int n, double x) const;
};

enum class Normalization {
    isometric,  // C(n) ~ (2 lambda / (pi n))^{1/2} cos(...): the map Psi -> psi is an isometry
    unit_pi,    // C(n) ~ (pi n)^{-1/2} cos(...)
};

struct TableOptions {
    int n_norm = 20000;       // recursion length used for the amplitude fit
    int precision_bits = 53;  // 0: automatic
    Normalization normalization = Normalization::isometric;
};

EigenfunctionTable build_table(const std::vector<double>& E_grid, int n_max, const ModelParams& p,
                               const TableOptions& opt = {});

// Graded rule on [0, pi] used for channel overlaps.
QuadRule circle_rule();

double overlap_pn(int n, double E1, double E2, const EigenfunctionTable& table);
double overlap_pn(int n, double E1, double E2, const EigenfunctionTable& table, const QuadRule& rule);

// W_n(E1, E2) = sqrt(n) (u_n(0,E1) u_{n-1}(0,E2) - u_{n-1}(0,E1) u_n(0,E2)), W_0 = 0
double wronskian_w(int n, double E1, double E2, const EigenfunctionTable& table);

struct TelescopingResult {
    double lhs, rhs, gap;
};

TelescopingResult telescoping_check(double E1, double E2, int N, const EigenfunctionTable& table);

struct DeltaKernel {
    double E1;
    std::vector<double> E2;
    std::vector<long> N;
    std::vector<std::vector<double>> K;  // K[iN][iE2] = sum_{n <= N} P_n(E1, E2)
    std::vector<double> envelope;        // 2 alpha sin(theta) / (pi |E1 - E2|)
};

DeltaKernel delta_kernel_profile(double E1, const std::vector<double>& E2_grid, const std::vector<long>& N_list,
                                 const EigenfunctionTable& table);

struct LogFrequencyFit {
    double frequency, amplitude, phase, residual_rms;
};

// K(N) ~ amplitude sin(frequency ln N + phase), frequency > 0
LogFrequencyFit fit_log_frequency(const std::vector<long>& N, const std::vector<double>& K);

struct SpectralProfile {
    Interval support;
    QuadRule rule;
    std::vector<cplx> values;
    double norm2() const;
};

// C-infinity bump exp(-1/(1-s^2)) on the support, normalized in L^2(dE).
SpectralProfile bump_profile(Interval support, int panels = 4, int nodes = 32);
// Gaussian exp(-(E-center)^2 / (2 sigma^2)) times the bump of the support, normalized.
SpectralProfile windowed_gaussian_profile(Interval support, double center, double sigma, int panels = 8,
                                          int nodes = 32);
// Default initial state for the dynamics: windowed Gaussian on [-3, 0.45],
// centered at -1.2 with width 0.6 (below the first threshold for omega = 1).
SpectralProfile reference_profile();
SpectralProfile with_time_phase(const SpectralProfile& profile, double t);
// Throws SupportViolation if the support meets the exceptional set.
void check_support(const SpectralProfile& profile, double omega);

ChannelState synthesize(const SpectralProfile& profile, const EigenfunctionTable& table, const HalfGrid& grid,
                        double tail_tol = 1e-8);
ChannelState spectral_propagate(const SpectralProfile& profile, double t, const EigenfunctionTable& table,
                                const HalfGrid& grid, double tail_tol = 1e-8);


// ||iota(Psi)||^2 evaluated with the graded circle rule (no grid error).
double synthesized_norm2(const SpectralProfile& profile, const EigenfunctionTable& table);

}  // namespace smilansky
