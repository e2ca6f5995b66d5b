#pragma once

#include <complex>
#include <vector>

#include "smilansky/model.hpp"
#include "smilansky/state.hpp"

namespace smilansky {

// Discrete H on the even half-grid: per channel -1/2 Laplacian (reflecting at
// x = 0 and x = pi) + (n + 1/2) omega, plus g (sqrt(n+1) psi_{n+1}(0) +
// sqrt(n) psi_{n-1}(0)) / dx on the x = 0 node, g = alpha / sqrt(2 omega).
struct HamiltonianAction {
    ModelParams params;
    HalfGrid grid;
    int n_channels = 0;
    double g = 0.0;

    ChannelState apply(const ChannelState& psi) const;
    // <psi, H psi> (real part)
    double expectation(const ChannelState& psi) const;
};

HamiltonianAction build_hamiltonian_action(const ModelParams& p, const HalfGrid& grid, int n_channels);

struct PropagatorConfig {
    double dt = 0.01;
    double truncation_threshold = 1e-6;  // top-channel mass relative to the norm
};

// Crank-Nicolson (Cayley) propagator. Each channel block is eliminated
// towards x = 0; the remaining n-tridiagonal system at the coupling node is
// solved with partial pivoting.
class Propagator {
public:
    Propagator(const ModelParams& p, const HalfGrid& grid, int n_channels, const PropagatorConfig& cfg);

    // Advances in place. Throws TruncationLeak after advancing when the top
    // channel holds more than the threshold.
    void step(ChannelState& psi) const;
    // Same without the truncation monitor.
    void step_unchecked(ChannelState& psi) const;

    const PropagatorConfig& config() const { return cfg_; }
    const HamiltonianAction& hamiltonian() const { return H_; }

private:
    HamiltonianAction H_;
    PropagatorConfig cfg_;
    double tau_ = 0.0;
    cplx O_;
    std::vector<cplx> D_;       // per channel diagonal of 1 + i tau H_n
    std::vector<cplx> delta0_;  // reduced diagonal at x = 0
    // 1 / den_j for j = M down to layer_lo_[n], stored from tail_start_[n]; iv_inf_ below
    std::vector<cplx> iv_;
    std::vector<long> tail_start_;
    std::vector<int> layer_lo_;
    std::vector<cplx> iv_inf_;

    cplx inv_den(int n, int j) const {
        return j >= layer_lo_[n] ? iv_[tail_start_[n] + (H_.grid.M - j)] : iv_inf_[n];
    }
};

// Oscillator Hermite functions h_0..h_n_max at q (omega-scaled), by the
// normalized three-term recurrence carried with a separate exponent.
std::vector<double> hermite_functions(int n_max, double q, double omega);

enum class Observable { E_osc, tail_prob, q_mean, coherence, band_pops, energy };

struct TraceOptions {
    double sample_every = 0.1;  // time between samples
    std::vector<Observable> observables{Observable::E_osc, Observable::tail_prob, Observable::q_mean};
    double eta = 0.5;
    int n_bands = 4;
    int q_points = 0;  // 0 picks the finest grid that the check requires
    double band_pops_every = 1.0;  // band populations are costly; sampled on their own clock
};

struct ObservableTrace {
    std::vector<double> times;
    std::vector<double> norm2;
    std::vector<double> E_osc;
    std::vector<double> E_osc_time_avg;  // (1/t) int_0^t E_osc, trapezoid over samples
    std::vector<double> tail_prob;
    std::vector<double> q_mean;
    std::vector<double> coherence;
    std::vector<double> offdiag_mass;
    std::vector<double> energy;
    std::vector<double> band_pops_times;
    std::vector<std::vector<double>> band_pops;  // [sample][band]
    bool truncation_leak = false;
    double leak_time = 0.0;
};

double oscillator_energy(const ChannelState& psi, double omega);
double tail_probability(const ChannelState& psi, double eta);
double q_expectation(const ChannelState& psi, double omega);

struct Coherence {
    double dictionary_max = 0.0;  // max |(phi_a, S phi_b)| over the test dictionary
    double offdiag_mass = 0.0;    // sum over |x - x'| > eta of |S|^2 dx^2
    double trace = 0.0;           // sum_j S(x_j, x_j) dx
};

// Test dictionary: 1/sqrt(2 pi) and cos(k x)/sqrt(pi), k = 1..9.
double dictionary_function(int a, double x);
Coherence reduced_coherence(const ChannelState& psi, double eta);

// psi(x_j, q_i) = sum_n psi_n(x_j) h_n(q_i), [i * (M+1) + j]
std::vector<cplx> reconstruct(const ChannelState& psi, const std::vector<double>& q_grid, double omega);

// Uniform q-grid adequate for channels 0..n_used: covers |q| <= 1.2 sqrt((2 n + 1)/omega) + 4
// with spacing below pi / (2 sqrt((2 n + 1) omega)).
std::vector<double> adequate_q_grid(int n_used, double omega, int min_points = 0);
// Highest channel carrying more than rel_tol of the mass.
int significant_channels(const ChannelState& psi, double rel_tol = 1e-14);

// ||Pi_n psi||^2 = int |Q_n(q)|^2 dq for n < n_bands; throws QGridTooCoarse.
std::vector<double> band_populations(const ChannelState& psi, const ModelParams& p, int n_bands,
                                     const std::vector<double>& q_grid);
// Q_n(q_i) for n < n_bands, [n][i]
std::vector<std::vector<cplx>> band_amplitudes(const ChannelState& psi, const ModelParams& p, int n_bands,
                                               const std::vector<double>& q_grid);

ObservableTrace evolve_and_trace(ChannelState& psi, const Propagator& prop, double T, const TraceOptions& opt);

// Initial states
ChannelState gaussian_product_state(const HalfGrid& grid, int n_channels, double width);

// ---------------------------------------------------------------------------
// Band-reduced evolution  i dQ/dt = -1/2 Q'' + V(q) Q.

struct BandState {
    std::vector<double> q_grid;
    std::vector<cplx> Q0;
    std::vector<double> potential;
    double time = 0.0;
    double dq() const { return q_grid[1] - q_grid[0]; }
    double norm2() const;
};

struct BandTrace {
    std::vector<double> times, norm2, q_mean, q2_mean, energy;
    double max_boundary_mass = 0.0;
};

BandState make_band_state(const std::vector<double>& q_grid, const std::vector<double>& potential,
                          double q0, double width, double p0 = 0.0);
// Potential samples of the band potential (two-term unless include_gamma).
std::vector<double> band_potential_samples(const std::vector<double>& q_grid, const ModelParams& p,
                                           bool include_gamma = false, int l_max = 200);

// Throws BoundaryLeak when more than boundary_tol of the mass reaches the
// outer 5% of the domain.
BandTrace band_reduced_evolve(BandState& s, double dt, double T, double sample_every = 0.05,
                              double boundary_tol = 1e-8);

// Least-squares slope of log(y) against t over t in [t_lo, t_hi].
double log_slope(const std::vector<double>& t, const std::vector<double>& y, double t_lo, double t_hi);

}  // namespace smilansky
