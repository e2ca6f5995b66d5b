#pragma once

#include <vector>

#include "smilansky/model.hpp"

namespace smilansky {

// Root of tan(pi xi) = alpha q / xi (real) or tanh(pi chi) = -alpha q / chi
// (imaginary ground branch, q < 0) and the normalized even eigenfunction
// phi(x) = A cos(xi (|x| - pi)) or A cosh(chi (|x| - pi)), phi(pi) > 0.
struct BandPoint {
    double q = 0.0;
    int n = 0;
    bool imaginary = false;
    double xi = 0.0;  // xi, or chi on the imaginary branch
    double W = 0.0;   // xi^2 / 2, or -chi^2 / 2
    double A = 0.0;   // may underflow on the imaginary branch; phi() is safe
    double residual = 0.0;
    // imaginary branch helpers: t = exp(-2 chi pi), A = exp(-chi pi) / den
    double t = 0.0;
    double den = 1.0;

    double phi(double x) const;
    double phi0() const { return phi(0.0); }
};

BandPoint solve_xi(double q, int n, const ModelParams& p);
double band_eigenfunction(const BandPoint& bp, double x);
double dW_dq(double q, int n, const ModelParams& p);

struct BandPotential {
    double V = 0.0;
    double harmonic = 0.0;
    double W0 = 0.0;
    double gamma_term = 0.0;  // (1/2) sum_{n=1}^{l_max} gamma_{n0}^2
    double last_term = 0.0;
    double tail_bound = 0.0;
};

// V(q) = omega^2 q^2 / 2 + W_0(q) + gamma_term; include_gamma=false gives the two-term curve.
BandPotential band_potential(double q, const ModelParams& p, int l_max = 200, bool include_gamma = true);

enum class CurveShape { bounded_below, marginal, inverted };
const char* to_string(CurveShape s);

struct CurveClass {
    CurveShape shape;
    double quadratic_coefficient;  // least squares V ~ c q^2 + b q + d on the fit range
};

// Classifies the two-term band potential from its large negative-q behaviour.
CurveClass classify_band_curve(const ModelParams& p, double q_fit_lo = -10.0, double q_fit_hi = -5.0);

// Lowest eigenvalue of -1/2 d^2/dq^2 + V(q) on [-L, L] (finite differences, two-term V).
double band_ground_energy(const ModelParams& p, double L = 12.0, int points = 2400);

// ---------------------------------------------------------------------------
// Two oscillators coupled at x = 0 and x = pi:
// tan(pi xi) = alpha xi (q1 + q2) / (xi^2 - alpha^2 q1 q2).

struct BandPoint2 {
    double q1 = 0.0, q2 = 0.0;
    int n = 0;
    bool imaginary = false;
    double xi = 0.0;  // xi, or chi on an imaginary branch
    double W = 0.0;
    double E = 0.0;   // omega^2 (q1^2 + q2^2) / 2 + W
    double residual = 0.0;
};

BandPoint2 solve_xi2(double q1, double q2, int n, const ModelParams& p);
// Number of imaginary roots (0, 1 or 2).
int imaginary_root_count(double q1, double q2, const ModelParams& p);

// Closed form of the region where xi_0 is imaginary:
// q_+ < 0, or q_- < -q_+ / (1 + pi alpha q_+).
bool region_R(double q1, double q2, const ModelParams& p);
// The same inequality without alpha in the denominator.
bool region_R_unscaled(double q1, double q2);

enum class SurfaceShape { bounded_below, valleys_and_crest, other };
const char* to_string(SurfaceShape s);

struct BandSurface2 {
    std::vector<double> q1_grid, q2_grid;
    int n = 0;
    std::vector<std::vector<double>> E;         // E[i][j] at (q1_grid[i], q2_grid[j])
    std::vector<std::vector<bool>> imaginary;   // solver: xi_0 imaginary
    std::vector<std::vector<bool>> region;      // closed-form region R
    SurfaceShape shape = SurfaceShape::other;
};

BandSurface2 band_surface(const std::vector<double>& q1_grid, const std::vector<double>& q2_grid, int n,
                          const ModelParams& p);

// lim_{t->inf} E_n(t cos phi, t sin phi) / t^2 evaluated at radius t.
double radial_coefficient(double phi, int n, const ModelParams& p, double t = 1e3);
// Radial asymptotic classification of band n.
SurfaceShape classify_surface(int n, const ModelParams& p, double t = 1e3);
// Angular half-width about the negative diagonal of the region where E_0 -> +inf.
double crest_half_width(const ModelParams& p, double t = 1e3);

// Smallest alpha in (alpha_lo, alpha_hi] at which band n becomes unbounded
// below, for one or two oscillators. Throws NotBracketed.
double detect_band_transition(int n, int oscillators, double omega, double alpha_lo, double alpha_hi,
                              double t = 1e4);

}  // namespace smilansky
