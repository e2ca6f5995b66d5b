#pragma once

#include <numbers>
#include <vector>

namespace smilansky {

enum class Regime { subcritical, critical, overcritical };

const char* to_string(Regime r);

// Physical constants of the model. The circle has circumference 2*pi and only
// the even sector is represented.
struct ModelParams {
    double alpha = 1.3;
    double omega = 1.0;
    static constexpr double box_half_width = std::numbers::pi;

    Regime regime() const;
};

// Throws PreconditionViolation unless alpha > 0 and omega > 0.
ModelParams make_params(double alpha, double omega);
void validate(const ModelParams& p);

Regime classify_regime(const ModelParams& p);

struct Rescaled {
    ModelParams params;
    double energy_factor;
    double length_scale;  // L' / L
};

// (alpha, L, omega) -> (alpha / l^2, L l, omega / l^2); energies scale by l^2.
Rescaled rescale(const ModelParams& p, double lambda);

struct Interval {
    double lo;
    double hi;
    bool contains(double e) const { return e >= lo && e <= hi; }
};

struct ExceptionalSet {
    double omega;
    Interval interval;
    std::vector<double> points;
};

// Threshold energies (n+1/2) omega and zeros of v_n(0), i.e.
// 2E = (2n+1) omega + (r+1/2)^2 / s^2 where s is the box length scale
// relative to the 2*pi circle (s = 1 unless the model was rescaled).
ExceptionalSet exceptional_energies(double omega, Interval interval, double length_scale = 1.0);

inline constexpr double kExceptionalGuard = 1e-6;
inline constexpr double kThresholdGuard = 1e-12;

// Distance from E to the nearest member of the exceptional set.
double distance_to_exceptional(double E, double omega);
bool near_exceptional(double E, double omega, double guard = kExceptionalGuard);

// <n|q|m> for the oscillator of frequency omega.
struct OscillatorTable {
    double omega;
    int n_max;
    std::vector<double> upper;  // upper[n] = <n|q|n+1>

    double element(int n, int m) const;
};

OscillatorTable oscillator_matrix_elements(int n_max, double omega);

}  // namespace smilansky
