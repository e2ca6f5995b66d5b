#pragma once

#include <complex>
#include <vector>

#include "smilansky/model.hpp"

namespace smilansky {

// Solution of h2(n) C(n+2) + h1(n) C(n+1) + h0(n) C(n) = 0 with
// h2(-1) C(1) = -h1(-1) C(0). Values are stored in double after the
// recursion has been run at precision_bits.
struct RecursionSolution {
    double E = 0.0;
    ModelParams params;
    std::vector<double> C;
    int precision_bits = 53;
    double c0 = 1.0;
    double min_bits_remaining = 0.0;  // worst per-step significance left after cancellation

    int n_max() const { return static_cast<int>(C.size()) - 1; }
    // Residual of the difference equation at n using double coefficients.
    double residual(int n) const;
};

// precision_bits = 0 picks 53 for n_max <= 1e4 and 256 otherwise. Values above
// 53 are rounded up to one of 113, 256, 512.
RecursionSolution solve_recursion(double E, int n_max, const ModelParams& p, int precision_bits = 0);

// Reconstructs C(0..n0+1) from C(n0), C(n0+1) by running the recursion backwards.
std::vector<double> backward_solve(const RecursionSolution& sol, int n0, int precision_bits = 0);

double theta_closed(const ModelParams& p);
double lambda_closed(const ModelParams& p);

struct FitOptions {
    bool correction_term = false;  // adds n^{-3/2} cos(n theta + phi2)
    bool pin_frequencies = false;  // hold theta and lambda at the values below
    double theta = 0.0;
    double lambda = 0.0;
};

// C(n) ~ amplitude n^{-1/2} cos(n theta - lambda E ln n + zeta), theta in (0, pi).
struct AsymptoticFit {
    double theta_fit = 0.0;
    double lambda_fit = 0.0;
    double zeta_fit = 0.0;
    double amplitude_fit = 0.0;
    double residual_rms = 0.0;
    int window_lo = 0;
    int window_hi = 0;
    double c0_normalized = 1.0;  // C(0) giving amplitude pi^{-1/2}
};

AsymptoticFit fit_asymptotics(const RecursionSolution& sol, int window_lo, int window_hi, const FitOptions& opt = {});

// Returns the solution rescaled to amplitude pi^{-1/2}.
RecursionSolution normalized(const RecursionSolution& sol, const AsymptoticFit& fit);

struct CoefficientLimits {
    double a0, a1, b0, b1;
};

struct CharacteristicData {
    CoefficientLimits closed;   // closed forms
    CoefficientLimits numeric;  // extrapolated from p(n) = -h1/h2, q(n) = -h0/h2
    std::complex<double> sigma_plus, sigma_minus;
    std::complex<double> exponent_plus, exponent_minus;
};

CharacteristicData characteristic_data(double E, const ModelParams& p);

struct GrowthTable {
    std::vector<long> N;
    std::vector<double> partial_sum;
    double slope = 0.0;  // d(sum)/d(ln N)
};

// Expects a normalized solution.
GrowthTable partial_sum_growth(const RecursionSolution& sol, std::vector<long> N = {});

struct ZetaScan {
    std::vector<double> E;
    std::vector<double> zeta;   // unwrapped, zeta[0] in [0, 2 pi)
    std::vector<double> dzeta;  // forward differences / dE
    double max_jump_ratio = 0.0;
    bool smooth = false;
};

ZetaScan zeta_smoothness_scan(const std::vector<double>& E_grid, const ModelParams& p, int n_max = 20000,
                              int precision_bits = 53);

}  // namespace smilansky
