#pragma once

#include <vector>

namespace smilansky {

struct QuadRule {
    std::vector<double> x, w;
    double dx_max = 0.0;    // largest node spacing
    double dx_first = 0.0;  // mean node spacing of the panel touching the left end
};

// Gauss-Legendre on `panels` equal panels of [a, b]; nodes per panel in {16, 32, 64}.
QuadRule gauss_legendre(double a, double b, int panels, int nodes = 64);

// Panels [a + (b-a) 2^{-k-1}, a + (b-a) 2^{-k}] for k < levels, plus [a, a + (b-a) 2^{-levels}],
// with the outer half split into `outer_panels` equal pieces.
QuadRule graded_gauss_legendre(double a, double b, int levels, int outer_panels, int nodes = 64);

}  // namespace smilansky
