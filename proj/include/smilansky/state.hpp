#pragma once

#include <complex>
#include <vector>

#include "smilansky/kernels.hpp"

namespace smilansky {

// Uniform grid on the circle restricted to the even sector: nodes x_j = j dx,
// j = 0..M, dx = pi / M. The full-circle trapezoid rule for even functions
// gives weights dx * (1, 2, ..., 2, 1).
struct HalfGrid {
    int M = 0;
    double dx = 0.0;
    std::vector<double> x;
    std::vector<double> weights;

    explicit HalfGrid(int M_ = 0);
    int size() const { return M + 1; }
};

struct ChannelState {
    int n_channels = 0;
    HalfGrid grid;
    std::vector<cplx> psi;  // psi[n * (M+1) + j]
    double time = 0.0;

    ChannelState() = default;
    ChannelState(int n_channels_, const HalfGrid& g);

    cplx* channel(int n) { return psi.data() + static_cast<size_t>(n) * grid.size(); }
    const cplx* channel(int n) const { return psi.data() + static_cast<size_t>(n) * grid.size(); }
    cplx& at(int n, int j) { return psi[static_cast<size_t>(n) * grid.size() + j]; }
    const cplx& at(int n, int j) const { return psi[static_cast<size_t>(n) * grid.size() + j]; }

    double channel_norm2(int n) const;
    double norm2() const;
};

// sum_n <a_n, b_n> with the grid weights
cplx inner(const ChannelState& a, const ChannelState& b);
// || a - b ||
double distance(const ChannelState& a, const ChannelState& b);

}  // namespace smilansky
