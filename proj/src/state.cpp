#include "smilansky/state.hpp"

#include <cmath>
#include <numbers>

#include "smilansky/errors.hpp"

namespace smilansky {

HalfGrid::HalfGrid(int M_) : M(M_) {
    if (M_ <= 0) return;
    dx = std::numbers::pi / M;
    x.resize(M + 1);
    weights.assign(M + 1, 2.0 * dx);
    for (int j = 0; j <= M; ++j) x[j] = j * dx;
    weights[0] = weights[M] = dx;
}

ChannelState::ChannelState(int n_channels_, const HalfGrid& g)
    : n_channels(n_channels_), grid(g), psi(static_cast<size_t>(n_channels_) * g.size()) {}

double ChannelState::channel_norm2(int n) const {
    return kernels().norm2_weighted(channel(n), grid.weights.data(), grid.size());
}

double ChannelState::norm2() const {
    double s = 0.0;
    for (int n = 0; n < n_channels; ++n) s += channel_norm2(n);
    return s;
}

cplx inner(const ChannelState& a, const ChannelState& b) {
    if (a.n_channels != b.n_channels || a.grid.M != b.grid.M)
        fail(ErrorKind::PreconditionViolation, "states live on different grids");
    cplx s = 0.0;
    for (size_t i = 0; i < a.psi.size(); ++i) s += std::conj(a.psi[i]) * b.psi[i] * a.grid.weights[i % a.grid.size()];
    return s;
}

double distance(const ChannelState& a, const ChannelState& b) {
    if (a.n_channels != b.n_channels || a.grid.M != b.grid.M)
        fail(ErrorKind::PreconditionViolation, "states live on different grids");
    double s = 0.0;
    const int G = a.grid.size();
    for (int n = 0; n < a.n_channels; ++n) {
        const cplx* pa = a.channel(n);
        const cplx* pb = b.channel(n);
        for (int j = 0; j < G; ++j) s += a.grid.weights[j] * std::norm(pa[j] - pb[j]);
    }
    return std::sqrt(s);
}

}  // namespace smilansky
