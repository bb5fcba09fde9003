#pragma once

#include <cmath>
#include <cstdint>

#include "lss/tensor.hpp"

namespace lss {

// Deterministic 64-bit generator (splitmix64) with Box-Muller gaussians.
// Every stochastic routine in the project takes one of these explicitly so
// runs are reproducible from a single seed. normal() always consumes two
// uniforms and keeps no cached spare, so the draw count per call is fixed
// and the whole generator state stays in one u64.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in (0,1]; never returns 0 so log() below is safe
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double uniform_in(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    Tensor normal_tensor(std::vector<int> shape) {
        Tensor t(std::move(shape));
        for (double& v : t.data) v = normal();
        return t;
    }

    // Independent child stream; used to push per-sample draws into parallel
    // loops without making the output depend on thread count.
    Rng fork(uint64_t stream) const {
        uint64_t z = state_ ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return Rng(z ^ (z >> 31));
    }

    static const char* algorithm() { return "splitmix64/box-muller"; }

private:
    uint64_t state_;
};

}  // namespace lss
