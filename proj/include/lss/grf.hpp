#pragma once

#include <vector>

#include "lss/fft.hpp"
#include "lss/rng.hpp"
#include "lss/tensor.hpp"

namespace lss {

// Stationary periodic gaussian random field on a size x size grid, stored
// as its spectral eigenvalue table: E|fft2(z)[k]|^2 = size^2 * lambda[k].
// The power-law constructor normalizes so the mean pixel variance is 1.
// pooled_spec outputs keep their true (smaller) variance.
struct GrfSpec {
    int size = 0;
    std::vector<double> lambda;  // size*size, strictly positive
    double alpha = 0.0, c = 0.0; // power-law parameters, 0 when table-built

    static GrfSpec power_law(int size, double alpha, double c);
    double lambda_at(int u, int v) const { return lambda[static_cast<size_t>(u) * size + v]; }
    double pixel_variance() const;  // sum(lambda) / size^2
};

// Spectral synthesis: shape a white gaussian field by sqrt(lambda) in the
// frequency domain. Channels are independent fields of the same law.
Tensor grf_sample(const GrfSpec& spec, Rng& rng, int channels = 1);

// Per-frequency Wiener gains for the state z_t = (1-t) z0 + t eps, with
// D = (1-t)^2 lambda + t^2:
//   velocity (eps - z0):  (t - (1-t) lambda) / D
//   eps:                   t / D
//   z0:                    (1-t) lambda / D
std::vector<double> velocity_gains(const GrfSpec& spec, double t);
std::vector<double> eps_gains(const GrfSpec& spec, double t);
std::vector<double> x0_gains(const GrfSpec& spec, double t);

Tensor analytic_velocity(const Tensor& z_t, double t, const GrfSpec& spec);
Tensor analytic_eps(const Tensor& z_t, double t, const GrfSpec& spec);
Tensor analytic_x0(const Tensor& z_t, double t, const GrfSpec& spec);

// Law of the 2x2 average-pooled field, computed from the pooled
// autocovariance; this is the exact data distribution of a lower stage.
GrfSpec pooled_spec(const GrfSpec& spec);

// Conditional expectation E[z_high | z_low] under the joint gaussian of a
// field and its 2x2 average pooling, via dense covariance conditioning.
// Sizes above 64 are rejected (dense solve only). Also reports the exact
// per-pixel MSE of that conditional mean, the floor for any upsampler.
class MmseUpsampler {
public:
    explicit MmseUpsampler(const GrfSpec& high_spec);
    Tensor apply(const Tensor& z_low) const;  // [c, n/2, n/2] -> [c, n, n]
    double oracle_mse() const { return oracle_mse_; }

private:
    int n_ = 0;                   // high-res side
    std::vector<double> cross_;   // [n^2 x m] Cov(z_i, y_j)
    std::vector<double> chol_;    // [m x m] Cholesky factor of Cov(y, y)
    double oracle_mse_ = 0.0;
    std::vector<double> solve_low(const std::vector<double>& rhs) const;
};

// Batch power spectrum averaged into ceil(size/4) radial bands with uniform
// edges from 0 to the corner frequency. power[b] is the mean |fft2|^2 per
// coefficient in the band, so it estimates size^2 * lambda band means.
struct SpectralProfile {
    std::vector<double> band_lo, band_hi;
    std::vector<double> power;
    int samples = 0;
};
SpectralProfile radial_power_spectrum(const std::vector<Tensor>& batch);
SpectralProfile expected_profile(const GrfSpec& spec);
int num_bands(int size);
int band_of(int u, int v, int h, int w);

std::vector<double> band_relative_errors(const SpectralProfile& got, const SpectralProfile& want);
double mean_band_error(const SpectralProfile& got, const SpectralProfile& want);

}  // namespace lss
