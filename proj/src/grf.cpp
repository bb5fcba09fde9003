#include "lss/grf.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lss/kernels.hpp"

namespace lss {

GrfSpec GrfSpec::power_law(int size, double alpha, double c) {
    if (size < 2) throw std::invalid_argument("GrfSpec: size must be >= 2");
    if (!(c > 0.0)) throw std::invalid_argument("GrfSpec: c must be positive");
    GrfSpec spec;
    spec.size = size;
    spec.alpha = alpha;
    spec.c = c;
    spec.lambda.resize(static_cast<size_t>(size) * size);
    double total = 0.0;
    for (int u = 0; u < size; ++u) {
        for (int v = 0; v < size; ++v) {
            double r = radial_freq(u, v, size, size);
            double l = 1.0 / (std::pow(r, alpha) + c);
            spec.lambda[static_cast<size_t>(u) * size + v] = l;
            total += l;
        }
    }
    // mean pixel variance = sum(lambda)/size^2, normalized to 1
    double scale = static_cast<double>(size) * size / total;
    for (double& l : spec.lambda) l *= scale;
    return spec;
}

double GrfSpec::pixel_variance() const {
    double total = 0.0;
    for (double l : lambda) total += l;
    return total / (static_cast<double>(size) * size);
}

Tensor grf_sample(const GrfSpec& spec, Rng& rng, int channels) {
    if (channels < 1) throw std::invalid_argument("grf_sample: channels must be >= 1");
    int n = spec.size;
    Tensor out({channels, n, n});
    for (int ch = 0; ch < channels; ++ch) {
        Tensor white({1, n, n});
        for (double& v : white.data) v = rng.normal();
        Spectrum s = fft2(white, 0);
        for (int u = 0; u < n; ++u) {
            for (int v = 0; v < n; ++v) {
                s.at(u, v) *= std::sqrt(spec.lambda_at(u, v));
            }
        }
        Tensor field = ifft2_real(s);
        for (int64_t i = 0; i < static_cast<int64_t>(n) * n; ++i) {
            out[static_cast<int64_t>(ch) * n * n + i] = field[i];
        }
    }
    return out;
}

namespace {
void check_t(double t) {
    if (!(t >= 0.0 && t <= 1.0)) {
        throw std::invalid_argument("analytic predictor: t must be in [0,1], got " + std::to_string(t));
    }
}
}  // namespace

std::vector<double> velocity_gains(const GrfSpec& spec, double t) {
    check_t(t);
    std::vector<double> g(spec.lambda.size());
    for (size_t i = 0; i < g.size(); ++i) {
        double l = spec.lambda[i];
        double d = (1.0 - t) * (1.0 - t) * l + t * t;
        g[i] = (t - (1.0 - t) * l) / d;
    }
    return g;
}

std::vector<double> eps_gains(const GrfSpec& spec, double t) {
    check_t(t);
    std::vector<double> g(spec.lambda.size());
    for (size_t i = 0; i < g.size(); ++i) {
        double l = spec.lambda[i];
        double d = (1.0 - t) * (1.0 - t) * l + t * t;
        g[i] = t / d;
    }
    return g;
}

std::vector<double> x0_gains(const GrfSpec& spec, double t) {
    check_t(t);
    std::vector<double> g(spec.lambda.size());
    for (size_t i = 0; i < g.size(); ++i) {
        double l = spec.lambda[i];
        double d = (1.0 - t) * (1.0 - t) * l + t * t;
        g[i] = (1.0 - t) * l / d;
    }
    return g;
}

namespace {
void check_spec_size(const Tensor& z, const GrfSpec& spec, const char* who) {
    if (z.rank() != 3 || z.dim(1) != spec.size || z.dim(2) != spec.size) {
        throw std::invalid_argument(std::string(who) + ": state " + z.shape_str() +
                                    " does not match spec size " + std::to_string(spec.size));
    }
}
}  // namespace

Tensor analytic_velocity(const Tensor& z_t, double t, const GrfSpec& spec) {
    check_spec_size(z_t, spec, "analytic_velocity");
    return apply_frequency_gains(z_t, velocity_gains(spec, t));
}

Tensor analytic_eps(const Tensor& z_t, double t, const GrfSpec& spec) {
    check_spec_size(z_t, spec, "analytic_eps");
    return apply_frequency_gains(z_t, eps_gains(spec, t));
}

Tensor analytic_x0(const Tensor& z_t, double t, const GrfSpec& spec) {
    check_spec_size(z_t, spec, "analytic_x0");
    return apply_frequency_gains(z_t, x0_gains(spec, t));
}

namespace {

// Autocovariance c(r) = E[z_x z_{x+r}] = ifft2(lambda)/ (h*w) is already
// handled by ifft2_real's normalization.
std::vector<double> autocovariance(const GrfSpec& spec) {
    Spectrum s;
    s.h = spec.size;
    s.w = spec.size;
    s.data.assign(spec.lambda.size(), {0.0, 0.0});
    for (size_t i = 0; i < spec.lambda.size(); ++i) s.data[i] = spec.lambda[i];
    Tensor c = ifft2_real(s);
    return c.data;
}

inline int wrap(int i, int n) { return ((i % n) + n) % n; }

// Autocovariance of the 2x2 average-pooled field on the half grid:
// C_y(m) = sum over offsets d in {-1,0,1}^2 of w_d * c(2m + d) with
// w_d = (2-|dx|)(2-|dy|)/16 (the pooling filter correlated with itself).
std::vector<double> pooled_autocovariance(const std::vector<double>& c, int n) {
    int m = n / 2;
    std::vector<double> cy(static_cast<size_t>(m) * m, 0.0);
    for (int my = 0; my < m; ++my) {
        for (int mx = 0; mx < m; ++mx) {
            double acc = 0.0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    double wgt = (2.0 - std::abs(dy)) * (2.0 - std::abs(dx)) / 16.0;
                    int ry = wrap(2 * my + dy, n);
                    int rx = wrap(2 * mx + dx, n);
                    acc += wgt * c[static_cast<size_t>(ry) * n + rx];
                }
            }
            cy[static_cast<size_t>(my) * m + mx] = acc;
        }
    }
    return cy;
}

}  // namespace

GrfSpec pooled_spec(const GrfSpec& spec) {
    if (spec.size < 4 || spec.size % 2) {
        throw std::invalid_argument("pooled_spec: size must be even and >= 4");
    }
    int m = spec.size / 2;
    std::vector<double> cy = pooled_autocovariance(autocovariance(spec), spec.size);
    Spectrum s = fft2(cy.data(), m, m);
    GrfSpec out;
    out.size = m;
    out.lambda.resize(static_cast<size_t>(m) * m);
    for (size_t i = 0; i < out.lambda.size(); ++i) {
        // eigenvalues of a covariance, positive up to fft roundoff
        out.lambda[i] = std::max(s.data[i].real(), 1e-12);
    }
    return out;
}

namespace {

// Plain in-place Cholesky, lower triangle in row-major a[n*n].
void cholesky(std::vector<double>& a, int n) {
    for (int j = 0; j < n; ++j) {
        double d = a[static_cast<size_t>(j) * n + j];
        for (int k = 0; k < j; ++k) {
            double l = a[static_cast<size_t>(j) * n + k];
            d -= l * l;
        }
        if (d <= 0.0) throw std::runtime_error("MmseUpsampler: covariance not positive definite");
        d = std::sqrt(d);
        a[static_cast<size_t>(j) * n + j] = d;
        for (int i = j + 1; i < n; ++i) {
            double acc = a[static_cast<size_t>(i) * n + j];
            for (int k = 0; k < j; ++k) {
                acc -= a[static_cast<size_t>(i) * n + k] * a[static_cast<size_t>(j) * n + k];
            }
            a[static_cast<size_t>(i) * n + j] = acc / d;
        }
    }
}

void chol_solve(const std::vector<double>& l, int n, double* x) {
    for (int i = 0; i < n; ++i) {
        double acc = x[i];
        for (int k = 0; k < i; ++k) acc -= l[static_cast<size_t>(i) * n + k] * x[k];
        x[i] = acc / l[static_cast<size_t>(i) * n + i];
    }
    for (int i = n - 1; i >= 0; --i) {
        double acc = x[i];
        for (int k = i + 1; k < n; ++k) acc -= l[static_cast<size_t>(k) * n + i] * x[k];
        x[i] = acc / l[static_cast<size_t>(i) * n + i];
    }
}

}  // namespace

MmseUpsampler::MmseUpsampler(const GrfSpec& high_spec) {
    if (high_spec.size > 64) {
        throw std::invalid_argument("MmseUpsampler: size above 64 is too large for the dense solve");
    }
    if (high_spec.size < 4 || high_spec.size % 2) {
        throw std::invalid_argument("MmseUpsampler: size must be even and >= 4");
    }
    n_ = high_spec.size;
    int m = n_ / 2;
    int64_t np = static_cast<int64_t>(n_) * n_;  // high pixels
    int64_t mp = static_cast<int64_t>(m) * m;    // low pixels

    std::vector<double> c = autocovariance(high_spec);
    std::vector<double> cy = pooled_autocovariance(c, n_);

    // Cov(z_i, y_j) = mean of c over the 2x2 block of high pixels behind y_j
    cross_.assign(static_cast<size_t>(np) * mp, 0.0);
    for (int iy = 0; iy < n_; ++iy) {
        for (int ix = 0; ix < n_; ++ix) {
            int64_t i = static_cast<int64_t>(iy) * n_ + ix;
            for (int jy = 0; jy < m; ++jy) {
                for (int jx = 0; jx < m; ++jx) {
                    int64_t j = static_cast<int64_t>(jy) * m + jx;
                    double acc = 0.0;
                    for (int by = 0; by < 2; ++by) {
                        for (int bx = 0; bx < 2; ++bx) {
                            int ry = wrap(iy - (2 * jy + by), n_);
                            int rx = wrap(ix - (2 * jx + bx), n_);
                            acc += c[static_cast<size_t>(ry) * n_ + rx];
                        }
                    }
                    cross_[static_cast<size_t>(i) * mp + j] = 0.25 * acc;
                }
            }
        }
    }

    chol_.assign(static_cast<size_t>(mp) * mp, 0.0);
    for (int64_t j = 0; j < mp; ++j) {
        int jy = static_cast<int>(j) / m, jx = static_cast<int>(j) % m;
        for (int64_t j2 = 0; j2 < mp; ++j2) {
            int j2y = static_cast<int>(j2) / m, j2x = static_cast<int>(j2) % m;
            chol_[static_cast<size_t>(j) * mp + j2] =
                cy[static_cast<size_t>(wrap(jy - j2y, m)) * m + wrap(jx - j2x, m)];
        }
    }
    cholesky(chol_, static_cast<int>(mp));

    // residual variance: c(0) - row_i(B) . M^{-1} row_i(B) averaged over i.
    // Per-pixel residuals land in a buffer and are summed serially so the
    // result does not depend on thread count.
    std::vector<double> resid(static_cast<size_t>(np), 0.0);
#pragma omp parallel for schedule(static) num_threads(max_threads())
    for (int64_t i = 0; i < np; ++i) {
        std::vector<double> col(cross_.begin() + static_cast<int64_t>(i) * mp,
                                cross_.begin() + static_cast<int64_t>(i + 1) * mp);
        std::vector<double> sol = col;
        chol_solve(chol_, static_cast<int>(mp), sol.data());
        double dot = 0.0;
        for (int64_t j = 0; j < mp; ++j) dot += col[static_cast<size_t>(j)] * sol[static_cast<size_t>(j)];
        resid[static_cast<size_t>(i)] = c[0] - dot;
    }
    double total = 0.0;
    for (double r : resid) total += r;
    oracle_mse_ = total / static_cast<double>(np);
}

std::vector<double> MmseUpsampler::solve_low(const std::vector<double>& rhs) const {
    std::vector<double> x = rhs;
    chol_solve(chol_, static_cast<int>(x.size()), x.data());
    return x;
}

Tensor MmseUpsampler::apply(const Tensor& z_low) const {
    int m = n_ / 2;
    if (z_low.rank() != 3 || z_low.dim(1) != m || z_low.dim(2) != m) {
        throw std::invalid_argument("MmseUpsampler: expected [c," + std::to_string(m) + "," +
                                    std::to_string(m) + "], got " + z_low.shape_str());
    }
    int ch = z_low.dim(0);
    int64_t np = static_cast<int64_t>(n_) * n_;
    int64_t mp = static_cast<int64_t>(m) * m;
    Tensor out({ch, n_, n_});
    for (int cidx = 0; cidx < ch; ++cidx) {
        std::vector<double> y(z_low.ptr() + cidx * mp, z_low.ptr() + (cidx + 1) * mp);
        std::vector<double> w = solve_low(y);
#pragma omp parallel for schedule(static) num_threads(max_threads())
        for (int64_t i = 0; i < np; ++i) {
            double acc = 0.0;
            const double* row = cross_.data() + static_cast<size_t>(i) * mp;
            for (int64_t j = 0; j < mp; ++j) acc += row[j] * w[static_cast<size_t>(j)];
            out[cidx * np + i] = acc;
        }
    }
    return out;
}

int num_bands(int size) { return (size + 3) / 4; }

int band_of(int u, int v, int h, int w) {
    int nb = num_bands(std::max(h, w));
    double corner = std::sqrt(static_cast<double>(h / 2) * (h / 2) + static_cast<double>(w / 2) * (w / 2));
    double r = radial_freq(u, v, h, w);
    int b = static_cast<int>(r / corner * nb);
    return b >= nb ? nb - 1 : b;
}

namespace {
SpectralProfile make_profile(int h, int w) {
    SpectralProfile p;
    int nb = num_bands(std::max(h, w));
    double corner = std::sqrt(static_cast<double>(h / 2) * (h / 2) + static_cast<double>(w / 2) * (w / 2));
    for (int b = 0; b < nb; ++b) {
        p.band_lo.push_back(corner * b / nb);
        p.band_hi.push_back(corner * (b + 1) / nb);
    }
    p.power.assign(static_cast<size_t>(nb), 0.0);
    return p;
}
}  // namespace

SpectralProfile radial_power_spectrum(const std::vector<Tensor>& batch) {
    if (batch.empty()) throw std::invalid_argument("radial_power_spectrum: empty batch");
    int h = batch[0].dim(1), w = batch[0].dim(2);
    SpectralProfile p = make_profile(h, w);
    std::vector<double> counts(p.power.size(), 0.0);
    for (const Tensor& img : batch) {
        if (img.rank() != 3 || img.dim(1) != h || img.dim(2) != w) {
            throw std::invalid_argument("radial_power_spectrum: mixed shapes in batch");
        }
        for (int c = 0; c < img.dim(0); ++c) {
            Spectrum s = fft2(img, c);
            for (int u = 0; u < h; ++u) {
                for (int v = 0; v < w; ++v) {
                    int b = band_of(u, v, h, w);
                    p.power[static_cast<size_t>(b)] += std::norm(s.at(u, v));
                    counts[static_cast<size_t>(b)] += 1.0;
                }
            }
        }
    }
    for (size_t b = 0; b < p.power.size(); ++b) {
        if (counts[b] > 0.0) p.power[b] /= counts[b];
    }
    p.samples = static_cast<int>(batch.size());
    return p;
}

SpectralProfile expected_profile(const GrfSpec& spec) {
    int n = spec.size;
    SpectralProfile p = make_profile(n, n);
    std::vector<double> counts(p.power.size(), 0.0);
    for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
            int b = band_of(u, v, n, n);
            p.power[static_cast<size_t>(b)] += static_cast<double>(n) * n * spec.lambda_at(u, v);
            counts[static_cast<size_t>(b)] += 1.0;
        }
    }
    for (size_t b = 0; b < p.power.size(); ++b) {
        if (counts[b] > 0.0) p.power[b] /= counts[b];
    }
    return p;
}

std::vector<double> band_relative_errors(const SpectralProfile& got, const SpectralProfile& want) {
    if (got.power.size() != want.power.size()) {
        throw std::invalid_argument("band_relative_errors: band count mismatch");
    }
    std::vector<double> errs(got.power.size());
    for (size_t b = 0; b < errs.size(); ++b) {
        errs[b] = std::abs(got.power[b] - want.power[b]) / want.power[b];
    }
    return errs;
}

double mean_band_error(const SpectralProfile& got, const SpectralProfile& want) {
    std::vector<double> errs = band_relative_errors(got, want);
    double acc = 0.0;
    for (double e : errs) acc += e;
    return acc / static_cast<double>(errs.size());
}

}  // namespace lss
