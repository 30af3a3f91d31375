#include <cmath>
#include <complex>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <sstream>

#include <fftw3.h>

#include "streamopt/streams.hpp"

namespace streamopt {

namespace {

void check_hurst(double hurst)
{
    if (!(hurst > 0.0 && hurst < 1.0)) {
        std::ostringstream err;
        err << "hurst index must lie in (0,1) (got " << hurst << ")";
        throw ConfigError(err.str());
    }
}

// The FFTW planner is not re-entrant.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

FftwBuffer fftw_buffer(std::size_t n)
{
    auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (p == nullptr) {
        throw GenerationError("fftw_malloc failed");
    }
    return FftwBuffer(p);
}

// In-place forward DFT of `buf` (length n).
void forward_dft(fftw_complex* buf, std::size_t n)
{
    fftw_plan plan;
    {
        std::lock_guard lock(fftw_planner_mutex());
        plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
}

}  // namespace

double fgn_autocovariance(double hurst, std::int64_t lag)
{
    const double k = std::abs(static_cast<double>(lag));
    const double h2 = 2.0 * hurst;
    return 0.5 * (std::pow(k + 1.0, h2) - 2.0 * std::pow(k, h2) + std::pow(std::abs(k - 1.0), h2));
}

std::vector<double> fgn_cholesky(double hurst, std::size_t length, Rng& rng)
{
    check_hurst(hurst);
    const auto n = static_cast<Eigen::Index>(length);
    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            cov(i, j) = fgn_autocovariance(hurst, i - j);
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw GenerationError("fGn covariance is not positive definite");
    }
    std::normal_distribution<double> normal;
    Vec z(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        z(i) = normal(rng);
    }
    const Vec x = llt.matrixL() * z;
    return {x.data(), x.data() + n};
}

std::vector<double> fgn_circulant(double hurst, std::size_t length, Rng& rng)
{
    check_hurst(hurst);
    if (length == 0) {
        return {};
    }
    std::size_t m = 1;
    while (m < length) {
        m <<= 1;
    }
    const std::size_t size = 2 * m;

    // Eigenvalues of the circulant whose first row embeds r(0..m).
    auto eig = fftw_buffer(size);
    for (std::size_t k = 0; k < size; ++k) {
        const std::size_t lag = k <= m ? k : size - k;
        eig[k][0] = fgn_autocovariance(hurst, static_cast<std::int64_t>(lag));
        eig[k][1] = 0.0;
    }
    forward_dft(eig.get(), size);

    std::normal_distribution<double> normal;
    auto w = fftw_buffer(size);
    const double scale = static_cast<double>(size);
    for (std::size_t k = 0; k <= m; ++k) {
        const double lambda = eig[k][0];
        if (lambda < -1e-8 * scale) {
            throw GenerationError("fGn circulant embedding has a negative eigenvalue");
        }
        const double l = std::max(lambda, 0.0);
        if (k == 0 || k == m) {
            w[k][0] = std::sqrt(l / scale) * normal(rng);
            w[k][1] = 0.0;
        } else {
            const double s = std::sqrt(l / (2.0 * scale));
            w[k][0] = s * normal(rng);
            w[k][1] = s * normal(rng);
            w[size - k][0] = w[k][0];
            w[size - k][1] = -w[k][1];
        }
    }
    forward_dft(w.get(), size);

    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) {
        out[i] = w[i][0];
    }
    return out;
}

std::vector<double> fgn_increments(double hurst, std::size_t length, Rng& rng)
{
    if (length <= kFgnCholeskyMaxLength) {
        return fgn_cholesky(hurst, length, rng);
    }
    return fgn_circulant(hurst, length, rng);
}

std::vector<double> fgn_increments(double hurst, std::size_t length, std::uint64_t seed)
{
    Rng rng(seed);
    return fgn_increments(hurst, length, rng);
}

}  // namespace streamopt
