#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"

namespace bh3d::calib {

namespace {

// Sums term(i) pairing i with n-1-i, so antisymmetric terms cancel exactly on symmetric data.
template <typename F>
double paired_sum(std::size_t n, F term) {
    double s = 0.0;
    for (std::size_t i = 0, j = n - 1; i < j; ++i, --j) s += term(i) + term(j);
    if (n % 2 == 1) s += term(n / 2);
    return s;
}

struct Params {
    double amplitude, mu, sigma;
};

double sum_sq(const AngularProfile& p, const Params& q) {
    return paired_sum(p.angles.size(), [&](std::size_t i) {
        const double d = p.angles[i] - q.mu;
        const double r = q.amplitude * std::exp(-d * d / (2.0 * q.sigma * q.sigma)) - p.intensities[i];
        return r * r;
    });
}

// Robust noise estimate from first differences.
double noise_sigma(const std::vector<double>& y) {
    std::vector<double> d(y.size() - 1);
    for (std::size_t i = 0; i + 1 < y.size(); ++i) d[i] = std::abs(y[i + 1] - y[i]);
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return 1.4826 * *mid / std::sqrt(2.0);
}

bool moment_init(const AngularProfile& p, double peak, Params& q) {
    const double cut = 0.1 * peak;
    auto w = [&](std::size_t i) { return p.intensities[i] >= cut ? p.intensities[i] : 0.0; };
    const std::size_t n = p.angles.size();
    const double w0 = paired_sum(n, w);
    if (!(w0 > 0.0)) return false;
    const double mu = paired_sum(n, [&](std::size_t i) { return w(i) * p.angles[i]; }) / w0;
    const double var = paired_sum(n, [&](std::size_t i) {
                           const double d = p.angles[i] - mu;
                           return w(i) * d * d;
                       }) / w0;
    // Truncating the tails at 10% of the peak shrinks the variance by about 20%.
    const double sigma = std::sqrt(std::max(var, 0.0)) * 1.2;
    const double spacing = (p.angles.back() - p.angles.front()) / static_cast<double>(n - 1);
    q = {peak, mu, std::max(sigma, 0.5 * spacing)};
    return std::isfinite(mu) && std::isfinite(q.sigma);
}

bool gauss_newton(const AngularProfile& p, Params& q, int max_iterations) {
    const std::size_t n = p.angles.size();
    double cost = sum_sq(p, q);
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::Matrix3d jtj = Eigen::Matrix3d::Zero();
        Eigen::Vector3d jtr = Eigen::Vector3d::Zero();
        const double inv_s2 = 1.0 / (q.sigma * q.sigma);
        // Row terms of J^T J and J^T r, accumulated with the same pairing as the cost.
        auto jac = [&](std::size_t i, double& g, double& r, Eigen::Vector3d& row) {
            const double d = p.angles[i] - q.mu;
            g = std::exp(-0.5 * d * d * inv_s2);
            r = q.amplitude * g - p.intensities[i];
            row << g, q.amplitude * g * d * inv_s2, q.amplitude * g * d * d * inv_s2 / q.sigma;
        };
        for (int a = 0; a < 3; ++a) {
            jtr(a) = paired_sum(n, [&](std::size_t i) {
                double g, r;
                Eigen::Vector3d row;
                jac(i, g, r, row);
                return row(a) * r;
            });
            for (int b = a; b < 3; ++b) {
                jtj(a, b) = paired_sum(n, [&](std::size_t i) {
                    double g, r;
                    Eigen::Vector3d row;
                    jac(i, g, r, row);
                    return row(a) * row(b);
                });
                jtj(b, a) = jtj(a, b);
            }
        }
        const Eigen::Vector3d delta = jtj.ldlt().solve(-jtr);
        if (!delta.allFinite()) return false;
        double scale = 1.0;
        bool improved = false;
        Params next = q;
        for (int k = 0; k < 30; ++k) {
            next = {q.amplitude + scale * delta(0), q.mu + scale * delta(1), q.sigma + scale * delta(2)};
            if (next.sigma > 0.0 && next.amplitude > 0.0) {
                const double c = sum_sq(p, next);
                if (c <= cost) {
                    improved = true;
                    const bool small_step = std::abs(scale * delta(0)) <= 1e-12 * q.amplitude &&
                                            std::abs(scale * delta(1)) < 1e-12 &&
                                            std::abs(scale * delta(2)) <= 1e-12 * q.sigma;
                    const bool done = cost - c <= 1e-15 * cost || small_step;
                    q = next;
                    cost = c;
                    if (done) return true;
                    break;
                }
            }
            scale *= 0.5;
        }
        if (!improved) return cost < std::numeric_limits<double>::infinity();
    }
    return true;
}

// ln y = c0 + c1 t + c2 t^2 on the brightest fifth of the samples.
bool log_parabola(const AngularProfile& p, Params& q) {
    const std::size_t n = p.angles.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p.intensities[a] > p.intensities[b]; });
    const std::size_t k = std::max<std::size_t>(3, n / 5);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(k), 3);
    Eigen::VectorXd b(static_cast<Eigen::Index>(k));
    for (std::size_t r = 0; r < k; ++r) {
        const double yv = p.intensities[idx[r]];
        if (!(yv > 0.0)) return false;
        const double t = p.angles[idx[r]];
        a.row(static_cast<Eigen::Index>(r)) << 1.0, t, t * t;
        b(static_cast<Eigen::Index>(r)) = std::log(yv);
    }
    const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
    if (!(c(2) < 0.0)) return false;
    const double sigma = std::sqrt(-1.0 / (2.0 * c(2)));
    const double mu = -c(1) / (2.0 * c(2));
    q = {std::exp(c(0) - c(1) * c(1) / (4.0 * c(2))), mu, sigma};
    return std::isfinite(q.amplitude) && std::isfinite(mu) && std::isfinite(sigma);
}

}  // namespace

void AngularProfile::validate() const {
    BH3D_REQUIRE(angles.size() == intensities.size(), ContractError, "profile angle and intensity counts differ");
    BH3D_REQUIRE(angles.size() >= 5, ContractError, "profile needs at least 5 samples");
    for (std::size_t i = 1; i < angles.size(); ++i) {
        BH3D_REQUIRE(angles[i] > angles[i - 1], ContractError, "profile angles must be strictly increasing");
    }
    for (double v : intensities) BH3D_REQUIRE(std::isfinite(v), DomainError, "profile intensity is not finite");
}

GaussianFit fit_gaussian_profile(const AngularProfile& profile, const FitOptions& options) {
    profile.validate();
    const auto [lo_it, hi_it] = std::minmax_element(profile.intensities.begin(), profile.intensities.end());
    const double peak = *hi_it;
    const double floor_level = std::max(options.noise_floor, 0.0);
    if (!(peak > floor_level) || !(peak - *lo_it > 1e-12 * std::abs(peak))) {
        throw FitRejectedError("degenerate profile (flat or below the noise floor)", 0.0);
    }
    const double noise = noise_sigma(profile.intensities);
    if (peak < options.min_snr * noise) {
        throw FitRejectedError("profile SNR " + std::to_string(peak / noise) + " below threshold", noise);
    }

    Params q{};
    bool ok = moment_init(profile, peak, q) && gauss_newton(profile, q, options.max_iterations);
    if (!ok || !(q.sigma > 0.0)) {
        ok = log_parabola(profile, q) && gauss_newton(profile, q, options.max_iterations);
    }
    const double residual = std::sqrt(sum_sq(profile, q) / static_cast<double>(profile.angles.size()));
    if (!ok || !(q.sigma > 0.0) || !std::isfinite(q.mu)) {
        throw FitRejectedError("Gaussian fit did not converge", residual);
    }
    if (q.mu < profile.angles.front() - 2.0 * q.sigma || q.mu > profile.angles.back() + 2.0 * q.sigma) {
        throw FitRejectedError("fitted peak lies outside the scanned range", residual);
    }
    return {q.mu, q.sigma, q.amplitude, residual};
}

std::vector<LatticeSample> fit_profiles(std::span<const AngularProfile> profiles, const FitOptions& options,
                                        std::vector<GaussianFit>* fits) {
    std::vector<GaussianFit> out(profiles.size());
    std::vector<std::string> errors(profiles.size());
    parallel_for(0, profiles.size(), [&](std::size_t k) {
        try {
            out[k] = fit_gaussian_profile(profiles[k], options);
        } catch (const FitRejectedError& e) {
            errors[k] = e.what();
        }
    });
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        if (!errors[k].empty()) {
            const auto& p = profiles[k];
            throw FitRejectedError("fit rejected at x=" + std::to_string(p.x) + " y=" + std::to_string(p.y) +
                                       " Z=" + std::to_string(p.depth) + " lambda=" + std::to_string(p.lambda) +
                                       ": " + errors[k],
                                   out[k].residual);
        }
    }
    std::vector<LatticeSample> samples(profiles.size());
    for (std::size_t k = 0; k < profiles.size(); ++k) {
        const auto& p = profiles[k];
        samples[k] = {p.x, p.y, p.depth, p.lambda, out[k].mu, out[k].sigma};
    }
    if (fits) *fits = std::move(out);
    return samples;
}

}  // namespace bh3d::calib
