#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bh3d/forward/gaussian_field.hpp"
#include "bh3d/forward/models.hpp"

namespace bh3d::testing {

using FieldFn = std::function<double(double x, double y, double z, double lambda)>;

inline forward::GaussianField tabulate_field(forward::FieldAxes axes, const FieldFn& mu, const FieldFn& sigma) {
    std::vector<double> m, s;
    for (double x : axes.x)
        for (double y : axes.y)
            for (double z : axes.depth)
                for (double l : axes.wavelength) {
                    m.push_back(mu(x, y, z, l));
                    s.push_back(sigma(x, y, z, l));
                }
    return forward::GaussianField(std::move(axes), std::move(m), std::move(s));
}

/// Depth-independent field: mu linear in wavelength, constant sigma.
inline forward::GaussianField simple_field(int width, int height, double lambda_lo, double lambda_hi,
                                           double mu_lo = -10.0, double mu_hi = 10.0, double sigma = 0.5) {
    forward::FieldAxes axes;
    axes.x = {0.0, static_cast<double>(width - 1)};
    axes.y = {0.0, static_cast<double>(height - 1)};
    axes.depth = {0.3, 1.0};
    axes.wavelength = {lambda_lo, lambda_hi};
    return tabulate_field(
        axes, [=](double, double, double, double l) { return mu_lo + (mu_hi - mu_lo) * (l - lambda_lo) / (lambda_hi - lambda_lo); },
        [=](double, double, double, double) { return sigma; });
}

inline forward::IlluminantModel unit_illuminant() { return {}; }

inline forward::SensorModel unit_sensor() {
    forward::SensorModel s;
    s.saturation = 1e9;
    return s;
}

inline std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = u(rng);
    return v;
}

}  // namespace bh3d::testing
