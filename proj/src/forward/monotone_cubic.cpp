#include "bh3d/forward/monotone_cubic.hpp"

#include <algorithm>
#include <cmath>

namespace bh3d::forward {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

std::vector<double> pchip_slopes(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    std::vector<double> d(n, 0.0);
    if (n < 2) return d;
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        h[k] = x[k + 1] - x[k];
        delta[k] = (y[k + 1] - y[k]) / h[k];
    }
    if (n == 2) {
        d[0] = d[1] = delta[0];
        return d;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (sign(delta[k - 1]) * sign(delta[k]) <= 0) {
            d[k] = 0.0;
        } else {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
        }
    }
    // Non-centered three-point end slopes, clipped to stay shape preserving.
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (sign(s) != sign(d0)) {
            s = 0.0;
        } else if (sign(d0) != sign(d1) && std::abs(s) > 3.0 * std::abs(d0)) {
            s = 3.0 * d0;
        }
        return s;
    };
    d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    return d;
}

void locate(std::span<const double> x, double q, std::size_t& k, double& t) {
    const std::size_t n = x.size();
    if (n < 2 || q <= x.front()) {
        k = 0;
        t = 0.0;
        return;
    }
    if (q >= x.back()) {
        k = n - 2;
        t = 1.0;
        return;
    }
    const auto it = std::upper_bound(x.begin(), x.end(), q);
    k = static_cast<std::size_t>(it - x.begin()) - 1;
    t = (q - x[k]) / (x[k + 1] - x[k]);
}

double hermite_eval(std::span<const double> x, std::span<const double> y, std::span<const double> slopes, double q) {
    if (x.size() == 1) return y[0];
    std::size_t k;
    double t;
    locate(x, q, k, t);
    if (t == 0.0) return y[k];
    if (t == 1.0) return y[k + 1];
    const double h = x[k + 1] - x[k];
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * y[k] + h10 * h * slopes[k] + h01 * y[k + 1] + h11 * h * slopes[k + 1];
}

double pchip_eval(std::span<const double> x, std::span<const double> y, double q) {
    if (x.size() == 1) return y[0];
    if (x.size() == 2) {
        std::size_t k;
        double t;
        locate(x, q, k, t);
        if (t == 0.0) return y[0];
        if (t == 1.0) return y[1];
        return y[0] + t * (y[1] - y[0]);
    }
    const auto d = pchip_slopes(x, y);
    return hermite_eval(x, y, d, q);
}

}  // namespace bh3d::forward
