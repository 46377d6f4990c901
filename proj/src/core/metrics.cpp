#include "bh3d/core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "bh3d/core/error.hpp"

namespace bh3d {

double spectral_angle(std::span<const double> a, std::span<const double> b) {
    BH3D_REQUIRE(a.size() == b.size(), ContractError, "spectral_angle: length mismatch");
    BH3D_REQUIRE(a.size() >= 2, ContractError, "spectral_angle: need at least two bands");
    double na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) throw DomainError("spectral_angle: zero-norm spectrum");
    // 2 atan2(|a' - b'|, |a' + b'|) on unit vectors: accurate near 0 and pi, exactly 0 for equal inputs.
    const double ia = 1.0 / std::sqrt(na), ib = 1.0 / std::sqrt(nb);
    double diff = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double u = a[i] * ia, v = b[i] * ib;
        diff += (u - v) * (u - v);
        sum += (u + v) * (u + v);
    }
    return std::clamp(2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum)), 0.0, std::numbers::pi);
}

double rmse(std::span<const double> a, std::span<const double> b) {
    BH3D_REQUIRE(a.size() == b.size(), ContractError,
                 "rmse: shape mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    BH3D_REQUIRE(!a.empty(), ContractError, "rmse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.size()));
}

double rmse(const SpectralCube& a, const SpectralCube& b) {
    BH3D_REQUIRE(a.width() == b.width() && a.height() == b.height() && a.bands() == b.bands(), ContractError,
                 "rmse: cube shape mismatch");
    double acc = 0.0;
    std::size_t n = 0;
    for (std::size_t p = 0; p < a.pixel_count(); ++p) {
        if (!a.is_valid(p) || !b.is_valid(p)) continue;
        const auto sa = a.spectrum(p);
        const auto sb = b.spectrum(p);
        for (std::size_t k = 0; k < sa.size(); ++k) {
            const double d = sa[k] - sb[k];
            acc += d * d;
        }
        n += sa.size();
    }
    BH3D_REQUIRE(n > 0, ContractError, "rmse: no pixels valid in both cubes");
    return std::sqrt(acc / static_cast<double>(n));
}

std::vector<double> resample_spectrum(std::span<const double> values, const WavelengthGrid& from,
                                      const WavelengthGrid& to) {
    BH3D_REQUIRE(values.size() == from.size(), ContractError, "resample_spectrum: values do not match source grid");
    const auto src = from.bands();
    constexpr double tol = 1e-9;
    if (to.front() < src.front() - tol || to.back() > src.back() + tol) {
        throw RangeError("resample_spectrum: target grid [" + std::to_string(to.front()) + ", " +
                         std::to_string(to.back()) + "] extrapolates beyond source range");
    }
    std::vector<double> out(to.size());
    for (std::size_t i = 0; i < to.size(); ++i) {
        const double q = std::clamp(to[i], src.front(), src.back());
        if (src.size() == 1) {
            out[i] = values[0];
            continue;
        }
        auto it = std::upper_bound(src.begin(), src.end(), q);
        std::size_t hi = static_cast<std::size_t>(it - src.begin());
        if (hi >= src.size()) hi = src.size() - 1;
        const std::size_t lo = hi - 1;
        const double t = (q - src[lo]) / (src[hi] - src[lo]);
        out[i] = values[lo] + t * (values[hi] - values[lo]);
    }
    return out;
}

}  // namespace bh3d
