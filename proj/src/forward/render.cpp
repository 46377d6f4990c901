#include "bh3d/forward/render.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"

namespace bh3d::forward {

namespace {

constexpr double kHdrLow = 0.02;
constexpr double kHdrHigh = 0.95;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_depth(double depth) {
    if (!(depth > 0.0) || !std::isfinite(depth)) {
        throw DomainError("depth must be positive and finite (got " + std::to_string(depth) + ")");
    }
}

}  // namespace

double gaussian_weight(const GaussianField& field, const IlluminantModel& illum, double x, double y, double depth,
                       double theta_deg, double lambda_nm) {
    check_depth(depth);
    const auto g = field.sample(x, y, depth, lambda_nm);
    const double d = theta_deg - g.mu;
    return std::exp(-(d * d) / (2.0 * g.sigma * g.sigma)) * illum.throughput(lambda_nm) / (depth * depth);
}

SystemMatrix assemble_system_matrix(double x, double y, double depth, std::span<const double> angles,
                                    const WavelengthGrid& grid, const GaussianField& field,
                                    const IlluminantModel& illum, const SensorModel& sensor) {
    check_depth(depth);
    const auto widths = grid.band_widths();
    SystemMatrix s(static_cast<Eigen::Index>(angles.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double omega = sensor.sensitivity(grid.band_source(j))(grid[j]);
        for (std::size_t i = 0; i < angles.size(); ++i) {
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                omega * gaussian_weight(field, illum, x, y, depth, angles[i], grid[j]) * widths[j];
        }
    }
    return s;
}

SystemMatrix assemble_system_matrix(double x, double y, double depth, std::span<const double> angles,
                                    const GaussianField& field, const RadiometricResponse& response) {
    check_depth(depth);
    const auto& grid = response.grid;
    BH3D_REQUIRE(response.psi.size() == grid.size(), ContractError, "response does not match its grid");
    const auto widths = grid.band_widths();
    const double inv_z2 = 1.0 / (depth * depth);
    SystemMatrix s(static_cast<Eigen::Index>(angles.size()), static_cast<Eigen::Index>(grid.size()));
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const auto g = field.sample(x, y, depth, grid[j]);
        const double scale = response.psi[j] * widths[j] * inv_z2;
        const double inv_two_var = 1.0 / (2.0 * g.sigma * g.sigma);
        for (std::size_t i = 0; i < angles.size(); ++i) {
            const double d = angles[i] - g.mu;
            s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::exp(-d * d * inv_two_var) * scale;
        }
    }
    return s;
}

Eigen::VectorXd render_intensity_vector(const SystemMatrix& s, std::span<const double> reflectance) {
    if (static_cast<std::size_t>(s.cols()) != reflectance.size()) {
        throw ContractError("render_intensity_vector: matrix has " + std::to_string(s.cols()) +
                            " columns but spectrum has " + std::to_string(reflectance.size()) + " bands");
    }
    const Eigen::Map<const Eigen::VectorXd> h(reflectance.data(), static_cast<Eigen::Index>(reflectance.size()));
    return s * h;
}

ScanStack render_scan_stack(const SpectralCube& reflectance, const DepthMap& depth, const GaussianField& field,
                            const RadiometricResponse& response, std::span<const double> angles) {
    BH3D_REQUIRE(reflectance.grid().bands().size() == response.grid.size() &&
                     std::equal(reflectance.grid().bands().begin(), reflectance.grid().bands().end(),
                                response.grid.bands().begin()),
                 ContractError, "scene cube grid does not match the camera reconstruction grid");
    BH3D_REQUIRE(depth.width == reflectance.width() && depth.height == reflectance.height(), ContractError,
                 "depth map and cube dimensions differ");
    const CameraTag tag = response.grid.tag();
    ScanStack stack(reflectance.width(), reflectance.height(), std::vector<double>(angles.begin(), angles.end()), tag);
    const int w = reflectance.width();
    parallel_for(0, static_cast<std::size_t>(reflectance.height()), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const std::size_t p = stack.pixel_index(x, y);
            auto out = stack.samples(p);
            if (!depth.is_valid(p)) {
                std::fill(out.begin(), out.end(), 0.0);
                stack.valid()[p] = 0;
                continue;
            }
            const SystemMatrix s = assemble_system_matrix(x, y, depth.depth[p], angles, field, response);
            const Eigen::VectorXd v = render_intensity_vector(s, reflectance.spectrum(p));
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, v(static_cast<Eigen::Index>(i)));
        }
    });
    return stack;
}

ScanStack render_scan_stack(const SpectralCube& reflectance, const DepthMap& depth, const GaussianField& field,
                            const IlluminantModel& illum, const SensorModel& sensor, std::span<const double> angles) {
    return render_scan_stack(reflectance, depth, field,
                             RadiometricResponse::from_models(reflectance.grid(), illum, sensor), angles);
}

ScanStack simulate_capture(const ScanStack& radiance, const CaptureOptions& options) {
    BH3D_REQUIRE(options.exposure > 0.0, ContractError, "exposure must be positive");
    BH3D_REQUIRE(options.noise_sigma >= 0.0, ContractError, "noise sigma must be non-negative");
    ScanStack out = radiance;
    const std::size_t n = radiance.angle_count();
    parallel_for(0, radiance.pixel_count(), [&](std::size_t p) {
        auto dst = out.samples(p);
        const auto src = radiance.samples(p);
        std::mt19937_64 rng(splitmix64(options.seed ^ splitmix64(p + 1)));
        std::normal_distribution<double> noise(0.0, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            double v = src[i] * options.exposure;
            if (options.noise_sigma > 0.0) v += options.noise_sigma * noise(rng);
            dst[i] = std::clamp(v, 0.0, options.saturation);
        }
    });
    return out;
}

double hdr_weight(double raw, double saturation) {
    const double lo = kHdrLow * saturation;
    const double hi = kHdrHigh * saturation;
    if (raw <= lo || raw >= hi) return 0.0;
    const double mid = 0.5 * (lo + hi);
    return raw <= mid ? (raw - lo) / (mid - lo) : (hi - raw) / (hi - mid);
}

ScanStack hdr_fuse(std::span<const Capture> captures, double saturation) {
    BH3D_REQUIRE(!captures.empty(), ContractError, "hdr_fuse: no captures");
    BH3D_REQUIRE(saturation > 0.0, ContractError, "hdr_fuse: saturation must be positive");
    const ScanStack& ref = captures.front().stack;
    for (const auto& c : captures) {
        BH3D_REQUIRE(c.stack.same_shape(ref), ContractError, "hdr_fuse: captures differ in shape or angles");
        BH3D_REQUIRE(c.exposure > 0.0, ContractError, "hdr_fuse: exposures must be positive");
    }
    // Order by exposure so the fallback can pick the longest usable capture.
    std::vector<std::size_t> order(captures.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return captures[a].exposure < captures[b].exposure; });

    ScanStack out = ref;
    const std::size_t n = ref.angle_count();
    const double knee = kHdrHigh * saturation;
    parallel_for(0, ref.pixel_count(), [&](std::size_t p) {
        auto dst = out.samples(p);
        std::uint8_t valid = 1;
        for (const auto& c : captures) valid = static_cast<std::uint8_t>(valid & (c.stack.valid()[p] != 0));
        out.valid()[p] = valid;
        for (std::size_t i = 0; i < n; ++i) {
            double wsum = 0.0, acc = 0.0, single = 0.0;
            int contributing = 0;
            for (const auto& c : captures) {
                const double raw = c.stack.samples(p)[i];
                const double w = hdr_weight(raw, saturation);
                if (w > 0.0) {
                    ++contributing;
                    single = raw / c.exposure;
                }
                wsum += w;
                acc += w * raw / c.exposure;
            }
            if (contributing == 1) {
                dst[i] = single;
                continue;
            }
            if (wsum > 0.0) {
                dst[i] = acc / wsum;
                continue;
            }
            const Capture* pick = &captures[order.front()];
            for (auto it = order.rbegin(); it != order.rend(); ++it) {
                if (captures[*it].stack.samples(p)[i] < knee) {
                    pick = &captures[*it];
                    break;
                }
            }
            dst[i] = pick->stack.samples(p)[i] / pick->exposure;
        }
    });
    return out;
}

}  // namespace bh3d::forward
