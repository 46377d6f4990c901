#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/depth/depth.hpp"

namespace bh3d::depth {

namespace {

struct Census {
    std::vector<std::uint64_t> bits;
    Mask valid;
};

// One bit per window neighbor: set when the neighbor is darker than the center.
Census census_transform(const Image& img, const Mask* mask, int ww, int wh) {
    Census c;
    c.bits.assign(img.pixel_count(), 0);
    c.valid.assign(img.pixel_count(), 0);
    const int rx = ww / 2, ry = wh / 2;
    parallel_for(0, static_cast<std::size_t>(img.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        if (y < ry || y >= img.height - ry) return;
        for (int x = rx; x < img.width - rx; ++x) {
            bool ok = true;
            std::uint64_t bits = 0;
            const double center = img.at(x, y);
            for (int dy = -ry; dy <= ry && ok; ++dy) {
                for (int dx = -rx; dx <= rx; ++dx) {
                    if (mask && !(*mask)[img.index(x + dx, y + dy)]) {
                        ok = false;
                        break;
                    }
                    if (dx == 0 && dy == 0) continue;
                    bits = (bits << 1) | (img.at(x + dx, y + dy) < center ? 1u : 0u);
                }
            }
            if (ok) {
                c.bits[img.index(x, y)] = bits;
                c.valid[img.index(x, y)] = 1;
            }
        }
    });
    return c;
}

constexpr double kMissing = std::numeric_limits<double>::infinity();

struct Choice {
    double value = 0.0;
    double cost = kMissing;
    bool ok = false;
};

// Winner-take-all over costs[k] (shift = min_shift + k) with uniqueness and parabolic refinement.
Choice pick(const double* costs, int n, int min_shift, SubpixelFit fit) {
    Choice c;
    int best = -1;
    for (int k = 0; k < n; ++k) {
        if (costs[k] != kMissing && (best < 0 || costs[k] < costs[best])) best = k;
    }
    if (best < 0) return c;
    for (int k = 0; k < n; ++k) {
        // A second minimum away from the winner means the match is ambiguous.
        if (costs[k] == costs[best] && std::abs(k - best) > 1) return c;
    }
    c.cost = costs[best];
    c.value = min_shift + best;
    c.ok = true;
    // A zero cost is an exact match over the whole window; no interpolation.
    if (c.cost > 0.0 && best > 0 && best < n - 1 && costs[best - 1] != kMissing && costs[best + 1] != kMissing) {
        const double cm = costs[best - 1], c0 = costs[best], cp = costs[best + 1];
        if (fit == SubpixelFit::Parabolic) {
            const double denom = cm - 2.0 * c0 + cp;
            if (denom > 0.0) c.value += std::clamp((cm - cp) / (2.0 * denom), -0.5, 0.5);
        } else {
            // Symmetric V through the three costs.
            const double rise = std::max(cm, cp) - c0;
            if (rise > 0.0) c.value += std::clamp((cm - cp) / (2.0 * rise), -0.5, 0.5);
        }
    }
    return c;
}

// Cost volume indexed (y * w + x) * range + k; kMissing where either census is unavailable.
using CostVolume = std::vector<double>;

// Mean of the available costs over a (2r+1)^2 box; fewer than half available leaves the entry missing.
CostVolume aggregate(const CostVolume& in, int w, int h, int range, int r) {
    if (r <= 0) return in;
    CostVolume out(in.size(), kMissing);
    const int need = ((2 * r + 1) * (2 * r + 1) + 1) / 2;
    parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            for (int k = 0; k < range; ++k) {
                double sum = 0.0;
                int count = 0;
                for (int dy = -r; dy <= r; ++dy) {
                    const int yy = y + dy;
                    if (yy < 0 || yy >= h) continue;
                    for (int dx = -r; dx <= r; ++dx) {
                        const int xx = x + dx;
                        if (xx < 0 || xx >= w) continue;
                        const double c = in[(static_cast<std::size_t>(yy) * w + xx) * range + k];
                        if (c == kMissing) continue;
                        sum += c;
                        ++count;
                    }
                }
                if (count >= need) out[(static_cast<std::size_t>(y) * w + x) * range + k] = sum / count;
            }
        }
    });
    return out;
}

}  // namespace

void StereoParams::validate() const {
    BH3D_REQUIRE(max_shift >= min_shift, ConfigError, "stereo search range is empty");
    BH3D_REQUIRE(window_width >= 3 && window_height >= 3 && window_width % 2 == 1 && window_height % 2 == 1,
                 ConfigError, "census window dimensions must be odd and at least 3");
    BH3D_REQUIRE(window_width * window_height - 1 <= 64, ConfigError, "census window exceeds 64 comparisons");
    BH3D_REQUIRE(lr_threshold >= 0.0, ConfigError, "left-right threshold must be non-negative");
    BH3D_REQUIRE(aggregate_radius >= 0, ConfigError, "aggregation radius must be non-negative");
}

DisparityMap::DisparityMap(int w, int h)
    : width(w), height(h), disparity(static_cast<std::size_t>(w) * h, 0.0), valid(static_cast<std::size_t>(w) * h, 0),
      cost(static_cast<std::size_t>(w) * h, 0.0) {}

std::size_t DisparityMap::valid_count() const {
    return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
}

DisparityMap match_stereo(const Image& left, const Image& right, const StereoParams& params, const Mask* left_valid,
                          const Mask* right_valid) {
    params.validate();
    BH3D_REQUIRE(left.width == right.width && left.height == right.height, ContractError,
                 "stereo images must have equal dimensions");
    const int w = left.width, h = left.height;
    const Census cl = census_transform(left, left_valid, params.window_width, params.window_height);
    const Census cr = census_transform(right, right_valid, params.window_width, params.window_height);
    const int range = params.max_shift - params.min_shift + 1;

    auto cost_at = [&](int xl, int xr, int y) {
        if (xl < 0 || xr < 0 || xl >= w || xr >= w) return kMissing;
        const std::size_t il = left.index(xl, y), ir = right.index(xr, y);
        if (!cl.valid[il] || !cr.valid[ir]) return kMissing;
        return static_cast<double>(std::popcount(cl.bits[il] ^ cr.bits[ir]));
    };

    // Left-referenced and right-referenced volumes hold the same costs under different indexing.
    CostVolume left_vol(left.pixel_count() * range), right_vol(left.pixel_count() * range);
    parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const std::size_t base = left.index(x, y) * range;
            for (int k = 0; k < range; ++k) {
                const int s = params.min_shift + k;
                left_vol[base + k] = cost_at(x, x - s, y);
                right_vol[base + k] = cost_at(x + s, x, y);
            }
        }
    });
    left_vol = aggregate(left_vol, w, h, range, params.aggregate_radius);
    right_vol = aggregate(right_vol, w, h, range, params.aggregate_radius);

    DisparityMap out(w, h);
    std::vector<double> right_disp(left.pixel_count(), 0.0);
    Mask right_ok(left.pixel_count(), 0);
    parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const std::size_t i = out.index(x, y);
            const Choice c = pick(left_vol.data() + i * range, range, params.min_shift, params.subpixel);
            if (c.ok) {
                out.disparity[i] = c.value;
                out.cost[i] = c.cost;
                out.valid[i] = 1;
            }
            const Choice r = pick(right_vol.data() + i * range, range, params.min_shift, params.subpixel);
            if (r.ok) {
                right_disp[i] = r.value;
                right_ok[i] = 1;
            }
        }
    });

    // Left-right consistency.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = out.index(x, y);
            if (!out.valid[i]) continue;
            const int xr = static_cast<int>(std::lround(x - out.disparity[i]));
            const bool consistent = xr >= 0 && xr < w && right_ok[out.index(xr, y)] &&
                                    std::abs(right_disp[out.index(xr, y)] - out.disparity[i]) <= params.lr_threshold;
            if (!consistent) out.valid[i] = 0;
        }
    }
    return out;
}

DepthMap disparity_to_depth(const DisparityMap& disparity, double focal_px, double baseline_m, double offset,
                            double d_min) {
    BH3D_REQUIRE(focal_px > 0.0 && baseline_m > 0.0, ContractError, "focal length and baseline must be positive");
    DepthMap out(disparity.width, disparity.height);
    for (std::size_t i = 0; i < out.pixel_count(); ++i) {
        const double d = disparity.disparity[i] - offset;
        if (disparity.valid[i] && d > d_min) {
            out.depth[i] = focal_px * baseline_m / d;
            out.valid[i] = 1;
        }
    }
    return out;
}

DisparityMap depth_to_disparity(const DepthMap& depth, double focal_px, double baseline_m, double offset) {
    BH3D_REQUIRE(focal_px > 0.0 && baseline_m > 0.0, ContractError, "focal length and baseline must be positive");
    DisparityMap out(depth.width, depth.height);
    for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
        if (!depth.is_valid(i)) continue;
        out.disparity[i] = focal_px * baseline_m / depth.depth[i] + offset;
        out.valid[i] = 1;
    }
    return out;
}

StereoParams search_range_for(const RectifiedGeometry& geometry, const DepthRange& range, StereoParams base) {
    BH3D_REQUIRE(range.near_m > 0.0 && range.far_m > range.near_m, ConfigError, "invalid depth search range");
    const double fb = geometry.focal_px * geometry.baseline_m;
    base.min_shift = static_cast<int>(std::floor(fb / range.far_m + geometry.disparity_offset)) - 1;
    base.max_shift = static_cast<int>(std::ceil(fb / range.near_m + geometry.disparity_offset)) + 1;
    return base;
}

StereoResult reconstruct_depth(const ScanStack& vnir, const ScanStack& swir, const CameraRig& rig,
                               const StereoParams& params) {
    StereoResult r;
    r.pair = rectify_pair(max_project(vnir), max_project(swir), rig);
    const auto& g = r.pair.geometry;
    r.disparity = match_stereo(r.pair.left, r.pair.right, params, &r.pair.left_valid, &r.pair.right_valid);
    r.rectified_depth = disparity_to_depth(r.disparity, g.focal_px, g.baseline_m, g.disparity_offset);
    r.vnir_depth = warp_depth(r.rectified_depth, g.left, rig.vnir, g.vnir_from_rect());
    r.swir_depth = warp_depth(r.rectified_depth, g.left, rig.swir, g.swir_from_rect(rig));
    return r;
}

}  // namespace bh3d::depth
