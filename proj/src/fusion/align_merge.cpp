#include <algorithm>
#include <cmath>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/fusion/fusion.hpp"

namespace bh3d::fusion {

namespace {

// Bilinear footprint of a continuous pixel position; false when it leaves the image.
struct Footprint {
    int x0, y0, x1, y1;
    double tx, ty;
};

bool footprint(double u, double v, int width, int height, Footprint& f) {
    // Absorb round-off at the image border.
    constexpr double kSlack = 1e-9;
    if (u < 0.0 && u > -kSlack) u = 0.0;
    if (v < 0.0 && v > -kSlack) v = 0.0;
    if (u > width - 1 && u < width - 1 + kSlack) u = width - 1;
    if (v > height - 1 && v < height - 1 + kSlack) v = height - 1;
    if (!(u >= 0.0 && v >= 0.0 && u <= width - 1 && v <= height - 1)) return false;
    f.x0 = std::min(static_cast<int>(std::floor(u)), width - 1);
    f.y0 = std::min(static_cast<int>(std::floor(v)), height - 1);
    f.tx = u - f.x0;
    f.ty = v - f.y0;
    f.x1 = f.tx > 0.0 ? f.x0 + 1 : f.x0;
    f.y1 = f.ty > 0.0 ? f.y0 + 1 : f.y0;
    return true;
}

double lerp2(double v00, double v10, double v01, double v11, double tx, double ty) {
    const double top = v00 + tx * (v10 - v00);
    const double bottom = v01 + tx * (v11 - v01);
    return top + ty * (bottom - top);
}

}  // namespace

SpectralCube align_swir_to_vnir(const SpectralCube& swir, const DepthMap& depth_vnir, const DepthMap& depth_swir,
                                const CameraRig& rig, const FusionConfig& config) {
    config.validate();
    // Alignment needs no baseline; co-located cameras are allowed.
    rig.vnir.validate();
    rig.swir.validate();
    BH3D_REQUIRE(depth_swir.width == swir.width() && depth_swir.height == swir.height(), ContractError,
                 "SWIR depth and cube dimensions differ");
    BH3D_REQUIRE(depth_vnir.width == rig.vnir.width && depth_vnir.height == rig.vnir.height, ContractError,
                 "VNIR depth does not match the VNIR camera");

    SpectralCube out(depth_vnir.width, depth_vnir.height, swir.grid());
    const std::size_t nb = swir.bands();
    const int w = depth_vnir.width;
    parallel_for(0, static_cast<std::size_t>(depth_vnir.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < w; ++x) {
            const std::size_t p = out.pixel_index(x, y);
            out.valid()[p] = 0;
            if (!depth_vnir.is_valid(p)) continue;
            const Vec3 pv = rig.vnir.unproject(x, y, depth_vnir.depth[p]);
            const Vec3 ps = rig.swir_from_vnir.apply(pv);
            if (!(ps.z() > 0.0)) continue;
            const Vec2 uv = rig.swir.project(ps);
            Footprint f;
            if (!footprint(uv.x(), uv.y(), swir.width(), swir.height(), f)) continue;
            const std::size_t q[4] = {swir.pixel_index(f.x0, f.y0), swir.pixel_index(f.x1, f.y0),
                                      swir.pixel_index(f.x0, f.y1), swir.pixel_index(f.x1, f.y1)};
            bool ok = true;
            for (std::size_t k : q) ok = ok && swir.is_valid(k) && depth_swir.is_valid(k);
            if (!ok) continue;
            const double observed = lerp2(depth_swir.depth[q[0]], depth_swir.depth[q[1]], depth_swir.depth[q[2]],
                                          depth_swir.depth[q[3]], f.tx, f.ty);
            if (std::abs(observed - ps.z()) > config.ghost_threshold_m) continue;
            auto dst = out.spectrum(p);
            const auto s00 = swir.spectrum(q[0]);
            const auto s10 = swir.spectrum(q[1]);
            const auto s01 = swir.spectrum(q[2]);
            const auto s11 = swir.spectrum(q[3]);
            for (std::size_t b = 0; b < nb; ++b) dst[b] = lerp2(s00[b], s10[b], s01[b], s11[b], f.tx, f.ty);
            out.valid()[p] = 1;
        }
    });
    return out;
}

MergePlan plan_merge(const WavelengthGrid& vnir, const WavelengthGrid& swir, MergeRule rule) {
    BH3D_REQUIRE(vnir.tag() == CameraTag::VNIR && swir.tag() == CameraTag::SWIR, ContractError,
                 "merge expects a VNIR grid and a SWIR grid");
    std::vector<double> bands;
    MergePlan plan;
    auto add = [&](double l, std::size_t vi, std::size_t si) {
        bands.push_back(l);
        plan.vnir_index.push_back(vi);
        plan.swir_index.push_back(si);
    };
    std::size_t vnir_count = 0;
    switch (rule) {
        case MergeRule::PreferVnirBelow875:
        case MergeRule::Blend:
            for (std::size_t i = 0; i < vnir.size(); ++i) {
                if (vnir[i] < swir.front()) add(vnir[i], i, kNoBand), ++vnir_count;
            }
            for (std::size_t i = 0; i < swir.size(); ++i) {
                // Blend keeps a VNIR partner for SWIR bands inside the VNIR range.
                const bool overlap = rule == MergeRule::Blend && swir[i] <= vnir.back();
                add(swir[i], overlap ? 0 : kNoBand, i);
            }
            break;
        case MergeRule::PreferSwirAbove890:
            for (std::size_t i = 0; i < vnir.size(); ++i) add(vnir[i], i, kNoBand), ++vnir_count;
            for (std::size_t i = 0; i < swir.size(); ++i) {
                if (swir[i] > vnir.back()) add(swir[i], kNoBand, i);
            }
            break;
    }
    for (std::size_t i = 1; i < bands.size(); ++i) {
        if (!(bands[i] > bands[i - 1])) {
            throw ConfigError("merge rule " + std::string(to_string(rule)) + " produces duplicate band center " +
                              std::to_string(bands[i]) + " nm");
        }
    }
    plan.grid = WavelengthGrid(std::move(bands), CameraTag::FUSED, vnir_count);
    return plan;
}

FusedCube merge_cubes(const SpectralCube& vnir, const SpectralCube& swir_aligned, const FusionConfig& config) {
    config.validate();
    BH3D_REQUIRE(vnir.width() == swir_aligned.width() && vnir.height() == swir_aligned.height(), ContractError,
                 "merge: cubes must share the VNIR frame");
    const MergePlan plan = plan_merge(vnir.grid(), swir_aligned.grid(), config.merge_rule);
    const auto vnir_bands = vnir.grid().bands();
    const std::vector<double> vnir_axis(vnir_bands.begin(), vnir_bands.end());

    FusedCube fused{SpectralCube(vnir.width(), vnir.height(), plan.grid), Mask(vnir.pixel_count(), 0)};
    const std::size_t nf = plan.grid.size();
    parallel_for(0, vnir.pixel_count(), [&](std::size_t p) {
        fused.cube.valid()[p] = vnir.valid()[p];
        const bool swir_ok = swir_aligned.is_valid(p) && vnir.is_valid(p);
        fused.swir_valid[p] = swir_ok ? 1 : 0;
        auto dst = fused.cube.spectrum(p);
        const auto hv = vnir.spectrum(p);
        const auto hs = swir_aligned.spectrum(p);
        for (std::size_t b = 0; b < nf; ++b) {
            if (plan.swir_index[b] == kNoBand) {
                dst[b] = hv[plan.vnir_index[b]];
            } else if (!swir_ok) {
                dst[b] = 0.0;
            } else if (plan.vnir_index[b] != kNoBand) {
                // Linear VNIR interpolation at the SWIR band center, then a plain average.
                const double l = plan.grid[b];
                if (vnir_axis.size() == 1) {
                    dst[b] = 0.5 * (hv[0] + hs[plan.swir_index[b]]);
                    continue;
                }
                const auto it = std::upper_bound(vnir_axis.begin(), vnir_axis.end(), l);
                const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - vnir_axis.begin()), 1,
                                                              vnir_axis.size() - 1);
                const double t = (l - vnir_axis[k - 1]) / (vnir_axis[k] - vnir_axis[k - 1]);
                const double v = hv[k - 1] + t * (hv[k] - hv[k - 1]);
                dst[b] = 0.5 * (v + hs[plan.swir_index[b]]);
            } else {
                dst[b] = hs[plan.swir_index[b]];
            }
        }
    });
    return fused;
}

}  // namespace bh3d::fusion
