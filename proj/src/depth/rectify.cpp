#include <cmath>

#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/depth/depth.hpp"

namespace bh3d::depth {

RigidTransform RectifiedGeometry::vnir_from_rect() const { return {rect_from_vnir.transpose(), Vec3::Zero()}; }

RigidTransform RectifiedGeometry::swir_from_rect(const CameraRig& rig) const {
    return rig.swir_from_vnir * vnir_from_rect();
}

RectifiedGeometry rectify_geometry(const CameraRig& rig) {
    rig.vnir.validate();
    rig.swir.validate();
    const Vec3 center = rig.swir_center();
    BH3D_REQUIRE(center.norm() > 1e-12, DomainError, "degenerate rig: zero baseline");
    const Mat3& r = rig.swir_from_vnir.rotation;
    BH3D_REQUIRE((r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9, ValidationError,
                 "rig rotation is not orthonormal");

    // New axes: x along the baseline, z as close as possible to the mean viewing direction.
    const Vec3 e1 = center.normalized();
    const Vec3 z_mean = Vec3::UnitZ() + r.transpose() * Vec3::UnitZ();
    Vec3 e2 = z_mean.cross(e1);
    BH3D_REQUIRE(e2.norm() > 1e-9, DomainError, "degenerate rig: baseline parallel to the viewing direction");
    e2.normalize();
    const Vec3 e3 = e1.cross(e2);

    RectifiedGeometry g;
    g.rect_from_vnir.row(0) = e1.transpose();
    g.rect_from_vnir.row(1) = e2.transpose();
    g.rect_from_vnir.row(2) = e3.transpose();
    g.rect_from_swir = g.rect_from_vnir * r.transpose();
    g.focal_px = 0.5 * (0.5 * (rig.vnir.fx + rig.vnir.fy) + 0.5 * (rig.swir.fx + rig.swir.fy));
    g.baseline_m = center.norm();

    // Keep each original principal point at its pixel position.
    auto principal = [&](const Mat3& rect_from_cam, const PinholeCamera& cam, double& cx, double& cy) {
        const Vec3 axis = rect_from_cam * Vec3::UnitZ();
        BH3D_REQUIRE(axis.z() > 0.0, DomainError, "degenerate rig: camera faces away from the rectified frame");
        cx = cam.cx - g.focal_px * axis.x() / axis.z();
        cy = cam.cy - g.focal_px * axis.y() / axis.z();
    };
    double lcx, lcy, rcx, rcy;
    principal(g.rect_from_vnir, rig.vnir, lcx, lcy);
    principal(g.rect_from_swir, rig.swir, rcx, rcy);
    const double cy = 0.5 * (lcy + rcy);
    g.left = {g.focal_px, g.focal_px, lcx, cy, rig.vnir.width, rig.vnir.height};
    g.right = {g.focal_px, g.focal_px, rcx, cy, rig.vnir.width, rig.vnir.height};
    g.disparity_offset = lcx - rcx;
    return g;
}

namespace {

void resample(const Image& src, const PinholeCamera& src_cam, const PinholeCamera& rect_cam,
              const Mat3& cam_from_rect, Image& out, Mask& valid) {
    out = Image(rect_cam.width, rect_cam.height);
    valid.assign(out.pixel_count(), 0);
    parallel_for(0, static_cast<std::size_t>(rect_cam.height), [&](std::size_t row) {
        const int v = static_cast<int>(row);
        for (int u = 0; u < rect_cam.width; ++u) {
            const Vec3 ray = cam_from_rect * rect_cam.ray(u, v);
            if (!(ray.z() > 0.0)) continue;
            Vec2 px = src_cam.project(ray);
            // Absorb round-off at the image border.
            constexpr double kSlack = 1e-9;
            if (px.x() < 0.0 && px.x() > -kSlack) px.x() = 0.0;
            if (px.y() < 0.0 && px.y() > -kSlack) px.y() = 0.0;
            if (px.x() > src.width - 1 && px.x() < src.width - 1 + kSlack) px.x() = src.width - 1;
            if (px.y() > src.height - 1 && px.y() < src.height - 1 + kSlack) px.y() = src.height - 1;
            double value;
            if (src.sample_bilinear(px.x(), px.y(), value)) {
                out.at(u, v) = value;
                valid[out.index(u, v)] = 1;
            }
        }
    });
}

}  // namespace

RectifiedPair rectify_pair(const Image& vnir, const Image& swir, const CameraRig& rig) {
    BH3D_REQUIRE(vnir.width == rig.vnir.width && vnir.height == rig.vnir.height, ContractError,
                 "VNIR image does not match the VNIR camera");
    BH3D_REQUIRE(swir.width == rig.swir.width && swir.height == rig.swir.height, ContractError,
                 "SWIR image does not match the SWIR camera");
    RectifiedPair pair;
    pair.geometry = rectify_geometry(rig);
    resample(vnir, rig.vnir, pair.geometry.left, pair.geometry.rect_from_vnir.transpose(), pair.left, pair.left_valid);
    resample(swir, rig.swir, pair.geometry.right, pair.geometry.rect_from_swir.transpose(), pair.right,
             pair.right_valid);
    return pair;
}

}  // namespace bh3d::depth
