#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bh3d/core/error.hpp"
#include "bh3d/depth/depth.hpp"

namespace bh3d::depth {

namespace {

// Neighboring samples whose depths differ by more than this ratio are not connected.
constexpr double kMaxDepthRatio = 1.01;
constexpr double kEdgeTolerance = 1e-9;

struct Vertex {
    double u, v, inv_z;
};

class ZBuffer {
public:
    explicit ZBuffer(DepthMap& map) : map_(map) {}

    void offer(int x, int y, double z) {
        if (!(z > 0.0) || !std::isfinite(z)) return;
        const std::size_t i = map_.index(x, y);
        if (!map_.is_valid(i) || z < map_.depth[i]) {
            map_.depth[i] = z;
            map_.valid[i] = 1;
        }
    }

    // Screen-space rasterization; 1/z is affine in screen coordinates for planar triangles.
    void triangle(const Vertex& a, const Vertex& b, const Vertex& c) {
        const double area = (b.u - a.u) * (c.v - a.v) - (b.v - a.v) * (c.u - a.u);
        if (std::abs(area) < 1e-12) return;
        const double tol = kEdgeTolerance * std::abs(area);
        const int x0 = std::max(0, static_cast<int>(std::ceil(std::min({a.u, b.u, c.u}) - 1e-9)));
        const int x1 = std::min(map_.width - 1, static_cast<int>(std::floor(std::max({a.u, b.u, c.u}) + 1e-9)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(std::min({a.v, b.v, c.v}) - 1e-9)));
        const int y1 = std::min(map_.height - 1, static_cast<int>(std::floor(std::max({a.v, b.v, c.v}) + 1e-9)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double wa = (b.u - x) * (c.v - y) - (b.v - y) * (c.u - x);
                const double wb = (c.u - x) * (a.v - y) - (c.v - y) * (a.u - x);
                const double wc = (a.u - x) * (b.v - y) - (a.v - y) * (b.u - x);
                const bool inside = area > 0.0 ? (wa >= -tol && wb >= -tol && wc >= -tol)
                                               : (wa <= tol && wb <= tol && wc <= tol);
                if (!inside) continue;
                const double inv_z = (wa * a.inv_z + wb * b.inv_z + wc * c.inv_z) / area;
                offer(x, y, 1.0 / inv_z);
            }
        }
    }

private:
    DepthMap& map_;
};

}  // namespace

DepthMap warp_depth(const DepthMap& src, const PinholeCamera& src_camera, const PinholeCamera& dst_camera,
                    const RigidTransform& dst_from_src) {
    src_camera.validate();
    dst_camera.validate();
    BH3D_REQUIRE(src.width == src_camera.width && src.height == src_camera.height, ContractError,
                 "depth map does not match its camera");
    DepthMap out(dst_camera.width, dst_camera.height);
    ZBuffer zbuf(out);

    std::vector<Vertex> verts(src.pixel_count());
    Mask usable(src.pixel_count(), 0);
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            const std::size_t i = src.index(x, y);
            if (!src.is_valid(i)) continue;
            const Vec3 p = dst_from_src.apply(src_camera.unproject(x, y, src.depth[i]));
            if (!(p.z() > 0.0)) continue;
            const Vec2 uv = dst_camera.project(p);
            verts[i] = {uv.x(), uv.y(), 1.0 / p.z()};
            usable[i] = 1;
            // Samples landing on a pixel center are kept even when no triangle covers them.
            const double ru = std::round(uv.x()), rv = std::round(uv.y());
            if (std::abs(uv.x() - ru) < 1e-6 && std::abs(uv.y() - rv) < 1e-6 && ru >= 0 && rv >= 0 &&
                ru < out.width && rv < out.height) {
                zbuf.offer(static_cast<int>(ru), static_cast<int>(rv), p.z());
            }
        }
    }

    auto connected = [&](std::size_t a, std::size_t b, std::size_t c) {
        if (!usable[a] || !usable[b] || !usable[c]) return false;
        const double lo = std::min({src.depth[a], src.depth[b], src.depth[c]});
        const double hi = std::max({src.depth[a], src.depth[b], src.depth[c]});
        return hi <= kMaxDepthRatio * lo;
    };
    for (int y = 0; y + 1 < src.height; ++y) {
        for (int x = 0; x + 1 < src.width; ++x) {
            const std::size_t i00 = src.index(x, y), i10 = src.index(x + 1, y);
            const std::size_t i01 = src.index(x, y + 1), i11 = src.index(x + 1, y + 1);
            if (connected(i00, i10, i11)) zbuf.triangle(verts[i00], verts[i10], verts[i11]);
            if (connected(i00, i11, i01)) zbuf.triangle(verts[i00], verts[i11], verts[i01]);
        }
    }
    return out;
}

DepthMap warp_depth(const DepthMap& vnir_depth, const CameraRig& rig) {
    return warp_depth(vnir_depth, rig.vnir, rig.swir, rig.swir_from_vnir);
}

}  // namespace bh3d::depth
