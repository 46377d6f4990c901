#pragma once

#include <vector>

#include "bh3d/core/camera.hpp"
#include "bh3d/core/image.hpp"

namespace bh3d::depth {

/// Per-pixel maximum over scan angles.
Image max_project(const ScanStack& stack);
/// Per-pixel mean over scan angles.
Image mean_project(const ScanStack& stack);

/**
 * @brief Row-aligned virtual pair derived from a VNIR/SWIR rig.
 *
 * Both rectified cameras share the focal length, the row of the principal point
 * and the orientation. The column of each principal point is chosen so the
 * original optical axis keeps its pixel position, which keeps a toed-in pair
 * inside the image. A point at depth Z then has
 * x_left - x_right = focal * baseline / Z + disparity_offset.
 */
struct RectifiedGeometry {
    PinholeCamera left;
    PinholeCamera right;
    Mat3 rect_from_vnir = Mat3::Identity();
    Mat3 rect_from_swir = Mat3::Identity();
    double focal_px = 0.0;
    double baseline_m = 0.0;
    double disparity_offset = 0.0;

    /// Transform taking rectified-left coordinates to the VNIR frame.
    RigidTransform vnir_from_rect() const;
    /// Transform taking rectified-left coordinates to the SWIR frame.
    RigidTransform swir_from_rect(const CameraRig& rig) const;
};

RectifiedGeometry rectify_geometry(const CameraRig& rig);

struct RectifiedPair {
    Image left;
    Image right;
    Mask left_valid;   ///< rectified pixels whose source lies inside the VNIR image
    Mask right_valid;  ///< same for the SWIR image
    RectifiedGeometry geometry;
};

/// Resamples VNIR (left) and SWIR (right) images onto the rectified pair by bilinear interpolation.
RectifiedPair rectify_pair(const Image& vnir, const Image& swir, const CameraRig& rig);

/// Subpixel interpolation of the cost minimum from its two neighbors.
enum class SubpixelFit { Parabolic, Equiangular };

struct StereoParams {
    /// Search range of the horizontal shift s, with x_right = x_left - s.
    int min_shift = -16;
    int max_shift = 16;
    int window_width = 9;
    int window_height = 7;
    double lr_threshold = 1.0;
    /// Half-size of the box over which Hamming costs are averaged before the winner is picked (0 = none).
    int aggregate_radius = 3;
    SubpixelFit subpixel = SubpixelFit::Equiangular;

    void validate() const;
};

/// Subpixel shift per left pixel; `cost` holds the census Hamming distance at the winner.
struct DisparityMap {
    int width = 0;
    int height = 0;
    std::vector<double> disparity;
    Mask valid;
    std::vector<double> cost;

    DisparityMap() = default;
    DisparityMap(int w, int h);
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x; }
    std::size_t valid_count() const;
};

/// Census-transform block matching with winner-take-all, parabolic refinement and a left-right check.
DisparityMap match_stereo(const Image& left, const Image& right, const StereoParams& params,
                          const Mask* left_valid = nullptr, const Mask* right_valid = nullptr);

inline constexpr double kMinDisparity = 0.1;

/// Z = focal * baseline / (d - offset); values with d - offset <= d_min are invalid.
DepthMap disparity_to_depth(const DisparityMap& disparity, double focal_px, double baseline_m,
                            double offset = 0.0, double d_min = kMinDisparity);
DisparityMap depth_to_disparity(const DepthMap& depth, double focal_px, double baseline_m, double offset = 0.0);

/// Reprojects a depth map into another camera by rasterizing the surface mesh it defines.
/// Triangles spanning a depth discontinuity are dropped, the nearest surface wins, holes stay invalid.
DepthMap warp_depth(const DepthMap& src, const PinholeCamera& src_camera, const PinholeCamera& dst_camera,
                    const RigidTransform& dst_from_src);
/// VNIR depth into the SWIR view.
DepthMap warp_depth(const DepthMap& vnir_depth, const CameraRig& rig);

/// Everything produced by the stereo stage.
struct StereoResult {
    RectifiedPair pair;
    DisparityMap disparity;
    DepthMap rectified_depth;
    DepthMap vnir_depth;
    DepthMap swir_depth;
};

struct DepthRange {
    double near_m = 0.4;
    double far_m = 0.8;
};

/// Shift range covering the given depth range for a rectified geometry (rounded outward).
StereoParams search_range_for(const RectifiedGeometry& geometry, const DepthRange& range, StereoParams base = {});

/// Max projection, rectification, census matching, triangulation and warping into both views.
StereoResult reconstruct_depth(const ScanStack& vnir, const ScanStack& swir, const CameraRig& rig,
                               const StereoParams& params);

}  // namespace bh3d::depth
