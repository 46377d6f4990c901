#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace bh3d {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Distortion-free pinhole intrinsics. Pixel centers sit at integer coordinates.
struct PinholeCamera {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    /// Projects a camera-frame point; the point must have z > 0.
    Vec2 project(const Vec3& p) const { return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy}; }
    /// Ray through pixel (x, y) scaled to unit depth (z = 1).
    Vec3 ray(double x, double y) const { return {(x - cx) / fx, (y - cy) / fy, 1.0}; }
    Vec3 unproject(double x, double y, double depth) const { return ray(x, y) * depth; }
    bool in_bounds(const Vec2& px) const {
        return px.x() >= -0.5 && px.y() >= -0.5 && px.x() < width - 0.5 && px.y() < height - 0.5;
    }

    void validate() const;
};

/// X_to = R * X_from + t.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    RigidTransform inverse() const { return {rotation.transpose(), -(rotation.transpose() * translation)}; }
    /// (this * other)(p) == this->apply(other.apply(p)).
    RigidTransform operator*(const RigidTransform& other) const {
        return {rotation * other.rotation, rotation * other.translation + translation};
    }

    static RigidTransform identity() { return {}; }
    /// Rotation about the camera y axis (positive yaw turns +z toward +x).
    static Mat3 yaw(double radians);
};

/**
 * @brief VNIR/SWIR stereo pair. The VNIR camera frame is the reference frame.
 */
struct CameraRig {
    PinholeCamera vnir;
    PinholeCamera swir;
    RigidTransform swir_from_vnir;

    /// SWIR optical center expressed in the VNIR frame.
    Vec3 swir_center() const { return -(swir_from_vnir.rotation.transpose() * swir_from_vnir.translation); }
    /// Distance between the two optical centers in meters.
    double baseline() const { return swir_center().norm(); }

    void validate() const;
};

}  // namespace bh3d
