#include "bh3d/core/camera.hpp"

#include <cmath>

#include "bh3d/core/error.hpp"

namespace bh3d {

void PinholeCamera::validate() const {
    BH3D_REQUIRE(fx > 0.0 && fy > 0.0 && std::isfinite(fx) && std::isfinite(fy), ValidationError,
                 "focal lengths must be positive");
    BH3D_REQUIRE(width > 0 && height > 0, ValidationError, "image size must be positive");
    BH3D_REQUIRE(std::isfinite(cx) && std::isfinite(cy), ValidationError, "principal point must be finite");
}

Mat3 RigidTransform::yaw(double radians) {
    return Eigen::AngleAxisd(radians, Vec3::UnitY()).toRotationMatrix();
}

void CameraRig::validate() const {
    vnir.validate();
    swir.validate();
    const Mat3& r = swir_from_vnir.rotation;
    const double orth = (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
    BH3D_REQUIRE(orth < 1e-9, ValidationError, "rig rotation is not orthonormal");
    BH3D_REQUIRE(std::abs(r.determinant() - 1.0) < 1e-9, ValidationError, "rig rotation must have determinant +1");
    BH3D_REQUIRE(baseline() > 0.0, ValidationError, "rig baseline must be positive");
}

}  // namespace bh3d
