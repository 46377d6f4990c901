#include <cmath>
#include <numbers>

#include "bh3d/core/error.hpp"
#include "bh3d/scene/scene.hpp"

namespace bh3d::scene {

namespace {

// Sets the brightest exposure-1 peak near 80% of the 12-bit range for the default scenes.
constexpr double kEmissionScale = 43.0;
constexpr double kLampTemperatureK = 3000.0;

double planck(double lambda_nm, double temperature_k) {
    constexpr double h = 6.62607015e-34, c = 2.99792458e8, k = 1.380649e-23;
    const double l = lambda_nm * 1e-9;
    return 2.0 * h * c * c / (l * l * l * l * l) / std::expm1(h * c / (l * k * temperature_k));
}

// Projector placement and dispersion in the VNIR frame.
constexpr double kProjectorX = 0.05;
constexpr double kRestAngleDeg = -5.5;
constexpr double kDispersionSpanDeg = 30.0;
constexpr double kDispersionScaleNm = 700.0;
constexpr double kSmileDeg = 0.3;

double dispersion_offset(double lambda) {
    const double span = kMaxWavelengthNm - kMinWavelengthNm;
    const double t = (1.0 - std::exp(-(lambda - kMinWavelengthNm) / kDispersionScaleNm)) /
                     (1.0 - std::exp(-span / kDispersionScaleNm));
    return -0.5 * kDispersionSpanDeg + kDispersionSpanDeg * t;
}

double line_width(double lambda, double depth) {
    const double u = (lambda - 975.0) / 525.0;
    return 0.2 + 0.08 * u * u + 0.02 * (depth - 0.55) / 0.1;
}

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? a : a + (b - a) * i / (n - 1);
    return v;
}

nlohmann::json camera_json(const PinholeCamera& c) {
    return {{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width}, {"height", c.height}};
}

PinholeCamera camera_from(const nlohmann::json& j) {
    PinholeCamera c;
    c.fx = j.at("fx").get<double>();
    c.fy = j.at("fy").get<double>();
    c.cx = j.at("cx").get<double>();
    c.cy = j.at("cy").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.validate();
    return c;
}

}  // namespace

CameraRig default_rig(int image_size) {
    BH3D_REQUIRE(image_size >= 16, ConfigError, "image size must be at least 16 px");
    CameraRig rig;
    const double c = 0.5 * (image_size - 1);
    rig.vnir = {kDefaultFocalPx, kDefaultFocalPx, c, c, image_size, image_size};
    rig.swir = rig.vnir;
    // SWIR camera toed in so both optical axes meet at the convergence distance.
    const Vec3 center(kDefaultBaselineM, 0.0, 0.0);
    const Vec3 axis = (Vec3(0.0, 0.0, kDefaultConvergenceM) - center).normalized();
    const Vec3 right = Vec3::UnitY().cross(axis).normalized();
    const Vec3 down = axis.cross(right);
    Mat3 r;
    r.row(0) = right.transpose();
    r.row(1) = down.transpose();
    r.row(2) = axis.transpose();
    rig.swir_from_vnir = {r, -(r * center)};
    return rig;
}

forward::IlluminantModel default_illuminant() {
    forward::IlluminantModel m;
    m.transmittance = forward::SpectralCurve({kMinWavelengthNm, kMaxWavelengthNm}, {0.85, 0.92});
    m.mirror_reflectance = forward::SpectralCurve::constant(0.95);
    std::vector<double> wl, e;
    double peak = 0.0;
    for (double l = kMinWavelengthNm; l <= kMaxWavelengthNm + 1e-9; l += 10.0) {
        wl.push_back(l);
        e.push_back(planck(l, kLampTemperatureK));
        peak = std::max(peak, e.back());
    }
    for (double& v : e) v *= kEmissionScale / peak;
    m.emission = forward::SpectralCurve(wl, e);
    return m;
}

forward::SensorModel default_sensor() {
    forward::SensorModel s;
    s.vnir_sensitivity = forward::SpectralCurve({450, 500, 600, 700, 800, 850, 890, 900, 910},
                                                {0.45, 0.55, 0.65, 0.6, 0.45, 0.33, 0.2, 0.15, 0.0});
    s.swir_sensitivity = forward::SpectralCurve({860, 875, 900, 1000, 1100, 1300, 1500},
                                                {0.0, 0.25, 0.5, 0.8, 0.85, 0.82, 0.7});
    s.saturation = 4095.0;
    s.noise_fraction = 0.01;
    s.exposures = {1.0, 4.0, 16.0};
    return s;
}

WavelengthGrid master_grid() {
    return WavelengthGrid::union_of(WavelengthGrid::vnir_default(), WavelengthGrid::swir_default(), CameraTag::FUSED);
}

nlohmann::json rig_to_json(const CameraRig& rig) {
    nlohmann::json r = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) r.push_back({rig.swir_from_vnir.rotation(i, 0), rig.swir_from_vnir.rotation(i, 1),
                                             rig.swir_from_vnir.rotation(i, 2)});
    const Vec3& t = rig.swir_from_vnir.translation;
    return {{"vnir", camera_json(rig.vnir)},
            {"swir", camera_json(rig.swir)},
            {"swir_from_vnir", {{"rotation", r}, {"translation", {t.x(), t.y(), t.z()}}}}};
}

CameraRig rig_from_json(const nlohmann::json& j) {
    CameraRig rig;
    try {
        rig.vnir = camera_from(j.at("vnir"));
        rig.swir = camera_from(j.at("swir"));
        const auto& x = j.at("swir_from_vnir");
        const auto& r = x.at("rotation");
        const auto& t = x.at("translation");
        BH3D_REQUIRE(r.size() == 3 && t.size() == 3, ConfigError, "rig transform must be 3x3 rotation + 3-vector");
        for (int i = 0; i < 3; ++i) {
            BH3D_REQUIRE(r[i].size() == 3, ConfigError, "rig rotation must be 3x3");
            for (int k = 0; k < 3; ++k) rig.swir_from_vnir.rotation(i, k) = r[i][k].get<double>();
            rig.swir_from_vnir.translation(i) = t[i].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed rig: ") + e.what());
    }
    rig.validate();
    return rig;
}

forward::GaussianField projector_field(const CameraRig& rig, CameraTag camera, const WavelengthGrid& grid,
                                       int refine) {
    BH3D_REQUIRE(camera != CameraTag::FUSED, ContractError, "projector field needs a physical camera");
    BH3D_REQUIRE(grid.size() >= 2, ContractError, "projector field needs at least two wavelengths");
    BH3D_REQUIRE(refine >= 1, ContractError, "lattice refinement must be at least 1");
    const PinholeCamera& cam = camera == CameraTag::VNIR ? rig.vnir : rig.swir;
    const RigidTransform vnir_from_cam =
        camera == CameraTag::VNIR ? RigidTransform::identity() : rig.swir_from_vnir.inverse();

    forward::FieldAxes axes;
    axes.x = linspace(0.0, cam.width - 1, 5);
    axes.y = linspace(0.0, cam.height - 1, 5);
    axes.depth = {0.45, 0.55, 0.65};
    axes.wavelength = linspace(grid.front(), grid.back(), 8);
    if (refine > 1) {
        axes.x = linspace(0.0, cam.width - 1, 4 * refine + 1);
        axes.y = linspace(0.0, cam.height - 1, 4 * refine + 1);
        axes.depth = linspace(0.45, 0.65, 2 * refine + 1);
        axes.wavelength = linspace(grid.front(), grid.back(), 7 * refine + 1);
    }

    std::vector<double> mu, sigma;
    mu.reserve(axes.size());
    sigma.reserve(axes.size());
    for (double x : axes.x) {
        for (double y : axes.y) {
            for (double z : axes.depth) {
                const Vec3 p = vnir_from_cam.apply(cam.unproject(x, y, z));
                const double beam = std::atan2(p.x() - kProjectorX, p.z()) * 180.0 / std::numbers::pi;
                const double row = (y - cam.cy) / cam.height;
                for (double l : axes.wavelength) {
                    mu.push_back(0.5 * (beam - kRestAngleDeg) + dispersion_offset(l) + kSmileDeg * row * row);
                    sigma.push_back(line_width(l, z));
                }
            }
        }
    }
    return forward::GaussianField(std::move(axes), std::move(mu), std::move(sigma));
}

}  // namespace bh3d::scene
