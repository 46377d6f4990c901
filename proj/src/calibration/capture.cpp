#include <cmath>
#include <string>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/forward/render.hpp"

namespace bh3d::calib {

namespace {

constexpr int kBoxcarSamples = 11;

void check_increasing(const std::vector<double>& v, const char* name) {
    BH3D_REQUIRE(!v.empty(), ValidationError, std::string("calibration session has no ") + name);
    for (std::size_t i = 1; i < v.size(); ++i) {
        BH3D_REQUIRE(v[i] > v[i - 1], ValidationError, std::string("session ") + name + " must be strictly increasing");
    }
}

}  // namespace

void CalibrationSession::validate() const {
    BH3D_REQUIRE(camera != CameraTag::FUSED, ValidationError, "calibration session needs a physical camera");
    check_increasing(xs, "x positions");
    check_increasing(ys, "y positions");
    check_increasing(depths, "depths");
    check_increasing(angles, "angles");
    BH3D_REQUIRE(depths.front() > 0.0, ValidationError, "session depths must be positive");
    BH3D_REQUIRE(!filters.empty(), ValidationError, "calibration session has no filters");
    for (std::size_t i = 0; i < filters.size(); ++i) {
        BH3D_REQUIRE(filters[i].bandwidth_nm >= 0.0, ValidationError, "filter bandwidth must be non-negative");
        if (i > 0) {
            BH3D_REQUIRE(filters[i].center_nm > filters[i - 1].center_nm, ValidationError,
                         "filter centers must be strictly increasing");
        }
    }
    BH3D_REQUIRE(target_reflectance > 0.0 && target_reflectance <= 1.0, ValidationError,
                 "target reflectance must lie in (0, 1]");
}

nlohmann::json CalibrationSession::to_json() const {
    nlohmann::json f = nlohmann::json::array();
    for (const auto& b : filters) f.push_back({{"center_nm", b.center_nm}, {"bandwidth_nm", b.bandwidth_nm}});
    return {{"camera", std::string(to_string(camera))},
            {"filters", f},
            {"depths_m", depths},
            {"angles_deg", angles},
            {"lattice", {{"x", xs}, {"y", ys}, {"order", "x, y, depth, filter (filter fastest)"}}},
            {"target_reflectance", target_reflectance}};
}

CalibrationSession CalibrationSession::from_json(const nlohmann::json& j) {
    CalibrationSession s;
    try {
        s.camera = camera_tag_from_string(j.at("camera").get<std::string>());
        for (const auto& f : j.at("filters")) {
            s.filters.push_back({f.at("center_nm").get<double>(), f.value("bandwidth_nm", 0.0)});
        }
        s.depths = j.at("depths_m").get<std::vector<double>>();
        s.angles = j.at("angles_deg").get<std::vector<double>>();
        s.xs = j.at("lattice").at("x").get<std::vector<double>>();
        s.ys = j.at("lattice").at("y").get<std::vector<double>>();
        s.target_reflectance = j.value("target_reflectance", 0.99);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed calibration session: ") + e.what());
    }
    s.validate();
    return s;
}

std::vector<AngularProfile> simulate_calibration_capture(const forward::GaussianField& field,
                                                         const forward::IlluminantModel& illum,
                                                         const forward::SensorModel& sensor,
                                                         const CalibrationSession& session) {
    session.validate();
    const auto& omega = sensor.sensitivity(session.camera);
    for (const auto& f : session.filters) {
        const double lo = f.center_nm - 0.5 * f.bandwidth_nm;
        const double hi = f.center_nm + 0.5 * f.bandwidth_nm;
        if (lo < kMinWavelengthNm || hi > kMaxWavelengthNm || !(omega(lo) > 0.0) || !(omega(hi) > 0.0)) {
            throw RangeError("filter at " + std::to_string(f.center_nm) + " nm (bandwidth " +
                             std::to_string(f.bandwidth_nm) + ") lies outside the " +
                             std::string(to_string(session.camera)) + " sensor support");
        }
    }

    const std::size_t nf = session.filters.size();
    const std::size_t nz = session.depths.size();
    const std::size_t ny = session.ys.size();
    std::vector<AngularProfile> profiles(session.xs.size() * ny * nz * nf);
    parallel_for(0, profiles.size(), [&](std::size_t k) {
        const std::size_t fi = k % nf;
        const std::size_t zi = (k / nf) % nz;
        const std::size_t yi = (k / (nf * nz)) % ny;
        const std::size_t xi = k / (nf * nz * ny);
        const auto& filter = session.filters[fi];
        AngularProfile& p = profiles[k];
        p.x = session.xs[xi];
        p.y = session.ys[yi];
        p.depth = session.depths[zi];
        p.lambda = filter.center_nm;
        p.angles = session.angles;
        p.intensities.assign(session.angles.size(), 0.0);

        // Trapezoidal integration across the boxcar passband.
        const int m = filter.bandwidth_nm > 0.0 ? kBoxcarSamples : 1;
        for (int s = 0; s < m; ++s) {
            double lambda = filter.center_nm;
            double weight = 1.0;
            if (m > 1) {
                const double h = filter.bandwidth_nm / (m - 1);
                lambda = filter.center_nm - 0.5 * filter.bandwidth_nm + s * h;
                weight = (s == 0 || s == m - 1) ? 0.5 * h : h;
            }
            const double scale = weight * omega(lambda) * session.target_reflectance;
            if (scale == 0.0) continue;
            for (std::size_t i = 0; i < p.angles.size(); ++i) {
                p.intensities[i] += scale * forward::gaussian_weight(field, illum, p.x, p.y, p.depth, p.angles[i], lambda);
            }
        }
    });
    return profiles;
}

}  // namespace bh3d::calib
