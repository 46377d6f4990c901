#include "bh3d/forward/models.hpp"

#include <cmath>
#include <string>

#include "bh3d/core/error.hpp"

namespace bh3d::forward {

namespace {

void check_curve(const SpectralCurve& c, const char* name, double upper) {
    for (double v : c.values()) {
        if (!std::isfinite(v) || v < 0.0 || v > upper) {
            throw ValidationError(std::string(name) + " curve value " + std::to_string(v) + " out of range");
        }
    }
}

}  // namespace

void IlluminantModel::validate() const {
    check_curve(transmittance, "transmittance", 1.0);
    check_curve(mirror_reflectance, "mirror reflectance", 1.0);
    check_curve(emission, "emission", std::numeric_limits<double>::infinity());
}

nlohmann::json IlluminantModel::to_json() const {
    return {{"transmittance", transmittance.to_json()},
            {"mirror_reflectance", mirror_reflectance.to_json()},
            {"emission", emission.to_json()}};
}

IlluminantModel IlluminantModel::from_json(const nlohmann::json& j) {
    IlluminantModel m;
    if (j.contains("transmittance")) m.transmittance = SpectralCurve::from_json(j["transmittance"]);
    if (j.contains("mirror_reflectance")) m.mirror_reflectance = SpectralCurve::from_json(j["mirror_reflectance"]);
    if (j.contains("emission")) m.emission = SpectralCurve::from_json(j["emission"]);
    m.validate();
    return m;
}

const SpectralCurve& SensorModel::sensitivity(CameraTag tag) const {
    switch (tag) {
        case CameraTag::VNIR: return vnir_sensitivity;
        case CameraTag::SWIR: return swir_sensitivity;
        case CameraTag::FUSED: break;
    }
    throw ContractError("no sensor sensitivity for the FUSED tag");
}

void SensorModel::validate() const {
    check_curve(vnir_sensitivity, "VNIR sensitivity", std::numeric_limits<double>::infinity());
    check_curve(swir_sensitivity, "SWIR sensitivity", std::numeric_limits<double>::infinity());
    BH3D_REQUIRE(saturation > 0.0, ValidationError, "saturation level must be positive");
    BH3D_REQUIRE(noise_fraction >= 0.0, ValidationError, "noise fraction must be non-negative");
    BH3D_REQUIRE(!exposures.empty(), ValidationError, "at least one exposure is required");
    for (double e : exposures) BH3D_REQUIRE(e > 0.0, ValidationError, "exposures must be positive");
}

nlohmann::json SensorModel::to_json() const {
    return {{"vnir_sensitivity", vnir_sensitivity.to_json()},
            {"swir_sensitivity", swir_sensitivity.to_json()},
            {"saturation", saturation},
            {"noise_fraction", noise_fraction},
            {"exposures", exposures}};
}

SensorModel SensorModel::from_json(const nlohmann::json& j) {
    SensorModel m;
    if (j.contains("vnir_sensitivity")) m.vnir_sensitivity = SpectralCurve::from_json(j["vnir_sensitivity"]);
    if (j.contains("swir_sensitivity")) m.swir_sensitivity = SpectralCurve::from_json(j["swir_sensitivity"]);
    m.saturation = j.value("saturation", m.saturation);
    m.noise_fraction = j.value("noise_fraction", m.noise_fraction);
    if (j.contains("exposures")) m.exposures = j["exposures"].get<std::vector<double>>();
    m.validate();
    return m;
}

RadiometricResponse RadiometricResponse::from_models(const WavelengthGrid& grid, const IlluminantModel& illum,
                                                     const SensorModel& sensor) {
    RadiometricResponse r{grid, std::vector<double>(grid.size())};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double lambda = grid[j];
        r.psi[j] = sensor.sensitivity(grid.band_source(j))(lambda) * illum.throughput(lambda);
    }
    return r;
}

void RadiometricResponse::validate() const {
    BH3D_REQUIRE(psi.size() == grid.size(), ValidationError, "response length does not match its grid");
    for (std::size_t j = 0; j < psi.size(); ++j) {
        if (!(psi[j] > 0.0) || !std::isfinite(psi[j])) {
            throw DomainError("radiometric response must be positive (band " + std::to_string(grid[j]) + " nm)");
        }
    }
}

nlohmann::json RadiometricResponse::to_json() const {
    const auto b = grid.bands();
    return {{"camera_tag", std::string(to_string(grid.tag()))},
            {"bands", std::vector<double>(b.begin(), b.end())},
            {"psi", psi}};
}

RadiometricResponse RadiometricResponse::from_json(const nlohmann::json& j) {
    RadiometricResponse r{
        WavelengthGrid(j.at("bands").get<std::vector<double>>(),
                       camera_tag_from_string(j.at("camera_tag").get<std::string>())),
        j.at("psi").get<std::vector<double>>()};
    r.validate();
    return r;
}

}  // namespace bh3d::forward
