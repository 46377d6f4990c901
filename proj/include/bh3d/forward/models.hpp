#pragma once

#include <limits>
#include <vector>

#include <json.hpp>

#include "bh3d/core/wavelength_grid.hpp"
#include "bh3d/forward/curve.hpp"

namespace bh3d::forward {

/// Projector-side spectral terms: optics transmittance T, galvo mirror reflectance R, source emission E.
struct IlluminantModel {
    SpectralCurve transmittance = SpectralCurve::constant(1.0);
    SpectralCurve mirror_reflectance = SpectralCurve::constant(1.0);
    SpectralCurve emission = SpectralCurve::constant(1.0);

    /// T(l) * R(l) * E(l).
    double throughput(double lambda_nm) const {
        return transmittance(lambda_nm) * mirror_reflectance(lambda_nm) * emission(lambda_nm);
    }
    void validate() const;

    nlohmann::json to_json() const;
    static IlluminantModel from_json(const nlohmann::json& j);
};

/// Per-camera spectral sensitivity plus the capture parameters shared by both cameras.
struct SensorModel {
    SpectralCurve vnir_sensitivity = SpectralCurve::constant(1.0);
    SpectralCurve swir_sensitivity = SpectralCurve::constant(1.0);
    double saturation = 1.0;
    /// Additive Gaussian noise standard deviation as a fraction of `saturation`.
    double noise_fraction = 0.0;
    std::vector<double> exposures{1.0};

    const SpectralCurve& sensitivity(CameraTag tag) const;
    void validate() const;

    nlohmann::json to_json() const;
    static SensorModel from_json(const nlohmann::json& j);
};

/**
 * @brief Combined radiometric response Psi_c = Omega_c * T * R * E sampled on a camera grid.
 */
struct RadiometricResponse {
    WavelengthGrid grid;
    std::vector<double> psi;

    /// Ground-truth response evaluated from the model curves at each band center.
    static RadiometricResponse from_models(const WavelengthGrid& grid, const IlluminantModel& illum,
                                           const SensorModel& sensor);
    void validate() const;

    nlohmann::json to_json() const;
    static RadiometricResponse from_json(const nlohmann::json& j);
};

}  // namespace bh3d::forward
