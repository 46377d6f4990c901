#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"
#include "bh3d/forward/gaussian_field.hpp"
#include "bh3d/forward/models.hpp"

namespace bh3d::forward {

/// Per-pixel N x M operator mapping a reflectance spectrum to intensities over the galvo angles.
using SystemMatrix = Eigen::MatrixXd;

/// Dispersed-line weight exp(-(theta - mu)^2 / (2 sigma^2)) * T * R * E / Z^2 at one pixel.
double gaussian_weight(const GaussianField& field, const IlluminantModel& illum, double x, double y, double depth,
                       double theta_deg, double lambda_nm);

/// Entry (i, j) = Omega_c(l_j) * weight(theta_i, l_j) * dl_j with trapezoidal band widths dl_j.
SystemMatrix assemble_system_matrix(double x, double y, double depth, std::span<const double> angles,
                                    const WavelengthGrid& grid, const GaussianField& field,
                                    const IlluminantModel& illum, const SensorModel& sensor);

/// Same operator expressed through the combined response: exp(...) * Psi(l_j) * dl_j / Z^2.
SystemMatrix assemble_system_matrix(double x, double y, double depth, std::span<const double> angles,
                                    const GaussianField& field, const RadiometricResponse& response);

Eigen::VectorXd render_intensity_vector(const SystemMatrix& s, std::span<const double> reflectance);

struct CaptureOptions {
    double exposure = 1.0;
    double noise_sigma = 0.0;  ///< absolute, in raw capture units
    double saturation = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
};

/// Noise-free radiance stack: I(x, y, theta_i) = [S(x, y, Z) H(x, y)]_i.
/// Pixels with invalid depth render as zeros and are flagged invalid.
ScanStack render_scan_stack(const SpectralCube& reflectance, const DepthMap& depth, const GaussianField& field,
                            const RadiometricResponse& response, std::span<const double> angles);

ScanStack render_scan_stack(const SpectralCube& reflectance, const DepthMap& depth, const GaussianField& field,
                            const IlluminantModel& illum, const SensorModel& sensor, std::span<const double> angles);

/// Raw capture of a radiance stack: exposure scaling, additive Gaussian noise, clipping to [0, saturation].
/// Noise is seeded per pixel, so results do not depend on thread scheduling.
ScanStack simulate_capture(const ScanStack& radiance, const CaptureOptions& options);

struct Capture {
    ScanStack stack;
    double exposure = 1.0;
};

/// Triangular weight over [0.02, 0.95] * saturation, peaking at the midpoint.
double hdr_weight(double raw, double saturation);

/// Merges raw captures into one radiance stack (value / exposure averaged with hdr_weight).
/// When every weight vanishes, uses the longest exposure below the upper knee, else the shortest.
ScanStack hdr_fuse(std::span<const Capture> captures, double saturation);

}  // namespace bh3d::forward
