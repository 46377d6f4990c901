#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"
#include "bh3d/forward/gaussian_field.hpp"
#include "bh3d/forward/models.hpp"

namespace bh3d::calib {

/// Intensity at one pixel as a function of galvo angle, for one filter and one target depth.
struct AngularProfile {
    std::vector<double> angles;
    std::vector<double> intensities;
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0;
    double lambda = 0.0;

    void validate() const;
};

struct GaussianFit {
    double mu = 0.0;     ///< deg
    double sigma = 0.0;  ///< deg
    double amplitude = 0.0;
    double residual = 0.0;  ///< RMS of the fit residual
};

struct FitOptions {
    /// Profiles whose peak does not exceed this absolute level are rejected.
    double noise_floor = 0.0;
    /// Minimum ratio of peak to the estimated noise standard deviation.
    double min_snr = 5.0;
    int max_iterations = 100;
};

/// Least-squares fit of A * exp(-(theta - mu)^2 / (2 sigma^2)).
GaussianFit fit_gaussian_profile(const AngularProfile& profile, const FitOptions& options = {});

/// One lattice sample of the fitted field.
struct LatticeSample {
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0;
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
};

/// Assembles fitted samples into a field. Samples must cover a full rectangular lattice
/// and mu must increase with wavelength along every line.
forward::GaussianField build_gaussian_field(std::span<const LatticeSample> samples);

/// Ideal boxcar band-pass filter.
struct BandpassFilter {
    double center_nm = 0.0;
    double bandwidth_nm = 0.0;  ///< 0 selects a single wavelength
};

/// Calibration sweep layout: which pixels, depths, filters and angles are recorded.
struct CalibrationSession {
    CameraTag camera = CameraTag::VNIR;
    std::vector<double> xs;
    std::vector<double> ys;
    std::vector<double> depths;
    std::vector<BandpassFilter> filters;
    std::vector<double> angles;
    double target_reflectance = 0.99;

    void validate() const;
    nlohmann::json to_json() const;
    static CalibrationSession from_json(const nlohmann::json& j);
};

/// Renders a Spectralon plane through each filter at each depth and pixel of the session.
std::vector<AngularProfile> simulate_calibration_capture(const forward::GaussianField& field,
                                                         const forward::IlluminantModel& illum,
                                                         const forward::SensorModel& sensor,
                                                         const CalibrationSession& session);

/// Fits every profile (in parallel) and returns the lattice samples in profile order.
std::vector<LatticeSample> fit_profiles(std::span<const AngularProfile> profiles, const FitOptions& options,
                                        std::vector<GaussianFit>* fits = nullptr);

/// CSV with header x,y,Z,lambda,mu_deg,sigma_deg,amplitude,residual.
void write_fit_csv(const std::filesystem::path& path, std::span<const AngularProfile> profiles,
                   std::span<const GaussianFit> fits);

struct ResponseOptions {
    double target_reflectance = 0.99;
    std::size_t pixel_stride = 4;
    /// Adam phase.
    int max_iterations = 500;
    double learning_rate = 0.05;
    /// Smoothing of |r| relative to the mean measured intensity.
    double smoothing = 1e-6;
    /// Stop Adam when the loss improves by less than this fraction over `patience` iterations.
    double tolerance = 1e-5;
    int patience = 20;
    /// Reweighted least-squares polish of the same objective.
    int refine_iterations = 200;
    /// Stop once no band changes by more than this fraction.
    double refine_tolerance = 1e-10;
    /// Or once an accepted step lowers the loss by less than this fraction.
    double refine_loss_tolerance = 1e-9;
};

struct ResponseReport {
    forward::RadiometricResponse response;
    std::vector<double> loss_history;
    int iterations = 0;
};

/// Recovers Psi on `grid` from a scanned Spectralon plane: smoothed l1 descent in log space,
/// then reweighted least squares on the same objective.
ResponseReport estimate_radiometric_response(const ScanStack& stack, const forward::GaussianField& field,
                                             const DepthMap& depth, const WavelengthGrid& grid,
                                             const ResponseOptions& options = {});

}  // namespace bh3d::calib
