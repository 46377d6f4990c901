#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/core/camera.hpp"
#include "bh3d/core/wavelength_grid.hpp"
#include "bh3d/depth/depth.hpp"
#include "bh3d/fusion/fusion.hpp"
#include "bh3d/recon/reconstruction.hpp"

namespace bh3d::pipeline {

enum class SceneKind { PatchChart, Staircase, TwoMaterial, Spectralon };

std::string to_string(SceneKind kind);
SceneKind scene_kind_from_string(const std::string& name);

struct GridSpec {
    double start = 0.0;
    double stop = 0.0;
    double step = 0.0;

    WavelengthGrid build(CameraTag tag) const { return WavelengthGrid::uniform(start, stop, step, tag); }
};

struct AngleSpec {
    double start_deg = -22.5;
    double stop_deg = 22.5;
    int count = 181;

    std::vector<double> build() const;
};

struct BlurSpec {
    double base_sigma_px = 1.0;
    double slope_px_per_nm = 0.01;
};

struct SceneSpec {
    SceneKind kind = SceneKind::PatchChart;
    int image_size = 96;
    /// Texture and spectra seed; each scene kind has its own default when unset.
    std::optional<std::uint64_t> seed;
    bool rough = false;
    /// Chromatic defocus applied before rendering.
    std::optional<BlurSpec> blur;
    int staircase_levels = 5;
    double staircase_step_m = 0.020;
    double depth_m = 0.55;
    bool top_bottom = false;
};

struct SensorSpec {
    double noise_fraction = 0.01;
    std::vector<double> exposures{1.0, 4.0, 16.0};
    double saturation = 4095.0;
};

struct CalibrationSpec {
    int lattice_x = 5;
    int lattice_y = 5;
    std::vector<double> depths_m{0.45, 0.55, 0.65};
    int wavelength_count = 8;
    double filter_bandwidth_nm = 0.0;
    double spectralon_depth_m = 0.55;
    calib::FitOptions fit;
    calib::ResponseOptions response;
};

struct StereoSpec {
    int window_width = 9;
    int window_height = 7;
    double lr_threshold = 1.0;
    int aggregate_radius = 3;
    depth::SubpixelFit subpixel = depth::SubpixelFit::Equiangular;
    double near_m = 0.4;
    double far_m = 0.8;
};

struct EvaluationSpec {
    /// Pixels closer than this to a region boundary are left out of region statistics.
    int erosion_px = 1;
};

struct ExportSpec {
    bool png = true;
    /// Bands mapped to R, G, B of the false-color composite.
    std::vector<double> false_color_nm{1450.0, 1050.0, 650.0};
    bool spectra_csv = true;
};

/// Everything that determines a run. Unknown JSON keys are rejected.
struct PipelineConfig {
    std::filesystem::path dataset_dir = "bh3d_run/dataset";
    std::filesystem::path calibration_dir = "bh3d_run/calibration";
    std::filesystem::path output_dir = "bh3d_run/output";
    std::uint64_t seed = 11;
    int threads = 0;
    SceneSpec scene;
    /// Custom rig; the default rig of `scene.image_size` when unset.
    std::optional<CameraRig> rig;
    GridSpec vnir_grid{450.0, 890.0, 20.0};
    GridSpec swir_grid{875.0, 1500.0, 25.0};
    AngleSpec angles;
    SensorSpec sensor;
    CalibrationSpec calibration;
    StereoSpec stereo;
    recon::ReconConfig reconstruction;
    fusion::FusionConfig fusion;
    EvaluationSpec evaluation;
    ExportSpec exports;

    /// Checks every value and every embedded config; throws ConfigError or ValidationError.
    void validate() const;
    CameraRig effective_rig() const;
    WavelengthGrid grid(CameraTag camera) const;
    depth::StereoParams stereo_params(const CameraRig& rig) const;

    nlohmann::json to_json() const;
    static PipelineConfig from_json(const nlohmann::json& j);
    static PipelineConfig load(const std::filesystem::path& path);
};

}  // namespace bh3d::pipeline
