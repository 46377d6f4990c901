#pragma once

#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bh3d/calibration/calibration.hpp"
#include "bh3d/depth/depth.hpp"
#include "bh3d/fusion/fusion.hpp"
#include "bh3d/pipeline/config.hpp"
#include "bh3d/recon/reconstruction.hpp"
#include "bh3d/scene/scene.hpp"

namespace bh3d::pipeline {

// In-memory stages. The commands below wrap these with file I/O.

scene::Scene make_scene(const PipelineConfig& config);
/// Ground-truth fields and models of the simulated hardware, with the configured grids, angles and sensor.
scene::RenderSetup make_render_setup(const PipelineConfig& config, const CameraRig& rig);
/// Regions and scene facts the evaluation needs (labels to score, step height, contrast wavelength).
nlohmann::json scene_annotations(const scene::Scene& scene);

struct CameraCalibration {
    calib::CalibrationSession session;
    std::vector<calib::AngularProfile> profiles;
    std::vector<calib::GaussianFit> fits;
    forward::GaussianField field;
    calib::ResponseReport response;
};

struct CalibrationResult {
    CameraCalibration vnir;
    CameraCalibration swir;
    const CameraCalibration& camera(CameraTag tag) const { return tag == CameraTag::SWIR ? swir : vnir; }
};

/// Filter sweeps of the true field, Gaussian fits and field rebuild, then Psi from a scanned Spectralon plane
/// captured with the configured sensor.
CalibrationResult run_calibration(const PipelineConfig& config, const scene::RenderSetup& truth, const CameraRig& rig);

depth::StereoResult run_depth(const PipelineConfig& config, const ScanStack& vnir, const ScanStack& swir,
                              const CameraRig& rig);

struct SpectraResult {
    recon::ReconReport vnir;
    recon::ReconReport swir;
};

SpectraResult run_spectra(const PipelineConfig& config, const ScanStack& vnir, const ScanStack& swir,
                          const DepthMap& depth_vnir, const DepthMap& depth_swir, const CalibrationResult& calibration);

struct FusionResult {
    SpectralCube aligned_swir;
    fusion::FusedCube fused;
    SpectralCube sharpened;
};

FusionResult run_fusion(const PipelineConfig& config, const SpectralCube& vnir, const SpectralCube& swir,
                        const DepthMap& depth_vnir, const DepthMap& depth_swir, const CameraRig& rig);

struct GroundTruth {
    SpectralCube cube;  ///< VNIR view
    DepthMap depth_vnir;
    DepthMap depth_swir;
    std::vector<int> labels;  ///< VNIR view, -1 for background
    nlohmann::json annotations;
};

GroundTruth ground_truth(const scene::Scene& scene);

struct Outputs {
    DepthMap depth_vnir;
    DepthMap depth_swir;
    fusion::FusedCube fused;
    /// Empty when sharpening was not run.
    SpectralCube sharpened;
};

/**
 * @brief Scores outputs against ground truth.
 *
 * Region statistics use pixels whose label matches within `erosion_px` and whose fused spectrum is
 * complete. Per-region SAM and RMSE compare region-mean spectra; per-band RMSE pools the pixels.
 * Depth errors cover pixels valid in both maps.
 */
nlohmann::json evaluate(const Outputs& outputs, const GroundTruth& truth, const EvaluationSpec& spec);
std::string format_report(const nlohmann::json& report);

// Commands. Each reads its inputs from and writes its outputs to the configured directories.

scene::DatasetFiles cmd_render(const PipelineConfig& config);
CalibrationResult cmd_calibrate(const PipelineConfig& config);
depth::StereoResult cmd_reconstruct_depth(const PipelineConfig& config);
SpectraResult cmd_reconstruct_spectra(const PipelineConfig& config);
FusionResult cmd_fuse(const PipelineConfig& config);
nlohmann::json cmd_evaluate(const PipelineConfig& config);
/// All stages in order; returns the evaluation report.
nlohmann::json cmd_pipeline(const PipelineConfig& config);

/// 2 config / validation, 3 numerical, 4 IO, 1 anything else.
int exit_code(const std::exception& e);

}  // namespace bh3d::pipeline
