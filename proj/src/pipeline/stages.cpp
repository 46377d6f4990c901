#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/pipeline/pipeline.hpp"

namespace bh3d::pipeline {

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (n - 1);
    return v;
}

// Keeps Spectralon noise independent of the scene captures.
constexpr std::uint64_t kSpectralonSeedOffset = 7919;

}  // namespace

scene::Scene make_scene(const PipelineConfig& config) {
    const CameraRig rig = config.effective_rig();
    const auto& s = config.scene;
    scene::Scene out;
    switch (s.kind) {
        case SceneKind::PatchChart: {
            scene::PatchChartOptions o;
            if (s.seed) o.seed = *s.seed;
            o.rough = s.rough;
            o.depth_m = s.depth_m;
            out = scene::make_patch_chart_scene(rig, o);
            break;
        }
        case SceneKind::Staircase: {
            scene::StaircaseOptions o;
            if (s.seed) o.seed = *s.seed;
            o.levels = s.staircase_levels;
            o.step_height_m = s.staircase_step_m;
            out = scene::make_staircase_scene(rig, o);
            break;
        }
        case SceneKind::TwoMaterial: {
            const auto spectra = scene::default_two_material_spectra(scene::master_grid());
            const auto layout = s.top_bottom ? scene::SplitLayout::TopBottom : scene::SplitLayout::LeftRight;
            out = s.seed ? scene::make_two_material_scene(rig, spectra, layout, s.depth_m, *s.seed)
                         : scene::make_two_material_scene(rig, spectra, layout, s.depth_m);
            break;
        }
        case SceneKind::Spectralon:
            out = scene::make_spectralon_scene(rig, s.depth_m);
            break;
    }
    if (s.blur) {
        out.blur = fusion::ChromaticBlurModel(s.blur->base_sigma_px, s.blur->slope_px_per_nm, config.fusion.vnir_guide,
                                              config.fusion.swir_guide);
    }
    return out;
}

scene::RenderSetup make_render_setup(const PipelineConfig& config, const CameraRig& rig) {
    scene::RenderSetup s;
    s.illuminant = scene::default_illuminant();
    s.sensor = scene::default_sensor();
    s.sensor.noise_fraction = config.sensor.noise_fraction;
    s.sensor.exposures = config.sensor.exposures;
    s.sensor.saturation = config.sensor.saturation;
    s.vnir_grid = config.grid(CameraTag::VNIR);
    s.swir_grid = config.grid(CameraTag::SWIR);
    s.angles = config.angles.build();
    s.noise_seed = config.seed;
    s.vnir_field = scene::projector_field(rig, CameraTag::VNIR, s.vnir_grid);
    s.swir_field = scene::projector_field(rig, CameraTag::SWIR, s.swir_grid);
    return s;
}

nlohmann::json scene_annotations(const scene::Scene& scene) {
    nlohmann::json a{{"scene", scene.name}};
    std::vector<int> regions;
    if (scene.name == "patch-chart") {
        for (std::size_t l = 1; l < scene.materials.size(); ++l) regions.push_back(static_cast<int>(l));
    } else if (scene.name == "two-material") {
        regions = {1, 2};
        a["contrast_nm"] = 1450.0;
    } else if (scene.name == "staircase") {
        std::vector<double> levels;
        for (const auto& f : scene.facets) {
            regions.push_back(f.label);
            levels.push_back(f.depth);
        }
        a["level_depths_m"] = levels;
    } else {
        regions = {0};
    }
    a["regions"] = regions;
    return a;
}

CalibrationResult run_calibration(const PipelineConfig& config, const scene::RenderSetup& truth, const CameraRig& rig) {
    const auto& c = config.calibration;
    scene::RenderSetup spectralon_setup = truth;
    spectralon_setup.noise_seed = truth.noise_seed + kSpectralonSeedOffset;
    const scene::Scene spectralon =
        scene::make_spectralon_scene(rig, c.spectralon_depth_m, c.response.target_reflectance);
    const scene::RenderedDataset scans = scene::render_captures(spectralon, spectralon_setup);

    CalibrationResult result;
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        CameraCalibration& out = cam == CameraTag::VNIR ? result.vnir : result.swir;
        const PinholeCamera& camera = cam == CameraTag::VNIR ? rig.vnir : rig.swir;
        const WavelengthGrid& grid = truth.grid(cam);
        auto& session = out.session;
        session.camera = cam;
        session.xs = linspace(0.0, camera.width - 1, c.lattice_x);
        session.ys = linspace(0.0, camera.height - 1, c.lattice_y);
        session.depths = c.depths_m;
        for (double l : linspace(grid.front(), grid.back(), c.wavelength_count)) {
            session.filters.push_back({l, c.filter_bandwidth_nm});
        }
        session.angles = truth.angles;
        session.target_reflectance = c.response.target_reflectance;

        out.profiles = calib::simulate_calibration_capture(truth.field(cam), truth.illuminant, truth.sensor, session);
        const auto samples = calib::fit_profiles(out.profiles, c.fit, &out.fits);
        out.field = calib::build_gaussian_field(samples);
        out.response = calib::estimate_radiometric_response(scans.captures(cam).hdr, out.field, spectralon.depth(cam),
                                                             grid, c.response);
    }
    return result;
}

depth::StereoResult run_depth(const PipelineConfig& config, const ScanStack& vnir, const ScanStack& swir,
                              const CameraRig& rig) {
    return depth::reconstruct_depth(vnir, swir, rig, config.stereo_params(rig));
}

SpectraResult run_spectra(const PipelineConfig& config, const ScanStack& vnir, const ScanStack& swir,
                          const DepthMap& depth_vnir, const DepthMap& depth_swir, const CalibrationResult& calibration) {
    SpectraResult out;
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        recon::ReconConfig rc = config.reconstruction;
        if (rc.checkpoint_every > 0) rc.checkpoint_dir /= cam == CameraTag::VNIR ? "vnir" : "swir";
        const auto& cal = calibration.camera(cam);
        auto report = recon::reconstruct_reflectance(cam == CameraTag::VNIR ? vnir : swir,
                                                     cam == CameraTag::VNIR ? depth_vnir : depth_swir, cal.field,
                                                     cal.response.response, rc);
        (cam == CameraTag::VNIR ? out.vnir : out.swir) = std::move(report);
    }
    return out;
}

FusionResult run_fusion(const PipelineConfig& config, const SpectralCube& vnir, const SpectralCube& swir,
                        const DepthMap& depth_vnir, const DepthMap& depth_swir, const CameraRig& rig) {
    FusionResult out;
    out.aligned_swir = fusion::align_swir_to_vnir(swir, depth_vnir, depth_swir, rig, config.fusion);
    out.fused = fusion::merge_cubes(vnir, out.aligned_swir, config.fusion);
    out.sharpened = fusion::guided_sharpen(out.fused.cube, config.fusion, &out.fused.swir_valid);
    return out;
}

GroundTruth ground_truth(const scene::Scene& scene) {
    GroundTruth t;
    t.cube = scene.vnir_cube;
    t.depth_vnir = scene.vnir_depth;
    t.depth_swir = scene.swir_depth;
    t.labels = scene.vnir_labels;
    t.annotations = scene_annotations(scene);
    return t;
}

int exit_code(const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    if (err == nullptr) return 1;
    switch (err->kind()) {
        case ErrorKind::Config:
        case ErrorKind::Validation:
        case ErrorKind::Domain:
        case ErrorKind::Contract:
        case ErrorKind::Range:
            return 2;
        case ErrorKind::Numerical:
        case ErrorKind::FitRejected:
            return 3;
        case ErrorKind::Io:
            return 4;
    }
    return 1;
}

}  // namespace bh3d::pipeline
