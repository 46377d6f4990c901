#include <fstream>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/pipeline/config.hpp"
#include "bh3d/scene/scene.hpp"

namespace bh3d::pipeline {

namespace {

using nlohmann::json;

const char* subpixel_name(depth::SubpixelFit fit) {
    return fit == depth::SubpixelFit::Parabolic ? "parabolic" : "equiangular";
}

depth::SubpixelFit subpixel_from(const std::string& name) {
    if (name == "parabolic") return depth::SubpixelFit::Parabolic;
    if (name == "equiangular") return depth::SubpixelFit::Equiangular;
    throw ConfigError("unknown subpixel fit '" + name + "' (expected parabolic or equiangular)");
}

json grid_json(const GridSpec& g) { return {{"start_nm", g.start}, {"stop_nm", g.stop}, {"step_nm", g.step}}; }

GridSpec grid_from(const json& j, GridSpec g) {
    g.start = j.value("start_nm", g.start);
    g.stop = j.value("stop_nm", g.stop);
    g.step = j.value("step_nm", g.step);
    return g;
}

json fit_json(const calib::FitOptions& f) {
    return {{"noise_floor", f.noise_floor}, {"min_snr", f.min_snr}, {"max_iterations", f.max_iterations}};
}

json response_json(const calib::ResponseOptions& r) {
    return {{"target_reflectance", r.target_reflectance}, {"pixel_stride", r.pixel_stride},
            {"max_iterations", r.max_iterations},         {"learning_rate", r.learning_rate},
            {"smoothing", r.smoothing},                   {"tolerance", r.tolerance},
            {"patience", r.patience},                     {"refine_iterations", r.refine_iterations},
            {"refine_tolerance", r.refine_tolerance}, {"refine_loss_tolerance", r.refine_loss_tolerance}};
}

// Every key of `given` must exist in `defaults`; null defaults accept any object.
void reject_unknown(const json& given, const json& defaults, const std::string& path) {
    if (!given.is_object() || !defaults.is_object()) return;
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string where = path.empty() ? it.key() : path + "." + it.key();
        if (!defaults.contains(it.key())) throw ConfigError("unknown config key '" + where + "'");
        reject_unknown(it.value(), defaults.at(it.key()), where);
    }
}

}  // namespace

std::string to_string(SceneKind kind) {
    switch (kind) {
        case SceneKind::PatchChart: return "patch-chart";
        case SceneKind::Staircase: return "staircase";
        case SceneKind::TwoMaterial: return "two-material";
        case SceneKind::Spectralon: return "spectralon";
    }
    return "unknown";
}

SceneKind scene_kind_from_string(const std::string& name) {
    for (SceneKind k : {SceneKind::PatchChart, SceneKind::Staircase, SceneKind::TwoMaterial, SceneKind::Spectralon}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown scene kind '" + name + "' (expected patch-chart, staircase, two-material or spectralon)");
}

std::vector<double> AngleSpec::build() const {
    BH3D_REQUIRE(count >= 2, ConfigError, "at least two scan angles are required");
    BH3D_REQUIRE(stop_deg > start_deg, ConfigError, "scan angles must increase");
    std::vector<double> a(static_cast<std::size_t>(count));
    const double step = (stop_deg - start_deg) / (count - 1);
    for (int i = 0; i < count; ++i) a[static_cast<std::size_t>(i)] = start_deg + step * i;
    return a;
}

void PipelineConfig::validate() const {
    BH3D_REQUIRE(threads >= 0, ConfigError, "threads must be non-negative");
    BH3D_REQUIRE(scene.image_size >= 16, ConfigError, "image size must be at least 16 px");
    BH3D_REQUIRE(scene.staircase_levels >= 2, ConfigError, "staircase needs at least two levels");
    BH3D_REQUIRE(scene.staircase_step_m > 0.0, ConfigError, "staircase step must be positive");
    BH3D_REQUIRE(scene.depth_m > 0.0, ConfigError, "scene depth must be positive");
    if (scene.blur) {
        BH3D_REQUIRE(scene.blur->base_sigma_px >= 0.0 && scene.blur->slope_px_per_nm >= 0.0, ConfigError,
                     "blur parameters must be non-negative");
    }
    if (rig) rig->validate();
    const auto vnir = grid(CameraTag::VNIR);
    const auto swir = grid(CameraTag::SWIR);
    BH3D_REQUIRE(vnir.size() >= 2 && swir.size() >= 2, ConfigError, "each camera grid needs at least two bands");
    BH3D_REQUIRE(vnir.front() >= kMinWavelengthNm && swir.back() <= kMaxWavelengthNm, ConfigError,
                 "camera grids must lie within the scene wavelength range");
    angles.build();

    BH3D_REQUIRE(sensor.noise_fraction >= 0.0, ConfigError, "noise fraction must be non-negative");
    BH3D_REQUIRE(sensor.saturation > 0.0, ConfigError, "saturation must be positive");
    BH3D_REQUIRE(!sensor.exposures.empty(), ConfigError, "at least one exposure is required");
    for (double e : sensor.exposures) BH3D_REQUIRE(e > 0.0, ConfigError, "exposures must be positive");

    const auto& c = calibration;
    BH3D_REQUIRE(c.lattice_x >= 2 && c.lattice_y >= 2 && c.wavelength_count >= 2, ConfigError,
                 "calibration lattice needs at least two samples per axis");
    BH3D_REQUIRE(!c.depths_m.empty(), ConfigError, "calibration lattice needs depths");
    for (std::size_t i = 0; i < c.depths_m.size(); ++i) {
        BH3D_REQUIRE(c.depths_m[i] > 0.0 && (i == 0 || c.depths_m[i] > c.depths_m[i - 1]), ConfigError,
                     "calibration depths must be positive and increasing");
    }
    BH3D_REQUIRE(c.filter_bandwidth_nm >= 0.0, ConfigError, "filter bandwidth must be non-negative");
    BH3D_REQUIRE(c.spectralon_depth_m > 0.0, ConfigError, "Spectralon depth must be positive");
    BH3D_REQUIRE(c.response.pixel_stride >= 1, ConfigError, "response pixel stride must be at least 1");

    BH3D_REQUIRE(stereo.near_m > 0.0 && stereo.far_m > stereo.near_m, ConfigError,
                 "stereo depth range must satisfy 0 < near < far");
    depth::StereoParams p;
    p.window_width = stereo.window_width;
    p.window_height = stereo.window_height;
    p.lr_threshold = stereo.lr_threshold;
    p.aggregate_radius = stereo.aggregate_radius;
    p.validate();

    reconstruction.validate();
    fusion.validate();
    BH3D_REQUIRE(evaluation.erosion_px >= 0, ConfigError, "evaluation erosion must be non-negative");
    BH3D_REQUIRE(exports.false_color_nm.size() == 3, ConfigError, "false-color composite needs three wavelengths");
}

CameraRig PipelineConfig::effective_rig() const { return rig ? *rig : scene::default_rig(scene.image_size); }

WavelengthGrid PipelineConfig::grid(CameraTag camera) const {
    BH3D_REQUIRE(camera != CameraTag::FUSED, ContractError, "grids are configured per camera");
    return camera == CameraTag::VNIR ? vnir_grid.build(CameraTag::VNIR) : swir_grid.build(CameraTag::SWIR);
}

depth::StereoParams PipelineConfig::stereo_params(const CameraRig& r) const {
    depth::StereoParams base;
    base.window_width = stereo.window_width;
    base.window_height = stereo.window_height;
    base.lr_threshold = stereo.lr_threshold;
    base.aggregate_radius = stereo.aggregate_radius;
    base.subpixel = stereo.subpixel;
    return depth::search_range_for(depth::rectify_geometry(r), {stereo.near_m, stereo.far_m}, base);
}

nlohmann::json PipelineConfig::to_json() const {
    json blur = nullptr;
    if (scene.blur) blur = {{"base_sigma_px", scene.blur->base_sigma_px}, {"slope_px_per_nm", scene.blur->slope_px_per_nm}};
    const auto& c = calibration;
    return {
        {"paths", {{"dataset", dataset_dir.string()}, {"calibration", calibration_dir.string()}, {"output", output_dir.string()}}},
        {"seed", seed},
        {"threads", threads},
        {"scene",
         {{"kind", to_string(scene.kind)},
          {"image_size", scene.image_size},
          {"seed", scene.seed ? json(*scene.seed) : json(nullptr)},
          {"rough", scene.rough},
          {"blur", blur},
          {"staircase_levels", scene.staircase_levels},
          {"staircase_step_m", scene.staircase_step_m},
          {"depth_m", scene.depth_m},
          {"top_bottom", scene.top_bottom}}},
        {"rig", rig ? scene::rig_to_json(*rig) : json(nullptr)},
        {"grids", {{"vnir", grid_json(vnir_grid)}, {"swir", grid_json(swir_grid)}}},
        {"angles", {{"start_deg", angles.start_deg}, {"stop_deg", angles.stop_deg}, {"count", angles.count}}},
        {"sensor",
         {{"noise_fraction", sensor.noise_fraction}, {"exposures", sensor.exposures}, {"saturation", sensor.saturation}}},
        {"calibration",
         {{"lattice",
           {{"x_count", c.lattice_x}, {"y_count", c.lattice_y}, {"depths_m", c.depths_m}, {"wavelength_count", c.wavelength_count}}},
          {"filter_bandwidth_nm", c.filter_bandwidth_nm},
          {"spectralon_depth_m", c.spectralon_depth_m},
          {"fit", fit_json(c.fit)},
          {"response", response_json(c.response)}}},
        {"stereo",
         {{"window_width", stereo.window_width},
          {"window_height", stereo.window_height},
          {"lr_threshold", stereo.lr_threshold},
          {"aggregate_radius", stereo.aggregate_radius},
          {"subpixel", subpixel_name(stereo.subpixel)},
          {"near_m", stereo.near_m},
          {"far_m", stereo.far_m}}},
        {"reconstruction", reconstruction.to_json()},
        {"fusion", fusion.to_json()},
        {"evaluation", {{"erosion_px", evaluation.erosion_px}}},
        {"export", {{"png", exports.png}, {"false_color_nm", exports.false_color_nm}, {"spectra_csv", exports.spectra_csv}}},
    };
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
    BH3D_REQUIRE(j.is_object(), ConfigError, "config must be a JSON object");
    PipelineConfig c;
    reject_unknown(j, c.to_json(), "");
    try {
        if (j.contains("paths")) {
            const auto& p = j["paths"];
            c.dataset_dir = p.value("dataset", c.dataset_dir.string());
            c.calibration_dir = p.value("calibration", c.calibration_dir.string());
            c.output_dir = p.value("output", c.output_dir.string());
        }
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        if (j.contains("scene")) {
            const auto& s = j["scene"];
            if (s.contains("kind")) c.scene.kind = scene_kind_from_string(s["kind"].get<std::string>());
            c.scene.image_size = s.value("image_size", c.scene.image_size);
            if (s.contains("seed") && !s["seed"].is_null()) c.scene.seed = s["seed"].get<std::uint64_t>();
            c.scene.rough = s.value("rough", c.scene.rough);
            if (s.contains("blur") && !s["blur"].is_null()) {
                BlurSpec b;
                b.base_sigma_px = s["blur"].value("base_sigma_px", b.base_sigma_px);
                b.slope_px_per_nm = s["blur"].value("slope_px_per_nm", b.slope_px_per_nm);
                c.scene.blur = b;
            }
            c.scene.staircase_levels = s.value("staircase_levels", c.scene.staircase_levels);
            c.scene.staircase_step_m = s.value("staircase_step_m", c.scene.staircase_step_m);
            c.scene.depth_m = s.value("depth_m", c.scene.depth_m);
            c.scene.top_bottom = s.value("top_bottom", c.scene.top_bottom);
        }
        if (j.contains("rig") && !j["rig"].is_null()) c.rig = scene::rig_from_json(j["rig"]);
        if (j.contains("grids")) {
            const auto& g = j["grids"];
            if (g.contains("vnir")) c.vnir_grid = grid_from(g["vnir"], c.vnir_grid);
            if (g.contains("swir")) c.swir_grid = grid_from(g["swir"], c.swir_grid);
        }
        if (j.contains("angles")) {
            const auto& a = j["angles"];
            c.angles.start_deg = a.value("start_deg", c.angles.start_deg);
            c.angles.stop_deg = a.value("stop_deg", c.angles.stop_deg);
            c.angles.count = a.value("count", c.angles.count);
        }
        if (j.contains("sensor")) {
            const auto& s = j["sensor"];
            c.sensor.noise_fraction = s.value("noise_fraction", c.sensor.noise_fraction);
            c.sensor.exposures = s.value("exposures", c.sensor.exposures);
            c.sensor.saturation = s.value("saturation", c.sensor.saturation);
        }
        if (j.contains("calibration")) {
            const auto& s = j["calibration"];
            auto& k = c.calibration;
            if (s.contains("lattice")) {
                const auto& l = s["lattice"];
                k.lattice_x = l.value("x_count", k.lattice_x);
                k.lattice_y = l.value("y_count", k.lattice_y);
                k.depths_m = l.value("depths_m", k.depths_m);
                k.wavelength_count = l.value("wavelength_count", k.wavelength_count);
            }
            k.filter_bandwidth_nm = s.value("filter_bandwidth_nm", k.filter_bandwidth_nm);
            k.spectralon_depth_m = s.value("spectralon_depth_m", k.spectralon_depth_m);
            if (s.contains("fit")) {
                const auto& f = s["fit"];
                k.fit.noise_floor = f.value("noise_floor", k.fit.noise_floor);
                k.fit.min_snr = f.value("min_snr", k.fit.min_snr);
                k.fit.max_iterations = f.value("max_iterations", k.fit.max_iterations);
            }
            if (s.contains("response")) {
                const auto& r = s["response"];
                auto& o = k.response;
                o.target_reflectance = r.value("target_reflectance", o.target_reflectance);
                o.pixel_stride = r.value("pixel_stride", o.pixel_stride);
                o.max_iterations = r.value("max_iterations", o.max_iterations);
                o.learning_rate = r.value("learning_rate", o.learning_rate);
                o.smoothing = r.value("smoothing", o.smoothing);
                o.tolerance = r.value("tolerance", o.tolerance);
                o.patience = r.value("patience", o.patience);
                o.refine_iterations = r.value("refine_iterations", o.refine_iterations);
                o.refine_tolerance = r.value("refine_tolerance", o.refine_tolerance);
                o.refine_loss_tolerance = r.value("refine_loss_tolerance", o.refine_loss_tolerance);
            }
        }
        if (j.contains("stereo")) {
            const auto& s = j["stereo"];
            c.stereo.window_width = s.value("window_width", c.stereo.window_width);
            c.stereo.window_height = s.value("window_height", c.stereo.window_height);
            c.stereo.lr_threshold = s.value("lr_threshold", c.stereo.lr_threshold);
            c.stereo.aggregate_radius = s.value("aggregate_radius", c.stereo.aggregate_radius);
            if (s.contains("subpixel")) c.stereo.subpixel = subpixel_from(s["subpixel"].get<std::string>());
            c.stereo.near_m = s.value("near_m", c.stereo.near_m);
            c.stereo.far_m = s.value("far_m", c.stereo.far_m);
        }
        if (j.contains("reconstruction")) c.reconstruction = recon::ReconConfig::from_json(j["reconstruction"]);
        if (j.contains("fusion")) c.fusion = fusion::FusionConfig::from_json(j["fusion"]);
        if (j.contains("evaluation")) c.evaluation.erosion_px = j["evaluation"].value("erosion_px", c.evaluation.erosion_px);
        if (j.contains("export")) {
            const auto& e = j["export"];
            c.exports.png = e.value("png", c.exports.png);
            c.exports.false_color_nm = e.value("false_color_nm", c.exports.false_color_nm);
            c.exports.spectra_csv = e.value("spectra_csv", c.exports.spectra_csv);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return from_json(j);
}

}  // namespace bh3d::pipeline
