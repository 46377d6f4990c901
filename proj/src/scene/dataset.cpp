#include <cctype>
#include <fstream>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/scene/scene.hpp"

namespace bh3d::scene {

namespace {

std::uint64_t capture_seed(std::uint64_t base, CameraTag camera, std::size_t exposure_index) {
    return base * 1000003ULL + (camera == CameraTag::SWIR ? 500ULL : 0ULL) + exposure_index;
}

CameraCaptures render_camera(const Scene& scene, const RenderSetup& setup, CameraTag camera) {
    SpectralCube cube = camera_cube(scene, camera, setup.grid(camera));
    if (scene.blur) cube = scene.blur->apply(cube);
    const auto response = forward::RadiometricResponse::from_models(setup.grid(camera), setup.illuminant, setup.sensor);
    const ScanStack radiance = forward::render_scan_stack(cube, scene.depth(camera), setup.field(camera), response,
                                                          setup.angles);
    const forward::SensorModel& s = setup.sensor;
    CameraCaptures out;
    for (std::size_t i = 0; i < s.exposures.size(); ++i) {
        forward::CaptureOptions opt;
        opt.exposure = s.exposures[i];
        opt.noise_sigma = s.noise_fraction * s.saturation;
        opt.saturation = s.saturation;
        opt.seed = capture_seed(setup.noise_seed, camera, i);
        out.raw.push_back({forward::simulate_capture(radiance, opt), s.exposures[i]});
    }
    out.hdr = forward::hdr_fuse(out.raw, s.saturation);
    return out;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

Image label_image(const std::vector<int>& labels, int w, int h) {
    Image img(w, h);
    for (std::size_t i = 0; i < labels.size(); ++i) img.data[i] = labels[i];
    return img;
}

}  // namespace

RenderSetup RenderSetup::defaults(const CameraRig& rig) {
    RenderSetup s;
    s.illuminant = default_illuminant();
    s.sensor = default_sensor();
    s.vnir_field = projector_field(rig, CameraTag::VNIR, s.vnir_grid);
    s.swir_field = projector_field(rig, CameraTag::SWIR, s.swir_grid);
    return s;
}

SpectralCube camera_cube(const Scene& scene, CameraTag camera, const WavelengthGrid& grid) {
    const SpectralCube& src = scene.cube(camera);
    SpectralCube out(src.width(), src.height(), grid);
    for (std::size_t p = 0; p < src.pixel_count(); ++p) {
        if (!src.is_valid(p)) {
            out.valid()[p] = 0;
            continue;
        }
        const auto v = resample_spectrum(src.spectrum(p), scene.grid, grid);
        std::copy(v.begin(), v.end(), out.spectrum(p).begin());
    }
    return out;
}

RenderedDataset render_captures(const Scene& scene, const RenderSetup& setup) {
    setup.sensor.validate();
    setup.illuminant.validate();
    BH3D_REQUIRE(!setup.sensor.exposures.empty(), ConfigError, "at least one exposure is required");
    RenderedDataset d;
    d.vnir = render_camera(scene, setup, CameraTag::VNIR);
    d.swir = render_camera(scene, setup, CameraTag::SWIR);
    return d;
}

DatasetFiles render_dataset(const Scene& scene, const RenderSetup& setup, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    const RenderedDataset d = render_captures(scene, setup);

    nlohmann::json files;
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        const std::string name(to_string(cam));
        std::string lower = name;
        for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const CameraCaptures& cc = d.captures(cam);
        nlohmann::json stacks = nlohmann::json::array();
        for (std::size_t i = 0; i < cc.raw.size(); ++i) {
            const std::string stem = lower + "_raw_" + std::to_string(i);
            io::write_stack(out_dir / stem, cc.raw[i].stack);
            stacks.push_back(stem);
        }
        files[lower + "_stacks"] = stacks;
        io::write_stack(out_dir / (lower + "_hdr"), cc.hdr);
        files[lower + "_hdr"] = lower + "_hdr";
        forward::write_field(out_dir / (lower + "_field"), setup.field(cam));
        files[lower + "_field"] = lower + "_field";
        const auto response = forward::RadiometricResponse::from_models(setup.grid(cam), setup.illuminant, setup.sensor);
        write_json(out_dir / (lower + "_response.json"), response.to_json());
        files[lower + "_response"] = lower + "_response.json";
        io::write_depth(out_dir / ("gt_depth_" + lower), scene.depth(cam));
        files["gt_depth_" + lower] = "gt_depth_" + lower;
        const auto& labels = cam == CameraTag::VNIR ? scene.vnir_labels : scene.swir_labels;
        io::write_image(out_dir / ("gt_labels_" + lower), label_image(labels, scene.cube(cam).width(),
                                                                       scene.cube(cam).height()), "labels");
        files["gt_labels_" + lower] = "gt_labels_" + lower;
    }
    io::write_cube(out_dir / "gt_cube", scene.vnir_cube);
    files["gt_cube"] = "gt_cube";
    io::write_cube(out_dir / "gt_cube_swir", scene.swir_cube);
    files["gt_cube_swir"] = "gt_cube_swir";

    std::vector<double> exposures = setup.sensor.exposures;
    nlohmann::json manifest{{"scene", scene.name},
                            {"scene_seed", scene.seed},
                            {"noise_seed", setup.noise_seed},
                            {"rig", rig_to_json(scene.rig)},
                            {"files", files},
                            {"exposures", exposures},
                            {"noise", {{"fraction", setup.sensor.noise_fraction},
                                       {"sigma", setup.sensor.noise_fraction * setup.sensor.saturation}}},
                            {"saturation", setup.sensor.saturation},
                            {"angles_deg", setup.angles},
                            {"illuminant", setup.illuminant.to_json()},
                            {"sensor", setup.sensor.to_json()}};
    if (scene.blur) manifest["blur"] = scene.blur->to_json();
    const auto path = out_dir / "manifest.json";
    write_json(path, manifest);
    return {path, manifest};
}

}  // namespace bh3d::scene
