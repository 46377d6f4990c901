#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/pipeline/pipeline.hpp"

namespace bh3d::pipeline {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::parse_error& e) {
        throw IoError(path.string() + " is not valid JSON: " + e.what());
    }
}

// Referenced inputs must exist before a stage starts.
void require_file(const fs::path& path, const std::string& hint) {
    if (!fs::exists(path)) throw IoError("missing input " + path.string() + " (" + hint + ")");
}

const char* lower(CameraTag cam) { return cam == CameraTag::VNIR ? "vnir" : "swir"; }

class Stopwatch {
public:
    explicit Stopwatch(std::string name) : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::clog << "[bh3d] " << name_ << (std::uncaught_exceptions() > 0 ? " failed after " : " done in ") << s << " s\n";
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

void apply_threads(const PipelineConfig& config) { set_thread_count(config.threads); }

struct Dataset {
    json manifest;
    CameraRig rig;
    ScanStack vnir;
    ScanStack swir;
};

Dataset load_dataset(const PipelineConfig& config) {
    const fs::path dir = config.dataset_dir;
    require_file(dir / "manifest.json", "run render first");
    Dataset d;
    d.manifest = read_json(dir / "manifest.json");
    try {
        d.rig = scene::rig_from_json(d.manifest.at("rig"));
        const auto& files = d.manifest.at("files");
        const std::string v = files.at("vnir_hdr").get<std::string>();
        const std::string s = files.at("swir_hdr").get<std::string>();
        require_file(dir / (v + ".json"), "dataset is incomplete");
        require_file(dir / (s + ".json"), "dataset is incomplete");
        d.vnir = io::read_stack(dir / v);
        d.swir = io::read_stack(dir / s);
    } catch (const json::exception& e) {
        throw ValidationError("malformed dataset manifest: " + std::string(e.what()));
    }
    return d;
}

std::pair<DepthMap, DepthMap> load_depths(const PipelineConfig& config) {
    const fs::path dir = config.output_dir;
    require_file(dir / "depth_vnir.json", "run reconstruct-depth first");
    require_file(dir / "depth_swir.json", "run reconstruct-depth first");
    return {io::read_depth(dir / "depth_vnir"), io::read_depth(dir / "depth_swir")};
}

CalibrationResult load_calibration(const PipelineConfig& config) {
    const fs::path dir = config.calibration_dir;
    CalibrationResult c;
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        const std::string name = lower(cam);
        require_file(dir / (name + "_field.json"), "run calibrate first");
        require_file(dir / (name + "_response.json"), "run calibrate first");
        CameraCalibration& out = cam == CameraTag::VNIR ? c.vnir : c.swir;
        out.field = forward::read_field(dir / (name + "_field"));
        out.response.response = forward::RadiometricResponse::from_json(read_json(dir / (name + "_response.json")));
    }
    return c;
}

std::string scaled_name(const std::string& prefix, double lo, double hi) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s_min%.4f_max%.4f.png", prefix.c_str(), lo, hi);
    return buf;
}

std::pair<double, double> valid_range(const Image& img, const Mask& valid) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        if (!valid[i]) continue;
        lo = any ? std::min(lo, img.data[i]) : img.data[i];
        hi = any ? std::max(hi, img.data[i]) : img.data[i];
        any = true;
    }
    if (hi <= lo) hi = lo + 1.0;
    return {lo, hi};
}

// Per-band min-max grayscale PNGs plus one false-color composite.
void export_pngs(const PipelineConfig& config, const SpectralCube& cube, const Mask& swir_valid, const fs::path& dir) {
    ensure_dir(dir);
    const WavelengthGrid& grid = cube.grid();
    auto band_mask = [&](std::size_t j) {
        Mask m = cube.valid();
        if (grid.band_source(j) == CameraTag::SWIR) {
            for (std::size_t i = 0; i < m.size(); ++i) m[i] = m[i] && swir_valid[i];
        }
        return m;
    };
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const Image img = cube.band_image(j);
        const auto [lo, hi] = valid_range(img, band_mask(j));
        char prefix[32];
        std::snprintf(prefix, sizeof prefix, "band_%04.0fnm", grid[j]);
        io::write_png_gray(dir / scaled_name(prefix, lo, hi), img, lo, hi);
    }
    std::vector<Image> rgb;
    std::string prefix = "false_color";
    double lo = 0.0, hi = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        const double target = config.exports.false_color_nm[c];
        std::size_t band = 0;
        for (std::size_t j = 1; j < grid.size(); ++j) {
            if (std::abs(grid[j] - target) < std::abs(grid[band] - target)) band = j;
        }
        rgb.push_back(cube.band_image(band));
        const auto [l, h] = valid_range(rgb.back(), band_mask(band));
        lo = c == 0 ? l : std::min(lo, l);
        hi = c == 0 ? h : std::max(hi, h);
        char part[16];
        std::snprintf(part, sizeof part, "_%.0f", grid[band]);
        prefix += part;
    }
    io::write_png_rgb(dir / scaled_name(prefix + "nm", lo, hi), rgb[0], rgb[1], rgb[2], lo, hi);
}

}  // namespace

scene::DatasetFiles cmd_render(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    Stopwatch timer("render");
    const scene::Scene s = make_scene(config);
    const scene::RenderSetup setup = make_render_setup(config, s.rig);
    scene::DatasetFiles files = scene::render_dataset(s, setup, config.dataset_dir);
    files.json["evaluation"] = scene_annotations(s);
    write_json(files.manifest, files.json);
    write_json(config.dataset_dir / "config.json", config.to_json());
    return files;
}

CalibrationResult cmd_calibrate(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    Stopwatch timer("calibrate");
    const CameraRig rig = config.effective_rig();
    const scene::RenderSetup truth = make_render_setup(config, rig);
    CalibrationResult result = run_calibration(config, truth, rig);

    const fs::path dir = config.calibration_dir;
    ensure_dir(dir);
    json report;
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        const std::string name = lower(cam);
        const CameraCalibration& c = result.camera(cam);
        forward::write_field(dir / (name + "_field"), c.field);
        write_json(dir / (name + "_response.json"), c.response.response.to_json());
        write_json(dir / (name + "_session.json"), c.session.to_json());
        calib::write_fit_csv(dir / (name + "_fits.csv"), c.profiles, c.fits);
        write_json(dir / (name + "_response_loss.json"),
                   {{"iterations", c.response.iterations}, {"loss", c.response.loss_history}});

        // Errors against the simulated hardware, sampled on the calibration lattice.
        const forward::GaussianField& f = truth.field(cam);
        double mu_err = 0.0, sigma_err = 0.0;
        for (const auto& p : c.profiles) {
            const auto a = f.sample(p.x, p.y, p.depth, p.lambda);
            const auto b = c.field.sample(p.x, p.y, p.depth, p.lambda);
            mu_err = std::max(mu_err, std::abs(a.mu - b.mu));
            sigma_err = std::max(sigma_err, std::abs(b.sigma / a.sigma - 1.0));
        }
        const auto psi_true = forward::RadiometricResponse::from_models(truth.grid(cam), truth.illuminant, truth.sensor);
        double psi_err = 0.0;
        for (std::size_t j = 0; j < psi_true.psi.size(); ++j) {
            psi_err = std::max(psi_err, std::abs(c.response.response.psi[j] / psi_true.psi[j] - 1.0));
        }
        report[name] = {{"max_mu_error_deg", mu_err},
                        {"max_sigma_rel_error", sigma_err},
                        {"max_psi_rel_error", psi_err},
                        {"response_iterations", c.response.iterations}};
    }
    write_json(dir / "calibration_report.json", report);
    return result;
}

depth::StereoResult cmd_reconstruct_depth(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    const Dataset d = load_dataset(config);
    Stopwatch timer("reconstruct-depth");
    depth::StereoResult r = run_depth(config, d.vnir, d.swir, d.rig);
    ensure_dir(config.output_dir);
    io::write_depth(config.output_dir / "depth_vnir", r.vnir_depth);
    io::write_depth(config.output_dir / "depth_swir", r.swir_depth);
    io::write_depth(config.output_dir / "depth_rectified", r.rectified_depth);
    return r;
}

SpectraResult cmd_reconstruct_spectra(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    const Dataset d = load_dataset(config);
    const auto [dv, ds] = load_depths(config);
    const CalibrationResult cal = load_calibration(config);
    Stopwatch timer("reconstruct-spectra");
    SpectraResult r = run_spectra(config, d.vnir, d.swir, dv, ds, cal);
    ensure_dir(config.output_dir);
    for (CameraTag cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        const recon::ReconReport& rep = cam == CameraTag::VNIR ? r.vnir : r.swir;
        const std::string name = lower(cam);
        io::write_cube(config.output_dir / ("cube_" + name), rep.cube);
        write_json(config.output_dir / ("recon_" + name + ".json"),
                   {{"iterations", rep.iterations}, {"converged", rep.converged}, {"loss", rep.loss_history}});
    }
    return r;
}

FusionResult cmd_fuse(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    const Dataset d = load_dataset(config);
    const auto [dv, ds] = load_depths(config);
    const fs::path out = config.output_dir;
    require_file(out / "cube_vnir.json", "run reconstruct-spectra first");
    require_file(out / "cube_swir.json", "run reconstruct-spectra first");
    const SpectralCube vnir = io::read_cube(out / "cube_vnir");
    const SpectralCube swir = io::read_cube(out / "cube_swir");
    Stopwatch timer("fuse");
    FusionResult r = run_fusion(config, vnir, swir, dv, ds, d.rig);
    io::write_cube(out / "swir_aligned", r.aligned_swir);
    io::write_cube(out / "fused", r.fused.cube);
    io::write_mask(out / "fused_swir.mask", r.fused.swir_valid);
    io::write_cube(out / "fused_sharp", r.sharpened);
    if (config.exports.png) export_pngs(config, r.sharpened, r.fused.swir_valid, out / "png");
    return r;
}

json cmd_evaluate(const PipelineConfig& config) {
    config.validate();
    apply_threads(config);
    const fs::path data = config.dataset_dir;
    const fs::path out = config.output_dir;
    require_file(data / "manifest.json", "ground truth is missing");
    const json manifest = read_json(data / "manifest.json");
    GroundTruth truth;
    try {
        const auto& files = manifest.at("files");
        for (const char* key : {"gt_cube", "gt_depth_vnir", "gt_depth_swir", "gt_labels_vnir"}) {
            if (!files.contains(key)) throw ValidationError(std::string("ground truth is missing: manifest lacks ") + key);
            require_file(data / (files[key].get<std::string>() + ".json"), "ground truth is missing");
        }
        truth.cube = io::read_cube(data / files["gt_cube"].get<std::string>());
        truth.depth_vnir = io::read_depth(data / files["gt_depth_vnir"].get<std::string>());
        truth.depth_swir = io::read_depth(data / files["gt_depth_swir"].get<std::string>());
        const Image labels = io::read_image(data / files["gt_labels_vnir"].get<std::string>());
        truth.labels.resize(labels.data.size());
        for (std::size_t i = 0; i < labels.data.size(); ++i) truth.labels[i] = static_cast<int>(std::lround(labels.data[i]));
        if (!manifest.contains("evaluation")) throw ValidationError("ground truth is missing: manifest lacks evaluation regions");
        truth.annotations = manifest["evaluation"];
    } catch (const json::exception& e) {
        throw ValidationError("malformed dataset manifest: " + std::string(e.what()));
    }

    Outputs o;
    const auto [dv, ds] = load_depths(config);
    o.depth_vnir = dv;
    o.depth_swir = ds;
    require_file(out / "fused.json", "run fuse first");
    o.fused.cube = io::read_cube(out / "fused");
    o.fused.swir_valid = io::read_mask(out / "fused_swir.mask", o.fused.cube.pixel_count());
    if (fs::exists(out / "fused_sharp.json")) o.sharpened = io::read_cube(out / "fused_sharp");

    Stopwatch timer("evaluate");
    json report = evaluate(o, truth, config.evaluation);
    ensure_dir(out);
    write_json(out / "report.json", report);
    write_text(out / "report.txt", format_report(report));
    if (config.exports.spectra_csv) {
        ensure_dir(out / "spectra");
        const WavelengthGrid& grid = o.fused.cube.grid();
        for (const auto& row : report["spectral"]["regions"]) {
            if (!row.contains("mean_estimate")) continue;
            const std::string stem = "region_" + std::to_string(row["label"].get<int>());
            io::write_spectrum_csv(out / "spectra" / (stem + "_estimate.csv"), grid,
                                   row["mean_estimate"].get<std::vector<double>>());
            io::write_spectrum_csv(out / "spectra" / (stem + "_truth.csv"), grid,
                                   row["mean_truth"].get<std::vector<double>>());
        }
    }
    return report;
}

json cmd_pipeline(const PipelineConfig& config) {
    cmd_render(config);
    cmd_calibrate(config);
    cmd_reconstruct_depth(config);
    cmd_reconstruct_spectra(config);
    cmd_fuse(config);
    return cmd_evaluate(config);
}

}  // namespace bh3d::pipeline
