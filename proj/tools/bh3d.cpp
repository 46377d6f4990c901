#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bh3d/core/error.hpp"
#include "bh3d/pipeline/pipeline.hpp"

using nlohmann::json;
namespace pl = bh3d::pipeline;

namespace {

// "a.b.c=value": value parsed as JSON when possible, else taken as a string.
void apply_assignment(json& config, const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) throw bh3d::ConfigError("--set expects key.path=value, got '" + text + "'");
    std::string pointer = "/" + text.substr(0, eq);
    for (char& c : pointer) {
        if (c == '.') c = '/';
    }
    const std::string raw = text.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    config[json::json_pointer(pointer)] = value;
}

json load_base(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw bh3d::IoError("cannot open config " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw bh3d::ConfigError("config " + path + " is not valid JSON");
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Broadband hyperspectral 3D imaging: simulation, calibration, reconstruction and fusion"};
    app.fallthrough();

    std::string config_path;
    bool print_config = false;
    std::optional<int> threads;
    std::optional<std::string> dataset, calibration, output, scene, merge_rule;
    std::optional<std::uint64_t> seed;
    std::optional<int> image_size, max_iterations;
    std::optional<double> noise;
    std::vector<double> exposures;
    std::vector<std::string> assignments;

    app.add_option("-c,--config", config_path, "JSON config file (defaults for anything it omits)");
    app.add_flag("--print-config", print_config, "Print the effective config and exit");
    app.add_option("--threads", threads, "Worker threads (default: BH3D_THREADS or all cores)");
    app.add_option("--dataset", dataset, "paths.dataset");
    app.add_option("--calibration", calibration, "paths.calibration");
    app.add_option("--output", output, "paths.output");
    app.add_option("--seed", seed, "Noise seed");
    app.add_option("--scene", scene, "scene.kind: patch-chart, staircase, two-material, spectralon");
    app.add_option("--image-size", image_size, "scene.image_size");
    app.add_option("--noise", noise, "sensor.noise_fraction");
    app.add_option("--exposures", exposures, "sensor.exposures")->delimiter(',');
    app.add_option("--max-iterations", max_iterations, "reconstruction.max_iterations");
    app.add_option("--merge-rule", merge_rule, "fusion.merge_rule");
    app.add_option("--set", assignments, "Override any config key, e.g. --set stereo.aggregate_radius=2");

    const std::vector<std::pair<std::string, std::string>> commands{
        {"render", "Render a synthetic dataset with ground truth"},
        {"calibrate", "Calibrate dispersion field and radiometric response from simulated sweeps"},
        {"reconstruct-depth", "Stereo depth from the max-projected scans"},
        {"reconstruct-spectra", "Per-camera reflectance reconstruction"},
        {"fuse", "Align, merge and sharpen the camera cubes; export PNGs"},
        {"evaluate", "Score outputs against ground truth"},
        {"pipeline", "Run every stage in order"}};
    for (const auto& [name, help] : commands) app.add_subcommand(name, help);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        json j = load_base(config_path);
        if (dataset) j["paths"]["dataset"] = *dataset;
        if (calibration) j["paths"]["calibration"] = *calibration;
        if (output) j["paths"]["output"] = *output;
        if (seed) j["seed"] = *seed;
        if (scene) j["scene"]["kind"] = *scene;
        if (image_size) j["scene"]["image_size"] = *image_size;
        if (noise) j["sensor"]["noise_fraction"] = *noise;
        if (!exposures.empty()) j["sensor"]["exposures"] = exposures;
        if (max_iterations) j["reconstruction"]["max_iterations"] = *max_iterations;
        if (merge_rule) j["fusion"]["merge_rule"] = *merge_rule;
        for (const auto& a : assignments) apply_assignment(j, a);
        if (threads) {
            j["threads"] = *threads;
        } else if (!j.contains("threads")) {
            if (const char* env = std::getenv("BH3D_THREADS")) {
                try {
                    j["threads"] = std::stoi(env);
                } catch (const std::exception&) {
                    throw bh3d::ConfigError(std::string("BH3D_THREADS is not an integer: ") + env);
                }
            }
        }
        const pl::PipelineConfig config = pl::PipelineConfig::from_json(j);

        if (print_config) {
            std::cout << config.to_json().dump(2) << '\n';
            return 0;
        }
        const auto subs = app.get_subcommands();
        if (subs.empty()) {
            std::cerr << "no command given\n" << app.help();
            return 2;
        }
        const std::string cmd = subs.front()->get_name();
        if (cmd == "render") {
            const auto files = pl::cmd_render(config);
            std::cout << "dataset written: " << files.manifest.string() << '\n';
        } else if (cmd == "calibrate") {
            pl::cmd_calibrate(config);
            std::cout << "calibration written to " << config.calibration_dir.string() << '\n';
        } else if (cmd == "reconstruct-depth") {
            const auto r = pl::cmd_reconstruct_depth(config);
            std::cout << "depth: " << r.vnir_depth.valid_count() << " VNIR / " << r.swir_depth.valid_count()
                      << " SWIR valid pixels\n";
        } else if (cmd == "reconstruct-spectra") {
            const auto r = pl::cmd_reconstruct_spectra(config);
            std::cout << "spectra: VNIR " << r.vnir.iterations << " iterations, SWIR " << r.swir.iterations
                      << " iterations\n";
        } else if (cmd == "fuse") {
            const auto r = pl::cmd_fuse(config);
            std::cout << "fused cube: " << r.fused.cube.bands() << " bands\n";
        } else if (cmd == "evaluate") {
            std::cout << pl::format_report(pl::cmd_evaluate(config));
        } else if (cmd == "pipeline") {
            std::cout << pl::format_report(pl::cmd_pipeline(config));
        }
        return 0;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const bh3d::NumericalError& e) {
        std::cerr << "error: " << e.what() << " (iteration " << e.iteration() << ", residual " << e.residual() << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pl::exit_code(e);
    }
}
