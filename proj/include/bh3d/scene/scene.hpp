#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bh3d/core/camera.hpp"
#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"
#include "bh3d/forward/gaussian_field.hpp"
#include "bh3d/forward/models.hpp"
#include "bh3d/forward/render.hpp"
#include "bh3d/fusion/fusion.hpp"

namespace bh3d::scene {

// Desk-scale defaults: 96x96 cameras, 10 cm baseline, converging at 0.55 m.
inline constexpr int kDefaultImageSize = 96;
inline constexpr double kDefaultFocalPx = 240.0;
inline constexpr double kDefaultBaselineM = 0.10;
inline constexpr double kDefaultConvergenceM = 0.55;

CameraRig default_rig(int image_size = kDefaultImageSize);
forward::IlluminantModel default_illuminant();
/// Silicon-like VNIR and InGaAs-like SWIR curves, 12-bit saturation, exposures {1, 4, 16}, 1% noise.
forward::SensorModel default_sensor();
/// Union of the default camera grids.
WavelengthGrid master_grid();

nlohmann::json rig_to_json(const CameraRig& rig);
CameraRig rig_from_json(const nlohmann::json& j);

/// Ground-truth dispersion field of the simulated projector as seen by one camera of `rig`,
/// tabulated on a 5 x 5 x 3 x 8 lattice spanning the image, 0.45-0.65 m and the camera grid.
/// `refine` > 1 subdivides every lattice cell that many times.
forward::GaussianField projector_field(const CameraRig& rig, CameraTag camera, const WavelengthGrid& grid,
                                       int refine = 1);

/// Axis-aligned fronto-parallel rectangle at depth z in the VNIR frame.
struct Facet {
    double depth = 0.0;
    double x0 = 0.0, x1 = 0.0;
    double y0 = 0.0, y1 = 0.0;
    int label = 0;
};

/// Surface material: spectrum on the master grid, optionally modulated by achromatic texture.
struct Material {
    std::vector<double> reflectance;
    bool textured = true;
};

/// Synthetic scene with analytic per-view ground truth on the master grid.
struct Scene {
    std::string name;
    std::uint64_t seed = 0;
    CameraRig rig;
    WavelengthGrid grid;
    std::vector<Facet> facets;
    std::vector<Material> materials;  ///< indexed by label
    SpectralCube vnir_cube;
    SpectralCube swir_cube;
    DepthMap vnir_depth;
    DepthMap swir_depth;
    std::vector<int> vnir_labels;  ///< -1 where no facet is hit
    std::vector<int> swir_labels;
    std::optional<fusion::ChromaticBlurModel> blur;

    const SpectralCube& cube(CameraTag camera) const { return camera == CameraTag::SWIR ? swir_cube : vnir_cube; }
    const DepthMap& depth(CameraTag camera) const { return camera == CameraTag::SWIR ? swir_depth : vnir_depth; }
    void validate() const;
};

/// Ray-casts the facets into both rig views. Reflectance is clamped to [0, 1].
Scene build_scene(std::string name, std::uint64_t seed, const CameraRig& rig, const WavelengthGrid& grid,
                  std::vector<Facet> facets, std::vector<Material> materials);

/// Achromatic texture multiplier in [0.5, 1] at a VNIR-frame surface point.
double texture_multiplier(std::uint64_t seed, double x, double y);

struct StaircaseOptions {
    int levels = 5;
    double step_height_m = 0.020;
    double base_depth_m = 0.50;
    double band_height_m = 0.03;
    double reflectance = 0.8;
    std::uint64_t seed = 1;
};
/// Levels stacked along y; level k (label k, from 0) sits at base + k * step. The outer levels fill the view.
Scene make_staircase_scene(const CameraRig& rig, const StaircaseOptions& options = {});

struct PatchChartOptions {
    int rows = 4;
    int cols = 6;
    double depth_m = 0.55;
    double patch_m = 0.028;
    double pitch_m = 0.034;
    std::uint64_t seed = 7;
    /// Disables smoothness: independent per-band values instead of Gaussian bumps.
    bool rough = false;
};
/// Patches carry labels 1..rows*cols in row-major order; label 0 is the gray frame.
Scene make_patch_chart_scene(const CameraRig& rig, const PatchChartOptions& options = {});
/// The generator's patch spectra on `grid` (same seed gives the same spectra).
std::vector<std::vector<double>> patch_spectra(const WavelengthGrid& grid, int count, std::uint64_t seed, bool rough);

struct TwoMaterialSpectra {
    std::vector<double> a;
    std::vector<double> b;
};
/// Flat A and B = A with a SWIR slope and a deep 1450 nm absorption.
TwoMaterialSpectra default_two_material_spectra(const WavelengthGrid& grid);

/// Visible SAM < 0.02, full SAM > 0.15, |A - B| >= 0.3 at 1450 nm; throws ValidationError otherwise.
void check_two_material_contrast(const WavelengthGrid& grid, const TwoMaterialSpectra& spectra);

enum class SplitLayout { LeftRight, TopBottom };

/// Plane at `depth_m`; label 1 (material A) on the left / top, label 2 (B) on the right / bottom.
Scene make_two_material_scene(const CameraRig& rig, const TwoMaterialSpectra& spectra,
                              SplitLayout layout = SplitLayout::LeftRight, double depth_m = 0.55,
                              std::uint64_t seed = 3);

/// Untextured rho = 0.99 reflectance standard filling the view.
Scene make_spectralon_scene(const CameraRig& rig, double depth_m = 0.55, double reflectance = 0.99);

/// Everything needed to render captures.
struct RenderSetup {
    forward::GaussianField vnir_field;
    forward::GaussianField swir_field;
    forward::IlluminantModel illuminant;
    forward::SensorModel sensor;
    WavelengthGrid vnir_grid = WavelengthGrid::vnir_default();
    WavelengthGrid swir_grid = WavelengthGrid::swir_default();
    std::vector<double> angles = ScanStack::default_angles();
    std::uint64_t noise_seed = 11;

    /// Default illuminant/sensor and projector fields for `rig`.
    static RenderSetup defaults(const CameraRig& rig);
    const forward::GaussianField& field(CameraTag camera) const {
        return camera == CameraTag::SWIR ? swir_field : vnir_field;
    }
    const WavelengthGrid& grid(CameraTag camera) const { return camera == CameraTag::SWIR ? swir_grid : vnir_grid; }
};

struct CameraCaptures {
    std::vector<forward::Capture> raw;
    ScanStack hdr;
};

struct RenderedDataset {
    CameraCaptures vnir;
    CameraCaptures swir;
    const CameraCaptures& captures(CameraTag camera) const { return camera == CameraTag::SWIR ? swir : vnir; }
};

/// Scene cube resampled onto a camera grid.
SpectralCube camera_cube(const Scene& scene, CameraTag camera, const WavelengthGrid& grid);

/// Renders both cameras at every sensor exposure with the sensor's noise, then HDR-fuses.
/// When the scene carries a blur model, each camera cube is blurred band-wise before rendering.
RenderedDataset render_captures(const Scene& scene, const RenderSetup& setup);

struct DatasetFiles {
    std::filesystem::path manifest;
    nlohmann::json json;
};

/// Writes raw and HDR stacks, ground truth, fields, responses and a manifest to `out_dir`.
DatasetFiles render_dataset(const Scene& scene, const RenderSetup& setup, const std::filesystem::path& out_dir);

}  // namespace bh3d::scene
