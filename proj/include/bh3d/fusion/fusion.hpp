#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bh3d/core/camera.hpp"
#include "bh3d/core/image.hpp"
#include "bh3d/core/wavelength_grid.hpp"

namespace bh3d::fusion {

/// How the VNIR/SWIR overlap around 875-890 nm is resolved.
enum class MergeRule {
    PreferVnirBelow875,  ///< VNIR bands below the first SWIR band, then every SWIR band
    PreferSwirAbove890,  ///< every VNIR band, then SWIR bands above the last VNIR band
    Blend,               ///< SWIR bands in the overlap averaged with interpolated VNIR; VNIR overlap bands dropped
};

std::string_view to_string(MergeRule rule);
MergeRule merge_rule_from_string(std::string_view name);

/// Closed wavelength interval [lo, hi] in nm.
struct GuideRange {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double lambda) const { return lambda >= lo && lambda <= hi; }
    double distance(double lambda) const { return lambda < lo ? lo - lambda : (lambda > hi ? lambda - hi : 0.0); }
};

struct FusionConfig {
    double ghost_threshold_m = 0.005;
    MergeRule merge_rule = MergeRule::PreferVnirBelow875;
    int guided_radius = 4;
    double guided_eps = 1e-3;
    GuideRange vnir_guide{510.0, 850.0};
    GuideRange swir_guide{950.0, 1200.0};

    void validate() const;
    const GuideRange& guide_for(CameraTag source) const;
    nlohmann::json to_json() const;
    static FusionConfig from_json(const nlohmann::json& j);
};

/**
 * @brief Wavelength-dependent defocus: Gaussian blur with std sigma(l) in pixels.
 *
 * sigma is zero inside the band's guide set and grows linearly with the
 * distance (nm) to that set.
 */
class ChromaticBlurModel {
public:
    ChromaticBlurModel() = default;
    ChromaticBlurModel(double base_sigma_px, double slope_px_per_nm, GuideRange vnir_guide, GuideRange swir_guide);

    double sigma(double lambda, CameraTag source) const;
    /// Blurs every band of `cube` with its own sigma.
    SpectralCube apply(const SpectralCube& cube) const;

    nlohmann::json to_json() const;
    static ChromaticBlurModel from_json(const nlohmann::json& j);

private:
    double base_ = 1.0;
    double slope_ = 0.01;
    GuideRange vnir_guide_{510.0, 850.0};
    GuideRange swir_guide_{950.0, 1200.0};
};

/// Separable Gaussian blur with replicated borders; sigma = 0 returns the input unchanged.
Image gaussian_blur(const Image& image, double sigma);

/// Resamples the SWIR cube into the VNIR view by depth-guided reprojection.
/// Pixels whose predicted SWIR depth disagrees with the observed one by more than the
/// ghost threshold, or whose bilinear footprint touches an invalid pixel, are flagged invalid.
SpectralCube align_swir_to_vnir(const SpectralCube& swir, const DepthMap& depth_vnir, const DepthMap& depth_swir,
                                const CameraRig& rig, const FusionConfig& config);

/// Band selection for a merge rule; `vnir_index` / `swir_index` give each fused band's source band
/// (npos when the band does not come from that camera).
struct MergePlan {
    WavelengthGrid grid;
    std::vector<std::size_t> vnir_index;
    std::vector<std::size_t> swir_index;
};
inline constexpr std::size_t kNoBand = static_cast<std::size_t>(-1);

MergePlan plan_merge(const WavelengthGrid& vnir, const WavelengthGrid& swir, MergeRule rule);

struct FusedCube {
    SpectralCube cube;  ///< FUSED grid; `valid` follows the VNIR cube
    Mask swir_valid;    ///< SWIR bands are meaningful only where set
};

FusedCube merge_cubes(const SpectralCube& vnir, const SpectralCube& swir_aligned, const FusionConfig& config);

/// Guided filter with box windows of the given radius clipped to the image (and to `mask` when given).
/// Masked-out pixels keep their input value.
Image guided_filter(const Image& input, const Image& guide, int radius, double eps, const Mask* mask = nullptr);

/// Index of the band inside `range` nearest to `lambda` among bands of the given source (ties to the shorter).
std::size_t nearest_guide_band(const WavelengthGrid& grid, double lambda, const GuideRange& range, CameraTag source);

/// Sharpens every band outside its camera's guide set against the nearest guide band.
/// Windows only cover valid pixels: the cube's mask, or `swir_mask` for SWIR-sourced bands when given.
SpectralCube guided_sharpen(const SpectralCube& cube, const FusionConfig& config, const Mask* swir_mask = nullptr);

}  // namespace bh3d::fusion
