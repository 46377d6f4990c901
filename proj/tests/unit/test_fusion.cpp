#include <doctest.h>

#include <cmath>
#include <random>

#include "bh3d/core/error.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/fusion/fusion.hpp"

using namespace bh3d;
using namespace bh3d::fusion;
using doctest::Approx;

namespace {

PinholeCamera camera(int w, int h) { return {240.0, 240.0, 0.5 * (w - 1), 0.5 * (h - 1), w, h}; }

CameraRig x_baseline_rig(int w, int h, double baseline) {
    CameraRig rig;
    rig.vnir = camera(w, h);
    rig.swir = camera(w, h);
    rig.swir_from_vnir = {Mat3::Identity(), Vec3(-baseline, 0, 0)};
    return rig;
}

// Spectrum linear in x and y, so bilinear resampling is exact.
SpectralCube linear_cube(int w, int h, const WavelengthGrid& grid) {
    SpectralCube c(w, h, grid);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (std::size_t b = 0; b < grid.size(); ++b) c.at(x, y, b) = 0.01 * x + 0.02 * y + 0.001 * grid[b];
    return c;
}

Image step_image(int w, int h, int edge, double lo, double hi) {
    Image img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x < edge ? lo : hi;
    return img;
}

double max_gradient(const Image& img, int y) {
    double g = 0.0;
    for (int x = 1; x < img.width; ++x) g = std::max(g, std::abs(img.at(x, y) - img.at(x - 1, y)));
    return g;
}

}  // namespace

TEST_CASE("alignment with co-located cameras is the identity") {
    const int w = 20, h = 14;
    CameraRig rig;
    rig.vnir = rig.swir = camera(w, h);
    const auto swir = linear_cube(w, h, WavelengthGrid::swir_default());
    const auto z = DepthMap::constant(w, h, 0.6);
    const auto out = align_swir_to_vnir(swir, z, z, rig, FusionConfig{});
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        REQUIRE(out.valid()[p] == 1);
        for (std::size_t b = 0; b < out.bands(); ++b) CHECK(out.spectrum(p)[b] == Approx(swir.spectrum(p)[b]).epsilon(1e-12));
    }
}

TEST_CASE("fronto-parallel plane aligns to a constant shift") {
    const int w = 80, h = 20;
    const double baseline = 0.1, z0 = 0.64;
    const double shift = 240.0 * baseline / z0;  // 37.5 px
    const auto rig = x_baseline_rig(w, h, baseline);
    const auto swir = linear_cube(w, h, WavelengthGrid::swir_default());
    const auto z = DepthMap::constant(w, h, z0);
    const auto out = align_swir_to_vnir(swir, z, z, rig, FusionConfig{});
    int checked = 0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double u = x - shift;
            const bool inside = u >= 0.0 && u <= w - 1;
            CHECK(out.valid()[out.pixel_index(x, y)] == (inside ? 1 : 0));
            if (!inside) continue;
            for (std::size_t b = 0; b < out.bands(); ++b) {
                const double truth = 0.01 * u + 0.02 * y + 0.001 * swir.grid()[b];
                CHECK(std::abs(out.at(x, y, b) - truth) < 1e-6);
            }
            ++checked;
        }
    CHECK(checked > 500);
}

TEST_CASE("an occluder seen only by SWIR invalidates exactly its footprint") {
    const int w = 100, h = 10;
    const double baseline = 0.125, z0 = 0.5;  // 60 px shift
    const auto rig = x_baseline_rig(w, h, baseline);
    const auto swir = linear_cube(w, h, WavelengthGrid::swir_default());
    const auto zv = DepthMap::constant(w, h, z0);
    auto zs = DepthMap::constant(w, h, z0);
    const int a = 10, b = 19;
    for (int y = 0; y < h; ++y)
        for (int x = a; x <= b; ++x) zs.set(x, y, 0.3);
    const auto out = align_swir_to_vnir(swir, zv, zs, rig, FusionConfig{});
    for (int y = 0; y < h; ++y)
        for (int x = 60; x < w; ++x) {
            const long u = std::lround(x - 60.0);
            const bool occluded = u >= a && u <= b;
            CHECK(out.valid()[out.pixel_index(x, y)] == (occluded ? 0 : 1));
        }
}

TEST_CASE("merge plans") {
    const auto plan = plan_merge(WavelengthGrid::vnir_default(), WavelengthGrid::swir_default(), MergeRule::PreferVnirBelow875);
    CHECK(plan.grid.size() == 48);
    CHECK(plan.grid[21] == 870.0);
    CHECK(plan.grid[22] == 875.0);
    CHECK(plan.grid.back() == 1500.0);
    CHECK(plan.grid.band_source(21) == CameraTag::VNIR);
    CHECK(plan.grid.band_source(22) == CameraTag::SWIR);
    for (std::size_t i = 1; i < plan.grid.size(); ++i) CHECK(plan.grid[i] > plan.grid[i - 1]);

    const auto swir_rule = plan_merge(WavelengthGrid::vnir_default(), WavelengthGrid::swir_default(), MergeRule::PreferSwirAbove890);
    CHECK(swir_rule.grid.size() == 23 + 25);
    CHECK(swir_rule.grid[22] == 890.0);
    CHECK(swir_rule.grid[23] == 900.0);

    const auto disjoint = plan_merge(WavelengthGrid::uniform(450, 850, 50, CameraTag::VNIR),
                                     WavelengthGrid::uniform(900, 1500, 100, CameraTag::SWIR), MergeRule::PreferVnirBelow875);
    CHECK(disjoint.grid.size() == 9 + 7);
    for (std::size_t i = 0; i < 9; ++i) CHECK(disjoint.vnir_index[i] == i);
    for (std::size_t i = 0; i < 7; ++i) CHECK(disjoint.swir_index[9 + i] == i);
}

TEST_CASE("merged cube keeps VNIR bands where SWIR alignment failed") {
    const int w = 4, h = 3;
    const auto vnir = linear_cube(w, h, WavelengthGrid::vnir_default());
    auto swir = linear_cube(w, h, WavelengthGrid::swir_default());
    swir.valid()[5] = 0;
    const auto fused = merge_cubes(vnir, swir, FusionConfig{});
    CHECK(fused.cube.bands() == 48);
    CHECK(fused.swir_valid[5] == 0);
    CHECK(fused.swir_valid[4] == 1);
    CHECK(fused.cube.valid()[5] == 1);
    for (std::size_t b = 0; b < 22; ++b) {
        CHECK(fused.cube.at(2, 1, b) == vnir.at(2, 1, b));
        CHECK(fused.cube.at(1, 1, b) == vnir.at(1, 1, b));
    }
    for (std::size_t b = 22; b < 48; ++b) CHECK(fused.cube.at(2, 1, b) == swir.at(2, 1, b - 22));
}

TEST_CASE("guided filter identities") {
    std::mt19937_64 rng(1);
    Image img(24, 18);
    for (double& v : img.data) v = std::uniform_real_distribution<double>(0, 1)(rng);
    const auto self = guided_filter(img, img, 4, 1e-12);
    for (std::size_t i = 0; i < img.data.size(); ++i) CHECK(std::abs(self.data[i] - img.data[i]) < 1e-6);

    const Image constant(24, 18, 0.37);
    const auto c = guided_filter(constant, img, 3, 1e-3);
    for (double v : c.data) CHECK(v == Approx(0.37).epsilon(1e-12));
}

TEST_CASE("guided filter sharpens a blurred step against a sharp guide") {
    const auto guide = step_image(40, 9, 20, 0.2, 0.8);
    const auto blurred = gaussian_blur(step_image(40, 9, 20, 0.1, 0.5), 2.0);
    const auto out = guided_filter(blurred, guide, 4, 1e-3);
    CHECK(max_gradient(out, 4) > max_gradient(blurred, 4));
}

TEST_CASE("gaussian blur") {
    const auto img = step_image(10, 4, 5, 0, 1);
    CHECK(gaussian_blur(img, 0.0).data == img.data);
    const auto b = gaussian_blur(img, 1.5);
    double sum_in = 0, sum_out = 0;
    for (double v : img.data) sum_in += v;
    for (double v : b.data) sum_out += v;
    CHECK(sum_out == Approx(sum_in).epsilon(1e-12));
}

TEST_CASE("chromatic blur is zero on guide bands and grows away from them") {
    const ChromaticBlurModel blur(1.0, 0.01, {510, 850}, {950, 1200});
    CHECK(blur.sigma(600, CameraTag::VNIR) == 0.0);
    CHECK(blur.sigma(1000, CameraTag::SWIR) == 0.0);
    CHECK(blur.sigma(490, CameraTag::VNIR) > 0.0);
    CHECK(blur.sigma(450, CameraTag::VNIR) > blur.sigma(490, CameraTag::VNIR));
    CHECK(blur.sigma(1500, CameraTag::SWIR) > blur.sigma(1300, CameraTag::SWIR));
    CHECK_THROWS_AS(blur.sigma(600, CameraTag::FUSED), ContractError);
}

TEST_CASE("nearest guide band") {
    const auto vnir = WavelengthGrid::vnir_default();
    const FusionConfig cfg;
    CHECK(vnir[nearest_guide_band(vnir, 470, cfg.vnir_guide, CameraTag::VNIR)] == 510.0);
    CHECK(vnir[nearest_guide_band(vnir, 890, cfg.vnir_guide, CameraTag::VNIR)] == 850.0);
    const WavelengthGrid two({510, 530}, CameraTag::VNIR);
    CHECK(nearest_guide_band(two, 520, {500, 540}, CameraTag::VNIR) == 0);
    const auto swir = WavelengthGrid::swir_default();
    CHECK(swir[nearest_guide_band(swir, 1500, cfg.swir_guide, CameraTag::SWIR)] == 1200.0);
    CHECK_THROWS_AS(nearest_guide_band(WavelengthGrid({450, 470}, CameraTag::VNIR), 460, cfg.vnir_guide, CameraTag::VNIR),
                    ConfigError);
}

TEST_CASE("guided sharpening passes guide bands through and reduces blur elsewhere") {
    const int w = 32, h = 32;
    const auto vnir = WavelengthGrid::vnir_default();
    const auto swir = WavelengthGrid::swir_default();
    const auto grid = plan_merge(vnir, swir, MergeRule::PreferVnirBelow875).grid;
    // Shared geometry with a band-dependent contrast, as for a textured chart.
    SpectralCube sharp(w, h, grid);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const bool in_square = x >= 8 && x < 24 && y >= 10 && y < 22;
            for (std::size_t b = 0; b < grid.size(); ++b)
                sharp.at(x, y, b) = in_square ? 0.2 + 0.1 * grid[b] / 1500.0 : 0.8 - 0.1 * grid[b] / 1500.0;
        }
    const FusionConfig cfg;
    const ChromaticBlurModel blur(1.0, 0.01, cfg.vnir_guide, cfg.swir_guide);
    const auto blurred = blur.apply(sharp);
    const auto out = guided_sharpen(blurred, cfg);
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const auto src = grid.band_source(b);
        const auto before = rmse(blurred.band_image(b).data, sharp.band_image(b).data);
        const auto after = rmse(out.band_image(b).data, sharp.band_image(b).data);
        if (cfg.guide_for(src).contains(grid[b])) {
            CHECK(out.band_image(b).data == blurred.band_image(b).data);
        } else {
            CHECK(after < before);
        }
    }
}

TEST_CASE("sharpening a grid disjoint from its guide set is a config error") {
    const SpectralCube cube(4, 4, WavelengthGrid({450, 470, 490}, CameraTag::VNIR), 0.5);
    CHECK_THROWS_AS(guided_sharpen(cube, FusionConfig{}), ConfigError);
}

TEST_CASE("fusion config round trip and validation") {
    FusionConfig c;
    c.merge_rule = MergeRule::Blend;
    c.guided_radius = 2;
    const auto back = FusionConfig::from_json(c.to_json());
    CHECK(back.merge_rule == MergeRule::Blend);
    CHECK(back.guided_radius == 2);
    c.ghost_threshold_m = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(merge_rule_from_string("closest"), ConfigError);
}
