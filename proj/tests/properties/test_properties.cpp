#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "../support.hpp"
#include "bh3d/depth/depth.hpp"
#include "bh3d/forward/render.hpp"
#include "bh3d/fusion/fusion.hpp"
#include "bh3d/recon/reconstruction.hpp"

using namespace bh3d;
using doctest::Approx;

namespace {

constexpr int kTrials = 200;

Image noise_image(std::mt19937_64& rng, int w, int h) {
    Image img(w, h);
    img.data = testing::uniform_vector(rng, img.data.size(), 0.0, 1.0);
    return img;
}

WavelengthGrid random_grid(std::mt19937_64& rng, double lo, double hi, CameraTag tag) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> bands(2 + rng() % 12);
    for (double& b : bands) b = std::round(u(rng) * 4.0) / 4.0;
    std::sort(bands.begin(), bands.end());
    bands.erase(std::unique(bands.begin(), bands.end()), bands.end());
    return WavelengthGrid(bands, tag);
}

}  // namespace

TEST_CASE("census matching is invariant to strictly increasing intensity maps") {
    std::mt19937_64 rng(101);
    for (int t = 0; t < 20; ++t) {
        const Image left = noise_image(rng, 40, 24);
        Image right(40, 24);
        const int k = 1 + static_cast<int>(rng() % 4);
        for (int y = 0; y < 24; ++y)
            for (int x = 0; x < 40; ++x) right.at(x, y) = left.at(std::min(39, x + k), y);
        depth::StereoParams p;
        p.min_shift = -6;
        p.max_shift = 6;
        const auto base = depth::match_stereo(left, right, p);
        const double gain = 0.5 + (rng() % 100) / 50.0;
        Image l2 = left, r2 = right;
        for (double& v : l2.data) v = gain * v * v * v + 0.3;
        for (double& v : r2.data) v = gain * v * v * v + 0.3;
        const auto mapped = depth::match_stereo(l2, r2, p);
        CHECK(mapped.valid == base.valid);
        CHECK(mapped.disparity == base.disparity);
    }
}

TEST_CASE("max projection dominates mean projection") {
    std::mt19937_64 rng(102);
    for (int t = 0; t < kTrials; ++t) {
        ScanStack s(5, 4, {-1.0, 0.0, 1.0, 2.0}, CameraTag::VNIR);
        s.data() = testing::uniform_vector(rng, s.data().size(), -1.0, 1.0);
        const auto mx = depth::max_project(s), mn = depth::mean_project(s);
        for (std::size_t i = 0; i < mx.data.size(); ++i) CHECK(mx.data[i] >= mn.data[i]);
    }
}

TEST_CASE("field interpolation is exact on the lattice") {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    for (int t = 0; t < kTrials; ++t) {
        forward::FieldAxes axes;
        axes.x = {0.0, 10.0, 25.0};
        axes.y = {0.0, 7.0};
        axes.depth = {0.4, 0.5, 0.65};
        const auto lambdas = random_grid(rng, 450, 890, CameraTag::VNIR);
        axes.wavelength.assign(lambdas.bands().begin(), lambdas.bands().end());
        std::vector<double> mu, sigma;
        const std::size_t n = axes.x.size() * axes.y.size() * axes.depth.size() * axes.wavelength.size();
        for (std::size_t i = 0; i < n; ++i) {
            mu.push_back(u(rng) * 10.0 - 10.0);
            sigma.push_back(u(rng));
        }
        const forward::GaussianField field(axes, mu, sigma);
        std::size_t i = 0;
        for (double x : axes.x)
            for (double y : axes.y)
                for (double z : axes.depth)
                    for (double l : axes.wavelength) {
                        const auto g = field.sample(x, y, z, l);
                        CHECK(g.mu == mu[i]);
                        CHECK(g.sigma == sigma[i]);
                        ++i;
                    }
    }
}

TEST_CASE("guided filter preserves constant inputs") {
    std::mt19937_64 rng(104);
    for (int t = 0; t < kTrials; ++t) {
        const Image guide = noise_image(rng, 17, 13);
        const double c = (rng() % 1000) / 100.0;
        Image input(17, 13);
        std::fill(input.data.begin(), input.data.end(), c);
        const auto out = fusion::guided_filter(input, guide, 1 + static_cast<int>(rng() % 5), 1e-3);
        for (double v : out.data) CHECK(v == Approx(c).epsilon(1e-9));
    }
}

TEST_CASE("hdr fusion of unsaturated captures returns the radiance") {
    std::mt19937_64 rng(105);
    for (int t = 0; t < kTrials; ++t) {
        ScanStack radiance(3, 3, {-1.0, 0.0, 1.0}, CameraTag::SWIR);
        radiance.data() = testing::uniform_vector(rng, radiance.data().size(), 0.05, 0.2);
        std::vector<forward::Capture> captures;
        for (double e : {1.0, 2.0, 4.0}) captures.push_back({forward::simulate_capture(radiance, {e, 0.0, 1.0, 0}), e});
        const auto fused = forward::hdr_fuse(captures, 1.0);
        for (std::size_t i = 0; i < fused.data().size(); ++i) CHECK(fused.data()[i] == Approx(radiance.data()[i]).epsilon(1e-12));
    }
}

TEST_CASE("reconstruction loss never increases") {
    std::mt19937_64 rng(106);
    const auto grid = WavelengthGrid::uniform(450, 890, 40, CameraTag::VNIR);
    const auto field = testing::simple_field(6, 5, 450, 890, -15, 15, 0.8);
    for (int t = 0; t < 30; ++t) {
        SpectralCube truth(6, 5, grid);
        truth.data() = testing::uniform_vector(rng, truth.data().size(), 0.0, 1.0);
        const auto depth = DepthMap::constant(6, 5, 0.5);
        const auto response = forward::RadiometricResponse::from_models(grid, {}, testing::unit_sensor());
        auto stack = forward::render_scan_stack(truth, depth, field, response, ScanStack::default_angles());
        for (double& v : stack.data()) v *= 1.0 + 0.02 * (static_cast<double>(rng() % 200) / 100.0 - 1.0);
        recon::ReconConfig cfg;
        cfg.max_iterations = 150;
        cfg.lambda_spatial = 0.05 * (t % 3);
        const auto r = recon::reconstruct_reflectance(stack, depth, field, response, cfg);
        for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1] + 1e-9);
    }
}

TEST_CASE("disparity and depth conversions are inverse") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> z(0.3, 2.0), f(100, 1000), b(0.02, 0.5), off(-20, 20);
    for (int t = 0; t < kTrials; ++t) {
        DepthMap d(8, 1);
        for (int x = 0; x < 8; ++x) d.set(x, 0, z(rng));
        const double fp = f(rng), bl = b(rng), o = off(rng);
        const auto back = depth::disparity_to_depth(depth::depth_to_disparity(d, fp, bl, o), fp, bl, o);
        for (int x = 0; x < 8; ++x) CHECK(back.at(x, 0) == Approx(d.at(x, 0)).epsilon(1e-12));
    }
}

TEST_CASE("merged grids are strictly increasing for every rule") {
    std::mt19937_64 rng(108);
    for (int t = 0; t < kTrials; ++t) {
        const auto vnir = random_grid(rng, 450, 890, CameraTag::VNIR);
        const auto swir = random_grid(rng, 875, 1500, CameraTag::SWIR);
        for (auto rule : {fusion::MergeRule::PreferVnirBelow875, fusion::MergeRule::PreferSwirAbove890, fusion::MergeRule::Blend}) {
            const auto plan = fusion::plan_merge(vnir, swir, rule);
            for (std::size_t i = 1; i < plan.grid.size(); ++i) CHECK(plan.grid[i] > plan.grid[i - 1]);
        }
    }
}

TEST_CASE("sharpening leaves guide bands untouched") {
    std::mt19937_64 rng(109);
    const auto plan = fusion::plan_merge(WavelengthGrid::vnir_default(), WavelengthGrid::swir_default(),
                                         fusion::MergeRule::PreferVnirBelow875);
    fusion::FusionConfig cfg;
    for (int t = 0; t < 20; ++t) {
        SpectralCube cube(12, 10, plan.grid);
        cube.data() = testing::uniform_vector(rng, cube.data().size(), 0.0, 1.0);
        const auto out = fusion::guided_sharpen(cube, cfg);
        for (std::size_t b = 0; b < plan.grid.size(); ++b) {
            if (!cfg.guide_for(plan.grid.band_source(b)).contains(plan.grid[b])) continue;
            for (int y = 0; y < 10; ++y)
                for (int x = 0; x < 12; ++x) CHECK(out.at(x, y, b) == cube.at(x, y, b));
        }
    }
}

TEST_CASE("alignment between co-located identical cameras is the identity") {
    std::mt19937_64 rng(110);
    CameraRig rig;
    rig.vnir = {60.0, 60.0, 9.5, 7.5, 20, 16};
    rig.swir = rig.vnir;
    const auto grid = WavelengthGrid::uniform(900, 1100, 50, CameraTag::SWIR);
    for (int t = 0; t < 20; ++t) {
        SpectralCube swir(20, 16, grid);
        swir.data() = testing::uniform_vector(rng, swir.data().size(), 0.0, 1.0);
        const auto d = DepthMap::constant(20, 16, 0.4 + 0.1 * t);
        const auto out = fusion::align_swir_to_vnir(swir, d, d, rig, {});
        for (std::size_t p = 0; p < swir.pixel_count(); ++p) {
            CHECK(out.valid()[p]);
            for (std::size_t b = 0; b < grid.size(); ++b) CHECK(out.spectrum(p)[b] == Approx(swir.spectrum(p)[b]).epsilon(1e-9));
        }
    }
}
