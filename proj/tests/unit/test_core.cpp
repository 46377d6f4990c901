#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "bh3d/core/adam.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/core/parallel.hpp"

using namespace bh3d;
using doctest::Approx;

namespace {

std::filesystem::path scratch_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "bh3d_test_core" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("spectral angle on hand-computed pairs") {
    const std::vector<double> a{0.2, 0.5, 0.9};
    CHECK(spectral_angle(a, a) == 0.0);
    CHECK(spectral_angle(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == Approx(std::numbers::pi / 2).epsilon(1e-15));
    CHECK(spectral_angle(std::vector<double>{1, 0}, std::vector<double>{1, 1}) == Approx(std::numbers::pi / 4).epsilon(1e-15));
    CHECK(spectral_angle(std::vector<double>{1, 0}, std::vector<double>{-1, 0}) == Approx(std::numbers::pi));
}

TEST_CASE("spectral angle is symmetric and scale invariant") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(7), b(7);
        for (auto& v : a) v = u(rng);
        for (auto& v : b) v = u(rng);
        const double ab = spectral_angle(a, b);
        CHECK(ab == Approx(spectral_angle(b, a)).epsilon(1e-14));
        std::vector<double> scaled = a;
        for (auto& v : scaled) v *= 3.7;
        CHECK(spectral_angle(scaled, b) == Approx(ab).epsilon(1e-12));
        CHECK(spectral_angle(a, scaled) == Approx(0.0).epsilon(1e-7));
    }
}

TEST_CASE("spectral angle rejects zero spectra and length mismatch") {
    CHECK_THROWS_AS(spectral_angle(std::vector<double>{0, 0}, std::vector<double>{1, 1}), DomainError);
    CHECK_THROWS_AS(spectral_angle(std::vector<double>{1, 0}, std::vector<double>{1, 1, 1}), ContractError);
}

TEST_CASE("rmse on hand-computed pairs") {
    const std::vector<double> a{0, 0, 0, 0}, b{1, 1, 1, 1};
    CHECK(rmse(a, a) == 0.0);
    CHECK(rmse(a, b) == 1.0);
    CHECK(rmse(std::vector<double>{0, 2}, std::vector<double>{0, 0}) == Approx(std::sqrt(2.0)));
    CHECK(rmse(a, b) == rmse(b, a));
    CHECK_THROWS_AS(rmse(a, std::vector<double>{1}), ContractError);
}

TEST_CASE("cube rmse ignores pixels invalid in either cube") {
    const auto grid = WavelengthGrid::uniform(500, 600, 50, CameraTag::VNIR);
    SpectralCube a(2, 1, grid, 0.0), b(2, 1, grid, 0.0);
    for (double& v : b.spectrum(1)) v = 100.0;
    b.valid()[1] = 0;
    CHECK(rmse(a, b) == 0.0);
}

TEST_CASE("resample spectrum") {
    const WavelengthGrid g1({500, 600}, CameraTag::VNIR);
    const WavelengthGrid mid({550}, CameraTag::VNIR);
    CHECK(resample_spectrum(std::vector<double>{0, 1}, g1, mid)[0] == 0.5);

    const auto coarse = WavelengthGrid::uniform(450, 1500, 50, CameraTag::FUSED);
    const auto fine = WavelengthGrid::uniform(450, 1500, 7, CameraTag::FUSED);
    std::vector<double> constant(coarse.size(), 0.37);
    for (double v : resample_spectrum(constant, coarse, fine)) CHECK(v == Approx(0.37).epsilon(1e-15));

    // Analytic line sampled on the coarse grid is reproduced on the fine grid.
    std::vector<double> line(coarse.size());
    for (std::size_t i = 0; i < coarse.size(); ++i) line[i] = 0.25 + 0.5 * (coarse[i] - 450.0) / 1050.0;
    const auto out = resample_spectrum(line, coarse, fine);
    double worst = 0.0;
    for (std::size_t i = 0; i < fine.size(); ++i) worst = std::max(worst, std::abs(out[i] - (0.25 + 0.5 * (fine[i] - 450.0) / 1050.0)));
    CHECK(worst < 1e-14);

    CHECK_THROWS_AS(resample_spectrum(std::vector<double>{0, 1}, g1, WavelengthGrid({650}, CameraTag::VNIR)), RangeError);
}

TEST_CASE("wavelength grids") {
    const auto vnir = WavelengthGrid::vnir_default();
    const auto swir = WavelengthGrid::swir_default();
    CHECK(vnir.size() == 23);
    CHECK(vnir.front() == 450.0);
    CHECK(vnir.back() == 890.0);
    CHECK(swir.size() == 26);
    CHECK(swir.front() == 875.0);
    CHECK(swir.back() == 1500.0);
    CHECK_THROWS_AS(WavelengthGrid({500, 490}, CameraTag::VNIR), ValidationError);
    CHECK_THROWS_AS(WavelengthGrid({500, 500}, CameraTag::VNIR), ValidationError);
    CHECK_THROWS_AS(WavelengthGrid({400, 500}, CameraTag::VNIR), ValidationError);
    CHECK_THROWS_AS(WavelengthGrid({500, 1600}, CameraTag::SWIR), ValidationError);
    CHECK_THROWS_AS(WavelengthGrid({}, CameraTag::SWIR), ValidationError);

    const auto widths = WavelengthGrid({500, 520, 560}, CameraTag::VNIR).band_widths();
    CHECK(widths[0] == Approx(10.0));
    CHECK(widths[1] == Approx(30.0));
    CHECK(widths[2] == Approx(20.0));

    const auto all = WavelengthGrid::union_of(vnir, swir, CameraTag::FUSED);
    CHECK(all.size() == 49);
    CHECK(all.find(875.0).has_value());
    CHECK_FALSE(all.find(876.0).has_value());
}

TEST_CASE("scan stack validates angles") {
    CHECK_THROWS_AS(ScanStack(2, 2, {-30.0, 0.0}, CameraTag::VNIR), ValidationError);
    CHECK_THROWS_AS(ScanStack(2, 2, {1.0, 0.0}, CameraTag::VNIR), ValidationError);
    const auto a = ScanStack::default_angles();
    CHECK(a.size() == 181);
    CHECK(a.front() == -22.5);
    CHECK(a.back() == 22.5);
}

TEST_CASE("depth map treats non-positive depth as invalid") {
    DepthMap d(2, 2);
    CHECK(d.valid_count() == 0);
    d.set(1, 1, 0.5);
    CHECK(d.valid_count() == 1);
    d.set(1, 1, -1.0);
    CHECK(d.valid_count() == 0);
    CHECK(d.at(1, 1) == DepthMap::kInvalidDepth);
}

TEST_CASE("cube, stack and depth files round trip at float32 precision") {
    const auto dir = scratch_dir("roundtrip");
    const auto grid = WavelengthGrid::uniform(450, 530, 20, CameraTag::VNIR);
    SpectralCube cube(3, 2, grid);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (double& v : cube.data()) v = u(rng);
    cube.valid()[4] = 0;
    io::write_cube(dir / "cube", cube);
    const auto back = io::read_cube(dir / "cube.json");
    CHECK(back.grid() == grid);
    CHECK(back.valid() == cube.valid());
    for (std::size_t i = 0; i < cube.data().size(); ++i) {
        CHECK(back.data()[i] == static_cast<double>(static_cast<float>(cube.data()[i])));
    }

    ScanStack stack(2, 2, {-1.0, 0.0, 1.0}, CameraTag::SWIR);
    for (double& v : stack.data()) v = u(rng);
    io::write_stack(dir / "stack", stack);
    const auto sb = io::read_stack(dir / "stack");
    CHECK(sb.tag() == CameraTag::SWIR);
    CHECK(sb.same_shape(stack));

    DepthMap d(2, 2);
    d.set(0, 0, 0.55);
    io::write_depth(dir / "depth", d);
    const auto db = io::read_depth(dir / "depth");
    CHECK(db.valid == d.valid);
    CHECK(db.depth[0] == static_cast<double>(0.55f));

    CHECK_THROWS_AS(io::read_cube(dir / "missing"), IoError);
}

TEST_CASE("monotone Adam never accepts an increase") {
    // Rosenbrock from a standard start.
    auto f = [](const std::vector<double>& x, std::vector<double>& g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        g[0] = -2.0 * a - 400.0 * x[0] * b;
        g[1] = 200.0 * b;
        return a * a + 100.0 * b * b;
    };
    AdamOptions o;
    o.learning_rate = 0.05;
    o.max_iterations = 3000;
    std::vector<double> x{-1.2, 1.0};
    const auto r = MonotoneAdam(o).minimize(x, f);
    for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1]);
    CHECK(r.loss < r.loss_history.front());
}

TEST_CASE("monotone Adam converges on an ill-conditioned quadratic") {
    auto f = [](const std::vector<double>& x, std::vector<double>& g) {
        g[0] = 2.0 * (x[0] - 3.0);
        g[1] = 200.0 * (x[1] + 1.0);
        return (x[0] - 3.0) * (x[0] - 3.0) + 100.0 * (x[1] + 1.0) * (x[1] + 1.0);
    };
    AdamOptions o;
    o.learning_rate = 0.1;
    o.max_iterations = 2000;
    std::vector<double> x{0.0, 0.0};
    const auto r = MonotoneAdam(o).minimize(x, f);
    CHECK(r.loss < 1e-6);
    CHECK(x[0] == Approx(3.0).epsilon(1e-3));
}

TEST_CASE("Adam projection keeps iterates feasible") {
    auto f = [](const std::vector<double>& x, std::vector<double>& g) {
        g[0] = 2.0 * (x[0] + 1.0);
        return (x[0] + 1.0) * (x[0] + 1.0);
    };
    std::vector<double> x{2.0};
    MonotoneAdam(AdamOptions{}).minimize(x, f, [](std::vector<double>& v) { v[0] = std::max(v[0], 0.0); });
    CHECK(x[0] == Approx(0.0).epsilon(1e-6));
}

TEST_CASE("parallel_for covers every index once") {
    std::vector<int> hits(1000, 0);
    parallel_for(0, hits.size(), [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) CHECK(h == 1);
}
