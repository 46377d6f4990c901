#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "../support.hpp"
#include "bh3d/core/error.hpp"
#include "bh3d/recon/reconstruction.hpp"

using namespace bh3d;
using namespace bh3d::recon;
using doctest::Approx;

namespace {

struct Instance {
    int width, height;
    std::size_t bands;
    std::vector<double> psi;
    std::vector<forward::SystemMatrix> s;
    std::vector<std::vector<double>> measured;
    Mask active;

    ReconstructionProblem problem() const { return {width, height, psi, s, measured, active}; }
};

Instance random_instance(int w, int h, std::size_t m, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Instance in{w, h, m, testing::uniform_vector(rng, m, 0.5, 2.0), {}, {}, Mask(static_cast<std::size_t>(w * h), 1)};
    for (int p = 0; p < w * h; ++p) {
        forward::SystemMatrix s(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
        for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = std::uniform_real_distribution<double>(0, 1)(rng);
        in.s.push_back(s);
        in.measured.push_back(testing::uniform_vector(rng, n, 0, 2));
    }
    return in;
}

ReconConfig unregularized() {
    ReconConfig c;
    c.lambda_spectral = 0.0;
    c.lambda_spatial = 0.0;
    return c;
}

}  // namespace

TEST_CASE("loss vanishes at an exact constant solution") {
    auto in = random_instance(3, 2, 4, 6, 1);
    const std::vector<double> flat(4, 0.4);
    for (std::size_t p = 0; p < in.s.size(); ++p) {
        const auto v = forward::render_intensity_vector(in.s[p], flat);
        in.measured[p].assign(v.data(), v.data() + v.size());
    }
    const auto problem = in.problem();
    std::vector<double> h(6 * 4, 0.4);
    CHECK(std::abs(problem.loss(h, nullptr, ReconConfig{})) < 1e-10);
}

TEST_CASE("analytic gradient matches central differences") {
    const auto problem = random_instance(4, 4, 3, 7, 2).problem();
    ReconConfig c;
    c.lambda_spectral = 0.7;
    c.lambda_spatial = 0.4;
    c.tv_epsilon = 1e-2;
    std::mt19937_64 rng(3);
    const auto h = testing::uniform_vector(rng, 4 * 4 * 3, 0, 1);
    std::vector<double> grad;
    problem.loss(h, &grad, c);
    double worst = 0.0;
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double step = 1e-6;
        auto hp = h, hm = h;
        hp[k] += step;
        hm[k] -= step;
        const double fd = (problem.loss(hp, nullptr, c) - problem.loss(hm, nullptr, c)) / (2 * step);
        worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("doubling the response halves the regularizer") {
    auto in = random_instance(3, 3, 4, 5, 4);
    std::mt19937_64 rng(5);
    const auto h = testing::uniform_vector(rng, 9 * 4, 0, 1);
    const auto p1 = in.problem();
    for (double& v : in.psi) v *= 2.0;
    const auto p2 = in.problem();
    ReconConfig c;
    const double data1 = p1.data_loss(h), data2 = p2.data_loss(h);
    CHECK(data1 == data2);
    CHECK(p2.loss(h, nullptr, c) - data2 == Approx(0.5 * (p1.loss(h, nullptr, c) - data1)).epsilon(1e-12));
}

TEST_CASE("non-positive response is a domain error") {
    auto in = random_instance(2, 1, 3, 4, 6);
    in.psi[1] = 0.0;
    CHECK_THROWS_AS(in.problem(), DomainError);
}

TEST_CASE("noiseless single-pixel round trip without regularization") {
    const auto grid = WavelengthGrid::vnir_default();
    const auto field = testing::simple_field(2, 2, 450, 890, -20, 20, 0.6);
    const auto angles = ScanStack::default_angles();
    forward::IlluminantModel illum;
    forward::SensorModel sensor;
    const auto response = forward::RadiometricResponse::from_models(grid, illum, sensor);
    std::mt19937_64 rng(7);
    const auto truth = testing::uniform_vector(rng, grid.size(), 0.1, 0.9);
    SpectralCube cube(1, 1, grid, std::vector<double>(truth));
    const auto depth = DepthMap::constant(1, 1, 0.55);
    const auto stack = forward::render_scan_stack(cube, depth, field, response, angles);
    auto c = unregularized();
    c.max_iterations = 20000;
    c.rel_tolerance = 1e-14;
    const auto r = reconstruct_reflectance(stack, depth, field, response, c);
    for (std::size_t j = 0; j < grid.size(); ++j) CHECK(std::abs(r.cube.at(0, 0, j) / truth[j] - 1.0) < 1e-3);
}

TEST_CASE("Spectralon reconstructs flat at 0.99") {
    const int w = 6, h = 5;
    const auto grid = WavelengthGrid::swir_default();
    const auto field = testing::simple_field(w, h, 875, 1500, -20, 20, 0.6);
    forward::IlluminantModel illum;
    illum.emission = forward::SpectralCurve({875, 1500}, {2.0, 0.7});
    forward::SensorModel sensor;
    const auto response = forward::RadiometricResponse::from_models(grid, illum, sensor);
    const SpectralCube spectralon(w, h, grid, 0.99);
    const auto depth = DepthMap::constant(w, h, 0.6);
    const auto stack = forward::render_scan_stack(spectralon, depth, field, response, ScanStack::default_angles());
    const auto r = reconstruct_reflectance(stack, depth, field, response, ReconConfig{});
    for (double v : r.cube.data()) CHECK(std::abs(v - 0.99) <= 0.01);
    for (std::size_t i = 1; i < r.loss_history.size(); ++i) CHECK(r.loss_history[i] <= r.loss_history[i - 1]);
}

TEST_CASE("all-zero measurements reconstruct to zero") {
    auto in = random_instance(3, 3, 4, 6, 8);
    for (auto& v : in.measured) std::fill(v.begin(), v.end(), 0.0);
    const auto problem = in.problem();
    for (double v : problem.matched_filter()) CHECK(v == 0.0);
    const auto r = reconstruct(problem, WavelengthGrid({500, 600, 700, 800}, CameraTag::VNIR), ReconConfig{});
    for (double v : r.cube.data()) CHECK(v == 0.0);
}

TEST_CASE("matched filter is exact for orthogonal columns") {
    const std::vector<double> truth{0.3, 0.8, 0.55};
    forward::SystemMatrix s = forward::SystemMatrix::Zero(6, 3);
    s(0, 0) = 2.0;
    s(1, 0) = 1.0;
    s(2, 1) = 0.5;
    s(3, 1) = 3.0;
    s(4, 2) = 1.5;
    s(5, 2) = 0.25;
    const auto v = forward::render_intensity_vector(s, truth);
    const ReconstructionProblem problem(1, 1, {1.0, 1.0, 1.0}, {s}, {std::vector<double>(v.data(), v.data() + 6)}, Mask{1});
    const auto h0 = problem.matched_filter();
    for (std::size_t j = 0; j < 3; ++j) CHECK(h0[j] == Approx(truth[j]).epsilon(1e-12));
}

TEST_CASE("inactive pixels come back as zero spectra") {
    auto in = random_instance(2, 2, 3, 5, 9);
    in.active[3] = 0;
    const auto r = reconstruct(in.problem(), WavelengthGrid({500, 600, 700}, CameraTag::VNIR), ReconConfig{});
    for (double v : r.cube.spectrum(3)) CHECK(v == 0.0);
    CHECK(r.cube.valid()[3] == 0);
    for (double v : r.cube.data()) CHECK(v >= 0.0);
}

TEST_CASE("pixel order does not change the reconstruction") {
    auto in = random_instance(3, 1, 3, 5, 10);
    auto swapped = in;
    std::swap(swapped.s[0], swapped.s[2]);
    std::swap(swapped.measured[0], swapped.measured[2]);
    auto c = ReconConfig{};
    c.lambda_spatial = 0.0;
    const WavelengthGrid grid({500, 600, 700}, CameraTag::VNIR);
    const auto a = reconstruct(in.problem(), grid, c);
    const auto b = reconstruct(swapped.problem(), grid, c);
    // Reversing a 3-pixel row with no spatial coupling only permutes the pixels.
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(a.cube.at(0, 0, j) == Approx(b.cube.at(2, 0, j)).epsilon(1e-9));
        CHECK(a.cube.at(1, 0, j) == Approx(b.cube.at(1, 0, j)).epsilon(1e-9));
    }
}

TEST_CASE("checkpoints are written at the configured interval") {
    const auto dir = std::filesystem::temp_directory_path() / "bh3d_test_recon_ckpt";
    std::filesystem::remove_all(dir);
    auto c = ReconConfig{};
    c.checkpoint_every = 5;
    c.checkpoint_dir = dir;
    c.max_iterations = 40;
    c.rel_tolerance = 0.0;
    const auto r = reconstruct(random_instance(2, 2, 3, 5, 11).problem(), WavelengthGrid({500, 600, 700}, CameraTag::VNIR), c);
    CHECK(std::filesystem::exists(dir / "checkpoint_5.json"));
    CHECK(std::filesystem::exists(dir / "checkpoint_5_loss.json"));

    c.checkpoint_dir.clear();
    CHECK_THROWS_AS(reconstruct(random_instance(2, 2, 3, 5, 11).problem(), WavelengthGrid({500, 600, 700}, CameraTag::VNIR), c),
                    ConfigError);
}

TEST_CASE("non-finite measurements raise a numerical error") {
    auto in = random_instance(2, 2, 3, 5, 12);
    in.measured[1][2] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(reconstruct(in.problem(), WavelengthGrid({500, 600, 700}, CameraTag::VNIR), ReconConfig{}),
                    NumericalError);
}

TEST_CASE("config validation and json round trip") {
    ReconConfig c;
    c.learning_rate = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = ReconConfig{};
    c.lambda_spatial = 0.25;
    c.init = InitMode::Zero;
    const auto back = ReconConfig::from_json(c.to_json());
    CHECK(back.lambda_spatial == 0.25);
    CHECK(back.init == InitMode::Zero);
    CHECK_THROWS_AS(ReconConfig::from_json(nlohmann::json{{"init", "random"}}), ConfigError);
}
