#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/scene/scene.hpp"

namespace bh3d::scene {

namespace {

constexpr double kTextureCellM = 0.004;
constexpr double kTextureDepth = 0.5;
constexpr double kMinPatchAngle = 0.05;

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double lattice_value(std::uint64_t seed, long long ix, long long iy) {
    const std::uint64_t h = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ULL ^
                                                         static_cast<std::uint64_t>(iy)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smoothstep(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

std::vector<double> flat(const WavelengthGrid& grid, double v) { return std::vector<double>(grid.size(), v); }

struct Hit {
    double t = 0.0;
    Vec3 point;
    int facet = -1;
};

Hit cast(const std::vector<Facet>& facets, const Vec3& origin, const Vec3& dir) {
    Hit best;
    for (std::size_t f = 0; f < facets.size(); ++f) {
        const Facet& fc = facets[f];
        if (std::abs(dir.z()) < 1e-15) continue;
        const double t = (fc.depth - origin.z()) / dir.z();
        if (!(t > 0.0)) continue;
        const Vec3 p = origin + t * dir;
        if (p.x() < fc.x0 || p.x() >= fc.x1 || p.y() < fc.y0 || p.y() >= fc.y1) continue;
        // Later facets win ties so coplanar insets sit on top of their background.
        if (best.facet < 0 || t < best.t - 1e-12 || std::abs(t - best.t) <= 1e-12) {
            best = {t, p, static_cast<int>(f)};
        }
    }
    return best;
}

void render_view(const Scene& s, CameraTag camera, SpectralCube& cube, DepthMap& depth, std::vector<int>& labels) {
    const PinholeCamera& cam = camera == CameraTag::VNIR ? s.rig.vnir : s.rig.swir;
    const RigidTransform vnir_from_cam =
        camera == CameraTag::VNIR ? RigidTransform::identity() : s.rig.swir_from_vnir.inverse();
    cube = SpectralCube(cam.width, cam.height, s.grid);
    cube.valid().assign(cube.pixel_count(), 0);
    depth = DepthMap(cam.width, cam.height);
    labels.assign(cube.pixel_count(), -1);
    const std::size_t m = s.grid.size();
    parallel_for(0, static_cast<std::size_t>(cam.height), [&](std::size_t row) {
        const int y = static_cast<int>(row);
        for (int x = 0; x < cam.width; ++x) {
            // Camera rays have unit z, so the hit parameter is the camera-frame depth.
            const Vec3 dir = vnir_from_cam.rotation * cam.ray(x, y);
            const Hit hit = cast(s.facets, vnir_from_cam.translation, dir);
            if (hit.facet < 0) continue;
            const std::size_t p = cube.pixel_index(x, y);
            const int label = s.facets[static_cast<std::size_t>(hit.facet)].label;
            const Material& mat = s.materials[static_cast<std::size_t>(label)];
            const double gain = mat.textured ? texture_multiplier(s.seed, hit.point.x(), hit.point.y()) : 1.0;
            auto spec = cube.spectrum(p);
            for (std::size_t j = 0; j < m; ++j) spec[j] = std::clamp(mat.reflectance[j] * gain, 0.0, 1.0);
            cube.valid()[p] = 1;
            depth.depth[p] = hit.t;
            depth.valid[p] = 1;
            labels[p] = label;
        }
    });
}

double bump_spectrum(double lambda, double base, const std::vector<std::array<double, 3>>& bumps) {
    double v = base;
    for (const auto& b : bumps) v += b[0] * std::exp(-0.5 * std::pow((lambda - b[1]) / b[2], 2));
    return std::clamp(v, 0.05, 0.95);
}

}  // namespace

double texture_multiplier(std::uint64_t seed, double x, double y) {
    const double gx = x / kTextureCellM, gy = y / kTextureCellM;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const long long ix = static_cast<long long>(fx), iy = static_cast<long long>(fy);
    const double u = smoothstep(gx - fx), v = smoothstep(gy - fy);
    const double a = lattice_value(seed, ix, iy), b = lattice_value(seed, ix + 1, iy);
    const double c = lattice_value(seed, ix, iy + 1), d = lattice_value(seed, ix + 1, iy + 1);
    const double n = (a * (1 - u) + b * u) * (1 - v) + (c * (1 - u) + d * u) * v;
    return 1.0 - kTextureDepth + kTextureDepth * n;
}

void Scene::validate() const {
    BH3D_REQUIRE(vnir_cube.grid() == grid && swir_cube.grid() == grid, ValidationError,
                 "scene cubes must use the master grid");
    auto check = [&](const SpectralCube& cube, const DepthMap& depth, const PinholeCamera& cam, const char* view) {
        BH3D_REQUIRE(cube.width() == cam.width && cube.height() == cam.height && depth.width == cam.width &&
                         depth.height == cam.height,
                     ValidationError, std::string(view) + " view does not match its camera");
        for (double v : cube.data()) {
            BH3D_REQUIRE(v >= 0.0 && v <= 1.0, ValidationError, std::string(view) + " reflectance outside [0, 1]");
        }
        for (std::size_t i = 0; i < depth.pixel_count(); ++i) {
            BH3D_REQUIRE(!depth.is_valid(i) || depth.depth[i] > 0.0, ValidationError,
                         std::string(view) + " depth must be positive");
        }
    };
    check(vnir_cube, vnir_depth, rig.vnir, "VNIR");
    check(swir_cube, swir_depth, rig.swir, "SWIR");
}

Scene build_scene(std::string name, std::uint64_t seed, const CameraRig& rig, const WavelengthGrid& grid,
                  std::vector<Facet> facets, std::vector<Material> materials) {
    rig.validate();
    for (const Facet& f : facets) {
        BH3D_REQUIRE(f.depth > 0.0 && f.x1 > f.x0 && f.y1 > f.y0, ConfigError, "facet must be a non-empty rectangle");
        BH3D_REQUIRE(f.label >= 0 && static_cast<std::size_t>(f.label) < materials.size(), ConfigError,
                     "facet label has no material");
    }
    for (const Material& m : materials) {
        BH3D_REQUIRE(m.reflectance.size() == grid.size(), ContractError, "material spectrum must match the grid");
    }
    Scene s;
    s.name = std::move(name);
    s.seed = seed;
    s.rig = rig;
    s.grid = grid;
    s.facets = std::move(facets);
    s.materials = std::move(materials);
    render_view(s, CameraTag::VNIR, s.vnir_cube, s.vnir_depth, s.vnir_labels);
    render_view(s, CameraTag::SWIR, s.swir_cube, s.swir_depth, s.swir_labels);
    s.validate();
    return s;
}

Scene make_staircase_scene(const CameraRig& rig, const StaircaseOptions& o) {
    BH3D_REQUIRE(o.levels >= 2, ConfigError, "staircase needs at least two levels");
    BH3D_REQUIRE(o.step_height_m > 0.0 && o.base_depth_m > 0.0 && o.band_height_m > 0.0, ConfigError,
                 "staircase dimensions must be positive");
    BH3D_REQUIRE(o.reflectance > 0.0 && o.reflectance <= 1.0, ConfigError, "reflectance must be in (0, 1]");
    const WavelengthGrid grid = master_grid();
    constexpr double kFar = 10.0;
    const double top = -0.5 * o.levels * o.band_height_m;
    std::vector<Facet> facets;
    for (int k = 0; k < o.levels; ++k) {
        // Each level continues behind the nearer ones, so no ray slips between two steps.
        const double y0 = -kFar;
        const double y1 = k == o.levels - 1 ? kFar : top + (k + 1) * o.band_height_m;
        facets.push_back({o.base_depth_m + k * o.step_height_m, -kFar, kFar, y0, y1, k});
    }
    std::vector<Material> materials(static_cast<std::size_t>(o.levels), Material{flat(grid, o.reflectance), true});
    return build_scene("staircase", o.seed, rig, grid, std::move(facets), std::move(materials));
}

std::vector<std::vector<double>> patch_spectra(const WavelengthGrid& grid, int count, std::uint64_t seed, bool rough) {
    BH3D_REQUIRE(count >= 1, ConfigError, "patch count must be positive");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double a, double b) { return a + (b - a) * unit(rng); };
    std::vector<std::vector<double>> out;
    for (int attempt = 0; static_cast<int>(out.size()) < count; ++attempt) {
        if (attempt >= 100 * count) throw NumericalError("patch generator could not find distinct spectra", attempt, 0.0);
        std::vector<double> s(grid.size());
        if (rough) {
            for (double& v : s) v = uniform(0.05, 0.95);
        } else {
            const double base = uniform(0.1, 0.5);
            const int n = 2 + static_cast<int>(unit(rng) * 3.0);
            std::vector<std::array<double, 3>> bumps;
            for (int b = 0; b < n; ++b) {
                bumps.push_back({uniform(-0.35, 0.5), uniform(kMinWavelengthNm, kMaxWavelengthNm), uniform(60.0, 250.0)});
            }
            for (std::size_t j = 0; j < grid.size(); ++j) s[j] = bump_spectrum(grid[j], base, bumps);
        }
        bool distinct = true;
        for (const auto& other : out) distinct = distinct && spectral_angle(s, other) >= kMinPatchAngle;
        if (distinct) out.push_back(std::move(s));
    }
    return out;
}

Scene make_patch_chart_scene(const CameraRig& rig, const PatchChartOptions& o) {
    BH3D_REQUIRE(o.rows >= 1 && o.cols >= 1, ConfigError, "patch chart needs at least one patch");
    BH3D_REQUIRE(o.patch_m > 0.0 && o.pitch_m >= o.patch_m && o.depth_m > 0.0, ConfigError,
                 "patch chart dimensions are inconsistent");
    const WavelengthGrid grid = master_grid();
    constexpr double kFar = 10.0;
    std::vector<Facet> facets{{o.depth_m, -kFar, kFar, -kFar, kFar, 0}};
    std::vector<Material> materials{{flat(grid, 0.5), true}};
    const auto spectra = patch_spectra(grid, o.rows * o.cols, o.seed, o.rough);
    const double w = o.cols * o.pitch_m - (o.pitch_m - o.patch_m);
    const double h = o.rows * o.pitch_m - (o.pitch_m - o.patch_m);
    for (int r = 0; r < o.rows; ++r) {
        for (int c = 0; c < o.cols; ++c) {
            const double x0 = -0.5 * w + c * o.pitch_m, y0 = -0.5 * h + r * o.pitch_m;
            const int label = 1 + r * o.cols + c;
            facets.push_back({o.depth_m, x0, x0 + o.patch_m, y0, y0 + o.patch_m, label});
            materials.push_back({spectra[static_cast<std::size_t>(label - 1)], true});
        }
    }
    return build_scene("patch-chart", o.seed, rig, grid, std::move(facets), std::move(materials));
}

TwoMaterialSpectra default_two_material_spectra(const WavelengthGrid& grid) {
    TwoMaterialSpectra s{flat(grid, 0.88), flat(grid, 0.88)};
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double l = grid[j];
        const double slope = 0.2 * smoothstep((l - 1000.0) / 300.0);
        const double band = 0.35 * std::exp(-0.5 * std::pow((l - 1450.0) / 70.0, 2));
        s.b[j] = s.a[j] * (1.0 - slope - band);
    }
    return s;
}

void check_two_material_contrast(const WavelengthGrid& grid, const TwoMaterialSpectra& spectra) {
    BH3D_REQUIRE(spectra.a.size() == grid.size() && spectra.b.size() == grid.size(), ContractError,
                 "material spectra must match the grid");
    std::vector<double> va, vb;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        if (grid[j] <= 700.0) {
            va.push_back(spectra.a[j]);
            vb.push_back(spectra.b[j]);
        }
    }
    BH3D_REQUIRE(!va.empty(), ValidationError, "grid has no visible bands");
    const double visible = spectral_angle(va, vb);
    const double full = spectral_angle(spectra.a, spectra.b);
    const auto k = grid.find(1450.0, 12.5);
    BH3D_REQUIRE(k.has_value(), ValidationError, "grid has no band near 1450 nm");
    const double gap = std::abs(spectra.a[*k] - spectra.b[*k]);
    BH3D_REQUIRE(visible < 0.02, ValidationError, "materials differ in the visible (SAM " + std::to_string(visible) + ")");
    BH3D_REQUIRE(full > 0.15, ValidationError, "materials too similar overall (SAM " + std::to_string(full) + ")");
    BH3D_REQUIRE(gap >= 0.3, ValidationError, "1450 nm contrast below 0.3 (" + std::to_string(gap) + ")");
}

Scene make_two_material_scene(const CameraRig& rig, const TwoMaterialSpectra& spectra, SplitLayout layout,
                              double depth_m, std::uint64_t seed) {
    const WavelengthGrid grid = master_grid();
    BH3D_REQUIRE(depth_m > 0.0, ConfigError, "depth must be positive");
    constexpr double kFar = 10.0;
    std::vector<Facet> facets;
    if (layout == SplitLayout::LeftRight) {
        facets = {{depth_m, -kFar, 0.0, -kFar, kFar, 1}, {depth_m, 0.0, kFar, -kFar, kFar, 2}};
    } else {
        facets = {{depth_m, -kFar, kFar, -kFar, 0.0, 1}, {depth_m, -kFar, kFar, 0.0, kFar, 2}};
    }
    std::vector<Material> materials{{flat(grid, 0.0), false}, {spectra.a, true}, {spectra.b, true}};
    return build_scene("two-material", seed, rig, grid, std::move(facets), std::move(materials));
}

Scene make_spectralon_scene(const CameraRig& rig, double depth_m, double reflectance) {
    BH3D_REQUIRE(depth_m > 0.0 && reflectance > 0.0 && reflectance <= 1.0, ConfigError,
                 "invalid reflectance standard parameters");
    const WavelengthGrid grid = master_grid();
    constexpr double kFar = 10.0;
    return build_scene("spectralon", 0, rig, grid, {{depth_m, -kFar, kFar, -kFar, kFar, 0}},
                       {{flat(grid, reflectance), false}});
}

}  // namespace bh3d::scene
