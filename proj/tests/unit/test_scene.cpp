#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "bh3d/core/error.hpp"
#include "bh3d/core/io.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/scene/scene.hpp"

using namespace bh3d;
using namespace bh3d::scene;
using doctest::Approx;

namespace {

std::filesystem::path scratch_dir(const char* name) {
    auto dir = std::filesystem::temp_directory_path() / "bh3d_test_scene" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::map<long, int> depth_histogram(const DepthMap& d) {
    std::map<long, int> h;
    for (std::size_t i = 0; i < d.depth.size(); ++i)
        if (d.valid[i]) ++h[std::lround(d.depth[i] * 1e6)];
    return h;
}

Mat3 skew(const Vec3& t) {
    Mat3 m;
    m << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
    return m;
}

std::vector<double> as_float(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return static_cast<double>(static_cast<float>(x)); });
    return out;
}

}  // namespace

TEST_CASE("two-level staircase has exactly two depths") {
    StaircaseOptions o;
    o.levels = 2;
    const auto s = make_staircase_scene(default_rig(48), o);
    // Depth along each ray equals the plane depth for fronto-parallel facets.
    const auto h = depth_histogram(s.vnir_depth);
    REQUIRE(h.size() == 2);
    CHECK((std::next(h.begin())->first - h.begin()->first) == 20000);
}

TEST_CASE("default staircase has five levels 20 mm apart") {
    const auto s = make_staircase_scene(default_rig());
    const auto h = depth_histogram(s.vnir_depth);
    REQUIRE(h.size() == 5);
    long previous = -1;
    for (const auto& [depth_um, count] : h) {
        CHECK(count > 100);
        if (previous >= 0) CHECK(depth_um - previous == 20000);
        previous = depth_um;
    }
    CHECK(s.vnir_cube.spectrum(0)[0] <= 0.8);
}

TEST_CASE("scene views are geometrically consistent") {
    const auto rig = default_rig();
    const auto s = make_staircase_scene(rig);
    const Mat3 essential = skew(rig.swir_from_vnir.translation) * rig.swir_from_vnir.rotation;
    const auto vnir_from_swir = rig.swir_from_vnir.inverse();
    std::set<long> plane_depths;
    for (const auto& f : s.facets) plane_depths.insert(std::lround(f.depth * 1e9));
    int checked = 0;
    for (int v = 0; v < rig.swir.height; v += 3)
        for (int u = 0; u < rig.swir.width; u += 3) {
            const auto i = s.swir_depth.index(u, v);
            if (!s.swir_depth.valid[i]) continue;
            const Vec3 ps = rig.swir.unproject(u, v, s.swir_depth.depth[i]);
            const Vec3 pv = vnir_from_swir.apply(ps);
            // The SWIR surface point lies on one of the declared facet planes.
            double nearest = 1e9;
            for (const auto& f : s.facets) nearest = std::min(nearest, std::abs(pv.z() - f.depth));
            CHECK(nearest < 1e-9);
            // Its VNIR projection satisfies the epipolar constraint with the SWIR pixel.
            const Vec2 xv = rig.vnir.project(pv);
            const Vec3 rv = rig.vnir.ray(xv.x(), xv.y());
            const Vec3 rs = rig.swir.ray(u, v);
            CHECK(std::abs(rs.dot(essential * rv)) < 1e-6);
            ++checked;
        }
    CHECK(checked > 500);
}

TEST_CASE("patch chart generator") {
    const auto grid = master_grid();
    const auto a = patch_spectra(grid, 24, 7, false);
    const auto b = patch_spectra(grid, 24, 7, false);
    CHECK(a == b);
    for (const auto& s : a)
        for (double v : s) {
            CHECK(v >= 0.05);
            CHECK(v <= 0.95);
        }
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(spectral_angle(a[i], a[j]) >= 0.05);

    const auto rough = patch_spectra(grid, 24, 7, true);
    for (const auto& s : rough)
        for (double v : s) CHECK((v >= 0.05 && v <= 0.95));
}

TEST_CASE("patch chart scenes are deterministic and labelled") {
    const auto rig = default_rig(48);
    const auto s1 = make_patch_chart_scene(rig);
    const auto s2 = make_patch_chart_scene(rig);
    CHECK(s1.vnir_cube.data() == s2.vnir_cube.data());
    CHECK(s1.swir_cube.data() == s2.swir_cube.data());
    CHECK(s1.vnir_labels == s2.vnir_labels);
    std::set<int> labels(s1.vnir_labels.begin(), s1.vnir_labels.end());
    CHECK(labels.count(0) == 1);
    for (int l : labels) CHECK((l >= -1 && l <= 24));
    for (double v : s1.vnir_cube.data()) CHECK((v >= 0.0 && v <= 1.0));
    CHECK_NOTHROW(s1.validate());

    PatchChartOptions other;
    other.seed = 8;
    CHECK(make_patch_chart_scene(rig, other).vnir_cube.data() != s1.vnir_cube.data());
}

TEST_CASE("two-material spectra meet their construction constraints") {
    const auto grid = master_grid();
    const auto spectra = default_two_material_spectra(grid);
    CHECK_NOTHROW(check_two_material_contrast(grid, spectra));
    std::vector<double> va, vb;
    for (std::size_t j = 0; j < grid.size(); ++j)
        if (grid[j] <= 700.0) {
            va.push_back(spectra.a[j]);
            vb.push_back(spectra.b[j]);
        }
    CHECK(spectral_angle(va, vb) < 0.02);
    CHECK(spectral_angle(spectra.a, spectra.b) > 0.15);
    const auto k = grid.find(1450.0);
    REQUIRE(k.has_value());
    CHECK(std::abs(spectra.a[*k] - spectra.b[*k]) >= 0.3);

    auto same = spectra;
    same.b = same.a;
    CHECK_THROWS_AS(check_two_material_contrast(grid, same), ValidationError);
}

TEST_CASE("two-material label map follows the layout") {
    const auto rig = default_rig(32);
    const auto spectra = default_two_material_spectra(master_grid());
    const auto lr = make_two_material_scene(rig, spectra, SplitLayout::LeftRight);
    const auto tb = make_two_material_scene(rig, spectra, SplitLayout::TopBottom);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const auto i = lr.vnir_depth.index(x, y);
            CHECK(lr.vnir_labels[i] == (x < rig.vnir.cx ? 1 : 2));
            CHECK(tb.vnir_labels[i] == (y < rig.vnir.cy ? 1 : 2));
        }
    // In the SWIR view the label follows the side of the split the surface point lies on.
    const auto vnir_from_swir = rig.swir_from_vnir.inverse();
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            const auto i = lr.swir_depth.index(x, y);
            const Vec3 p = vnir_from_swir.apply(rig.swir.unproject(x, y, lr.swir_depth.depth[i]));
            CHECK(lr.swir_labels[i] == (p.x() < 0.0 ? 1 : 2));
        }
}

TEST_CASE("single noiseless exposure: HDR stack is the raw stack over the exposure") {
    const auto rig = default_rig(24);
    const auto scene = make_spectralon_scene(rig);
    auto setup = RenderSetup::defaults(rig);
    setup.sensor.exposures = {4.0};
    setup.sensor.noise_fraction = 0.0;
    const auto data = render_captures(scene, setup);
    for (const auto* cc : {&data.vnir, &data.swir}) {
        REQUIRE(cc->raw.size() == 1);
        const auto& raw = cc->raw[0].stack.data();
        for (std::size_t k = 0; k < raw.size(); ++k) CHECK(cc->hdr.data()[k] == raw[k] / 4.0);
    }
}

TEST_CASE("rendered dataset files match the scene and re-render bit-identically") {
    const auto dir = scratch_dir("dataset");
    const auto rig = default_rig(24);
    PatchChartOptions po;
    po.depth_m = 0.5;
    const auto scene = make_patch_chart_scene(rig, po);
    auto setup = RenderSetup::defaults(rig);
    setup.sensor.exposures = {1.0, 4.0};
    const auto files = render_dataset(scene, setup, dir);
    REQUIRE(std::filesystem::exists(files.manifest));

    std::ifstream in(files.manifest);
    const auto manifest = nlohmann::json::parse(in);
    CHECK(manifest["scene_seed"] == scene.seed);
    for (const char* key : {"rig", "files", "exposures", "noise"}) CHECK(manifest.contains(key));

    const auto& f = manifest["files"];
    const auto gt = io::read_cube(dir / f["gt_cube"].get<std::string>());
    CHECK(gt.data() == as_float(scene.vnir_cube.data()));
    CHECK(gt.valid() == scene.vnir_cube.valid());
    const auto dv = io::read_depth(dir / f["gt_depth_vnir"].get<std::string>());
    CHECK(dv.depth == as_float(scene.vnir_depth.depth));
    const auto ds = io::read_depth(dir / f["gt_depth_swir"].get<std::string>());
    CHECK(ds.valid == scene.swir_depth.valid);

    // Rebuild the render setup from the manifest alone and render again.
    const auto rebuilt_rig = rig_from_json(manifest["rig"]);
    auto again = RenderSetup::defaults(rebuilt_rig);
    again.illuminant = forward::IlluminantModel::from_json(manifest["illuminant"]);
    again.sensor = forward::SensorModel::from_json(manifest["sensor"]);
    again.angles = manifest["angles_deg"].get<std::vector<double>>();
    again.noise_seed = manifest["noise_seed"].get<std::uint64_t>();
    CHECK(rebuilt_rig.swir_from_vnir.translation == rig.swir_from_vnir.translation);
    // The stored fields are the analytic projector fields at payload precision.
    const auto stored = forward::read_field(dir / f["vnir_field"].get<std::string>());
    CHECK(stored.mu_samples() == as_float(again.vnir_field.mu_samples()));
    const auto rendered = render_captures(scene, again);
    for (const auto cam : {CameraTag::VNIR, CameraTag::SWIR}) {
        const std::string lower = cam == CameraTag::VNIR ? "vnir" : "swir";
        const auto hdr = io::read_stack(dir / f[lower + "_hdr"].get<std::string>());
        CHECK(hdr.data() == as_float(rendered.captures(cam).hdr.data()));
        const auto stems = f[lower + "_stacks"];
        REQUIRE(stems.size() == 2);
        for (std::size_t e = 0; e < 2; ++e) {
            const auto raw = io::read_stack(dir / stems[e].get<std::string>());
            CHECK(raw.data() == as_float(rendered.captures(cam).raw[e].stack.data()));
        }
    }
}

TEST_CASE("blurred scenes carry the blur model into rendering") {
    const auto rig = default_rig(24);
    auto scene = make_patch_chart_scene(rig);
    auto setup = RenderSetup::defaults(rig);
    setup.sensor.noise_fraction = 0.0;
    setup.sensor.exposures = {1.0};
    const auto sharp = render_captures(scene, setup);
    scene.blur = fusion::ChromaticBlurModel(1.0, 0.01, {510, 850}, {950, 1200});
    const auto blurred = render_captures(scene, setup);
    CHECK(sharp.vnir.hdr.data() != blurred.vnir.hdr.data());
}
