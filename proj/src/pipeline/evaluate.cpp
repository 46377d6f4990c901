#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/metrics.hpp"
#include "bh3d/pipeline/pipeline.hpp"

namespace bh3d::pipeline {

namespace {

using nlohmann::json;

// Label of p when every pixel within `radius` (Chebyshev) carries the same label, else -1.
int interior_label(const std::vector<int>& labels, int width, int height, int x, int y, int radius) {
    const int l = labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x];
    for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || yy < 0 || xx >= width || yy >= height) return -1;
            if (labels[static_cast<std::size_t>(yy) * static_cast<std::size_t>(width) + xx] != l) return -1;
        }
    }
    return l;
}

json depth_error(const DepthMap& estimate, const DepthMap& truth) {
    BH3D_REQUIRE(estimate.width == truth.width && estimate.height == truth.height, ContractError,
                 "depth map and ground truth differ in size");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < estimate.pixel_count(); ++i) {
        if (!estimate.is_valid(i) || !truth.is_valid(i)) continue;
        sum += std::abs(estimate.depth[i] - truth.depth[i]);
        ++n;
    }
    return {{"pixels", n}, {"mean_abs_error_mm", n > 0 ? json(1000.0 * sum / static_cast<double>(n)) : json(nullptr)}};
}

// A zero spectrum has no direction; score it as orthogonal.
double angle_or_right(std::span<const double> a, std::span<const double> b) {
    auto zero = [](std::span<const double> v) { return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }); };
    if (zero(a) || zero(b)) return 0.5 * std::acos(-1.0);
    return spectral_angle(a, b);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string num(const json& v, const char* fmt) {
    if (!v.is_number()) return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v.get<double>());
    return buf;
}

}  // namespace

json evaluate(const Outputs& outputs, const GroundTruth& truth, const EvaluationSpec& spec) {
    BH3D_REQUIRE(truth.cube.pixel_count() > 0 && !truth.labels.empty(), ValidationError,
                 "ground truth is missing: evaluation needs the generator cube and labels");
    BH3D_REQUIRE(truth.depth_vnir.pixel_count() > 0 && truth.depth_swir.pixel_count() > 0, ValidationError,
                 "ground truth is missing: evaluation needs both depth maps");
    const SpectralCube& est = outputs.fused.cube;
    const int w = est.width(), h = est.height();
    BH3D_REQUIRE(w == truth.cube.width() && h == truth.cube.height(), ContractError,
                 "fused cube and ground truth differ in size");
    BH3D_REQUIRE(truth.labels.size() == est.pixel_count(), ContractError, "label image does not match the cube");
    const WavelengthGrid& grid = est.grid();
    const std::size_t m = grid.size();

    json report;
    report["scene"] = truth.annotations.value("scene", std::string("unknown"));
    report["erosion_px"] = spec.erosion_px;
    report["depth"] = {{"vnir", depth_error(outputs.depth_vnir, truth.depth_vnir)},
                       {"swir", depth_error(outputs.depth_swir, truth.depth_swir)}};

    // Ground truth on the fused grid.
    std::vector<double> gt(est.pixel_count() * m, 0.0);
    for (std::size_t p = 0; p < est.pixel_count(); ++p) {
        if (!truth.cube.is_valid(p)) continue;
        const auto v = resample_spectrum(truth.cube.spectrum(p), truth.cube.grid(), grid);
        std::copy(v.begin(), v.end(), gt.begin() + static_cast<std::ptrdiff_t>(p * m));
    }
    auto gt_at = [&](std::size_t p) { return std::span<const double>(gt.data() + p * m, m); };
    auto complete = [&](std::size_t p) {
        return est.is_valid(p) && truth.cube.is_valid(p) &&
               (outputs.fused.swir_valid.empty() || outputs.fused.swir_valid[p] != 0);
    };

    std::vector<int> regions = truth.annotations.value("regions", std::vector<int>{});
    std::map<int, std::vector<std::size_t>> members;
    for (int l : regions) members[l];
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int l = interior_label(truth.labels, w, h, x, y, spec.erosion_px);
            auto it = members.find(l);
            if (it != members.end()) it->second.push_back(static_cast<std::size_t>(y) * static_cast<std::size_t>(w) + x);
        }
    }

    // Spectral accuracy over complete region pixels.
    json region_rows = json::array();
    double sam_sum = 0.0, rmse_sum = 0.0, pixel_sam_sum = 0.0;
    std::vector<double> band_se(m, 0.0);
    std::size_t scored_regions = 0, pixels = 0;
    for (const auto& [label, idx] : members) {
        std::vector<double> mean_est(m, 0.0), mean_gt(m, 0.0);
        std::size_t n = 0;
        for (std::size_t p : idx) {
            if (!complete(p)) continue;
            const auto e = est.spectrum(p);
            const auto g = gt_at(p);
            for (std::size_t j = 0; j < m; ++j) {
                mean_est[j] += e[j];
                mean_gt[j] += g[j];
                band_se[j] += (e[j] - g[j]) * (e[j] - g[j]);
            }
            pixel_sam_sum += angle_or_right(e, g);
            ++n;
        }
        json row{{"label", label}, {"pixels", n}};
        if (n > 0) {
            for (std::size_t j = 0; j < m; ++j) {
                mean_est[j] /= static_cast<double>(n);
                mean_gt[j] /= static_cast<double>(n);
            }
            const double sam = angle_or_right(mean_est, mean_gt);
            const double err = rmse(mean_est, mean_gt);
            row["sam_rad"] = sam;
            row["rmse"] = err;
            row["mean_estimate"] = mean_est;
            row["mean_truth"] = mean_gt;
            sam_sum += sam;
            rmse_sum += err;
            ++scored_regions;
            pixels += n;
        }
        region_rows.push_back(row);
    }
    json spectral{{"bands_nm", std::vector<double>(grid.bands().begin(), grid.bands().end())},
                  {"regions", region_rows},
                  {"pixels", pixels}};
    if (scored_regions > 0) {
        std::vector<double> per_band(m);
        double total = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            per_band[j] = std::sqrt(band_se[j] / static_cast<double>(pixels));
            total += band_se[j];
        }
        spectral["mean_sam_rad"] = sam_sum / static_cast<double>(scored_regions);
        spectral["mean_rmse"] = rmse_sum / static_cast<double>(scored_regions);
        spectral["per_band_rmse"] = per_band;
        spectral["pixel_mean_sam_rad"] = pixel_sam_sum / static_cast<double>(pixels);
        spectral["pixel_rmse"] = std::sqrt(total / static_cast<double>(pixels * m));
    } else {
        spectral["mean_sam_rad"] = nullptr;
        spectral["mean_rmse"] = nullptr;
    }
    report["spectral"] = spectral;

    // Sharpening: per-band RMSE after minus before over every complete pixel.
    if (outputs.sharpened.pixel_count() > 0) {
        BH3D_REQUIRE(outputs.sharpened.width() == w && outputs.sharpened.height() == h &&
                         outputs.sharpened.grid() == grid,
                     ContractError, "sharpened cube does not match the fused cube");
        std::vector<double> before(m, 0.0), after(m, 0.0);
        std::size_t n = 0;
        for (std::size_t p = 0; p < est.pixel_count(); ++p) {
            if (!complete(p)) continue;
            const auto e = est.spectrum(p);
            const auto s = outputs.sharpened.spectrum(p);
            const auto g = gt_at(p);
            for (std::size_t j = 0; j < m; ++j) {
                before[j] += (e[j] - g[j]) * (e[j] - g[j]);
                after[j] += (s[j] - g[j]) * (s[j] - g[j]);
            }
            ++n;
        }
        if (n > 0) {
            std::vector<double> delta(m);
            for (std::size_t j = 0; j < m; ++j) {
                before[j] = std::sqrt(before[j] / static_cast<double>(n));
                after[j] = std::sqrt(after[j] / static_cast<double>(n));
                delta[j] = after[j] - before[j];
            }
            report["sharpening"] = {{"pixels", n}, {"rmse_before", before}, {"rmse_after", after}, {"rmse_delta", delta}};
        }
    }

    // Staircase levels from the VNIR depth map.
    if (truth.annotations.contains("level_depths_m")) {
        const auto truth_levels = truth.annotations["level_depths_m"].get<std::vector<double>>();
        json levels = json::array();
        std::vector<double> est_levels;
        for (int l : regions) {
            std::vector<double> z;
            for (std::size_t p : members[l]) {
                if (outputs.depth_vnir.is_valid(p)) z.push_back(outputs.depth_vnir.depth[p]);
            }
            if (z.empty()) {
                est_levels.clear();
                break;
            }
            est_levels.push_back(median(std::move(z)));
        }
        json steps{{"truth_mm", json::array()}, {"estimate_mm", json::array()}, {"error_mm", json::array()}};
        if (est_levels.size() == truth_levels.size()) {
            for (std::size_t k = 0; k + 1 < est_levels.size(); ++k) {
                const double t = 1000.0 * (truth_levels[k + 1] - truth_levels[k]);
                const double e = 1000.0 * (est_levels[k + 1] - est_levels[k]);
                steps["truth_mm"].push_back(t);
                steps["estimate_mm"].push_back(e);
                steps["error_mm"].push_back(e - t);
            }
        }
        report["steps"] = steps;
    }

    // Region contrast at one wavelength.
    if (truth.annotations.contains("contrast_nm") && regions.size() == 2 && scored_regions == 2) {
        const double target = truth.annotations["contrast_nm"].get<double>();
        std::size_t band = 0;
        for (std::size_t j = 1; j < m; ++j) {
            if (std::abs(grid[j] - target) < std::abs(grid[band] - target)) band = j;
        }
        const auto& a = region_rows[0];
        const auto& b = region_rows[1];
        const double ea = a["mean_estimate"][band].get<double>(), eb = b["mean_estimate"][band].get<double>();
        const double ta = a["mean_truth"][band].get<double>(), tb = b["mean_truth"][band].get<double>();
        report["contrast"] = {{"wavelength_nm", grid[band]},
                              {"estimate", std::abs(ea - eb)},
                              {"truth", std::abs(ta - tb)},
                              {"region_estimates", {ea, eb}}};
    }
    return report;
}

std::string format_report(const json& r) {
    std::ostringstream out;
    out << "scene: " << r.value("scene", std::string("unknown")) << "\n";
    const auto& s = r["spectral"];
    out << "spectral (" << s.value("pixels", 0) << " pixels, region erosion " << r.value("erosion_px", 0) << " px)\n";
    out << "  mean SAM        " << num(s["mean_sam_rad"], "%.5f") << " rad\n";
    out << "  mean RMSE       " << num(s["mean_rmse"], "%.5f") << "\n";
    if (s.contains("pixel_mean_sam_rad")) {
        out << "  pixel mean SAM  " << num(s["pixel_mean_sam_rad"], "%.5f") << " rad\n";
        out << "  pixel RMSE      " << num(s["pixel_rmse"], "%.5f") << "\n";
    }
    for (const auto& row : s["regions"]) {
        out << "  region " << row["label"].get<int>() << ": pixels " << row["pixels"].get<std::size_t>();
        if (row.contains("sam_rad")) out << "  SAM " << num(row["sam_rad"], "%.5f") << "  RMSE " << num(row["rmse"], "%.5f");
        out << "\n";
    }
    if (s.contains("per_band_rmse")) {
        out << "  per-band RMSE:\n";
        for (std::size_t j = 0; j < s["bands_nm"].size(); ++j) {
            out << "    " << num(s["bands_nm"][j], "%7.1f") << " nm  " << num(s["per_band_rmse"][j], "%.5f") << "\n";
        }
    }
    for (const char* cam : {"vnir", "swir"}) {
        const auto& d = r["depth"][cam];
        out << "depth " << cam << ": mean abs error " << num(d["mean_abs_error_mm"], "%.3f") << " mm over "
            << d["pixels"].get<std::size_t>() << " pixels\n";
    }
    if (r.contains("steps")) {
        out << "step heights (mm):";
        for (const auto& v : r["steps"]["estimate_mm"]) out << " " << num(v, "%.3f");
        out << "\n";
    }
    if (r.contains("contrast")) {
        const auto& c = r["contrast"];
        out << "contrast at " << num(c["wavelength_nm"], "%.0f") << " nm: " << num(c["estimate"], "%.4f")
            << " (truth " << num(c["truth"], "%.4f") << ")\n";
    }
    if (r.contains("sharpening")) {
        const auto& sh = r["sharpening"];
        out << "sharpening RMSE delta per band:\n";
        for (std::size_t j = 0; j < s["bands_nm"].size(); ++j) {
            out << "    " << num(s["bands_nm"][j], "%7.1f") << " nm  " << num(sh["rmse_delta"][j], "%+.6f") << "\n";
        }
    }
    return out.str();
}

}  // namespace bh3d::pipeline
