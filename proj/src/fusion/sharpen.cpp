#include <algorithm>
#include <cmath>
#include <string>

#include "bh3d/core/error.hpp"
#include "bh3d/core/parallel.hpp"
#include "bh3d/fusion/fusion.hpp"

namespace bh3d::fusion {

namespace {

// Summed-area table with one row/column of zero padding.
class Integral {
public:
    Integral(int w, int h) : w_(w), h_(h), s_(static_cast<std::size_t>(w + 1) * (h + 1), 0.0) {}

    template <typename F>
    void build(F value) {
        for (int y = 0; y < h_; ++y) {
            double run = 0.0;
            for (int x = 0; x < w_; ++x) {
                run += value(x, y);
                at(x + 1, y + 1) = at(x + 1, y) + run;
            }
        }
    }

    double box(int x0, int y0, int x1, int y1) const {
        return at(x1 + 1, y1 + 1) - at(x0, y1 + 1) - at(x1 + 1, y0) + at(x0, y0);
    }

private:
    double& at(int x, int y) { return s_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }
    double at(int x, int y) const { return s_[static_cast<std::size_t>(y) * (w_ + 1) + x]; }

    int w_, h_;
    std::vector<double> s_;
};

std::vector<double> gaussian_kernel(double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * r + 1);
    double sum = 0.0;
    for (int i = -r; i <= r; ++i) {
        k[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[i + r];
    }
    for (double& v : k) v /= sum;
    return k;
}

}  // namespace

ChromaticBlurModel::ChromaticBlurModel(double base_sigma_px, double slope_px_per_nm, GuideRange vnir_guide,
                                       GuideRange swir_guide)
    : base_(base_sigma_px), slope_(slope_px_per_nm), vnir_guide_(vnir_guide), swir_guide_(swir_guide) {
    BH3D_REQUIRE(base_ >= 0.0 && slope_ >= 0.0, ValidationError, "blur parameters must be non-negative");
}

double ChromaticBlurModel::sigma(double lambda, CameraTag source) const {
    BH3D_REQUIRE(source != CameraTag::FUSED, ContractError, "blur is defined per physical camera band");
    const GuideRange& g = source == CameraTag::VNIR ? vnir_guide_ : swir_guide_;
    const double d = g.distance(lambda);
    return d == 0.0 ? 0.0 : base_ + slope_ * d;
}

SpectralCube ChromaticBlurModel::apply(const SpectralCube& cube) const {
    SpectralCube out = cube;
    const auto& grid = cube.grid();
    parallel_for(0, grid.size(), [&](std::size_t b) {
        const double s = sigma(grid[b], grid.band_source(b));
        if (s > 0.0) out.set_band_image(b, gaussian_blur(cube.band_image(b), s));
    });
    return out;
}

nlohmann::json ChromaticBlurModel::to_json() const {
    return {{"base_sigma_px", base_},
            {"slope_px_per_nm", slope_},
            {"vnir_guide_nm", {vnir_guide_.lo, vnir_guide_.hi}},
            {"swir_guide_nm", {swir_guide_.lo, swir_guide_.hi}}};
}

ChromaticBlurModel ChromaticBlurModel::from_json(const nlohmann::json& j) {
    try {
        const auto v = j.at("vnir_guide_nm").get<std::vector<double>>();
        const auto s = j.at("swir_guide_nm").get<std::vector<double>>();
        BH3D_REQUIRE(v.size() == 2 && s.size() == 2, ConfigError, "guide range must be [lo, hi]");
        return ChromaticBlurModel(j.at("base_sigma_px").get<double>(), j.at("slope_px_per_nm").get<double>(),
                                  {v[0], v[1]}, {s[0], s[1]});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed blur model: ") + e.what());
    }
}

Image gaussian_blur(const Image& image, double sigma) {
    BH3D_REQUIRE(sigma >= 0.0, ContractError, "blur sigma must be non-negative");
    if (sigma == 0.0) return image;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int w = image.width, h = image.height;
    Image tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * image.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int i = -r; i <= r; ++i) s += k[i + r] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = s;
        }
    return out;
}

Image guided_filter(const Image& input, const Image& guide, int radius, double eps, const Mask* mask) {
    BH3D_REQUIRE(input.width == guide.width && input.height == guide.height, ContractError,
                 "guided filter: input and guide sizes differ");
    BH3D_REQUIRE(radius >= 1, ContractError, "guided filter radius must be at least 1");
    BH3D_REQUIRE(eps >= 0.0, ContractError, "guided filter edge parameter must be non-negative");
    const int w = input.width, h = input.height;
    if (mask) BH3D_REQUIRE(mask->size() == input.pixel_count(), ContractError, "guided filter: mask size differs");
    auto in = [&](int x, int y) { return !mask || (*mask)[input.index(x, y)] != 0; };

    Integral n(w, h), si(w, h), sp(w, h), sii(w, h), sip(w, h);
    n.build([&](int x, int y) { return in(x, y) ? 1.0 : 0.0; });
    si.build([&](int x, int y) { return in(x, y) ? guide.at(x, y) : 0.0; });
    sp.build([&](int x, int y) { return in(x, y) ? input.at(x, y) : 0.0; });
    sii.build([&](int x, int y) { return in(x, y) ? guide.at(x, y) * guide.at(x, y) : 0.0; });
    sip.build([&](int x, int y) { return in(x, y) ? guide.at(x, y) * input.at(x, y) : 0.0; });

    auto window = [&](int x, int y, int& x0, int& y0, int& x1, int& y1) {
        x0 = std::max(0, x - radius);
        y0 = std::max(0, y - radius);
        x1 = std::min(w - 1, x + radius);
        y1 = std::min(h - 1, y + radius);
    };

    // Per-window linear coefficients p ~ a * I + b.
    Image a(w, h), b(w, h);
    Integral sa(w, h), sb(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int x0, y0, x1, y1;
            window(x, y, x0, y0, x1, y1);
            const double cnt = n.box(x0, y0, x1, y1);
            if (cnt <= 0.0) continue;
            const double mi = si.box(x0, y0, x1, y1) / cnt;
            const double mp = sp.box(x0, y0, x1, y1) / cnt;
            const double var = std::max(0.0, sii.box(x0, y0, x1, y1) / cnt - mi * mi);
            const double cov = sip.box(x0, y0, x1, y1) / cnt - mi * mp;
            const double denom = var + eps;
            a.at(x, y) = denom > 0.0 ? cov / denom : 0.0;
            b.at(x, y) = mp - a.at(x, y) * mi;
        }
    sa.build([&](int x, int y) { return in(x, y) ? a.at(x, y) : 0.0; });
    sb.build([&](int x, int y) { return in(x, y) ? b.at(x, y) : 0.0; });

    Image out = input;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!in(x, y)) continue;
            int x0, y0, x1, y1;
            window(x, y, x0, y0, x1, y1);
            const double cnt = n.box(x0, y0, x1, y1);
            out.at(x, y) = (sa.box(x0, y0, x1, y1) / cnt) * guide.at(x, y) + sb.box(x0, y0, x1, y1) / cnt;
        }
    return out;
}

std::size_t nearest_guide_band(const WavelengthGrid& grid, double lambda, const GuideRange& range, CameraTag source) {
    std::size_t best = kNoBand;
    double best_d = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.band_source(i) != source || !range.contains(grid[i])) continue;
        const double d = std::abs(grid[i] - lambda);
        // Bands are increasing, so a strict comparison keeps the shorter wavelength on ties.
        if (best == kNoBand || d < best_d) {
            best = i;
            best_d = d;
        }
    }
    if (best == kNoBand) {
        throw ConfigError(std::string(to_string(source)) + " bands do not intersect the guide set [" +
                          std::to_string(range.lo) + ", " + std::to_string(range.hi) + "] nm");
    }
    return best;
}

SpectralCube guided_sharpen(const SpectralCube& cube, const FusionConfig& config, const Mask* swir_mask) {
    config.validate();
    const auto& grid = cube.grid();
    SpectralCube out = cube;
    std::vector<std::size_t> guide(grid.size(), kNoBand);
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const CameraTag src = grid.band_source(b);
        const GuideRange& range = config.guide_for(src);
        if (!range.contains(grid[b])) guide[b] = nearest_guide_band(grid, grid[b], range, src);
    }
    parallel_for(0, grid.size(), [&](std::size_t b) {
        if (guide[b] == kNoBand) return;
        const Mask* m = (swir_mask && grid.band_source(b) == CameraTag::SWIR) ? swir_mask : &cube.valid();
        out.set_band_image(b, guided_filter(cube.band_image(b), cube.band_image(guide[b]), config.guided_radius,
                                            config.guided_eps, m));
    });
    return out;
}

}  // namespace bh3d::fusion
