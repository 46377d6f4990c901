#include "bh3d/core/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

#include <json.hpp>

#include "bh3d/core/error.hpp"

namespace bh3d::io {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "payload writer assumes a little-endian host");

namespace {

constexpr const char* kLayout = "row-major, band-fastest";

fs::path with_suffix(const fs::path& stem, const char* suffix) {
    fs::path p = stem;
    p += suffix;
    return p;
}

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
        if (ec) throw IoError("cannot create directory " + p.parent_path().string() + ": " + ec.message());
    }
}

void write_json(const fs::path& path, const json& j) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

template <class T>
T get_field(const json& j, const char* key, const fs::path& path) {
    if (!j.contains(key)) throw IoError("sidecar " + path.string() + " lacks field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw IoError("sidecar " + path.string() + " field '" + key + "': " + e.what());
    }
}

}  // namespace

fs::path normalize_stem(const fs::path& p) {
    const auto ext = p.extension();
    if (ext == ".json" || ext == ".bin") {
        fs::path s = p;
        s.replace_extension();
        return s;
    }
    return p;
}

void write_f32(const fs::path& path, std::span<const double> values) {
    ensure_parent(path);
    std::vector<float> buf(values.size());
    std::transform(values.begin(), values.end(), buf.begin(), [](double v) { return static_cast<float>(v); });
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<double> read_f32(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<float> buf(expected);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(expected * sizeof(float)));
    if (static_cast<std::size_t>(in.gcount()) != expected * sizeof(float)) {
        throw IoError("payload " + path.string() + " shorter than declared shape");
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw IoError("payload " + path.string() + " longer than declared shape");
    }
    return {buf.begin(), buf.end()};
}

void write_mask(const fs::path& path, const Mask& mask) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(mask.data()), static_cast<std::streamsize>(mask.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Mask read_mask(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    Mask m(expected);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(in.gcount()) != expected) throw IoError("mask " + path.string() + " too short");
    return m;
}

void write_cube(const fs::path& stem_in, const SpectralCube& cube) {
    const fs::path stem = normalize_stem(stem_in);
    const auto bands = cube.grid().bands();
    json j = {
        {"kind", "spectral_cube"},
        {"width", cube.width()},
        {"height", cube.height()},
        {"bands", std::vector<double>(bands.begin(), bands.end())},
        {"camera_tag", std::string(to_string(cube.grid().tag()))},
        {"layout", kLayout},
        {"dtype", "float32-le"},
        {"payload", with_suffix(stem, ".bin").filename().string()},
        {"mask", with_suffix(stem, ".mask").filename().string()},
    };
    if (cube.grid().tag() == CameraTag::FUSED) j["vnir_band_count"] = cube.grid().vnir_band_count();
    write_f32(with_suffix(stem, ".bin"), cube.data());
    write_mask(with_suffix(stem, ".mask"), cube.valid());
    write_json(with_suffix(stem, ".json"), j);
}

SpectralCube read_cube(const fs::path& stem_in) {
    const fs::path stem = normalize_stem(stem_in);
    const fs::path side = with_suffix(stem, ".json");
    const json j = read_json(side);
    const int w = get_field<int>(j, "width", side);
    const int h = get_field<int>(j, "height", side);
    auto bands = get_field<std::vector<double>>(j, "bands", side);
    const CameraTag tag = camera_tag_from_string(get_field<std::string>(j, "camera_tag", side));
    WavelengthGrid grid = tag == CameraTag::FUSED
                              ? WavelengthGrid(bands, tag, j.value("vnir_band_count", bands.size()))
                              : WavelengthGrid(bands, tag);
    const std::size_t n = static_cast<std::size_t>(w) * h * grid.size();
    SpectralCube cube(w, h, std::move(grid), read_f32(with_suffix(stem, ".bin"), n));
    const fs::path mask = with_suffix(stem, ".mask");
    if (fs::exists(mask)) cube.valid() = read_mask(mask, cube.pixel_count());
    return cube;
}

void write_stack(const fs::path& stem_in, const ScanStack& stack) {
    const fs::path stem = normalize_stem(stem_in);
    const auto angles = stack.angles();
    const json j = {
        {"kind", "scan_stack"},
        {"width", stack.width()},
        {"height", stack.height()},
        {"angles", std::vector<double>(angles.begin(), angles.end())},
        {"camera_tag", std::string(to_string(stack.tag()))},
        {"layout", kLayout},
        {"dtype", "float32-le"},
        {"payload", with_suffix(stem, ".bin").filename().string()},
        {"mask", with_suffix(stem, ".mask").filename().string()},
    };
    write_f32(with_suffix(stem, ".bin"), stack.data());
    write_mask(with_suffix(stem, ".mask"), stack.valid());
    write_json(with_suffix(stem, ".json"), j);
}

ScanStack read_stack(const fs::path& stem_in) {
    const fs::path stem = normalize_stem(stem_in);
    const fs::path side = with_suffix(stem, ".json");
    const json j = read_json(side);
    ScanStack s(get_field<int>(j, "width", side), get_field<int>(j, "height", side),
                get_field<std::vector<double>>(j, "angles", side),
                camera_tag_from_string(get_field<std::string>(j, "camera_tag", side)));
    s.data() = read_f32(with_suffix(stem, ".bin"), s.data().size());
    const fs::path mask = with_suffix(stem, ".mask");
    if (fs::exists(mask)) s.valid() = read_mask(mask, s.pixel_count());
    return s;
}

void write_depth(const fs::path& stem_in, const DepthMap& depth) {
    const fs::path stem = normalize_stem(stem_in);
    const json j = {
        {"kind", "depth_map"},
        {"width", depth.width},
        {"height", depth.height},
        {"units", "m"},
        {"invalid_value", DepthMap::kInvalidDepth},
        {"layout", "row-major"},
        {"dtype", "float32-le"},
        {"payload", with_suffix(stem, ".bin").filename().string()},
        {"mask", with_suffix(stem, ".mask").filename().string()},
    };
    write_f32(with_suffix(stem, ".bin"), depth.depth);
    write_mask(with_suffix(stem, ".mask"), depth.valid);
    write_json(with_suffix(stem, ".json"), j);
}

DepthMap read_depth(const fs::path& stem_in) {
    const fs::path stem = normalize_stem(stem_in);
    const fs::path side = with_suffix(stem, ".json");
    const json j = read_json(side);
    DepthMap d(get_field<int>(j, "width", side), get_field<int>(j, "height", side));
    d.depth = read_f32(with_suffix(stem, ".bin"), d.pixel_count());
    const fs::path mask = with_suffix(stem, ".mask");
    if (fs::exists(mask)) {
        d.valid = read_mask(mask, d.pixel_count());
    } else {
        for (std::size_t i = 0; i < d.pixel_count(); ++i) d.valid[i] = d.depth[i] > 0.0;
    }
    return d;
}

void write_image(const fs::path& stem_in, const Image& image, const std::string& kind) {
    const fs::path stem = normalize_stem(stem_in);
    const json j = {
        {"kind", kind},
        {"width", image.width},
        {"height", image.height},
        {"layout", "row-major"},
        {"dtype", "float32-le"},
        {"payload", with_suffix(stem, ".bin").filename().string()},
    };
    write_f32(with_suffix(stem, ".bin"), image.data);
    write_json(with_suffix(stem, ".json"), j);
}

Image read_image(const fs::path& stem_in) {
    const fs::path stem = normalize_stem(stem_in);
    const fs::path side = with_suffix(stem, ".json");
    const json j = read_json(side);
    Image img(get_field<int>(j, "width", side), get_field<int>(j, "height", side));
    img.data = read_f32(with_suffix(stem, ".bin"), img.pixel_count());
    return img;
}

void write_spectrum_csv(const fs::path& path, const WavelengthGrid& grid, std::span<const double> values) {
    BH3D_REQUIRE(values.size() == grid.size(), ContractError, "spectrum length does not match grid");
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "wavelength_nm,reflectance\n";
    char line[64];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(line, sizeof line, "%.6g,%.9g\n", grid[i], values[i]);
        out << line;
    }
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};

std::uint8_t to_byte(double v, double lo, double hi) {
    if (!(hi > lo)) return 0;
    const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(t * 255.0));
}

void write_png(const fs::path& path, int width, int height, int channels, const std::vector<std::uint8_t>& pixels) {
    ensure_parent(path);
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encoding failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
                 channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y) {
        png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width * channels);
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

void write_png_gray(const fs::path& path, const Image& image, double lo, double hi) {
    std::vector<std::uint8_t> px(image.pixel_count());
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = to_byte(image.data[i], lo, hi);
    write_png(path, image.width, image.height, 1, px);
}

void write_png_rgb(const fs::path& path, const Image& r, const Image& g, const Image& b, double lo, double hi) {
    BH3D_REQUIRE(r.width == g.width && g.width == b.width && r.height == g.height && g.height == b.height,
                 ContractError, "RGB channel shape mismatch");
    std::vector<std::uint8_t> px(r.pixel_count() * 3);
    for (std::size_t i = 0; i < r.pixel_count(); ++i) {
        px[3 * i + 0] = to_byte(r.data[i], lo, hi);
        px[3 * i + 1] = to_byte(g.data[i], lo, hi);
        px[3 * i + 2] = to_byte(b.data[i], lo, hi);
    }
    write_png(path, r.width, r.height, 3, px);
}

}  // namespace bh3d::io
