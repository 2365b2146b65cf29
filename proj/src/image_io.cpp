#include "pf/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace pf {

namespace {

inline uint8_t quantize8(float v) {
    double q = std::lround(std::clamp(static_cast<double>(v), 0.0, 1.0) * 255.0);
    return static_cast<uint8_t>(q);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

PixelImage load_png_file(std::FILE* fp, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error("png init failed");
    }
    std::vector<png_bytep> row_ptrs;
    std::vector<uint8_t> raw;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("corrupt PNG: " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth == 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("unsupported bit depth: " + path);
    }

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    const std::size_t stride = png_get_rowbytes(png, info);
    raw.resize(stride * h);
    row_ptrs.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = raw.data() + y * stride;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    const bool has_alpha = channels == 2 || channels == 4;
    const int color_channels = channels >= 3 ? 3 : 1;
    PixelImage out(static_cast<int>(w), static_cast<int>(h), color_channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        const uint8_t* row = raw.data() + y * stride;
        for (png_uint_32 x = 0; x < w; ++x) {
            const uint8_t* px = row + x * channels;
            double a = has_alpha ? px[color_channels] / 255.0 : 1.0;
            for (int c = 0; c < color_channels; ++c) {
                // Composite over white.
                double v = a * (px[c] / 255.0) + (1.0 - a);
                out.at(static_cast<int>(x), static_cast<int>(y), c) =
                    static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

PixelImage load_pnm_file(std::FILE* fp, const std::string& path) {
    auto next_token = [&]() -> std::string {
        std::string tok;
        int ch;
        while ((ch = std::fgetc(fp)) != EOF) {
            if (ch == '#') {
                while ((ch = std::fgetc(fp)) != EOF && ch != '\n') {}
                continue;
            }
            if (std::isspace(ch)) {
                if (!tok.empty()) break;
                continue;
            }
            tok.push_back(static_cast<char>(ch));
        }
        return tok;
    };

    std::string magic = next_token();
    if (magic != "P5" && magic != "P6") throw std::runtime_error("unsupported PNM: " + path);
    const int channels = magic == "P6" ? 3 : 1;
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token());
        h = std::stoi(next_token());
        maxval = std::stoi(next_token());
    } catch (const std::exception&) {
        throw std::runtime_error("corrupt PNM header: " + path);
    }
    if (w < 1 || h < 1 || maxval != 255) throw std::runtime_error("unsupported PNM: " + path);

    std::vector<uint8_t> raw(static_cast<std::size_t>(w) * h * channels);
    if (std::fread(raw.data(), 1, raw.size(), fp) != raw.size())
        throw std::runtime_error("truncated PNM: " + path);

    PixelImage out(w, h, channels);
    for (std::size_t i = 0; i < raw.size(); ++i)
        out.data[i] = static_cast<float>(raw[i] / 255.0);
    return out;
}

}  // namespace

PixelImage load_image(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw std::runtime_error("cannot open: " + path);
    uint8_t sig[8] = {0};
    std::size_t got = std::fread(sig, 1, 8, fp.get());
    std::rewind(fp.get());
    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return load_png_file(fp.get(), path);
    if (got >= 2 && sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6'))
        return load_pnm_file(fp.get(), path);
    throw std::runtime_error("unrecognized image format: " + path);
}

void save_png(const std::string& path, const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw std::runtime_error("cannot write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png write failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = quantize8(img.at(x, y, c));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pnm(const std::string& path, const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << (img.channels == 3 ? "P6" : "P5") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<uint8_t> raw(img.data.size());
    for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = quantize8(img.data[i]);
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void save_image(const std::string& path, const PixelImage& img) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot);
    for (char& c : ext) c = static_cast<char>(std::tolower(c));
    if (ext == ".ppm" || ext == ".pgm") {
        save_pnm(path, img);
    } else {
        save_png(path, img);
    }
}

void save_pgm16(const std::string& path, const std::vector<uint16_t>& values,
                int width, int height) {
    if (values.size() != static_cast<std::size_t>(width) * height)
        throw std::invalid_argument("bad label buffer size");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out << "P5\n" << width << " " << height << "\n65535\n";
    for (uint16_t v : values) {
        // PGM stores 16-bit samples most significant byte first.
        char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xFF)};
        out.write(bytes, 2);
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace pf
