#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pf {

/// Row-major floating point raster with samples in [0,1].
///
/// Every image operation in this library consumes and produces PixelImage.
/// Samples are stored interleaved (RGB RGB ... for 3 channels). Operations
/// keep samples inside [0,1]; 8-bit quantization happens only at file I/O.
struct PixelImage {
    int width = 0;
    int height = 0;
    int channels = 0;  // 1 or 3
    std::vector<float> data;

    PixelImage() = default;
    PixelImage(int w, int h, int c, float fill = 0.0f);

    std::size_t sample_count() const { return data.size(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }

    float& at(int x, int y, int c = 0) {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
    float at(int x, int y, int c = 0) const {
        return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    bool same_shape(const PixelImage& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    bool empty() const { return data.empty(); }
};

/// CIELAB raster. L in [0,100], a/b roughly [-128,127]. Interleaved L,a,b.
struct LabImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // 3 samples per pixel

    float& at(int x, int y, int c) {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
    float at(int x, int y, int c) const {
        return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
    }
};

/// BT.601 luma. Single-channel input is returned unchanged.
PixelImage to_grayscale(const PixelImage& img);

/// BT.601 luma of one RGB triple, in [0,1].
double luma601(double r, double g, double b);

/// sRGB -> linear RGB -> XYZ (D65) -> CIELAB.
LabImage to_lab(const PixelImage& img);

/// Bilinear resampling with half-pixel-center alignment.
/// Throws std::invalid_argument("empty target") when new_w or new_h < 1.
PixelImage resize(const PixelImage& img, int new_w, int new_h);

/// Separable Gaussian convolution, kernel radius ceil(3*sigma), kernel
/// normalized to sum 1, clamp-to-edge borders.
/// Throws std::invalid_argument("invalid sigma") when sigma <= 0.
PixelImage gaussian_blur(const PixelImage& img, double sigma);

PixelImage flip_horizontal(const PixelImage& img);
PixelImage flip_vertical(const PixelImage& img);

/// Normalized 1D Gaussian kernel used by gaussian_blur (exposed for tests).
std::vector<double> gaussian_kernel(double sigma);

}  // namespace pf
