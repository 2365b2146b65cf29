#include "pf/image.hpp"

#include <algorithm>
#include <cmath>

namespace pf {

PixelImage::PixelImage(int w, int h, int c, float fill)
    : width(w), height(h), channels(c) {
    if (w <= 0 || h <= 0 || (c != 1 && c != 3))
        throw std::invalid_argument("bad image shape");
    data.assign(static_cast<std::size_t>(w) * h * c, fill);
}

double luma601(double r, double g, double b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return std::clamp(y, 0.0, 1.0);
}

PixelImage to_grayscale(const PixelImage& img) {
    if (img.channels == 1) return img;
    PixelImage out(img.width, img.height, 1);
    const float* src = img.data.data();
    for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i) {
        const float* p = src + i * 3;
        out.data[i] = static_cast<float>(luma601(p[0], p[1], p[2]));
    }
    return out;
}

namespace {

inline double srgb_to_linear(double c) {
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

inline double lab_f(double t) {
    constexpr double delta = 6.0 / 29.0;
    constexpr double d3 = delta * delta * delta;
    return t > d3 ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
}

}  // namespace

LabImage to_lab(const PixelImage& img) {
    if (img.channels != 3) throw std::invalid_argument("to_lab expects 3 channels");
    // D65 white point matching the sRGB primaries matrix below.
    constexpr double xn = 0.4124564 + 0.3575761 + 0.1804375;
    constexpr double yn = 0.2126729 + 0.7151522 + 0.0721750;
    constexpr double zn = 0.0193339 + 0.1191920 + 0.9503041;

    LabImage out;
    out.width = img.width;
    out.height = img.height;
    out.data.resize(img.pixel_count() * 3);
    for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i) {
        double r = srgb_to_linear(img.data[i * 3 + 0]);
        double g = srgb_to_linear(img.data[i * 3 + 1]);
        double b = srgb_to_linear(img.data[i * 3 + 2]);
        double x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
        double y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
        double z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
        double fx = lab_f(x / xn);
        double fy = lab_f(y / yn);
        double fz = lab_f(z / zn);
        out.data[i * 3 + 0] = static_cast<float>(116.0 * fy - 16.0);
        out.data[i * 3 + 1] = static_cast<float>(500.0 * (fx - fy));
        out.data[i * 3 + 2] = static_cast<float>(200.0 * (fy - fz));
    }
    return out;
}

PixelImage resize(const PixelImage& img, int new_w, int new_h) {
    if (new_w < 1 || new_h < 1) throw std::invalid_argument("empty target");
    if (img.empty()) throw std::invalid_argument("empty source");

    PixelImage out(new_w, new_h, img.channels);
    const double sx = static_cast<double>(img.width) / new_w;
    const double sy = static_cast<double>(img.height) / new_h;
    const int c = img.channels;

    for (int y = 0; y < new_h; ++y) {
        double fy = (y + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int x = 0; x < new_w; ++x) {
            double fx = (x + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            for (int k = 0; k < c; ++k) {
                double v = (1.0 - wy) * ((1.0 - wx) * img.at(x0, y0, k) + wx * img.at(x1, y0, k)) +
                           wy * ((1.0 - wx) * img.at(x0, y1, k) + wx * img.at(x1, y1, k));
                out.at(x, y, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    return out;
}

std::vector<double> gaussian_kernel(double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("invalid sigma");
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
        k[i + radius] = v;
        sum += v;
    }
    for (double& v : k) v /= sum;
    return k;
}

namespace {

// Separable pass along x or y. Accumulates the two taps equidistant from the
// center as one pair so the result is bit-identical under spatial flips.
void blur_pass(const PixelImage& src, PixelImage& dst, const std::vector<double>& kernel,
               bool horizontal) {
    const int radius = static_cast<int>(kernel.size() / 2);
    const int c = src.channels;
    for (int y = 0; y < src.height; ++y) {
        for (int x = 0; x < src.width; ++x) {
            for (int k = 0; k < c; ++k) {
                double acc = kernel[radius] * src.at(x, y, k);
                for (int j = 1; j <= radius; ++j) {
                    int am, ap, bm, bp;
                    if (horizontal) {
                        am = std::max(x - j, 0);
                        ap = std::min(x + j, src.width - 1);
                        bm = bp = y;
                    } else {
                        am = ap = x;
                        bm = std::max(y - j, 0);
                        bp = std::min(y + j, src.height - 1);
                    }
                    acc += kernel[radius + j] *
                           (static_cast<double>(src.at(am, bm, k)) + src.at(ap, bp, k));
                }
                dst.at(x, y, k) = static_cast<float>(std::clamp(acc, 0.0, 1.0));
            }
        }
    }
}

}  // namespace

PixelImage gaussian_blur(const PixelImage& img, double sigma) {
    const std::vector<double> kernel = gaussian_kernel(sigma);  // validates sigma
    PixelImage tmp(img.width, img.height, img.channels);
    PixelImage out(img.width, img.height, img.channels);
    blur_pass(img, tmp, kernel, true);
    blur_pass(tmp, out, kernel, false);
    return out;
}

PixelImage flip_horizontal(const PixelImage& img) {
    PixelImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int k = 0; k < img.channels; ++k)
                out.at(x, y, k) = img.at(img.width - 1 - x, y, k);
    return out;
}

PixelImage flip_vertical(const PixelImage& img) {
    PixelImage out(img.width, img.height, img.channels);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int k = 0; k < img.channels; ++k)
                out.at(x, y, k) = img.at(x, img.height - 1 - y, k);
    return out;
}

}  // namespace pf
