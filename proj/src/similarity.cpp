#include "pf/similarity.hpp"

#include <algorithm>
#include <cmath>

namespace pf {

namespace {

constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

/// Valid-mode separable weighted mean: horizontal then vertical pass with the
/// same 1D kernel. Output is (w - 2r) x (h - 2r).
std::vector<double> window_mean(const std::vector<double>& plane, int w, int h,
                                const std::vector<double>& kernel) {
    const int r = static_cast<int>(kernel.size() / 2);
    const int ow = w - 2 * r;
    const int oh = h - 2 * r;
    std::vector<double> horiz(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int j = 0; j < 2 * r + 1; ++j) acc += kernel[j] * plane[y * w + x + j];
            horiz[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int j = 0; j < 2 * r + 1; ++j)
                acc += kernel[j] * horiz[static_cast<std::size_t>(y + j) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

std::vector<double> as_doubles(const PixelImage& img) {
    return std::vector<double>(img.data.begin(), img.data.end());
}

SsimResult ssim_gray(const std::vector<double>& gx, const std::vector<double>& gy,
                     int w, int h) {
    SsimResult res;
    const std::vector<double> kernel = gaussian_kernel(res.window_sigma);
    const int r = static_cast<int>(kernel.size() / 2);  // 5 -> 11-tap window

    std::vector<double> xy(gx.size()), xx(gx.size()), yy(gx.size());
    for (std::size_t i = 0; i < gx.size(); ++i) {
        xy[i] = gx[i] * gy[i];
        xx[i] = gx[i] * gx[i];
        yy[i] = gy[i] * gy[i];
    }

    std::vector<double> mu_x = window_mean(gx, w, h, kernel);
    std::vector<double> mu_y = window_mean(gy, w, h, kernel);
    std::vector<double> e_xx = window_mean(xx, w, h, kernel);
    std::vector<double> e_yy = window_mean(yy, w, h, kernel);
    std::vector<double> e_xy = window_mean(xy, w, h, kernel);

    res.map_width = w - 2 * r;
    res.map_height = h - 2 * r;
    res.raw_map.resize(mu_x.size());
    res.ssim_map = PixelImage(res.map_width, res.map_height, 1);

    double total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
        const double cov = e_xy[i] - mu_x[i] * mu_y[i];
        const double s = ((2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * cov + kC2)) /
                         ((mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (var_x + var_y + kC2));
        res.raw_map[i] = s;
        res.ssim_map.data[i] = static_cast<float>(std::clamp((s + 1.0) * 0.5, 0.0, 1.0));
        total += s;
    }
    res.mean_ssim = total / static_cast<double>(mu_x.size());
    return res;
}

/// Contrast-structure mean (and optionally the luminance mean) at one scale.
void cs_and_luminance(const std::vector<double>& gx, const std::vector<double>& gy,
                      int w, int h, double* cs_out, double* lum_out) {
    const std::vector<double> kernel = gaussian_kernel(1.5);

    std::vector<double> xy(gx.size()), xx(gx.size()), yy(gx.size());
    for (std::size_t i = 0; i < gx.size(); ++i) {
        xy[i] = gx[i] * gy[i];
        xx[i] = gx[i] * gx[i];
        yy[i] = gy[i] * gy[i];
    }
    std::vector<double> mu_x = window_mean(gx, w, h, kernel);
    std::vector<double> mu_y = window_mean(gy, w, h, kernel);
    std::vector<double> e_xx = window_mean(xx, w, h, kernel);
    std::vector<double> e_yy = window_mean(yy, w, h, kernel);
    std::vector<double> e_xy = window_mean(xy, w, h, kernel);

    double cs_total = 0.0, lum_total = 0.0;
    for (std::size_t i = 0; i < mu_x.size(); ++i) {
        const double var_x = e_xx[i] - mu_x[i] * mu_x[i];
        const double var_y = e_yy[i] - mu_y[i] * mu_y[i];
        const double cov = e_xy[i] - mu_x[i] * mu_y[i];
        cs_total += (2.0 * cov + kC2) / (var_x + var_y + kC2);
        if (lum_out)
            lum_total += (2.0 * mu_x[i] * mu_y[i] + kC1) /
                         (mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1);
    }
    const double n = static_cast<double>(mu_x.size());
    *cs_out = cs_total / n;
    if (lum_out) *lum_out = lum_total / n;
}

std::vector<double> mean_pool2(const std::vector<double>& plane, int w, int h,
                               int* ow, int* oh) {
    *ow = w / 2;
    *oh = h / 2;
    std::vector<double> out(static_cast<std::size_t>(*ow) * *oh);
    for (int y = 0; y < *oh; ++y)
        for (int x = 0; x < *ow; ++x)
            out[static_cast<std::size_t>(y) * *ow + x] =
                (plane[(2 * y) * w + 2 * x] + plane[(2 * y) * w + 2 * x + 1] +
                 plane[(2 * y + 1) * w + 2 * x] + plane[(2 * y + 1) * w + 2 * x + 1]) *
                0.25;
    return out;
}

void check_pair(const PixelImage& x, const PixelImage& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("shape mismatch");
    if (std::min(x.width, x.height) < 11) throw std::invalid_argument("too small");
}

}  // namespace

SsimResult ssim(const PixelImage& x, const PixelImage& y) {
    check_pair(x, y);
    const PixelImage gx = to_grayscale(x);
    const PixelImage gy = to_grayscale(y);
    return ssim_gray(as_doubles(gx), as_doubles(gy), x.width, x.height);
}

MsSsimResult ms_ssim(const PixelImage& x, const PixelImage& y) {
    check_pair(x, y);
    static const std::vector<double> kWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

    int feasible = 1;
    for (int m = 2; m <= 5; ++m) {
        if (std::min(x.width, x.height) >> (m - 1) >= 11) feasible = m;
    }

    MsSsimResult res;
    res.scales_used = feasible;
    res.reduced_scales = feasible < 5;
    res.weights.assign(kWeights.begin(), kWeights.begin() + feasible);
    if (res.reduced_scales) {
        double wsum = 0.0;
        for (double v : res.weights) wsum += v;
        for (double& v : res.weights) v /= wsum;
    }

    std::vector<double> gx = as_doubles(to_grayscale(x));
    std::vector<double> gy = as_doubles(to_grayscale(y));
    int w = x.width, h = x.height;

    res.cs_scores.clear();
    double product = 1.0;
    for (int scale = 0; scale < feasible; ++scale) {
        double cs = 0.0, lum = 1.0;
        const bool coarsest = scale == feasible - 1;
        cs_and_luminance(gx, gy, w, h, &cs, coarsest ? &lum : nullptr);
        // Negative mean cs would make the fractional power undefined; the
        // standard remedy is flooring at zero (scores then bottom out at 0).
        cs = std::max(cs, 0.0);
        res.cs_scores.push_back(cs);
        product *= std::pow(cs, res.weights[scale]);
        if (coarsest) {
            res.luminance = lum;
            product *= std::pow(std::max(lum, 0.0), res.weights[scale]);
        } else {
            int nw = 0, nh = 0;
            gx = mean_pool2(gx, w, h, &nw, &nh);
            gy = mean_pool2(gy, w, h, &nw, &nh);
            w = nw;
            h = nh;
        }
    }
    res.score = product;
    return res;
}

double l2_distance(const PixelImage& x, const PixelImage& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("shape mismatch");
    if (x.empty()) throw std::invalid_argument("empty image");
    double acc = 0.0;
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const double d = static_cast<double>(x.data[i]) - y.data[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(x.data.size()));
}

}  // namespace pf
