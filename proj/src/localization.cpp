#include "pf/localization.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace pf {

namespace {

/// Separable Gaussian blur on an unclamped double plane; same kernel and
/// clamp-to-edge policy as gaussian_blur, but heatmap magnitudes may exceed 1
/// so the [0,1] raster clamp must not apply.
std::vector<double> blur_plane(const std::vector<double>& plane, int w, int h, double sigma) {
    const std::vector<double> kernel = gaussian_kernel(sigma);
    const int radius = static_cast<int>(kernel.size() / 2);
    std::vector<double> tmp(plane.size()), out(plane.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = kernel[radius] * plane[static_cast<std::size_t>(y) * w + x];
            for (int j = 1; j <= radius; ++j) {
                const int xm = std::max(x - j, 0);
                const int xp = std::min(x + j, w - 1);
                acc += kernel[radius + j] * (plane[static_cast<std::size_t>(y) * w + xm] +
                                             plane[static_cast<std::size_t>(y) * w + xp]);
            }
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = kernel[radius] * tmp[static_cast<std::size_t>(y) * w + x];
            for (int j = 1; j <= radius; ++j) {
                const int ym = std::max(y - j, 0);
                const int yp = std::min(y + j, h - 1);
                acc += kernel[radius + j] * (tmp[static_cast<std::size_t>(ym) * w + x] +
                                             tmp[static_cast<std::size_t>(yp) * w + x]);
            }
            out[static_cast<std::size_t>(y) * w + x] = acc;
        }
    return out;
}

PixelImage ensure_rgb(const PixelImage& img) {
    if (img.channels == 3) return img;
    PixelImage out(img.width, img.height, 3);
    for (std::size_t i = 0, n = img.pixel_count(); i < n; ++i)
        for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = img.data[i];
    return out;
}

}  // namespace

Heatmap lab_heatmap(const PixelImage& original, const PixelImage& suspect, double blur_sigma) {
    if (!original.same_shape(suspect)) throw std::invalid_argument("shape mismatch");
    const LabImage la = to_lab(ensure_rgb(original));
    const LabImage lb = to_lab(ensure_rgb(suspect));

    const int w = original.width, h = original.height;
    std::vector<double> norm(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < norm.size(); ++i) {
        const double dl = (static_cast<double>(la.data[i * 3 + 0]) - lb.data[i * 3 + 0]) / 100.0;
        const double da = (static_cast<double>(la.data[i * 3 + 1]) - lb.data[i * 3 + 1]) / 255.0;
        const double db = (static_cast<double>(la.data[i * 3 + 2]) - lb.data[i * 3 + 2]) / 255.0;
        norm[i] = std::sqrt(dl * dl + da * da + db * db);
    }
    std::vector<double> smooth = blur_plane(norm, w, h, blur_sigma);

    Heatmap hm;
    hm.values = PixelImage(w, h, 1);
    double peak = 0.0;
    std::size_t peak_i = 0;
    for (std::size_t i = 0; i < smooth.size(); ++i)
        if (smooth[i] > peak) {
            peak = smooth[i];
            peak_i = i;
        }
    hm.peak_x = static_cast<int>(peak_i % w);
    hm.peak_y = static_cast<int>(peak_i / w);
    if (peak > 0.0) {
        double total = 0.0;
        for (std::size_t i = 0; i < smooth.size(); ++i) {
            const double v = smooth[i] / peak;
            hm.values.data[i] = static_cast<float>(v);
            total += v;
        }
        hm.energy = total / static_cast<double>(smooth.size());
    }
    return hm;
}

namespace {

/// Otsu's threshold over a 256-bin histogram; returns the bin index that
/// maximizes between-class variance (lowest index on ties).
int otsu_bin(const std::vector<int>& hist, long total) {
    long sum_all = 0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<long>(i) * hist[i];
    long w0 = 0, sum0 = 0;
    double best = -1.0;
    int best_bin = 0;
    for (int t = 0; t < 256; ++t) {
        w0 += hist[t];
        if (w0 == 0) continue;
        const long w1 = total - w0;
        if (w1 == 0) break;
        sum0 += static_cast<long>(t) * hist[t];
        const double mu0 = static_cast<double>(sum0) / w0;
        const double mu1 = static_cast<double>(sum_all - sum0) / w1;
        const double between = static_cast<double>(w0) * w1 * (mu0 - mu1) * (mu0 - mu1);
        if (between > best) {
            best = between;
            best_bin = t;
        }
    }
    return best_bin;
}

const std::array<std::pair<int, int>, 8> kMooreClockwise = {{
    {-1, 0},    // W
    {-1, -1},   // NW
    {0, -1},    // N
    {1, -1},    // NE
    {1, 0},     // E
    {1, 1},     // SE
    {0, 1},     // S
    {-1, 1},    // SW
}};

std::vector<std::pair<int, int>> moore_trace(const std::vector<int>& comp, int w, int h,
                                             int target, int start_x, int start_y) {
    auto inside = [&](int x, int y) {
        return x >= 0 && x < w && y >= 0 && y < h &&
               comp[static_cast<std::size_t>(y) * w + x] == target;
    };
    std::vector<std::pair<int, int>> chain;
    chain.emplace_back(start_x, start_y);

    // Backtrack starts west of the start pixel, which is outside the
    // component because the start is its top-left-most pixel.
    int px = start_x, py = start_y;
    int backtrack = 0;  // index into kMooreClockwise relative to (px, py)
    const int first_backtrack = backtrack;
    bool moved = false;
    const std::size_t guard = comp.size() * 8 + 16;
    for (std::size_t step = 0; step < guard; ++step) {
        int found = -1;
        for (int i = 1; i <= 8; ++i) {
            const int di = (backtrack + i) % 8;
            const int nx = px + kMooreClockwise[di].first;
            const int ny = py + kMooreClockwise[di].second;
            if (inside(nx, ny)) {
                found = di;
                break;
            }
        }
        if (found == -1) break;  // isolated pixel

        const int prev = (found + 7) % 8;
        const int nx = px + kMooreClockwise[found].first;
        const int ny = py + kMooreClockwise[found].second;
        // New backtrack: the cell just before the hit, re-expressed relative
        // to the new current pixel (it is 8-adjacent to both).
        const int bx = px + kMooreClockwise[prev].first;
        const int by = py + kMooreClockwise[prev].second;
        px = nx;
        py = ny;
        backtrack = 0;
        for (int i = 0; i < 8; ++i)
            if (px + kMooreClockwise[i].first == bx && py + kMooreClockwise[i].second == by) {
                backtrack = i;
                break;
            }
        // Jacob's criterion: re-entering the start pixel from the original
        // backtrack direction closes the boundary.
        if (px == start_x && py == start_y && backtrack == first_backtrack && moved) break;
        chain.emplace_back(px, py);
        moved = true;
    }
    return chain;
}

}  // namespace

ContourSet find_contours(const PixelImage& original, const PixelImage& suspect, int min_area) {
    if (!original.same_shape(suspect)) throw std::invalid_argument("shape mismatch");
    const PixelImage ga = to_grayscale(original);
    const PixelImage gb = to_grayscale(suspect);
    const int w = original.width, h = original.height;

    std::vector<double> diff(static_cast<std::size_t>(w) * h);
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = std::abs(static_cast<double>(ga.data[i]) - gb.data[i]);
    std::vector<double> smooth = blur_plane(diff, w, h, 1.0);

    std::vector<int> hist(256, 0);
    std::vector<int> bins(smooth.size());
    for (std::size_t i = 0; i < smooth.size(); ++i) {
        int b = static_cast<int>(smooth[i] * 256.0);
        b = std::clamp(b, 0, 255);
        bins[i] = b;
        ++hist[b];
    }
    const int t = otsu_bin(hist, static_cast<long>(smooth.size()));

    std::vector<int> comp(smooth.size(), -1);
    std::vector<int> comp_size;
    std::vector<std::pair<int, int>> comp_start;  // top-left-most pixel per component
    std::vector<BoundingBox> comp_box;
    std::vector<int> stack;
    int next = 0;
    for (int p = 0; p < static_cast<int>(smooth.size()); ++p) {
        if (bins[p] <= t || comp[p] != -1) continue;
        comp[p] = next;
        stack.push_back(p);
        int count = 0;
        int min_x = w, min_y = h, max_x = -1, max_y = -1;
        while (!stack.empty()) {
            const int q = stack.back();
            stack.pop_back();
            ++count;
            const int qx = q % w, qy = q / w;
            min_x = std::min(min_x, qx);
            max_x = std::max(max_x, qx);
            min_y = std::min(min_y, qy);
            max_y = std::max(max_y, qy);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    const int nx = qx + dx, ny = qy + dy;
                    if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
                    const int r = ny * w + nx;
                    if (comp[r] == -1 && bins[r] > t) {
                        comp[r] = next;
                        stack.push_back(r);
                    }
                }
        }
        comp_size.push_back(count);
        comp_start.emplace_back(p % w, p / w);  // flood started at scan-order first pixel
        comp_box.push_back({min_x, min_y, max_x - min_x + 1, max_y - min_y + 1});
        ++next;
    }

    ContourSet cs;
    for (int ci = 0; ci < next; ++ci) {
        if (comp_size[ci] < min_area) continue;
        cs.contours.push_back(
            moore_trace(comp, w, h, ci, comp_start[ci].first, comp_start[ci].second));
        cs.bounding_boxes.push_back(comp_box[ci]);
        cs.areas.push_back(comp_size[ci]);
    }
    return cs;
}

PixelImage overlay(const PixelImage& suspect, const ContourSet& contours, const Heatmap& heatmap) {
    if (!heatmap.values.empty() &&
        (heatmap.values.width != suspect.width || heatmap.values.height != suspect.height))
        throw std::invalid_argument("shape mismatch");

    PixelImage out = ensure_rgb(suspect);
    if (!heatmap.values.empty()) {
        for (std::size_t i = 0, n = out.pixel_count(); i < n; ++i) {
            const double heat = heatmap.values.data[i];
            if (heat <= 0.0) continue;
            const double alpha = 0.4 * heat;
            // Red-to-yellow ramp: hotter pixels pick up more green.
            const double ramp[3] = {1.0, heat, 0.0};
            for (int c = 0; c < 3; ++c) {
                const double v = (1.0 - alpha) * out.data[i * 3 + c] + alpha * ramp[c];
                out.data[i * 3 + c] = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }
    }
    for (const auto& chain : contours.contours)
        for (const auto& [x, y] : chain) {
            out.at(x, y, 0) = 1.0f;
            out.at(x, y, 1) = 0.0f;
            out.at(x, y, 2) = 0.0f;
        }
    return out;
}

}  // namespace pf
