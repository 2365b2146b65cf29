#pragma once

#include <vector>

#include "pf/image.hpp"

namespace pf {

/// SSIM over an 11x11 Gaussian window (sigma 1.5), valid positions only.
struct SsimResult {
    double mean_ssim = 0.0;
    std::vector<double> raw_map;  // local scores, row-major, map_width x map_height
    int map_width = 0;
    int map_height = 0;
    PixelImage ssim_map;  // raw scores rescaled from (-1,1] to [0,1] for display
    int window_size = 11;
    double window_sigma = 1.5;
};

struct MsSsimResult {
    std::vector<double> cs_scores;  // contrast*structure per scale, fine to coarse
    double luminance = 1.0;         // luminance term at the coarsest scale
    double score = 1.0;             // exponent-weighted product
    std::vector<double> weights;    // weights actually applied (renormalized on fallback)
    int scales_used = 5;
    bool reduced_scales = false;  // set when the image was too small for 5 scales
};

/// Throws std::invalid_argument("shape mismatch") on dimension/channel
/// mismatch and std::invalid_argument("too small") when min(w,h) < 11.
SsimResult ssim(const PixelImage& x, const PixelImage& y);

/// 5-scale MS-SSIM, 2x2 mean-pool downsampling, weights
/// 0.0448/0.2856/0.3001/0.2363/0.1333. Images too small for 5 scales fall
/// back to the feasible prefix with renormalized weights (reduced_scales set).
MsSsimResult ms_ssim(const PixelImage& x, const PixelImage& y);

/// RMS pixel difference: sqrt(sum((x-y)^2) / samples), in [0,1].
double l2_distance(const PixelImage& x, const PixelImage& y);

}  // namespace pf
