#pragma once

#include <utility>
#include <vector>

#include "pf/image.hpp"

namespace pf {

struct Heatmap {
    PixelImage values;  // 1 channel, [0,1]; max is exactly 1 unless all-zero
    int peak_x = 0;
    int peak_y = 0;
    double energy = 0.0;  // mean of values
};

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;
};

struct ContourSet {
    std::vector<std::vector<std::pair<int, int>>> contours;  // closed boundary chains
    std::vector<BoundingBox> bounding_boxes;
    std::vector<int> areas;  // filled component pixel counts

    std::size_t size() const { return contours.size(); }
    bool empty() const { return contours.empty(); }
};

/// LAB difference heatmap: per-pixel norm of (dL/100, da/255, db/255),
/// Gaussian-blurred, normalized so the max is 1 (identical inputs give an
/// all-zero map). Throws std::invalid_argument("shape mismatch").
Heatmap lab_heatmap(const PixelImage& original, const PixelImage& suspect,
                    double blur_sigma = 2.0);

/// Difference contours: grayscale absdiff -> blur(sigma 1) -> Otsu ->
/// 8-connected components (>= min_area) -> clockwise Moore boundary trace
/// from each component's top-left-most pixel.
ContourSet find_contours(const PixelImage& original, const PixelImage& suspect,
                         int min_area = 25);

/// Suspect with the heatmap alpha-blended (red-yellow ramp, alpha 0.4*heat)
/// and contour pixels drawn in pure red on top.
PixelImage overlay(const PixelImage& suspect, const ContourSet& contours,
                   const Heatmap& heatmap);

}  // namespace pf
