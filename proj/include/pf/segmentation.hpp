#pragma once

#include <string>
#include <vector>

#include "pf/image.hpp"

namespace pf {

enum class SegAlgorithm { felzenszwalb, slic };

/// Label-per-pixel partition. Labels are compact (0..n_segments-1) and every
/// label occurs at least once.
struct SegmentMap {
    std::vector<int> labels;  // row-major
    int width = 0;
    int height = 0;
    int n_segments = 0;
    SegAlgorithm algorithm = SegAlgorithm::felzenszwalb;
    std::string params;  // human-readable parameter echo for the sidecar

    int label_at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
};

struct AnomalyResult {
    std::vector<double> scores;  // per-segment mean absolute difference
    double mean_score = 0.0;
    double std_score = 0.0;  // population std
    double threshold = 0.0;  // mean + 2 * std
    std::vector<int> flagged;
    PixelImage flagged_mask;  // 1.0 inside flagged segments
    std::string note;         // "degenerate segmentation" when < 2 segments
};

/// Graph-based segmentation (Felzenszwalb-Huttenlocher). Deterministic:
/// edges sort on (weight, source, target).
SegmentMap felzenszwalb(const PixelImage& img, double k = 100.0 / 255.0, int min_size = 50,
                        double sigma = 0.8);

/// SLIC superpixels in LAB. Throws std::invalid_argument
/// ("over-segmentation request") when n_segments exceeds the pixel count.
/// Post-processing re-splits disconnected labels and absorbs fragments
/// smaller than S^2/4 into their dominant neighbor, so the returned segment
/// count can differ from the request.
SegmentMap slic(const PixelImage& img, int n_segments, double compactness,
                int iterations = 10);

/// Per-segment mean absolute grayscale difference; flags segments scoring
/// above mean + 2 * population std.
AnomalyResult anomaly_scores(const PixelImage& original, const PixelImage& suspect,
                             const SegmentMap& seg);

/// Writes "<stem>.pgm" (16-bit label map) and a "<stem>.json" sidecar
/// recording {algorithm, params, n_segments}.
void save_segment_map(const std::string& stem, const SegmentMap& seg);

}  // namespace pf
