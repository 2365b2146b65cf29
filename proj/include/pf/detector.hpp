#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pf/classifier.hpp"
#include "pf/hash.hpp"
#include "pf/image.hpp"
#include "pf/localization.hpp"
#include "pf/segmentation.hpp"

namespace pf {

enum class Channel { hash, ssim, anomaly, contour, heatmap, label };

const char* channel_name(Channel c);

struct Thresholds {
    int hash_threshold = 5;
    double ssim_threshold = 0.98;
    int min_contour_area = 25;
    double heatmap_energy_threshold = 0.02;
    // Label channel is a toy-classifier stand-in and stays off unless asked.
    std::vector<Channel> channels_enabled = {Channel::hash, Channel::ssim, Channel::anomaly,
                                             Channel::contour, Channel::heatmap};
    bool use_felzenszwalb = false;  // default anomaly segmentation is SLIC(100, 10)

    bool enabled(Channel c) const;
};

struct LabelChange {
    int original_label = 0;
    int patched_label = 0;
    bool changed = false;
};

struct DetectionReport {
    // hash channel
    std::array<std::string, 4> hash_original;  // wire format, order a/p/d/w
    std::array<std::string, 4> hash_suspect;
    std::array<int, 4> hash_distance{};
    std::array<bool, 4> hash_detected_per_algo{};
    bool hash_detected = false;
    // similarity channel
    double ssim = 1.0;
    double ms_ssim = 1.0;
    double l2_rms = 0.0;
    bool ssim_detected = false;
    // anomaly channel
    int anomaly_segments = 0;
    int anomaly_flagged = 0;
    double anomaly_threshold = 0.0;
    std::string anomaly_note;
    bool anomaly_detected = false;
    // contour channel
    int contour_count = 0;
    long contour_total_area = 0;
    bool contour_detected = false;
    // heatmap channel
    double heatmap_energy = 0.0;
    bool heatmap_detected = false;
    // optional label channel
    std::optional<LabelChange> label_change;
    bool label_detected = false;

    bool verdict = false;
    std::vector<std::string> channels_fired;
    std::vector<std::string> warnings;  // channel failures degrade, not abort
    Thresholds thresholds;

    bool operator==(const DetectionReport&) const;
};

/// Report plus the heavy artifacts the CLI renders (overlay, bars).
struct DetectionResult {
    DetectionReport report;
    Heatmap heatmap;
    ContourSet contours;
    AnomalyResult anomaly;
};

/// Runs every enabled channel; a channel that throws is recorded as a
/// warning and excluded from the verdict instead of aborting the scan.
/// Throws std::invalid_argument("shape mismatch") on unequal shapes.
DetectionResult detect(const PixelImage& original, const PixelImage& suspect,
                       const Thresholds& thresholds, const ToyClassifier* clf = nullptr);

std::string detection_report_json(const DetectionReport& report);
DetectionReport detection_report_from_json(const std::string& text);

struct CorpusRow {
    std::string original;
    std::string suspect;
    std::string label;
    bool ok = false;
    std::string error;
    DetectionReport report;  // valid when ok
};

struct FiveNumber {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

struct CorpusReport {
    std::vector<CorpusRow> rows;
    int failed = 0;
    // Aggregates cover successfully scanned rows; empty input leaves
    // detection_rate unset (serialized as null).
    std::optional<double> detection_rate;
    FiveNumber ssim_summary;
    std::vector<std::pair<std::string, int>> channel_fires;  // channel -> count
    std::vector<double> sorted_ssim;                         // ascending
};

/// Manifest CSV: header `original,suspect,label`, paths relative to the
/// manifest file. Unreadable rows are marked failed and the run continues.
CorpusReport batch_detect(const std::string& manifest_path, const Thresholds& thresholds,
                          int threads = 1, const ToyClassifier* clf = nullptr);

std::string corpus_report_json(const CorpusReport& report);
/// Two-column series for plotting: `rank,ssim`, ascending.
std::string sorted_ssim_csv(const CorpusReport& report);

/// numpy-style linear-interpolation quantiles of the (sorted) values.
FiveNumber five_number_summary(std::vector<double> values);

}  // namespace pf
