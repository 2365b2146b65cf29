#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pf/classifier.hpp"
#include "pf/image.hpp"

namespace pf {

struct PatchSpec {
    enum class Source { random_noise, image_file, fgsm_derived, region };

    Source source = Source::random_noise;
    int size = 50;  // square side
    int x = 0;
    int y = 0;  // top-left placement
    double epsilon = 0.1;
    double blur_sigma = 1.0;
    double diffusion_strength = 0.5;
    int target_class = -1;  // -1: untargeted
    bool brightness_correct = false;
    uint64_t seed = 0;
};

/// One-step sign attack. Untargeted (target = -1) ascends the loss of the
/// currently predicted label; targeted descends the loss of `target`.
/// sign(0) is 0 and epsilon = 0 returns the input bit-exactly.
PixelImage fgsm(const ToyClassifier& clf, const PixelImage& img, double epsilon,
                int target = -1);

/// Raw diffusion sample; values routinely leave [0,1], so this is not a
/// PixelImage until clamped.
struct DiffusedImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> data;
    double alpha_bar = 1.0;

    PixelImage clamped() const;
};

/// Closed-form forward jump x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
/// under the linear schedule beta_1 = 1e-4 ... beta_T = 0.02.
/// Throws std::invalid_argument("t out of range") unless 1 <= t <= T.
DiffusedImage forward_diffuse(const PixelImage& img, int t, int T, uint64_t seed);

/// The linear beta schedule used by forward_diffuse (exposed for tests).
std::vector<double> linear_betas(int T);

/// Smoothing refinement: (1-s) * patch + s * blur(patch, blur_sigma).
/// s = 0 is a bit-exact identity; s = 1 is the plain blur.
/// Throws std::invalid_argument("invalid diffusion strength") outside [0,1].
PixelImage refine_patch(const PixelImage& patch, double diffusion_strength, double blur_sigma);

PixelImage crop(const PixelImage& img, int x, int y, int w, int h);

/// Masked insertion: patch (resized to spec.size) replaces the rectangle at
/// spec position; everything else is bit-identical to the input. Optional
/// brightness correction rescales the patch so its mean luminance matches
/// the 8-px surrounding ring. Throws std::invalid_argument
/// ("patch out of bounds") when the rectangle does not fit.
PixelImage composite(const PixelImage& img, const PixelImage& patch, const PatchSpec& spec);

struct ForgeResult {
    PixelImage suspect;
    PatchSpec spec;  // echo, bbox = (x, y, size, size)
};

/// Full tamper pipeline: source patch -> refine -> composite.
/// fgsm_derived requires clf; image_file requires external_patch.
ForgeResult forge(const PixelImage& img, const PatchSpec& spec,
                  const ToyClassifier* clf = nullptr,
                  const PixelImage* external_patch = nullptr);

struct AttackOutcome {
    int original_label = 0;
    int patched_label = 0;
    double original_conf = 0.0;
    double patched_conf = 0.0;
    double confidence_drop = 0.0;  // original_conf - patched prob of original label
    bool success = false;          // label changed
    double ssim = 1.0;
    double transferability = 0.0;  // fraction of transfer classifiers flipped
};

AttackOutcome evaluate_attack(const ToyClassifier& clf,
                              const std::vector<ToyClassifier>& transfer,
                              const PixelImage& original, const PixelImage& suspect);

struct SweepGrid {
    std::vector<double> epsilons{0.1};
    std::vector<int> sizes{50};
    std::vector<std::pair<int, int>> positions{{50, 50}};
    std::vector<double> blur_sigmas{1.0};
    std::vector<double> diffusion_strengths{0.5};
    std::vector<int> target_classes{-1};

    std::size_t point_count() const {
        return epsilons.size() * sizes.size() * positions.size() * blur_sigmas.size() *
               diffusion_strengths.size() * target_classes.size();
    }
};

struct SweepConfig {
    int grid_index = 0;
    double epsilon = 0.0;
    int size = 0;
    int pos_x = 0;
    int pos_y = 0;
    double blur_sigma = 0.0;
    double diffusion_strength = 0.0;
    int target_class = -1;
};

struct SweepTrial {
    int image_index = 0;
    SweepConfig config;
    AttackOutcome outcome;
};

struct SweepConfigSummary {
    SweepConfig config;
    double success_rate = 0.0;
    double mean_conf_drop = 0.0;
    double mean_ssim = 0.0;
    double composite_score = 0.0;
};

struct SweepParamValueSummary {
    std::string parameter;
    std::string value;
    double success_rate = 0.0;
    double mean_conf_drop = 0.0;
};

struct SweepReport {
    std::vector<SweepTrial> trials;
    std::vector<SweepConfigSummary> configs;
    std::vector<SweepParamValueSummary> per_param;
    SweepConfigSummary best;
    double overall_success_rate = 0.0;
    double overall_mean_ssim = 0.0;
    uint64_t seed = 0;
    int image_count = 0;
};

/// Composite score: 0.5*success + 0.3*(1 - min(1, |confidence_drop|)) + 0.2*ssim.
/// The formula is embedded in the JSON report so downstream readers never
/// have to guess it.
extern const char* const kCompositeScoreFormula;

/// Evaluates the full (image x grid) product. Per-trial seeds mix
/// (seed, image index, grid index), so results do not depend on thread count.
/// Throws std::invalid_argument("empty grid") for an empty corpus or grid.
SweepReport run_sweep(const std::vector<PixelImage>& base_images, const SweepGrid& grid,
                      const ToyClassifier& clf_main,
                      const std::vector<ToyClassifier>& clf_transfer, uint64_t seed,
                      int threads = 1);

std::string sweep_report_json(const SweepReport& report);
std::string sweep_report_csv(const SweepReport& report);

}  // namespace pf
