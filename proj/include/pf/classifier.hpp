#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pf/image.hpp"

namespace pf {

/// Multinomial logistic regression over flattened 16x16 grayscale features.
/// Deliberately small: the point is an exactly differentiable stand-in for a
/// vision model, so attack math can be verified against finite differences.
struct ToyClassifier {
    int classes = 0;
    int features = 256;
    std::vector<double> weights;  // classes x features, row-major
    std::vector<double> bias;     // per class
    std::vector<std::string> class_names;

    bool operator==(const ToyClassifier&) const = default;
};

struct ClassifyResult {
    int label = 0;
    double confidence = 0.0;
    std::vector<double> probabilities;  // softmax, sums to 1
};

struct TrainResult {
    ToyClassifier classifier;
    std::vector<double> loss_history;  // mean cross-entropy per epoch
    double train_accuracy = 0.0;
};

/// Grayscale 16x16 bilinear features in double precision. This is the exact
/// linear map the FGSM gradient is chained through; keep it in sync with
/// input_gradient below.
std::vector<double> features16(const PixelImage& img);

ClassifyResult classify(const ToyClassifier& clf, const PixelImage& img);

/// Cross-entropy of img against `label`, plus its gradient w.r.t. every
/// input sample (the adjoint of the feature map applied to W^T(p - onehot)).
struct LossGradient {
    double loss = 0.0;
    std::vector<double> grad;  // same layout as img.data
};
LossGradient loss_and_input_gradient(const ToyClassifier& clf, const PixelImage& img, int label);

/// Full-batch gradient descent; per-epoch step halving keeps the recorded
/// loss non-increasing even at aggressive learning rates.
/// Throws std::invalid_argument("degenerate label set") when classes < 2 or
/// some class has no sample.
TrainResult train_toy_classifier(const std::vector<PixelImage>& images,
                                 const std::vector<int>& labels, int classes, int epochs,
                                 double lr, uint64_t seed);

/// Portable little-endian binary: magic "TCLF", u32 classes, u32 features,
/// f64 weights row-major, f64 biases.
void save_classifier(const std::string& path, const ToyClassifier& clf);
ToyClassifier load_classifier(const std::string& path);

namespace fixtures {

/// Linearly separable two-class set: class 0 bright-left gradients, class 1
/// bright-right, with per-image jitter. Deterministic in seed.
void two_class_gradients(int per_class, uint64_t seed, std::vector<PixelImage>* images,
                         std::vector<int>* labels);

/// The classifier the CLI falls back to when no --clf is given: trained on
/// the fixture above with pinned settings, so every invocation agrees.
ToyClassifier builtin_classifier();

}  // namespace fixtures

}  // namespace pf
