#include "pf/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "pf/rng.hpp"

namespace pf {

namespace {

constexpr int kSide = 16;

struct Tap {
    int i0, i1;     // source indices along one axis
    double w0, w1;  // bilinear weights
};

/// Bilinear taps for resampling `src` samples down/up to kSide, matching the
/// half-pixel-center convention of resize().
std::vector<Tap> axis_taps(int src) {
    std::vector<Tap> taps(kSide);
    const double scale = static_cast<double>(src) / kSide;
    for (int i = 0; i < kSide; ++i) {
        double f = (i + 0.5) * scale - 0.5;
        f = std::clamp(f, 0.0, static_cast<double>(src - 1));
        const int i0 = static_cast<int>(f);
        const int i1 = std::min(i0 + 1, src - 1);
        const double w = f - i0;
        taps[i] = {i0, i1, 1.0 - w, w};
    }
    return taps;
}

void softmax_inplace(std::vector<double>& logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double& v : logits) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : logits) v /= sum;
}

std::vector<double> logits_of(const ToyClassifier& clf, const std::vector<double>& feat) {
    std::vector<double> z(clf.classes);
    for (int c = 0; c < clf.classes; ++c) {
        double acc = clf.bias[c];
        const double* w = clf.weights.data() + static_cast<std::size_t>(c) * clf.features;
        for (int j = 0; j < clf.features; ++j) acc += w[j] * feat[j];
        z[c] = acc;
    }
    return z;
}

double mean_loss_of(const ToyClassifier& clf, const std::vector<std::vector<double>>& feats,
                    const std::vector<int>& labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < feats.size(); ++i) {
        std::vector<double> p = logits_of(clf, feats[i]);
        softmax_inplace(p);
        total += -std::log(std::max(p[labels[i]], 1e-300));
    }
    return total / static_cast<double>(feats.size());
}

}  // namespace

std::vector<double> features16(const PixelImage& img) {
    if (img.empty()) throw std::invalid_argument("empty image");
    const std::vector<Tap> tx = axis_taps(img.width);
    const std::vector<Tap> ty = axis_taps(img.height);
    const int ch = img.channels;

    std::vector<double> feat(kSide * kSide);
    for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
            double acc = 0.0;
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    const int px = sx ? tx[x].i1 : tx[x].i0;
                    const int py = sy ? ty[y].i1 : ty[y].i0;
                    const double w = (sx ? tx[x].w1 : tx[x].w0) * (sy ? ty[y].w1 : ty[y].w0);
                    double g;
                    if (ch == 1) {
                        g = img.at(px, py, 0);
                    } else {
                        g = 0.299 * img.at(px, py, 0) + 0.587 * img.at(px, py, 1) +
                            0.114 * img.at(px, py, 2);
                    }
                    acc += w * g;
                }
            feat[y * kSide + x] = acc;
        }
    return feat;
}

ClassifyResult classify(const ToyClassifier& clf, const PixelImage& img) {
    ClassifyResult res;
    res.probabilities = logits_of(clf, features16(img));
    softmax_inplace(res.probabilities);
    res.label = 0;
    res.confidence = res.probabilities[0];
    for (int c = 1; c < clf.classes; ++c)
        if (res.probabilities[c] > res.confidence) {  // strict: ties keep lowest index
            res.confidence = res.probabilities[c];
            res.label = c;
        }
    return res;
}

LossGradient loss_and_input_gradient(const ToyClassifier& clf, const PixelImage& img, int label) {
    if (label < 0 || label >= clf.classes) throw std::invalid_argument("label out of range");
    const std::vector<double> feat = features16(img);
    std::vector<double> p = logits_of(clf, feat);
    softmax_inplace(p);

    LossGradient out;
    out.loss = -std::log(std::max(p[label], 1e-300));

    // d loss / d logits = p - onehot; chain through W to feature space.
    std::vector<double> gfeat(static_cast<std::size_t>(clf.features), 0.0);
    for (int c = 0; c < clf.classes; ++c) {
        const double gz = p[c] - (c == label ? 1.0 : 0.0);
        const double* w = clf.weights.data() + static_cast<std::size_t>(c) * clf.features;
        for (int j = 0; j < clf.features; ++j) gfeat[j] += gz * w[j];
    }

    // Adjoint of the bilinear 16x16 grayscale map: scatter each feature
    // gradient back over its four source pixels and the luma weights.
    const std::vector<Tap> tx = axis_taps(img.width);
    const std::vector<Tap> ty = axis_taps(img.height);
    const int ch = img.channels;
    out.grad.assign(img.data.size(), 0.0);
    for (int y = 0; y < kSide; ++y)
        for (int x = 0; x < kSide; ++x) {
            const double g = gfeat[y * kSide + x];
            if (g == 0.0) continue;
            for (int sy = 0; sy < 2; ++sy)
                for (int sx = 0; sx < 2; ++sx) {
                    const int px = sx ? tx[x].i1 : tx[x].i0;
                    const int py = sy ? ty[y].i1 : ty[y].i0;
                    const double w = (sx ? tx[x].w1 : tx[x].w0) * (sy ? ty[y].w1 : ty[y].w0);
                    const std::size_t base =
                        (static_cast<std::size_t>(py) * img.width + px) * ch;
                    if (ch == 1) {
                        out.grad[base] += g * w;
                    } else {
                        out.grad[base + 0] += g * w * 0.299;
                        out.grad[base + 1] += g * w * 0.587;
                        out.grad[base + 2] += g * w * 0.114;
                    }
                }
        }
    return out;
}

TrainResult train_toy_classifier(const std::vector<PixelImage>& images,
                                 const std::vector<int>& labels, int classes, int epochs,
                                 double lr, uint64_t seed) {
    if (classes < 2 || images.empty() || images.size() != labels.size())
        throw std::invalid_argument("degenerate label set");
    std::vector<int> per_class(static_cast<std::size_t>(classes), 0);
    for (int l : labels) {
        if (l < 0 || l >= classes) throw std::invalid_argument("degenerate label set");
        ++per_class[l];
    }
    for (int c : per_class)
        if (c == 0) throw std::invalid_argument("degenerate label set");

    std::vector<std::vector<double>> feats;
    feats.reserve(images.size());
    for (const PixelImage& img : images) feats.push_back(features16(img));

    TrainResult res;
    ToyClassifier& clf = res.classifier;
    clf.classes = classes;
    clf.features = kSide * kSide;
    clf.weights.resize(static_cast<std::size_t>(classes) * clf.features);
    clf.bias.assign(static_cast<std::size_t>(classes), 0.0);
    clf.class_names.resize(static_cast<std::size_t>(classes));
    for (int c = 0; c < classes; ++c) clf.class_names[c] = "class_" + std::to_string(c);
    Rng rng(seed);
    for (double& w : clf.weights) w = 0.01 * rng.normal();

    const double n = static_cast<double>(feats.size());
    double current_loss = mean_loss_of(clf, feats, labels);
    std::vector<double> gw(clf.weights.size());
    std::vector<double> gb(clf.bias.size());
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        for (std::size_t i = 0; i < feats.size(); ++i) {
            std::vector<double> p = logits_of(clf, feats[i]);
            softmax_inplace(p);
            for (int c = 0; c < classes; ++c) {
                const double gz = (p[c] - (c == labels[i] ? 1.0 : 0.0)) / n;
                gb[c] += gz;
                double* row = gw.data() + static_cast<std::size_t>(c) * clf.features;
                const std::vector<double>& f = feats[i];
                for (int j = 0; j < clf.features; ++j) row[j] += gz * f[j];
            }
        }
        // Step halving: accept the largest step (<= lr) that does not raise
        // the loss; a fully stalled epoch keeps the weights as they are.
        const std::vector<double> w_before = clf.weights;
        const std::vector<double> b_before = clf.bias;
        double step = lr;
        bool accepted = false;
        for (int attempt = 0; attempt < 24; ++attempt) {
            for (std::size_t j = 0; j < clf.weights.size(); ++j)
                clf.weights[j] = w_before[j] - step * gw[j];
            for (std::size_t j = 0; j < clf.bias.size(); ++j)
                clf.bias[j] = b_before[j] - step * gb[j];
            const double new_loss = mean_loss_of(clf, feats, labels);
            if (new_loss <= current_loss) {
                current_loss = new_loss;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            clf.weights = w_before;
            clf.bias = b_before;
        }
        res.loss_history.push_back(current_loss);
    }

    int correct = 0;
    for (std::size_t i = 0; i < images.size(); ++i) {
        std::vector<double> p = logits_of(clf, feats[i]);
        softmax_inplace(p);
        int lbl = 0;
        for (int c = 1; c < classes; ++c)
            if (p[c] > p[lbl]) lbl = c;
        if (lbl == labels[i]) ++correct;
    }
    res.train_accuracy = static_cast<double>(correct) / n;
    return res;
}

void save_classifier(const std::string& path, const ToyClassifier& clf) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path);
    out.write("TCLF", 4);
    const uint32_t c = static_cast<uint32_t>(clf.classes);
    const uint32_t f = static_cast<uint32_t>(clf.features);
    out.write(reinterpret_cast<const char*>(&c), 4);
    out.write(reinterpret_cast<const char*>(&f), 4);
    out.write(reinterpret_cast<const char*>(clf.weights.data()),
              static_cast<std::streamsize>(clf.weights.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(clf.bias.data()),
              static_cast<std::streamsize>(clf.bias.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

ToyClassifier load_classifier(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "TCLF", 4) != 0)
        throw std::runtime_error("not a TCLF classifier: " + path);
    uint32_t classes = 0, features = 0;
    in.read(reinterpret_cast<char*>(&classes), 4);
    in.read(reinterpret_cast<char*>(&features), 4);
    if (!in || classes < 2 || features == 0 || classes > 4096 || features > 1 << 20)
        throw std::runtime_error("corrupt classifier: " + path);
    ToyClassifier clf;
    clf.classes = static_cast<int>(classes);
    clf.features = static_cast<int>(features);
    clf.weights.resize(static_cast<std::size_t>(classes) * features);
    clf.bias.resize(classes);
    in.read(reinterpret_cast<char*>(clf.weights.data()),
            static_cast<std::streamsize>(clf.weights.size() * sizeof(double)));
    in.read(reinterpret_cast<char*>(clf.bias.data()),
            static_cast<std::streamsize>(clf.bias.size() * sizeof(double)));
    if (!in) throw std::runtime_error("corrupt classifier: " + path);
    clf.class_names.resize(classes);
    for (uint32_t c = 0; c < classes; ++c) clf.class_names[c] = "class_" + std::to_string(c);
    return clf;
}

namespace fixtures {

void two_class_gradients(int per_class, uint64_t seed, std::vector<PixelImage>* images,
                         std::vector<int>* labels) {
    images->clear();
    labels->clear();
    const int side = 32;
    for (int cls = 0; cls < 2; ++cls)
        for (int i = 0; i < per_class; ++i) {
            // Mild contrast keeps the set linearly separable yet leaves the
            // decision margin small against input-space perturbations, which
            // is what makes these fixtures interesting attack subjects.
            Rng rng(mix_seed(seed, static_cast<uint64_t>(cls), static_cast<uint64_t>(i)));
            const double lo = rng.uniform(0.38, 0.45);
            const double hi = rng.uniform(0.55, 0.62);
            PixelImage img(side, side, 1);
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x) {
                    const double t = static_cast<double>(x) / (side - 1);
                    double v = cls == 0 ? hi + (lo - hi) * t   // bright left
                                        : lo + (hi - lo) * t;  // bright right
                    v += 0.03 * rng.normal();
                    img.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                }
            images->push_back(std::move(img));
            labels->push_back(cls);
        }
}

ToyClassifier builtin_classifier() {
    std::vector<PixelImage> images;
    std::vector<int> labels;
    two_class_gradients(50, 0x7074666f72656e73ULL, &images, &labels);
    return train_toy_classifier(images, labels, 2, 200, 0.5, 42).classifier;
}

}  // namespace fixtures

}  // namespace pf
