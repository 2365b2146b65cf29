#include "pf/forge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pf/parallel.hpp"
#include "pf/rng.hpp"
#include "pf/similarity.hpp"

namespace pf {

using ordered_json = nlohmann::ordered_json;

PixelImage fgsm(const ToyClassifier& clf, const PixelImage& img, double epsilon, int target) {
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("epsilon out of range");
    if (epsilon == 0.0) return img;

    const bool targeted = target >= 0;
    const int label = targeted ? target : classify(clf, img).label;
    const LossGradient lg = loss_and_input_gradient(clf, img, label);
    const double step = targeted ? -epsilon : epsilon;

    PixelImage out = img;
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const double g = lg.grad[i];
        if (g == 0.0) continue;  // sign(0) = 0
        const double v = static_cast<double>(out.data[i]) + (g > 0.0 ? step : -step);
        out.data[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

std::vector<double> linear_betas(int T) {
    if (T < 1) throw std::invalid_argument("t out of range");
    std::vector<double> betas(static_cast<std::size_t>(T));
    constexpr double b1 = 1e-4, bT = 0.02;
    for (int s = 0; s < T; ++s)
        betas[s] = T == 1 ? b1 : b1 + (bT - b1) * static_cast<double>(s) / (T - 1);
    return betas;
}

PixelImage DiffusedImage::clamped() const {
    PixelImage out(width, height, channels);
    for (std::size_t i = 0; i < data.size(); ++i)
        out.data[i] = std::clamp(data[i], 0.0f, 1.0f);
    return out;
}

DiffusedImage forward_diffuse(const PixelImage& img, int t, int T, uint64_t seed) {
    if (t < 1 || t > T) throw std::invalid_argument("t out of range");
    const std::vector<double> betas = linear_betas(T);
    double alpha_bar = 1.0;
    for (int s = 0; s < t; ++s) alpha_bar *= 1.0 - betas[s];

    const double signal = std::sqrt(alpha_bar);
    const double noise = std::sqrt(1.0 - alpha_bar);

    DiffusedImage out;
    out.width = img.width;
    out.height = img.height;
    out.channels = img.channels;
    out.alpha_bar = alpha_bar;
    out.data.resize(img.data.size());
    Rng rng(seed);
    for (std::size_t i = 0; i < img.data.size(); ++i)
        out.data[i] = static_cast<float>(signal * img.data[i] + noise * rng.normal());
    return out;
}

PixelImage refine_patch(const PixelImage& patch, double diffusion_strength, double blur_sigma) {
    if (diffusion_strength < 0.0 || diffusion_strength > 1.0 || !std::isfinite(diffusion_strength))
        throw std::invalid_argument("invalid diffusion strength");
    if (diffusion_strength == 0.0 || blur_sigma == 0.0) return patch;
    PixelImage blurred = gaussian_blur(patch, blur_sigma);
    if (diffusion_strength == 1.0) return blurred;

    const double s = diffusion_strength;
    PixelImage out = patch;
    for (std::size_t i = 0; i < out.data.size(); ++i)
        out.data[i] = static_cast<float>((1.0 - s) * patch.data[i] + s * blurred.data[i]);
    return out;
}

PixelImage crop(const PixelImage& img, int x, int y, int w, int h) {
    if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > img.width || y + h > img.height)
        throw std::invalid_argument("crop out of bounds");
    PixelImage out(w, h, img.channels);
    for (int yy = 0; yy < h; ++yy)
        for (int xx = 0; xx < w; ++xx)
            for (int c = 0; c < img.channels; ++c) out.at(xx, yy, c) = img.at(x + xx, y + yy, c);
    return out;
}

namespace {

PixelImage match_channels(const PixelImage& patch, int channels) {
    if (patch.channels == channels) return patch;
    PixelImage out(patch.width, patch.height, channels);
    if (channels == 3) {
        for (std::size_t i = 0, n = patch.pixel_count(); i < n; ++i)
            for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = patch.data[i];
    } else {
        out = to_grayscale(patch);
    }
    return out;
}

double mean_luma(const PixelImage& img, int x0, int y0, int x1, int y1,
                 bool exclude_rect = false, int rx0 = 0, int ry0 = 0, int rx1 = 0, int ry1 = 0) {
    double total = 0.0;
    long count = 0;
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) {
            if (exclude_rect && x >= rx0 && x < rx1 && y >= ry0 && y < ry1) continue;
            double v;
            if (img.channels == 1) {
                v = img.at(x, y, 0);
            } else {
                v = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
            }
            total += v;
            ++count;
        }
    return count > 0 ? total / count : 0.0;
}

}  // namespace

PixelImage composite(const PixelImage& img, const PixelImage& patch, const PatchSpec& spec) {
    if (spec.size < 1 || spec.x < 0 || spec.y < 0 || spec.x + spec.size > img.width ||
        spec.y + spec.size > img.height)
        throw std::invalid_argument("patch out of bounds");

    PixelImage p = match_channels(patch, img.channels);
    if (p.width != spec.size || p.height != spec.size) p = resize(p, spec.size, spec.size);

    if (spec.brightness_correct) {
        constexpr int ring = 8;
        const int x0 = std::max(0, spec.x - ring);
        const int y0 = std::max(0, spec.y - ring);
        const int x1 = std::min(img.width, spec.x + spec.size + ring);
        const int y1 = std::min(img.height, spec.y + spec.size + ring);
        const double mu_ring = mean_luma(img, x0, y0, x1, y1, true, spec.x, spec.y,
                                         spec.x + spec.size, spec.y + spec.size);
        const double mu_patch = mean_luma(p, 0, 0, p.width, p.height);
        if (mu_patch > 0.0) {
            const double scale = mu_ring / mu_patch;
            for (float& v : p.data)
                v = static_cast<float>(std::clamp(static_cast<double>(v) * scale, 0.0, 1.0));
        }
    }

    PixelImage out = img;
    for (int y = 0; y < spec.size; ++y)
        for (int x = 0; x < spec.size; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(spec.x + x, spec.y + y, c) = p.at(x, y, c);
    return out;
}

ForgeResult forge(const PixelImage& img, const PatchSpec& spec, const ToyClassifier* clf,
                  const PixelImage* external_patch) {
    if (spec.epsilon < 0.0 || spec.epsilon > 1.0)
        throw std::invalid_argument("epsilon out of range");

    PixelImage patch;
    switch (spec.source) {
        case PatchSpec::Source::random_noise: {
            Rng rng(mix_seed(spec.seed, 0x6e6f697365ULL));  // "noise"
            patch = PixelImage(spec.size, spec.size, img.channels);
            // A per-patch base color plus per-sample texture. The base sits
            // near one luminance pole: printed adversarial patches are
            // high-contrast artifacts, not mid-gray static, and a poled base
            // keeps the patch visually distinct from whatever it covers.
            const bool dark = rng.uniform() < 0.5;
            double base[3];
            for (int c = 0; c < 3; ++c)
                base[c] = dark ? rng.uniform(0.02, 0.15) : rng.uniform(0.85, 0.98);
            for (std::size_t i = 0; i < patch.data.size(); ++i)
                patch.data[i] = static_cast<float>(0.8 * base[i % patch.channels] +
                                                   0.2 * rng.uniform());
            break;
        }
        case PatchSpec::Source::image_file: {
            if (!external_patch || external_patch->empty())
                throw std::invalid_argument("patch image required");
            patch = *external_patch;
            break;
        }
        case PatchSpec::Source::fgsm_derived: {
            if (!clf) throw std::invalid_argument("classifier required");
            const PixelImage adv = fgsm(*clf, img, spec.epsilon, spec.target_class);
            patch = crop(adv, spec.x, spec.y, spec.size, spec.size);
            break;
        }
        case PatchSpec::Source::region:
            patch = crop(img, spec.x, spec.y, spec.size, spec.size);
            break;
    }

    const PixelImage refined = refine_patch(patch, spec.diffusion_strength, spec.blur_sigma);
    ForgeResult res;
    res.suspect = composite(img, refined, spec);
    res.spec = spec;
    return res;
}

AttackOutcome evaluate_attack(const ToyClassifier& clf, const std::vector<ToyClassifier>& transfer,
                              const PixelImage& original, const PixelImage& suspect) {
    AttackOutcome out;
    const ClassifyResult before = classify(clf, original);
    const ClassifyResult after = classify(clf, suspect);
    out.original_label = before.label;
    out.original_conf = before.confidence;
    out.patched_label = after.label;
    out.patched_conf = after.confidence;
    out.confidence_drop = before.confidence - after.probabilities[before.label];
    out.success = after.label != before.label;
    out.ssim = ssim(original, suspect).mean_ssim;

    if (!transfer.empty()) {
        int flipped = 0;
        for (const ToyClassifier& t : transfer)
            if (classify(t, suspect).label != classify(t, original).label) ++flipped;
        out.transferability = static_cast<double>(flipped) / transfer.size();
    }
    return out;
}

const char* const kCompositeScoreFormula =
    "0.5*success + 0.3*(1 - min(1, |confidence_drop|)) + 0.2*ssim";

namespace {

SweepConfig config_at(const SweepGrid& grid, std::size_t g) {
    SweepConfig c;
    c.grid_index = static_cast<int>(g);
    std::size_t r = g;
    c.epsilon = grid.epsilons[r % grid.epsilons.size()];
    r /= grid.epsilons.size();
    c.size = grid.sizes[r % grid.sizes.size()];
    r /= grid.sizes.size();
    const auto& pos = grid.positions[r % grid.positions.size()];
    c.pos_x = pos.first;
    c.pos_y = pos.second;
    r /= grid.positions.size();
    c.blur_sigma = grid.blur_sigmas[r % grid.blur_sigmas.size()];
    r /= grid.blur_sigmas.size();
    c.diffusion_strength = grid.diffusion_strengths[r % grid.diffusion_strengths.size()];
    r /= grid.diffusion_strengths.size();
    c.target_class = grid.target_classes[r % grid.target_classes.size()];
    return c;
}

std::string fmt_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double composite_score(double success_rate, double mean_conf_drop, double mean_ssim) {
    return 0.5 * success_rate + 0.3 * (1.0 - std::min(1.0, std::abs(mean_conf_drop))) +
           0.2 * mean_ssim;
}

}  // namespace

SweepReport run_sweep(const std::vector<PixelImage>& base_images, const SweepGrid& grid,
                      const ToyClassifier& clf_main, const std::vector<ToyClassifier>& clf_transfer,
                      uint64_t seed, int threads) {
    const std::size_t points = grid.point_count();
    if (base_images.empty() || points == 0) throw std::invalid_argument("empty grid");

    SweepReport report;
    report.seed = seed;
    report.image_count = static_cast<int>(base_images.size());
    const std::size_t n_trials = base_images.size() * points;
    report.trials.resize(n_trials);

    parallel_for(static_cast<int>(n_trials), threads, [&](int idx) {
        const std::size_t img_i = static_cast<std::size_t>(idx) / points;
        const std::size_t grid_i = static_cast<std::size_t>(idx) % points;
        const SweepConfig cfg = config_at(grid, grid_i);
        const PixelImage& img = base_images[img_i];

        PatchSpec spec;
        spec.source = PatchSpec::Source::fgsm_derived;
        spec.size = cfg.size;
        spec.x = cfg.pos_x;
        spec.y = cfg.pos_y;
        spec.epsilon = cfg.epsilon;
        spec.blur_sigma = cfg.blur_sigma;
        spec.diffusion_strength = cfg.diffusion_strength;
        spec.target_class = cfg.target_class;
        spec.seed = mix_seed(seed, img_i, grid_i);

        SweepTrial trial;
        trial.image_index = static_cast<int>(img_i);
        trial.config = cfg;
        const ForgeResult forged = forge(img, spec, &clf_main);
        trial.outcome = evaluate_attack(clf_main, clf_transfer, img, forged.suspect);
        report.trials[idx] = std::move(trial);
    });

    // Per-configuration aggregation (sequential: order must not depend on
    // worker scheduling).
    report.configs.resize(points);
    std::vector<int> counts(points, 0);
    for (std::size_t g = 0; g < points; ++g) report.configs[g].config = config_at(grid, g);
    for (const SweepTrial& t : report.trials) {
        SweepConfigSummary& s = report.configs[t.config.grid_index];
        s.success_rate += t.outcome.success ? 1.0 : 0.0;
        s.mean_conf_drop += t.outcome.confidence_drop;
        s.mean_ssim += t.outcome.ssim;
        ++counts[t.config.grid_index];
    }
    for (std::size_t g = 0; g < points; ++g) {
        SweepConfigSummary& s = report.configs[g];
        s.success_rate /= counts[g];
        s.mean_conf_drop /= counts[g];
        s.mean_ssim /= counts[g];
        s.composite_score = composite_score(s.success_rate, s.mean_conf_drop, s.mean_ssim);
    }

    // Best configuration: highest composite, ties by (ssim, -size).
    const SweepConfigSummary* best = &report.configs[0];
    for (const SweepConfigSummary& s : report.configs) {
        if (s.composite_score > best->composite_score ||
            (s.composite_score == best->composite_score &&
             (s.mean_ssim > best->mean_ssim ||
              (s.mean_ssim == best->mean_ssim && s.config.size < best->config.size))))
            best = &s;
    }
    report.best = *best;

    // Per-parameter marginal summaries.
    struct Acc {
        double success = 0.0, drop = 0.0;
        int n = 0;
    };
    auto marginal = [&](const std::string& name, auto value_of) {
        std::map<std::string, Acc> acc;  // ordered for stable output
        for (const SweepTrial& t : report.trials) {
            Acc& a = acc[value_of(t.config)];
            a.success += t.outcome.success ? 1.0 : 0.0;
            a.drop += t.outcome.confidence_drop;
            ++a.n;
        }
        for (const auto& [value, a] : acc)
            report.per_param.push_back(
                {name, value, a.success / a.n, a.drop / a.n});
    };
    marginal("epsilon", [](const SweepConfig& c) { return fmt_double(c.epsilon); });
    marginal("size", [](const SweepConfig& c) { return std::to_string(c.size); });
    marginal("position", [](const SweepConfig& c) {
        return "(" + std::to_string(c.pos_x) + "," + std::to_string(c.pos_y) + ")";
    });
    marginal("blur_sigma", [](const SweepConfig& c) { return fmt_double(c.blur_sigma); });
    marginal("diffusion_strength",
             [](const SweepConfig& c) { return fmt_double(c.diffusion_strength); });
    marginal("target_class", [](const SweepConfig& c) {
        return c.target_class < 0 ? std::string("untargeted") : std::to_string(c.target_class);
    });

    double successes = 0.0, ssim_total = 0.0;
    for (const SweepTrial& t : report.trials) {
        successes += t.outcome.success ? 1.0 : 0.0;
        ssim_total += t.outcome.ssim;
    }
    report.overall_success_rate = successes / static_cast<double>(n_trials);
    report.overall_mean_ssim = ssim_total / static_cast<double>(n_trials);
    return report;
}

namespace {

ordered_json config_json(const SweepConfig& c) {
    ordered_json j;
    j["grid_index"] = c.grid_index;
    j["epsilon"] = c.epsilon;
    j["size"] = c.size;
    j["position"] = {c.pos_x, c.pos_y};
    j["blur_sigma"] = c.blur_sigma;
    j["diffusion_strength"] = c.diffusion_strength;
    if (c.target_class < 0)
        j["target_class"] = nullptr;
    else
        j["target_class"] = c.target_class;
    return j;
}

ordered_json summary_json(const SweepConfigSummary& s) {
    ordered_json j;
    j["config"] = config_json(s.config);
    j["success_rate"] = s.success_rate;
    j["mean_confidence_drop"] = s.mean_conf_drop;
    j["mean_ssim"] = s.mean_ssim;
    j["composite_score"] = s.composite_score;
    return j;
}

}  // namespace

std::string sweep_report_json(const SweepReport& report) {
    ordered_json j;
    j["classifier"] = "toy";
    j["seed"] = report.seed;
    j["image_count"] = report.image_count;
    j["trial_count"] = report.trials.size();
    j["composite_score_formula"] = kCompositeScoreFormula;

    j["configs"] = ordered_json::array();
    for (const SweepConfigSummary& s : report.configs) j["configs"].push_back(summary_json(s));

    j["per_param_summary"] = ordered_json::array();
    for (const SweepParamValueSummary& p : report.per_param) {
        ordered_json e;
        e["parameter"] = p.parameter;
        e["value"] = p.value;
        e["success_rate"] = p.success_rate;
        e["mean_confidence_drop"] = p.mean_conf_drop;
        j["per_param_summary"].push_back(e);
    }

    j["best_config"] = summary_json(report.best);
    j["overall"] = {{"success_rate", report.overall_success_rate},
                    {"mean_ssim", report.overall_mean_ssim}};

    j["trials"] = ordered_json::array();
    for (const SweepTrial& t : report.trials) {
        ordered_json e;
        e["image_index"] = t.image_index;
        e["grid_index"] = t.config.grid_index;
        e["success"] = t.outcome.success;
        e["original_label"] = t.outcome.original_label;
        e["patched_label"] = t.outcome.patched_label;
        e["original_confidence"] = t.outcome.original_conf;
        e["patched_confidence"] = t.outcome.patched_conf;
        e["confidence_drop"] = t.outcome.confidence_drop;
        e["ssim"] = t.outcome.ssim;
        e["transferability"] = t.outcome.transferability;
        j["trials"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string sweep_report_csv(const SweepReport& report) {
    std::ostringstream os;
    os << "image_index,grid_index,epsilon,size,pos_x,pos_y,blur_sigma,diffusion_strength,"
          "target_class,success,original_label,patched_label,original_confidence,"
          "patched_confidence,confidence_drop,ssim,transferability\n";
    os.precision(17);
    for (const SweepTrial& t : report.trials) {
        const SweepConfig& c = t.config;
        os << t.image_index << ',' << c.grid_index << ',' << c.epsilon << ',' << c.size << ','
           << c.pos_x << ',' << c.pos_y << ',' << c.blur_sigma << ',' << c.diffusion_strength
           << ',' << c.target_class << ',' << (t.outcome.success ? 1 : 0) << ','
           << t.outcome.original_label << ',' << t.outcome.patched_label << ','
           << t.outcome.original_conf << ',' << t.outcome.patched_conf << ','
           << t.outcome.confidence_drop << ',' << t.outcome.ssim << ','
           << t.outcome.transferability << '\n';
    }
    return os.str();
}

}  // namespace pf
