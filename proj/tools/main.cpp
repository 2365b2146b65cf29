#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pf/detector.hpp"
#include "pf/forge.hpp"
#include "pf/image_io.hpp"
#include "pf/parallel.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr int kExitClean = 0;
constexpr int kExitDetected = 1;
constexpr int kExitError = 2;

struct GlobalOpts {
    uint64_t seed = 0;
    int threads = 0;  // 0: PATCHFORENSICS_THREADS, then hardware
    std::string output_dir = ".";
    std::string format = "json";
    bool quiet = false;
};

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

pf::Thresholds add_threshold_flags(CLI::App* cmd, std::vector<std::string>* channel_names,
                                   std::string* segmentation) {
    pf::Thresholds t;
    cmd->add_option("--hash-threshold", t.hash_threshold,
                    "Hamming distance above which a hash fires")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();
    cmd->add_option("--ssim-threshold", t.ssim_threshold, "SSIM below this fires")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    cmd->add_option("--min-contour-area", t.min_contour_area,
                    "Smallest contour area kept (pixels)")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--heatmap-threshold", t.heatmap_energy_threshold,
                    "Heatmap mean energy above this fires")
        ->capture_default_str();
    cmd->add_option("--channels", *channel_names,
                    "Channels to enable (hash ssim anomaly contour heatmap label)")
        ->delimiter(',');
    cmd->add_option("--segmentation", *segmentation, "Anomaly segmentation: slic or felzenszwalb")
        ->check(CLI::IsMember({"slic", "felzenszwalb"}))
        ->capture_default_str();
    return t;
}

void apply_channel_flags(pf::Thresholds* t, const std::vector<std::string>& names,
                         const std::string& segmentation) {
    if (!names.empty()) {
        t->channels_enabled.clear();
        for (const std::string& n : names) {
            bool known = false;
            for (pf::Channel c : {pf::Channel::hash, pf::Channel::ssim, pf::Channel::anomaly,
                                  pf::Channel::contour, pf::Channel::heatmap, pf::Channel::label})
                if (n == pf::channel_name(c)) {
                    t->channels_enabled.push_back(c);
                    known = true;
                }
            if (!known) throw CLI::ValidationError("--channels", "unknown channel: " + n);
        }
    }
    t->use_felzenszwalb = segmentation == "felzenszwalb";
}

pf::SweepGrid parse_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open grid: " + path);
    ordered_json j = ordered_json::parse(in);

    pf::SweepGrid grid;
    if (j.contains("epsilon")) grid.epsilons = j["epsilon"].get<std::vector<double>>();
    if (j.contains("size")) grid.sizes = j["size"].get<std::vector<int>>();
    if (j.contains("position")) {
        grid.positions.clear();
        for (const auto& p : j["position"])
            grid.positions.emplace_back(p.at(0).get<int>(), p.at(1).get<int>());
    }
    if (j.contains("blur_sigma")) grid.blur_sigmas = j["blur_sigma"].get<std::vector<double>>();
    if (j.contains("diffusion_strength"))
        grid.diffusion_strengths = j["diffusion_strength"].get<std::vector<double>>();
    if (j.contains("target_class")) {
        grid.target_classes.clear();
        for (const auto& t : j["target_class"]) {
            if (t.is_null())
                grid.target_classes.push_back(-1);
            else
                grid.target_classes.push_back(t.get<int>());
        }
    }
    if (grid.point_count() == 0) throw std::runtime_error("empty grid");
    return grid;
}

std::string bars_csv(const pf::DetectionReport& rep) {
    static const char* kAlgoNames[4] = {"ahash", "phash", "dhash", "whash"};
    std::ostringstream os;
    os << "algorithm,distance,threshold,detected\n";
    for (int i = 0; i < 4; ++i)
        os << kAlgoNames[i] << ',' << rep.hash_distance[i] << ','
           << rep.thresholds.hash_threshold << ','
           << (rep.hash_detected_per_algo[i] ? "true" : "false") << '\n';
    return os.str();
}

ordered_json provenance_json(const pf::PatchSpec& spec) {
    ordered_json j;
    const char* source = "random-noise";
    switch (spec.source) {
        case pf::PatchSpec::Source::random_noise: source = "random-noise"; break;
        case pf::PatchSpec::Source::image_file: source = "image-file"; break;
        case pf::PatchSpec::Source::fgsm_derived: source = "fgsm-derived"; break;
        case pf::PatchSpec::Source::region: source = "region"; break;
    }
    j["spec"] = {{"source", source},
                 {"size", spec.size},
                 {"position", {spec.x, spec.y}},
                 {"epsilon", spec.epsilon},
                 {"blur_sigma", spec.blur_sigma},
                 {"diffusion_strength", spec.diffusion_strength},
                 {"target_class", spec.target_class < 0 ? ordered_json(nullptr)
                                                        : ordered_json(spec.target_class)},
                 {"brightness_correct", spec.brightness_correct}};
    j["bbox"] = {spec.x, spec.y, spec.size, spec.size};
    j["seed"] = spec.seed;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Adversarial-patch forensics: forge tampered images and detect them"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);

    GlobalOpts g;
    app.add_option("--seed", g.seed, "Root seed for all randomized steps")->capture_default_str();
    app.add_option("--threads", g.threads,
                   "Worker threads (0: $PATCHFORENSICS_THREADS, then hardware)")
        ->capture_default_str();
    app.add_option("--output-dir", g.output_dir, "Directory for generated files")
        ->capture_default_str();
    app.add_option("--format", g.format, "Primary stdout format")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_flag("--quiet", g.quiet, "Suppress stdout reports");
    // Let the global options above also appear after a subcommand name.
    app.fallthrough();

    // ---- hash ----
    auto* hash_cmd = app.add_subcommand("hash", "Print perceptual hashes of an image");
    std::string hash_image;
    std::string hash_algo = "all";
    hash_cmd->add_option("image", hash_image, "Image file (PNG or PNM)")->required();
    hash_cmd->add_option("--algo", hash_algo, "a, p, d, w, or all")
        ->check(CLI::IsMember({"a", "p", "d", "w", "all"}))
        ->capture_default_str();

    // ---- compare ----
    auto* compare_cmd =
        app.add_subcommand("compare", "Hash two images and report Hamming distances");
    std::string cmp_a, cmp_b;
    int cmp_threshold = 5;
    compare_cmd->add_option("original", cmp_a)->required();
    compare_cmd->add_option("suspect", cmp_b)->required();
    compare_cmd->add_option("--threshold", cmp_threshold, "Detection threshold")
        ->check(CLI::Range(0, 64))
        ->capture_default_str();

    // ---- detect ----
    auto* detect_cmd = app.add_subcommand("detect", "Run all detection channels on a pair");
    std::string det_original, det_suspect, det_clf;
    std::vector<std::string> det_channels;
    std::string det_segmentation = "slic";
    bool det_overlay = false, det_bars = false;
    detect_cmd->add_option("original", det_original)->required();
    detect_cmd->add_option("suspect", det_suspect)->required();
    pf::Thresholds det_thresholds =
        add_threshold_flags(detect_cmd, &det_channels, &det_segmentation);
    detect_cmd->add_option("--clf", det_clf, "TCLF classifier enabling the label channel");
    detect_cmd->add_flag("--overlay", det_overlay, "Write localization overlay PNG");
    detect_cmd->add_flag("--bars", det_bars, "Write hash-distance bar CSV");

    // ---- forge ----
    auto* forge_cmd = app.add_subcommand("forge", "Composite a tampered patch into an image");
    std::string forge_image, forge_clf, forge_patch_file, forge_source = "noise";
    bool forge_from_region = false;
    pf::PatchSpec spec;
    forge_cmd->add_option("image", forge_image)->required();
    forge_cmd->add_option("--source", forge_source, "Patch source: noise, fgsm, file")
        ->check(CLI::IsMember({"noise", "fgsm", "file"}))
        ->capture_default_str();
    forge_cmd->add_flag("--patch-from-region", forge_from_region,
                        "Use the underlying region itself as the patch");
    forge_cmd->add_option("--patch-file", forge_patch_file, "Patch image for --source file");
    forge_cmd->add_option("--size", spec.size, "Patch side length")->capture_default_str();
    forge_cmd->add_option("--pos-x", spec.x, "Patch left edge")->capture_default_str();
    forge_cmd->add_option("--pos-y", spec.y, "Patch top edge")->capture_default_str();
    forge_cmd->add_option("--epsilon", spec.epsilon, "FGSM magnitude")->capture_default_str();
    forge_cmd->add_option("--blur-sigma", spec.blur_sigma, "Refinement blur sigma")
        ->capture_default_str();
    forge_cmd->add_option("--diffusion-strength", spec.diffusion_strength,
                          "Refinement blend toward the blurred patch, 0..1")
        ->capture_default_str();
    forge_cmd->add_option("--target-class", spec.target_class,
                          "Targeted FGSM class (-1: untargeted)")
        ->capture_default_str();
    forge_cmd->add_flag("--brightness-correct", spec.brightness_correct,
                        "Match patch mean luminance to the surrounding ring");
    forge_cmd->add_option("--clf", forge_clf, "TCLF classifier for --source fgsm");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Parameter sweep over a corpus directory");
    std::string sweep_dir, sweep_grid_path, sweep_clf;
    std::vector<std::string> sweep_transfer;
    sweep_cmd->add_option("corpus", sweep_dir, "Directory of base images")->required();
    sweep_cmd->add_option("--grid", sweep_grid_path, "Grid JSON file");
    sweep_cmd->add_option("--clf", sweep_clf, "TCLF main classifier (default: built-in fixture)");
    sweep_cmd->add_option("--transfer-clfs", sweep_transfer, "Held-out TCLF classifiers")
        ->delimiter(',');

    // ---- batch ----
    auto* batch_cmd = app.add_subcommand("batch", "Detect over a manifest of pairs");
    std::string batch_manifest, batch_clf;
    std::vector<std::string> batch_channels;
    std::string batch_segmentation = "slic";
    batch_cmd->add_option("manifest", batch_manifest, "CSV: original,suspect,label")->required();
    pf::Thresholds batch_thresholds =
        add_threshold_flags(batch_cmd, &batch_channels, &batch_segmentation);
    batch_cmd->add_option("--clf", batch_clf, "TCLF classifier enabling the label channel");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitClean : kExitError;
    }

    const int threads = pf::resolve_threads(g.threads);
    const fs::path out_dir = g.output_dir;
    fs::create_directories(out_dir);

    if (hash_cmd->parsed()) {
        const pf::PixelImage img = pf::load_image(hash_image);
        std::vector<pf::BitHash> hashes;
        if (hash_algo == "all" || hash_algo == "a") hashes.push_back(pf::ahash(img));
        if (hash_algo == "all" || hash_algo == "p") hashes.push_back(pf::phash(img));
        if (hash_algo == "all" || hash_algo == "d") hashes.push_back(pf::dhash(img));
        if (hash_algo == "all" || hash_algo == "w") hashes.push_back(pf::whash(img));
        for (const pf::BitHash& h : hashes) std::cout << pf::to_wire(h) << '\n';
        return kExitClean;
    }

    if (compare_cmd->parsed()) {
        const pf::PixelImage a = pf::load_image(cmp_a);
        const pf::PixelImage b = pf::load_image(cmp_b);
        const pf::HashComparison cmp = pf::compare_all(a, b, cmp_threshold);
        static const char* kAlgoNames[4] = {"ahash", "phash", "dhash", "whash"};
        ordered_json j;
        j["threshold"] = cmp.threshold;
        for (int i = 0; i < 4; ++i)
            j[kAlgoNames[i]] = {{"original", pf::to_wire(cmp.original_hashes[i])},
                                {"suspect", pf::to_wire(cmp.suspect_hashes[i])},
                                {"distance", cmp.distance[i]},
                                {"detected", cmp.detected[i]}};
        j["detected"] = cmp.any_detected();
        if (!g.quiet) std::cout << j.dump(2) << '\n';
        return kExitClean;
    }

    if (detect_cmd->parsed()) {
        apply_channel_flags(&det_thresholds, det_channels, det_segmentation);
        pf::ToyClassifier clf;
        const pf::ToyClassifier* clf_ptr = nullptr;
        if (!det_clf.empty()) {
            clf = pf::load_classifier(det_clf);
            clf_ptr = &clf;
            if (!det_thresholds.enabled(pf::Channel::label))
                det_thresholds.channels_enabled.push_back(pf::Channel::label);
        }
        const pf::PixelImage original = pf::load_image(det_original);
        const pf::PixelImage suspect = pf::load_image(det_suspect);
        const pf::DetectionResult res = pf::detect(original, suspect, det_thresholds, clf_ptr);
        if (!g.quiet) std::cout << pf::detection_report_json(res.report);
        if (det_overlay) {
            const pf::PixelImage view = pf::overlay(suspect, res.contours, res.heatmap);
            pf::save_png((out_dir / "overlay.png").string(), view);
        }
        if (det_bars) write_text(out_dir / "bars.csv", bars_csv(res.report));
        if (!g.quiet || det_overlay || det_bars)
            write_text(out_dir / "report.json", pf::detection_report_json(res.report));
        return res.report.verdict ? kExitDetected : kExitClean;
    }

    if (forge_cmd->parsed()) {
        spec.seed = g.seed;
        if (forge_from_region) {
            spec.source = pf::PatchSpec::Source::region;
        } else if (forge_source == "fgsm") {
            spec.source = pf::PatchSpec::Source::fgsm_derived;
        } else if (forge_source == "file") {
            spec.source = pf::PatchSpec::Source::image_file;
        } else {
            spec.source = pf::PatchSpec::Source::random_noise;
        }
        const pf::PixelImage img = pf::load_image(forge_image);

        pf::ToyClassifier clf;
        const pf::ToyClassifier* clf_ptr = nullptr;
        if (spec.source == pf::PatchSpec::Source::fgsm_derived) {
            clf = forge_clf.empty() ? pf::fixtures::builtin_classifier()
                                    : pf::load_classifier(forge_clf);
            clf_ptr = &clf;
        }
        pf::PixelImage patch_img;
        const pf::PixelImage* patch_ptr = nullptr;
        if (spec.source == pf::PatchSpec::Source::image_file) {
            if (forge_patch_file.empty()) throw std::runtime_error("--patch-file required");
            patch_img = pf::load_image(forge_patch_file);
            patch_ptr = &patch_img;
        }

        const pf::ForgeResult res = pf::forge(img, spec, clf_ptr, patch_ptr);
        fs::create_directories(out_dir);
        const fs::path suspect_path = out_dir / "forged.png";
        pf::save_png(suspect_path.string(), res.suspect);
        write_text(out_dir / "provenance.json", provenance_json(res.spec).dump(2) + "\n");
        if (!g.quiet)
            std::cout << "wrote " << suspect_path.string() << " and provenance.json\n";
        return kExitClean;
    }

    if (sweep_cmd->parsed()) {
        pf::SweepGrid grid;
        if (!sweep_grid_path.empty()) grid = parse_grid(sweep_grid_path);

        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(sweep_dir)) {
            if (!entry.is_regular_file()) continue;
            const std::string ext = entry.path().extension().string();
            if (ext == ".png" || ext == ".ppm" || ext == ".pgm")
                files.push_back(entry.path().string());
        }
        std::sort(files.begin(), files.end());
        std::vector<pf::PixelImage> images;
        for (const std::string& f : files) images.push_back(pf::load_image(f));

        const pf::ToyClassifier clf = sweep_clf.empty() ? pf::fixtures::builtin_classifier()
                                                        : pf::load_classifier(sweep_clf);
        std::vector<pf::ToyClassifier> transfer;
        for (const std::string& path : sweep_transfer)
            transfer.push_back(pf::load_classifier(path));

        const pf::SweepReport report =
            pf::run_sweep(images, grid, clf, transfer, g.seed, threads);
        const std::string json = pf::sweep_report_json(report);
        const std::string csv = pf::sweep_report_csv(report);
        fs::create_directories(out_dir);
        write_text(out_dir / "sweep.json", json);
        write_text(out_dir / "sweep.csv", csv);
        if (!g.quiet) std::cout << (g.format == "csv" ? csv : json);
        return kExitClean;
    }

    if (batch_cmd->parsed()) {
        apply_channel_flags(&batch_thresholds, batch_channels, batch_segmentation);
        pf::ToyClassifier clf;
        const pf::ToyClassifier* clf_ptr = nullptr;
        if (!batch_clf.empty()) {
            clf = pf::load_classifier(batch_clf);
            clf_ptr = &clf;
            if (!batch_thresholds.enabled(pf::Channel::label))
                batch_thresholds.channels_enabled.push_back(pf::Channel::label);
        }
        const pf::CorpusReport report =
            pf::batch_detect(batch_manifest, batch_thresholds, threads, clf_ptr);
        fs::create_directories(out_dir);
        write_text(out_dir / "corpus_report.json", pf::corpus_report_json(report));
        write_text(out_dir / "ssim_sorted.csv", pf::sorted_ssim_csv(report));
        if (!g.quiet) {
            const int scanned = static_cast<int>(report.rows.size()) - report.failed;
            std::cout << "pairs: " << report.rows.size() << " scanned: " << scanned
                      << " failed: " << report.failed << '\n';
            if (report.detection_rate)
                std::cout << "detection rate: " << *report.detection_rate << '\n';
            else
                std::cout << "detection rate: n/a\n";
            std::cout << "ssim min/q1/median/q3/max: " << report.ssim_summary.min << ' '
                      << report.ssim_summary.q1 << ' ' << report.ssim_summary.median << ' '
                      << report.ssim_summary.q3 << ' ' << report.ssim_summary.max << '\n';
            for (const auto& [name, count] : report.channel_fires)
                std::cout << "channel " << name << ": " << count << '\n';
        }
        return report.failed > 0 ? kExitError : kExitClean;
    }

    return kExitError;  // unreachable: a subcommand is required
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
}
