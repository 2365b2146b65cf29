#include "pf/detector.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "pf/image_io.hpp"
#include "pf/parallel.hpp"
#include "pf/similarity.hpp"

namespace pf {

using ordered_json = nlohmann::ordered_json;

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::hash: return "hash";
        case Channel::ssim: return "ssim";
        case Channel::anomaly: return "anomaly";
        case Channel::contour: return "contour";
        case Channel::heatmap: return "heatmap";
        case Channel::label: return "label";
    }
    return "?";
}

bool Thresholds::enabled(Channel c) const {
    return std::find(channels_enabled.begin(), channels_enabled.end(), c) !=
           channels_enabled.end();
}

bool DetectionReport::operator==(const DetectionReport& o) const {
    auto key = [](const DetectionReport& r) {
        return std::tie(r.hash_original, r.hash_suspect, r.hash_distance,
                        r.hash_detected_per_algo, r.hash_detected, r.ssim, r.ms_ssim, r.l2_rms,
                        r.ssim_detected, r.anomaly_segments, r.anomaly_flagged,
                        r.anomaly_threshold, r.anomaly_note, r.anomaly_detected, r.contour_count,
                        r.contour_total_area, r.contour_detected, r.heatmap_energy,
                        r.heatmap_detected, r.label_detected, r.verdict, r.channels_fired,
                        r.warnings);
    };
    if (key(*this) != key(o)) return false;
    if (label_change.has_value() != o.label_change.has_value()) return false;
    if (label_change &&
        (label_change->original_label != o.label_change->original_label ||
         label_change->patched_label != o.label_change->patched_label ||
         label_change->changed != o.label_change->changed))
        return false;
    const Thresholds &a = thresholds, &b = o.thresholds;
    return a.hash_threshold == b.hash_threshold && a.ssim_threshold == b.ssim_threshold &&
           a.min_contour_area == b.min_contour_area &&
           a.heatmap_energy_threshold == b.heatmap_energy_threshold &&
           a.channels_enabled == b.channels_enabled && a.use_felzenszwalb == b.use_felzenszwalb;
}

DetectionResult detect(const PixelImage& original, const PixelImage& suspect,
                       const Thresholds& thresholds, const ToyClassifier* clf) {
    if (!original.same_shape(suspect)) throw std::invalid_argument("shape mismatch");

    DetectionResult res;
    DetectionReport& rep = res.report;
    rep.thresholds = thresholds;

    auto run_channel = [&](Channel ch, auto&& body) {
        if (!thresholds.enabled(ch)) return;
        try {
            body();
        } catch (const std::exception& e) {
            rep.warnings.push_back(std::string(channel_name(ch)) + " channel failed: " + e.what());
        }
    };

    run_channel(Channel::hash, [&] {
        const HashComparison cmp = compare_all(original, suspect, thresholds.hash_threshold);
        for (int i = 0; i < 4; ++i) {
            rep.hash_original[i] = to_wire(cmp.original_hashes[i]);
            rep.hash_suspect[i] = to_wire(cmp.suspect_hashes[i]);
            rep.hash_distance[i] = cmp.distance[i];
            rep.hash_detected_per_algo[i] = cmp.detected[i];
        }
        rep.hash_detected = cmp.any_detected();
        if (rep.hash_detected) rep.channels_fired.push_back("hash");
    });

    run_channel(Channel::ssim, [&] {
        rep.ssim = pf::ssim(original, suspect).mean_ssim;
        rep.ms_ssim = pf::ms_ssim(original, suspect).score;
        rep.l2_rms = l2_distance(original, suspect);
        rep.ssim_detected = rep.ssim < thresholds.ssim_threshold;
        if (rep.ssim_detected) rep.channels_fired.push_back("ssim");
    });

    run_channel(Channel::anomaly, [&] {
        const SegmentMap seg = thresholds.use_felzenszwalb
                                   ? felzenszwalb(suspect)
                                   : slic(suspect, 100, 10.0);
        res.anomaly = anomaly_scores(original, suspect, seg);
        rep.anomaly_segments = seg.n_segments;
        rep.anomaly_flagged = static_cast<int>(res.anomaly.flagged.size());
        rep.anomaly_threshold = res.anomaly.threshold;
        rep.anomaly_note = res.anomaly.note;
        rep.anomaly_detected = rep.anomaly_flagged >= 1;
        if (rep.anomaly_detected) rep.channels_fired.push_back("anomaly");
    });

    run_channel(Channel::contour, [&] {
        res.contours = find_contours(original, suspect, thresholds.min_contour_area);
        rep.contour_count = static_cast<int>(res.contours.size());
        rep.contour_total_area = 0;
        for (int a : res.contours.areas) rep.contour_total_area += a;
        rep.contour_detected = rep.contour_total_area >= thresholds.min_contour_area;
        if (rep.contour_detected) rep.channels_fired.push_back("contour");
    });

    run_channel(Channel::heatmap, [&] {
        res.heatmap = lab_heatmap(original, suspect);
        rep.heatmap_energy = res.heatmap.energy;
        rep.heatmap_detected = rep.heatmap_energy > thresholds.heatmap_energy_threshold;
        if (rep.heatmap_detected) rep.channels_fired.push_back("heatmap");
    });

    if (clf) {
        run_channel(Channel::label, [&] {
            LabelChange lc;
            lc.original_label = classify(*clf, original).label;
            lc.patched_label = classify(*clf, suspect).label;
            lc.changed = lc.original_label != lc.patched_label;
            rep.label_change = lc;
            rep.label_detected = lc.changed;
            if (rep.label_detected) rep.channels_fired.push_back("label");
        });
    }

    rep.verdict = rep.hash_detected || rep.ssim_detected || rep.anomaly_detected ||
                  rep.contour_detected || rep.heatmap_detected || rep.label_detected;
    return res;
}

namespace {

ordered_json thresholds_json(const Thresholds& t) {
    ordered_json j;
    j["hash_threshold"] = t.hash_threshold;
    j["ssim_threshold"] = t.ssim_threshold;
    j["min_contour_area"] = t.min_contour_area;
    j["heatmap_energy_threshold"] = t.heatmap_energy_threshold;
    j["channels_enabled"] = ordered_json::array();
    for (Channel c : t.channels_enabled) j["channels_enabled"].push_back(channel_name(c));
    j["segmentation"] = t.use_felzenszwalb ? "felzenszwalb" : "slic";
    return j;
}

Thresholds thresholds_from_json(const ordered_json& j) {
    Thresholds t;
    t.hash_threshold = j.at("hash_threshold").get<int>();
    t.ssim_threshold = j.at("ssim_threshold").get<double>();
    t.min_contour_area = j.at("min_contour_area").get<int>();
    t.heatmap_energy_threshold = j.at("heatmap_energy_threshold").get<double>();
    t.channels_enabled.clear();
    for (const auto& name : j.at("channels_enabled")) {
        const std::string s = name.get<std::string>();
        for (Channel c : {Channel::hash, Channel::ssim, Channel::anomaly, Channel::contour,
                          Channel::heatmap, Channel::label})
            if (s == channel_name(c)) t.channels_enabled.push_back(c);
    }
    t.use_felzenszwalb = j.at("segmentation").get<std::string>() == "felzenszwalb";
    return t;
}

ordered_json report_json_obj(const DetectionReport& r) {
    static const char* kAlgoNames[4] = {"ahash", "phash", "dhash", "whash"};
    ordered_json j;
    j["verdict"] = r.verdict;
    j["channels_fired"] = r.channels_fired;

    ordered_json hash;
    for (int i = 0; i < 4; ++i) {
        ordered_json e;
        e["original"] = r.hash_original[i];
        e["suspect"] = r.hash_suspect[i];
        e["distance"] = r.hash_distance[i];
        e["detected"] = r.hash_detected_per_algo[i];
        hash[kAlgoNames[i]] = e;
    }
    hash["detected"] = r.hash_detected;
    j["hash"] = hash;

    j["similarity"] = {{"ssim", r.ssim},
                       {"ms_ssim", r.ms_ssim},
                       {"l2_rms", r.l2_rms},
                       {"lpips", nullptr},
                       {"lpips_note", "unsupported"},
                       {"detected", r.ssim_detected}};
    j["anomaly"] = {{"segments", r.anomaly_segments},
                    {"flagged", r.anomaly_flagged},
                    {"threshold", r.anomaly_threshold},
                    {"note", r.anomaly_note},
                    {"detected", r.anomaly_detected}};
    j["contour"] = {{"count", r.contour_count},
                    {"total_area", r.contour_total_area},
                    {"detected", r.contour_detected}};
    j["heatmap"] = {{"energy", r.heatmap_energy}, {"detected", r.heatmap_detected}};
    if (r.label_change) {
        j["label_change"] = {{"original", r.label_change->original_label},
                             {"patched", r.label_change->patched_label},
                             {"changed", r.label_change->changed},
                             {"detected", r.label_detected}};
    } else {
        j["label_change"] = nullptr;
    }
    j["warnings"] = r.warnings;
    j["thresholds"] = thresholds_json(r.thresholds);
    return j;
}

DetectionReport report_from_json_obj(const ordered_json& j) {
    static const char* kAlgoNames[4] = {"ahash", "phash", "dhash", "whash"};
    DetectionReport r;
    r.verdict = j.at("verdict").get<bool>();
    r.channels_fired = j.at("channels_fired").get<std::vector<std::string>>();
    for (int i = 0; i < 4; ++i) {
        const auto& e = j.at("hash").at(kAlgoNames[i]);
        r.hash_original[i] = e.at("original").get<std::string>();
        r.hash_suspect[i] = e.at("suspect").get<std::string>();
        r.hash_distance[i] = e.at("distance").get<int>();
        r.hash_detected_per_algo[i] = e.at("detected").get<bool>();
    }
    r.hash_detected = j.at("hash").at("detected").get<bool>();
    const auto& sim = j.at("similarity");
    r.ssim = sim.at("ssim").get<double>();
    r.ms_ssim = sim.at("ms_ssim").get<double>();
    r.l2_rms = sim.at("l2_rms").get<double>();
    r.ssim_detected = sim.at("detected").get<bool>();
    const auto& an = j.at("anomaly");
    r.anomaly_segments = an.at("segments").get<int>();
    r.anomaly_flagged = an.at("flagged").get<int>();
    r.anomaly_threshold = an.at("threshold").get<double>();
    r.anomaly_note = an.at("note").get<std::string>();
    r.anomaly_detected = an.at("detected").get<bool>();
    const auto& co = j.at("contour");
    r.contour_count = co.at("count").get<int>();
    r.contour_total_area = co.at("total_area").get<long>();
    r.contour_detected = co.at("detected").get<bool>();
    const auto& hm = j.at("heatmap");
    r.heatmap_energy = hm.at("energy").get<double>();
    r.heatmap_detected = hm.at("detected").get<bool>();
    if (!j.at("label_change").is_null()) {
        LabelChange lc;
        const auto& lj = j.at("label_change");
        lc.original_label = lj.at("original").get<int>();
        lc.patched_label = lj.at("patched").get<int>();
        lc.changed = lj.at("changed").get<bool>();
        r.label_change = lc;
        r.label_detected = lj.at("detected").get<bool>();
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    r.thresholds = thresholds_from_json(j.at("thresholds"));
    return r;
}

}  // namespace

std::string detection_report_json(const DetectionReport& report) {
    return report_json_obj(report).dump(2) + "\n";
}

DetectionReport detection_report_from_json(const std::string& text) {
    return report_from_json_obj(ordered_json::parse(text));
}

FiveNumber five_number_summary(std::vector<double> values) {
    FiveNumber f;
    if (values.empty()) return f;
    std::sort(values.begin(), values.end());
    auto quantile = [&](double p) {
        const double h = (static_cast<double>(values.size()) - 1.0) * p;
        const std::size_t lo = static_cast<std::size_t>(h);
        const std::size_t hi = std::min(lo + 1, values.size() - 1);
        const double frac = h - static_cast<double>(lo);
        return values[lo] + frac * (values[hi] - values[lo]);
    };
    f.min = values.front();
    f.q1 = quantile(0.25);
    f.median = quantile(0.5);
    f.q3 = quantile(0.75);
    f.max = values.back();
    return f;
}

CorpusReport batch_detect(const std::string& manifest_path, const Thresholds& thresholds,
                          int threads, const ToyClassifier* clf) {
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
    const std::filesystem::path base = std::filesystem::path(manifest_path).parent_path();

    CorpusReport report;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line == "original,suspect,label") continue;  // header
        }
        CorpusRow row;
        std::istringstream ls(line);
        std::getline(ls, row.original, ',');
        std::getline(ls, row.suspect, ',');
        std::getline(ls, row.label, ',');
        if (row.original.empty() || row.suspect.empty()) {
            row.error = "malformed row: " + line;
        }
        report.rows.push_back(std::move(row));
    }

    parallel_for(static_cast<int>(report.rows.size()), threads, [&](int i) {
        CorpusRow& row = report.rows[i];
        if (!row.error.empty()) return;
        try {
            const PixelImage original = load_image((base / row.original).string());
            const PixelImage suspect = load_image((base / row.suspect).string());
            row.report = detect(original, suspect, thresholds, clf).report;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    std::vector<double> ssims;
    int detected = 0, scanned = 0;
    std::map<std::string, int> fires;
    for (const CorpusRow& row : report.rows) {
        if (!row.ok) {
            ++report.failed;
            continue;
        }
        ++scanned;
        if (row.report.verdict) ++detected;
        ssims.push_back(row.report.ssim);
        for (const std::string& c : row.report.channels_fired) ++fires[c];
    }
    if (scanned > 0)
        report.detection_rate = static_cast<double>(detected) / scanned;
    report.ssim_summary = five_number_summary(ssims);
    std::sort(ssims.begin(), ssims.end());
    report.sorted_ssim = std::move(ssims);
    for (const auto& [name, count] : fires) report.channel_fires.emplace_back(name, count);
    return report;
}

std::string corpus_report_json(const CorpusReport& report) {
    ordered_json j;
    ordered_json agg;
    agg["pair_count"] = report.rows.size();
    agg["failed"] = report.failed;
    if (report.detection_rate)
        agg["detection_rate"] = *report.detection_rate;
    else
        agg["detection_rate"] = nullptr;
    agg["ssim"] = {{"min", report.ssim_summary.min},
                   {"q1", report.ssim_summary.q1},
                   {"median", report.ssim_summary.median},
                   {"q3", report.ssim_summary.q3},
                   {"max", report.ssim_summary.max}};
    ordered_json fires;
    for (const auto& [name, count] : report.channel_fires) fires[name] = count;
    agg["channel_fires"] = fires;
    j["aggregate"] = agg;

    j["pairs"] = ordered_json::array();
    for (const CorpusRow& row : report.rows) {
        ordered_json e;
        e["original"] = row.original;
        e["suspect"] = row.suspect;
        e["label"] = row.label;
        e["status"] = row.ok ? "ok" : "failed";
        if (row.ok) {
            e["report"] = report_json_obj(row.report);
        } else {
            e["error"] = row.error;
        }
        j["pairs"].push_back(e);
    }
    return j.dump(2) + "\n";
}

std::string sorted_ssim_csv(const CorpusReport& report) {
    std::ostringstream os;
    os << "rank,ssim\n";
    os.precision(17);
    for (std::size_t i = 0; i < report.sorted_ssim.size(); ++i)
        os << (i + 1) << ',' << report.sorted_ssim[i] << '\n';
    return os.str();
}

}  // namespace pf
