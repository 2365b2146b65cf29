#include "pf/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "pf/image_io.hpp"

namespace pf {

namespace {

struct DisjointSet {
    std::vector<int> parent;
    std::vector<int> size;

    explicit DisjointSet(int n) : parent(n), size(n, 1) {
        std::iota(parent.begin(), parent.end(), 0);
    }
    int find(int a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    int merge(int a, int b) {  // returns the surviving root
        a = find(a);
        b = find(b);
        if (a == b) return a;
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
        return a;
    }
};

struct Edge {
    float weight;
    int src;
    int dst;

    bool operator<(const Edge& o) const {
        if (weight != o.weight) return weight < o.weight;
        if (src != o.src) return src < o.src;
        return dst < o.dst;
    }
};

float color_distance(const PixelImage& img, int a, int b) {
    const int c = img.channels;
    double acc = 0.0;
    for (int k = 0; k < c; ++k) {
        const double d = static_cast<double>(img.data[static_cast<std::size_t>(a) * c + k]) -
                         img.data[static_cast<std::size_t>(b) * c + k];
        acc += d * d;
    }
    return static_cast<float>(std::sqrt(acc));
}

/// Compacts arbitrary per-pixel component ids to 0..n-1 in first-appearance
/// scan order.
int compact_labels(std::vector<int>& labels) {
    std::map<int, int> remap;
    int next = 0;
    for (int& l : labels) {
        auto [it, inserted] = remap.emplace(l, next);
        if (inserted) ++next;
        l = it->second;
    }
    return next;
}

}  // namespace

SegmentMap felzenszwalb(const PixelImage& img, double k, int min_size, double sigma) {
    if (img.empty()) throw std::invalid_argument("empty image");
    if (k <= 0.0 || min_size < 1) throw std::invalid_argument("bad segmentation parameters");

    const PixelImage smooth = sigma > 0.0 ? gaussian_blur(img, sigma) : img;
    const int w = img.width, h = img.height;
    const int n = w * h;

    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(n) * 4);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const int p = y * w + x;
            // Right, down, down-right, down-left cover all 8-neighborhood
            // pairs exactly once.
            if (x + 1 < w) edges.push_back({color_distance(smooth, p, p + 1), p, p + 1});
            if (y + 1 < h) edges.push_back({color_distance(smooth, p, p + w), p, p + w});
            if (x + 1 < w && y + 1 < h)
                edges.push_back({color_distance(smooth, p, p + w + 1), p, p + w + 1});
            if (x > 0 && y + 1 < h)
                edges.push_back({color_distance(smooth, p, p + w - 1), p, p + w - 1});
        }
    std::sort(edges.begin(), edges.end());

    DisjointSet ds(n);
    std::vector<double> threshold(static_cast<std::size_t>(n), k);  // tau(C) = k/|C|, |C|=1
    for (const Edge& e : edges) {
        const int a = ds.find(e.src);
        const int b = ds.find(e.dst);
        if (a == b) continue;
        if (e.weight <= threshold[a] && e.weight <= threshold[b]) {
            const int root = ds.merge(a, b);
            threshold[root] = e.weight + k / ds.size[root];
        }
    }
    // Absorb undersized components across their cheapest boundary edges
    // (ascending order makes the first qualifying edge the cheapest).
    for (const Edge& e : edges) {
        const int a = ds.find(e.src);
        const int b = ds.find(e.dst);
        if (a != b && (ds.size[a] < min_size || ds.size[b] < min_size)) ds.merge(a, b);
    }

    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.algorithm = SegAlgorithm::felzenszwalb;
    seg.labels.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) seg.labels[i] = ds.find(i);
    seg.n_segments = compact_labels(seg.labels);
    std::ostringstream ps;
    ps << "k=" << k << ",min_size=" << min_size << ",sigma=" << sigma;
    seg.params = ps.str();
    return seg;
}

namespace {

struct SlicCenter {
    double l = 0, a = 0, b = 0, x = 0, y = 0;
};

double lab_gradient(const LabImage& lab, int x, int y) {
    const int xm = std::max(x - 1, 0), xp = std::min(x + 1, lab.width - 1);
    const int ym = std::max(y - 1, 0), yp = std::min(y + 1, lab.height - 1);
    double g = 0.0;
    for (int c = 0; c < 3; ++c) {
        const double dx = static_cast<double>(lab.at(xp, y, c)) - lab.at(xm, y, c);
        const double dy = static_cast<double>(lab.at(x, yp, c)) - lab.at(x, ym, c);
        g += dx * dx + dy * dy;
    }
    return g;
}

/// Fresh 4-connected components of a label map; returns component ids and
/// sizes. Component ids follow first-pixel scan order.
int flood_components(const std::vector<int>& labels, int w, int h, std::vector<int>& comp,
                     std::vector<int>& comp_size) {
    comp.assign(labels.size(), -1);
    comp_size.clear();
    std::vector<int> stack;
    int next = 0;
    for (int start = 0; start < static_cast<int>(labels.size()); ++start) {
        if (comp[start] != -1) continue;
        const int lbl = labels[start];
        int count = 0;
        stack.push_back(start);
        comp[start] = next;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            ++count;
            const int px = p % w, py = p / w;
            const int nb[4] = {px > 0 ? p - 1 : -1, px + 1 < w ? p + 1 : -1,
                               py > 0 ? p - w : -1, py + 1 < h ? p + w : -1};
            for (int q : nb)
                if (q >= 0 && comp[q] == -1 && labels[q] == lbl) {
                    comp[q] = next;
                    stack.push_back(q);
                }
        }
        comp_size.push_back(count);
        ++next;
    }
    return next;
}

}  // namespace

SegmentMap slic(const PixelImage& img, int n_segments, double compactness, int iterations) {
    if (img.empty()) throw std::invalid_argument("empty image");
    if (n_segments < 1 || compactness <= 0.0) throw std::invalid_argument("bad SLIC parameters");
    const int w = img.width, h = img.height;
    const int n_px = w * h;
    if (n_segments > n_px) throw std::invalid_argument("over-segmentation request");

    PixelImage rgb = img;
    if (rgb.channels == 1) {
        rgb = PixelImage(w, h, 3);
        for (int i = 0; i < n_px; ++i)
            for (int c = 0; c < 3; ++c) rgb.data[static_cast<std::size_t>(i) * 3 + c] = img.data[i];
    }
    const LabImage lab = to_lab(rgb);
    const double S = std::sqrt(static_cast<double>(n_px) / n_segments);
    const double m = compactness;

    // Grid seeding at spacing S, each center nudged to the lowest-gradient
    // spot in its 3x3 neighborhood.
    std::vector<SlicCenter> centers;
    for (double cy = S / 2.0; cy < h; cy += S)
        for (double cx = S / 2.0; cx < w; cx += S) {
            int ix = std::min(static_cast<int>(cx), w - 1);
            int iy = std::min(static_cast<int>(cy), h - 1);
            double best = std::numeric_limits<double>::infinity();
            int bx = ix, by = iy;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int qx = std::clamp(ix + dx, 0, w - 1);
                    const int qy = std::clamp(iy + dy, 0, h - 1);
                    const double g = lab_gradient(lab, qx, qy);
                    if (g < best) {
                        best = g;
                        bx = qx;
                        by = qy;
                    }
                }
            SlicCenter c;
            c.l = lab.at(bx, by, 0);
            c.a = lab.at(bx, by, 1);
            c.b = lab.at(bx, by, 2);
            c.x = bx;
            c.y = by;
            centers.push_back(c);
        }

    std::vector<int> labels(static_cast<std::size_t>(n_px), -1);
    std::vector<double> best_d(static_cast<std::size_t>(n_px));
    const double m2_over_s2 = (m * m) / (S * S);

    for (int iter = 0; iter < iterations; ++iter) {
        std::fill(labels.begin(), labels.end(), -1);
        std::fill(best_d.begin(), best_d.end(), std::numeric_limits<double>::infinity());
        for (int ci = 0; ci < static_cast<int>(centers.size()); ++ci) {
            const SlicCenter& c = centers[ci];
            const int x0 = std::max(0, static_cast<int>(std::floor(c.x - 2 * S)));
            const int x1 = std::min(w - 1, static_cast<int>(std::ceil(c.x + 2 * S)));
            const int y0 = std::max(0, static_cast<int>(std::floor(c.y - 2 * S)));
            const int y1 = std::min(h - 1, static_cast<int>(std::ceil(c.y + 2 * S)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dl = lab.at(x, y, 0) - c.l;
                    const double da = lab.at(x, y, 1) - c.a;
                    const double db = lab.at(x, y, 2) - c.b;
                    const double dx = x - c.x;
                    const double dy = y - c.y;
                    // D^2 = d_lab^2 + (d_xy/S)^2 m^2; sqrt omitted (monotone)
                    const double d =
                        dl * dl + da * da + db * db + (dx * dx + dy * dy) * m2_over_s2;
                    const std::size_t p = static_cast<std::size_t>(y) * w + x;
                    if (d < best_d[p]) {
                        best_d[p] = d;
                        labels[p] = ci;
                    }
                }
        }
        // A pixel outside every 2S window (degenerate geometry) falls back to
        // a brute-force nearest-center scan.
        for (int p = 0; p < n_px; ++p) {
            if (labels[p] != -1) continue;
            const int x = p % w, y = p / w;
            double best = std::numeric_limits<double>::infinity();
            for (int ci = 0; ci < static_cast<int>(centers.size()); ++ci) {
                const SlicCenter& c = centers[ci];
                const double dl = lab.at(x, y, 0) - c.l;
                const double da = lab.at(x, y, 1) - c.a;
                const double db = lab.at(x, y, 2) - c.b;
                const double dx = x - c.x;
                const double dy = y - c.y;
                const double d = dl * dl + da * da + db * db + (dx * dx + dy * dy) * m2_over_s2;
                if (d < best) {
                    best = d;
                    labels[p] = ci;
                }
            }
        }
        std::vector<SlicCenter> acc(centers.size());
        std::vector<int> count(centers.size(), 0);
        for (int p = 0; p < n_px; ++p) {
            const int ci = labels[p];
            const int x = p % w, y = p / w;
            acc[ci].l += lab.at(x, y, 0);
            acc[ci].a += lab.at(x, y, 1);
            acc[ci].b += lab.at(x, y, 2);
            acc[ci].x += x;
            acc[ci].y += y;
            ++count[ci];
        }
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            if (count[ci] == 0) continue;  // empty cluster keeps its seat
            centers[ci].l = acc[ci].l / count[ci];
            centers[ci].a = acc[ci].a / count[ci];
            centers[ci].b = acc[ci].b / count[ci];
            centers[ci].x = acc[ci].x / count[ci];
            centers[ci].y = acc[ci].y / count[ci];
        }
    }

    // Connectivity enforcement: every 4-connected component becomes its own
    // segment, then fragments below S^2/4 are absorbed into the neighboring
    // component they share the longest boundary with.
    std::vector<int> comp, comp_size;
    int n_comp = flood_components(labels, w, h, comp, comp_size);
    const int min_fragment = std::max(1, static_cast<int>(S * S / 4.0));
    for (;;) {
        // Smallest undersized component first; ties by component id.
        int victim = -1;
        for (int c = 0; c < n_comp; ++c)
            if (comp_size[c] > 0 && comp_size[c] < min_fragment &&
                (victim == -1 || comp_size[c] < comp_size[victim]))
                victim = c;
        if (victim == -1 || n_comp <= 1) break;

        std::map<int, int> boundary;  // neighbor component -> shared edge count
        for (int p = 0; p < n_px; ++p) {
            if (comp[p] != victim) continue;
            const int x = p % w, y = p / w;
            const int nb[4] = {x > 0 ? p - 1 : -1, x + 1 < w ? p + 1 : -1,
                               y > 0 ? p - w : -1, y + 1 < h ? p + w : -1};
            for (int q : nb)
                if (q >= 0 && comp[q] != victim) ++boundary[comp[q]];
        }
        if (boundary.empty()) break;  // victim is the whole image
        int target = boundary.begin()->first;
        for (const auto& [nb_comp, edge_count] : boundary)
            if (edge_count > boundary[target]) target = nb_comp;
        for (int p = 0; p < n_px; ++p)
            if (comp[p] == victim) comp[p] = target;
        comp_size[target] += comp_size[victim];
        comp_size[victim] = 0;
    }

    SegmentMap seg;
    seg.width = w;
    seg.height = h;
    seg.algorithm = SegAlgorithm::slic;
    seg.labels = std::move(comp);
    seg.n_segments = compact_labels(seg.labels);
    std::ostringstream ps;
    ps << "n_segments=" << n_segments << ",compactness=" << compactness
       << ",iterations=" << iterations;
    seg.params = ps.str();
    return seg;
}

AnomalyResult anomaly_scores(const PixelImage& original, const PixelImage& suspect,
                             const SegmentMap& seg) {
    if (!original.same_shape(suspect)) throw std::invalid_argument("shape mismatch");
    if (original.width != seg.width || original.height != seg.height)
        throw std::invalid_argument("segment map shape mismatch");

    const PixelImage ga = to_grayscale(original);
    const PixelImage gb = to_grayscale(suspect);

    AnomalyResult res;
    res.scores.assign(static_cast<std::size_t>(seg.n_segments), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(seg.n_segments), 0);
    for (std::size_t i = 0; i < ga.data.size(); ++i) {
        const int lbl = seg.labels[i];
        res.scores[lbl] += std::abs(static_cast<double>(ga.data[i]) - gb.data[i]);
        ++counts[lbl];
    }
    for (int k = 0; k < seg.n_segments; ++k) res.scores[k] /= counts[k];

    res.flagged_mask = PixelImage(seg.width, seg.height, 1);
    if (seg.n_segments < 2) {
        res.note = "degenerate segmentation";
        res.mean_score = seg.n_segments == 1 ? res.scores[0] : 0.0;
        return res;
    }

    double mean = 0.0;
    for (double s : res.scores) mean += s;
    mean /= res.scores.size();
    double var = 0.0;
    for (double s : res.scores) var += (s - mean) * (s - mean);
    var /= res.scores.size();  // population variance
    res.mean_score = mean;
    res.std_score = std::sqrt(var);
    res.threshold = mean + 2.0 * res.std_score;

    for (int k = 0; k < seg.n_segments; ++k)
        if (res.scores[k] > res.threshold) res.flagged.push_back(k);
    for (std::size_t i = 0; i < res.flagged_mask.data.size(); ++i)
        if (std::binary_search(res.flagged.begin(), res.flagged.end(), seg.labels[i]))
            res.flagged_mask.data[i] = 1.0f;
    return res;
}

void save_segment_map(const std::string& path, const SegmentMap& seg) {
    std::vector<uint16_t> raw(seg.labels.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (seg.labels[i] > 0xFFFF) throw std::runtime_error("label overflow for 16-bit PGM");
        raw[i] = static_cast<uint16_t>(seg.labels[i]);
    }
    save_pgm16(path + ".pgm", raw, seg.width, seg.height);
    std::string sidecar = path + ".json";
    std::string algo = seg.algorithm == SegAlgorithm::slic ? "slic" : "felzenszwalb";
    std::string body = "{\"algorithm\":\"" + algo + "\",\"params\":\"" + seg.params +
                       "\",\"n_segments\":" + std::to_string(seg.n_segments) + "}\n";
    std::ofstream out(sidecar, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write: " + sidecar);
    out << body;
}

}  // namespace pf
