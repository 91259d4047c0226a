#include "snnw/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include "snnw/image_io.hpp"

namespace snnw {

void WindowConfig::validate() const {
    if (window == 0) throw std::invalid_argument("window size must be positive");
    if (stride == 0 || stride > window) {
        throw std::invalid_argument("stride must lie in [1, " + std::to_string(window) + "], got " +
                                    std::to_string(stride));
    }
}

std::vector<std::int64_t> axis_origins(std::size_t dim, const WindowConfig& cfg) {
    cfg.validate();
    if (dim < cfg.window) {
        throw ImageTooSmallError("image dimension " + std::to_string(dim) + " is smaller than the " +
                                 std::to_string(cfg.window) + "px window; pad the image or reject it");
    }
    std::vector<std::int64_t> out;
    const std::size_t last = dim - cfg.window;
    for (std::size_t o = 0; o <= last; o += cfg.stride) out.push_back(static_cast<std::int64_t>(o));
    if (cfg.flush_edge && last % cfg.stride != 0) out.push_back(static_cast<std::int64_t>(last));
    return out;
}

std::vector<Origin> slide_windows(std::size_t width, std::size_t height, const WindowConfig& cfg) {
    const auto xs = axis_origins(width, cfg);
    const auto ys = axis_origins(height, cfg);
    std::vector<Origin> out;
    out.reserve(xs.size() * ys.size());
    for (auto y : ys)
        for (auto x : xs) out.push_back({x, y});
    return out;
}

Image pad_to_window(const Image& image, std::size_t window) {
    if (image.rank() != 3) throw ShapeError("expected an (H,W,C) image, got " + to_string(image.shape()));
    const auto H = image.dim(0), W = image.dim(1), C = image.dim(2);
    const auto H2 = std::max(H, window), W2 = std::max(W, window);
    Image out({H2, W2, C});
    for (std::size_t r = 0; r < H2; ++r)
        for (std::size_t q = 0; q < W2; ++q)
            for (std::size_t k = 0; k < C; ++k) out(r, q, k) = image(std::min(r, H - 1), std::min(q, W - 1), k);
    return out;
}

std::vector<WindowScore> score_windows(const Image& image, const PartNetworks& networks, const WindowConfig& cfg,
                                       std::size_t workers) {
    if (image.rank() != 3) throw ShapeError("expected an (H,W,C) image, got " + to_string(image.shape()));
    for (const auto& [part, net] : networks) {
        if (net.spec().input_rows != cfg.window || net.spec().input_cols != cfg.window) {
            throw std::invalid_argument("network '" + part.name() + "' input does not match the " +
                                        std::to_string(cfg.window) + "px window");
        }
    }
    const auto origins = slide_windows(image.dim(1), image.dim(0), cfg);
    std::vector<WindowScore> out(origins.size());

    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const auto& o = origins[i];
            const auto win = crop(image, static_cast<std::size_t>(o.x), static_cast<std::size_t>(o.y), cfg.window,
                                  cfg.window);
            out[i].origin = o;
            for (const auto& [part, net] : networks) out[i].p_present[part] = predict_window(net, win).p_present;
        }
    };
    workers = std::clamp<std::size_t>(workers, 1, origins.size());
    if (workers == 1) {
        run(0, origins.size());
        return out;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (origins.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const auto b = std::min(origins.size(), w * chunk), e = std::min(origins.size(), b + chunk);
        pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
    return out;
}

void EnsembleConfig::validate() {
    if (parts.empty()) throw std::invalid_argument("ensemble has no parts");
    if (std::set<PartId>(parts.begin(), parts.end()).size() != parts.size()) {
        throw std::invalid_argument("ensemble parts must be unique");
    }
    if (weights.empty()) {
        for (const auto& p : parts) weights[p] = 1.0 / static_cast<double>(parts.size());
    }
    double total = 0.0;
    for (const auto& p : parts) {
        const auto it = weights.find(p);
        if (it == weights.end()) throw std::invalid_argument("no weight for part '" + p.name() + "'");
        if (!(it->second >= 0.0)) throw std::invalid_argument("weight of '" + p.name() + "' is negative");
        total += it->second;
    }
    if (weights.size() != parts.size()) throw std::invalid_argument("weights name a part outside the ensemble");
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("weights sum to " + std::to_string(total) + ", not 1");
    if (k < 1 || k > parts.size()) {
        throw std::invalid_argument("k must lie in [1, " + std::to_string(parts.size()) + "], got " + std::to_string(k));
    }
    if (!(threshold >= 0.0 && threshold < 1.0)) throw std::invalid_argument("window threshold must lie in [0,1)");
    if (!(box_threshold > 0.0 && box_threshold < 1.0)) throw std::invalid_argument("box threshold must lie in (0,1)");
    if (fusion_threshold < 1) throw std::invalid_argument("fusion threshold must be at least 1");
}

double EnsembleConfig::weight(const PartId& part) const {
    const auto it = weights.find(part);
    return it == weights.end() ? 0.0 : it->second;
}

EnsembleConfig EnsembleConfig::defaults(std::vector<PartId> parts, std::size_t k) {
    EnsembleConfig cfg;
    cfg.parts = std::move(parts);
    cfg.k = k;
    cfg.validate();
    return cfg;
}

double Heatmap::at(const PartId& part, std::size_t row, std::size_t col) const {
    return activation.at(part)[row * xs.size() + col];
}

namespace {

double score_of(const WindowScore& s, const PartId& part) {
    const auto it = s.p_present.find(part);
    if (it == s.p_present.end()) throw std::invalid_argument("window score lacks part '" + part.name() + "'");
    return it->second;
}

}  // namespace

Heatmap accumulate_heatmap(const std::vector<WindowScore>& scores, const WindowConfig& wcfg,
                           const EnsembleConfig& ecfg) {
    if (scores.empty()) throw std::invalid_argument("no window scores");
    const auto win = static_cast<std::int64_t>(wcfg.window);
    const auto m = static_cast<std::int64_t>(ecfg.core_margin);
    if (2 * m >= win) throw std::invalid_argument("core margin leaves no window core");
    Heatmap h;
    h.window = wcfg.window;
    h.stride = wcfg.stride;
    std::set<std::int64_t> xs, ys, bx, by;
    for (const auto& s : scores) {
        xs.insert(s.origin.x);
        ys.insert(s.origin.y);
        bx.insert(s.origin.x + m);
        bx.insert(s.origin.x + win - m);
        by.insert(s.origin.y + m);
        by.insert(s.origin.y + win - m);
    }
    h.xs.assign(xs.begin(), xs.end());
    h.ys.assign(ys.begin(), ys.end());
    h.cell_x.assign(bx.begin(), bx.end());
    h.cell_y.assign(by.begin(), by.end());

    auto index_of = [](const std::vector<std::int64_t>& v, std::int64_t x) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    };
    for (const auto& part : ecfg.parts) h.activation[part].assign(h.xs.size() * h.ys.size(), 0.0);
    for (const auto& s : scores) {
        const auto cell = index_of(h.ys, s.origin.y) * h.xs.size() + index_of(h.xs, s.origin.x);
        for (const auto& part : ecfg.parts) h.activation[part][cell] = score_of(s, part);
    }

    // Every core edge is a cell boundary, so a core spans whole cells. A part
    // agrees on a cell when any core covering it is positive for it.
    const std::size_t rows = h.cell_rows(), cols = h.cell_cols();
    h.agreement.assign(rows * cols, 0);
    std::vector<std::uint8_t> hit(rows * cols);
    for (const auto& part : ecfg.parts) {
        std::fill(hit.begin(), hit.end(), 0);
        for (const auto& s : scores) {
            if (!(score_of(s, part) > ecfg.threshold)) continue;
            const auto c0 = index_of(h.cell_x, s.origin.x + m), c1 = index_of(h.cell_x, s.origin.x + win - m);
            const auto r0 = index_of(h.cell_y, s.origin.y + m), r1 = index_of(h.cell_y, s.origin.y + win - m);
            for (auto r = r0; r < r1; ++r)
                for (auto c = c0; c < c1; ++c) hit[r * cols + c] = 1;
        }
        for (std::size_t i = 0; i < hit.size(); ++i) h.agreement[i] += hit[i];
    }
    return h;
}

DetectionResult aggregate_decision(const std::vector<WindowScore>& scores, const EnsembleConfig& cfg) {
    if (scores.empty()) throw std::invalid_argument("no window scores");
    DetectionResult r;
    for (const auto& part : cfg.parts) {
        double best = 0.0;
        bool hit = false;
        for (const auto& s : scores) {
            const double p = score_of(s, part);
            best = std::max(best, p);
            hit = hit || p > cfg.threshold;
        }
        r.p_max[part] = best;
        if (hit) {
            r.parts_detected.push_back(part);
            r.confidence += cfg.weight(part);
        }
    }
    r.alert = r.parts_detected.size() >= cfg.k;
    return r;
}

std::optional<BoundingBox> extract_part_box(const Heatmap& heatmap, const PartId& part, double activation_threshold) {
    if (!(activation_threshold > 0.0 && activation_threshold < 1.0)) {
        throw std::invalid_argument("activation threshold must lie in (0,1)");
    }
    const auto it = heatmap.activation.find(part);
    if (it == heatmap.activation.end()) return std::nullopt;
    const auto win = static_cast<std::int64_t>(heatmap.window);
    std::optional<BoundingBox> box;
    for (std::size_t r = 0; r < heatmap.ys.size(); ++r) {
        for (std::size_t c = 0; c < heatmap.xs.size(); ++c) {
            if (!(it->second[r * heatmap.xs.size() + c] > activation_threshold)) continue;
            const BoundingBox w{heatmap.xs[c], heatmap.ys[r], win, win};
            box = box ? union_extent(*box, w) : w;
        }
    }
    return box;
}

std::optional<BoundingBox> fuse_boxes(const Heatmap& heatmap, const EnsembleConfig& cfg) {
    std::optional<BoundingBox> fused;
    for (std::size_t r = 0; r < heatmap.cell_rows(); ++r) {
        for (std::size_t c = 0; c < heatmap.cell_cols(); ++c) {
            if (heatmap.agreement_at(r, c) < cfg.fusion_threshold) continue;
            const auto cell = BoundingBox::from_extent(heatmap.cell_x[c], heatmap.cell_y[r], heatmap.cell_x[c + 1],
                                                       heatmap.cell_y[r + 1]);
            fused = fused ? union_extent(*fused, cell) : cell;
        }
    }
    if (fused) return fused;
    for (const auto& part : cfg.parts) {
        if (const auto b = extract_part_box(heatmap, part, cfg.box_threshold)) fused = fused ? union_extent(*fused, *b) : *b;
    }
    return fused;
}

double paper_miss_bound(double p, int m) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0,1]");
    if (m < 1) throw std::invalid_argument("m must be at least 1");
    return std::pow(1.0 - p, m);
}

double paper_accuracy_bound(double p, int m) { return 1.0 - paper_miss_bound(p, m); }

double exact_miss_probability(const std::vector<double>& p, std::size_t k) {
    for (double v : p) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("detector probabilities must lie in [0,1]");
    }
    // dist[j] = P(exactly j detectors fired so far)
    std::vector<double> dist(p.size() + 1, 0.0);
    dist[0] = 1.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        for (std::size_t j = i + 1; j-- > 0;) {
            dist[j + 1] += dist[j] * p[i];
            dist[j] *= 1.0 - p[i];
        }
    }
    double miss = 0.0;
    for (std::size_t j = 0; j < std::min(k, dist.size()); ++j) miss += dist[j];
    return miss;
}

void check_networks(const PartNetworks& networks, const EnsembleConfig& cfg, std::size_t channels) {
    for (const auto& part : cfg.parts) {
        const auto it = networks.find(part);
        if (it == networks.end()) throw std::invalid_argument("no network for part '" + part.name() + "'");
        if (it->second.part != part) {
            throw std::invalid_argument("slot '" + part.name() + "' holds a network trained for '" +
                                        it->second.part.name() + "'");
        }
        if (it->second.spec().channels != channels) {
            throw std::invalid_argument("network '" + part.name() + "' expects " +
                                        std::to_string(it->second.spec().channels) + " channels, image has " +
                                        std::to_string(channels));
        }
    }
}

DetectionResult detect(const Image& image, const PartNetworks& networks, const WindowConfig& wcfg,
                       EnsembleConfig ecfg, std::size_t workers) {
    ecfg.validate();
    wcfg.validate();
    if (image.rank() != 3) throw ShapeError("expected an (H,W,C) image, got " + to_string(image.shape()));
    check_networks(networks, ecfg, image.dim(2));
    const auto H = static_cast<std::int64_t>(image.dim(0)), W = static_cast<std::int64_t>(image.dim(1));

    // Networks outside the ensemble are not scored; copy only when there are some.
    PartNetworks subset;
    if (networks.size() != ecfg.parts.size()) {
        for (const auto& part : ecfg.parts) subset.emplace(part, networks.at(part));
    }
    const PartNetworks& used = networks.size() != ecfg.parts.size() ? subset : networks;

    const bool small = image.dim(0) < wcfg.window || image.dim(1) < wcfg.window;
    if (small && !wcfg.pad_small) {
        throw ImageTooSmallError("image " + std::to_string(W) + "x" + std::to_string(H) + " is smaller than the " +
                                 std::to_string(wcfg.window) + "px window; enable padding or reject it");
    }
    auto scores = score_windows(small ? pad_to_window(image, wcfg.window) : image, used, wcfg, workers);

    auto result = aggregate_decision(scores, ecfg);
    result.heatmap = accumulate_heatmap(scores, wcfg, ecfg);
    for (const auto& part : ecfg.parts) {
        auto b = extract_part_box(result.heatmap, part, ecfg.box_threshold);
        result.part_boxes[part] = b ? clamp_to(*b, W, H) : std::nullopt;
    }
    if (!result.parts_detected.empty()) {
        if (auto f = fuse_boxes(result.heatmap, ecfg)) result.fused_box = clamp_to(*f, W, H);
    }
    result.scores = std::move(scores);
    return result;
}

}  // namespace snnw
